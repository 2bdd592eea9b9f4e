//! Resonance lineshapes and their fitting, plus the heterodyne pipeline that turns a
//! sideband spectrum into a photon flux and a conversion efficiency.

use std::f64::consts::{LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::numerics::{levenberg_marquardt, LsqOptions, LsqProblem, LsqSolution};
use crate::quantities::{photon_flux, CouplingTopology, C_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    OpticalReflection,
    MicrowaveS21,
    HeterodyneRf,
}

/// Power (or power spectral density, W/Hz) on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequency: Vec<f64>,
    pub psd: Vec<f64>,
    pub rbw: f64,
    pub kind: SpectrumKind,
}

impl Spectrum {
    pub fn new(frequency: Vec<f64>, psd: Vec<f64>, rbw: f64, kind: SpectrumKind) -> Result<Self> {
        let s = Spectrum { frequency, psd, rbw, kind };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequency.len() != self.psd.len() {
            return Err(Error::invalid("psd", format!("{} values for {} frequencies", self.psd.len(), self.frequency.len())));
        }
        if self.frequency.len() < 2 {
            return Err(Error::invalid("frequency", "needs at least two points"));
        }
        check_grid(&self.frequency)?;
        if let Some(i) = self.psd.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid(format!("psd[{i}]"), format!("must be finite and >= 0, got {}", self.psd[i])));
        }
        require_positive("rbw", self.rbw)?;
        Ok(())
    }

    fn span(&self) -> f64 {
        self.frequency[self.frequency.len() - 1] - self.frequency[0]
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(i) = grid.iter().position(|f| !f.is_finite()) {
        return Err(Error::invalid(format!("frequency[{i}]"), "must be finite"));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("frequency[{}]", i + 1), "grid must be strictly increasing"));
    }
    Ok(())
}

/// Uniform grid of `n` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Multiplies each value by (1 + rel·N(0,1)), clamping at zero.
pub fn multiplicative_noise(values: &[f64], rel: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    values.iter().map(|v| (v * (1.0 + rel * normal.sample(&mut rng))).max(0.0)).collect()
}

/// Adds N(0, sigma²) to each value, clamping at zero.
pub fn additive_noise(values: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    values.iter().map(|v| (v + sigma * normal.sample(&mut rng)).max(0.0)).collect()
}

// ---------------------------------------------------------------------------
// Fano–Lorentzian lineshape

/// (A + s·(f − f₀))·|e^{iφ} − κ_e/(i(f − f₀) + κ_tot/2)|², with rates in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanoLorentzian {
    pub f0: f64,
    pub kappa_i: f64,
    pub kappa_e: f64,
    pub fano_phase: f64,
    pub amplitude: f64,
    /// Background slope, per Hz.
    pub slope: f64,
    pub topology: CouplingTopology,
}

impl FanoLorentzian {
    pub fn kappa_total(&self) -> f64 {
        self.kappa_i + self.topology.port_count() * self.kappa_e
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("kappa_i", self.kappa_i)?;
        require_positive("kappa_e", self.kappa_e)?;
        require_positive("amplitude", self.amplitude)?;
        if !(self.f0.is_finite() && self.fano_phase.is_finite() && self.slope.is_finite()) {
            return Err(Error::invalid("f0", "f0, fano_phase and slope must be finite"));
        }
        Ok(())
    }

    /// Complex reflection factor without the background.
    pub fn response(&self, f: f64) -> Complex64 {
        let z = Complex64::new(self.kappa_total() / 2.0, f - self.f0);
        Complex64::from_polar(1.0, self.fano_phase) - self.kappa_e / z
    }

    pub fn background(&self, f: f64) -> f64 {
        self.amplitude + self.slope * (f - self.f0)
    }

    pub fn power(&self, f: f64) -> f64 {
        self.background(f) * self.response(f).norm_sqr()
    }
}

/// Evaluates the lineshape on `grid`.
pub fn eval_lineshape(m: &FanoLorentzian, grid: &[f64], kind: SpectrumKind) -> Result<Spectrum> {
    m.validate()?;
    check_grid(grid)?;
    let psd = grid.iter().map(|&f| m.power(f).max(0.0)).collect();
    let rbw = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    Spectrum::new(grid.to_vec(), psd, rbw, kind)
}

/// Which root of the coupling ambiguity the initial guess starts from. A single-sided
/// symmetric dip cannot tell κ_i from κ_e.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingHint {
    #[default]
    OverCoupled,
    UnderCoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPolicy {
    pub topology: CouplingTopology,
    pub coupling: CouplingHint,
}

impl Default for FitPolicy {
    fn default() -> Self {
        FitPolicy { topology: CouplingTopology::SingleSided, coupling: CouplingHint::OverCoupled }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineshapeErrors {
    pub f0: f64,
    pub kappa_i: f64,
    pub kappa_e: f64,
    pub fano_phase: f64,
    pub amplitude: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineshapeFit {
    pub model: FanoLorentzian,
    pub stderr: LineshapeErrors,
    /// √Σr² of the residuals normalized by the mean data level.
    pub residual_norm: f64,
    pub iterations: usize,
}

const MIN_FIT_POINTS: usize = 20;

/// Normalized frequency u = (f − centre)/span keeps every fit parameter order one.
struct Normalized {
    u: Vec<f64>,
    y: Vec<f64>,
    centre: f64,
    span: f64,
    level: f64,
}

impl Normalized {
    fn new(s: &Spectrum) -> Result<Self> {
        s.validate()?;
        if s.frequency.len() < MIN_FIT_POINTS {
            return Err(Error::Degenerate(format!("{} points; at least {MIN_FIT_POINTS} are needed", s.frequency.len())));
        }
        let span = s.span();
        let centre = 0.5 * (s.frequency[0] + s.frequency[s.frequency.len() - 1]);
        let level = s.psd.iter().sum::<f64>() / s.psd.len() as f64;
        if level <= 0.0 {
            return Err(Error::Degenerate("spectrum is identically zero".into()));
        }
        Ok(Normalized {
            u: s.frequency.iter().map(|f| (f - centre) / span).collect(),
            y: s.psd.iter().map(|p| p / level).collect(),
            centre,
            span,
            level,
        })
    }

    /// Straight line through the outer tenth on each side.
    fn edge_line(&self) -> (f64, f64) {
        let k = (self.u.len() / 10).max(2);
        let idx: Vec<usize> = (0..k).chain(self.u.len() - k..self.u.len()).collect();
        let xs: Vec<f64> = idx.iter().map(|&i| self.u[i]).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| self.y[i]).collect();
        let fit = linear_regression(&xs, &ys).expect("edge points are distinct");
        (fit.intercept, fit.slope)
    }
}

/// Dip location, FWHM and fractional depth relative to the edge background, in normalized units.
fn dip_estimate(n: &Normalized, a: f64, s: f64) -> (f64, f64, f64) {
    let rel: Vec<f64> = n.u.iter().zip(&n.y).map(|(u, y)| y / (a + s * u).max(1e-300)).collect();
    let imin = (0..rel.len()).min_by(|&i, &j| rel[i].total_cmp(&rel[j])).expect("non-empty");
    let depth = rel[imin].clamp(0.0, 1.0);
    let half = 0.5 * (1.0 + depth);
    let mut lo = imin;
    while lo > 0 && rel[lo] < half {
        lo -= 1;
    }
    let mut hi = imin;
    while hi + 1 < rel.len() && rel[hi] < half {
        hi += 1;
    }
    let du = n.u[1] - n.u[0];
    let width = (n.u[hi] - n.u[lo]).max(2.0 * du);
    (n.u[imin], width, depth)
}

// Parameter order: u0, ki, ke, φ, A, s.
fn fano_value(p: &[f64], u: f64, ports: f64) -> f64 {
    let z = Complex64::new((p[1] + ports * p[2]) / 2.0, u - p[0]);
    let r = Complex64::from_polar(1.0, p[3]) - p[2] / z;
    (p[4] + p[5] * (u - p[0])) * r.norm_sqr()
}

fn fano_jacobian_row(p: &[f64], u: f64, ports: f64, row: &mut [f64]) {
    let i = Complex64::i();
    let z = Complex64::new((p[1] + ports * p[2]) / 2.0, u - p[0]);
    let e = Complex64::from_polar(1.0, p[3]);
    let r = e - p[2] / z;
    let z2 = z * z;
    let b = p[4] + p[5] * (u - p[0]);
    let mag = r.norm_sqr();
    let d = |dr: Complex64| 2.0 * b * (r.conj() * dr).re;
    row[0] = d(-i * p[2] / z2) - p[5] * mag;
    row[1] = d(Complex64::new(p[2] / 2.0, 0.0) / z2);
    row[2] = d(-1.0 / z + ports * p[2] / (2.0 * z2));
    row[3] = d(i * e);
    row[4] = mag;
    row[5] = (u - p[0]) * mag;
}

/// Bounded least-squares fit of the Fano–Lorentzian with an analytic Jacobian.
pub fn fit_lineshape(s: &Spectrum, policy: &FitPolicy) -> Result<LineshapeFit> {
    let n = Normalized::new(s)?;
    let ports = policy.topology.port_count();
    let (a0, s0) = n.edge_line();
    let (u0, width, depth) = dip_estimate(&n, a0, s0);
    if 3.0 * width > 1.0 + 1e-12 {
        return Err(Error::Degenerate(format!(
            "the grid spans {:.2} linewidths; at least 3 are needed",
            1.0 / width
        )));
    }
    let r0 = depth.sqrt();
    let (ki, ke) = match policy.topology {
        CouplingTopology::SingleSided => match policy.coupling {
            CouplingHint::OverCoupled => (width * (1.0 - r0) / 2.0, width * (1.0 + r0) / 2.0),
            CouplingHint::UnderCoupled => (width * (1.0 + r0) / 2.0, width * (1.0 - r0) / 2.0),
        },
        CouplingTopology::TwoSided => (width * r0, width * (1.0 - r0) / 2.0),
    };
    let floor = 1e-6 * width;
    let x_init = [u0, ki.max(floor), ke.max(floor), 0.0, a0.max(1e-6), s0];

    let residuals = |p: &[f64], r: &mut [f64]| {
        for k in 0..n.u.len() {
            r[k] = fano_value(p, n.u[k], ports) - n.y[k];
        }
    };
    let jacobian = |p: &[f64], j: &mut DMatrix<f64>| {
        let mut row = [0.0; 6];
        for k in 0..n.u.len() {
            fano_jacobian_row(p, n.u[k], ports, &mut row);
            for c in 0..6 {
                j[(k, c)] = row[c];
            }
        }
    };
    let umin = n.u[0];
    let umax = n.u[n.u.len() - 1];
    let problem = LsqProblem {
        m: n.u.len(),
        residuals: &residuals,
        jacobian: Some(&jacobian),
        lower: vec![umin, floor * 1e-3, floor * 1e-3, -PI, 1e-9, -1e3],
        upper: vec![umax, 10.0, 10.0, PI, 1e6, 1e3],
        scale: vec![width, width, width, 1.0, 1.0, 1.0],
    };
    let mut best: Option<LsqSolution> = None;
    for phase in [0.0, 0.4, -0.4] {
        let mut x0 = x_init;
        x0[3] = phase;
        let sol = levenberg_marquardt(&problem, &x0, LsqOptions::default())?;
        if best.as_ref().is_none_or(|b| sol.residual_norm < b.residual_norm) {
            best = Some(sol);
        }
    }
    let mut sol = best.expect("at least one start");
    if let Some(mirror) = coupling_mirror(&sol.params, ports) {
        let over = sol.params[2] * sol.params[3].cos() > 0.5 * (sol.params[1] + ports * sol.params[2]);
        if over != (policy.coupling == CouplingHint::OverCoupled) {
            sol = levenberg_marquardt(&problem, &mirror, LsqOptions::default())?;
        }
    }
    check_solution(&sol, &["f0", "kappa_i", "kappa_e"])?;
    let p = &sol.params;
    let model = FanoLorentzian {
        f0: n.centre + p[0] * n.span,
        kappa_i: p[1] * n.span,
        kappa_e: p[2] * n.span,
        fano_phase: p[3],
        amplitude: p[4] * n.level,
        slope: p[5] * n.level / n.span,
        topology: policy.topology,
    };
    let stderr = LineshapeErrors {
        f0: sol.stderr(0) * n.span,
        kappa_i: sol.stderr(1) * n.span,
        kappa_e: sol.stderr(2) * n.span,
        fano_phase: sol.stderr(3),
        amplitude: sol.stderr(4) * n.level,
        slope: sol.stderr(5) * n.level / n.span,
    };
    Ok(LineshapeFit { model, stderr, residual_norm: sol.residual_norm, iterations: sol.iterations })
}

/// The other (κ_i, κ_e, φ) giving the same |r|²: with z = iδ + κ_tot/2 the numerator
/// |iδ + κ_tot/2 − κ_e e^{−iφ}|² fixes κ_e sin φ and |κ_tot/2 − κ_e cos φ|, so
/// κ_e cos φ → κ_tot − κ_e cos φ is invisible. None if the mirror needs κ_i ≤ 0.
fn coupling_mirror(p: &[f64], ports: f64) -> Option<[f64; 6]> {
    let kt = p[1] + ports * p[2];
    let b = p[2] * p[3].sin();
    let c = kt - p[2] * p[3].cos();
    let ke = b.hypot(c);
    let ki = kt - ports * ke;
    (ki > 0.0 && ke > 0.0).then(|| [p[0], ki, ke, b.atan2(c), p[4], p[5]])
}

/// Rejects non-converged fits and fits whose named leading parameters sit on a bound.
fn check_solution(sol: &LsqSolution, names: &[&str]) -> Result<()> {
    if !sol.converged {
        return Err(Error::FitQuality { reason: format!("no convergence after {} iterations", sol.iterations), residual_norm: sol.residual_norm });
    }
    for (i, name) in names.iter().enumerate() {
        if sol.at_bound[i] {
            return Err(Error::FitQuality { reason: format!("{name} ended at its bound"), residual_norm: sol.residual_norm });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Stroboscopic splitting

/// Time average of the lineshape toggled between f₀ ± splitting/2 by a square-wave drive.
pub fn split_lineshape(m: &FanoLorentzian, splitting: f64, grid: &[f64], kind: SpectrumKind) -> Result<Spectrum> {
    require_non_negative("splitting", splitting)?;
    m.validate()?;
    check_grid(grid)?;
    let lo = FanoLorentzian { f0: m.f0 - splitting / 2.0, slope: 0.0, ..*m };
    let hi = FanoLorentzian { f0: m.f0 + splitting / 2.0, slope: 0.0, ..*m };
    let psd = grid
        .iter()
        .map(|&f| (m.background(f) * 0.5 * (lo.response(f).norm_sqr() + hi.response(f).norm_sqr())).max(0.0))
        .collect();
    let rbw = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    Spectrum::new(grid.to_vec(), psd, rbw, kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitFit {
    pub center: f64,
    pub splitting: f64,
    pub splitting_stderr: f64,
    pub kappa_i: f64,
    pub kappa_e: f64,
    pub residual_norm: f64,
}

/// Joint fit of two equal-width dips sharing one background; returns their separation.
pub fn fit_split_lineshape(s: &Spectrum, policy: &FitPolicy) -> Result<SplitFit> {
    let n = Normalized::new(s)?;
    let ports = policy.topology.port_count();
    let (a0, s0) = n.edge_line();
    let (u_dip, width, depth) = dip_estimate(&n, a0, s0);
    // Parameter order: uc, d, ki, ke, φ, A, s.
    let model = |p: &[f64], u: f64| {
        let q_lo = [p[0] - p[1] / 2.0, p[2], p[3], p[4], 1.0, 0.0];
        let q_hi = [p[0] + p[1] / 2.0, p[2], p[3], p[4], 1.0, 0.0];
        (p[5] + p[6] * (u - p[0])) * 0.5 * (fano_value(&q_lo, u, ports) + fano_value(&q_hi, u, ports))
    };
    let residuals = |p: &[f64], r: &mut [f64]| {
        for k in 0..n.u.len() {
            r[k] = model(p, n.u[k]) - n.y[k];
        }
    };
    let umin = n.u[0];
    let umax = n.u[n.u.len() - 1];
    let problem = LsqProblem {
        m: n.u.len(),
        residuals: &residuals,
        jacobian: None,
        lower: vec![umin, 0.0, 1e-9, 1e-9, -PI, 1e-9, -1e3],
        upper: vec![umax, umax - umin, 10.0, 10.0, PI, 1e6, 1e3],
        scale: vec![width, width, width, width, 1.0, 1.0, 1.0],
    };
    let mut best: Option<LsqSolution> = None;
    for frac in [0.2, 0.5, 0.8] {
        let d0 = frac * width;
        let kt = (width - d0).max(0.05 * width);
        let r0 = depth.sqrt();
        let (ki, ke) = match (policy.topology, policy.coupling) {
            (CouplingTopology::TwoSided, _) => (kt * r0, kt * (1.0 - r0) / 2.0),
            (_, CouplingHint::OverCoupled) => (kt * (1.0 - r0) / 2.0, kt * (1.0 + r0) / 2.0),
            (_, CouplingHint::UnderCoupled) => (kt * (1.0 + r0) / 2.0, kt * (1.0 - r0) / 2.0),
        };
        let x0 = [u_dip, d0, ki.max(1e-3 * kt), ke.max(1e-3 * kt), 0.0, a0.max(1e-6), s0];
        let sol = levenberg_marquardt(&problem, &x0, LsqOptions::default())?;
        if best.as_ref().is_none_or(|b| sol.residual_norm < b.residual_norm) {
            best = Some(sol);
        }
    }
    let sol = best.expect("at least one start");
    check_solution(&sol, &["center"])?;
    let p = &sol.params;
    Ok(SplitFit {
        center: n.centre + p[0] * n.span,
        splitting: p[1] * n.span,
        splitting_stderr: sol.stderr(1) * n.span,
        kappa_i: p[2] * n.span,
        kappa_e: p[3] * n.span,
        residual_norm: sol.residual_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

/// Ordinary least-squares line.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Degenerate("a line needs at least two (x, y) pairs".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all x values coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = if x.len() > 2 { ssr / (n - 2.0) } else { 0.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        intercept_stderr: (s2 * (1.0 / n + mx * mx / sxx)).sqrt(),
    })
}

/// Wavelength tuning rate, m/V, from resonance splittings (Hz) measured at drive amplitudes `vpp` (V).
pub fn tuning_from_splittings(vpp: &[f64], splittings_hz: &[f64], wavelength: f64) -> Result<LinearFit> {
    require_positive("wavelength", wavelength)?;
    let f = linear_regression(vpp, splittings_hz)?;
    let k = wavelength * wavelength / C_LIGHT;
    Ok(LinearFit { slope: f.slope * k, intercept: f.intercept * k, slope_stderr: f.slope_stderr * k, intercept_stderr: f.intercept_stderr * k })
}

// ---------------------------------------------------------------------------
// Lorentzian peak

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakFit {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub center_stderr: f64,
    pub fwhm_stderr: f64,
    pub residual_norm: f64,
}

/// Fits y = A/(1 + (2(x − x₀)/w)²) + c.
pub fn fit_lorentzian_peak(x: &[f64], y: &[f64]) -> Result<PeakFit> {
    if x.len() != y.len() || x.len() < 5 {
        return Err(Error::Degenerate("a peak fit needs at least five points".into()));
    }
    check_grid(x)?;
    let span = x[x.len() - 1] - x[0];
    let centre = 0.5 * (x[0] + x[x.len() - 1]);
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = ymax.abs().max(ymin.abs());
    if !(scale > 0.0) || ymax - ymin <= 1e-12 * scale {
        return Err(Error::Degenerate("flat data has no peak".into()));
    }
    let u: Vec<f64> = x.iter().map(|v| (v - centre) / span).collect();
    let v: Vec<f64> = y.iter().map(|w| w / scale).collect();
    let imax = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).expect("non-empty");
    let base = ymin / scale;
    let half = 0.5 * (v[imax] + base);
    let above = u.iter().zip(&v).filter(|(_, w)| **w >= half).count();
    let w0 = (above as f64 * (u[1] - u[0])).max(u[1] - u[0]);
    let model = |p: &[f64], t: f64| p[2] / (1.0 + (2.0 * (t - p[0]) / p[1]).powi(2)) + p[3];
    let residuals = |p: &[f64], r: &mut [f64]| {
        for k in 0..u.len() {
            r[k] = model(p, u[k]) - v[k];
        }
    };
    let problem = LsqProblem {
        m: u.len(),
        residuals: &residuals,
        jacobian: None,
        lower: vec![u[0], 1e-9, 0.0, -1e3],
        upper: vec![u[u.len() - 1], 100.0, 1e6, 1e3],
        scale: vec![w0, w0, 1.0, 1.0],
    };
    let sol = levenberg_marquardt(&problem, &[u[imax], w0, v[imax] - base, base], LsqOptions::default())?;
    check_solution(&sol, &["center", "fwhm"])?;
    let p = &sol.params;
    Ok(PeakFit {
        center: centre + p[0] * span,
        fwhm: p[1] * span,
        amplitude: p[2] * scale,
        offset: p[3] * scale,
        center_stderr: sol.stderr(0) * span,
        fwhm_stderr: sol.stderr(1) * span,
        residual_norm: sol.residual_norm,
    })
}

// ---------------------------------------------------------------------------
// Heterodyne synthesis and calibration

/// A sideband beat note at `frequency` carrying `flux` photons/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidebandLine {
    pub frequency: f64,
    pub flux: f64,
}

/// Linear detector/amplifier background, W/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkModel {
    pub level: f64,
    /// W/Hz per Hz, about `reference_frequency`.
    pub slope: f64,
    pub reference_frequency: f64,
}

impl DarkModel {
    pub fn psd(&self, f: f64) -> f64 {
        (self.level + self.slope * (f - self.reference_frequency)).max(0.0)
    }
}

/// Peaks are truncated at this many FWHM each side.
const PEAK_TRUNCATION_FWHM: f64 = 4.0;

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum()
}

/// Signal and dark spectra for a set of sidebands on top of a flat shot-noise floor.
/// Each peak is a Gaussian of FWHM `rbw` whose trapezoid area on the grid is exactly
/// flux × `shot_psd`, so dividing integrated excess power by the shot level returns the flux.
pub fn synthesize_heterodyne(
    lines: &[SidebandLine],
    grid: &[f64],
    shot_psd: f64,
    rbw: f64,
    dark: &DarkModel,
) -> Result<(Spectrum, Spectrum)> {
    check_grid(grid)?;
    require_positive("shot_psd", shot_psd)?;
    require_positive("rbw", rbw)?;
    for (i, l) in lines.iter().enumerate() {
        require_non_negative(&format!("sidebands[{i}].flux"), l.flux)?;
        if lines[..i].iter().any(|o| o.frequency == l.frequency) {
            return Err(Error::invalid(format!("sidebands[{i}].frequency"), "sideband frequencies must be distinct"));
        }
    }
    let dark_psd: Vec<f64> = grid.iter().map(|&f| dark.psd(f)).collect();
    let mut signal: Vec<f64> = dark_psd.iter().map(|d| d + shot_psd).collect();
    let sigma = rbw / (2.0 * (2.0 * LN_2).sqrt());
    for (i, l) in lines.iter().enumerate() {
        if l.flux == 0.0 {
            continue;
        }
        let shape: Vec<f64> = grid
            .iter()
            .map(|&f| {
                let d = f - l.frequency;
                if d.abs() <= PEAK_TRUNCATION_FWHM * rbw {
                    (-0.5 * (d / sigma).powi(2)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let area = trapezoid(grid, &shape);
        if !(area > 0.0) {
            return Err(Error::invalid(format!("sidebands[{i}].frequency"), "peak does not cover at least two grid points"));
        }
        let k = l.flux * shot_psd / area;
        for (s, g) in signal.iter_mut().zip(&shape) {
            *s += k * g;
        }
    }
    Ok((
        Spectrum::new(grid.to_vec(), signal, rbw, SpectrumKind::HeterodyneRf)?,
        Spectrum::new(grid.to_vec(), dark_psd, rbw, SpectrumKind::HeterodyneRf)?,
    ))
}

/// Integration window around a peak plus the width of the shot-noise reference band on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakWindow {
    pub lower: f64,
    pub upper: f64,
    pub reference_width: f64,
}

impl PeakWindow {
    pub fn around(center: f64, half_width: f64, reference_width: f64) -> Self {
        PeakWindow { lower: center - half_width, upper: center + half_width, reference_width }
    }
}

/// Microwave drive referenced to the device input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfDrive {
    pub power_w: f64,
    pub omega: f64,
    /// Uncertainty of the input-line loss, dB; sets the systematic bound on η.
    pub loss_uncertainty_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub sideband_flux: f64,
    /// One-sigma flux uncertainty from the scatter in the reference bands.
    pub flux_uncertainty: f64,
    pub microwave_flux: f64,
    pub efficiency: f64,
    pub efficiency_systematic: f64,
    pub shot_psd: f64,
    pub window: PeakWindow,
    /// The excess power integrated negative; flux and η were clamped to zero.
    pub below_noise_floor: bool,
    /// The reference bands held no power above dark, so no flux scale exists.
    pub no_reference: bool,
}

/// Dark subtraction, adjacent-band shot level, integration of the excess, division by the
/// shot level, then η = flux/(P_RF/ħω).
pub fn calibrate_efficiency(signal: &Spectrum, dark: &Spectrum, window: &PeakWindow, drive: &RfDrive) -> Result<CalibrationResult> {
    signal.validate()?;
    dark.validate()?;
    if signal.frequency != dark.frequency {
        return Err(Error::invalid("dark.frequency", "signal and dark spectra must share one grid"));
    }
    require_positive("rf_power", drive.power_w)?;
    require_positive("omega_mw", drive.omega)?;
    require_non_negative("loss_uncertainty_db", drive.loss_uncertainty_db)?;
    require_positive("window.reference_width", window.reference_width)?;
    let f = &signal.frequency;
    if !(window.lower < window.upper) {
        return Err(Error::invalid("window", "lower edge must be below upper edge"));
    }
    if window.lower - window.reference_width < f[0] || window.upper + window.reference_width > f[f.len() - 1] {
        return Err(Error::invalid("window", "window and reference bands must lie inside the grid"));
    }
    let excess: Vec<f64> = signal.psd.iter().zip(&dark.psd).map(|(s, d)| s - d).collect();
    let reference: Vec<f64> = f
        .iter()
        .zip(&excess)
        .filter(|(&x, _)| {
            (x >= window.lower - window.reference_width && x < window.lower) || (x > window.upper && x <= window.upper + window.reference_width)
        })
        .map(|(_, &e)| e)
        .collect();
    if reference.len() < 2 {
        return Err(Error::invalid("window.reference_width", "reference bands contain fewer than two grid points"));
    }
    let shot = reference.iter().sum::<f64>() / reference.len() as f64;
    let scatter = (reference.iter().map(|e| (e - shot).powi(2)).sum::<f64>() / (reference.len() - 1) as f64).sqrt();
    let inside: Vec<usize> = (0..f.len()).filter(|&i| f[i] >= window.lower && f[i] <= window.upper).collect();
    if inside.len() < 2 {
        return Err(Error::invalid("window", "integration window contains fewer than two grid points"));
    }
    let xs: Vec<f64> = inside.iter().map(|&i| f[i]).collect();
    let ys: Vec<f64> = inside.iter().map(|&i| excess[i] - shot).collect();
    let power = trapezoid(&xs, &ys);
    let microwave_flux = photon_flux(drive.power_w, drive.omega)?;
    let loss_factor = 10f64.powf(drive.loss_uncertainty_db / 10.0) - 1.0;
    if shot <= 0.0 {
        return Ok(CalibrationResult {
            sideband_flux: 0.0,
            flux_uncertainty: f64::INFINITY,
            microwave_flux,
            efficiency: 0.0,
            efficiency_systematic: 0.0,
            shot_psd: shot,
            window: *window,
            below_noise_floor: false,
            no_reference: true,
        });
    }
    let df = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    let flux_uncertainty = scatter * df * (xs.len() as f64).sqrt() / shot;
    let raw = power / shot;
    let below_noise_floor = raw < 0.0;
    let sideband_flux = raw.max(0.0);
    let efficiency = sideband_flux / microwave_flux;
    Ok(CalibrationResult {
        sideband_flux,
        flux_uncertainty,
        microwave_flux,
        efficiency,
        efficiency_systematic: efficiency * loss_factor,
        shot_psd: shot,
        window: *window,
        below_noise_floor,
        no_reference: false,
    })
}
