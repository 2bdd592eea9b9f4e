//! Electro-optic transduction: tuning rate, single-photon coupling, intracavity photon
//! number, cooperativity and conversion efficiency, plus the inverse used to read g0
//! off a measured efficiency.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_fraction, require_non_negative, require_positive, Error, Result};
use crate::quantities::{angular_to_hz, DeviceParams, OpticalMode, C_LIGHT, HBAR};
use crate::superconductor::Superconductor;

/// Electro-optic polymer cladding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolymerParams {
    /// Thin-film Pockels coefficient r33, m/V.
    pub r33_film: f64,
    /// Fraction of the film coefficient realised by poling, in [0, 1].
    pub poling_efficiency: f64,
    pub n_e: f64,
    pub n_o: f64,
    /// U_polymer/U_total of the optical mode, in [0, 1].
    pub mode_energy_fraction: f64,
    /// E_RF,3 at the waveguide per applied volt, 1/m.
    pub field_per_volt: f64,
}

/// Default screening of the parallel-plate field by the polymer/oxide stack.
pub const DEFAULT_SCREENING: f64 = 0.8;

impl PolymerParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("r33_film", self.r33_film)?;
        if !(0.0..=1.0).contains(&self.poling_efficiency) {
            return Err(Error::invalid("poling_efficiency", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.mode_energy_fraction) {
            return Err(Error::invalid("mode_energy_fraction", "must lie in [0, 1]"));
        }
        require_positive("n_e", self.n_e)?;
        require_positive("n_o", self.n_o)?;
        require_non_negative("field_per_volt", self.field_per_volt)?;
        Ok(())
    }

    /// Field per volt for a parallel-plate estimate across `gap`, reduced by `screening`.
    pub fn parallel_plate_field(gap: f64, screening: f64) -> Result<f64> {
        require_positive("electrode_gap", gap)?;
        require_fraction("screening_factor", screening)?;
        Ok(screening / gap)
    }

    pub fn r33_eff(&self) -> f64 {
        self.poling_efficiency * self.r33_film
    }
}

/// Region label for a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Polymer,
    Other,
}

/// Sampled optical field, permittivity and its voltage-induced perturbation on a
/// rectangular grid (row-major, `nx` fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub field: Vec<[Complex64; 3]>,
    pub eps: Vec<[[f64; 3]; 3]>,
    pub delta_eps: Vec<[[f64; 3]; 3]>,
    pub mask: Vec<Region>,
}

impl FieldGrid {
    pub fn validate(&self) -> Result<()> {
        let cells = self.nx * self.ny;
        if cells == 0 {
            return Err(Error::invalid("grid", "empty grid"));
        }
        require_positive("grid.dx", self.dx)?;
        require_positive("grid.dy", self.dy)?;
        for (name, len) in [
            ("field", self.field.len()),
            ("eps", self.eps.len()),
            ("delta_eps", self.delta_eps.len()),
            ("mask", self.mask.len()),
        ] {
            if len != cells {
                return Err(Error::invalid(format!("grid.{name}"), format!("has {len} cells, expected {cells}")));
            }
        }
        for (i, (d, m)) in self.delta_eps.iter().zip(&self.mask).enumerate() {
            if *m != Region::Polymer && d.iter().flatten().any(|v| *v != 0.0) {
                return Err(Error::invalid("grid.delta_eps", format!("non-zero outside the polymer at cell {i}")));
            }
        }
        Ok(())
    }
}

fn quadratic_form(e: &[Complex64; 3], t: &[[f64; 3]; 3]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            acc += e[i].conj() * t[i][j] * e[j];
        }
    }
    acc.re
}

/// First-order perturbative tuning rate −(ω/2V)·∫_poly E*ΔεE / ∫ E*εE, rad/s per V.
pub fn tuning_rate_from_fields(grid: &FieldGrid, v_applied: f64, omega_opt: f64) -> Result<f64> {
    grid.validate()?;
    if v_applied == 0.0 || !v_applied.is_finite() {
        return Err(Error::invalid("v_applied", "must be finite and non-zero"));
    }
    let area = grid.dx * grid.dy;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid.field.len() {
        den += quadratic_form(&grid.field[i], &grid.eps[i]) * area;
        if grid.mask[i] == Region::Polymer {
            num += quadratic_form(&grid.field[i], &grid.delta_eps[i]) * area;
        }
    }
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Degenerate("optical field carries no energy".into()));
    }
    Ok(-omega_opt / (2.0 * v_applied) * num / den)
}

/// Compact estimate ½·ω·n_e²·r33_eff·(E/V)·(U_poly/U_tot), rad/s per V.
pub fn tuning_rate_approx(p: &PolymerParams, omega_opt: f64) -> Result<f64> {
    p.validate()?;
    Ok(0.5 * omega_opt * p.n_e * p.n_e * p.r33_eff() * p.field_per_volt * p.mode_energy_fraction)
}

/// Tuning rate from a measured wavelength shift per volt: 2πc·(dλ/dV)/λ², rad/s per V.
pub fn gv_from_wavelength_tuning(tuning: f64, wavelength: f64) -> Result<f64> {
    require_positive("wavelength", wavelength)?;
    Ok(2.0 * std::f64::consts::PI * C_LIGHT * tuning / (wavelength * wavelength))
}

/// Wavelength shift per volt equivalent to a tuning rate (inverse of the above).
pub fn wavelength_tuning_from_gv(g_v: f64, wavelength: f64) -> Result<f64> {
    require_positive("wavelength", wavelength)?;
    Ok(g_v * wavelength * wavelength / (2.0 * std::f64::consts::PI * C_LIGHT))
}

/// Zero-point voltage fluctuation ω·√(ħZ/2) of the microwave resonator.
pub fn zero_point_voltage(omega_mw: f64, z: f64) -> Result<f64> {
    require_positive("impedance", z)?;
    Ok(omega_mw * (HBAR * z / 2.0).sqrt())
}

/// g0 = g_V·V_zpf.
pub fn coupling_g0(g_v: f64, v_zpf: f64) -> f64 {
    g_v * v_zpf
}

/// Pump at the cavity input port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    /// Power arriving at the cavity input, W.
    pub power: f64,
    /// Pump minus cavity angular frequency, rad/s.
    pub detuning: f64,
}

/// Mean intracavity photon number of a single-sided cavity: κ_e·(P/ħω)/((κ/2)² + Δ²).
pub fn intracavity_photons(pump: &PumpConfig, o: &OpticalMode) -> Result<f64> {
    require_non_negative("pump.power", pump.power)?;
    let half = 0.5 * o.total();
    let flux = pump.power / (HBAR * o.omega());
    Ok(o.external() * flux / (half * half + pump.detuning * pump.detuning))
}

/// User-declared relative (1σ-like) input uncertainties for linear propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InputUncertainty {
    pub g0_rel: f64,
    pub n_cav_rel: f64,
    pub eta_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConversionResult {
    pub n_cav: f64,
    pub cooperativity: f64,
    pub efficiency: f64,
    /// FWHM of the conversion response, Hz (= γ_tot/2π).
    pub bandwidth_fwhm_hz: f64,
    /// Anti-Stokes over Stokes at Δ = −ω_MW, dB.
    pub sideband_ratio_db: f64,
    /// g0, rad/s.
    pub g0: f64,
    pub efficiency_uncertainty: Option<f64>,
    pub g0_uncertainty: Option<f64>,
}

fn require_g0(dev: &DeviceParams) -> Result<f64> {
    dev.g0.ok_or_else(|| Error::invalid("device.g0", "required for the efficiency calculation"))
}

/// Cooperativity 4g0²n/(κ_tot γ_tot).
pub fn cooperativity(dev: &DeviceParams, g0: f64, n_cav: f64) -> f64 {
    4.0 * g0 * g0 * n_cav / (dev.optical.total() * dev.microwave.total())
}

/// η = (κ_e/κ)(γ_e/γ)·4C/(1+C)².
pub fn efficiency_from_cooperativity(dev: &DeviceParams, c: f64) -> f64 {
    let ext = (dev.optical.external() / dev.optical.total()) * (dev.microwave.external() / dev.microwave.total());
    ext * 4.0 * c / ((1.0 + c) * (1.0 + c))
}

/// Steady-state conversion efficiency at a given intracavity photon number.
pub fn conversion_efficiency(dev: &DeviceParams, n_cav: f64) -> Result<ConversionResult> {
    conversion_efficiency_with_uncertainty(dev, n_cav, None)
}

pub fn conversion_efficiency_with_uncertainty(
    dev: &DeviceParams,
    n_cav: f64,
    unc: Option<InputUncertainty>,
) -> Result<ConversionResult> {
    require_non_negative("n_cav", n_cav)?;
    let g0 = require_g0(dev)?;
    let c = cooperativity(dev, g0, n_cav);
    let eta = efficiency_from_cooperativity(dev, c);
    let efficiency_uncertainty = unc.map(|u| {
        let dlneta_dlnc = ((1.0 - c) / (1.0 + c)).abs();
        eta * dlneta_dlnc * ((2.0 * u.g0_rel).powi(2) + u.n_cav_rel.powi(2)).sqrt()
    });
    Ok(ConversionResult {
        n_cav,
        cooperativity: c,
        efficiency: eta,
        bandwidth_fwhm_hz: angular_to_hz(dev.microwave.total()),
        sideband_ratio_db: sideband_ratio(&dev.optical, dev.microwave.omega(), -dev.microwave.omega()),
        g0,
        efficiency_uncertainty,
        g0_uncertainty: unc.map(|u| u.g0_rel * g0),
    })
}

/// Low-cooperativity inverse: g0 = (κγ/4√n)·√(η/(κ_e γ_e)).
pub fn infer_g0(eta: f64, dev: &DeviceParams, n_cav: f64) -> Result<f64> {
    require_non_negative("eta", eta)?;
    require_non_negative("n_cav", n_cav)?;
    if n_cav == 0.0 {
        return Err(Error::Degenerate("no intracavity photons: g0 is undetermined".into()));
    }
    let (o, m) = (&dev.optical, &dev.microwave);
    Ok(o.total() * m.total() / (4.0 * n_cav.sqrt()) * (eta / (o.external() * m.external())).sqrt())
}

/// Relative uncertainty of an inferred g0 from relative uncertainties of η and n_cav.
pub fn infer_g0_rel_uncertainty(eta_rel: f64, n_cav_rel: f64) -> f64 {
    0.5 * (eta_rel * eta_rel + n_cav_rel * n_cav_rel).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetuningPoint {
    /// RF detuning from the microwave resonance, rad/s.
    pub delta: f64,
    pub efficiency: f64,
}

/// Lorentzian efficiency response η_peak·(γ/2)²/((γ/2)² + δ²) with γ = γ_tot.
pub fn efficiency_vs_rf_detuning(dev: &DeviceParams, n_cav: f64, deltas: &[f64]) -> Result<Vec<DetuningPoint>> {
    if deltas.is_empty() {
        return Err(Error::invalid("delta_rf", "grid is empty"));
    }
    let peak = conversion_efficiency(dev, n_cav)?.efficiency;
    let half = 0.5 * dev.microwave.total();
    Ok(deltas
        .iter()
        .map(|&d| DetuningPoint { delta: d, efficiency: peak * half * half / (half * half + d * d) })
        .collect())
}

/// Anti-Stokes over Stokes cavity filtering in dB for pump detuning Δ (pump − cavity).
pub fn sideband_ratio(o: &OpticalMode, omega_mw: f64, detuning: f64) -> f64 {
    let h2 = 0.25 * o.total() * o.total();
    let anti = h2 + (detuning + omega_mw).powi(2);
    let stokes = h2 + (detuning - omega_mw).powi(2);
    10.0 * (stokes / anti).log10()
}

/// Cavity Lorentzian weight of a sideband at offset `x` from the cavity.
fn cavity_weight(o: &OpticalMode, x: f64) -> f64 {
    let h2 = 0.25 * o.total() * o.total();
    h2 / (h2 + x * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpDetuningPoint {
    pub detuning: f64,
    pub n_cav: f64,
    pub efficiency_anti_stokes: f64,
    pub efficiency_stokes: f64,
    pub ratio_db: f64,
}

/// Efficiencies of both sidebands as the pump is swept across the optical resonance at
/// fixed input power. Each sideband carries the on-resonance efficiency at the local
/// n_cav, filtered by the cavity Lorentzian at its own offset.
pub fn efficiency_vs_pump_detuning(dev: &DeviceParams, power: f64, detunings: &[f64]) -> Result<Vec<PumpDetuningPoint>> {
    let w = dev.microwave.omega();
    detunings
        .iter()
        .map(|&d| {
            let n = intracavity_photons(&PumpConfig { power, detuning: d }, &dev.optical)?;
            let eta = conversion_efficiency(dev, n)?.efficiency;
            Ok(PumpDetuningPoint {
                detuning: d,
                n_cav: n,
                efficiency_anti_stokes: eta * cavity_weight(&dev.optical, d + w),
                efficiency_stokes: eta * cavity_weight(&dev.optical, d - w),
                ratio_db: sideband_ratio(&dev.optical, w, d),
            })
        })
        .collect()
}

/// Power-law electron–phonon heating: T = (T_b^n + P_abs/Σ)^(1/n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatingMap {
    pub base_temperature_k: f64,
    pub exponent: f64,
    /// Σ in W/K^n.
    pub sigma_w_per_kn: f64,
}

impl HeatingMap {
    pub fn temperature(&self, absorbed: f64) -> f64 {
        (self.base_temperature_k.powf(self.exponent) + absorbed / self.sigma_w_per_kn).powf(1.0 / self.exponent)
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("base_temperature_k", self.base_temperature_k)?;
        require_positive("exponent", self.exponent)?;
        require_positive("sigma_w_per_kn", self.sigma_w_per_kn)?;
        Ok(())
    }
}

/// How pump light reaching the cavity ends up as quasiparticle loss in the film.
#[derive(Debug, Clone, Copy)]
pub struct StrayLightModel<'a> {
    /// Fraction of the cavity-input pump power absorbed by the film.
    pub absorbed_fraction: f64,
    pub heating: HeatingMap,
    pub superconductor: &'a Superconductor,
    /// Kinetic inductance fraction of the microwave resonator at T = 0.
    pub alpha_k: f64,
    /// False reproduces the uncoupled model.
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpSweepPoint {
    pub power: f64,
    pub n_cav: f64,
    pub efficiency: f64,
    /// Microwave total loss including quasiparticle loss, rad/s.
    pub gamma_tot: f64,
    pub qp_temperature: f64,
    pub cooperativity: f64,
}

/// Efficiency vs pump power with stray-light heating of the superconducting resonator.
/// Points are evaluated in parallel; output order follows `powers`.
pub fn efficiency_vs_pump_power(
    dev: &DeviceParams,
    detuning: f64,
    powers: &[f64],
    stray: &StrayLightModel<'_>,
) -> Result<Vec<PumpSweepPoint>> {
    require_non_negative("absorbed_fraction", stray.absorbed_fraction)?;
    stray.heating.validate()?;
    let f0 = angular_to_hz(dev.microwave.omega());
    powers
        .par_iter()
        .map(|&p| {
            let n = intracavity_photons(&PumpConfig { power: p, detuning }, &dev.optical)?;
            let (micro, t) = if stray.enabled {
                let t = stray.heating.temperature(stray.absorbed_fraction * p);
                let resp = stray.superconductor.resonator_response(stray.alpha_k, f0, t)?;
                let extra = if resp.q_qp.is_finite() { dev.microwave.omega() / resp.q_qp } else { 0.0 };
                (dev.microwave.with_extra_intrinsic(extra)?, t)
            } else {
                (dev.microwave, stray.heating.base_temperature_k)
            };
            let d = dev.with_microwave(micro);
            let r = conversion_efficiency(&d, n)?;
            Ok(PumpSweepPoint {
                power: p,
                n_cav: n,
                efficiency: r.efficiency,
                gamma_tot: micro.total(),
                qp_temperature: t,
                cooperativity: r.cooperativity,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantities::{dbm_to_watts, hz_to_angular, CavityMode, CouplingTopology};
    use crate::scenarios;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn device(g0_hz: f64) -> DeviceParams {
        scenarios::table1_device().with_g0(hz_to_angular(g0_hz)).unwrap()
    }

    #[test]
    fn wavelength_tuning_examples() {
        let lam = 1557.92e-9;
        assert!(rel(angular_to_hz(gv_from_wavelength_tuning(3.7e-12, lam).unwrap()), 457e6) < 1e-3);
        assert!(rel(angular_to_hz(gv_from_wavelength_tuning(1.1e-12, lam).unwrap()), 136e6) < 1e-3);
        assert_eq!(gv_from_wavelength_tuning(0.0, lam).unwrap(), 0.0);
        assert!(gv_from_wavelength_tuning(1.0, 0.0).is_err());
        let g = gv_from_wavelength_tuning(3.7e-12, lam).unwrap();
        assert!(rel(wavelength_tuning_from_gv(g, lam).unwrap(), 3.7e-12) < 1e-14);
    }

    #[test]
    fn zero_point_voltage_examples() {
        let w = hz_to_angular(6.672e9);
        assert!(rel(zero_point_voltage(w, 100.0).unwrap(), 3.04e-6) < 2e-3);
        assert!(rel(zero_point_voltage(w, 1e4).unwrap(), 30.4e-6) < 2e-3);
        assert_eq!(zero_point_voltage(0.0, 100.0).unwrap(), 0.0);
        assert!(zero_point_voltage(w, 0.0).is_err());
    }

    #[test]
    fn g0_examples() {
        let w = hz_to_angular(6.672e9);
        let vz = zero_point_voltage(w, 100.0).unwrap();
        let g_glued = gv_from_wavelength_tuning(1.1e-12, 1557.92e-9).unwrap();
        let g0 = angular_to_hz(coupling_g0(g_glued, vz));
        assert!(rel(g0, 413.0) < 3e-3, "{g0}");
        assert!(rel(g0, 400.0) < 0.05);
        let g_bare = gv_from_wavelength_tuning(3.7e-12, 1557.92e-9).unwrap();
        assert!(rel(angular_to_hz(coupling_g0(g_bare, vz)), 1.39e3) < 3e-3);
        assert_eq!(coupling_g0(0.0, vz), 0.0);
    }

    #[test]
    fn compact_tuning_estimate() {
        let mut p = scenarios::table1_polymer();
        let w = scenarios::table1_device().optical.omega();
        let gv = tuning_rate_approx(&p, w).unwrap();
        let measured = gv_from_wavelength_tuning(3.7e-12, 1557.92e-9).unwrap();
        assert!(gv / measured < 3.0 && measured / gv < 3.0, "ratio {}", gv / measured);
        p.poling_efficiency *= 2.0;
        assert!(rel(tuning_rate_approx(&p, w).unwrap(), 2.0 * gv) < 1e-14);
        p.mode_energy_fraction = 0.0;
        assert_eq!(tuning_rate_approx(&p, w).unwrap(), 0.0);
        p.poling_efficiency = 1.5;
        assert!(tuning_rate_approx(&p, w).is_err());
    }

    fn uniform_grid(n: usize, delta_eps: f64) -> FieldGrid {
        let cells = n * n;
        let eps = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
        let d = [[delta_eps, 0.0, 0.0], [0.0, delta_eps, 0.0], [0.0, 0.0, delta_eps]];
        FieldGrid {
            nx: n,
            ny: n,
            dx: 1e-8,
            dy: 1e-8,
            field: vec![[Complex64::new(0.3, 0.1), Complex64::new(0.0, 0.0), Complex64::new(1.0, -0.2)]; cells],
            eps: vec![eps; cells],
            delta_eps: vec![d; cells],
            mask: vec![Region::Polymer; cells],
        }
    }

    #[test]
    fn field_overlap_trivial_cases() {
        let w = 1.2e15;
        assert_eq!(tuning_rate_from_fields(&uniform_grid(8, 0.0), 1.0, w).unwrap(), 0.0);
        let full = tuning_rate_from_fields(&uniform_grid(8, 2.0), 1.0, w).unwrap();
        assert!(rel(full, -w / 2.0) < 1e-14);
        let mut null = uniform_grid(4, 1.0);
        null.field.iter_mut().for_each(|e| *e = [Complex64::new(0.0, 0.0); 3]);
        assert!(matches!(tuning_rate_from_fields(&null, 1.0, w), Err(Error::Degenerate(_))));
        assert!(tuning_rate_from_fields(&uniform_grid(4, 1.0), 0.0, w).is_err());
        let mut leaky = uniform_grid(4, 1.0);
        leaky.mask[3] = Region::Other;
        assert!(tuning_rate_from_fields(&leaky, 1.0, w).is_err());
    }

    /// Gaussian mode exp(−r²/w²) against a Gaussian perturbation δ·exp(−((x−a)² + y²)/s²).
    fn gaussian_grid(n: usize, half_width: f64, w: f64, s: f64, a: f64, delta: f64, amp: f64) -> FieldGrid {
        let h = 2.0 * half_width / n as f64;
        let eps = 2.5;
        let mut g = uniform_grid(n, 0.0);
        g.dx = h;
        g.dy = h;
        for j in 0..n {
            for i in 0..n {
                let x = -half_width + (i as f64 + 0.5) * h;
                let y = -half_width + (j as f64 + 0.5) * h;
                let idx = j * n + i;
                let e = amp * (-(x * x + y * y) / (w * w)).exp();
                g.field[idx] = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(e, 0.0)];
                g.eps[idx] = [[eps, 0.0, 0.0], [0.0, eps, 0.0], [0.0, 0.0, eps]];
                let de = delta * (-((x - a).powi(2) + y * y) / (s * s)).exp();
                g.delta_eps[idx] = [[0.0; 3], [0.0; 3], [0.0, 0.0, de]];
            }
        }
        g
    }

    fn gaussian_overlap_closed_form(w: f64, s: f64, a: f64, delta: f64) -> f64 {
        // ∫exp(−2r²/w²)·exp(−((x−a)²+y²)/s²) / ∫exp(−2r²/w²), factorised in x and y.
        let p = 2.0 / (w * w);
        let q = 1.0 / (s * s);
        let gx = (PI / (p + q)).sqrt() * (-p * q * a * a / (p + q)).exp();
        let gy = (PI / (p + q)).sqrt();
        let norm = PI / p;
        delta * gx * gy / (2.5 * norm)
    }

    #[test]
    fn field_overlap_matches_gaussian_closed_form() {
        let (w, s, a, delta) = (1e-6, 0.7e-6, 0.4e-6, 0.05);
        let omega = 1.2e15;
        let g = gaussian_grid(400, 6e-6, w, s, a, delta, 1.0);
        let got = tuning_rate_from_fields(&g, 1.0, omega).unwrap();
        let expected = -omega / 2.0 * gaussian_overlap_closed_form(w, s, a, delta);
        assert!(rel(got, expected) < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn field_overlap_is_scale_and_refinement_invariant() {
        let (w, s, a, delta) = (1e-6, 0.7e-6, 0.4e-6, 0.05);
        let base = tuning_rate_from_fields(&gaussian_grid(200, 6e-6, w, s, a, delta, 1.0), 1.0, 1.0).unwrap();
        let scaled = tuning_rate_from_fields(&gaussian_grid(200, 6e-6, w, s, a, delta, 37.0), 1.0, 1.0).unwrap();
        assert!(rel(scaled, base) < 1e-12);
        let fine = tuning_rate_from_fields(&gaussian_grid(400, 6e-6, w, s, a, delta, 1.0), 1.0, 1.0).unwrap();
        assert!(rel(fine, base) < 1e-6);
    }

    #[test]
    fn field_overlap_second_order_convergence_on_a_kink() {
        // A perturbation confined to x > 0 has a discontinuity; refinement must still converge.
        let errs: Vec<f64> = [64usize, 128, 256]
            .iter()
            .map(|&n| {
                let mut g = gaussian_grid(n, 5e-6, 1e-6, 1e9, 0.0, 0.1, 1.0);
                let h = g.dx;
                for j in 0..n {
                    for i in 0..n {
                        let x = -5e-6 + (i as f64 + 0.5) * h;
                        let y = -5e-6 + (j as f64 + 0.5) * h;
                        let idx = j * n + i;
                        // smooth tanh-shaped edge so midpoint quadrature stays second order
                        let de = 0.1 * 0.5 * (1.0 + (x / 0.5e-6).tanh()) * (-y * y / 4e-12).exp();
                        g.delta_eps[idx][2][2] = de;
                    }
                }
                tuning_rate_from_fields(&g, 1.0, 1.0).unwrap()
            })
            .collect();
        let e1 = (errs[0] - errs[1]).abs();
        let e2 = (errs[1] - errs[2]).abs();
        assert!(e2 <= e1 * 0.3 || e2 < 1e-12 * errs[2].abs(), "{e1} {e2}");
    }

    #[test]
    fn photon_number_examples() {
        let o = scenarios::table1_device().optical;
        let w = hz_to_angular(6.672e9);
        let n = intracavity_photons(&PumpConfig { power: 1e-6, detuning: -w }, &o).unwrap();
        assert!(rel(n, 140.0) < 5e-3, "{n}");
        assert_eq!(intracavity_photons(&PumpConfig { power: 0.0, detuning: -w }, &o).unwrap(), 0.0);
        let on = intracavity_photons(&PumpConfig { power: 1e-6, detuning: 0.0 }, &o).unwrap();
        let expected = ((0.5 * o.total()).powi(2) + w * w) / (0.5 * o.total()).powi(2);
        assert!(rel(on / n, expected) < 1e-12);
        assert!(rel(expected, 2.90) < 2e-3);
    }

    #[test]
    fn efficiency_examples() {
        let dev = device(330.0);
        let r = conversion_efficiency(&dev, 140.0).unwrap();
        assert!(rel(r.efficiency, 9.3e-10) < 0.02, "{}", r.efficiency);
        assert!(rel(r.bandwidth_fwhm_hz, 6.35e6) < 1e-9);
        assert_eq!(conversion_efficiency(&dev, 0.0).unwrap().efficiency, 0.0);

        let o = CavityMode::new(1e15, 1e-300, 1e9, CouplingTopology::SingleSided).unwrap();
        let m = CavityMode::new(1e10, 1e-300, 1e6, CouplingTopology::SingleSided).unwrap();
        let ideal = DeviceParams::new(o, m, 100.0, Some(1.0)).unwrap();
        let n_for_c1 = o.total() * m.total() / 4.0;
        let r = conversion_efficiency(&ideal, n_for_c1).unwrap();
        assert!((r.cooperativity - 1.0).abs() < 1e-12);
        assert!((r.efficiency - 1.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency_requires_g0() {
        let dev = scenarios::table1_device();
        let mut no_g0 = dev;
        no_g0.g0 = None;
        let err = conversion_efficiency(&no_g0, 1.0).unwrap_err();
        assert!(err.to_string().contains("device.g0"));
    }

    #[test]
    fn infer_g0_examples() {
        let dev = device(330.0);
        assert_eq!(infer_g0(0.0, &dev, 100.0).unwrap(), 0.0);
        assert!(matches!(infer_g0(1e-9, &dev, 0.0), Err(Error::Degenerate(_))));
        let p = dbm_to_watts(-26.0).unwrap();
        let n = intracavity_photons(&PumpConfig { power: p, detuning: -dev.microwave.omega() }, &dev.optical).unwrap();
        let g0 = angular_to_hz(infer_g0(2.2e-9, &dev, n).unwrap());
        assert!((270.0..=390.0).contains(&g0), "{g0}");
    }

    #[test]
    fn uncertainty_propagation() {
        let dev = device(330.0);
        let u = InputUncertainty { g0_rel: 0.1, n_cav_rel: 0.2, eta_rel: 0.0 };
        let r = conversion_efficiency_with_uncertainty(&dev, 140.0, Some(u)).unwrap();
        let expected = r.efficiency * (0.2f64.powi(2) + 0.2f64.powi(2)).sqrt();
        assert!(rel(r.efficiency_uncertainty.unwrap(), expected) < 1e-6);
        assert!(rel(infer_g0_rel_uncertainty(0.3, 0.4), 0.25) < 1e-14);
    }

    #[test]
    fn rf_detuning_lorentzian() {
        let dev = device(330.0);
        let g = dev.microwave.total();
        let curve = efficiency_vs_rf_detuning(&dev, 140.0, &[0.0, g / 2.0, -g / 2.0]).unwrap();
        assert!(rel(curve[1].efficiency, curve[0].efficiency / 2.0) < 1e-14);
        assert!(rel(curve[2].efficiency, curve[0].efficiency / 2.0) < 1e-14);
        assert!(efficiency_vs_rf_detuning(&dev, 140.0, &[]).is_err());
    }

    #[test]
    fn sideband_ratio_examples() {
        let o = scenarios::table1_device().optical;
        let w = hz_to_angular(6.672e9);
        assert_eq!(sideband_ratio(&o, w, 0.0), 0.0);
        let r = sideband_ratio(&o, w, -w);
        let closed = 10.0 * (1.0 + (4.0 * w / o.total()).powi(2)).log10();
        assert!((r - closed).abs() < 1e-12);
        assert!((r - 9.35).abs() < 0.01, "{r}");
        assert!((r - 9.5).abs() < 0.2);
        assert!((sideband_ratio(&o, w, w) + r).abs() < 1e-12);
    }

    #[test]
    fn sideband_ratio_extrema_location() {
        let o = scenarios::table1_device().optical;
        let w = hz_to_angular(6.672e9);
        let (dmax, _) = crate::numerics::golden_section_max(|d| sideband_ratio(&o, w, d), -5.0 * w, 0.0, 1.0);
        let (dmin, _) = crate::numerics::golden_section_max(|d| -sideband_ratio(&o, w, d), 0.0, 5.0 * w, 1.0);
        let expected = 2.0 * (w * w + 0.25 * o.total() * o.total()).sqrt();
        assert!(rel(dmin - dmax, expected) < 1e-6);
    }

    #[test]
    fn pump_detuning_sweep_peaks_near_red_sideband() {
        let dev = device(330.0);
        let w = dev.microwave.omega();
        let grid: Vec<f64> = (0..401).map(|i| -3.0 * w + 6.0 * w * i as f64 / 400.0).collect();
        let pts = efficiency_vs_pump_detuning(&dev, 1e-6, &grid).unwrap();
        let best = pts.iter().max_by(|a, b| a.efficiency_anti_stokes.total_cmp(&b.efficiency_anti_stokes)).unwrap();
        assert!(best.detuning < 0.0 && best.detuning > -w);
        let at = efficiency_vs_pump_detuning(&dev, 1e-6, &[-w]).unwrap()[0];
        let n = at.n_cav;
        assert!(rel(at.efficiency_anti_stokes, conversion_efficiency(&dev, n).unwrap().efficiency) < 1e-14);
    }

    proptest! {
        #[test]
        fn efficiency_bounded_by_extraction(c in 0.0f64..100.0) {
            let dev = device(330.0);
            let bound = (dev.optical.external() / dev.optical.total()) * (dev.microwave.external() / dev.microwave.total());
            let eta = efficiency_from_cooperativity(&dev, c);
            prop_assert!(eta <= bound * (1.0 + 1e-15));
            prop_assert!(eta >= 0.0);
        }

        #[test]
        fn efficiency_monotone_either_side_of_unity(c1 in 0.0f64..1.0, c2 in 0.0f64..1.0, c3 in 1.0f64..50.0, c4 in 1.0f64..50.0) {
            let dev = device(330.0);
            let (lo, hi) = if c1 < c2 { (c1, c2) } else { (c2, c1) };
            prop_assert!(efficiency_from_cooperativity(&dev, lo) <= efficiency_from_cooperativity(&dev, hi));
            let (lo, hi) = if c3 < c4 { (c3, c4) } else { (c4, c3) };
            prop_assert!(efficiency_from_cooperativity(&dev, lo) >= efficiency_from_cooperativity(&dev, hi));
        }

        #[test]
        fn g0_invariant_under_gv_impedance_rescaling(gv in 1e6f64..1e10, z in 10.0f64..1e4, a in 0.1f64..10.0) {
            let w = 2.0 * PI * 6.672e9;
            let g1 = coupling_g0(gv, zero_point_voltage(w, z).unwrap());
            let g2 = coupling_g0(a * gv, zero_point_voltage(w, z / (a * a)).unwrap());
            prop_assert!(rel(g1, g2) < 1e-12);
        }

        #[test]
        fn sideband_ratio_antisymmetric(d in -1e11f64..1e11) {
            let o = scenarios::table1_device().optical;
            let w = 2.0 * PI * 6.672e9;
            prop_assert!((sideband_ratio(&o, w, d) + sideband_ratio(&o, w, -d)).abs() < 1e-12);
        }

        #[test]
        fn infer_g0_inverts_efficiency(g0_hz in 10.0f64..2000.0, n in 1.0f64..1e4) {
            let dev = device(g0_hz);
            let r = conversion_efficiency(&dev, n).unwrap();
            let back = infer_g0(r.efficiency, &dev, n).unwrap();
            let rel_err = rel(back, dev.g0.unwrap());
            prop_assert!(rel_err <= 2.0 * r.cooperativity + 1e-12);
            if r.cooperativity <= 1e-6 {
                prop_assert!(rel_err <= 1e-6);
            }
        }
    }
}
