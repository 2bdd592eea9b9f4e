//! Thermal-equilibrium response of a BCS superconducting film: gap, Mattis–Bardeen
//! conductivity, surface impedance, quasiparticle density and lifetime, and the
//! resulting resonance-frequency and quality-factor shifts.
//!
//! Quasiparticle densities are in μm⁻³; everything else is SI.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::numerics::{bisect, brent, fermi, integrate, QuadOptions};
use crate::quantities::{SuperconductorParams, HBAR, K_B, MU_0};

/// Fermi tails are cut where the occupation has dropped by this factor from its value at the gap edge.
const TAIL_DECADES: f64 = 18.0;

/// Lowest temperature the inverse solvers consider, K.
pub const T_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapState {
    pub temperature: f64,
    /// Δ(T), J.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexConductivity {
    /// S/m.
    pub sigma1: f64,
    /// S/m.
    pub sigma2: f64,
    pub omega: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceImpedance {
    /// Ω/square.
    pub rs: f64,
    /// H/square.
    pub ls: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiparticleState {
    /// μm⁻³.
    pub density: f64,
    pub temperature: f64,
    /// s; infinite when the density is zero and no ceiling is configured.
    pub lifetime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonatorResponse {
    pub temperature: f64,
    /// Hz.
    pub f0: f64,
    /// Infinite when the film is lossless.
    pub q_qp: f64,
    /// Kinetic inductance fraction at this temperature.
    pub alpha_k: f64,
    pub surface: SurfaceImpedance,
}

/// A film with its pairing strength N₀V calibrated so that Δ(0) = Δ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superconductor {
    params: SuperconductorParams,
    nv: f64,
    debye_energy: f64,
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 4000 }
}

impl Superconductor {
    pub fn new(params: SuperconductorParams) -> Result<Self> {
        params.validate()?;
        let debye_energy = K_B * params.debye_temperature;
        // At T = 0 the gap equation reduces to 1/N₀V = arccosh(E_D/Δ₀).
        let nv = 1.0 / (debye_energy / params.delta0).acosh();
        Ok(Self { params, nv, debye_energy })
    }

    pub fn params(&self) -> &SuperconductorParams {
        &self.params
    }

    /// Dimensionless pairing strength N₀V.
    pub fn coupling(&self) -> f64 {
        self.nv
    }

    /// Residual of the gap equation at trial gap `delta`; positive below the solution.
    fn gap_residual(&self, delta: f64, kt: f64) -> Result<f64> {
        let u_max = (self.debye_energy / delta).acosh();
        let u_tail = (1.0 + TAIL_DECADES * std::f64::consts::LN_10 * kt / delta).acosh();
        let thermal = integrate(|u| fermi(delta * u.cosh(), kt), 0.0, u_max.min(u_tail), quad_opts())?.value;
        Ok(u_max - 2.0 * thermal - 1.0 / self.nv)
    }

    /// Gap Δ(T) from the BCS gap equation with an energy cutoff at k_B·T_D.
    pub fn gap(&self, t: f64) -> Result<GapState> {
        require_non_negative("temperature", t)?;
        let d0 = self.params.delta0;
        if t == 0.0 {
            return Ok(GapState { temperature: t, gap: d0 });
        }
        if t >= self.params.tc {
            return Ok(GapState { temperature: t, gap: 0.0 });
        }
        let kt = K_B * t;
        let tiny = 1e-9 * d0;
        if self.gap_residual(tiny, kt)? <= 0.0 {
            // Above the transition implied by the calibrated coupling.
            return Ok(GapState { temperature: t, gap: 0.0 });
        }
        let mut err = None;
        let gap = brent(
            |d| match self.gap_residual(d, kt) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            },
            tiny,
            d0,
            1e-15 * d0,
            200,
        )
        .map_err(|e| err.take().unwrap_or(e))?;
        Ok(GapState { temperature: t, gap })
    }

    /// Critical temperature implied by the calibrated coupling (close to, but not exactly, T_c).
    pub fn emergent_tc(&self) -> Result<f64> {
        bisect(
            |t| Ok(self.gap_residual(1e-9 * self.params.delta0, K_B * t)? <= 0.0),
            0.1 * self.params.tc,
            2.0 * self.params.tc,
            1e-12 * self.params.tc,
        )
    }

    fn require_subgap(&self, omega: f64, gap: f64, t: f64) -> Result<()> {
        if HBAR * omega >= 2.0 * gap {
            return Err(Error::OutOfRegime(format!(
                "ħω = {:.3e} eV reaches the pair-breaking threshold 2Δ = {:.3e} eV at T = {t} K",
                HBAR * omega / crate::quantities::E_CHARGE,
                2.0 * gap / crate::quantities::E_CHARGE
            )));
        }
        Ok(())
    }

    /// σ₁/σ_n and σ₂/σ_n for a given gap.
    fn conductivity_ratios(&self, omega: f64, gap: f64, t: f64) -> Result<(f64, f64)> {
        let hw = HBAR * omega;
        let kt = K_B * t;
        let d = gap;
        let s1 = if t == 0.0 {
            0.0
        } else {
            // E = Δ·cosh u removes the 1/√(E − Δ) edge.
            let u_tail = (1.0 + TAIL_DECADES * std::f64::consts::LN_10 * kt / d).acosh();
            let g = |u: f64| {
                let e = d * u.cosh();
                let ep = e + hw;
                (e * e + d * d + hw * e) / ((ep - d) * (ep + d)).sqrt() * (fermi(e, kt) - fermi(ep, kt))
            };
            2.0 / hw * integrate(g, 0.0, u_tail, quad_opts())?.value
        };
        // E = m + r·sin θ on [Δ − ħω, Δ] removes both edges.
        let m = d - 0.5 * hw;
        let r = 0.5 * hw;
        let g = |th: f64| {
            let e = m + r * th.sin();
            let ep = e + hw;
            (e * e + d * d + hw * e) / ((d + e) * (ep + d)).sqrt() * (1.0 - 2.0 * fermi(ep, kt))
        };
        let s2 = integrate(g, -0.5 * PI, 0.5 * PI, quad_opts())?.value / hw;
        Ok((s1, s2))
    }

    /// Mattis–Bardeen complex conductivity σ₁ − iσ₂ in the sub-gap regime.
    pub fn complex_conductivity(&self, omega: f64, t: f64) -> Result<ComplexConductivity> {
        require_positive("omega", omega)?;
        let gap = self.gap(t)?.gap;
        self.require_subgap(omega, gap, t)?;
        let (s1, s2) = self.conductivity_ratios(omega, gap, t)?;
        Ok(ComplexConductivity {
            sigma1: s1 * self.params.sigma_n,
            sigma2: s2 * self.params.sigma_n,
            omega,
            temperature: t,
        })
    }

    /// Thin-film surface impedance √(iμ₀ω/σ)·coth(d·√(iωμ₀σ)) with σ = σ₁ − iσ₂.
    pub fn surface_impedance(&self, cond: &ComplexConductivity) -> SurfaceImpedance {
        surface_impedance_of(cond, self.params.thickness)
    }

    /// Quasiparticle density 4N₀∫_Δ^∞ E·f(E)/√(E² − Δ²) dE, μm⁻³.
    pub fn qp_density(&self, t: f64) -> Result<f64> {
        require_non_negative("temperature", t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let kt = K_B * t;
        let n0 = self.params.n0_per_um3();
        let d = self.gap(t)?.gap;
        if d == 0.0 {
            // Normal state: 4N₀∫₀^∞ f(E) dE = 4N₀·k_B T·ln 2.
            return Ok(4.0 * n0 * kt * std::f64::consts::LN_2);
        }
        let u_tail = (1.0 + TAIL_DECADES * std::f64::consts::LN_10 * kt / d).acosh();
        let integral = integrate(
            |u| {
                let e = d * u.cosh();
                e * fermi(e, kt)
            },
            0.0,
            u_tail,
            quad_opts(),
        )?
        .value;
        Ok(4.0 * n0 * integral)
    }

    /// Inverse of [`Superconductor::qp_density`] by bisection on [1 mK, T_c].
    pub fn qp_temperature(&self, density: f64) -> Result<f64> {
        require_non_negative("density", density)?;
        let tc = self.params.tc;
        let n_max = self.qp_density(tc)?;
        if density > n_max {
            return Err(Error::OutOfRange(format!("{density:.4e} μm⁻³ exceeds the density at T_c ({n_max:.4e} μm⁻³)")));
        }
        if density <= self.qp_density(T_FLOOR)? {
            return Ok(T_FLOOR);
        }
        bisect(|t| Ok(self.qp_density(t)? >= density), T_FLOOR, tc, 1e-13 * tc)
    }

    /// Recombination constant K = τ₀N₀(k_B T_c)³/(2Δ₀²), μm⁻³·s, so that τ = K/n.
    pub fn recombination_constant(&self) -> f64 {
        let p = &self.params;
        let ktc = K_B * p.tc;
        p.tau0 * p.n0_per_um3() * ktc.powi(3) / (2.0 * p.delta0 * p.delta0)
    }

    /// Quasiparticle lifetime K/n, optionally capped at `ceiling`.
    pub fn qp_lifetime(&self, density: f64, ceiling: Option<f64>) -> Result<f64> {
        require_non_negative("density", density)?;
        if let Some(c) = ceiling {
            require_positive("lifetime ceiling", c)?;
        }
        if density == 0.0 {
            return ceiling.ok_or_else(|| Error::Degenerate("lifetime is unbounded at zero density without a ceiling".into()));
        }
        let tau = self.recombination_constant() / density;
        Ok(ceiling.map_or(tau, |c| tau.min(c)))
    }

    fn surface_at(&self, omega: f64, t: f64) -> Result<SurfaceImpedance> {
        Ok(self.surface_impedance(&self.complex_conductivity(omega, t)?))
    }

    /// Resonance frequency and quasiparticle-limited Q of a resonator whose kinetic
    /// inductance fraction at T = 0 is `alpha_k` and whose cold resonance is `f0_cold`.
    pub fn resonator_response(&self, alpha_k: f64, f0_cold: f64, t: f64) -> Result<ResonatorResponse> {
        if !(alpha_k > 0.0 && alpha_k < 1.0) {
            return Err(Error::invalid("alpha_k", format!("must lie in (0, 1), got {alpha_k}")));
        }
        require_positive("f0_cold", f0_cold)?;
        require_non_negative("temperature", t)?;
        let omega = 2.0 * PI * f0_cold;
        let cold = self.surface_at(omega, 0.0)?;
        if t == 0.0 {
            return Ok(ResonatorResponse { temperature: t, f0: f0_cold, q_qp: f64::INFINITY, alpha_k, surface: cold });
        }
        let hot = self.surface_at(omega, t)?;
        let ratio = hot.ls / cold.ls;
        let l_rel = 1.0 - alpha_k + alpha_k * ratio;
        let alpha_t = alpha_k * ratio / l_rel;
        let q_qp = if hot.rs > 0.0 { omega * hot.ls / (alpha_t * hot.rs) } else { f64::INFINITY };
        Ok(ResonatorResponse { temperature: t, f0: f0_cold / l_rel.sqrt(), q_qp, alpha_k: alpha_t, surface: hot })
    }

    /// Highest temperature at which `omega` stays below the pair-breaking threshold.
    fn subgap_limit(&self, omega: f64) -> Result<f64> {
        let hw = HBAR * omega;
        let tc = self.params.tc;
        let t = bisect(|t| Ok(2.0 * self.gap(t)?.gap <= hw), T_FLOOR, tc, 1e-12 * tc)?;
        Ok(t - 1e-12 * tc)
    }

    /// Bath temperature, density and lifetime that reproduce a measured resonance frequency.
    pub fn invert_frequency_shift(&self, alpha_k: f64, f0_cold: f64, f0_measured: f64) -> Result<QuasiparticleState> {
        require_positive("f0_measured", f0_measured)?;
        if f0_measured > f0_cold {
            return Err(Error::invalid("f0_measured", "must not exceed the cold resonance frequency"));
        }
        let state = |t: f64| -> Result<QuasiparticleState> {
            let density = self.qp_density(t)?;
            let lifetime = match self.qp_lifetime(density, self.params.tau_max) {
                Ok(tau) => tau,
                Err(Error::Degenerate(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            Ok(QuasiparticleState { density, temperature: t, lifetime })
        };
        if self.resonator_response(alpha_k, f0_cold, T_FLOOR)?.f0 <= f0_measured {
            return state(T_FLOOR);
        }
        let t_hi = self.subgap_limit(2.0 * PI * f0_cold)?;
        let f_hi = self.resonator_response(alpha_k, f0_cold, t_hi)?.f0;
        if f0_measured < f_hi {
            return Err(Error::OutOfRange(format!(
                "a shift to {f0_measured:.6e} Hz needs more than the largest sub-gap shift (to {f_hi:.6e} Hz at {t_hi:.4} K)"
            )));
        }
        let tc = self.params.tc;
        let t = bisect(|t| Ok(self.resonator_response(alpha_k, f0_cold, t)?.f0 < f0_measured), T_FLOOR, t_hi, 1e-13 * tc)?;
        state(t)
    }
}

/// Surface impedance of a film of thickness `d` (separate from the film record so the
/// thickness dependence can be probed directly).
pub fn surface_impedance_of(cond: &ComplexConductivity, d: f64) -> SurfaceImpedance {
    let w = cond.omega;
    let sigma = Complex64::new(cond.sigma1, -cond.sigma2);
    let i = Complex64::i();
    let k = (i * w * MU_0 * sigma).sqrt();
    let z_bulk = (i * MU_0 * w / sigma).sqrt();
    // coth via e^{−2kd}, stable for Re(kd) > 0 and tending to 1 for thick films.
    let x = (-2.0 * k * d).exp();
    let coth = (1.0 + x) / (1.0 - x);
    let z = z_bulk * coth;
    SurfaceImpedance { rs: z.re, ls: z.im / w }
}
