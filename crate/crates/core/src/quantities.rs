//! Physical constants, unit conversions and the parameter records shared by every module.
//!
//! Rates are stored as angular frequencies (rad/s). The serde representation of the
//! records uses ordinary frequencies in Hz (`*_hz` fields); conversion happens in the
//! `TryFrom`/`From` impls, which also enforce the composition rules.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity, F/m.
pub const EPS_0: f64 = 8.854_187_812_8e-12;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;

/// CODATA 2018 constants as one value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    pub c: f64,
    pub mu0: f64,
    pub e_charge: f64,
}

pub const CODATA: PhysicalConstants =
    PhysicalConstants { hbar: HBAR, k_b: K_B, c: C_LIGHT, mu0: MU_0, e_charge: E_CHARGE };

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(p_dbm: f64) -> Result<f64> {
    if !p_dbm.is_finite() {
        return Err(Error::Domain(format!("power {p_dbm} dBm is not finite")));
    }
    Ok(1e-3 * 10f64.powf(p_dbm / 10.0))
}

/// Converts a power in watts to dBm. Zero and negative powers have no logarithm.
pub fn watts_to_dbm(p_w: f64) -> Result<f64> {
    if !(p_w.is_finite() && p_w > 0.0) {
        return Err(Error::Domain(format!("cannot express {p_w} W in dBm")));
    }
    Ok(10.0 * (p_w / 1e-3).log10())
}

/// Converts a dB loss into a linear transmission factor (3 dB → ~0.5).
pub fn db_loss_to_factor(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Angular loss rate 2π·f0/Q. Q = ∞ gives zero.
pub fn rate_from_q(f0_hz: f64, q: f64) -> Result<f64> {
    require_positive("f0", f0_hz)?;
    if q.is_nan() || q <= 0.0 {
        return Err(Error::invalid("q", format!("must be > 0, got {q}")));
    }
    Ok(2.0 * PI * f0_hz / q)
}

/// Quality factor from an angular loss rate: Q = 2π·f0/rate.
pub fn q_from_rate(f0_hz: f64, rate: f64) -> Result<f64> {
    require_positive("f0", f0_hz)?;
    require_positive("rate", rate)?;
    Ok(2.0 * PI * f0_hz / rate)
}

/// Photon flux P/(ħω) in photons per second.
pub fn photon_flux(power_w: f64, omega: f64) -> Result<f64> {
    require_positive("omega", omega)?;
    require_non_negative("power", power_w)?;
    Ok(power_w / (HBAR * omega))
}

#[inline]
pub fn hz_to_angular(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// How a resonator couples to its external ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingTopology {
    /// One port: total = intrinsic + external.
    SingleSided,
    /// Two identical ports: total = intrinsic + 2·external.
    TwoSided,
}

impl CouplingTopology {
    /// Number of external ports contributing `external` each.
    pub fn port_count(self) -> f64 {
        match self {
            CouplingTopology::SingleSided => 1.0,
            CouplingTopology::TwoSided => 2.0,
        }
    }
}

/// Relative mismatch allowed when a stated total rate is checked against its parts.
/// Table values are quoted to three significant figures.
pub const COMPOSITION_RTOL: f64 = 1e-9;

/// A resonant mode with intrinsic and external loss. All rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModeRecord", try_from = "ModeRecord")]
pub struct CavityMode {
    omega: f64,
    intrinsic: f64,
    external: f64,
    total: f64,
    topology: CouplingTopology,
}

/// The optical mode: ω_opt, κ_i, κ_e, κ_tot.
pub type OpticalMode = CavityMode;
/// The microwave mode: ω_MW, γ_i, γ_e, γ_tot.
pub type MicrowaveMode = CavityMode;

impl CavityMode {
    /// Builds a mode whose total rate follows from the composition rule.
    pub fn new(omega: f64, intrinsic: f64, external: f64, topology: CouplingTopology) -> Result<Self> {
        require_positive("omega", omega)?;
        require_positive("intrinsic", intrinsic)?;
        require_positive("external", external)?;
        let total = intrinsic + topology.port_count() * external;
        Ok(Self { omega, intrinsic, external, total, topology })
    }

    /// Builds a mode from a stated total, which must match the composition rule.
    pub fn with_total(
        omega: f64,
        intrinsic: f64,
        external: f64,
        total: f64,
        topology: CouplingTopology,
    ) -> Result<Self> {
        let mode = Self::new(omega, intrinsic, external, topology)?;
        require_positive("total", total)?;
        if ((total - mode.total) / mode.total).abs() > COMPOSITION_RTOL {
            return Err(Error::invalid(
                "total",
                format!(
                    "{:.6e} Hz does not equal intrinsic + {}·external = {:.6e} Hz",
                    angular_to_hz(total),
                    topology.port_count(),
                    angular_to_hz(mode.total)
                ),
            ));
        }
        Ok(mode)
    }

    /// Same as [`CavityMode::new`] with every argument in Hz (ω/2π).
    pub fn from_hz(f0: f64, intrinsic_hz: f64, external_hz: f64, topology: CouplingTopology) -> Result<Self> {
        Self::new(hz_to_angular(f0), hz_to_angular(intrinsic_hz), hz_to_angular(external_hz), topology)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn intrinsic(&self) -> f64 {
        self.intrinsic
    }
    pub fn external(&self) -> f64 {
        self.external
    }
    pub fn total(&self) -> f64 {
        self.total
    }
    pub fn topology(&self) -> CouplingTopology {
        self.topology
    }

    /// A copy with extra intrinsic loss added (e.g. quasiparticle loss).
    pub fn with_extra_intrinsic(&self, extra: f64) -> Result<Self> {
        require_non_negative("extra intrinsic loss", extra)?;
        Self::new(self.omega, self.intrinsic + extra, self.external, self.topology)
    }

    /// Loaded quality factor ω/total.
    pub fn loaded_q(&self) -> f64 {
        self.omega / self.total
    }

    /// Intrinsic quality factor ω/intrinsic.
    pub fn intrinsic_q(&self) -> f64 {
        self.omega / self.intrinsic
    }
}

/// Serialized form of a [`CavityMode`]; frequencies in Hz.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRecord {
    pub frequency_hz: f64,
    pub intrinsic_loss_hz: f64,
    pub external_loss_hz: f64,
    /// Optional; checked against the composition rule when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_loss_hz: Option<f64>,
    pub topology: CouplingTopology,
}

impl TryFrom<ModeRecord> for CavityMode {
    type Error = Error;
    fn try_from(r: ModeRecord) -> Result<Self> {
        let mode = CavityMode::from_hz(r.frequency_hz, r.intrinsic_loss_hz, r.external_loss_hz, r.topology)?;
        match r.total_loss_hz {
            Some(t) => CavityMode::with_total(mode.omega, mode.intrinsic, mode.external, hz_to_angular(t), r.topology),
            None => Ok(mode),
        }
    }
}

impl From<CavityMode> for ModeRecord {
    fn from(m: CavityMode) -> Self {
        ModeRecord {
            frequency_hz: angular_to_hz(m.omega),
            intrinsic_loss_hz: angular_to_hz(m.intrinsic),
            external_loss_hz: angular_to_hz(m.external),
            total_loss_hz: Some(angular_to_hz(m.total)),
            topology: m.topology,
        }
    }
}

/// Optical plus microwave mode, circuit impedance and (optionally) the single-photon coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "DeviceRecord", try_from = "DeviceRecord")]
pub struct DeviceParams {
    pub optical: OpticalMode,
    pub microwave: MicrowaveMode,
    impedance: f64,
    /// Single-photon coupling g0, rad/s.
    pub g0: Option<f64>,
}

impl DeviceParams {
    pub fn new(optical: OpticalMode, microwave: MicrowaveMode, impedance: f64, g0: Option<f64>) -> Result<Self> {
        require_positive("impedance", impedance)?;
        if let Some(g) = g0 {
            require_non_negative("g0", g)?;
        }
        Ok(Self { optical, microwave, impedance, g0 })
    }

    pub fn impedance(&self) -> f64 {
        self.impedance
    }

    pub fn with_g0(&self, g0: f64) -> Result<Self> {
        Self::new(self.optical, self.microwave, self.impedance, Some(g0))
    }

    pub fn with_microwave(&self, microwave: MicrowaveMode) -> Self {
        Self { microwave, ..*self }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceRecord {
    pub optical: ModeRecord,
    pub microwave: ModeRecord,
    pub impedance_ohm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0_hz: Option<f64>,
}

impl TryFrom<DeviceRecord> for DeviceParams {
    type Error = Error;
    fn try_from(r: DeviceRecord) -> Result<Self> {
        let optical = CavityMode::try_from(r.optical).map_err(|e| prefix_field(e, "optical"))?;
        let microwave = CavityMode::try_from(r.microwave).map_err(|e| prefix_field(e, "microwave"))?;
        DeviceParams::new(optical, microwave, r.impedance_ohm, r.g0_hz.map(hz_to_angular))
    }
}

impl From<DeviceParams> for DeviceRecord {
    fn from(d: DeviceParams) -> Self {
        DeviceRecord {
            optical: d.optical.into(),
            microwave: d.microwave.into(),
            impedance_ohm: d.impedance,
            g0_hz: d.g0.map(angular_to_hz),
        }
    }
}

/// Prepends a record path to the field named by an `InvalidInput` error.
pub fn prefix_field(err: Error, prefix: &str) -> Error {
    match err {
        Error::InvalidInput { field, reason } => Error::InvalidInput { field: format!("{prefix}.{field}"), reason },
        other => other,
    }
}

/// Superconducting film parameters. SI units except where noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "SuperconductorRecord", try_from = "SuperconductorRecord")]
pub struct SuperconductorParams {
    /// Normal-state conductivity σ_n, S/m.
    pub sigma_n: f64,
    /// Critical temperature, K.
    pub tc: f64,
    /// Zero-temperature gap Δ₀, J.
    pub delta0: f64,
    /// Single-spin density of states at the Fermi level, J⁻¹·m⁻³.
    pub n0: f64,
    /// Film thickness, m.
    pub thickness: f64,
    /// Electron-phonon time τ₀, s.
    pub tau0: f64,
    /// Reference sheet inductance at T = 0, H/square.
    pub ls_ref: f64,
    /// Debye temperature, K; sets the gap-equation cutoff.
    pub debye_temperature: f64,
    /// Optional quasiparticle lifetime ceiling, s.
    pub tau_max: Option<f64>,
}

/// Largest accepted deviation of Δ₀/(k_B·T_c) from the weak-coupling BCS value.
pub const BCS_RATIO: f64 = 1.764;
const BCS_RATIO_TOL: f64 = 0.02;

impl SuperconductorParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("sigma_n", self.sigma_n)?;
        require_positive("tc", self.tc)?;
        require_positive("delta0", self.delta0)?;
        require_positive("n0", self.n0)?;
        require_positive("thickness", self.thickness)?;
        require_positive("tau0", self.tau0)?;
        require_positive("ls_ref", self.ls_ref)?;
        require_positive("debye_temperature", self.debye_temperature)?;
        if let Some(t) = self.tau_max {
            require_positive("tau_max", t)?;
        }
        let ratio = self.delta0 / (K_B * self.tc);
        if ((ratio - BCS_RATIO) / BCS_RATIO).abs() > BCS_RATIO_TOL {
            return Err(Error::invalid(
                "delta0",
                format!("Δ₀/(k_B T_c) = {ratio:.4} is not within 2% of {BCS_RATIO}"),
            ));
        }
        if self.debye_temperature * K_B <= 2.0 * self.delta0 {
            return Err(Error::invalid("debye_temperature", "cutoff must be well above the gap"));
        }
        Ok(())
    }

    /// N₀ in the field's μm⁻³·J⁻¹ convention.
    pub fn n0_per_um3(&self) -> f64 {
        self.n0 * 1e-18
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperconductorRecord {
    pub sigma_n_s_per_m: f64,
    pub tc_k: f64,
    pub delta0_ev: f64,
    /// N₀ in states·eV⁻¹·μm⁻³.
    pub n0_per_ev_um3: f64,
    pub thickness_m: f64,
    pub tau0_s: f64,
    pub ls_ref_h_per_sq: f64,
    #[serde(default = "default_debye")]
    pub debye_temperature_k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max_s: Option<f64>,
}

fn default_debye() -> f64 {
    433.0
}

impl TryFrom<SuperconductorRecord> for SuperconductorParams {
    type Error = Error;
    fn try_from(r: SuperconductorRecord) -> Result<Self> {
        let p = SuperconductorParams {
            sigma_n: r.sigma_n_s_per_m,
            tc: r.tc_k,
            delta0: r.delta0_ev * E_CHARGE,
            n0: r.n0_per_ev_um3 / E_CHARGE * 1e18,
            thickness: r.thickness_m,
            tau0: r.tau0_s,
            ls_ref: r.ls_ref_h_per_sq,
            debye_temperature: r.debye_temperature_k,
            tau_max: r.tau_max_s,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<SuperconductorParams> for SuperconductorRecord {
    fn from(p: SuperconductorParams) -> Self {
        SuperconductorRecord {
            sigma_n_s_per_m: p.sigma_n,
            tc_k: p.tc,
            delta0_ev: p.delta0 / E_CHARGE,
            n0_per_ev_um3: p.n0 * E_CHARGE * 1e-18,
            thickness_m: p.thickness,
            tau0_s: p.tau0,
            ls_ref_h_per_sq: p.ls_ref,
            debye_temperature_k: p.debye_temperature,
            tau_max_s: p.tau_max,
        }
    }
}
