//! JSON run configuration. Unknown keys are rejected and every error names the path of
//! the offending field.

use std::path::Path;

use eotk_core::eo_model::{gv_from_wavelength_tuning, tuning_rate_approx, zero_point_voltage, HeatingMap, PolymerParams};
use eotk_core::quantities::{dbm_to_watts, db_loss_to_factor, hz_to_angular, DeviceParams, DeviceRecord, SuperconductorParams, SuperconductorRecord};
use eotk_core::resonator::{cpw_kinetic_fraction, CpwGeometry, OpticalQTable, SlotCircuit, SlotGeometry, SpiralGeometry};
use eotk_core::superconductor::Superconductor;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult, InBlock};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub device: DeviceRecord,
    pub operating_point: OperatingPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polymer: Option<PolymerBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superconductor: Option<SuperconductorRecord>,
    /// Kinetic inductance fraction; taken from the `cpw` block when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stray_light: Option<StrayLightBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpw: Option<CpwBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spiral: Option<SpiralGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<SlotBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeBlock>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPoint {
    pub pump_power_dbm: f64,
    /// Loss between the quoted pump power and the cavity input, dB.
    #[serde(default)]
    pub input_chain_loss_db: f64,
    #[serde(default)]
    pub pump_detuning_hz: f64,
    pub rf_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolymerBlock {
    pub r33_film_m_per_v: f64,
    pub poling_efficiency: f64,
    pub n_e: f64,
    pub n_o: f64,
    pub mode_energy_fraction: f64,
    pub electrode_gap_m: f64,
    #[serde(default = "default_screening")]
    pub screening: f64,
}

fn default_screening() -> f64 {
    eotk_core::eo_model::DEFAULT_SCREENING
}

/// Measured resonance shift per applied volt.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningBlock {
    pub wavelength_tuning_m_per_v: f64,
    pub wavelength_m: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrayLightBlock {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub absorbed_fraction: f64,
    pub heating: HeatingMap,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpwBlock {
    pub geometry: CpwGeometry,
    pub substrate_eps_r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotBlock {
    pub geometry: SlotGeometry,
    pub electrode_capacitance_f: f64,
    pub analysis_frequency_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optical_q_table: Option<OpticalQTable>,
}

/// Expected values the report checks against.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceBlock {
    #[serde(default)]
    pub g0_predicted_hz: Option<f64>,
    #[serde(default = "default_g0_tol")]
    pub g0_tolerance_rel: f64,
    #[serde(default)]
    pub efficiency: Option<f64>,
    #[serde(default = "default_eta_tol")]
    pub efficiency_tolerance_rel: f64,
    #[serde(default)]
    pub sideband_ratio_db: Option<f64>,
    #[serde(default = "default_ratio_tol")]
    pub sideband_ratio_tolerance_db: f64,
}

fn default_g0_tol() -> f64 {
    0.05
}
fn default_eta_tol() -> f64 {
    0.5
}
fn default_ratio_tol() -> f64 {
    1.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepTarget {
    PumpPower,
    RfDetuning,
    PumpWavelength,
    Temperature,
    OpticalPower,
    Turns,
    Resistivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

/// Grid units: dBm for pump_power, Hz for rf_detuning, m for pump_wavelength, K for
/// temperature, W for optical_power, turns, Ω·cm for resistivity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub target: SweepTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Turns sweeps only: size each spiral to this self-resonance instead of keeping
    /// the outer diameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srf_target_hz: Option<f64>,
    #[serde(default = "default_min_inner")]
    pub min_inner_diameter_m: f64,
}

impl SweepBlock {
    pub fn points(&self) -> CliResult<Vec<f64>> {
        let pts = match (&self.values, &self.grid) {
            (Some(v), None) => v.clone(),
            (None, Some(g)) => {
                if g.points == 0 {
                    return Err(CliError::input("invalid `sweep.grid.points`: grid is empty"));
                }
                if !(g.start.is_finite() && g.stop.is_finite()) {
                    return Err(CliError::input("invalid `sweep.grid`: start and stop must be finite"));
                }
                let n = g.points;
                let at = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                match g.scale {
                    Scale::Linear => (0..n).map(|i| g.start + (g.stop - g.start) * at(i)).collect(),
                    Scale::Log => {
                        if g.start <= 0.0 || g.stop <= 0.0 {
                            return Err(CliError::input("invalid `sweep.grid`: log grids need positive ends"));
                        }
                        (0..n).map(|i| (g.start.ln() + (g.stop.ln() - g.start.ln()) * at(i)).exp()).collect()
                    }
                }
            }
            _ => return Err(CliError::input("invalid `sweep`: give exactly one of `values` and `grid`")),
        };
        if pts.is_empty() {
            return Err(CliError::input("invalid `sweep.values`: grid is empty"));
        }
        if let Some(i) = pts.iter().position(|v| !v.is_finite()) {
            return Err(CliError::input(format!("invalid `sweep.values[{i}]`: must be finite")));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Objective {
    MaxEta,
    MaxImpedanceAtSrf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterBox {
    /// Dotted path of a numeric config field, e.g. `device.impedance_ohm`.
    pub path: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeBlock {
    pub objective: Objective,
    pub parameters: Vec<ParameterBox>,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srf_target_hz: Option<f64>,
    #[serde(default = "default_min_inner")]
    pub min_inner_diameter_m: f64,
}

fn default_starts() -> usize {
    5
}
fn default_min_inner() -> f64 {
    10e-6
}

/// Reads a config file as raw JSON.
pub fn read_value(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("config {} is not valid JSON: {e}", path.display())))
}

impl RunConfig {
    pub fn from_value(value: Value) -> CliResult<Self> {
        let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::input(format!("invalid `{path}`: {}", e.into_inner()))
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::input(format!(
                "invalid `schema_version`: {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_value(read_value(path)?)
    }

    pub fn device_params(&self) -> CliResult<DeviceParams> {
        DeviceParams::try_from(self.device.clone()).in_block("device")
    }

    /// Pump power arriving at the cavity, W.
    pub fn pump_power_w(&self) -> CliResult<f64> {
        let p = dbm_to_watts(self.operating_point.pump_power_dbm).in_block("operating_point")?;
        Ok(p * db_loss_to_factor(self.operating_point.input_chain_loss_db))
    }

    pub fn pump_detuning(&self) -> f64 {
        hz_to_angular(self.operating_point.pump_detuning_hz)
    }

    pub fn rf_power_w(&self) -> CliResult<f64> {
        dbm_to_watts(self.operating_point.rf_power_dbm).in_block("operating_point")
    }

    pub fn polymer_params(&self) -> CliResult<Option<PolymerParams>> {
        let Some(b) = self.polymer else { return Ok(None) };
        let field = PolymerParams::parallel_plate_field(b.electrode_gap_m, b.screening).in_block("polymer")?;
        let p = PolymerParams {
            r33_film: b.r33_film_m_per_v,
            poling_efficiency: b.poling_efficiency,
            n_e: b.n_e,
            n_o: b.n_o,
            mode_energy_fraction: b.mode_energy_fraction,
            field_per_volt: field,
        };
        p.validate().in_block("polymer")?;
        Ok(Some(p))
    }

    /// g0 (rad/s) implied by the measured tuning rate and the circuit impedance.
    pub fn g0_from_tuning(&self, dev: &DeviceParams) -> CliResult<Option<f64>> {
        let Some(t) = self.tuning else { return Ok(None) };
        let gv = gv_from_wavelength_tuning(t.wavelength_tuning_m_per_v, t.wavelength_m).in_block("tuning")?;
        let vz = zero_point_voltage(dev.microwave.omega(), dev.impedance()).in_block("device")?;
        Ok(Some(gv * vz))
    }

    /// g0 (rad/s) from the polymer cladding estimate.
    pub fn g0_from_polymer(&self, dev: &DeviceParams) -> CliResult<Option<f64>> {
        let Some(p) = self.polymer_params()? else { return Ok(None) };
        let gv = tuning_rate_approx(&p, dev.optical.omega()).in_block("polymer")?;
        let vz = zero_point_voltage(dev.microwave.omega(), dev.impedance()).in_block("device")?;
        Ok(Some(gv * vz))
    }

    /// g0 (rad/s) for efficiency predictions, with its source: the device value, else the
    /// tuning estimate, else the polymer estimate.
    pub fn conversion_g0(&self, dev: &DeviceParams) -> CliResult<(f64, &'static str)> {
        if let Some(g) = dev.g0 {
            return Ok((g, "device"));
        }
        if let Some(g) = self.g0_from_tuning(dev)? {
            return Ok((g, "tuning"));
        }
        if let Some(g) = self.g0_from_polymer(dev)? {
            return Ok((g, "polymer"));
        }
        Err(CliError::input("missing `device.g0_hz` (or a `tuning` or `polymer` block to predict it)"))
    }

    pub fn superconductor_params(&self) -> CliResult<SuperconductorParams> {
        let rec = self.superconductor.clone().ok_or_else(|| CliError::input("missing `superconductor` block"))?;
        SuperconductorParams::try_from(rec).in_block("superconductor")
    }

    pub fn film(&self) -> CliResult<Superconductor> {
        Superconductor::new(self.superconductor_params()?).in_block("superconductor")
    }

    pub fn alpha_k(&self) -> CliResult<f64> {
        if let Some(a) = self.alpha_k {
            if !(a > 0.0 && a < 1.0) {
                return Err(CliError::input(format!("invalid `alpha_k`: must lie in (0, 1), got {a}")));
            }
            return Ok(a);
        }
        match &self.cpw {
            Some(c) => cpw_kinetic_fraction(&c.geometry).in_block("cpw.geometry"),
            None => Err(CliError::input("missing `alpha_k` (or a `cpw` block to derive it from)")),
        }
    }

    pub fn stray_light(&self) -> CliResult<StrayLightBlock> {
        let s = self.stray_light.ok_or_else(|| CliError::input("missing `stray_light` block"))?;
        s.heating.validate().in_block("stray_light.heating")?;
        if !(0.0..=1.0).contains(&s.absorbed_fraction) {
            return Err(CliError::input("invalid `stray_light.absorbed_fraction`: must lie in [0, 1]"));
        }
        Ok(s)
    }

    pub fn spiral_geometry(&self) -> CliResult<SpiralGeometry> {
        self.spiral.ok_or_else(|| CliError::input("missing `spiral` block"))
    }

    pub fn slot_circuit(&self) -> CliResult<SlotCircuit> {
        let s = self.slot.as_ref().ok_or_else(|| CliError::input("missing `slot` block"))?;
        let c = SlotCircuit::from_geometry(&s.geometry, s.electrode_capacitance_f, s.analysis_frequency_hz);
        c.validate().in_block("slot")?;
        Ok(c)
    }
}

/// Overwrites the numeric field at a dotted `path`. The field must already exist.
pub fn apply_path(value: &mut Value, path: &str, x: f64) -> CliResult<()> {
    let mut node = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        let here = parts[..=i].join(".");
        node = match node {
            Value::Object(map) => map.get_mut(*key).ok_or_else(|| CliError::input(format!("parameter path `{here}` does not exist in the config")))?,
            _ => return Err(CliError::input(format!("parameter path `{here}` does not exist in the config"))),
        };
    }
    if !node.is_number() {
        return Err(CliError::input(format!("parameter path `{path}` is not a number")));
    }
    *node = serde_json::Number::from_f64(x).map(Value::Number).ok_or_else(|| CliError::input(format!("`{path}`: {x} is not finite")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Value {
        serde_json::json!({
            "schema_version": 1,
            "device": {
                "optical": {"frequency_hz": 1.926e14, "intrinsic_loss_hz": 2.07e9, "external_loss_hz": 7.61e9, "topology": "single_sided"},
                "microwave": {"frequency_hz": 6.672e9, "intrinsic_loss_hz": 2.53e6, "external_loss_hz": 1.91e6, "topology": "two_sided"},
                "impedance_ohm": 100.0
            },
            "operating_point": {"pump_power_dbm": -26.0, "rf_power_dbm": -31.0}
        })
    }

    #[test]
    fn unknown_key_names_its_path() {
        let mut v = minimal();
        v["device"]["optical"]["q_factor"] = 1.0.into();
        let e = RunConfig::from_value(v).unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.contains("device.optical"), "{}", e.message);
    }

    #[test]
    fn composition_violation_names_optical_block() {
        let mut v = minimal();
        v["device"]["optical"]["total_loss_hz"] = 9.0e9.into();
        let cfg = RunConfig::from_value(v).unwrap();
        let e = cfg.device_params().unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.contains("device.optical"), "{}", e.message);
    }

    #[test]
    fn apply_path_requires_existing_numeric_field() {
        let mut v = minimal();
        apply_path(&mut v, "device.impedance_ohm", 250.0).unwrap();
        assert_eq!(v["device"]["impedance_ohm"], 250.0);
        assert!(apply_path(&mut v, "device.impedence_ohm", 1.0).is_err());
        assert!(apply_path(&mut v, "device.optical", 1.0).is_err());
    }

    #[test]
    fn sweep_grids() {
        let b = SweepBlock { target: SweepTarget::PumpPower, values: None, grid: Some(GridSpec { start: 1.0, stop: 100.0, points: 3, scale: Scale::Log }), srf_target_hz: None, min_inner_diameter_m: 10e-6 };
        let p = b.points().unwrap();
        assert!((p[1] - 10.0).abs() < 1e-12);
        let empty = SweepBlock { values: Some(vec![]), grid: None, ..b };
        assert_eq!(empty.points().unwrap_err().code, 2);
    }
}
