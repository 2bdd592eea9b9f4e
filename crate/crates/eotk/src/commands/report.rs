//! Device summary: the echoed record, derived quantities and pass/fail checks.

use eotk_core::eo_model::{conversion_efficiency, infer_g0, intracavity_photons, sideband_ratio, zero_point_voltage, PumpConfig};
use eotk_core::quantities::{angular_to_hz, photon_flux, DeviceParams, DeviceRecord, ModeRecord};
use eotk_core::resonator::{
    cpw_line_params, loaded_quarterwave_frequency, slot_circuit_analysis, spiral_resonance, CpwGeometry, SlotAnalysis,
    SpiralResonance,
};
use serde::Serialize;

use super::Output;
use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::{CliResult, InBlock, EXIT_NUMERICAL};
use crate::io::json_string;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConversionSummary {
    pub g0_hz: f64,
    pub cooperativity: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CpwSummary {
    pub z0_ohm: f64,
    pub phase_velocity_m_per_s: f64,
    pub unloaded_frequency_hz: f64,
    pub loaded_frequency_hz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub v_zpf_v: f64,
    pub g0_device_hz: Option<f64>,
    pub g_v_from_tuning_hz_per_v: Option<f64>,
    pub g0_predicted_from_tuning_hz: Option<f64>,
    pub g0_from_polymer_hz: Option<f64>,
    pub pump_power_at_cavity_w: f64,
    pub n_cav: f64,
    pub rf_photon_flux_per_s: f64,
    pub with_device_g0: Option<ConversionSummary>,
    pub with_predicted_g0: Option<ConversionSummary>,
    pub g0_inferred_from_reference_efficiency_hz: Option<f64>,
    pub conversion_bandwidth_fwhm_hz: f64,
    pub sideband_ratio_db: f64,
    pub optical_loaded_q: f64,
    pub optical_intrinsic_q: f64,
    pub microwave_loaded_q: f64,
    pub microwave_intrinsic_q: f64,
    pub alpha_k: Option<f64>,
    pub cpw: Option<CpwSummary>,
    pub spiral: Option<SpiralResonance>,
    pub slot_at_analysis_frequency: Option<Vec<SlotRow>>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlotRow {
    pub resistivity_ohm_cm: f64,
    pub analysis: SlotAnalysis,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub device: DeviceRecord,
    pub derived: Derived,
    pub checks: Vec<Check>,
}

fn composition_check(name: &str, r: &ModeRecord) -> Check {
    let ports = r.topology.port_count();
    let sum = r.intrinsic_loss_hz + ports * r.external_loss_hz;
    let ext = if ports == 1.0 { format!("{:e}", r.external_loss_hz) } else { format!("{ports}·{:e}", r.external_loss_hz) };
    match r.total_loss_hz {
        Some(t) => {
            let pass = ((t - sum) / t).abs() <= eotk_core::quantities::COMPOSITION_RTOL;
            Check { name: format!("{name} rate composition"), pass, detail: format!("{:e} + {ext} = {sum:e} Hz, stated {t:e} Hz", r.intrinsic_loss_hz) }
        }
        None => Check { name: format!("{name} rate composition"), pass: true, detail: format!("{:e} + {ext} = {sum:e} Hz (total derived)", r.intrinsic_loss_hz) },
    }
}

fn relative_check(name: &str, value: f64, reference: f64, tol: f64, unit: &str) -> Check {
    let err = ((value - reference) / reference).abs();
    Check { name: name.into(), pass: err <= tol, detail: format!("{value:.4e} {unit} vs {reference:.4e} {unit}, |rel err| {err:.3} (tolerance {tol})") }
}

fn summary(dev: &DeviceParams, g0: f64, n_cav: f64) -> CliResult<ConversionSummary> {
    let r = conversion_efficiency(&dev.with_g0(g0).in_block("device")?, n_cav).in_block("device")?;
    Ok(ConversionSummary { g0_hz: angular_to_hz(g0), cooperativity: r.cooperativity, efficiency: r.efficiency })
}

fn cpw_summary(g: &CpwGeometry, eps_r: f64, alpha_k: f64) -> CliResult<CpwSummary> {
    let line = cpw_line_params(g, eps_r).in_block("cpw")?;
    let v = 1.0 / (line.l_per_m * line.c_per_m).sqrt();
    let unloaded = CpwGeometry { load_capacitance: 0.0, ..*g };
    Ok(CpwSummary {
        z0_ohm: line.z0,
        phase_velocity_m_per_s: v,
        unloaded_frequency_hz: loaded_quarterwave_frequency(&unloaded, alpha_k).in_block("cpw.geometry")?,
        loaded_frequency_hz: loaded_quarterwave_frequency(g, alpha_k).in_block("cpw.geometry")?,
    })
}

pub fn build(cfg: &RunConfig) -> CliResult<Report> {
    let dev = cfg.device_params()?;
    let omega_mw = dev.microwave.omega();
    let v_zpf = zero_point_voltage(omega_mw, dev.impedance()).in_block("device")?;
    let g0_tuning = cfg.g0_from_tuning(&dev)?;
    let g0_polymer = cfg.g0_from_polymer(&dev)?;
    let power = cfg.pump_power_w()?;
    let n_cav = intracavity_photons(&PumpConfig { power, detuning: cfg.pump_detuning() }, &dev.optical).in_block("operating_point")?;
    let rf_flux = photon_flux(cfg.rf_power_w()?, omega_mw).in_block("operating_point")?;
    let with_device = dev.g0.map(|g| summary(&dev, g, n_cav)).transpose()?;
    let with_predicted = g0_tuning.map(|g| summary(&dev, g, n_cav)).transpose()?;
    let reference = cfg.reference;
    let g0_inferred = match reference.and_then(|r| r.efficiency) {
        Some(eta) if n_cav > 0.0 => Some(angular_to_hz(infer_g0(eta, &dev, n_cav).in_block("reference")?)),
        _ => None,
    };
    let ratio = sideband_ratio(&dev.optical, omega_mw, -omega_mw);

    let alpha_k = if cfg.alpha_k.is_some() || cfg.cpw.is_some() { Some(cfg.alpha_k()?) } else { None };
    let cpw = match (&cfg.cpw, alpha_k) {
        (Some(c), Some(a)) => Some(cpw_summary(&c.geometry, c.substrate_eps_r, a)?),
        _ => None,
    };
    let spiral = cfg.spiral.map(|g| spiral_resonance(&g).in_block("spiral")).transpose()?;
    let slot = match cfg.slot {
        Some(_) => {
            let c = cfg.slot_circuit()?;
            let rows = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 12.5, 100.0, 1e3]
                .iter()
                .map(|&r| Ok(SlotRow { resistivity_ohm_cm: r, analysis: slot_circuit_analysis(&c, r * 1e-2).in_block("slot")? }))
                .collect::<CliResult<Vec<_>>>()?;
            Some(rows)
        }
        None => None,
    };

    let record = DeviceRecord::from(dev);
    let mut checks = vec![composition_check("optical", &cfg.device.optical), composition_check("microwave", &cfg.device.microwave)];
    if let Some(r) = reference {
        if let (Some(want), Some(got)) = (r.g0_predicted_hz, g0_tuning) {
            checks.push(relative_check("g0 predicted from tuning", angular_to_hz(got), want, r.g0_tolerance_rel, "Hz"));
        }
        if let (Some(want), Some(got)) = (r.efficiency, with_device) {
            checks.push(relative_check("efficiency with device g0", got.efficiency, want, r.efficiency_tolerance_rel, ""));
        }
        if let Some(want) = r.sideband_ratio_db {
            let err = (ratio - want).abs();
            checks.push(Check {
                name: "sideband ratio".into(),
                pass: err <= r.sideband_ratio_tolerance_db,
                detail: format!("{ratio:.3} dB vs {want} dB (tolerance {} dB)", r.sideband_ratio_tolerance_db),
            });
        }
    }
    if let Some(c) = cpw {
        checks.push(relative_check("cpw loaded frequency", c.loaded_frequency_hz, angular_to_hz(omega_mw), 0.10, "Hz"));
    }

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        device: record,
        derived: Derived {
            v_zpf_v: v_zpf,
            g0_device_hz: dev.g0.map(angular_to_hz),
            g_v_from_tuning_hz_per_v: g0_tuning.map(|g| angular_to_hz(g) / v_zpf),
            g0_predicted_from_tuning_hz: g0_tuning.map(angular_to_hz),
            g0_from_polymer_hz: g0_polymer.map(angular_to_hz),
            pump_power_at_cavity_w: power,
            n_cav,
            rf_photon_flux_per_s: rf_flux,
            with_device_g0: with_device,
            with_predicted_g0: with_predicted,
            g0_inferred_from_reference_efficiency_hz: g0_inferred,
            conversion_bandwidth_fwhm_hz: angular_to_hz(dev.microwave.total()),
            sideband_ratio_db: ratio,
            optical_loaded_q: dev.optical.loaded_q(),
            optical_intrinsic_q: dev.optical.intrinsic_q(),
            microwave_loaded_q: dev.microwave.loaded_q(),
            microwave_intrinsic_q: dev.microwave.intrinsic_q(),
            alpha_k,
            cpw,
            spiral,
            slot_at_analysis_frequency: slot,
        },
        checks,
    })
}

pub fn run(cfg: &RunConfig) -> CliResult<Output> {
    let report = build(cfg)?;
    let notes: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail))
        .collect();
    let code = if report.checks.iter().all(|c| c.pass) { 0 } else { EXIT_NUMERICAL };
    Ok(Output { text: json_string(&report)?, notes, code })
}
