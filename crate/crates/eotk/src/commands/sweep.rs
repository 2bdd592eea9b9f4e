//! One CSV row per grid point. Rows are computed in parallel and kept in grid order; a
//! point the model rejects keeps its row, with NaN values and the reason in `error`.

use eotk_core::eo_model::{
    conversion_efficiency, efficiency_vs_pump_detuning, efficiency_vs_pump_power, efficiency_vs_rf_detuning, intracavity_photons,
    PumpConfig, StrayLightModel,
};
use eotk_core::quantities::{angular_to_hz, dbm_to_watts, db_loss_to_factor, hz_to_angular, DeviceParams, C_LIGHT};
use eotk_core::resonator::{slot_circuit_analysis, spiral_at_srf, spiral_resonance, SpiralGeometry};
use eotk_core::superconductor::Superconductor;
use rayon::prelude::*;

use super::Output;
use crate::config::{RunConfig, SweepTarget};
use crate::error::{CliError, CliResult};
use crate::io::{csv_string, fmt_f64};

type Row = Result<Vec<f64>, String>;

fn columns(target: SweepTarget, sized_to_srf: bool) -> Vec<&'static str> {
    match target {
        SweepTarget::PumpPower => {
            vec!["pump_power_dbm", "pump_power_at_cavity_w", "n_cav", "cooperativity", "efficiency", "microwave_total_loss_hz", "film_temperature_k"]
        }
        SweepTarget::RfDetuning => vec!["rf_detuning_hz", "efficiency"],
        SweepTarget::PumpWavelength => {
            vec!["pump_wavelength_m", "pump_detuning_hz", "n_cav", "efficiency_anti_stokes", "efficiency_stokes", "sideband_ratio_db"]
        }
        SweepTarget::Temperature => vec!["temperature_k", "f0_hz", "frequency_shift_hz", "q_qp", "q_internal", "q_loaded"],
        SweepTarget::OpticalPower => {
            vec!["optical_power_w", "absorbed_power_w", "film_temperature_k", "f0_hz", "frequency_shift_hz", "q_qp", "q_internal", "q_loaded"]
        }
        SweepTarget::Turns if sized_to_srf => {
            vec!["n_turns", "outer_diameter_m", "inductance_h", "self_capacitance_f", "srf_hz", "impedance_ohm", "feasible", "score_ohm"]
        }
        SweepTarget::Turns => vec!["n_turns", "outer_diameter_m", "inductance_h", "self_capacitance_f", "srf_hz", "impedance_ohm"],
        SweepTarget::Resistivity => vec!["resistivity_ohm_cm", "resistance_ohm", "q_mw", "f3db_hz", "voltage_fraction", "optical_q"],
    }
}

/// Microwave response of the film-loaded resonator at temperature `t`.
fn thermal_row(film: &Superconductor, dev: &DeviceParams, alpha_k: f64, t: f64) -> Result<[f64; 5], String> {
    let f0 = angular_to_hz(dev.microwave.omega());
    let r = film.resonator_response(alpha_k, f0, t).map_err(|e| e.to_string())?;
    let inv_qi = 1.0 / dev.microwave.intrinsic_q() + 1.0 / r.q_qp;
    let inv_ql = 1.0 / dev.microwave.loaded_q() + 1.0 / r.q_qp;
    Ok([r.f0, r.f0 - f0, r.q_qp, 1.0 / inv_qi, 1.0 / inv_ql])
}

fn rows(cfg: &RunConfig, target: SweepTarget, points: &[f64]) -> CliResult<Vec<Row>> {
    let dev = cfg.device_params()?;
    let detuning = cfg.pump_detuning();
    let err = |e: eotk_core::Error| e.to_string();
    let out: Vec<Row> = match target {
        SweepTarget::PumpPower => {
            let (g0, _) = cfg.conversion_g0(&dev)?;
            let dev = dev.with_g0(g0).map_err(|e| CliError::from_core(e, "device"))?;
            let loss = db_loss_to_factor(cfg.operating_point.input_chain_loss_db);
            let stray = match cfg.stray_light {
                Some(s) if s.enabled => Some((cfg.stray_light()?, cfg.film()?, cfg.alpha_k()?)),
                _ => None,
            };
            points
                .par_iter()
                .map(|&dbm| {
                    let p = dbm_to_watts(dbm).map_err(err)? * loss;
                    match &stray {
                        Some((s, film, alpha_k)) => {
                            let model = StrayLightModel { absorbed_fraction: s.absorbed_fraction, heating: s.heating, superconductor: film, alpha_k: *alpha_k, enabled: true };
                            let r = efficiency_vs_pump_power(&dev, detuning, &[p], &model).map_err(err)?[0];
                            Ok(vec![dbm, p, r.n_cav, r.cooperativity, r.efficiency, angular_to_hz(r.gamma_tot), r.qp_temperature])
                        }
                        None => {
                            let n = intracavity_photons(&PumpConfig { power: p, detuning }, &dev.optical).map_err(err)?;
                            let r = conversion_efficiency(&dev, n).map_err(err)?;
                            Ok(vec![dbm, p, n, r.cooperativity, r.efficiency, angular_to_hz(dev.microwave.total()), f64::NAN])
                        }
                    }
                })
                .collect()
        }
        SweepTarget::RfDetuning => {
            let (g0, _) = cfg.conversion_g0(&dev)?;
            let dev = dev.with_g0(g0).map_err(|e| CliError::from_core(e, "device"))?;
            let n = intracavity_photons(&PumpConfig { power: cfg.pump_power_w()?, detuning }, &dev.optical)
                .map_err(|e| CliError::from_core(e, "operating_point"))?;
            points
                .iter()
                .map(|&d| Ok(vec![d, efficiency_vs_rf_detuning(&dev, n, &[hz_to_angular(d)]).map_err(err)?[0].efficiency]))
                .collect()
        }
        SweepTarget::PumpWavelength => {
            let (g0, _) = cfg.conversion_g0(&dev)?;
            let dev = dev.with_g0(g0).map_err(|e| CliError::from_core(e, "device"))?;
            let power = cfg.pump_power_w()?;
            points
                .iter()
                .map(|&lam| {
                    if !(lam > 0.0) {
                        return Err(format!("wavelength {lam} m must be positive"));
                    }
                    let delta = 2.0 * std::f64::consts::PI * C_LIGHT / lam - dev.optical.omega();
                    let r = efficiency_vs_pump_detuning(&dev, power, &[delta]).map_err(err)?[0];
                    Ok(vec![lam, angular_to_hz(delta), r.n_cav, r.efficiency_anti_stokes, r.efficiency_stokes, r.ratio_db])
                })
                .collect()
        }
        SweepTarget::Temperature => {
            let film = cfg.film()?;
            let alpha_k = cfg.alpha_k()?;
            points
                .par_iter()
                .map(|&t| {
                    let r = thermal_row(&film, &dev, alpha_k, t)?;
                    Ok([&[t][..], &r[..]].concat())
                })
                .collect()
        }
        SweepTarget::OpticalPower => {
            let s = cfg.stray_light()?;
            let film = cfg.film()?;
            let alpha_k = cfg.alpha_k()?;
            points
                .par_iter()
                .map(|&p| {
                    if !(p >= 0.0) {
                        return Err(format!("optical power {p} W must be non-negative"));
                    }
                    let absorbed = if s.enabled { s.absorbed_fraction * p } else { 0.0 };
                    let t = s.heating.temperature(absorbed);
                    let r = thermal_row(&film, &dev, alpha_k, t)?;
                    Ok([&[p, absorbed, t][..], &r[..]].concat())
                })
                .collect()
        }
        SweepTarget::Turns => {
            let g = cfg.spiral_geometry()?;
            let target = cfg.sweep.as_ref().and_then(|s| s.srf_target_hz);
            let min_inner = cfg.sweep.as_ref().map_or(10e-6, |s| s.min_inner_diameter_m);
            points
                .par_iter()
                .map(|&n| match target {
                    Some(f) => {
                        let d = spiral_at_srf(n, g.wire_pitch, g.fill_factor, g.cladding_permittivity, min_inner, f).map_err(err)?;
                        let r = d.resonance;
                        let feasible = if d.feasible { 1.0 } else { 0.0 };
                        Ok(vec![n, d.geometry.outer_diameter, r.inductance, r.self_capacitance, r.srf_hz, r.impedance, feasible, d.score])
                    }
                    None => {
                        let geom = SpiralGeometry { n_turns: n, ..g };
                        geom.validate().map_err(err)?;
                        let r = spiral_resonance(&geom).map_err(err)?;
                        Ok(vec![n, geom.outer_diameter, r.inductance, r.self_capacitance, r.srf_hz, r.impedance])
                    }
                })
                .collect()
        }
        SweepTarget::Resistivity => {
            let c = cfg.slot_circuit()?;
            let table = cfg.slot.as_ref().and_then(|s| s.optical_q_table.clone());
            points
                .iter()
                .map(|&rho_cm| {
                    let rho = rho_cm * 1e-2;
                    let a = slot_circuit_analysis(&c, rho).map_err(err)?;
                    let q_opt = match &table {
                        Some(t) => t.optical_q(rho).unwrap_or(f64::NAN),
                        None => f64::NAN,
                    };
                    Ok(vec![rho_cm, a.resistance, a.q_mw, a.f3db_hz, a.voltage_fraction, q_opt])
                })
                .collect()
        }
    };
    Ok(out)
}

pub fn run(cfg: &RunConfig, target_override: Option<SweepTarget>) -> CliResult<Output> {
    let block = cfg.sweep.as_ref().ok_or_else(|| CliError::input("missing `sweep` block"))?;
    let target = target_override.unwrap_or(block.target);
    let points = block.points()?;
    let sized = target == SweepTarget::Turns && block.srf_target_hz.is_some();
    let mut header = columns(target, sized);
    let width = header.len();
    header.push("error");
    let mut failed = 0;
    let table: Vec<Vec<String>> = rows(cfg, target, &points)?
        .into_iter()
        .zip(&points)
        .map(|(r, &x)| match r {
            Ok(v) => {
                let mut cells: Vec<String> = v.iter().map(|&c| fmt_f64(c)).collect();
                cells.push(String::new());
                cells
            }
            Err(e) => {
                failed += 1;
                let mut cells = vec![fmt_f64(x)];
                cells.extend((1..width).map(|_| "NaN".to_string()));
                cells.push(e);
                cells
            }
        })
        .collect();
    let mut out = Output::ok(csv_string(&header, &table)?);
    if failed > 0 {
        out.notes.push(format!("{failed} of {} sweep points failed; see the `error` column", points.len()));
    }
    Ok(out)
}
