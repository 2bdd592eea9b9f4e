use std::path::Path;

use eotk_core::quantities::{dbm_to_watts, hz_to_angular};
use eotk_core::spectra::{calibrate_efficiency, CalibrationResult, PeakWindow, RfDrive};
use serde::Serialize;

use super::Output;
use crate::error::{CliResult, InBlock};
use crate::io::{json_string, read_spectrum};

#[derive(Debug, Clone, Copy)]
pub struct CalibrateArgs {
    pub center_hz: f64,
    pub half_width_hz: f64,
    pub reference_width_hz: f64,
    pub rf_power_dbm: f64,
    pub rf_frequency_hz: f64,
    pub loss_uncertainty_db: f64,
}

#[derive(Serialize)]
struct Record {
    rf_power_dbm: f64,
    rf_frequency_hz: f64,
    loss_uncertainty_db: f64,
    result: CalibrationResult,
}

pub fn run(signal: &Path, dark: &Path, a: CalibrateArgs) -> CliResult<Output> {
    let s = read_spectrum(signal)?;
    let d = read_spectrum(dark)?;
    let window = PeakWindow::around(a.center_hz, a.half_width_hz, a.reference_width_hz);
    let drive = RfDrive {
        power_w: dbm_to_watts(a.rf_power_dbm).in_block("rf_power_dbm")?,
        omega: hz_to_angular(a.rf_frequency_hz),
        loss_uncertainty_db: a.loss_uncertainty_db,
    };
    let result = calibrate_efficiency(&s, &d, &window, &drive).in_block("")?;
    let mut out = Output::ok(json_string(&Record {
        rf_power_dbm: a.rf_power_dbm,
        rf_frequency_hz: a.rf_frequency_hz,
        loss_uncertainty_db: a.loss_uncertainty_db,
        result,
    })?);
    if result.no_reference {
        out.notes.push("no power above dark in the reference bands: efficiency has no flux scale".into());
    } else if result.below_noise_floor {
        out.notes.push("integrated excess is negative: efficiency clamped to zero".into());
    }
    Ok(out)
}
