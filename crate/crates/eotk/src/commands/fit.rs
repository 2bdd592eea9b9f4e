use std::path::Path;

use eotk_core::dynamics::{fit_exponential, ExponentialFit};
use eotk_core::spectra::{fit_lineshape, FitPolicy, LineshapeFit, SpectrumKind};
use serde::Serialize;

use super::{flag_or_fail, Output};
use crate::error::CliResult;
use crate::io::{json_string, read_spectrum, read_time_series};

#[derive(Serialize)]
struct FanoRecord {
    status: &'static str,
    model: &'static str,
    kind: SpectrumKind,
    policy: FitPolicy,
    fit: LineshapeFit,
    kappa_total_hz: f64,
    loaded_q: f64,
    intrinsic_q: f64,
    external_q: f64,
}

#[derive(Serialize)]
struct ExponentialRecord {
    status: &'static str,
    model: &'static str,
    fit: ExponentialFit,
}

pub fn fano(input: &Path, policy: FitPolicy) -> CliResult<Output> {
    let s = read_spectrum(input)?;
    let fit = match fit_lineshape(&s, &policy) {
        Ok(f) => f,
        Err(e) => return flag_or_fail(e, "fit"),
    };
    let m = fit.model;
    let k = m.kappa_total();
    let rec = FanoRecord {
        status: "converged",
        model: "fano",
        kind: s.kind,
        policy,
        kappa_total_hz: k,
        loaded_q: m.f0 / k,
        intrinsic_q: m.f0 / m.kappa_i,
        external_q: m.f0 / m.kappa_e,
        fit,
    };
    Ok(Output::ok(json_string(&rec)?))
}

/// Fits `a·e^{−(t − t0)/τ} + c` over `[t0, t1]`, defaulting to the whole record.
pub fn exponential(input: &Path, start: Option<f64>, end: Option<f64>) -> CliResult<Output> {
    let ts = read_time_series(input)?;
    let window = (start.unwrap_or(ts.time[0]), end.unwrap_or(ts.time[ts.time.len() - 1]));
    match fit_exponential(&ts, window) {
        Ok(fit) => Ok(Output::ok(json_string(&ExponentialRecord { status: "converged", model: "exponential", fit })?)),
        Err(e) => flag_or_fail(e, "fit"),
    }
}
