//! Coordinate-descent search over a box of config fields.

use eotk_core::eo_model::{conversion_efficiency, intracavity_photons, PumpConfig};
use eotk_core::numerics::{coordinate_descent, BoxBound};
use eotk_core::quantities::angular_to_hz;
use eotk_core::resonator::{spiral_at_srf, SrfDesign};
use serde::Serialize;
use serde_json::Value;

use super::Output;
use crate::config::{apply_path, Objective, OptimizeBlock, RunConfig};
use crate::error::{CliError, CliResult, InBlock};
use crate::io::json_string;

const REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EtaPoint {
    pub g0_hz: f64,
    pub g0_source: &'static str,
    pub impedance_ohm: f64,
    pub n_cav: f64,
    pub cooperativity: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(untagged)]
pub enum AtOptimum {
    Efficiency(EtaPoint),
    Spiral(SrfDesign),
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterValue {
    pub path: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub at_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeRecord {
    pub objective: Objective,
    pub seed: u64,
    pub starts: usize,
    pub objective_value: f64,
    pub evaluations: usize,
    pub argmax: Vec<ParameterValue>,
    pub at_optimum: AtOptimum,
}

/// Efficiency at the operating point. The tuning estimate of g0 is preferred because it
/// scales with the impedance; a fixed device g0 would not.
fn eta_point(cfg: &RunConfig) -> CliResult<EtaPoint> {
    let dev = cfg.device_params()?;
    let (g0, source) = match cfg.g0_from_tuning(&dev)? {
        Some(g) => (g, "tuning"),
        None => cfg.conversion_g0(&dev)?,
    };
    let n = intracavity_photons(&PumpConfig { power: cfg.pump_power_w()?, detuning: cfg.pump_detuning() }, &dev.optical)
        .in_block("operating_point")?;
    let r = conversion_efficiency(&dev.with_g0(g0).in_block("device")?, n).in_block("device")?;
    Ok(EtaPoint { g0_hz: angular_to_hz(g0), g0_source: source, impedance_ohm: dev.impedance(), n_cav: n, cooperativity: r.cooperativity, efficiency: r.efficiency })
}

fn spiral_point(cfg: &RunConfig, block: &OptimizeBlock) -> CliResult<SrfDesign> {
    let g = cfg.spiral_geometry()?;
    let target = block.srf_target_hz.ok_or_else(|| CliError::input("missing `optimize.srf_target_hz`"))?;
    spiral_at_srf(g.n_turns, g.wire_pitch, g.fill_factor, g.cladding_permittivity, block.min_inner_diameter_m, target).in_block("spiral")
}

fn evaluate(cfg: &RunConfig, block: &OptimizeBlock) -> CliResult<(f64, AtOptimum)> {
    match block.objective {
        Objective::MaxEta => eta_point(cfg).map(|p| (p.efficiency, AtOptimum::Efficiency(p))),
        Objective::MaxImpedanceAtSrf => spiral_point(cfg, block).map(|d| (d.score, AtOptimum::Spiral(d))),
    }
}

fn configure(base: &Value, params: &[crate::config::ParameterBox], x: &[f64]) -> CliResult<RunConfig> {
    let mut v = base.clone();
    for (p, &xi) in params.iter().zip(x) {
        apply_path(&mut v, &p.path, xi)?;
    }
    RunConfig::from_value(v)
}

pub fn run(raw: &Value, seed: u64, objective_override: Option<Objective>) -> CliResult<Output> {
    let cfg = RunConfig::from_value(raw.clone())?;
    let mut block = cfg.optimize.clone().ok_or_else(|| CliError::input("missing `optimize` block"))?;
    if let Some(o) = objective_override {
        block.objective = o;
    }
    if block.parameters.is_empty() {
        return Err(CliError::input("invalid `optimize.parameters`: at least one bounded parameter is required"));
    }
    let mut bounds = Vec::with_capacity(block.parameters.len());
    for (i, p) in block.parameters.iter().enumerate() {
        if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
            return Err(CliError::input(format!(
                "invalid `optimize.parameters[{i}]`: box [{}, {}] for `{}` must be finite and non-empty",
                p.lower, p.upper, p.path
            )));
        }
        bounds.push(BoxBound { lower: p.lower, upper: p.upper });
    }
    // Paths must resolve before the search starts; the box centre also checks the model.
    let centre: Vec<f64> = bounds.iter().map(|b| 0.5 * (b.lower + b.upper)).collect();
    evaluate(&configure(raw, &block.parameters, &centre)?, &block)?;

    let objective = |x: &[f64]| match configure(raw, &block.parameters, x).and_then(|c| evaluate(&c, &block)) {
        Ok((v, _)) => v,
        Err(_) => f64::NAN,
    };
    let best = coordinate_descent(objective, &bounds, block.starts, seed, REL_TOL).in_block("optimize")?;
    let (value, at) = evaluate(&configure(raw, &block.parameters, &best.x)?, &block)?;
    let argmax = block
        .parameters
        .iter()
        .zip(&best.x)
        .map(|(p, &x)| {
            let span = p.upper - p.lower;
            ParameterValue { path: p.path.clone(), value: x, lower: p.lower, upper: p.upper, at_bound: (x - p.lower).min(p.upper - x) <= 1e-6 * span }
        })
        .collect();
    let rec = OptimizeRecord { objective: block.objective, seed, starts: block.starts, objective_value: value, evaluations: best.evaluations, argmax, at_optimum: at };
    Ok(Output::ok(json_string(&rec)?))
}
