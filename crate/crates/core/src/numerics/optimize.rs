//! Derivative-free maximization over a box: golden-section line searches inside
//! cyclic coordinate descent, restarted from seeded random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBound {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal `f` on `[a, b]` to `xtol`. Returns (argmax, max).
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `objective` over `bounds`. The first start is the box centre; the others are
/// drawn from a ChaCha stream seeded with `seed`, so results are reproducible. Objective
/// values that are NaN are treated as −∞.
pub fn coordinate_descent<F>(objective: F, bounds: &[BoxBound], starts: usize, seed: u64, rel_tol: f64) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64,
{
    if bounds.is_empty() {
        return Err(Error::invalid("bounds", "at least one free parameter is required"));
    }
    for (i, b) in bounds.iter().enumerate() {
        if !(b.lower.is_finite() && b.upper.is_finite() && b.lower < b.upper) {
            return Err(Error::invalid(format!("bounds[{i}]"), format!("empty or non-finite box [{}, {}]", b.lower, b.upper)));
        }
    }
    let eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<SearchResult> = None;
    let mut evaluations = 0;
    for s in 0..starts.max(1) {
        let mut x: Vec<f64> = bounds
            .iter()
            .map(|b| if s == 0 { 0.5 * (b.lower + b.upper) } else { rng.random_range(b.lower..b.upper) })
            .collect();
        let mut value = eval(&x, &mut evaluations);
        for _sweep in 0..50 {
            let before = value;
            for i in 0..bounds.len() {
                let b = bounds[i];
                let xtol = 1e-7 * (b.upper - b.lower);
                let mut probe = x.clone();
                let (xi, vi) = golden_section_max(
                    |t| {
                        probe[i] = t;
                        eval(&probe, &mut evaluations)
                    },
                    b.lower,
                    b.upper,
                    xtol,
                );
                if vi > value {
                    x[i] = xi;
                    value = vi;
                }
            }
            if (value - before).abs() <= rel_tol * value.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(SearchResult { x, value, evaluations: 0 });
        }
    }
    let mut best = best.expect("at least one start");
    best.evaluations = evaluations;
    if !best.value.is_finite() {
        return Err(Error::Numerical { context: "optimizer", detail: "objective is non-finite everywhere it was sampled".into() });
    }
    Ok(best)
}
