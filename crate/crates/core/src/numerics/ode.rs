//! Adaptive Dormand–Prince 5(4) integrator with dense output at requested times.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rtol: f64,
    /// Absolute tolerance per state component.
    pub atol: Vec<f64>,
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn new(rtol: f64, atol: Vec<f64>) -> Self {
        Self { rtol, atol, initial_step: None, min_step: 1e-18, max_steps: 5_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    /// State at each requested output time.
    pub outputs: Vec<Vec<f64>>,
    /// State at the end of the interval.
    pub final_state: Vec<f64>,
    pub steps: usize,
    /// Step size that was accepted last; a good start for the next segment.
    pub last_step: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output coefficients (Hairer & Wanner, DOPRI5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `rhs(t, y, dy)` from `t0` to `t1`, sampling the state at each of `t_out`
/// (sorted, inside `[t0, t1]`). The right-hand side must be smooth on the interval;
/// callers split at discontinuities.
pub fn dormand_prince<F>(mut rhs: F, t0: f64, t1: f64, y0: &[f64], t_out: &[f64], opts: &OdeOptions) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    assert_eq!(opts.atol.len(), n, "one absolute tolerance per component");
    let mut outputs = Vec::with_capacity(t_out.len());
    let mut next_out = 0;
    while next_out < t_out.len() && t_out[next_out] <= t0 {
        outputs.push(y0.to_vec());
        next_out += 1;
    }
    if t1 <= t0 {
        return Ok(OdeSolution { outputs, final_state: y0.to_vec(), steps: 0, last_step: 0.0 });
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    rhs(t, &y, &mut k[0]);

    let span = t1 - t0;
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let mut d0 = 0.0f64;
        let mut d1 = 0.0f64;
        for i in 0..n {
            let sc = opts.atol[i] + opts.rtol * y[i].abs();
            d0 = d0.max((y[i] / sc).abs());
            d1 = d1.max((k[0][i] / sc).abs());
        }
        if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        }
    });
    h = h.min(span);

    let mut steps = 0usize;
    let mut last_step = h;
    let mut rejected_in_row = 0usize;
    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::Numerical {
                context: "ode",
                detail: format!("step budget exhausted at t = {t:e}; last state {y:?}"),
            });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        stage(&mut tmp, &y, h, &[(A21, &k[0])]);
        rhs(t + C2 * h, &tmp, &mut k[1]);
        stage(&mut tmp, &y, h, &[(A31, &k[0]), (A32, &k[1])]);
        rhs(t + C3 * h, &tmp, &mut k[2]);
        stage(&mut tmp, &y, h, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])]);
        rhs(t + C4 * h, &tmp, &mut k[3]);
        stage(&mut tmp, &y, h, &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])]);
        rhs(t + C5 * h, &tmp, &mut k[4]);
        stage(&mut tmp, &y, h, &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])]);
        let t_new = if last { t1 } else { t + h };
        rhs(t_new, &tmp, &mut k[5]);
        stage(&mut y_new, &y, h, &[(B1, &k[0]), (B3, &k[2]), (B4, &k[3]), (B5, &k[4]), (B6, &k[5])]);
        rhs(t_new, &y_new, &mut k[6]);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = opts.atol[i] + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        steps += 1;
        if !err.is_finite() {
            err = 1e10;
        }
        if err <= 1.0 {
            while next_out < t_out.len() && t_out[next_out] <= t_new {
                let theta = (t_out[next_out] - t) / h;
                outputs.push(dense(&y, &y_new, &k, h, theta));
                next_out += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            last_step = h;
            rejected_in_row = 0;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            rejected_in_row += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
            if h < opts.min_step || rejected_in_row > 60 {
                return Err(Error::Numerical {
                    context: "ode",
                    detail: format!("step size collapsed to {h:e} at t = {t:e}; last good state {y:?}"),
                });
            }
        }
    }
    while next_out < t_out.len() {
        outputs.push(y.clone());
        next_out += 1;
    }
    Ok(OdeSolution { outputs, final_state: y, steps, last_step })
}

fn stage(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &Vec<f64>)]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn dense(y0: &[f64], y1: &[f64], k: &[Vec<f64>], h: f64, theta: f64) -> Vec<f64> {
    let th1 = 1.0 - theta;
    (0..y0.len())
        .map(|i| {
            let dy = y1[i] - y0[i];
            let bspl = h * k[0][i] - dy;
            let r4 = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
            y0[i] + theta * (dy + th1 * (bspl + theta * (dy - h * k[6][i] - bspl + th1 * r4)))
        })
        .collect()
}
