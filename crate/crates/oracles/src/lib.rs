//! Reference calculations for the test suites, written independently of `eotk-core`:
//! different quadrature (tanh-sinh on the raw integrands), a different gap solver
//! (fixed-point iteration in the ξ variable) and a segment-sum inductance model.
//! Nothing here is used by the library itself.

use std::f64::consts::PI;

const MU0: f64 = 1.256_637_062_12e-6;

fn occupation(e: f64, kt: f64) -> f64 {
    if kt == 0.0 {
        return if e > 0.0 { 0.0 } else { 1.0 };
    }
    let x = e / kt;
    if x > 700.0 {
        0.0
    } else {
        1.0 / (x.exp() + 1.0)
    }
}

/// Tanh-sinh quadrature of `f(x, x − a, b − x)` over `[a, b]`. The endpoint distances
/// are passed exactly so integrable edge singularities can be evaluated without
/// cancellation. Levels are refined until successive estimates agree to `tol`.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let t_max = 4.5;
    let node = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        let da = (b - a) / (1.0 + (-2.0 * u).exp());
        let db = (b - a) / (1.0 + (2.0 * u).exp());
        let x = if u < 0.0 { a + da } else { b - db };
        let w = half * 0.5 * PI * t.cosh() / (u.cosh() * u.cosh());
        if w == 0.0 || da == 0.0 || db == 0.0 {
            return 0.0;
        }
        w * f(x, da, db)
    };
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut j = 1;
    while j as f64 * h <= t_max {
        sum += node(j as f64 * h) + node(-(j as f64) * h);
        j += 1;
    }
    let mut estimate = h * sum;
    for _level in 0..14 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            sum += node(k as f64 * h) + node(-(k as f64) * h);
            k += 2;
        }
        let next = h * sum;
        if (next - estimate).abs() <= tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

const ORACLE_TOL: f64 = 1e-11;
/// Fermi tails integrated out to this many k_B·T above the gap edge.
const TAIL_KT: f64 = 60.0;

/// σ₁/σ_n from the raw Mattis–Bardeen integrand (sub-gap, thermal part only).
pub fn mb_sigma1_raw(gap: f64, hw: f64, kt: f64) -> f64 {
    if kt == 0.0 {
        return 0.0;
    }
    let f = |e: f64, da: f64, _db: f64| {
        let num = e * e + gap * gap + hw * e;
        let den = (da * (e + gap)).sqrt() * ((da + hw) * (e + hw + gap)).sqrt();
        num / den * (occupation(e, kt) - occupation(e + hw, kt))
    };
    2.0 / hw * tanh_sinh(f, gap, gap + TAIL_KT * kt, ORACLE_TOL)
}

/// σ₂/σ_n from the raw Mattis–Bardeen integrand on [Δ − ħω, Δ].
pub fn mb_sigma2_raw(gap: f64, hw: f64, kt: f64) -> f64 {
    let f = |e: f64, da: f64, db: f64| {
        let num = e * e + gap * gap + hw * e;
        let den = (db * (gap + e)).sqrt() * (da * (e + hw + gap)).sqrt();
        num / den * (1.0 - 2.0 * occupation(e + hw, kt))
    };
    tanh_sinh(f, gap - hw, gap, ORACLE_TOL) / hw
}

/// Quasiparticle density 4N₀∫ E f(E)/√(E² − Δ²) dE in the units of `n0`.
pub fn qp_density_raw(gap: f64, kt: f64, n0: f64) -> f64 {
    if kt == 0.0 {
        return 0.0;
    }
    let f = |e: f64, da: f64, _db: f64| e * occupation(e, kt) / (da * (e + gap)).sqrt();
    4.0 * n0 * tanh_sinh(f, gap, gap + TAIL_KT * kt, ORACLE_TOL)
}

/// Gap at temperature `kt` (energy units) by fixed-point iteration on
/// 1/N₀V = ∫₀^{ξ_max} tanh(E/2kT)/E dξ with E = √(ξ² + Δ²) and ξ_max = √(E_D² − Δ²),
/// with N₀V chosen so that the zero-temperature gap is `delta0`.
pub fn bcs_gap_fixed_point(delta0: f64, e_debye: f64, kt: f64) -> f64 {
    let inv_nv = (e_debye / delta0 + ((e_debye / delta0).powi(2) - 1.0).sqrt()).ln();
    let lhs = |d: f64| {
        let xi_max = (e_debye * e_debye - d * d).sqrt();
        let f = |xi: f64, _da: f64, _db: f64| {
            let e = (xi * xi + d * d).sqrt();
            if kt == 0.0 {
                1.0 / e
            } else {
                (e / (2.0 * kt)).tanh() / e
            }
        };
        tanh_sinh(f, 0.0, xi_max, 1e-13)
    };
    let mut d = delta0;
    for _ in 0..100_000 {
        let step = lhs(d) - inv_nv;
        let next = d * step.exp();
        if ((next - d) / d).abs() < 1e-13 {
            return next;
        }
        d = next;
    }
    d
}

/// Greenhouse segment-sum inductance of a square spiral: self terms of each straight
/// segment plus signed mutual terms of all parallel pairs.
pub fn greenhouse_square_spiral(n_turns: u32, d_out: f64, pitch: f64, fill: f64, thickness: f64) -> f64 {
    let w = fill * pitch;
    let mut lengths = Vec::new();
    let mut len = d_out - w;
    for k in 0..(4 * n_turns as usize) {
        if k >= 3 && (k - 3) % 2 == 0 {
            len -= pitch;
        }
        lengths.push(len);
    }
    let dirs = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
    let mut segs = Vec::new();
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for (k, &l) in lengths.iter().enumerate() {
        let (dx, dy) = dirs[k % 4];
        let (x2, y2) = (x + dx * l, y + dy * l);
        segs.push((x, y, x2, y2, dx, dy));
        x = x2;
        y = y2;
    }
    let g = |u: f64, d: f64| u * (u / d).asinh() - (u * u + d * d).sqrt();
    let mut total = 0.0;
    for s in &segs {
        let l = (s.2 - s.0).abs() + (s.3 - s.1).abs();
        total += MU0 / (2.0 * PI) * l * ((2.0 * l / (w + thickness)).ln() + 0.50049 + (w + thickness) / (3.0 * l));
    }
    for i in 0..segs.len() {
        for j in (i + 1)..segs.len() {
            let (a, b) = (segs[i], segs[j]);
            let sign = a.4 * b.4 + a.5 * b.5;
            if sign == 0.0 {
                continue;
            }
            let (d, a1, b1, a2, b2) = if a.4 != 0.0 {
                (
                    (a.1 - b.1).abs(),
                    a.0.min(a.2),
                    a.0.max(a.2),
                    b.0.min(b.2),
                    b.0.max(b.2),
                )
            } else {
                (
                    (a.0 - b.0).abs(),
                    a.1.min(a.3),
                    a.1.max(a.3),
                    b.1.min(b.3),
                    b.1.max(b.3),
                )
            };
            if d == 0.0 {
                continue;
            }
            let m = MU0 / (4.0 * PI) * (g(b2 - a1, d) - g(b2 - b1, d) - g(a2 - a1, d) + g(a2 - b1, d));
            total += 2.0 * sign * m;
        }
    }
    total
}
