use std::f64::consts::PI;

/// Complete elliptic integral of the first kind K(k), modulus convention, via the AGM.
pub fn ellipk(k: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&k), "modulus {k} outside [0, 1)");
    let mut a = 1.0;
    let mut b = (1.0 - k * k).sqrt();
    while (a - b).abs() > 1e-15 * a {
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    PI / (2.0 * a)
}

/// Fermi–Dirac occupation 1/(1 + e^{E/kT}); zero temperature gives a step.
#[inline]
pub fn fermi(energy: f64, kt: f64) -> f64 {
    if kt <= 0.0 {
        return if energy > 0.0 { 0.0 } else if energy < 0.0 { 1.0 } else { 0.5 };
    }
    let x = energy / kt;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}
