use crate::error::{Error, Result};

/// Real root of the monic cubic `x³ + c2 x² + c1 x + c0` found by bisection on
/// the Cauchy bracket. Callers guarantee the cubic is strictly increasing,
/// so the root is unique.
pub(crate) fn monic_cubic_root(c2: f64, c1: f64, c0: f64) -> Result<f64> {
    let p = |x: f64| ((x + c2) * x + c1) * x + c0;
    let bound = 1.0 + c2.abs().max(c1.abs()).max(c0.abs());
    let (mut lo, mut hi) = (-bound, bound);
    let (mut plo, phi) = (p(lo), p(hi));
    if !(plo < 0.0 && phi > 0.0) {
        return Err(Error::RootNotConverged(format!(
            "cubic not bracketed on [{lo}, {hi}] (values {plo}, {phi})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Bracket has shrunk to adjacent floats.
            return Ok(if plo.abs() <= p(hi).abs() { lo } else { hi });
        }
        let pm = p(mid);
        if pm == 0.0 {
            return Ok(mid);
        }
        if pm < 0.0 {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootNotConverged(format!("bisection exhausted on [{lo}, {hi}]")))
}

/// Illinois-modified regula falsi on a sign-changing bracket.
pub(crate) fn illinois(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if !fa.is_finite() || !fb.is_finite() || fa.signum() == fb.signum() {
        return None;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if !fc.is_finite() {
            return None;
        }
        if fc == 0.0 || (b - a).abs() <= xtol {
            return Some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= xtol {
            return Some(if fa.abs() < fb.abs() { a } else { b });
        }
    }
    Some(if fa.abs() < fb.abs() { a } else { b })
}
