use std::f64::consts::PI;

use super::{Sym2, Sym3};
use crate::linalg::{jacobi_eigenvalues, Mat};

/// Relative eigenvalue threshold for semidefiniteness.
pub const SEMIDEFINITE_TOL: f64 = 1e-9;

/// Ascending eigenvalues of a symmetric 2×2 matrix.
pub fn sym2_eigenvalues(p: &Sym2) -> [f64; 2] {
    let mean = 0.5 * (p.p11 + p.p22);
    let rad = (0.5 * (p.p11 - p.p22)).hypot(p.p12);
    // The larger-magnitude root is free of cancellation; recover the other
    // one from the determinant.
    let big = if mean >= 0.0 { mean + rad } else { mean - rad };
    let small = if big != 0.0 { p.det() / big } else { 0.0 };
    let (lo, hi) = if big >= small { (small, big) } else { (big, small) };
    [lo, hi]
}

/// Ascending eigenvalues of a symmetric 3×3 matrix.
///
/// Trigonometric solution of the characteristic cubic. When two eigenvalues
/// nearly coincide the `acos` argument sits at ±1 where it loses about half
/// the digits, so that regime is handed to Jacobi.
pub fn sym3_eigenvalues(t: &Sym3) -> [f64; 3] {
    let scale = t.max_abs();
    if scale == 0.0 {
        return [0.0; 3];
    }
    // Work on the normalized matrix to keep the cubic well scaled.
    let s = t.scale(1.0 / scale);
    let off = s.t12 * s.t12 + s.t13 * s.t13 + s.t23 * s.t23;
    if off == 0.0 {
        let mut ev = [s.t11, s.t22, s.t33];
        ev.sort_by(|a, b| a.total_cmp(b));
        return ev.map(|x| x * scale);
    }
    let q = (s.t11 + s.t22 + s.t33) / 3.0;
    let (a11, a22, a33) = (s.t11 - q, s.t22 - q, s.t33 - q);
    let p2 = a11 * a11 + a22 * a22 + a33 * a33 + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    let (b11, b22, b33) = (a11 / p, a22 / p, a33 / p);
    let (b12, b13, b23) = (s.t12 / p, s.t13 / p, s.t23 / p);
    let det = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) + b13 * (b12 * b23 - b22 * b13);
    let r = 0.5 * det;
    if 1.0 - r.abs() < 1e-4 {
        let ev = jacobi_eigenvalues(&t.to_mat(), 50);
        return [ev[0], ev[1], ev[2]];
    }
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut ev = [e3, e2, e1];
    ev.sort_by(|a, b| a.total_cmp(b));
    ev.map(|x| x * scale)
}

/// All eigenvalues `≤ tol · max|entry|`. The threshold is purely relative so
/// the test is invariant under positive rescaling.
pub fn is_negative_semidefinite(t: &Sym3, tol: f64) -> bool {
    let scale = t.max_abs();
    if scale == 0.0 {
        return true;
    }
    sym3_eigenvalues(t)[2] <= tol * scale
}

pub fn is_positive_semidefinite(p: &Sym2, tol: f64) -> bool {
    let scale = p.max_abs();
    if scale == 0.0 {
        return true;
    }
    sym2_eigenvalues(p)[0] >= -tol * scale
}

pub fn is_positive_semidefinite3(t: &Sym3, tol: f64) -> bool {
    is_negative_semidefinite(&t.scale(-1.0), tol)
}

/// Expands `T̂ ⊗ I_d` and checks that its spectrum is `d` copies of the
/// spectrum of `T̂`.
pub fn kron_expand_check(hat: &Sym3, d: usize) -> bool {
    if d == 0 {
        return false;
    }
    let full = hat.to_mat().kron(&Mat::identity(d));
    let big = jacobi_eigenvalues(&full, 100);
    let small = sym3_eigenvalues(hat);
    let mut want: Vec<f64> = small.iter().flat_map(|&x| std::iter::repeat_n(x, d)).collect();
    want.sort_by(|a, b| a.total_cmp(b));
    let tol = 1e-10 * hat.max_abs().max(1.0);
    big.iter().zip(&want).all(|(a, b)| (a - b).abs() <= tol)
}
