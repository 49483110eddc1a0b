use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A member of `F_{m,L}` with known minimizer.
///
/// Runners work in offset coordinates `e = x − x*` so that gaps far below
/// `f*` in magnitude keep their relative accuracy; `gradient_offset` and
/// `gap_offset` are the primitives they use.
pub trait Objective: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn m(&self) -> f64;
    fn l(&self) -> f64;
    fn minimizer(&self) -> &[f64];
    fn f_star(&self) -> f64;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// `∇f(x* + e)`.
    fn gradient_offset(&self, e: &[f64], out: &mut [f64]);
    /// `f(x* + e) − f*`.
    fn gap_offset(&self, e: &[f64]) -> f64;
    fn seed(&self) -> Option<u64> {
        None
    }
}

/// `f(x) = ½ xᵀ D x` with `D` diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub diag: Vec<f64>,
    m: f64,
    l: f64,
    xstar: Vec<f64>,
    seed: u64,
}

/// Diagonal spectrum log-uniform in `[m, L]`; for `dim ≥ 2` both endpoints
/// are present. A one-dimensional problem uses `m`.
pub fn make_quadratic(m: f64, l: f64, dim: usize, seed: u64) -> Result<Quadratic> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim must be at least 1".into()));
    }
    crate::model::validate_problem(m, l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lm, ll) = (m.ln(), l.ln());
    let diag = (0..dim)
        .map(|i| match i {
            0 => m,
            _ if i == dim - 1 => l,
            _ => (lm + rng.random::<f64>() * (ll - lm)).exp(),
        })
        .collect();
    Ok(Quadratic { diag, m, l, xstar: vec![0.0; dim], seed })
}

impl Objective for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn m(&self) -> f64 {
        self.m
    }
    fn l(&self) -> f64 {
        self.l
    }
    fn minimizer(&self) -> &[f64] {
        &self.xstar
    }
    fn f_star(&self) -> f64 {
        0.0
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.gap_offset(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &d), &xi) in out.iter_mut().zip(&self.diag).zip(x) {
            *o = d * xi;
        }
    }
    fn gradient_offset(&self, e: &[f64], out: &mut [f64]) {
        self.gradient(e, out)
    }
    fn gap_offset(&self, e: &[f64]) -> f64 {
        0.5 * self.diag.iter().zip(e).map(|(&d, &x)| d * x * x).sum::<f64>()
    }
    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let z = x.exp();
        z / (1.0 + z)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `f(x) = (m/2)‖x‖² + 4(L − m) Σ ln(1 + e^{x_i}) − gᵀ(x − x̂)`.
///
/// Its second derivative is `m + 4(L − m)σ(1 − σ) ∈ [m, L]`. The linear term
/// removes the rounding residual `g = ∇(x̂)` of the computed minimizer `x̂`, so
/// `x̂` is the exact minimizer of the function actually evaluated and the
/// class bounds are unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftplusComposite {
    m: f64,
    l: f64,
    a: f64,
    sig_a: f64,
    residual: f64,
    xstar: Vec<f64>,
    f_star: f64,
}

/// Root of `m x + 4(L − m)σ(x) = 0`, which lies in `(−4(L − m)/m, 0)`.
fn softplus_minimizer(m: f64, l: f64) -> f64 {
    let c = 4.0 * (l - m);
    let h = |x: f64| m * x + c * logistic(x);
    let dh = |x: f64| {
        let s = logistic(x);
        m + c * s * (1.0 - s)
    };
    let (mut lo, mut hi) = (-c / m, 0.0);
    let mut x = -c / (m + c / 4.0) * 0.5;
    for _ in 0..200 {
        let hx = h(x);
        if hx.abs() <= 1e-14 * c.max(m) {
            return x;
        }
        if hx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - hx / dh(x);
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
            break;
        }
    }
    x
}

pub fn make_softplus_composite(m: f64, l: f64, dim: usize) -> Result<SoftplusComposite> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim must be at least 1".into()));
    }
    crate::model::validate_problem(m, l)?;
    if !(l > m) {
        return Err(Error::InvalidArgument(format!("softplus composite needs L > m, got m = {m}, L = {l}")));
    }
    let a = softplus_minimizer(m, l);
    let sig_a = logistic(a);
    let c = 4.0 * (l - m);
    let residual = m * a + c * sig_a;
    let f1 = 0.5 * m * a * a + c * softplus(a);
    Ok(SoftplusComposite { m, l, a, sig_a, residual, xstar: vec![a; dim], f_star: dim as f64 * f1 })
}

impl SoftplusComposite {
    /// `ln(1 + e^{a+Δ}) − ln(1 + e^a) − σ(a)Δ`, accurate for all `Δ`.
    fn phi(&self, delta: f64) -> f64 {
        let s = self.sig_a;
        if delta.abs() < 1e-4 {
            let c2 = s * (1.0 - s);
            let c3 = c2 * (1.0 - 2.0 * s);
            let c4 = c2 * (1.0 - 6.0 * s + 6.0 * s * s);
            let d2 = delta * delta;
            c2 * d2 / 2.0 + c3 * d2 * delta / 6.0 + c4 * d2 * d2 / 24.0
        } else if delta > 1.0 {
            delta * (1.0 - s) + (s + (1.0 - s) * (-delta).exp()).ln()
        } else {
            (s * delta.exp_m1()).ln_1p() - s * delta
        }
    }

    /// The per-coordinate minimizer.
    pub fn a(&self) -> f64 {
        self.a
    }
}

impl Objective for SoftplusComposite {
    fn name(&self) -> &'static str {
        "softplus"
    }
    fn dim(&self) -> usize {
        self.xstar.len()
    }
    fn m(&self) -> f64 {
        self.m
    }
    fn l(&self) -> f64 {
        self.l
    }
    fn minimizer(&self) -> &[f64] {
        &self.xstar
    }
    fn f_star(&self) -> f64 {
        self.f_star
    }
    fn value(&self, x: &[f64]) -> f64 {
        let c = 4.0 * (self.l - self.m);
        x.iter().map(|&xi| 0.5 * self.m * xi * xi + c * softplus(xi) - self.residual * (xi - self.a)).sum()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let c = 4.0 * (self.l - self.m);
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = self.m * xi + c * logistic(xi) - self.residual;
        }
    }
    fn gradient_offset(&self, e: &[f64], out: &mut [f64]) {
        let c = 4.0 * (self.l - self.m);
        for (o, &ei) in out.iter_mut().zip(e) {
            // σ(a + e) − σ(a) = σ(a + e)(1 − σ(a))(1 − e^{−e})
            let ds = logistic(self.a + ei) * (1.0 - self.sig_a) * -(-ei).exp_m1();
            *o = self.m * ei + c * ds;
        }
    }
    fn gap_offset(&self, e: &[f64]) -> f64 {
        let c = 4.0 * (self.l - self.m);
        e.iter().map(|&ei| 0.5 * self.m * ei * ei + c * self.phi(ei)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_examples() {
        let q = make_quadratic(1.0, 1.0, 1, 0).unwrap();
        assert_eq!(q.diag, vec![1.0]);
        assert_eq!(q.value(&[3.0]), 4.5);
        let q = make_quadratic(1.0, 100.0, 2, 0).unwrap();
        assert_eq!(q.diag, vec![1.0, 100.0]);
        let q = make_quadratic(0.5, 80.0, 12, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n2: f64 = x.iter().map(|v| v * v).sum();
            let quad = 2.0 * q.value(&x);
            assert!(0.5 * n2 <= quad * (1.0 + 1e-15) && quad <= 80.0 * n2 * (1.0 + 1e-15));
        }
        assert!(make_quadratic(1.0, 2.0, 0, 0).is_err());
    }

    #[test]
    fn softplus_minimizer_small_gradient() {
        let f = make_softplus_composite(1.0, 2.0, 1).unwrap();
        // Independent bisection on x + 4σ(x).
        let (mut lo, mut hi) = (-4.0f64, 0.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + 4.0 * logistic(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((f.a() - lo).abs() < 1e-14, "{} vs {lo}", f.a());
        let mut g = [0.0];
        f.gradient(f.minimizer(), &mut g);
        assert!(g[0].abs() <= 1e-12);
        f.gradient_offset(&[0.0], &mut g);
        assert_eq!(g[0], 0.0);
        assert!((f.a() + 1.0420).abs() < 1e-3);
    }

    #[test]
    fn softplus_gradient_at_zero() {
        let f = make_softplus_composite(1.0, 2.0, 3).unwrap();
        let mut g = [0.0; 3];
        f.gradient(&[0.0; 3], &mut g);
        for gi in g {
            assert!((gi - 2.0 + f.residual).abs() < 1e-15);
            assert!((gi - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softplus_curvature_in_class() {
        let f = make_softplus_composite(0.7, 30.0, 1).unwrap();
        let h = 1e-4;
        for i in 0..200 {
            let x = -20.0 + 0.2 * i as f64;
            let (mut gp, mut gm) = ([0.0], [0.0]);
            f.gradient(&[x + h], &mut gp);
            f.gradient(&[x - h], &mut gm);
            let fd = (gp[0] - gm[0]) / (2.0 * h);
            assert!(fd >= 0.7 - 1e-6 && fd <= 30.0 + 1e-6, "{x}: {fd}");
        }
    }

    #[test]
    fn offset_primitives_agree_with_direct() {
        let f = make_softplus_composite(1.0, 50.0, 1).unwrap();
        for &e in &[-30.0, -3.0, -0.5, -1e-3, -2e-5, 0.0, 3e-5, 1e-3, 0.5, 2.0, 40.0] {
            let x = [f.a() + e];
            let direct = f.value(&x) - f.f_star();
            let off = f.gap_offset(&[e]);
            assert!((direct - off).abs() <= 1e-12 * f.f_star().abs().max(1.0) + 1e-9 * off, "{e}: {direct} vs {off}");
            let (mut g1, mut g2) = ([0.0], [0.0]);
            f.gradient(&x, &mut g1);
            f.gradient_offset(&[e], &mut g2);
            assert!((g1[0] - g2[0]).abs() <= 1e-12 * (1.0 + g1[0].abs()));
        }
    }

    #[test]
    fn phi_branches_are_continuous() {
        let f = make_softplus_composite(1.0, 10.0, 1).unwrap();
        for &edge in &[1e-4, -1e-4, 1.0] {
            let a = f.phi(edge * (1.0 - 1e-12));
            let b = f.phi(edge * (1.0 + 1e-12));
            assert!((a - b).abs() <= 1e-10 * a.abs(), "{edge}: {a} vs {b}");
        }
    }
}
