//! LMI matrices for the discrete and continuous Lyapunov conditions.
//!
//! Every matrix here is the Kronecker factor over the state `[d, x]` (or
//! `[v, x]` for the ODE); the `d`-dimensional matrix is `T̂ ⊗ I_d`. Two
//! independent routes are kept: the generic recipe built from the
//! state-space matrices and the hand-expanded entry formulas.

mod eigen;

pub use eigen::{
    is_negative_semidefinite, is_positive_semidefinite, is_positive_semidefinite3,
    kron_expand_check, sym2_eigenvalues, sym3_eigenvalues, SEMIDEFINITE_TOL,
};

use serde::{Deserialize, Serialize};

use crate::linalg::Mat;
use crate::model::{NondimParams, OdeParams, ProblemClass};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
}

impl Sym2 {
    pub fn new(p11: f64, p12: f64, p22: f64) -> Self {
        Sym2 { p11, p12, p22 }
    }

    pub fn det(&self) -> f64 {
        self.p11 * self.p22 - self.p12 * self.p12
    }

    pub fn max_abs(&self) -> f64 {
        self.p11.abs().max(self.p12.abs()).max(self.p22.abs())
    }

    pub fn scale(&self, c: f64) -> Sym2 {
        Sym2::new(c * self.p11, c * self.p12, c * self.p22)
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        sym2_eigenvalues(self)
    }

    /// Quadratic form `[u, w] P [u, w]ᵀ`.
    pub fn quad(&self, u: f64, w: f64) -> f64 {
        self.p11 * u * u + 2.0 * self.p12 * u * w + self.p22 * w * w
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_rows(&[&[self.p11, self.p12], &[self.p12, self.p22]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym3 {
    pub t11: f64,
    pub t12: f64,
    pub t13: f64,
    pub t22: f64,
    pub t23: f64,
    pub t33: f64,
}

impl Sym3 {
    pub fn max_abs(&self) -> f64 {
        [self.t11, self.t12, self.t13, self.t22, self.t23, self.t33]
            .iter()
            .fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn scale(&self, c: f64) -> Sym3 {
        Sym3 {
            t11: c * self.t11,
            t12: c * self.t12,
            t13: c * self.t13,
            t22: c * self.t22,
            t23: c * self.t23,
            t33: c * self.t33,
        }
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        sym3_eigenvalues(self)
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues()[2]
    }

    /// Determinant of the leading 2×2 block.
    pub fn det12(&self) -> f64 {
        self.t11 * self.t22 - self.t12 * self.t12
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_rows(&[
            &[self.t11, self.t12, self.t13],
            &[self.t12, self.t22, self.t23],
            &[self.t13, self.t23, self.t33],
        ])
    }

    /// Reads the upper triangle of a 3×3 matrix.
    pub fn from_mat(m: &Mat) -> Sym3 {
        assert_eq!((m.rows(), m.cols()), (3, 3));
        Sym3 {
            t11: m.get(0, 0),
            t12: m.get(0, 1),
            t13: m.get(0, 2),
            t22: m.get(1, 1),
            t23: m.get(1, 2),
            t33: m.get(2, 2),
        }
    }

    pub fn max_abs_diff(&self, o: &Sym3) -> f64 {
        [
            self.t11 - o.t11,
            self.t12 - o.t12,
            self.t13 - o.t13,
            self.t22 - o.t22,
            self.t23 - o.t23,
            self.t33 - o.t33,
        ]
        .iter()
        .fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// Kronecker factors of `ξ_{k+1} = A ξ_k + B u_k`, `y_k = C ξ_k`,
/// `x_k = E ξ_k` over the state `ξ = [d, x]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceHat {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub e: [f64; 2],
}

/// Full `d`-dimensional state-space matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub e: Mat,
    pub d: usize,
}

impl StateSpaceHat {
    pub fn expand(&self, d: usize) -> StateSpace {
        let id = Mat::identity(d);
        let a = Mat::from_rows(&[&self.a[0], &self.a[1]]);
        let b = Mat::from_rows(&[&[self.b[0]], &[self.b[1]]]);
        let c = Mat::from_rows(&[&self.c]);
        let e = Mat::from_rows(&[&self.e]);
        StateSpace { a: a.kron(&id), b: b.kron(&id), c: c.kron(&id), e: e.kron(&id), d }
    }
}

/// Rewrites `x_{k+1} = x_k + β(x_k − x_{k−1}) − α∇f(y_k)`,
/// `y_k = x_k + γ(x_k − x_{k−1})` in terms of `d_k = (x_k − x_{k−1})/δ`.
///
/// `d_{k+1} = β d_k − (α/δ) u_k`, `x_{k+1} = x_k + δβ d_k − α u_k`,
/// `y_k = γδ d_k + x_k`.
pub fn build_state_space_hat(nd: &NondimParams, gamma: f64, alpha: f64) -> StateSpaceHat {
    let delta = nd.delta;
    let beta = nd.beta();
    StateSpaceHat {
        a: [[beta, 0.0], [delta * beta, 1.0]],
        b: [-alpha / delta, -alpha],
        c: [gamma * delta, 1.0],
        e: [0.0, 1.0],
    }
}

/// Multipliers of the LMI. `a0` and `ell` belong to the discrete condition,
/// `lambda` and `sigma` to the continuous one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmiKnobs {
    pub a0: f64,
    pub ell: f64,
    pub rho_sq: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl LmiKnobs {
    pub fn discrete(rho_sq: f64) -> Self {
        LmiKnobs { a0: 1.0, ell: 0.0, rho_sq, sigma: 0.0, lambda: 0.0 }
    }

    pub fn continuous(lambda: f64, sigma: f64) -> Self {
        LmiKnobs { a0: 1.0, ell: 0.0, rho_sq: 0.0, sigma, lambda }
    }

    pub fn with_ell(mut self, ell: f64) -> Self {
        self.ell = ell;
        self
    }
}

/// `[[x I, ½ I], [½ I, y I]]`
fn quad_weight(d: usize, x: f64, y: f64) -> Mat {
    let id = Mat::identity(d);
    let half = id.scale(0.5);
    Mat::block(&[&[&id.scale(x), &half], &[&half, &id.scale(y)]])
}

/// Generic discrete recipe
/// `T = M0 + a0 ρ² (N1 + N2) + a0 (1 − ρ²)(N1 + N3) + ℓ N4` on the full
/// `d`-dimensional matrices.
pub fn assemble_discrete_t(ss: &StateSpace, p: &Mat, knobs: &LmiKnobs, pc: &ProblemClass) -> Mat {
    let d = ss.d;
    let (m, l) = (pc.m(), pc.l());
    let (a, b, c, e) = (&ss.a, &ss.b, &ss.c, &ss.e);
    let rho2 = knobs.rho_sq;

    let at = a.t();
    let bt = b.t();
    let pa = p * a;
    let pb = p * b;
    let m0 = Mat::block(&[
        &[&(&(&at * &pa) - &p.scale(rho2)), &(&at * &pb)],
        &[&(&bt * &pa), &(&bt * &pb)],
    ]);

    let id = Mat::identity(d);
    let z_d2 = Mat::zeros(d, 2 * d);
    let z_dd = Mat::zeros(d, d);

    let g1 = Mat::block(&[&[&(&(e * a) - c), &(e * b)], &[&z_d2, &id]]);
    let g2 = Mat::block(&[&[&(c - e), &z_dd], &[&z_d2, &id]]);
    let g3 = Mat::block(&[&[c, &z_dd], &[&z_d2, &id]]);

    let q1 = quad_weight(d, l / 2.0, 0.0);
    let q2 = quad_weight(d, -m / 2.0, 0.0);
    let q4 = quad_weight(d, -m * l / (m + l), -1.0 / (m + l));

    let n1 = &(&g1.t() * &q1) * &g1;
    let n2 = &(&g2.t() * &q2) * &g2;
    let n3 = &(&g3.t() * &q2) * &g3;
    let n4 = &(&g3.t() * &q4) * &g3;

    let m1 = &n1 + &n2;
    let m2 = &n1 + &n3;
    let t = &m0 + &m1.scale(knobs.a0 * rho2);
    let t = &t + &m2.scale(knobs.a0 * (1.0 - rho2));
    let t = &t + &n4.scale(knobs.ell);
    t.symmetrize()
}

pub fn assemble_discrete_t_hat(ss: &StateSpaceHat, p_hat: &Sym2, knobs: &LmiKnobs, pc: &ProblemClass) -> Sym3 {
    Sym3::from_mat(&assemble_discrete_t(&ss.expand(1), &p_hat.to_mat(), knobs, pc))
}

/// The six entries of `T̂` for the Nesterov family (`γ = β`, `ℓ = 0`)
/// written out by hand.
pub fn nesterov_t_closed_form(nd: &NondimParams, alpha: f64, p: &Sym2, rho_sq: f64, pc: &ProblemClass) -> Sym3 {
    let (d, b, m, l) = (nd.delta, nd.beta(), pc.m(), pc.l());
    let r2 = rho_sq;
    let (p11, p12, p22) = (p.p11, p.p12, p.p22);
    Sym3 {
        t11: b * b * p11 + 2.0 * d * b * b * p12 + d * d * b * b * p22 - r2 * p11 - d * d * b * b * m / 2.0,
        t12: b * p12 + d * b * p22 - r2 * p12 - d * b * m / 2.0 + r2 * d * b * m / 2.0,
        t13: -alpha * b * p11 / d - 2.0 * alpha * b * p12 - d * alpha * b * p22 + d * b / 2.0,
        t22: p22 - r2 * p22 - m / 2.0 + r2 * m / 2.0,
        t23: -alpha * p12 / d - alpha * p22 + 0.5 - r2 / 2.0,
        t33: alpha * alpha * p11 / (d * d) + 2.0 * alpha * alpha * p12 / d + alpha * alpha * p22
            + alpha * alpha * l / 2.0
            - alpha,
    }
}

/// Kronecker factors of the ODE in first-order form over `[v, x]` with
/// `v = ẋ/√m`: `v̇ = −b̄√m v − ∇f(x)/√m`, `ẋ = √m v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeStateSpaceHat {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
}

pub fn build_ode_state_space_hat(ode: &OdeParams) -> OdeStateSpaceHat {
    let sm = ode.m.sqrt();
    OdeStateSpaceHat { a: [[-ode.b_bar * sm, 0.0], [sm, 0.0]], b: [-1.0 / sm, 0.0], c: [0.0, 1.0] }
}

/// Generic continuous recipe `T̄ = M̄0 + M̄1 + λ M̄2 + σ M̄3`.
pub fn assemble_continuous_t(ss: &OdeStateSpaceHat, p: &Mat, lambda: f64, sigma: f64, pc: &ProblemClass, d: usize) -> Mat {
    let (m, l) = (pc.m(), pc.l());
    let id = Mat::identity(d);
    let a = Mat::from_rows(&[&ss.a[0], &ss.a[1]]).kron(&id);
    let b = Mat::from_rows(&[&[ss.b[0]], &[ss.b[1]]]).kron(&id);
    let c = Mat::from_rows(&[&ss.c]).kron(&id);

    let pa = p * &a;
    let pb = p * &b;
    let m0 = Mat::block(&[
        &[&(&(&pa + &pa.t()) + &p.scale(lambda)), &pb],
        &[&pb.t(), &Mat::zeros(d, d)],
    ]);
    let ca = &c * &a;
    let cb = &c * &b;
    let m1 = Mat::block(&[&[&Mat::zeros(2 * d, 2 * d), &ca.t()], &[&ca, &(&cb + &cb.t())]]).scale(0.5);

    let z_d2 = Mat::zeros(d, 2 * d);
    let g3 = Mat::block(&[&[&c, &Mat::zeros(d, d)], &[&z_d2, &id]]);
    let m2 = &(&g3.t() * &quad_weight(d, -m / 2.0, 0.0)) * &g3;
    let m3 = &(&g3.t() * &quad_weight(d, -m * l / (m + l), -1.0 / (m + l))) * &g3;

    let t = &m0 + &m1;
    let t = &t + &m2.scale(lambda);
    let t = &t + &m3.scale(sigma);
    t.symmetrize()
}

pub fn assemble_continuous_t_hat(ode: &OdeParams, p_bar: &Sym2, lambda: f64, sigma: f64, pc: &ProblemClass) -> Sym3 {
    let ss = build_ode_state_space_hat(ode);
    Sym3::from_mat(&assemble_continuous_t(&ss, &p_bar.to_mat(), lambda, sigma, pc, 1))
}

/// Hand-expanded continuous entries, `√m` applied uniformly to the friction
/// term of `t̄11`.
pub fn continuous_t_closed_form(ode: &OdeParams, p: &Sym2, lambda: f64, sigma: f64, pc: &ProblemClass) -> Sym3 {
    let (b, m, l) = (ode.b_bar, pc.m(), pc.l());
    let sm = m.sqrt();
    Sym3 {
        t11: -2.0 * b * sm * p.p11 + 2.0 * sm * p.p12 + lambda * p.p11,
        t12: -b * sm * p.p12 + sm * p.p22 + lambda * p.p12,
        t13: -p.p11 / sm + sm / 2.0,
        t22: lambda * p.p22 - m / 2.0 * lambda - sigma * m * l / (m + l),
        t23: -p.p12 / sm + lambda / 2.0 + sigma / 2.0,
        t33: -sigma / (m + l),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{nondimensionalize, validate_problem, MethodParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_close(a: &Sym3, b: &Sym3, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol * a.max_abs().max(b.max_abs()).max(1.0)
    }

    #[test]
    fn state_space_examples() {
        let pc = validate_problem(1.0, 100.0).unwrap();
        let mp = MethodParams::nesterov(0.01, 9.0 / 11.0).unwrap();
        let nd = nondimensionalize(&pc, &mp).unwrap();
        let ss = build_state_space_hat(&nd, mp.gamma, mp.alpha);
        let beta = nd.beta();
        assert!((ss.a[0][0] - 9.0 / 11.0).abs() < 1e-15);
        assert_eq!(ss.a[1], [nd.delta * beta, 1.0]);
        assert_eq!(ss.b, [-0.01 / nd.delta, -0.01]);
        assert_eq!(ss.c, [nd.delta * beta, 1.0]);
        assert_eq!(ss.e, [0.0, 1.0]);

        let gd = nondimensionalize(&pc, &MethodParams::gradient_descent(0.01).unwrap()).unwrap();
        let ss = build_state_space_hat(&gd, 0.0, 0.01);
        assert_eq!(ss.a[0], [0.0, 0.0]);
        assert_eq!(ss.a[1][1], 1.0);
        assert!(ss.a[1][0].abs() < 1e-16);

        let hb = MethodParams::heavy_ball(0.01, 0.5).unwrap();
        let nd = nondimensionalize(&pc, &hb).unwrap();
        let ss = build_state_space_hat(&nd, hb.gamma, hb.alpha);
        assert_eq!(ss.c, [0.0, 1.0]);
    }

    #[test]
    fn heavy_ball_fixed_point_identities() {
        // ξ* = [0, x*], u* = 0 must be a fixed point; the update must agree
        // with the two-step recursion on a random state.
        let pc = validate_problem(1.0, 10.0).unwrap();
        let hb = MethodParams::heavy_ball(0.05, 0.7).unwrap();
        let nd = nondimensionalize(&pc, &hb).unwrap();
        let ss = build_state_space_hat(&nd, hb.gamma, hb.alpha);
        let xs = 0.3;
        let fx = [ss.a[0][1] * xs, ss.a[1][1] * xs];
        assert_eq!(fx, [0.0, xs]);

        let (xk, xkm1, u) = (1.2, 0.7, -0.4);
        let dk = (xk - xkm1) / nd.delta;
        let y = ss.c[0] * dk + ss.c[1] * xk;
        assert!((y - xk).abs() < 1e-15);
        let x_next = ss.a[1][0] * dk + ss.a[1][1] * xk + ss.b[1] * u;
        let d_next = ss.a[0][0] * dk + ss.b[0] * u;
        let expect = xk + hb.beta * (xk - xkm1) - hb.alpha * u;
        assert!((x_next - expect).abs() < 1e-14);
        assert!((d_next - (expect - xk) / nd.delta).abs() < 1e-12);
    }

    #[test]
    fn zero_p_unit_rate_example() {
        let pc = validate_problem(1.0, 1.0).unwrap();
        let mp = MethodParams::nesterov(1.0, 1.0).unwrap();
        let nd = nondimensionalize(&pc, &mp).unwrap();
        let ss = build_state_space_hat(&nd, mp.gamma, mp.alpha);
        let t = assemble_discrete_t_hat(&ss, &Sym2::default(), &LmiKnobs::discrete(1.0), &pc);
        let want = Sym3 { t11: -0.5, t12: 0.0, t13: 0.5, t22: 0.0, t23: 0.0, t33: -0.5 };
        assert!(t.max_abs_diff(&want) < 1e-15, "{t:?}");
        let cf = nesterov_t_closed_form(&nd, 1.0, &Sym2::default(), 1.0, &pc);
        assert!(cf.max_abs_diff(&want) < 1e-15, "{cf:?}");
    }

    #[test]
    fn standard_nesterov_entries() {
        let pc = validate_problem(1.0, 100.0).unwrap();
        let mp = MethodParams::nesterov(0.01, 9.0 / 11.0).unwrap();
        let nd = nondimensionalize(&pc, &mp).unwrap();
        let d = nd.delta;
        let p = Sym2::new(0.5 * (1.0 - d) * (1.0 - d), 0.5 * (1.0 - d), 0.5);
        let ss = build_state_space_hat(&nd, mp.gamma, mp.alpha);
        let t = assemble_discrete_t_hat(&ss, &p, &LmiKnobs::discrete(0.9), &pc);
        let t11 = -0.5 * 0.1 * 0.9f64.powi(3) / 1.1;
        assert!((t.t11 - t11).abs() < 1e-14, "{t:?}");
        for v in [t.t13, t.t23, t.t22, t.t33] {
            assert!(v.abs() < 1e-14, "{t:?}");
        }
        let cf = nesterov_t_closed_form(&nd, mp.alpha, &p, 0.9, &pc);
        assert!(rel_close(&t, &cf, 1e-12));
        assert!(cf.t22.abs() < 1e-15 && cf.t33.abs() < 1e-15 && cf.t23.abs() < 1e-15);
    }

    #[test]
    fn generic_matches_closed_form_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let m: f64 = rng.random_range(0.1..10.0);
            let l = m * rng.random_range(1.0..1e4);
            let pc = validate_problem(m, l).unwrap();
            let alpha = rng.random_range(1e-3..1.0) / l;
            let beta = rng.random_range(-1.0..1.0);
            let mp = MethodParams::nesterov(alpha, beta).unwrap();
            let nd = nondimensionalize(&pc, &mp).unwrap();
            let p = Sym2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))
                .scale(m);
            let rho_sq = rng.random_range(0.0..1.0);
            let ss = build_state_space_hat(&nd, mp.gamma, alpha);
            let g = assemble_discrete_t_hat(&ss, &p, &LmiKnobs::discrete(rho_sq), &pc);
            let cf = nesterov_t_closed_form(&nd, alpha, &p, rho_sq, &pc);
            assert!(rel_close(&g, &cf, 1e-12), "{g:?} vs {cf:?}");
        }
    }

    #[test]
    fn full_dimension_recipe_is_kronecker() {
        let pc = validate_problem(1.0, 50.0).unwrap();
        let mp = MethodParams::nesterov(0.015, 0.6).unwrap();
        let nd = nondimensionalize(&pc, &mp).unwrap();
        let ss = build_state_space_hat(&nd, mp.gamma, mp.alpha);
        let p = Sym2::new(0.3, -0.1, 0.7);
        let knobs = LmiKnobs::discrete(0.8).with_ell(0.25);
        let hat = assemble_discrete_t_hat(&ss, &p, &knobs, &pc);
        for d in 1..=3 {
            let full = assemble_discrete_t(&ss.expand(d), &p.to_mat().kron(&Mat::identity(d)), &knobs, &pc);
            let kron = hat.to_mat().kron(&Mat::identity(d));
            assert!(full.max_abs_diff(&kron) <= 1e-12 * kron.max_abs());
        }
    }

    #[test]
    fn continuous_examples() {
        let pc = validate_problem(1.0, 1.0).unwrap();
        let ode = OdeParams::new(2.0, 1.0).unwrap();
        let p = Sym2::new(0.5, 0.5, 0.5);
        let t = assemble_continuous_t_hat(&ode, &p, 1.0, 0.0, &pc);
        assert!((t.t11 + 0.5).abs() < 1e-15);
        for v in [t.t12, t.t13, t.t22, t.t23, t.t33] {
            assert!(v.abs() < 1e-15, "{t:?}");
        }

        let pc = validate_problem(1.0, 9.0).unwrap();
        let t = assemble_continuous_t_hat(&ode, &p, 1.0, 0.3, &pc);
        assert!((t.t33 + 0.3 / 10.0).abs() < 1e-15);

        let ode0 = OdeParams::new(0.0, 3.0).unwrap();
        let pc3 = validate_problem(3.0, 30.0).unwrap();
        let t = assemble_continuous_t_hat(&ode0, &Sym2::new(1.5, 0.0, 0.0), 0.0, 0.0, &pc3);
        assert!(t.max_abs() < 1e-15, "{t:?}");
    }

    #[test]
    fn continuous_generic_matches_closed_form_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let m: f64 = rng.random_range(0.1..10.0);
            let pc = validate_problem(m, m * rng.random_range(1.0..100.0)).unwrap();
            let ode = OdeParams::new(rng.random_range(0.0..5.0), m).unwrap();
            let p = Sym2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                .scale(m);
            let lambda = m.sqrt() * rng.random_range(0.0..2.0);
            let sigma = m.sqrt() * rng.random_range(0.0..1.0);
            let g = assemble_continuous_t_hat(&ode, &p, lambda, sigma, &pc);
            let cf = continuous_t_closed_form(&ode, &p, lambda, sigma, &pc);
            assert!(rel_close(&g, &cf, 1e-12), "{g:?} vs {cf:?}");
        }
    }
}
