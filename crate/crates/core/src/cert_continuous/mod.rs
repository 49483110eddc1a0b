//! Certificates for `ẍ + b̄√m ẋ + ∇f(x) = 0` with decay `e^{−λt}`,
//! `λ = √m r̄`.

mod appendix;

pub use appendix::{
    appendix_construct, appendix_max_rate, appendix_trace, f_appendix, f_appendix_grad, AppendixConstruction,
    AppendixPoint, Branch, ContinuationSettings,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmi::{
    assemble_continuous_t_hat, is_negative_semidefinite, is_positive_semidefinite, Sym2, Sym3, SEMIDEFINITE_TOL,
};
use crate::model::{OdeParams, ProblemClass};
use crate::roots::monic_cubic_root;

pub fn xi_bar(r_bar: f64, b_bar: f64) -> f64 {
    r_bar * b_bar * b_bar - 2.0 * (r_bar * r_bar + 1.0) * b_bar + r_bar * r_bar * r_bar + 3.0 * r_bar
}

/// Unique real root of `Ξ̄(·, b̄)`, i.e. of `r³ − 2b̄r² + (3 + b̄²)r − 2b̄`.
/// The cubic's discriminant `−4(b̄⁴ − 9b̄² + 27)` is negative for every `b̄`.
pub fn solve_r_bar(b_bar: f64) -> Result<f64> {
    if !b_bar.is_finite() {
        return Err(Error::InvalidArgument(format!("b_bar must be finite, got {b_bar}")));
    }
    monic_cubic_root(-2.0 * b_bar, 3.0 + b_bar * b_bar, -2.0 * b_bar)
}

/// `P̄̂ = (m/2) [[1, r̄], [r̄, r̄²]]`.
pub fn build_p_bar(r_bar: f64, m: f64) -> Sym2 {
    Sym2::new(0.5 * m, 0.5 * m * r_bar, 0.5 * m * r_bar * r_bar)
}

pub const BOUND_RECIPE: &str = "C = f(x(0)) - f* + (m/2) * || xdot(0)/sqrt(m) + r_bar * (x(0) - x*) ||^2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousCertificate {
    pub m: f64,
    pub b_bar: f64,
    pub r_bar: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub p_bar_hat: Sym2,
    pub t_bar_hat: Sym3,
    pub t_bar_eigenvalues: [f64; 3],
    pub bound_recipe: String,
    /// `b̄ = 0`: no decay, the bracket is the conserved energy.
    pub conservative: bool,
    pub valid: bool,
}

impl ContinuousCertificate {
    /// Bracket `f − f* + [v, x − x*] P̄ [v, x − x*]ᵀ` with `v = ẋ/√m`.
    pub fn bracket(&self, gap: f64, v: &[f64], e: &[f64]) -> f64 {
        gap + v.iter().zip(e).map(|(&vi, &ei)| self.p_bar_hat.quad(vi, ei)).sum::<f64>()
    }

    pub fn bound_constant(&self, gap0: f64, xdot0: &[f64], x0_minus_xstar: &[f64]) -> f64 {
        let sm = self.m.sqrt();
        let v: Vec<f64> = xdot0.iter().map(|x| x / sm).collect();
        self.bracket(gap0, &v, x0_minus_xstar)
    }
}

/// Certificate with `σ = 0`. The smoothness constant does not enter, so any
/// `L ≥ m` serves for the assembly.
pub fn certify_ode(m: f64, b_bar: f64) -> Result<ContinuousCertificate> {
    let ode = OdeParams::new(b_bar, m)?;
    if b_bar < 0.0 {
        return Err(Error::OutOfRange { inequality: "b_bar >= 0".into(), detail: format!("b_bar = {b_bar}") });
    }
    let r_bar = if b_bar == 0.0 { 0.0 } else { solve_r_bar(b_bar)? };
    let lambda = m.sqrt() * r_bar;
    let p = build_p_bar(r_bar, m);
    let pc = ProblemClass::new(m, m)?;
    let t = assemble_continuous_t_hat(&ode, &p, lambda, 0.0, &pc);
    let valid = is_negative_semidefinite(&t, SEMIDEFINITE_TOL) && is_positive_semidefinite(&p, SEMIDEFINITE_TOL);
    Ok(ContinuousCertificate {
        m,
        b_bar,
        r_bar,
        lambda,
        sigma: 0.0,
        p_bar_hat: p,
        t_bar_hat: t,
        t_bar_eigenvalues: t.eigenvalues(),
        bound_recipe: BOUND_RECIPE.into(),
        conservative: b_bar == 0.0,
        valid,
    })
}

/// `t̄11 t̄22 − t̄12²` for `p̄11 = m/2`, `p̄12 = m r̄/2`, `p̄22 = p`, `λ = √m r̄`.
pub fn delta_constraint(r: f64, p: f64, b_bar: f64, m: f64) -> f64 {
    let m3 = m * m * m;
    -m3 * r.powi(4) / 4.0 + b_bar * m3 * r.powi(3) / 2.0 + (m * m * p / 2.0 - (3.0 + b_bar * b_bar) * m3 / 4.0) * r * r
        + b_bar * m3 * r / 2.0
        - m * p * p
}

pub fn lambda_poly(r: f64, b_bar: f64) -> f64 {
    -2.0 * r.powi(3) + 3.0 * b_bar * r * r - (3.0 + b_bar * b_bar) * r + b_bar
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub b_bar: f64,
    pub r_star: f64,
    pub p_star: f64,
    pub delta_at_star: f64,
    pub lambda_at_star: f64,
    pub xi_at_star: f64,
    /// `Λ + Ξ̄ − ((r̄²−1)b̄ − r̄³)`, zero by algebra.
    pub identity_residual: f64,
}

/// Evaluates `Δ` and `Λ` at the constructed optimum (`m = 1`).
pub fn optimality_check(b_bar: f64) -> Result<OptimalityReport> {
    if !(b_bar > 0.0) {
        return Err(Error::OutOfRange { inequality: "b_bar > 0".into(), detail: format!("b_bar = {b_bar}") });
    }
    let r = solve_r_bar(b_bar)?;
    let p = r * r / 2.0;
    let lam = lambda_poly(r, b_bar);
    let xi = xi_bar(r, b_bar);
    Ok(OptimalityReport {
        b_bar,
        r_star: r,
        p_star: p,
        delta_at_star: delta_constraint(r, p, b_bar, 1.0),
        lambda_at_star: lam,
        xi_at_star: xi,
        identity_residual: lam + xi - ((r * r - 1.0) * b_bar - r * r * r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::continuous_t_closed_form;
    use crate::model::validate_problem;

    #[test]
    fn xi_bar_examples() {
        assert_eq!(xi_bar(1.0, 2.0), 0.0);
        assert_eq!(xi_bar(0.0, 5.0), -10.0);
        assert!(xi_bar(0.6, 3.6).abs() < 1e-14);
    }

    #[test]
    fn solve_r_bar_examples() {
        assert!((solve_r_bar(2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((solve_r_bar(3.6).unwrap() - 0.6).abs() < 1e-13);
        assert_eq!(solve_r_bar(0.0).unwrap(), 0.0);
    }

    #[test]
    fn certify_ode_examples() {
        let c = certify_ode(1.0, 2.0).unwrap();
        assert!((c.lambda - 1.0).abs() < 1e-14);
        assert!(c.valid);
        assert!((c.p_bar_hat.p11 - 0.5).abs() < 1e-15);
        assert!((c.p_bar_hat.p22 - 0.5).abs() < 1e-14);
        let c4 = certify_ode(4.0, 2.0).unwrap();
        assert!((c4.lambda - 2.0).abs() < 1e-14);
        let c0 = certify_ode(1.0, 0.0).unwrap();
        assert_eq!(c0.lambda, 0.0);
        assert!(c0.conservative);
        assert_eq!(c0.p_bar_hat, Sym2::new(0.5, 0.0, 0.0));
        assert!(c0.t_bar_hat.max_abs() < 1e-15);
        assert!(certify_ode(1.0, -1.0).is_err());
    }

    #[test]
    fn delta_matches_assembled_block() {
        for &(b, m) in &[(2.0, 1.0), (3.6, 1.0), (1.3, 4.0), (0.7, 0.25)] {
            let pc = validate_problem(m, m).unwrap();
            let ode = OdeParams::new(b, m).unwrap();
            for &r in &[0.2, 0.6, 1.1] {
                for &p in &[0.1 * m, 0.4 * m, 2.0 * m] {
                    let pb = Sym2::new(m / 2.0, m * r / 2.0, p);
                    let t = continuous_t_closed_form(&ode, &pb, m.sqrt() * r, 0.0, &pc);
                    let want = t.det12();
                    let got = delta_constraint(r, p, b, m);
                    assert!((got - want).abs() < 1e-12 * want.abs().max(m.powi(3)), "{got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn det_leading_block_vanishes_on_curve() {
        for &b in &[0.5, 1.0, 2.0, 3.6, 7.0] {
            let m = 2.0;
            let c = certify_ode(m, b).unwrap();
            let want = -(m.powi(3) * c.r_bar / 4.0) * xi_bar(c.r_bar, b);
            assert!((c.t_bar_hat.det12() - want).abs() < 1e-12);
            assert!(c.t_bar_hat.det12().abs() < 1e-12);
        }
    }

    #[test]
    fn optimality_examples() {
        let rep = optimality_check(2.0).unwrap();
        assert!((rep.lambda_at_star + 1.0).abs() < 1e-12);
        assert!(rep.delta_at_star.abs() < 1e-10);
        let rep = optimality_check(3.6).unwrap();
        assert!((rep.lambda_at_star + 2.52).abs() < 1e-12);
        assert!(rep.identity_residual.abs() < 1e-12);
        assert_eq!(lambda_poly(1.0, 2.0), -1.0);
    }

    #[test]
    fn xi_bar_is_odd() {
        for i in 0..20 {
            for j in 0..20 {
                let (r, b) = (-2.0 + 0.2 * i as f64, -4.0 + 0.4 * j as f64);
                assert!((xi_bar(-r, -b) + xi_bar(r, b)).abs() < 1e-12);
            }
        }
    }
}
