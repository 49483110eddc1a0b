//! Heavy Ball and the general `γ ≠ β` family admit no certificate of the
//! Nesterov form at accelerated step sizes `δ < c/√κ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cert_continuous::certify_ode;
use crate::cert_discrete::{build_p_hat, solve_r};
use crate::error::{Error, Result};
use crate::lmi::{
    assemble_discrete_t_hat, build_state_space_hat, is_negative_semidefinite, LmiKnobs, Sym2, Sym3, SEMIDEFINITE_TOL,
};
use crate::model::{NondimParams, ProblemClass};

/// `(1,1)` entry of `T̂` for Heavy Ball (`γ = 0`) in the closed form
/// `(β²−ρ²)p₁₁ + 2δβ²p₁₂ + δ²β²p₂₂ + δ²(L−m)β²/2`.
///
/// The generic assembly carries `L` in place of `L − m` in the last term, so
/// it exceeds this value by `mδ²β²/2`.
pub fn t11_heavy(p: &Sym2, rho_sq: f64, delta: f64, beta: f64, pc: &ProblemClass) -> f64 {
    t11_general(p, rho_sq, delta, beta, 0.0, pc)
}

/// `(β²−ρ²)p₁₁ + 2δβ²p₁₂ + δ²β²p₂₂ + δ²(L−m)(β−γ)²/2 − mγ²δ²/2`.
pub fn t11_general(p: &Sym2, rho_sq: f64, delta: f64, beta: f64, gamma: f64, pc: &ProblemClass) -> f64 {
    let (m, l) = (pc.m(), pc.l());
    let b2 = beta * beta;
    let g = beta - gamma;
    (b2 - rho_sq) * p.p11 + 2.0 * delta * b2 * p.p12 + delta * delta * b2 * p.p22 + delta * delta * (l - m) * g * g / 2.0
        - m * gamma * gamma * delta * delta / 2.0
}

/// `(λ/√m − 2b̄)p̄₁₁ + 2p̄₁₂ + (c/2)√(m/L)(L−m)`: the `δ → 0` limit of
/// `δ⁻¹ t₁₁` for Heavy Ball with `δ = c√(m/L)`. Positive values rule out a
/// certificate.
pub fn contradiction_limit(b_bar: f64, lambda: f64, p_bar: &Sym2, c: f64, pc: &ProblemClass) -> f64 {
    let (m, l) = (pc.m(), pc.l());
    (lambda / m.sqrt() - 2.0 * b_bar) * p_bar.p11 + 2.0 * p_bar.p12 + 0.5 * c * (m / l).sqrt() * (l - m)
}

/// `δ⁻¹ t₁₁` at finite `δ` with `β = 1 − b̄δ` and the Nesterov matrix `P̂_h`,
/// the `L` term taken at `δ = c√(m/L)`. Converges to [`contradiction_limit`]
/// at rate `O(δ)`.
pub fn contradiction_prelimit(b_bar: f64, delta: f64, c: f64, pc: &ProblemClass) -> Result<f64> {
    let (m, l) = (pc.m(), pc.l());
    let r = solve_r(b_bar, delta)?;
    let p = build_p_hat(r, delta, m);
    let beta = 1.0 - b_bar * delta;
    let b2 = beta * beta;
    let rho_sq = 1.0 - r * delta;
    Ok(((b2 - rho_sq) * p.p11 + 2.0 * delta * b2 * p.p12 + delta * delta * b2 * p.p22) / delta
        + 0.5 * c * (m / l).sqrt() * (l - m) * b2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanWitness {
    pub p_hat: Sym2,
    pub rho_sq: f64,
    pub t_hat: Sym3,
    pub lambda_max: f64,
    /// The candidate came from the Nesterov construction rather than the sampler.
    pub analytic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub kappa: f64,
    pub c: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub samples: usize,
    pub seed: u64,
    /// Least `λ_max(T̂)` over the candidates, all of which have `P̂ ⪰ 0`.
    pub best_lambda_max: f64,
    pub witness: ScanWitness,
    /// The best candidate passes the semidefiniteness test.
    pub feasible: bool,
    /// [`contradiction_limit`] at `b̄ = 2` with the ODE certificate.
    pub contradiction: f64,
    pub evidence: String,
}

const EVIDENCE: &str = "random probe: a negative result is evidence, not proof; the contradiction value is the h -> 0 argument";

/// Samples `(P̂, ρ²)` for the method with `m = 1`, `L = κ`,
/// `δ = 0.9c/√κ`, `β = 1 − 2δ`, and `γ = 0` (or `γ = β` as a control).
/// The analytic Nesterov candidate `(P̂_h, 1 − r_hδ)` is always evaluated too.
pub fn infeasibility_scan(kappa: f64, c: f64, n_samples: usize, seed: u64, gamma_equals_beta: bool) -> Result<ScanReport> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa must be >= 1, got {kappa}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
    }
    let m = 1.0;
    let pc = ProblemClass::new(m, kappa)?;
    let delta = 0.9 * c / kappa.sqrt();
    if delta >= 1.0 {
        return Err(Error::OutOfRange { inequality: "0.9*c/sqrt(kappa) < 1".into(), detail: format!("delta = {delta}") });
    }
    let b = 2.0;
    let beta = 1.0 - b * delta;
    let gamma = if gamma_equals_beta { beta } else { 0.0 };
    let alpha = delta * delta / m;
    let nd = NondimParams { delta, b, kappa };
    let ss = build_state_space_hat(&nd, gamma, alpha);
    let eval = |p: Sym2, rho_sq: f64, analytic: bool| {
        let t = assemble_discrete_t_hat(&ss, &p, &LmiKnobs::discrete(rho_sq), &pc);
        ScanWitness { p_hat: p, rho_sq, t_hat: t, lambda_max: t.lambda_max(), analytic }
    };

    let r_h = solve_r(b, delta)?;
    let mut best = eval(build_p_hat(r_h, delta, m), 1.0 - r_h * delta, true);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let u: f64 = rng.random_range(0.0..10.0);
        // 1 − U[0,1) lies in (0, 1].
        let r = 1.0 - rng.random::<f64>();
        let s = m * u;
        let p = Sym2::new(
            s * (g[0] * g[0] + g[2] * g[2]),
            s * (g[0] * g[1] + g[2] * g[3]),
            s * (g[1] * g[1] + g[3] * g[3]),
        );
        let w = eval(p, 1.0 - r * delta, false);
        if w.lambda_max < best.lambda_max {
            best = w;
        }
    }

    let ode = certify_ode(m, b)?;
    Ok(ScanReport {
        kappa,
        c,
        delta,
        alpha,
        beta,
        gamma,
        samples: n_samples,
        seed,
        best_lambda_max: best.lambda_max,
        feasible: is_negative_semidefinite(&best.t_hat, SEMIDEFINITE_TOL),
        witness: best,
        contradiction: contradiction_limit(b, ode.lambda, &ode.p_bar_hat, c, &pc),
        evidence: EVIDENCE.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::nesterov_t_closed_form;
    use crate::model::validate_problem;

    #[test]
    fn t11_heavy_examples() {
        let pc = validate_problem(1.0, 10.0).unwrap();
        let z = Sym2::new(0.0, 0.0, 0.0);
        let (d, b) = (0.2, 0.6);
        assert!((t11_heavy(&z, b * b, d, b, &pc) - d * d * 9.0 * b * b / 2.0).abs() < 1e-15);
        let pc1 = validate_problem(2.0, 2.0).unwrap();
        let p = Sym2::new(0.3, 0.1, 0.2);
        let want = (b * b - 0.5) * 0.3 + 2.0 * d * b * b * 0.1 + d * d * b * b * 0.2;
        assert!((t11_heavy(&p, 0.5, d, b, &pc1) - want).abs() < 1e-15);
    }

    #[test]
    fn t11_against_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let m: f64 = rng.random_range(0.1..3.0);
            let l = m * rng.random_range(1.0..1e3);
            let pc = validate_problem(m, l).unwrap();
            let delta: f64 = rng.random_range(0.01..0.99);
            let b: f64 = rng.random_range(-1.0..3.0);
            let gamma: f64 = rng.random_range(-1.0..1.0);
            let nd = NondimParams { delta, b, kappa: pc.kappa() };
            let beta = nd.beta();
            let p = Sym2::new(rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0));
            let rho_sq: f64 = rng.random_range(0.0..1.0);
            let alpha = delta * delta / m;
            let knobs = LmiKnobs::discrete(rho_sq);
            let t = assemble_discrete_t_hat(&build_state_space_hat(&nd, gamma, alpha), &p, &knobs, &pc);
            let gap = t.t11 - t11_general(&p, rho_sq, delta, beta, gamma, &pc);
            let want = m * delta * delta * (beta - gamma).powi(2) / 2.0;
            assert!((gap - want).abs() < 1e-12 * t.max_abs().max(1.0), "{gap} vs {want}");

            let t0 = assemble_discrete_t_hat(&build_state_space_hat(&nd, 0.0, alpha), &p, &knobs, &pc);
            let gap0 = t0.t11 - t11_heavy(&p, rho_sq, delta, beta, &pc);
            assert!((gap0 - m * delta * delta * beta * beta / 2.0).abs() < 1e-12 * t0.max_abs().max(1.0));

            let tn = nesterov_t_closed_form(&nd, alpha, &p, rho_sq, &pc);
            assert!((t11_general(&p, rho_sq, delta, beta, beta, &pc) - tn.t11).abs() < 1e-12 * tn.max_abs().max(1.0));
            assert_eq!(t11_general(&p, rho_sq, delta, beta, 0.0, &pc), t11_heavy(&p, rho_sq, delta, beta, &pc));
        }
    }

    #[test]
    fn t11_grows_with_l() {
        let z = Sym2::new(0.0, 0.0, 0.0);
        let (d, b) = (0.1, 0.8);
        let small = t11_general(&z, b * b, d, b, 0.3, &validate_problem(1.0, 1e2).unwrap());
        let big = t11_general(&z, b * b, d, b, 0.3, &validate_problem(1.0, 1e6).unwrap());
        assert!(big > 1e3 * small.max(1e-300));
        assert!(big > 100.0);
    }

    #[test]
    fn contradiction_example() {
        let pc = validate_problem(1.0, 1e6).unwrap();
        let ode = certify_ode(1.0, 2.0).unwrap();
        let v = contradiction_limit(2.0, ode.lambda, &ode.p_bar_hat, 1.0, &pc);
        assert!((v - 499.4995).abs() < 1e-9, "{v}");
        let pc1 = validate_problem(1.0, 1.0).unwrap();
        assert!((contradiction_limit(2.0, 1.0, &ode.p_bar_hat, 1.0, &pc1) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn prelimit_converges_linearly() {
        let pc = validate_problem(1.0, 1e4).unwrap();
        let ode = certify_ode(1.0, 2.0).unwrap();
        let lim = contradiction_limit(2.0, ode.lambda, &ode.p_bar_hat, 1.0, &pc);
        let mut prev = f64::INFINITY;
        for &d in &[1e-2, 1e-3, 1e-4, 1e-5] {
            let err = (contradiction_prelimit(2.0, d, 1.0, &pc).unwrap() - lim).abs();
            // The L term carries a β² factor, so the constant includes (c/2)√L.
            assert!(err <= 400.0 * d, "delta {d}: {err}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn nesterov_control_is_feasible() {
        let rep = infeasibility_scan(1e4, 1.0, 2000, 42, true).unwrap();
        assert!(rep.feasible, "{rep:?}");
        assert!(rep.witness.analytic);
    }

    #[test]
    fn heavy_ball_scan_is_infeasible() {
        let rep = infeasibility_scan(1e4, 1.0, 5000, 42, false).unwrap();
        assert!(!rep.feasible);
        assert!(rep.best_lambda_max > 0.0);
        assert!(rep.contradiction > 0.0);
    }

    #[test]
    fn scan_is_deterministic() {
        let a = infeasibility_scan(100.0, 1.0, 500, 7, false).unwrap();
        let b = infeasibility_scan(100.0, 1.0, 500, 7, false).unwrap();
        assert_eq!(a, b);
    }
}
