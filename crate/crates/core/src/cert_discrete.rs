//! Closed-form Lyapunov certificates for the Nesterov family.
//!
//! With `δ = √(mα)`, `β = 1 − bδ` and `ρ² = 1 − rδ`, imposing
//! `t23 = t33 = 0` (for `α = 1/L`), a rank-one `P̂` and a singular leading
//! block of `T̂` leaves one cubic relation `Ξ_δ(r, b) = 0` between the
//! momentum and the certified rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmi::{
    assemble_discrete_t_hat, build_state_space_hat, is_negative_semidefinite, is_positive_semidefinite, LmiKnobs,
    Sym2, Sym3, SEMIDEFINITE_TOL,
};
use crate::model::{nondimensionalize, MethodParams, NondimParams, ProblemClass};
use crate::roots::monic_cubic_root;

/// Slack allowed on the closed inequalities of the rate theorem so that
/// parameters computed in floating point at the boundary are accepted.
const RANGE_SLACK: f64 = 1e-12;

pub fn xi_delta(r: f64, b: f64, delta: f64) -> f64 {
    let e = 1.0 - delta * delta;
    (r + delta) * e * b * b - 2.0 * (1.0 + r * r) * e * b + (r * r * r - 3.0 * r * r * delta + 3.0 * r - delta)
}

/// The unique real `r` with `Ξ_δ(r, b) = 0`.
///
/// As a cubic in `r` the relation is monic with discriminant
/// `4(1 − δ²)²(bδ − 1)² Q(b, δ)`, where `Q < 0` for `δ ∈ (0, 1)`. So the real
/// root is unique except at `β = 0` (`b = 1/δ`), where the cubic factors as
/// `(r − δ)(r − 1/δ)²`. Bisection on a sign change ignores the double root
/// there and returns `r = δ`, the rate of gradient descent.
pub fn solve_r(b: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("solve_r needs delta in (0, 1] and finite b, got delta = {delta}, b = {b}")));
    }
    let e = 1.0 - delta * delta;
    let c2 = -3.0 * delta - 2.0 * e * b;
    let c1 = 3.0 + e * b * b;
    let c0 = delta * e * b * b - 2.0 * e * b - delta;
    monic_cubic_root(c2, c1, c0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BRoots {
    Two { b_minus: f64, b_plus: f64 },
    Double { b: f64 },
    /// `1 − r² < 0`: no momentum achieves this rate variable.
    Complex,
}

/// Roots in `b` of `Ξ_δ(r, ·) = 0`.
pub fn b_roots(r: f64, delta: f64) -> Result<BRoots> {
    let e = 1.0 - delta * delta;
    let denom = (r + delta) * e;
    if r + delta == 0.0 {
        return Err(Error::Pole(format!("b_roots undefined at r = -delta = {r}")));
    }
    if denom == 0.0 {
        return Err(Error::Pole("b_roots undefined at delta = 1".into()));
    }
    let disc = (1.0 - r * r) * e;
    let scale = (r * r).max(1.0);
    let mid = (1.0 + r * r) * e;
    if disc.abs() <= 1e-14 * scale.max(1.0) {
        return Ok(BRoots::Double { b: mid / denom });
    }
    if disc < 0.0 {
        return Ok(BRoots::Complex);
    }
    let sq = (1.0 - r * delta) * disc.sqrt();
    let (lo, hi) = ((mid - sq) / denom, (mid + sq) / denom);
    let (b_minus, b_plus) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    Ok(BRoots::Two { b_minus, b_plus })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BRange {
    pub b_min: f64,
    pub b_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

/// The `b`-window on which `r = solve_r(b, δ) > 0`, and the `β`-window
/// `(−√(1 − δ²), √(1 − δ²))` assumed by the rate theorem. The latter is a strict
/// sub-window: `β = 1 − bδ` maps the `b`-window onto `|β| < 1/√(1 − δ²)`.
pub fn b_range(delta: f64) -> Result<BRange> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("b_range needs delta in (0, 1), got {delta}")));
    }
    let e = 1.0 - delta * delta;
    let s = e.sqrt();
    Ok(BRange { b_min: (e - s) / (delta * e), b_max: (e + s) / (delta * e), beta_min: -s, beta_max: s })
}

/// `P̂ = (m/2) [[(1 − rδ)², r(1 − rδ)], [r(1 − rδ), r²]]`.
pub fn build_p_hat(r: f64, delta: f64, m: f64) -> Sym2 {
    let q = 1.0 - r * delta;
    Sym2::new(0.5 * m * q * q, 0.5 * m * r * q, 0.5 * m * r * r)
}

pub const BOUND_RECIPE: &str = "C = f(x0) - f* + (m/2) * || ((1 - r*delta)/delta) * (x0 - x_{-1}) + r * (x0 - x*) ||^2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCertificate {
    pub problem: ProblemClass,
    pub params: MethodParams,
    pub nd: NondimParams,
    pub r: f64,
    pub rho_sq: f64,
    pub p_hat: Sym2,
    pub t_hat: Sym3,
    pub p_hat_eigenvalues: [f64; 2],
    pub t_hat_eigenvalues: [f64; 3],
    pub bound_recipe: String,
    pub valid: bool,
}

impl DiscreteCertificate {
    /// The bracket `f(x) − f* + [d, x − x*] P [d, x − x*]ᵀ` of the Lyapunov
    /// function, per coordinate slices.
    pub fn bracket(&self, gap: f64, d: &[f64], e: &[f64]) -> f64 {
        gap + d.iter().zip(e).map(|(&di, &ei)| self.p_hat.quad(di, ei)).sum::<f64>()
    }

    /// Constant `C` of `f(x_k) − f* ≤ C ρ^{2k}`.
    pub fn bound_constant(&self, gap0: f64, x0_minus_xm1: &[f64], x0_minus_xstar: &[f64]) -> f64 {
        let delta = self.nd.delta;
        let q = (1.0 - self.r * delta) / delta;
        let norm2: f64 = x0_minus_xm1
            .iter()
            .zip(x0_minus_xstar)
            .map(|(&a, &b)| {
                let v = q * a + self.r * b;
                v * v
            })
            .sum();
        gap0 + 0.5 * self.problem.m() * norm2
    }
}

/// Certificate for a Nesterov-family method on `F_{m,L}`.
pub fn certify(pc: &ProblemClass, mp: &MethodParams) -> Result<DiscreteCertificate> {
    if !mp.is_nesterov_family() {
        return Err(Error::NotNesterovFamily { beta: mp.beta, gamma: mp.gamma });
    }
    if !(mp.alpha > 0.0) {
        return Err(Error::OutOfRange { inequality: "alpha > 0".into(), detail: format!("alpha = {}", mp.alpha) });
    }
    if mp.alpha * pc.l() > 1.0 + RANGE_SLACK {
        return Err(Error::OutOfRange {
            inequality: "alpha <= 1/L".into(),
            detail: format!("alpha = {}, 1/L = {}", mp.alpha, 1.0 / pc.l()),
        });
    }
    let nd = nondimensionalize(pc, mp)?;
    let bound = (1.0 - pc.m() * mp.alpha).max(0.0).sqrt();
    if mp.beta.abs() > bound * (1.0 + RANGE_SLACK) + RANGE_SLACK {
        return Err(Error::OutOfRange {
            inequality: "-sqrt(1 - m*alpha) <= beta <= sqrt(1 - m*alpha)".into(),
            detail: format!("beta = {}, sqrt(1 - m*alpha) = {bound}", mp.beta),
        });
    }
    let r = solve_r(nd.b, nd.delta)?;
    if r <= 0.0 {
        return Err(Error::OutOfRange {
            inequality: "-sqrt(1 - m*alpha) < beta < sqrt(1 - m*alpha) (strict, for a contracting rate)".into(),
            detail: format!("beta = {} gives r = {r}", mp.beta),
        });
    }
    let rho_sq = nd.rho_sq(r);
    let p_hat = build_p_hat(r, nd.delta, pc.m());
    let ss = build_state_space_hat(&nd, mp.gamma, mp.alpha);
    let t_hat = assemble_discrete_t_hat(&ss, &p_hat, &LmiKnobs::discrete(rho_sq), pc);
    let valid = is_negative_semidefinite(&t_hat, SEMIDEFINITE_TOL)
        && is_positive_semidefinite(&p_hat, SEMIDEFINITE_TOL)
        && (0.0..1.0).contains(&rho_sq);
    Ok(DiscreteCertificate {
        problem: *pc,
        params: *mp,
        nd,
        r,
        rho_sq,
        p_hat,
        t_hat,
        p_hat_eigenvalues: p_hat.eigenvalues(),
        t_hat_eigenvalues: t_hat.eigenvalues(),
        bound_recipe: BOUND_RECIPE.into(),
        valid,
    })
}

/// `α = 1/L`, `β = γ = (1 − √(m/L))/(1 + √(m/L))`.
pub fn optimal_params(pc: &ProblemClass) -> MethodParams {
    let q = (pc.m() / pc.l()).sqrt();
    let beta = (1.0 - q) / (1.0 + q);
    MethodParams { alpha: 1.0 / pc.l(), beta, gamma: beta }
}

/// Perturbation of the optimal certificate: rate change `sigma ≤ 0` (in
/// units of `δ`, i.e. `ρ̃² = −σ̃ δ`) and matrix changes in units of `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    pub sigma: f64,
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
}

/// Slacks of the three linearized feasibility constraints around the
/// optimal certificate, with `m = 1`. All three must be `≥ 0`.
pub fn linearized_slacks(delta: f64, inc: &Increment) -> [f64; 3] {
    let d = delta;
    let Increment { sigma, p11, p12, p22 } = *inc;
    let c1 = p11 - 2.0 * (1.0 - d) * p12 + (1.0 - d) * (1.0 - d) * p22;
    let a = sigma / 2.0 + d * p12 + d * d * p22;
    let c2 = -a * a + d * d * d * p22 * (p11 + 2.0 * d * p12 + d * d * p22);
    [c1, c2, -p22]
}

/// Completed-square form of the second constraint: `lhs ≤ rhs` iff the
/// second slack is nonnegative.
pub fn completed_square_sides(delta: f64, inc: &Increment) -> (f64, f64) {
    let d = delta;
    let a = inc.sigma / 2.0 + d * inc.p12 + d * d * inc.p22;
    let u = inc.p11 / 2.0 + d * inc.p12;
    let w = u + d * d * inc.p22;
    (a * a + d * u * u, d * w * w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub delta: f64,
    pub samples: usize,
    pub radius: f64,
    pub tol: f64,
    pub seed: u64,
    /// Samples meeting all three constraints with `σ̃ < −tol`.
    pub improving_feasible: usize,
    /// Samples meeting all three constraints (any `σ̃ ≤ 0`).
    pub feasible: usize,
}

/// Random probe of the linearized problem: increments uniform in a ball,
/// `σ̃` folded to be nonpositive.
pub fn local_optimality_probe(delta: f64, n_samples: usize, radius: f64, tol: f64, seed: u64) -> ProbeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut improving = 0;
    let mut feasible = 0;
    for _ in 0..n_samples {
        // Rejection sampling in the 4-ball.
        let v = loop {
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            let n2: f64 = v.iter().map(|x| x * x).sum();
            if n2 <= 1.0 {
                break v;
            }
        };
        let inc = Increment { sigma: -radius * v[0].abs(), p11: radius * v[1], p12: radius * v[2], p22: radius * v[3] };
        let ok = linearized_slacks(delta, &inc).iter().all(|&s| s >= 0.0);
        if ok {
            feasible += 1;
            if inc.sigma < -tol {
                improving += 1;
            }
        }
    }
    ProbeReport { delta, samples: n_samples, radius, tol, seed, improving_feasible: improving, feasible }
}
