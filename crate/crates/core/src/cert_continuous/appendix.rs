//! Certificates with `σ > 0`, which use smoothness and reach `r̄ > 1`.
//!
//! Imposing `t̄22 = t̄23 = t̄12 = 0` and `det P̄̂ = 0` expresses `P̄̂` and `b̄`
//! through `(r̄, s̄)` with `σ = √m s̄`; negative semidefiniteness then reduces
//! to the curve `F(r̄, s̄) = 0`. The best rate is the largest `r̄` on the branch
//! leaving `(1, 0)` with `r̄` increasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmi::{assemble_continuous_t_hat, is_negative_semidefinite, Sym2, SEMIDEFINITE_TOL};
use crate::model::{OdeParams, ProblemClass};
use crate::roots::illinois;

fn denominators(r: f64, s: f64, kappa: f64) -> Result<(f64, f64)> {
    let d2 = (kappa + 1.0) * r + 2.0 * kappa * s;
    if d2 == 0.0 || !d2.is_finite() {
        return Err(Error::Pole(format!("F undefined at r = {r}, s = {s}, kappa = {kappa}")));
    }
    Ok((2.0 * d2, d2))
}

pub fn f_appendix(r: f64, s: f64, kappa: f64) -> Result<f64> {
    let (d1, d2) = denominators(r, s, kappa)?;
    let u = r + s;
    let b = (kappa + 1.0) * r * u * u / d2 - 1.0;
    Ok(r * r * s * u * u / d1 - 0.25 * b * b)
}

/// `(∂F/∂r̄, ∂F/∂s̄)`.
pub fn f_appendix_grad(r: f64, s: f64, kappa: f64) -> Result<[f64; 2]> {
    let (d1, d2) = denominators(r, s, kappa)?;
    let k1 = kappa + 1.0;
    let u = r + s;
    let num_a = r * r * s * u * u;
    let da_dr = ((2.0 * r * s * u * u + 2.0 * r * r * s * u) * d1 - num_a * 2.0 * k1) / (d1 * d1);
    let da_ds = ((r * r * u * u + 2.0 * r * r * s * u) * d1 - num_a * 4.0 * kappa) / (d1 * d1);
    let b = k1 * r * u * u / d2 - 1.0;
    let db_dr = k1 * ((u * u + 2.0 * r * u) * d2 - r * u * u * k1) / (d2 * d2);
    let db_ds = k1 * (2.0 * r * u * d2 - r * u * u * 2.0 * kappa) / (d2 * d2);
    Ok([da_dr - 0.5 * b * db_dr, da_ds - 0.5 * b * db_ds])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixConstruction {
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
    pub b_bar: f64,
}

/// `P̄̂` and `b̄` from `(r̄, s̄)`.
pub fn appendix_construct(r: f64, s: f64, kappa: f64, m: f64) -> Result<AppendixConstruction> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("r_bar must be positive, got {r}")));
    }
    if r + s == 0.0 {
        return Err(Error::Pole("r_bar + s_bar = 0".into()));
    }
    let q22 = 0.5 + (s / r) * (kappa / (kappa + 1.0));
    let q12 = 0.5 * (r + s);
    let q11 = q12 * q12 / q22;
    Ok(AppendixConstruction { p11: m * q11, p12: m * q12, p22: m * q22, b_bar: r + q22 / q12 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSettings {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub growth: f64,
    pub max_steps: usize,
    /// Smallest accepted cosine between consecutive tangents.
    pub min_turn_cos: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        ContinuationSettings {
            initial_step: 1e-3,
            max_step: 1e-2,
            min_step: 1e-14,
            growth: 1.3,
            max_steps: 200_000,
            min_turn_cos: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub kappa: f64,
    /// Accepted `(r̄, s̄)` points, starting at `(1, 0)`.
    pub points: Vec<[f64; 2]>,
    /// Index `i` such that the fold lies between `points[i]` and `points[i + 1]`.
    pub fold_after: Option<usize>,
    pub rejected: usize,
}

/// `G = 2(κ + 1) F` has unit gradient `(0, 1)` at the start point, which keeps
/// the corrector well scaled for every `κ`.
struct Curve {
    kappa: f64,
    scale: f64,
}

impl Curve {
    fn new(kappa: f64) -> Self {
        Curve { kappa, scale: 2.0 * (kappa + 1.0) }
    }

    fn g(&self, p: [f64; 2]) -> f64 {
        f_appendix(p[0], p[1], self.kappa).map(|v| self.scale * v).unwrap_or(f64::NAN)
    }

    fn grad(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let g = f_appendix_grad(p[0], p[1], self.kappa).ok()?;
        Some([self.scale * g[0], self.scale * g[1]])
    }

    /// Unit tangent oriented along `prev`.
    fn tangent(&self, p: [f64; 2], prev: [f64; 2]) -> Option<[f64; 2]> {
        let g = self.grad(p)?;
        let n = g[0].hypot(g[1]);
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        let t = [g[1] / n, -g[0] / n];
        Some(if t[0] * prev[0] + t[1] * prev[1] >= 0.0 { t } else { [-t[0], -t[1]] })
    }
}

/// Pseudo-arclength trace of `F = 0` from `(1, 0)` along increasing `r̄`.
/// With `stop_at_fold` the trace ends at the first turning point in `r̄`;
/// otherwise it runs for `max_steps` accepted steps.
pub fn appendix_trace(kappa: f64, settings: &ContinuationSettings, stop_at_fold: bool) -> Result<Branch> {
    if !(kappa > 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa must exceed 1, got {kappa}")));
    }
    let curve = Curve::new(kappa);
    let mut p = [1.0, 0.0];
    let mut t = [1.0, 0.0];
    let mut h = settings.initial_step;
    let mut branch = Branch { kappa, points: vec![p], fold_after: None, rejected: 0 };

    while branch.points.len() <= settings.max_steps {
        if h < settings.min_step {
            return Err(Error::ContinuationStall {
                r: p[0],
                s: p[1],
                reason: format!("step fell below {} after {} rejections", settings.min_step, branch.rejected),
            });
        }
        let pred = [p[0] + h * t[0], p[1] + h * t[1]];
        let n = [-t[1], t[0]];
        let along = |tau: f64| curve.g([pred[0] + tau * n[0], pred[1] + tau * n[1]]);
        let accepted = illinois(along, -h, h, 1e-12 * h).and_then(|tau| {
            let q = [pred[0] + tau * n[0], pred[1] + tau * n[1]];
            let tq = curve.tangent(q, t)?;
            (tq[0] * t[0] + tq[1] * t[1] >= settings.min_turn_cos).then_some((q, tq))
        });
        let Some((q, tq)) = accepted else {
            branch.rejected += 1;
            h *= 0.5;
            continue;
        };
        branch.points.push(q);
        if t[0] > 0.0 && tq[0] <= 0.0 && branch.fold_after.is_none() {
            branch.fold_after = Some(branch.points.len() - 2);
            if stop_at_fold {
                return Ok(branch);
            }
        }
        p = q;
        t = tq;
        h = (h * settings.growth).min(settings.max_step);
    }
    if stop_at_fold {
        return Err(Error::ContinuationStall {
            r: p[0],
            s: p[1],
            reason: format!("no turning point in r within {} steps", settings.max_steps),
        });
    }
    Ok(branch)
}

/// Newton solve of `G(·, s) = 0` from `r0`.
fn r_on_curve(curve: &Curve, s: f64, r0: f64) -> Option<f64> {
    let mut r = r0;
    let mut step = f64::INFINITY;
    for _ in 0..60 {
        let g = curve.g([r, s]);
        let gr = curve.grad([r, s])?[0];
        if !g.is_finite() || gr == 0.0 || !gr.is_finite() {
            return None;
        }
        step = g / gr;
        r -= step;
        if step.abs() <= 1e-15 * r.abs() {
            return Some(r);
        }
    }
    // Rounding noise can keep the last correction just above the target.
    (step.abs() <= 1e-12 * r.abs()).then_some(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixPoint {
    pub kappa: f64,
    pub r_bar: f64,
    pub s_bar: f64,
    pub b_bar: f64,
    pub p11_over_m: f64,
    pub p12_over_m: f64,
    pub p22_over_m: f64,
    pub f_residual: f64,
    /// Spread of `r̄` over the final golden-section bracket.
    pub r_bracket_spread: f64,
    pub t_bar_eigenvalues: [f64; 3],
    pub valid: bool,
    pub steps: usize,
}

impl AppendixPoint {
    /// `b̄ − 2, r̄ − 1, s̄, p̄11/m − ½, p̄12/m − ½, p̄22/m − ½`.
    pub fn table_row(&self) -> [f64; 6] {
        [
            self.b_bar - 2.0,
            self.r_bar - 1.0,
            self.s_bar,
            self.p11_over_m - 0.5,
            self.p12_over_m - 0.5,
            self.p22_over_m - 0.5,
        ]
    }
}

/// Largest `r̄` on the branch of `F = 0` through `(1, 0)`, refined by
/// golden-section search over `s̄` between the two points that bracket the
/// turning point, and validated by assembling `T̄̂` with `m = 1`, `L = κ`.
pub fn appendix_max_rate(kappa: f64, settings: &ContinuationSettings) -> Result<AppendixPoint> {
    let branch = appendix_trace(kappa, settings, true)?;
    let i = branch.fold_after.expect("trace returns only after a fold");
    let (a, b) = (branch.points[i], branch.points[i + 1]);
    let stall = |reason: String| Error::ContinuationStall { r: a[0], s: a[1], reason };
    if !(b[1] > a[1]) {
        return Err(stall("turning point not bracketed in s".into()));
    }
    let curve = Curve::new(kappa);
    let r_guess = |s: f64| a[0] + (b[0] - a[0]) * (s - a[1]) / (b[1] - a[1]);
    let r_at = |s: f64| r_on_curve(&curve, s, r_guess(s));

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a[1], b[1]);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = r_at(x1).ok_or_else(|| stall("Newton failed in refinement".into()))?;
    let mut f2 = r_at(x2).ok_or_else(|| stall("Newton failed in refinement".into()))?;
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi.abs() {
            break;
        }
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = r_at(x1).ok_or_else(|| stall("Newton failed in refinement".into()))?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = r_at(x2).ok_or_else(|| stall("Newton failed in refinement".into()))?;
        }
    }
    let s = 0.5 * (lo + hi);
    let r = r_at(s).ok_or_else(|| stall("Newton failed at the optimum".into()))?;
    let spread = (f1 - r).abs().max((f2 - r).abs());

    let cons = appendix_construct(r, s, kappa, 1.0)?;
    let pc = ProblemClass::new(1.0, kappa)?;
    let ode = OdeParams::new(cons.b_bar, 1.0)?;
    let p = Sym2::new(cons.p11, cons.p12, cons.p22);
    let t = assemble_continuous_t_hat(&ode, &p, r, s, &pc);
    Ok(AppendixPoint {
        kappa,
        r_bar: r,
        s_bar: s,
        b_bar: cons.b_bar,
        p11_over_m: cons.p11,
        p12_over_m: cons.p12,
        p22_over_m: cons.p22,
        f_residual: f_appendix(r, s, kappa)?,
        r_bracket_spread: spread,
        t_bar_eigenvalues: t.eigenvalues(),
        valid: is_negative_semidefinite(&t, SEMIDEFINITE_TOL) && s >= 0.0 && r > 1.0,
        steps: branch.points.len() - 1,
    })
}
