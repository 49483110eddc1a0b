//! Trajectories of the discrete methods and of the ODE, with the certified
//! Lyapunov functions evaluated along them.

mod objective;

pub use objective::{make_quadratic, make_softplus_composite, Objective, Quadratic, SoftplusComposite};

use serde::{Deserialize, Serialize};

use crate::cert_continuous::{build_p_bar, solve_r_bar, ContinuousCertificate};
use crate::cert_discrete::{build_p_hat, solve_r, DiscreteCertificate};
use crate::error::{Error, Result};
use crate::model::{MethodParams, OdeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRow {
    pub k: usize,
    pub x: Vec<f64>,
    /// `(x_k − x_{k−1})/δ`
    pub d: Vec<f64>,
    pub gap: f64,
    /// `f − f* + [d, x − x*] P̂ [d, x − x*]ᵀ`
    pub bracket: Option<f64>,
    /// `ln V_k = ln(bracket) − k ln ρ²`
    pub log_v: Option<f64>,
    /// `V_k / V_0`
    pub v_rel: Option<f64>,
    /// `C ρ^{2k}`
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTrajectory {
    pub delta: f64,
    pub rho_sq: Option<f64>,
    pub rows: Vec<DiscreteRow>,
    /// Step at which a non-finite iterate appeared; rows stop before it.
    pub diverged_at: Option<usize>,
}

impl DiscreteTrajectory {
    /// `max_k (V_{k+1} − V_k)/V_0`.
    pub fn max_monotonicity_violation(&self) -> Option<f64> {
        let v: Option<Vec<f64>> = self.rows.iter().map(|r| r.v_rel).collect();
        let v = v?;
        Some(v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max))
    }

    /// `max_k gap_k / (C ρ^{2k})`, computed in log space.
    pub fn max_bound_ratio(&self) -> Option<f64> {
        let first = self.rows.first()?;
        let log_c = first.bracket?.ln();
        let log_rho2 = self.rho_sq?.ln();
        Some(
            self.rows
                .iter()
                .map(|r| {
                    if r.gap == 0.0 {
                        0.0
                    } else {
                        (r.gap.ln() - log_c - r.k as f64 * log_rho2).exp()
                    }
                })
                .fold(0.0, f64::max),
        )
    }
}

fn dot_quad(p: &crate::lmi::Sym2, u: &[f64], w: &[f64]) -> f64 {
    u.iter().zip(w).map(|(&a, &b)| p.quad(a, b)).sum()
}

/// Runs `x_{k+1} = x_k + β(x_k − x_{k−1}) − α∇f(y_k)`,
/// `y_k = x_k + γ(x_k − x_{k−1})` for `n_steps` steps.
pub fn run_discrete(
    obj: &dyn Objective,
    mp: &MethodParams,
    x0: &[f64],
    x_minus1: &[f64],
    n_steps: usize,
    cert: Option<&DiscreteCertificate>,
) -> Result<DiscreteTrajectory> {
    let n = obj.dim();
    if x0.len() != n || x_minus1.len() != n {
        return Err(Error::InvalidArgument(format!("initial points must have dimension {n}")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    if !(mp.alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let xs = obj.minimizer().to_vec();
    let delta = (obj.m() * mp.alpha).sqrt();
    let log_rho2 = cert.map(|c| c.rho_sq.ln());

    let mut e: Vec<f64> = x0.iter().zip(&xs).map(|(a, b)| a - b).collect();
    let mut e_prev: Vec<f64> = x_minus1.iter().zip(&xs).map(|(a, b)| a - b).collect();
    let mut g = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut rows = Vec::with_capacity(n_steps + 1);
    let mut log_v0 = None;
    let mut log_c = None;

    let mut record = |k: usize, e: &[f64], e_prev: &[f64], rows: &mut Vec<DiscreteRow>| -> bool {
        let d: Vec<f64> = e.iter().zip(e_prev).map(|(a, b)| (a - b) / delta).collect();
        let gap = obj.gap_offset(e);
        if !gap.is_finite() || d.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let (mut bracket, mut log_v, mut v_rel, mut bound) = (None, None, None, None);
        if let (Some(c), Some(lr)) = (cert, log_rho2) {
            let br = gap + dot_quad(&c.p_hat, &d, e);
            let lv = br.ln() - k as f64 * lr;
            let lv0 = *log_v0.get_or_insert(lv);
            let lc = *log_c.get_or_insert(br.ln());
            bracket = Some(br);
            log_v = Some(lv);
            v_rel = Some(if br == 0.0 { 0.0 } else { (lv - lv0).exp() });
            bound = Some((lc + k as f64 * lr).exp());
        }
        let x = e.iter().zip(&xs).map(|(a, b)| a + b).collect();
        rows.push(DiscreteRow { k, x, d, gap, bracket, log_v, v_rel, bound });
        true
    };

    record(0, &e, &e_prev, &mut rows);
    let mut diverged_at = None;
    for k in 1..=n_steps {
        for i in 0..n {
            y[i] = e[i] + mp.gamma * (e[i] - e_prev[i]);
        }
        obj.gradient_offset(&y, &mut g);
        for i in 0..n {
            let next = e[i] + mp.beta * (e[i] - e_prev[i]) - mp.alpha * g[i];
            e_prev[i] = e[i];
            e[i] = next;
        }
        if e.iter().any(|v| !v.is_finite()) || !record(k, &e, &e_prev, &mut rows) {
            diverged_at = Some(k);
            break;
        }
    }
    Ok(DiscreteTrajectory { delta, rho_sq: cert.map(|c| c.rho_sq), rows, diverged_at })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeRow {
    pub t: f64,
    pub x: Vec<f64>,
    /// `ẋ/√m`
    pub v: Vec<f64>,
    pub gap: f64,
    pub bracket: Option<f64>,
    /// `V̄(t)/V̄(0)`
    pub v_rel: Option<f64>,
    /// `C̄ e^{−λt}`
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub h_int: f64,
    pub steps: usize,
    pub lambda: Option<f64>,
    /// Sampled rows; every integration step enters the monotonicity and
    /// bracket statistics below.
    pub rows: Vec<OdeRow>,
    /// `max_j (V̄(t_{j+1}) − V̄(t_j))/V̄(0)` over all integration steps.
    pub max_monotonicity_violation: Option<f64>,
    /// `max_j |bracket(t_j) − bracket(0)| / bracket(0)`.
    pub max_bracket_drift: Option<f64>,
    /// `max_j gap(t_j) / (C̄ e^{−λ t_j})`.
    pub max_bound_ratio: Option<f64>,
    pub diverged_at: Option<f64>,
}

/// Default integration step `min(0.005/√L, t_end/10⁴)`.
pub fn default_h_int(l: f64, t_end: f64) -> f64 {
    (0.005 / l.sqrt()).min(t_end / 1e4)
}

/// Integrates `v̇ = −b̄√m v − ∇f(x)/√m`, `ẋ = √m v` with classical RK4.
pub fn run_ode(
    obj: &dyn Objective,
    ode: &OdeParams,
    x0: &[f64],
    xdot0: &[f64],
    t_end: f64,
    h_int: Option<f64>,
    samples: usize,
    cert: Option<&ContinuousCertificate>,
) -> Result<OdeTrajectory> {
    let n = obj.dim();
    if x0.len() != n || xdot0.len() != n {
        return Err(Error::InvalidArgument(format!("initial state must have dimension {n}")));
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument("t_end must be positive".into()));
    }
    let h_nominal = h_int.unwrap_or_else(|| default_h_int(obj.l(), t_end));
    if !(h_nominal > 0.0) {
        return Err(Error::InvalidArgument("h_int must be positive".into()));
    }
    let steps = (t_end / h_nominal).ceil() as usize;
    let h = t_end / steps as f64;
    let sm = ode.m.sqrt();
    let bs = ode.b_bar * sm;
    let xs = obj.minimizer().to_vec();
    let every = (steps / samples.max(1)).max(1);

    // State z = [v, e].
    let mut z: Vec<f64> = xdot0.iter().map(|v| v / sm).chain(x0.iter().zip(&xs).map(|(a, b)| a - b)).collect();
    let mut g = vec![0.0; n];
    let rhs = |z: &[f64], out: &mut [f64], g: &mut [f64]| {
        let (v, e) = z.split_at(n);
        obj.gradient_offset(e, g);
        for i in 0..n {
            out[i] = -bs * v[i] - g[i] / sm;
            out[n + i] = sm * v[i];
        }
    };

    let lambda = cert.map(|c| c.lambda);
    let eval = |z: &[f64]| {
        let (v, e) = z.split_at(n);
        let gap = obj.gap_offset(e);
        let br = cert.map(|c| c.bracket(gap, v, e));
        (gap, br)
    };
    let make_row = |t: f64, z: &[f64], gap: f64, br: Option<f64>, br0: Option<f64>| {
        let (v, e) = z.split_at(n);
        let v_rel = match (br, br0, lambda) {
            (Some(b), Some(b0), Some(l)) => Some(if b0 == 0.0 { 0.0 } else { (l * t).exp() * b / b0 }),
            _ => None,
        };
        let bound = match (br0, lambda) {
            (Some(b0), Some(l)) => Some(b0 * (-l * t).exp()),
            _ => None,
        };
        OdeRow { t, x: e.iter().zip(&xs).map(|(a, b)| a + b).collect(), v: v.to_vec(), gap, bracket: br, v_rel, bound }
    };

    let (gap0, br0) = eval(&z);
    let mut rows = vec![make_row(0.0, &z, gap0, br0, br0)];
    let mut prev_vrel = br0.map(|_| 1.0);
    let mut max_viol: Option<f64> = br0.map(|_| f64::NEG_INFINITY);
    let mut max_drift: Option<f64> = br0.map(|_| 0.0);
    let mut max_ratio: Option<f64> = br0.map(|_| if gap0 == 0.0 { 0.0 } else { gap0 / br0.unwrap() });
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]);
    let mut diverged_at = None;
    for j in 1..=steps {
        rhs(&z, &mut k1, &mut g);
        for i in 0..2 * n {
            tmp[i] = z[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, &mut k2, &mut g);
        for i in 0..2 * n {
            tmp[i] = z[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, &mut k3, &mut g);
        for i in 0..2 * n {
            tmp[i] = z[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4, &mut g);
        for i in 0..2 * n {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = j as f64 * h;
        let (gap, br) = eval(&z);
        if !gap.is_finite() || z.iter().any(|v| !v.is_finite()) {
            diverged_at = Some(t);
            break;
        }
        if let (Some(b), Some(b0), Some(l)) = (br, br0, lambda) {
            let vr = if b0 == 0.0 { 0.0 } else { (l * t).exp() * b / b0 };
            let pv = prev_vrel.unwrap();
            max_viol = Some(max_viol.unwrap().max(vr - pv));
            prev_vrel = Some(vr);
            if b0 != 0.0 {
                max_drift = Some(max_drift.unwrap().max((b - b0).abs() / b0));
                let bound = b0 * (-l * t).exp();
                max_ratio = Some(max_ratio.unwrap().max(gap / bound));
            }
        }
        if j % every == 0 || j == steps {
            rows.push(make_row(t, &z, gap, br, br0));
        }
    }
    Ok(OdeTrajectory {
        h_int: h,
        steps,
        lambda,
        rows,
        max_monotonicity_violation: max_viol,
        max_bracket_drift: max_drift,
        max_bound_ratio: max_ratio,
        diverged_at,
    })
}

/// How the discrete momentum tracks the friction `b̄` as `h → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumSchedule {
    /// `β_h = 1 − b̄√m h`
    FixedFriction,
    /// `b_h = b̄/(1 + b̄δ/2)`; for `b̄ = 2` this is `β_h = (1 − δ)/(1 + δ)`.
    PolyakMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub h: f64,
    pub delta: f64,
    pub beta: f64,
    pub r_h: f64,
    pub r_err: f64,
    /// `max |P̂_h − P̄̂|` entrywise.
    pub p_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub b_bar: f64,
    pub m: f64,
    pub schedule: MomentumSchedule,
    pub r_bar: f64,
    pub rows: Vec<LimitRow>,
    /// Least-squares slope of `ln|r_h − r̄|` against `ln h` over the nonzero errors.
    pub fitted_exponent: Option<f64>,
    /// `max |r_h − r̄| / h`.
    pub fitted_k: f64,
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Compares the discrete rate variable and matrix with their ODE limits.
pub fn limit_study(b_bar: f64, m: f64, h_list: &[f64], schedule: MomentumSchedule) -> Result<LimitReport> {
    if !(b_bar > 0.0) || !(m > 0.0) {
        return Err(Error::InvalidArgument("limit study needs b_bar > 0 and m > 0".into()));
    }
    let r_bar = solve_r_bar(b_bar)?;
    let p_bar = build_p_bar(r_bar, m);
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let delta = m.sqrt() * h;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("h = {h} gives delta = {delta} outside (0, 1)")));
        }
        let b = match schedule {
            MomentumSchedule::FixedFriction => b_bar,
            MomentumSchedule::PolyakMap => b_bar / (1.0 + b_bar * delta / 2.0),
        };
        let r_h = solve_r(b, delta)?;
        let p = build_p_hat(r_h, delta, m);
        let p_dev = (p.p11 - p_bar.p11).abs().max((p.p12 - p_bar.p12).abs()).max((p.p22 - p_bar.p22).abs());
        rows.push(LimitRow { h, delta, beta: 1.0 - b * delta, r_h, r_err: (r_h - r_bar).abs(), p_dev });
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.r_err > 0.0).map(|r| (r.h.ln(), r.r_err.ln())).unzip();
    let fitted_k = rows.iter().map(|r| r.r_err / r.h).fold(0.0, f64::max);
    Ok(LimitReport { b_bar, m, schedule, r_bar, rows, fitted_exponent: ls_slope(&lx, &ly), fitted_k })
}
