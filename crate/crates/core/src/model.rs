use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The function class `F_{m,L}`: `m`-strongly convex with `L`-Lipschitz gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemClass {
    m: f64,
    #[serde(rename = "L")]
    l: f64,
    kappa: f64,
}

impl ProblemClass {
    pub fn new(m: f64, l: f64) -> Result<Self> {
        validate_problem(m, l)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

pub fn validate_problem(m: f64, l: f64) -> Result<ProblemClass> {
    if !m.is_finite() || !l.is_finite() {
        return Err(Error::InvalidProblem(format!("non-finite input m = {m}, L = {l}")));
    }
    if m <= 0.0 {
        return Err(Error::InvalidProblem(format!("m must be positive, got {m}")));
    }
    if l < m {
        return Err(Error::InvalidProblem(format!("L = {l} is smaller than m = {m}")));
    }
    Ok(ProblemClass { m, l, kappa: l / m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodFamily {
    GradientDescent,
    Nesterov,
    HeavyBall,
    General,
}

/// Step size `alpha`, momentum `beta` and extrapolation `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl MethodParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if !beta.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidArgument("beta and gamma must be finite".into()));
        }
        Ok(MethodParams { alpha, beta, gamma })
    }

    pub fn nesterov(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, beta)
    }

    pub fn heavy_ball(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.0)
    }

    pub fn gradient_descent(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, 0.0)
    }

    pub fn family(&self) -> MethodFamily {
        if self.beta == 0.0 && self.gamma == 0.0 {
            MethodFamily::GradientDescent
        } else if self.gamma == self.beta {
            MethodFamily::Nesterov
        } else if self.gamma == 0.0 {
            MethodFamily::HeavyBall
        } else {
            MethodFamily::General
        }
    }

    /// GD is the `β = γ = 0` member of the Nesterov family.
    pub fn is_nesterov_family(&self) -> bool {
        self.gamma == self.beta
    }
}

/// `δ = √(mα)` and `b = (1 − β)/δ`, together with the condition number.
///
/// The rate variable `r` (with `ρ² = 1 − rδ`) is not a free parameter of the
/// method; it is produced by a certificate and stored there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NondimParams {
    pub delta: f64,
    pub b: f64,
    pub kappa: f64,
}

impl NondimParams {
    pub fn beta(&self) -> f64 {
        1.0 - self.b * self.delta
    }

    pub fn rho_sq(&self, r: f64) -> f64 {
        1.0 - r * self.delta
    }
}

pub fn nondimensionalize(pc: &ProblemClass, mp: &MethodParams) -> Result<NondimParams> {
    if !(mp.alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", mp.alpha)));
    }
    let delta = (pc.m() * mp.alpha).sqrt();
    Ok(NondimParams { delta, b: (1.0 - mp.beta) / delta, kappa: pc.kappa() })
}

/// Inverse of [`nondimensionalize`] for a Nesterov-family method (`γ = β`).
pub fn dimensionalize(pc: &ProblemClass, nd: &NondimParams) -> MethodParams {
    let beta = nd.beta();
    MethodParams { alpha: nd.delta * nd.delta / pc.m(), beta, gamma: beta }
}

/// Friction `b_bar` of `ẍ + b̄√m ẋ + ∇f(x) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeParams {
    pub b_bar: f64,
    pub m: f64,
}

impl OdeParams {
    pub fn new(b_bar: f64, m: f64) -> Result<Self> {
        if !b_bar.is_finite() {
            return Err(Error::InvalidArgument(format!("b_bar must be finite, got {b_bar}")));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidArgument(format!("m must be positive, got {m}")));
        }
        Ok(OdeParams { b_bar, m })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        assert_eq!(validate_problem(1.0, 100.0).unwrap().kappa(), 100.0);
        assert_eq!(validate_problem(2.0, 2.0).unwrap().kappa(), 1.0);
        assert!(validate_problem(1.0, 0.5).is_err());
        assert!(validate_problem(0.0, 1.0).is_err());
        assert!(validate_problem(-1.0, 1.0).is_err());
        assert!(validate_problem(f64::NAN, 1.0).is_err());
        assert!(validate_problem(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn nondim_examples() {
        let pc = validate_problem(1.0, 100.0).unwrap();
        let nd = nondimensionalize(&pc, &MethodParams::nesterov(0.01, 9.0 / 11.0).unwrap()).unwrap();
        assert!((nd.delta - 0.1).abs() < 1e-15);
        assert!((nd.b - 20.0 / 11.0).abs() < 1e-13);

        let nd = nondimensionalize(&pc, &MethodParams::gradient_descent(0.01).unwrap()).unwrap();
        assert!((nd.b - 10.0).abs() < 1e-13);

        let pc4 = validate_problem(4.0, 4.0).unwrap();
        let nd = nondimensionalize(&pc4, &MethodParams::nesterov(0.25, 1.0).unwrap()).unwrap();
        assert_eq!(nd.delta, 1.0);
        assert_eq!(nd.b, 0.0);
    }

    #[test]
    fn family_tags() {
        assert_eq!(MethodParams::gradient_descent(0.1).unwrap().family(), MethodFamily::GradientDescent);
        assert_eq!(MethodParams::nesterov(0.1, 0.5).unwrap().family(), MethodFamily::Nesterov);
        assert_eq!(MethodParams::heavy_ball(0.1, 0.5).unwrap().family(), MethodFamily::HeavyBall);
        assert_eq!(MethodParams::new(0.1, 0.5, 0.2).unwrap().family(), MethodFamily::General);
        assert!(MethodParams::new(0.0, 0.5, 0.2).is_err());
    }
}
