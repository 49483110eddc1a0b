//! Analytic Lyapunov certificates for Nesterov-type methods, Heavy Ball and
//! the damped-oscillator ODE they discretize.
//!
//! The discrete family is `x_{k+1} = x_k + β(x_k − x_{k−1}) − α∇f(y_k)` with
//! `y_k = x_k + γ(x_k − x_{k−1})`, studied for `f` in the class of
//! `m`-strongly convex, `L`-smooth functions. Certificates are built in closed
//! form in the nondimensional variables `δ = √(mα)`, `β = 1 − bδ`,
//! `ρ² = 1 − rδ` and then checked against the generic LMI recipe.

pub mod cert_continuous;
pub mod cert_discrete;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod lmi;
pub mod model;
pub mod negative;
mod roots;

pub use error::{Error, Result};
pub use model::{MethodFamily, MethodParams, NondimParams, OdeParams, ProblemClass};
