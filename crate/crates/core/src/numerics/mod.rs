//! Special functions, quadrature and root finding.

mod gamma;
mod hypergeometric;
mod quadrature;
mod roots;

use thiserror::Error;

pub use gamma::{beta_fn, ln_gamma, ln_gamma_signed, recip_gamma};
pub use hypergeometric::{hyp2f1, hyp2f1_minus_one};
pub use quadrature::{integrate, QuadratureSpec};
pub use roots::{find_root, RootBracket};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("{function}: domain error: {detail}")]
    Domain { function: &'static str, detail: String },
    #[error("{function}: divergent: {detail}")]
    Divergent { function: &'static str, detail: String },
    #[error("{function}: no convergence after {iterations} iterations (estimate {estimate})")]
    NonConvergence {
        function: &'static str,
        iterations: usize,
        estimate: f64,
    },
    #[error("quadrature depth exhausted: estimate {estimate}, error bound {error_bound:e}")]
    DepthExhausted { estimate: f64, error_bound: f64 },
    #[error("integrand not finite at {at} (value {value})")]
    NonFiniteIntegrand { at: f64, value: f64 },
    #[error("no sign change in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("root tolerance not reached: best {best}, residual {residual:e}")]
    ToleranceNotReached { best: f64, residual: f64 },
}
