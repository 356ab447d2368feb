//! Shared numerical kernels: quadrature, fixed-step ODE integration,
//! Macdonald functions K0/K1 and improper-integral tail estimation.

mod bessel;
mod ode;
mod quadrature;
mod sampled;
mod tail;

pub use bessel::{bessel_k, bessel_k_flagged, bessel_k_scaled};
pub use ode::{solve_ivp, IvpSolution};
pub use quadrature::{integrate, integrate_with, QuadOptions, Quadrature};
pub use sampled::{Interpolation, SampledFunction};
pub use tail::{fit_power_law_tail, tail_integral, ImproperIntegral, TailModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("quadrature did not converge: best estimate {best}, error bound {error_bound}")]
    NonConvergence { best: f64, error_bound: f64 },
    #[error("integration blew up at node {index} (abscissa {abscissa})")]
    IntegrationBlowup { index: usize, abscissa: f64 },
    #[error("evaluation at {x} outside node range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
}
