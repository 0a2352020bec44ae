//! Semiparametric registration of periodic curves under the shape-invariant
//! model
//!
//! ```text
//! Y[i][j] = a_j f(t_i - theta_j) + upsilon_j + sigma * eps[i][j]
//! ```
//!
//! observed on an odd, equidistant grid over one period. The common shape `f`
//! is profiled out through its discrete Fourier coefficients, which leaves a
//! finite-dimensional criterion over shifts, amplitudes and levels. Levels and
//! amplitudes are profiled in closed form (column means and a leading
//! eigenvector), so the numerical search runs over the shifts only.
//!
//! Module map:
//! - [`grid`]: sampling grid and exact DFT on it.
//! - [`panel`]: observed panels, parameter sets, shapes, synthetic data.
//! - [`criterion`]: the profiled criterion, its gradient, and the limiting
//!   contrast used as a test oracle.
//! - [`estimator`]: the fitting procedure.
//! - [`inference`]: efficient covariance, standard errors, intervals.
//! - [`montecarlo`]: replication studies.
//! - [`io`] and [`cli`]: file formats and the command-line front end.

pub mod cli;
pub mod criterion;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod inference;
pub mod io;
pub mod montecarlo;
pub mod panel;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = x.rem_euclid(tau);
    if r >= tau {
        0.0
    } else {
        r
    }
}

/// Wraps an angle difference into `(-π, π]`.
pub fn unwrap_difference(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let r = wrap_angle(x);
    if r > pi {
        r - std::f64::consts::TAU
    } else {
        r
    }
}
