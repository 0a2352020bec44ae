//! Plug-in asymptotic covariances and confidence intervals.
//!
//! Under the centered-shape constraint the limiting covariance of
//! `√n (β̂ - β)` is `σ² H⁻¹`, block diagonal over shifts, amplitudes and
//! levels. When the first level is pinned instead, amplitudes and levels
//! couple through the shape mean `c_0`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;

use crate::estimator::FitResult;
use crate::panel::{RegimeKind, ShapeSpectrum};
use crate::{wrap_angle, Error, Result};

/// `H`, its closed-form inverse, and the shape norms they are built from.
///
/// Coordinates are `(θ_2..θ_J, a_2..a_J, υ_1..υ_J)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyBlocks {
    pub h: DMatrix<f64>,
    pub h_inv: DMatrix<f64>,
    /// `‖f‖²` of the centered shape.
    pub norm_f: f64,
    /// `‖f'‖²`.
    pub norm_df: f64,
    pub sigma: f64,
}

impl EfficiencyBlocks {
    /// `σ² H⁻¹`, the covariance of `√n (β̂ - β)`.
    pub fn asymptotic_covariance(&self) -> DMatrix<f64> {
        &self.h_inv * (self.sigma * self.sigma)
    }

    /// `σ² H⁻¹ / n`.
    pub fn estimator_covariance(&self, n: usize) -> DMatrix<f64> {
        self.asymptotic_covariance() / n as f64
    }
}

fn check_amplitudes(a: &[f64]) -> Result<()> {
    if let Some(k) = a.iter().position(|x| *x == 0.0 || !x.is_finite()) {
        return Err(Error::ZeroAmplitudeCoordinate(k + 1));
    }
    if a.len() < 2 {
        return Err(Error::ConstraintViolation("need at least two curves".into()));
    }
    Ok(())
}

/// Shift and amplitude blocks shared by both regimes.
fn shift_amplitude_blocks(
    a: &[f64],
    norm_f: f64,
    norm_df: f64,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let j = a.len();
    let jf = j as f64;
    let d = j - 1;
    let a1 = a[0];
    let rest = &a[1..];

    let h_theta = DMatrix::from_fn(d, d, |r, c| {
        let diag = if r == c { rest[r] * rest[r] } else { 0.0 };
        norm_df * (diag - rest[r] * rest[r] * rest[c] * rest[c] / jf)
    });
    let h_theta_inv = DMatrix::from_fn(d, d, |r, c| {
        let diag = if r == c { 1.0 / (rest[r] * rest[r]) } else { 0.0 };
        (diag + 1.0 / (a1 * a1)) / norm_df
    });
    let h_a = DMatrix::from_fn(d, d, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        norm_f * (id + rest[r] * rest[c] / (a1 * a1))
    });
    let h_a_inv = centered_projection(rest, jf) / norm_f;
    (h_theta, h_theta_inv, h_a, h_a_inv)
}

/// `B = I - A Aᵗ / J`.
fn centered_projection(rest: &[f64], jf: f64) -> DMatrix<f64> {
    let d = rest.len();
    DMatrix::from_fn(d, d, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        id - rest[r] * rest[c] / jf
    })
}

/// `B⁻¹ = I + A Aᵗ / a_1²`.
fn centered_projection_inv(rest: &[f64], a1: f64) -> DMatrix<f64> {
    let d = rest.len();
    DMatrix::from_fn(d, d, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        id + rest[r] * rest[c] / (a1 * a1)
    })
}

fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    out
}

/// Assembles `H` and `H⁻¹` from the amplitudes and the (centered part of the)
/// shape. `sigma` is carried along for the covariance helpers.
pub fn efficiency_blocks(a: &[f64], shape: &ShapeSpectrum, sigma: f64) -> Result<EfficiencyBlocks> {
    efficiency_blocks_from_norms(a, shape.energy(), shape.derivative_energy(), sigma)
}

/// As [`efficiency_blocks`], from `‖f‖²` and `‖f'‖²` directly.
pub fn efficiency_blocks_from_norms(
    a: &[f64],
    norm_f: f64,
    norm_df: f64,
    sigma: f64,
) -> Result<EfficiencyBlocks> {
    check_amplitudes(a)?;
    if !(norm_f > 0.0 && norm_df > 0.0) {
        return Err(Error::EmptySpectrum);
    }
    let j = a.len();
    let (ht, hti, ha, hai) = shift_amplitude_blocks(a, norm_f, norm_df);
    let eye = DMatrix::identity(j, j);
    Ok(EfficiencyBlocks {
        h: block_diag(&[&ht, &ha, &eye]),
        h_inv: block_diag(&[&hti, &hai, &eye]),
        norm_f,
        norm_df,
        sigma,
    })
}

/// Limiting covariance when `υ_1 = 0` is imposed and the shape keeps its mean.
///
/// Coordinates are `(θ_2..θ_J, a_2..a_J, υ_2..υ_J)`.
#[derive(Debug, Clone, PartialEq)]
pub struct A1CovarianceBlocks {
    /// Covariance of `√n (β̂ - β)` divided by `σ²`.
    pub gamma: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub b_inv: DMatrix<f64>,
    /// Shape mean.
    pub c0: f64,
    /// `‖f‖²` including the mean.
    pub norm_f: f64,
    pub norm_df: f64,
    pub sigma: f64,
}

impl A1CovarianceBlocks {
    pub fn asymptotic_covariance(&self) -> DMatrix<f64> {
        &self.gamma * (self.sigma * self.sigma)
    }

    pub fn estimator_covariance(&self, n: usize) -> DMatrix<f64> {
        self.asymptotic_covariance() / n as f64
    }
}

/// Builds `Γ`. The shape must carry its mean `c_0` (the level of the
/// reference curve divided by its amplitude).
pub fn a1_covariance(a: &[f64], shape: &ShapeSpectrum, sigma: f64) -> Result<A1CovarianceBlocks> {
    a1_covariance_from_norms(a, shape.mean(), shape.energy(), shape.derivative_energy(), sigma)
}

/// As [`a1_covariance`], from the shape mean, the energy of the centered
/// shape, and `‖f'‖²`.
pub fn a1_covariance_from_norms(
    a: &[f64],
    c0: f64,
    centered: f64,
    norm_df: f64,
    sigma: f64,
) -> Result<A1CovarianceBlocks> {
    check_amplitudes(a)?;
    if !(norm_df > 0.0) {
        return Err(Error::EmptySpectrum);
    }
    let norm_f = centered + c0 * c0;
    let gap = norm_f - c0 * c0;
    if gap <= 1e-12 * norm_f {
        return Err(Error::DegenerateShape);
    }
    let j = a.len();
    let d = j - 1;
    let (_, hti, _, _) = shift_amplitude_blocks(a, centered, norm_df);
    let b = centered_projection(&a[1..], j as f64);
    let b_inv = centered_projection_inv(&a[1..], a[0]);

    let mut gamma = DMatrix::zeros(3 * d, 3 * d);
    gamma.view_mut((0, 0), (d, d)).copy_from(&hti);
    gamma.view_mut((d, d), (d, d)).copy_from(&(&b / gap));
    gamma
        .view_mut((2 * d, 2 * d), (d, d))
        .copy_from(&(&b_inv * (norm_f / gap)));
    for k in 0..d {
        gamma[(d + k, 2 * d + k)] = -c0 / gap;
        gamma[(2 * d + k, d + k)] = -c0 / gap;
    }
    Ok(A1CovarianceBlocks {
        gamma,
        b,
        b_inv,
        c0,
        norm_f,
        norm_df,
        sigma,
    })
}

/// Covariance of the free coordinates of `fit`, `σ̂² H⁻¹ / n` (or `σ̂² Γ / n`).
pub fn estimator_covariance(fit: &FitResult) -> Result<DMatrix<f64>> {
    let a = fit.beta_hat.a();
    Ok(match fit.regime().kind {
        RegimeKind::A0 => efficiency_blocks(a, &fit.shape_hat, fit.sigma_hat)?.estimator_covariance(fit.n),
        RegimeKind::A1 => a1_covariance(a, &fit.shape_hat, fit.sigma_hat)?.estimator_covariance(fit.n),
    })
}

/// Lower-tail standard normal quantile (Acklam's rational approximation,
/// relative error below 1.2e-9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const LOW: f64 = 0.02425;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub label: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub half_width: f64,
    /// Endpoints are angles in `[0, 2π)`; `lower > upper` means the interval
    /// wraps through 0.
    pub circular: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConfidenceIntervals {
    pub level: f64,
    pub z: f64,
    pub intervals: Vec<Interval>,
    /// Zero estimated noise: every interval is a point.
    pub degenerate: bool,
}

fn build_intervals(fit: &FitResult, level: f64, half_widths: &[f64], degenerate: bool) -> ConfidenceIntervals {
    let j = fit.beta_hat.curves();
    let regime = fit.regime();
    let labels = regime.free_labels(j);
    let values = fit.beta_hat.free_coordinates();
    let z = normal_quantile(0.5 * (1.0 + level));
    let intervals = labels
        .into_iter()
        .zip(values)
        .zip(half_widths)
        .enumerate()
        .map(|(k, ((label, estimate), &hw))| {
            let circular = k < j - 1;
            let (lower, upper) = if !circular {
                (estimate - hw, estimate + hw)
            } else if hw >= PI {
                (0.0, TAU)
            } else {
                (wrap_angle(estimate - hw), wrap_angle(estimate + hw))
            };
            Interval {
                label,
                estimate,
                lower,
                upper,
                half_width: hw,
                circular,
            }
        })
        .collect();
    ConfidenceIntervals {
        level,
        z,
        intervals,
        degenerate,
    }
}

/// Wald intervals `β̂_k ± z √(σ̂² H⁻¹ / n)_kk` for every free coordinate.
pub fn confidence_intervals(fit: &FitResult, level: f64) -> Result<ConfidenceIntervals> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::ConfigInvalid(format!("level {level} outside (0, 1)")));
    }
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    if fit.zero_noise || fit.sigma_hat == 0.0 {
        return Err(Error::ZeroNoise);
    }
    let cov = estimator_covariance(fit)?;
    let z = normal_quantile(0.5 * (1.0 + level));
    let hw: Vec<f64> = (0..cov.nrows()).map(|k| z * cov[(k, k)].sqrt()).collect();
    Ok(build_intervals(fit, level, &hw, false))
}

/// Point intervals for a fit with zero estimated noise.
pub fn point_intervals(fit: &FitResult, level: f64) -> ConfidenceIntervals {
    let dim = fit.regime().free_dim(fit.beta_hat.curves());
    build_intervals(fit, level, &vec![0.0; dim], true)
}
