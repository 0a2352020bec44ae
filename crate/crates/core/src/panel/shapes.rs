//! Common shapes used to generate data and to describe ground truth.
//!
//! Unlike [`ShapeSpectrum`], a [`Shape`] may be non-band-limited; it exposes
//! its exact Fourier coefficients and norms so that truncation bias and
//! theoretical covariances can be computed without quadrature.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectrum::{CoeffEntry, ShapeSpectrum};
use crate::Result;

/// A real 2π-periodic function with known Fourier coefficients.
pub trait PeriodicShape: Send + Sync {
    fn eval(&self, t: f64) -> f64;

    /// Exact `c_l = ∫ f(t) e^{-ilt} dt/2π`.
    fn coeff(&self, l: i64) -> Complex64;

    /// `Σ_{l≠0} |c_l|²`.
    fn energy(&self) -> f64;

    /// `Σ l² |c_l|²`.
    fn derivative_energy(&self) -> f64;

    /// Highest nonzero frequency, if finite.
    fn band(&self) -> Option<usize>;

    fn mean(&self) -> f64 {
        self.coeff(0).re
    }

    /// `Σ_{|l|>m} |c_l|²`.
    fn tail_energy(&self, m: usize) -> f64 {
        let head: f64 = (1..=m as i64)
            .map(|l| self.coeff(l).norm_sqr() + self.coeff(-l).norm_sqr())
            .sum();
        (self.energy() - head).max(0.0)
    }

    /// The spectrum restricted to `|l| <= m`, centered or carrying `c_0`.
    fn truncated(&self, m: usize, centered: bool) -> ShapeSpectrum {
        let pos: Vec<Complex64> = (1..=m as i64).map(|l| self.coeff(l)).collect();
        ShapeSpectrum::from_positive((!centered).then(|| self.mean()), &pos)
    }
}

impl PeriodicShape for ShapeSpectrum {
    fn eval(&self, t: f64) -> f64 {
        ShapeSpectrum::eval(self, t)
    }

    fn coeff(&self, l: i64) -> Complex64 {
        ShapeSpectrum::coeff(self, l)
    }

    fn energy(&self) -> f64 {
        ShapeSpectrum::energy(self)
    }

    fn derivative_energy(&self) -> f64 {
        ShapeSpectrum::derivative_energy(self)
    }

    fn band(&self) -> Option<usize> {
        Some(self.m())
    }
}

/// Serializable description of a base shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    /// `scale · x (1 - x)` with `x = t / 2π` on `[0, 2π)`, extended periodically.
    Parabola { scale: f64 },
    /// Cosine series with `c_l = scale · |l|^(-exponent)` for `1 <= |l| <= terms`.
    PowerDecay {
        scale: f64,
        exponent: f64,
        terms: usize,
    },
    /// Explicit trigonometric polynomial.
    Spectrum {
        #[serde(default)]
        mean: Option<f64>,
        coeffs: Vec<CoeffEntry>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Base {
    Parabola { scale: f64 },
    PowerDecay { coeffs: Vec<f64> },
    Spectrum(ShapeSpectrum),
}

impl Base {
    fn eval(&self, t: f64) -> f64 {
        match self {
            Base::Parabola { scale } => {
                let x = t.rem_euclid(TAU) / TAU;
                scale * x * (1.0 - x)
            }
            Base::PowerDecay { coeffs } => {
                2.0 * coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * ((k + 1) as f64 * t).cos())
                    .sum::<f64>()
            }
            Base::Spectrum(s) => s.eval(t),
        }
    }

    fn coeff(&self, l: i64) -> Complex64 {
        match self {
            Base::Parabola { scale } => {
                if l == 0 {
                    Complex64::new(scale / 6.0, 0.0)
                } else {
                    Complex64::new(-scale / (2.0 * PI * PI * (l * l) as f64), 0.0)
                }
            }
            Base::PowerDecay { coeffs } => {
                let k = l.unsigned_abs() as usize;
                if k == 0 || k > coeffs.len() {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(coeffs[k - 1], 0.0)
                }
            }
            Base::Spectrum(s) => s.coeff(l),
        }
    }

    fn energy(&self) -> f64 {
        match self {
            Base::Parabola { scale } => scale * scale / 180.0,
            Base::PowerDecay { coeffs } => 2.0 * coeffs.iter().map(|c| c * c).sum::<f64>(),
            Base::Spectrum(s) => s.energy(),
        }
    }

    fn derivative_energy(&self) -> f64 {
        match self {
            Base::Parabola { scale } => scale * scale / (12.0 * PI * PI),
            Base::PowerDecay { coeffs } => {
                2.0 * coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| ((k + 1) * (k + 1)) as f64 * c * c)
                    .sum::<f64>()
            }
            Base::Spectrum(s) => s.derivative_energy(),
        }
    }

    fn band(&self) -> Option<usize> {
        match self {
            Base::Parabola { .. } => None,
            Base::PowerDecay { coeffs } => Some(coeffs.len()),
            Base::Spectrum(s) => Some(s.m()),
        }
    }
}

/// `t ↦ scale · base(t - shift) + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    base: Base,
    scale: f64,
    shift: f64,
    offset: f64,
}

impl Shape {
    pub fn from_spec(spec: &ShapeSpec) -> Result<Self> {
        let base = match spec {
            ShapeSpec::Parabola { scale } => Base::Parabola { scale: *scale },
            ShapeSpec::PowerDecay {
                scale,
                exponent,
                terms,
            } => Base::PowerDecay {
                coeffs: (1..=*terms)
                    .map(|l| scale * (l as f64).powf(-exponent))
                    .collect(),
            },
            ShapeSpec::Spectrum { mean, coeffs } => {
                let mut s = ShapeSpectrum::from_entries(coeffs, false)?;
                if let Some(c0) = mean {
                    s.set(0, Complex64::new(*c0, 0.0));
                }
                Base::Spectrum(s)
            }
        };
        Ok(Self::from_base(base))
    }

    pub fn parabola(scale: f64) -> Self {
        Self::from_base(Base::Parabola { scale })
    }

    pub fn power_decay(scale: f64, exponent: f64, terms: usize) -> Self {
        Self::from_spec(&ShapeSpec::PowerDecay {
            scale,
            exponent,
            terms,
        })
        .expect("power-decay spec is always valid")
    }

    pub fn spectrum(s: ShapeSpectrum) -> Self {
        Self::from_base(Base::Spectrum(s))
    }

    fn from_base(base: Base) -> Self {
        Self {
            base,
            scale: 1.0,
            shift: 0.0,
            offset: 0.0,
        }
    }

    /// Returns `k · self + c`.
    pub fn affine(&self, k: f64, c: f64) -> Self {
        Self {
            base: self.base.clone(),
            scale: self.scale * k,
            shift: self.shift,
            offset: self.offset * k + c,
        }
    }

    /// Returns `t ↦ self(t - delta)`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            shift: self.shift + delta,
            ..self.clone()
        }
    }

    /// Returns the centered version of `self`.
    pub fn centered(&self) -> Self {
        self.affine(1.0, -self.mean())
    }
}

impl PeriodicShape for Shape {
    fn eval(&self, t: f64) -> f64 {
        self.scale * self.base.eval(t - self.shift) + self.offset
    }

    fn coeff(&self, l: i64) -> Complex64 {
        let mut c = self.base.coeff(l) * self.scale;
        if self.shift != 0.0 {
            c *= Complex64::from_polar(1.0, -(l as f64) * self.shift);
        }
        if l == 0 {
            c += self.offset;
        }
        c
    }

    fn energy(&self) -> f64 {
        self.scale * self.scale * self.base.energy()
    }

    fn derivative_energy(&self) -> f64 {
        self.scale * self.scale * self.base.derivative_energy()
    }

    fn band(&self) -> Option<usize> {
        self.base.band()
    }
}
