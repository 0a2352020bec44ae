use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Two-sided Fourier coefficients `c_l`, `|l| <= m`, of a real trigonometric
/// polynomial.
///
/// A centered spectrum carries no `l = 0` term; its stored mean is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpectrum {
    m: usize,
    coeffs: Vec<Complex64>,
    centered: bool,
}

/// One serialized coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub l: i64,
    pub re: f64,
    pub im: f64,
}

impl ShapeSpectrum {
    /// All-zero spectrum of band `m`.
    pub fn zeros(m: usize, centered: bool) -> Self {
        Self {
            m,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * m + 1],
            centered,
        }
    }

    /// Builds a Hermitian spectrum from `c_1..c_m` and an optional mean `c_0`.
    /// `None` yields a centered spectrum.
    pub fn from_positive(mean: Option<f64>, positive: &[Complex64]) -> Self {
        let m = positive.len();
        let mut s = Self::zeros(m, mean.is_none());
        if let Some(c0) = mean {
            s.coeffs[m] = Complex64::new(c0, 0.0);
        }
        for (k, &c) in positive.iter().enumerate() {
            let l = k + 1;
            s.coeffs[m + l] = c;
            s.coeffs[m - l] = c.conj();
        }
        s
    }

    /// Wraps raw two-sided coefficients (`-m..=m`) without validation.
    pub fn from_two_sided_unchecked(m: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), 2 * m + 1);
        Self {
            m,
            coeffs,
            centered: false,
        }
    }

    /// Builds from serialized entries; missing frequencies are zero.
    pub fn from_entries(entries: &[CoeffEntry], centered: bool) -> Result<Self> {
        let m = entries.iter().map(|e| e.l.unsigned_abs() as usize).max().unwrap_or(0);
        let mut s = Self::zeros(m, centered);
        for e in entries {
            if centered && e.l == 0 && (e.re != 0.0 || e.im != 0.0) {
                return Err(Error::ConstraintViolation(
                    "centered spectrum has a nonzero l=0 coefficient".into(),
                ));
            }
            s.coeffs[(e.l + m as i64) as usize] = Complex64::new(e.re, e.im);
        }
        s.check_hermitian(1e-9)?;
        Ok(s)
    }

    pub fn entries(&self) -> Vec<CoeffEntry> {
        let m = self.m as i64;
        (-m..=m)
            .filter(|&l| !(self.centered && l == 0))
            .map(|l| {
                let c = self.coeff(l);
                CoeffEntry { l, re: c.re, im: c.im }
            })
            .collect()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// `c_l`; zero outside the band.
    pub fn coeff(&self, l: i64) -> Complex64 {
        if l.unsigned_abs() as usize > self.m {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(l + self.m as i64) as usize]
    }

    pub(crate) fn set(&mut self, l: i64, c: Complex64) {
        self.coeffs[(l + self.m as i64) as usize] = c;
    }

    /// `c_0`.
    pub fn mean(&self) -> f64 {
        self.coeff(0).re
    }

    /// `Σ_{l≠0} |c_l|²`, the squared L² norm of the centered part.
    pub fn energy(&self) -> f64 {
        let m = self.m as i64;
        (-m..=m).filter(|&l| l != 0).map(|l| self.coeff(l).norm_sqr()).sum()
    }

    /// `Σ l² |c_l|²`, the squared L² norm of the derivative.
    pub fn derivative_energy(&self) -> f64 {
        let m = self.m as i64;
        (-m..=m)
            .map(|l| (l * l) as f64 * self.coeff(l).norm_sqr())
            .sum()
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let m = self.m as i64;
        for l in 0..=m {
            let d = self.coeff(l) - self.coeff(-l).conj();
            if d.norm() > tol {
                return Err(Error::NonHermitianSpectrum(l));
            }
        }
        Ok(())
    }

    /// Evaluates the real trigonometric polynomial at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.mean();
        for l in 1..=self.m {
            acc += 2.0 * (self.coeff(l as i64) * Complex64::from_polar(1.0, l as f64 * t)).re;
        }
        acc
    }
}

/// Removes `c_0` from a spectrum.
///
/// Returns the centered spectrum and the level shift `a_j c_0` that each curve
/// must absorb (`υ_j ← υ_j + a_j c_0`) so that `a_j f(· - θ_j) + υ_j` is
/// unchanged.
pub fn center_shape(raw: &ShapeSpectrum, a: &[f64]) -> (ShapeSpectrum, Vec<f64>) {
    let c0 = raw.mean();
    let mut centered = raw.clone();
    centered.set(0, Complex64::new(0.0, 0.0));
    centered.centered = true;
    let shifts = a.iter().map(|aj| aj * c0).collect();
    (centered, shifts)
}
