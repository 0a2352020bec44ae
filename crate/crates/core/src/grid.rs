//! Equidistant sampling grid and exact discrete Fourier analysis on it.
//!
//! Everything here relies on discrete orthogonality of `e^{i l t}` over an odd
//! grid: for `|l|, |p| < n/2` the grid average of `e^{i (l - p) t}` is exactly
//! the Kronecker delta. Coefficients are computed by direct summation over a
//! table of roots of unity indexed by `(l * s) mod n`, which keeps every phase
//! exact to table precision.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::panel::ShapeSpectrum;
use crate::{Error, Result};

/// `n` equidistant points `2π i / n`, `i = 0..n`, with `n` odd.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    n: usize,
    points: Vec<f64>,
    /// `roots[k] = e^{2πik/n}`.
    roots: Vec<Complex64>,
}

impl SamplingGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Grid spacing `2π / n`.
    pub fn step(&self) -> f64 {
        TAU / self.n as f64
    }

    /// `e^{-i l t_s}`, exact up to the root table.
    #[inline]
    pub fn twiddle(&self, l: i64, s: usize) -> Complex64 {
        let n = self.n as i64;
        let k = (l * s as i64).rem_euclid(n) as usize;
        self.roots[k].conj()
    }

    /// Largest admissible band, `(n - 1) / 2`.
    pub fn max_band(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn check_band(&self, m: usize) -> Result<()> {
        if 2 * m >= self.n {
            return Err(Error::BandTooWide { m, n: self.n });
        }
        Ok(())
    }
}

/// Builds the grid `t_i = 2π (i - 1) / n`.
pub fn make_grid(n: usize) -> Result<SamplingGrid> {
    if n < 3 {
        return Err(Error::TooSmall(n));
    }
    if n.is_multiple_of(2) {
        return Err(Error::EvenSampleCount(n));
    }
    let points = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let roots = (0..n)
        .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / n as f64))
        .collect();
    Ok(SamplingGrid { n, points, roots })
}

/// Discrete Fourier coefficients for frequencies `-m..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DftBlock {
    m: usize,
    coeffs: Vec<Complex64>,
    source_n: usize,
}

impl DftBlock {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn source_n(&self) -> usize {
        self.source_n
    }

    /// Coefficient at frequency `l`, `|l| <= m`.
    pub fn get(&self, l: i64) -> Complex64 {
        assert!(l.unsigned_abs() as usize <= self.m, "frequency {l} outside band");
        self.coeffs[(l + self.m as i64) as usize]
    }

    /// Coefficients ordered from `-m` to `m`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// `c_l = (1/n) Σ_s samples[s] e^{-i l t_s}` for `|l| <= m`.
pub fn dft(samples: &[f64], grid: &SamplingGrid, m: usize) -> Result<DftBlock> {
    if samples.len() != grid.n {
        return Err(Error::LengthMismatch {
            expected: grid.n,
            got: samples.len(),
        });
    }
    grid.check_band(m)?;
    let inv_n = 1.0 / grid.n as f64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
    // Real input: compute l >= 0 and mirror.
    for l in 0..=m as i64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, &y) in samples.iter().enumerate() {
            acc += grid.twiddle(l, s) * y;
        }
        acc *= inv_n;
        coeffs[(m as i64 + l) as usize] = acc;
        coeffs[(m as i64 - l) as usize] = acc.conj();
    }
    Ok(DftBlock {
        m,
        coeffs,
        source_n: grid.n,
    })
}

/// `φ_n(t) = Σ_{s=1..n} e^{2iπ s t} / n`.
///
/// Equals 1 for integer `t` and 0 for `t = k/n` with `k` not a multiple of
/// `n`.
pub fn orthogonality_kernel(t: f64, n: usize) -> Complex64 {
    if t.fract() == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for s in 1..=n {
        // Reduce the phase before exponentiating to avoid losing digits for
        // large s.
        let phase = (s as f64 * t).fract();
        acc += Complex64::from_polar(1.0, TAU * phase);
    }
    acc / n as f64
}

/// Evaluates `Σ c_l e^{i l t}` over the stored band of `spec`.
pub fn evaluate_spectrum(spec: &ShapeSpectrum, t: f64) -> Result<f64> {
    spec.check_hermitian(1e-9)?;
    let m = spec.m() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for l in -m..=m {
        let c = spec.coeff(l);
        if c != Complex64::new(0.0, 0.0) {
            acc += c * Complex64::from_polar(1.0, l as f64 * t);
        }
    }
    Ok(acc.re)
}
