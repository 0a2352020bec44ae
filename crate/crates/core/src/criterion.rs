//! The profiled least-squares criterion.
//!
//! For a panel with per-curve DFT coefficients `d[j][l]`, the shape that
//! minimizes the residual sum of squares over trigonometric polynomials of
//! degree `m` has coefficients
//!
//! ```text
//! ĉ_l(θ, a) = Σ_j a_j e^{ilθ_j} d[j][l] / Σ_j a_j²,   1 <= |l| <= m
//! ```
//!
//! and substituting it back gives
//!
//! ```text
//! M_n(θ, a, υ) = (1/nJ) Σ_{i,j} (Y_ij - υ_j)² - Σ_{1<=|l|<=m} |ĉ_l|².
//! ```
//!
//! Under A1 the shape keeps its mean, so `l = 0` joins the sum with
//! `ĉ_0 = Σ_j a_j (ȳ_j - υ_j) / Σ a_j²`.

use num_complex::Complex64;

use crate::panel::{ConstraintRegime, CurvePanel, ParameterSet, RegimeKind, ShapeSpectrum};
use crate::{Error, Result};

/// Immutable data-side state of the criterion for a fixed band `m`.
#[derive(Debug, Clone)]
pub struct CriterionContext<'a> {
    panel: &'a CurvePanel,
    m: usize,
    regime: ConstraintRegime,
    /// `d[j][l + m]`.
    d: Vec<Vec<Complex64>>,
    means: Vec<f64>,
    /// `(1/n) Σ_i (Y_ij - ȳ_j)²`.
    spread: Vec<f64>,
}

impl<'a> CriterionContext<'a> {
    pub fn new(panel: &'a CurvePanel, m: usize, regime: ConstraintRegime) -> Result<Self> {
        if m == 0 {
            return Err(Error::ConfigInvalid("band m must be at least 1".into()));
        }
        panel.grid().check_band(m)?;
        let d = panel
            .dft_blocks(m)?
            .into_iter()
            .map(|b| b.as_slice().to_vec())
            .collect();
        let means = panel.means();
        let spread = panel
            .rows()
            .iter()
            .zip(&means)
            .map(|(r, mu)| r.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / r.len() as f64)
            .collect();
        Ok(Self {
            panel,
            m,
            regime,
            d,
            means,
            spread,
        })
    }

    pub fn panel(&self) -> &'a CurvePanel {
        self.panel
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn regime(&self) -> ConstraintRegime {
        self.regime
    }

    pub fn curves(&self) -> usize {
        self.d.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// `d[j][l]` for `|l| <= m`.
    #[inline]
    pub fn d(&self, j: usize, l: i64) -> Complex64 {
        self.d[j][(l + self.m as i64) as usize]
    }

    fn check_dims(&self, theta: &[f64], a: &[f64], upsilon: Option<&[f64]>) -> Result<f64> {
        let j = self.curves();
        if theta.len() != j || a.len() != j || upsilon.is_some_and(|u| u.len() != j) {
            return Err(Error::LengthMismatch {
                expected: j,
                got: theta.len().min(a.len()),
            });
        }
        let ss: f64 = a.iter().map(|x| x * x).sum();
        if ss <= 0.0 || !ss.is_finite() {
            return Err(Error::DegenerateAmplitude);
        }
        Ok(ss)
    }

    /// `ĉ_l(θ, a)` for `1 <= |l| <= m`, as a centered spectrum. Levels do not
    /// enter: the grid sum of `e^{-ilt}` vanishes for `1 <= |l| < n/2`.
    pub fn profiled_coefficients(&self, theta: &[f64], a: &[f64]) -> Result<ShapeSpectrum> {
        let ss = self.check_dims(theta, a, None)?;
        let mut spec = ShapeSpectrum::zeros(self.m, true);
        for l in 1..=self.m as i64 {
            let c = self.weighted_sum(theta, a, l) / ss;
            spec.set(l, c);
            spec.set(-l, c.conj());
        }
        Ok(spec)
    }

    /// `ĉ_0 = Σ_j a_j (ȳ_j - υ_j) / Σ a_j²`, used under A1.
    pub fn profiled_mean(&self, a: &[f64], upsilon: &[f64]) -> Result<f64> {
        let ss: f64 = a.iter().map(|x| x * x).sum();
        if ss <= 0.0 {
            return Err(Error::DegenerateAmplitude);
        }
        Ok(a.iter()
            .zip(&self.means)
            .zip(upsilon)
            .map(|((aj, yj), uj)| aj * (yj - uj))
            .sum::<f64>()
            / ss)
    }

    /// Shape estimate at `(θ, a, υ)`: centered under A0, with `ĉ_0` under A1.
    pub fn shape_at(&self, theta: &[f64], a: &[f64], upsilon: &[f64]) -> Result<ShapeSpectrum> {
        let spec = self.profiled_coefficients(theta, a)?;
        match self.regime.kind {
            RegimeKind::A0 => Ok(spec),
            RegimeKind::A1 => {
                let c0 = self.profiled_mean(a, upsilon)?;
                let mut pos = Vec::with_capacity(self.m);
                for l in 1..=self.m as i64 {
                    pos.push(spec.coeff(l));
                }
                Ok(ShapeSpectrum::from_positive(Some(c0), &pos))
            }
        }
    }

    #[inline]
    fn weighted_sum(&self, theta: &[f64], a: &[f64], l: i64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, (&t, &aj)) in theta.iter().zip(a).enumerate() {
            acc += self.d(j, l) * Complex64::from_polar(aj, l as f64 * t);
        }
        acc
    }

    /// `(1/nJ) Σ (Y_ij - υ_j)²`, computed from centered spreads.
    fn level_term(&self, upsilon: &[f64]) -> f64 {
        let j = self.curves() as f64;
        self.spread
            .iter()
            .zip(&self.means)
            .zip(upsilon)
            .map(|((s, y), u)| s + (y - u).powi(2))
            .sum::<f64>()
            / j
    }

    /// `M_n(θ, a, υ)`.
    pub fn criterion_value(&self, theta: &[f64], a: &[f64], upsilon: &[f64]) -> Result<f64> {
        let ss = self.check_dims(theta, a, Some(upsilon))?;
        let mut energy = 0.0;
        for l in 1..=self.m as i64 {
            // Real data: |ĉ_{-l}| = |ĉ_l|.
            energy += 2.0 * (self.weighted_sum(theta, a, l) / ss).norm_sqr();
        }
        if self.regime.kind == RegimeKind::A1 {
            energy += self.profiled_mean(a, upsilon)?.powi(2);
        }
        Ok(self.level_term(upsilon) - energy)
    }

    /// `M_n` at a full parameter set.
    pub fn value_at(&self, beta: &ParameterSet) -> Result<f64> {
        self.criterion_value(beta.theta(), beta.a(), beta.upsilon())
    }

    /// Analytic gradient over the free coordinates
    /// `(θ_2..θ_J, a_2..a_J, υ)` where the amplitudes use the chart
    /// `a_1 = sqrt(J - Σ_{j>=2} a_j²)` and `υ` is `υ_1..υ_J` (A0) or
    /// `υ_2..υ_J` (A1).
    pub fn criterion_gradient(&self, theta: &[f64], a: &[f64], upsilon: &[f64]) -> Result<Vec<f64>> {
        let ss = self.check_dims(theta, a, Some(upsilon))?;
        let nj = self.curves();
        let mut g_theta = vec![0.0; nj];
        let mut g_a = vec![0.0; nj];
        let mut g_u = vec![0.0; nj];

        // Partials of Σ|ĉ_l|² over the band; l and -l contribute equally.
        for l in 1..=self.m as i64 {
            let c = self.weighted_sum(theta, a, l) / ss;
            let cc = c.conj();
            for j in 0..nj {
                let w = self.d(j, l) * Complex64::from_polar(1.0, l as f64 * theta[j]);
                let dth = Complex64::new(0.0, l as f64 * a[j]) * w / ss;
                g_theta[j] -= 4.0 * (cc * dth).re;
                let da = (w - c * (2.0 * a[j])) / ss;
                g_a[j] -= 4.0 * (cc * da).re;
            }
        }
        let jf = nj as f64;
        for j in 0..nj {
            g_u[j] = -2.0 / jf * (self.means[j] - upsilon[j]);
        }
        if self.regime.kind == RegimeKind::A1 {
            let c0 = self.profiled_mean(a, upsilon)?;
            for j in 0..nj {
                let w = self.means[j] - upsilon[j];
                g_a[j] -= 2.0 * c0 * (w - 2.0 * a[j] * c0) / ss;
                g_u[j] += 2.0 * c0 * a[j] / ss;
            }
        }

        let mut out = Vec::with_capacity(self.regime.free_dim(nj));
        out.extend_from_slice(&g_theta[1..]);
        for k in 1..nj {
            out.push(g_a[k] - a[k] / a[0] * g_a[0]);
        }
        match self.regime.kind {
            RegimeKind::A0 => out.extend_from_slice(&g_u),
            RegimeKind::A1 => out.extend_from_slice(&g_u[1..]),
        }
        Ok(out)
    }

    /// Levels minimizing `M_n` for given amplitudes: the clipped column means
    /// under A0; under A1, `υ_j = ȳ_j - a_j ȳ_1 / a_1` with `υ_1 = 0`, which
    /// makes the `l = 0` residual `ȳ - υ` proportional to `a`.
    pub fn profiled_levels(&self, a: &[f64]) -> Vec<f64> {
        match self.regime.kind {
            RegimeKind::A0 => {
                let cap = self.regime.upsilon_max;
                self.means.iter().map(|y| y.clamp(-cap, cap)).collect()
            }
            RegimeKind::A1 => {
                let ratio = self.means[0] / a[0];
                let mut u: Vec<f64> = self
                    .means
                    .iter()
                    .zip(a)
                    .map(|(y, aj)| y - aj * ratio)
                    .collect();
                u[0] = 0.0;
                u
            }
        }
    }
}

/// Maps chart coordinates `(a_2..a_J)` to the full amplitude vector.
pub fn amplitude_from_chart(free: &[f64]) -> Result<Vec<f64>> {
    let j = free.len() + 1;
    let rest: f64 = free.iter().map(|x| x * x).sum();
    let a1sq = j as f64 - rest;
    if a1sq <= 0.0 {
        return Err(Error::ZeroReferenceAmplitude);
    }
    let mut a = Vec::with_capacity(j);
    a.push(a1sq.sqrt());
    a.extend_from_slice(free);
    Ok(a)
}

/// Rebuilds `(θ, a, υ)` from free coordinates.
pub fn unpack_free(
    free: &[f64],
    j: usize,
    regime: ConstraintRegime,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if free.len() != regime.free_dim(j) {
        return Err(Error::LengthMismatch {
            expected: regime.free_dim(j),
            got: free.len(),
        });
    }
    let mut theta = vec![0.0];
    theta.extend_from_slice(&free[..j - 1]);
    let a = amplitude_from_chart(&free[j - 1..2 * j - 2])?;
    let upsilon = match regime.kind {
        RegimeKind::A0 => free[2 * j - 2..].to_vec(),
        RegimeKind::A1 => {
            let mut u = vec![0.0];
            u.extend_from_slice(&free[2 * j - 2..]);
            u
        }
    };
    Ok((theta, a, upsilon))
}

/// `φ(δ, a) = Σ_j a_j a*_j e^{iδ_j} / J`.
pub fn weight_phase(delta: &[f64], a: &[f64], a_true: &[f64]) -> Complex64 {
    let j = a.len() as f64;
    delta
        .iter()
        .zip(a)
        .zip(a_true)
        .map(|((d, x), y)| Complex64::from_polar(x * y, *d))
        .sum::<Complex64>()
        / j
}

/// Limiting contrast
/// `M(β) = Σ_{l≠0} |c_l|² (1 - |φ(l(θ - θ*), a)|²) + (1/J) Σ (υ*_j - υ_j)²`
/// over the band of `shape`. Zero at the truth and positive elsewhere when the
/// shape has minimal period 2π.
pub fn contrast_oracle(
    theta: &[f64],
    a: &[f64],
    upsilon: &[f64],
    truth: &ParameterSet,
    shape: &ShapeSpectrum,
) -> f64 {
    let j = a.len();
    let mut m1 = 0.0;
    for l in 1..=shape.m() as i64 {
        let delta: Vec<f64> = (0..j)
            .map(|k| l as f64 * (theta[k] - truth.theta()[k]))
            .collect();
        let phi = weight_phase(&delta, a, truth.a()).norm_sqr();
        m1 += (shape.coeff(l).norm_sqr() + shape.coeff(-l).norm_sqr()) * (1.0 - phi);
    }
    let m2 = truth
        .upsilon()
        .iter()
        .zip(upsilon)
        .map(|(s, u)| (s - u).powi(2))
        .sum::<f64>()
        / j as f64;
    m1 + m2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::panel::generate_panel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn random_sphere(rng: &mut ChaCha8Rng, j: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..j).map(|_| rng.random_range(-1.5..1.5)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.1 && v[0] > 0.2 {
                return v.iter().map(|x| x * (j as f64).sqrt() / norm).collect();
            }
        }
    }

    fn spec3() -> ShapeSpectrum {
        ShapeSpectrum::from_positive(
            None,
            &[
                Complex64::new(1.0, 0.3),
                Complex64::new(-0.4, 0.2),
                Complex64::new(0.1, -0.25),
            ],
        )
    }

    fn truth3() -> ParameterSet {
        let a2: f64 = -0.8;
        let a3: f64 = 1.1;
        let a1 = (3.0 - a2 * a2 - a3 * a3).sqrt();
        ParameterSet::new(
            vec![0.0, 1.3, 4.0],
            vec![a1, a2, a3],
            vec![1.0, -2.0, 0.5],
            0.0,
            ConstraintRegime::a0(),
        )
        .unwrap()
    }

    /// Direct residual `(1/nJ) Σ (Y - a_j f̂(t_i - θ_j) - υ_j)²`.
    fn direct_residual(ctx: &CriterionContext, theta: &[f64], a: &[f64], ups: &[f64]) -> f64 {
        let f = ctx.shape_at(theta, a, ups).unwrap();
        let panel = ctx.panel();
        let mut acc = 0.0;
        for (j, row) in panel.rows().iter().enumerate() {
            for (y, t) in row.iter().zip(panel.grid().points()) {
                acc += (y - a[j] * f.eval(t - theta[j]) - ups[j]).powi(2);
            }
        }
        acc / (panel.n() * panel.curves()) as f64
    }

    #[test]
    fn single_curve_identity() {
        let g = make_grid(21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..21).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let panel = CurvePanel::new(g, rows, None).unwrap();
        let ctx = CriterionContext::new(&panel, 4, ConstraintRegime::a0()).unwrap();
        let c = ctx.profiled_coefficients(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        for l in 1..=4 {
            assert!((c.coeff(l) - ctx.d(0, l)).norm() < 1e-15);
        }
    }

    #[test]
    fn levels_do_not_enter_profiled_coefficients() {
        let g = make_grid(21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..21).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let ups = [0.3, -1.2, 4.0];
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .zip(ups)
            .map(|(r, u)| r.iter().map(|y| y - u).collect())
            .collect();
        let p0 = CurvePanel::new(g.clone(), rows, None).unwrap();
        let p1 = CurvePanel::new(g, shifted, None).unwrap();
        let c0 = CriterionContext::new(&p0, 5, ConstraintRegime::a0()).unwrap();
        let c1 = CriterionContext::new(&p1, 5, ConstraintRegime::a0()).unwrap();
        let th = [0.0, 0.7, 2.0];
        let a = [1.0, 1.0, -1.0];
        let s0 = c0.profiled_coefficients(&th, &a).unwrap();
        let s1 = c1.profiled_coefficients(&th, &a).unwrap();
        for l in -5..=5 {
            assert!((s0.coeff(l) - s1.coeff(l)).norm() < 1e-14);
        }
    }

    #[test]
    fn noiseless_truth_recovers_spectrum_and_zero_criterion() {
        let g = make_grid(101).unwrap();
        let truth = truth3();
        let panel = generate_panel(&truth, &spec3(), &g, 0).unwrap();
        let ctx = CriterionContext::new(&panel, 5, ConstraintRegime::a0()).unwrap();
        let c = ctx.profiled_coefficients(truth.theta(), truth.a()).unwrap();
        for l in -5..=5 {
            assert!((c.coeff(l) - spec3().coeff(l)).norm() < 1e-10);
        }
        assert!(ctx.value_at(&truth).unwrap().abs() < 1e-12);
        let grad = ctx
            .criterion_gradient(truth.theta(), truth.a(), truth.upsilon())
            .unwrap();
        assert!(grad.iter().all(|g| g.abs() < 1e-9), "{grad:?}");
    }

    #[test]
    fn phase_equivariance() {
        let g = make_grid(51).unwrap();
        let truth = truth3();
        let delta = 0.37;
        let shifted = ParameterSet::new(
            truth.theta().to_vec(),
            truth.a().to_vec(),
            truth.upsilon().to_vec(),
            0.0,
            ConstraintRegime::a0(),
        )
        .unwrap();
        let p0 = generate_panel(&shifted, &spec3(), &g, 0).unwrap();
        // rotate every curve by delta: shape f(t - delta)
        let rot = crate::panel::Shape::spectrum(spec3()).shifted(delta);
        let p1 = generate_panel(&shifted, &rot, &g, 0).unwrap();
        let c0 = CriterionContext::new(&p0, 4, ConstraintRegime::a0()).unwrap();
        let c1 = CriterionContext::new(&p1, 4, ConstraintRegime::a0()).unwrap();
        let th0 = [0.0, 0.4, 1.9];
        let th1: Vec<f64> = th0.iter().map(|t| t + delta).collect();
        let a = [1.0, -1.0, 1.0];
        let s0 = c0.profiled_coefficients(&th0, &a).unwrap();
        let s1 = c1.profiled_coefficients(&th1, &a).unwrap();
        for l in -4..=4 {
            assert!((s0.coeff(l) - s1.coeff(l)).norm() < 1e-12);
        }
    }

    #[test]
    fn wrong_shift_matches_contrast() {
        let g = make_grid(31).unwrap();
        let c1 = Complex64::new(0.6, -0.2);
        let spec = ShapeSpectrum::from_positive(None, &[c1]);
        let a2: f64 = 1.2;
        let a1 = (2.0 - a2 * a2).sqrt();
        let truth = ParameterSet::new(vec![0.0, 0.5], vec![a1, a2], vec![0.0, 1.0], 0.0, ConstraintRegime::a0())
            .unwrap();
        let panel = generate_panel(&truth, &spec, &g, 0).unwrap();
        let ctx = CriterionContext::new(&panel, 3, ConstraintRegime::a0()).unwrap();
        let theta = [0.0, 0.5 + PI];
        let v = ctx.criterion_value(&theta, truth.a(), truth.upsilon()).unwrap();
        let phi = weight_phase(&[0.0, PI], truth.a(), truth.a()).norm_sqr();
        let expected = 2.0 * c1.norm_sqr() * (1.0 - phi);
        assert!((v - expected).abs() < 1e-12);
        assert!((v - contrast_oracle(&theta, truth.a(), truth.upsilon(), &truth, &spec)).abs() < 1e-12);
    }

    #[test]
    fn contrast_examples() {
        let spec = ShapeSpectrum::from_positive(None, &[Complex64::new(0.5, 0.0)]);
        let truth = ParameterSet::new(vec![0.0, 1.0], vec![1.0, 1.0], vec![0.5, 0.2], 1.0, ConstraintRegime::a0())
            .unwrap();
        assert!(contrast_oracle(truth.theta(), truth.a(), truth.upsilon(), &truth, &spec).abs() < 1e-15);
        let v = contrast_oracle(truth.theta(), truth.a(), &[0.5, 0.2 + 0.3], &truth, &spec);
        assert!((v - 0.09 / 2.0).abs() < 1e-15);
        // |φ(π, (1,1))| = 0 so M = 2 |c_1|²
        let v = contrast_oracle(&[0.0, 1.0 + PI], truth.a(), truth.upsilon(), &truth, &spec);
        assert!((v - 2.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn weight_phase_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let a = random_sphere(&mut rng, 4);
            let b = random_sphere(&mut rng, 4);
            let d: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..TAU)).collect();
            assert!(weight_phase(&d, &a, &b).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn noiseless_criterion_tracks_contrast() {
        let g = make_grid(101).unwrap();
        let truth = truth3();
        let panel = generate_panel(&truth, &spec3(), &g, 0).unwrap();
        let ctx = CriterionContext::new(&panel, 5, ConstraintRegime::a0()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let th = vec![0.0, rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
            let a = random_sphere(&mut rng, 3);
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mn = ctx.criterion_value(&th, &a, &u).unwrap();
            let m = contrast_oracle(&th, &a, &u, &truth, &spec3());
            assert!((mn - m).abs() < 1e-12, "{mn} vs {m}");
            assert!(m >= -1e-15);
        }
    }

    #[test]
    fn criterion_equals_direct_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for regime in [ConstraintRegime::a0(), ConstraintRegime::a1()] {
            for _ in 0..5 {
                let g = make_grid(41).unwrap();
                let rows: Vec<Vec<f64>> = (0..3)
                    .map(|_| (0..41).map(|_| rng.random_range(-2.0..2.0)).collect())
                    .collect();
                let panel = CurvePanel::new(g, rows, None).unwrap();
                let ctx = CriterionContext::new(&panel, 7, regime).unwrap();
                let th = vec![0.0, rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
                let a = random_sphere(&mut rng, 3);
                let mut u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                if regime.kind == RegimeKind::A1 {
                    u[0] = 0.0;
                }
                let mn = ctx.criterion_value(&th, &a, &u).unwrap();
                let direct = direct_residual(&ctx, &th, &a, &u);
                assert!((mn - direct).abs() < 1e-10, "{mn} vs {direct}");
            }
        }
    }

    fn finite_difference(ctx: &CriterionContext, free: &[f64], j: usize) -> Vec<f64> {
        let h = 1e-6;
        (0..free.len())
            .map(|k| {
                let mut p = free.to_vec();
                let mut q = free.to_vec();
                p[k] += h;
                q[k] -= h;
                let (t1, a1, u1) = unpack_free(&p, j, ctx.regime()).unwrap();
                let (t2, a2, u2) = unpack_free(&q, j, ctx.regime()).unwrap();
                (ctx.criterion_value(&t1, &a1, &u1).unwrap() - ctx.criterion_value(&t2, &a2, &u2).unwrap())
                    / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for regime in [ConstraintRegime::a0(), ConstraintRegime::a1()] {
            let g = make_grid(61).unwrap();
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..61).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let panel = CurvePanel::new(g, rows, None).unwrap();
            let ctx = CriterionContext::new(&panel, 6, regime).unwrap();
            for _ in 0..10 {
                let th = vec![0.0, rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
                let a = random_sphere(&mut rng, 3);
                let mut u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                if regime.kind == RegimeKind::A1 {
                    u[0] = 0.0;
                }
                let beta = ParameterSet::new(th.clone(), a.clone(), u.clone(), 1.0, regime).unwrap();
                let free = beta.free_coordinates();
                let analytic = ctx.criterion_gradient(&th, &a, &u).unwrap();
                let numeric = finite_difference(&ctx, &free, 3);
                let scale = analytic.iter().map(|x| x.abs()).fold(0.0, f64::max);
                for (x, y) in analytic.iter().zip(&numeric) {
                    assert!((x - y).abs() <= 1e-6 * scale.max(1.0), "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn level_gradient_vanishes_at_means() {
        let g = make_grid(21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..21).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let panel = CurvePanel::new(g, rows, None).unwrap();
        let ctx = CriterionContext::new(&panel, 3, ConstraintRegime::a0()).unwrap();
        let means = ctx.means().to_vec();
        let grad = ctx.criterion_gradient(&[0.0, 1.0], &[1.0, 1.0], &means).unwrap();
        assert_eq!(&grad[2..], &[0.0, 0.0]);
    }

    #[test]
    fn levels_separate_from_shifts() {
        let g = make_grid(21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..21).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let panel = CurvePanel::new(g, rows, None).unwrap();
        let ctx = CriterionContext::new(&panel, 3, ConstraintRegime::a0()).unwrap();
        let means = ctx.means().to_vec();
        for _ in 0..10 {
            let th = [0.0, rng.random_range(0.0..TAU)];
            let a = random_sphere(&mut rng, 2);
            let best = ctx.criterion_value(&th, &a, &means).unwrap();
            for k in 0..2 {
                let mut u = means.clone();
                u[k] += 1e-3;
                assert!(ctx.criterion_value(&th, &a, &u).unwrap() > best);
            }
        }
    }

    #[test]
    fn invariant_under_full_turns() {
        let g = make_grid(41).unwrap();
        let truth = truth3();
        let panel = generate_panel(&truth.with_sigma(0.5), &spec3(), &g, 3).unwrap();
        let ctx = CriterionContext::new(&panel, 5, ConstraintRegime::a0()).unwrap();
        let th = [0.0, 0.9, 2.2];
        let th2 = [0.0 + TAU * 2.0, 0.9 - TAU, 2.2 + TAU];
        let a = truth.a();
        let u = truth.upsilon();
        let v1 = ctx.criterion_value(&th, a, u).unwrap();
        let v2 = ctx.criterion_value(&th2, a, u).unwrap();
        assert!((v1 - v2).abs() < 1e-13);
    }

    #[test]
    fn a1_profiled_levels_zero_the_mean_residual() {
        let g = make_grid(21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..21).map(|_| rng.random_range(-2.0..2.0) + 3.0).collect())
            .collect();
        let panel = CurvePanel::new(g, rows, None).unwrap();
        let ctx = CriterionContext::new(&panel, 3, ConstraintRegime::a1()).unwrap();
        let a = random_sphere(&mut rng, 3);
        let u = ctx.profiled_levels(&a);
        assert_eq!(u[0], 0.0);
        let grad = ctx.criterion_gradient(&[0.0, 0.5, 1.0], &a, &u).unwrap();
        for g in &grad[4..] {
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_amplitude_errors() {
        let g = make_grid(11).unwrap();
        let panel = CurvePanel::new(g, vec![vec![0.0; 11]; 2], None).unwrap();
        let ctx = CriterionContext::new(&panel, 2, ConstraintRegime::a0()).unwrap();
        assert!(matches!(
            ctx.criterion_value(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]),
            Err(Error::DegenerateAmplitude)
        ));
        assert!(matches!(
            CriterionContext::new(&panel, 6, ConstraintRegime::a0()),
            Err(Error::BandTooWide { .. })
        ));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn criterion_is_a_nonnegative_residual_minimized_by_profiled_levels(
            seed in 0u64..10_000,
            half in 3usize..30,
            m_frac in 0.1f64..0.9,
        ) {
            let n = 2 * half + 1;
            let m = ((half as f64 * m_frac) as usize).max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = make_grid(n).unwrap();
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let panel = CurvePanel::new(g, rows, None).unwrap();
            let ctx = CriterionContext::new(&panel, m, ConstraintRegime::a0()).unwrap();
            let th = vec![0.0, rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
            let a = random_sphere(&mut rng, 3);
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mn = ctx.criterion_value(&th, &a, &u).unwrap();
            proptest::prop_assert!(mn >= -1e-12);
            proptest::prop_assert!((mn - direct_residual(&ctx, &th, &a, &u)).abs() < 1e-10);
            let best = ctx.criterion_value(&th, &a, &ctx.profiled_levels(&a)).unwrap();
            proptest::prop_assert!(best <= mn + 1e-12);
        }
    }
}
