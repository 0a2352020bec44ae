//! Observed panels, parameter sets under the identifiability constraints, and
//! synthetic data from the shape-invariant model.

mod shapes;
mod spectrum;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use shapes::{PeriodicShape, Shape, ShapeSpec};
pub use spectrum::{center_shape, CoeffEntry, ShapeSpectrum};

use crate::grid::{dft, DftBlock, SamplingGrid};
use crate::{wrap_angle, Error, Result};

/// Default bound on the levels when the user gives none.
pub const DEFAULT_UPSILON_MAX: f64 = 1e6;

/// Tolerance on `Σ a_j² = J`.
pub const SPHERE_TOL: f64 = 1e-10;

/// A `J × n` panel of curves sampled on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePanel {
    grid: SamplingGrid,
    y: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl CurvePanel {
    /// `y[j]` is curve `j`. Labels default to `curve_1..curve_J`.
    pub fn new(grid: SamplingGrid, y: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::ConstraintViolation(format!(
                "a panel needs at least 2 curves, got {}",
                y.len()
            )));
        }
        for row in &y {
            if row.len() != grid.n() {
                return Err(Error::LengthMismatch {
                    expected: grid.n(),
                    got: row.len(),
                });
            }
        }
        let labels = match labels {
            Some(l) if l.len() == y.len() => l,
            Some(l) => {
                return Err(Error::LengthMismatch {
                    expected: y.len(),
                    got: l.len(),
                })
            }
            None => (1..=y.len()).map(|j| format!("curve_{j}")).collect(),
        };
        Ok(Self { grid, y, labels })
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn curves(&self) -> usize {
        self.y.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.y
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Per-curve DFT blocks of band `m`.
    pub fn dft_blocks(&self, m: usize) -> Result<Vec<DftBlock>> {
        self.y.iter().map(|row| dft(row, &self.grid, m)).collect()
    }

    /// Column means `ȳ_j`.
    pub fn means(&self) -> Vec<f64> {
        self.y
            .iter()
            .map(|r| r.iter().sum::<f64>() / r.len() as f64)
            .collect()
    }
}

/// Which identifiability constraint set is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeKind {
    /// Centered shape, all `J` levels free.
    A0,
    /// Shape carries its mean, `υ_1 = 0`.
    A1,
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeKind::A0 => f.write_str("a0"),
            RegimeKind::A1 => f.write_str("a1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRegime {
    pub kind: RegimeKind,
    /// Bound on `|υ_j|`, enforced under A0 only.
    pub upsilon_max: f64,
}

impl ConstraintRegime {
    pub fn a0() -> Self {
        Self {
            kind: RegimeKind::A0,
            upsilon_max: DEFAULT_UPSILON_MAX,
        }
    }

    pub fn a1() -> Self {
        Self {
            kind: RegimeKind::A1,
            upsilon_max: DEFAULT_UPSILON_MAX,
        }
    }

    pub fn with_kind(kind: RegimeKind) -> Self {
        match kind {
            RegimeKind::A0 => Self::a0(),
            RegimeKind::A1 => Self::a1(),
        }
    }

    /// Number of free coordinates: `3J - 2` under A0, `3J - 3` under A1.
    pub fn free_dim(&self, j: usize) -> usize {
        match self.kind {
            RegimeKind::A0 => 3 * j - 2,
            RegimeKind::A1 => 3 * j - 3,
        }
    }

    /// Labels of the free coordinates in canonical order.
    pub fn free_labels(&self, j: usize) -> Vec<String> {
        let mut out: Vec<String> = (2..=j).map(|k| format!("theta_{k}")).collect();
        out.extend((2..=j).map(|k| format!("a_{k}")));
        let first = match self.kind {
            RegimeKind::A0 => 1,
            RegimeKind::A1 => 2,
        };
        out.extend((first..=j).map(|k| format!("upsilon_{k}")));
        out
    }
}

/// `(θ, a, υ, σ)` satisfying the constraints of `regime`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    theta: Vec<f64>,
    a: Vec<f64>,
    upsilon: Vec<f64>,
    sigma: f64,
    regime: ConstraintRegime,
}

impl ParameterSet {
    pub fn new(
        theta: Vec<f64>,
        a: Vec<f64>,
        upsilon: Vec<f64>,
        sigma: f64,
        regime: ConstraintRegime,
    ) -> Result<Self> {
        let j = theta.len();
        if j < 2 || a.len() != j || upsilon.len() != j {
            return Err(Error::ConstraintViolation(format!(
                "parameter vectors must share a length >= 2 (theta {}, a {}, upsilon {})",
                j,
                a.len(),
                upsilon.len()
            )));
        }
        if theta[0] != 0.0 {
            return Err(Error::ConstraintViolation("theta_1 must be 0".into()));
        }
        if theta.iter().any(|t| !(0.0..std::f64::consts::TAU).contains(t)) {
            return Err(Error::ConstraintViolation("theta must lie in [0, 2π)".into()));
        }
        let ss: f64 = a.iter().map(|x| x * x).sum();
        if (ss - j as f64).abs() > SPHERE_TOL {
            return Err(Error::ConstraintViolation(format!(
                "sum of squared amplitudes is {ss}, expected {j}"
            )));
        }
        if a[0] <= 0.0 {
            return Err(Error::ConstraintViolation("a_1 must be positive".into()));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::ConstraintViolation("sigma must be finite and >= 0".into()));
        }
        match regime.kind {
            RegimeKind::A0 => {
                if upsilon.iter().any(|u| u.abs() > regime.upsilon_max) {
                    return Err(Error::ConstraintViolation(
                        "level outside [-upsilon_max, upsilon_max]".into(),
                    ));
                }
            }
            RegimeKind::A1 => {
                if upsilon[0] != 0.0 {
                    return Err(Error::ConstraintViolation(
                        "upsilon_1 must be 0 under A1".into(),
                    ));
                }
            }
        }
        Ok(Self {
            theta,
            a,
            upsilon,
            sigma,
            regime,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn upsilon(&self) -> &[f64] {
        &self.upsilon
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn regime(&self) -> ConstraintRegime {
        self.regime
    }

    pub fn curves(&self) -> usize {
        self.theta.len()
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self {
            sigma,
            ..self.clone()
        }
    }

    /// Free coordinates in the order of [`ConstraintRegime::free_labels`].
    pub fn free_coordinates(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.theta[1..].to_vec();
        out.extend_from_slice(&self.a[1..]);
        match self.regime.kind {
            RegimeKind::A0 => out.extend_from_slice(&self.upsilon),
            RegimeKind::A1 => out.extend_from_slice(&self.upsilon[1..]),
        }
        out
    }
}

/// Result of [`project_to_constraints`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub params: ParameterSet,
    /// Set when `a` was negated to make `a_1 > 0`. The caller must negate the
    /// shape to keep the represented curves unchanged.
    pub sign_flipped: bool,
}

/// Maps raw `(θ, a, υ)` onto the constraint set of `regime`.
///
/// Shifts `θ` so that `θ_1 = 0`, rescales `a` onto `Σ a_j² = J`, flips the
/// global sign so that `a_1 > 0`, and clips (A0) or zeroes (A1) the levels.
/// Idempotent.
pub fn project_to_constraints(
    theta: &[f64],
    a: &[f64],
    upsilon: &[f64],
    sigma: f64,
    regime: ConstraintRegime,
) -> Result<Projection> {
    let j = a.len();
    let ss: f64 = a.iter().map(|x| x * x).sum();
    if ss == 0.0 || !ss.is_finite() {
        return Err(Error::DegenerateAmplitude);
    }
    let theta: Vec<f64> = theta.iter().map(|t| wrap_angle(t - theta[0])).collect();
    let mut a = a.to_vec();
    if (ss - j as f64).abs() > 1e-12 * j as f64 {
        let k = (j as f64 / ss).sqrt();
        a.iter_mut().for_each(|x| *x *= k);
    }
    if a[0] == 0.0 {
        return Err(Error::ZeroReferenceAmplitude);
    }
    let sign_flipped = a[0] < 0.0;
    if sign_flipped {
        a.iter_mut().for_each(|x| *x = -*x);
    }
    let mut upsilon = upsilon.to_vec();
    match regime.kind {
        RegimeKind::A0 => upsilon
            .iter_mut()
            .for_each(|u| *u = u.clamp(-regime.upsilon_max, regime.upsilon_max)),
        RegimeKind::A1 => upsilon[0] = 0.0,
    }
    Ok(Projection {
        params: ParameterSet::new(theta, a, upsilon, sigma, regime)?,
        sign_flipped,
    })
}

/// Noiseless part `a_j f(t_i - θ_j) + υ_j`.
pub fn noiseless_rows<S: PeriodicShape + ?Sized>(
    truth: &ParameterSet,
    shape: &S,
    grid: &SamplingGrid,
) -> Result<Vec<Vec<f64>>> {
    if let Some(m) = shape.band() {
        if 2 * m >= grid.n() {
            return Err(Error::BandTooWide { m, n: grid.n() });
        }
    }
    sample_rows(truth, shape, grid)
}

/// As [`noiseless_rows`] without the band check: frequencies at or above
/// `n / 2` alias, as they would for a sampled non-band-limited signal.
pub fn sample_rows<S: PeriodicShape + ?Sized>(
    truth: &ParameterSet,
    shape: &S,
    grid: &SamplingGrid,
) -> Result<Vec<Vec<f64>>> {
    if truth.regime.kind == RegimeKind::A0 {
        let scale = 1.0 + shape.energy().sqrt();
        if shape.mean().abs() > 1e-12 * scale {
            return Err(Error::ConstraintViolation(
                "A0 requires a centered shape".into(),
            ));
        }
    }
    Ok((0..truth.curves())
        .map(|j| {
            grid.points()
                .iter()
                .map(|&t| truth.a[j] * shape.eval(t - truth.theta[j]) + truth.upsilon[j])
                .collect()
        })
        .collect())
}

/// Adds `σ ε` with `ε` i.i.d. standard normal drawn from a ChaCha8 stream
/// seeded by `seed`, curve by curve.
pub fn add_noise(rows: &mut [Vec<f64>], sigma: f64, seed: u64) {
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for row in rows.iter_mut() {
        for y in row.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *y += sigma * e;
        }
    }
}

/// Draws a panel from the model. Identical seeds give identical panels.
pub fn generate_panel<S: PeriodicShape + ?Sized>(
    truth: &ParameterSet,
    shape: &S,
    grid: &SamplingGrid,
    seed: u64,
) -> Result<CurvePanel> {
    let mut rows = noiseless_rows(truth, shape, grid)?;
    add_noise(&mut rows, truth.sigma, seed);
    CurvePanel::new(grid.clone(), rows, None)
}

/// True parameters together with the shape they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTruth {
    pub params: ParameterSet,
    pub shape: Shape,
}

impl ModelTruth {
    /// Normalizes a raw description `a_j f(t - θ_j) + υ_j` onto `regime`,
    /// moving every rescaling into the shape so the mean curves are preserved:
    /// rotation by `θ_1`, amplitude scale and sign, and the level of the shape
    /// (centered under A0; absorbing `υ_1` under A1).
    pub fn from_raw(
        theta: &[f64],
        a: &[f64],
        upsilon: &[f64],
        sigma: f64,
        shape: &Shape,
        regime: ConstraintRegime,
    ) -> Result<Self> {
        let j = a.len();
        if theta.len() != j || upsilon.len() != j || j < 2 {
            return Err(Error::ConfigInvalid(
                "theta, a and upsilon must share a length >= 2".into(),
            ));
        }
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateAmplitude);
        }
        let mut k = (j as f64).sqrt() / norm;
        if a[0] < 0.0 {
            k = -k;
        } else if a[0] == 0.0 {
            return Err(Error::ZeroReferenceAmplitude);
        }
        let a_new: Vec<f64> = a.iter().map(|x| x * k).collect();
        let mut f = shape.shifted(theta[0]).affine(1.0 / k, 0.0);
        let theta_new: Vec<f64> = theta.iter().map(|t| wrap_angle(t - theta[0])).collect();
        let mut ups: Vec<f64> = upsilon.to_vec();
        match regime.kind {
            RegimeKind::A0 => {
                let c0 = f.mean();
                f = f.centered();
                for (u, aj) in ups.iter_mut().zip(&a_new) {
                    *u += aj * c0;
                }
            }
            RegimeKind::A1 => {
                let lift = ups[0] / a_new[0];
                f = f.affine(1.0, lift);
                for (u, aj) in ups.iter_mut().zip(&a_new) {
                    *u -= aj * lift;
                }
                ups[0] = 0.0;
            }
        }
        let params = ParameterSet::new(theta_new, a_new, ups, sigma, regime)?;
        Ok(Self { params, shape: f })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use num_complex::Complex64;
    use std::f64::consts::TAU;

    fn tone() -> ShapeSpectrum {
        ShapeSpectrum::from_positive(None, &[Complex64::new(0.5, 0.0)])
    }

    #[test]
    fn noiseless_identity_configuration() {
        let g = make_grid(11).unwrap();
        let p = ParameterSet::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0], 0.0, ConstraintRegime::a0())
            .unwrap();
        let panel = generate_panel(&p, &tone(), &g, 1).unwrap();
        for row in panel.rows() {
            for (y, t) in row.iter().zip(g.points()) {
                assert!((y - t.cos()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn same_seed_same_panel() {
        let g = make_grid(31).unwrap();
        let p = ParameterSet::new(vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 2.0], 0.7, ConstraintRegime::a0())
            .unwrap();
        let a = generate_panel(&p, &tone(), &g, 42).unwrap();
        let b = generate_panel(&p, &tone(), &g, 42).unwrap();
        let c = generate_panel(&p, &tone(), &g, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_variance_close_to_one() {
        let g = make_grid(201).unwrap();
        let p = ParameterSet::new(vec![0.0, 0.3], vec![1.0, 1.0], vec![0.0, 0.0], 1.0, ConstraintRegime::a0())
            .unwrap();
        let clean = generate_panel(&p.with_sigma(0.0), &tone(), &g, 5).unwrap();
        let noisy = generate_panel(&p, &tone(), &g, 5).unwrap();
        for (r0, r1) in clean.rows().iter().zip(noisy.rows()) {
            let e: Vec<f64> = r1.iter().zip(r0).map(|(a, b)| a - b).collect();
            let mean = e.iter().sum::<f64>() / e.len() as f64;
            let var = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (e.len() - 1) as f64;
            assert!((var - 1.0).abs() < 0.15, "var {var}");
        }
    }

    #[test]
    fn figure_two_configuration_generates() {
        let g = make_grid(201).unwrap();
        let truth = ModelTruth::from_raw(
            &[0.0, 0.8],
            &[0.75, 1.1990],
            &[2.5, 0.5],
            1.0,
            &Shape::parabola(20.0),
            ConstraintRegime::a0(),
        )
        .unwrap();
        let panel = generate_panel(&truth.params, &truth.shape, &g, 9).unwrap();
        let means = panel.means();
        for (m, u) in means.iter().zip(truth.params.upsilon()) {
            // mean of the shape on the grid is O(1/n²) for the parabola
            assert!((m - u).abs() < 5.0 / (201f64).sqrt());
        }
        // levels absorb a_j times the mean 10/3 of the raw parabola
        let k = (2.0f64).sqrt() / (0.75f64.powi(2) + 1.199f64.powi(2)).sqrt();
        let expected = 2.5 + 0.75 * k * (10.0 / 3.0) / k;
        assert!((truth.params.upsilon()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn a0_requires_centered_shape() {
        let g = make_grid(11).unwrap();
        let p = ParameterSet::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0], 0.0, ConstraintRegime::a0())
            .unwrap();
        let raw = ShapeSpectrum::from_positive(Some(1.0), &[Complex64::new(0.5, 0.0)]);
        assert!(matches!(
            generate_panel(&p, &raw, &g, 0),
            Err(Error::ConstraintViolation(_))
        ));
    }

    #[test]
    fn invalid_parameters_rejected() {
        let r = ConstraintRegime::a0();
        assert!(ParameterSet::new(vec![0.1, 0.0], vec![1.0, 1.0], vec![0.0; 2], 1.0, r).is_err());
        assert!(ParameterSet::new(vec![0.0, 0.0], vec![1.0, 1.1], vec![0.0; 2], 1.0, r).is_err());
        assert!(ParameterSet::new(vec![0.0, 0.0], vec![-1.0, 1.0], vec![0.0; 2], 1.0, r).is_err());
        assert!(ParameterSet::new(vec![0.0, 7.0], vec![1.0, 1.0], vec![0.0; 2], 1.0, r).is_err());
        assert!(ParameterSet::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, 0.0], 1.0, ConstraintRegime::a1()).is_err());
    }

    #[test]
    fn projection_examples() {
        let r = ConstraintRegime::a0();
        let p = project_to_constraints(&[0.0, 1.0], &[1.0, 1.0], &[0.5, -0.5], 1.0, r).unwrap();
        assert_eq!(p.params.a(), &[1.0, 1.0]);
        assert_eq!(p.params.theta(), &[0.0, 1.0]);
        assert!(!p.sign_flipped);

        let p = project_to_constraints(&[0.0, 0.0], &[2.0, 2.0], &[0.0, 0.0], 1.0, r).unwrap();
        assert!((p.params.a()[0] - 1.0).abs() < 1e-15 && (p.params.a()[1] - 1.0).abs() < 1e-15);

        let p = project_to_constraints(&[0.0, 0.0], &[-1.0, 1.0], &[0.0, 0.0], 1.0, r).unwrap();
        assert_eq!(p.params.a(), &[1.0, -1.0]);
        assert!(p.sign_flipped);

        assert!(matches!(
            project_to_constraints(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], 1.0, r),
            Err(Error::DegenerateAmplitude)
        ));
        assert!(matches!(
            project_to_constraints(&[0.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], 1.0, r),
            Err(Error::ZeroReferenceAmplitude)
        ));
    }

    #[test]
    fn projection_clips_and_rotates() {
        let r = ConstraintRegime {
            kind: RegimeKind::A0,
            upsilon_max: 2.0,
        };
        let p = project_to_constraints(&[1.0, 0.5, 3.0], &[1.0, 1.0, 1.0], &[5.0, -5.0, 1.0], 1.0, r).unwrap();
        assert_eq!(p.params.theta()[0], 0.0);
        assert!((p.params.theta()[1] - (TAU - 0.5)).abs() < 1e-15);
        assert_eq!(p.params.upsilon(), &[2.0, -2.0, 1.0]);
        let p = project_to_constraints(&[0.0, 1.0], &[1.0, 1.0], &[5.0, 2.0], 1.0, ConstraintRegime::a1()).unwrap();
        assert_eq!(p.params.upsilon(), &[0.0, 2.0]);
    }

    proptest::proptest! {
        #[test]
        fn projection_is_idempotent(
            theta in proptest::collection::vec(-10.0f64..10.0, 3),
            a in proptest::collection::vec(-3.0f64..3.0, 3),
            ups in proptest::collection::vec(-5.0f64..5.0, 3),
            a1 in proptest::bool::ANY,
        ) {
            proptest::prop_assume!(a[0].abs() > 1e-3);
            let regime = if a1 { ConstraintRegime::a1() } else { ConstraintRegime { kind: RegimeKind::A0, upsilon_max: 3.0 } };
            let once = project_to_constraints(&theta, &a, &ups, 1.0, regime).unwrap().params;
            let twice = project_to_constraints(once.theta(), once.a(), once.upsilon(), 1.0, regime).unwrap();
            proptest::prop_assert_eq!(&twice.params, &once);
            proptest::prop_assert!(!twice.sign_flipped);
        }
    }

    #[test]
    fn band_limited_dft_matches_model() {
        let g = make_grid(41).unwrap();
        let spec = ShapeSpectrum::from_positive(None, &[Complex64::new(0.8, 0.1), Complex64::new(-0.2, 0.3)]);
        let p = ParameterSet::new(vec![0.0, 2.1, 4.0], vec![1.2, -0.6, (3.0f64 - 1.44 - 0.36).sqrt()], vec![1.0, -2.0, 0.5], 0.0, ConstraintRegime::a0())
            .unwrap();
        let panel = generate_panel(&p, &spec, &g, 0).unwrap();
        let blocks = panel.dft_blocks(4).unwrap();
        for (j, b) in blocks.iter().enumerate() {
            for l in -4i64..=4 {
                let mut expected = spec.coeff(l) * p.a()[j] * Complex64::from_polar(1.0, -(l as f64) * p.theta()[j]);
                if l == 0 {
                    expected += p.upsilon()[j];
                }
                assert!((b.get(l) - expected).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn a1_rewriting_generates_same_panel() {
        let g = make_grid(201).unwrap();
        let raw = Shape::parabola(20.0);
        let args = (&[0.0, 0.8][..], &[0.75, 1.1990][..], &[2.5, 0.5][..]);
        let t0 = ModelTruth::from_raw(args.0, args.1, args.2, 1.0, &raw, ConstraintRegime::a0()).unwrap();
        let t1 = ModelTruth::from_raw(args.0, args.1, args.2, 1.0, &raw, ConstraintRegime::a1()).unwrap();
        assert_eq!(t1.params.upsilon()[0], 0.0);
        let p0 = generate_panel(&t0.params, &t0.shape, &g, 77).unwrap();
        let p1 = generate_panel(&t1.params, &t1.shape, &g, 77).unwrap();
        for (r0, r1) in p0.rows().iter().zip(p1.rows()) {
            for (x, y) in r0.iter().zip(r1) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        // g = f + υ_1 / a_1 in normalized units
        let lift = t1.shape.mean() - t0.shape.mean();
        assert!((lift * t1.params.a()[0] - t0.params.upsilon()[0]).abs() < 1e-12);
    }
}
