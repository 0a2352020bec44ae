//! Replication studies: bias, calibration of the empirical covariance against
//! the asymptotic one, coverage, and the integrated error of the shape
//! estimate.
//!
//! Replicate `r` draws its noise from seed `base_seed + r`, so a study with
//! more replicates extends a smaller one. Replicates run in parallel when the
//! `parallel` feature is enabled; aggregation always follows replicate order,
//! so the report does not depend on the execution mode.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::estimator::{fit, FitConfig, FitResult};
use crate::grid::{make_grid, SamplingGrid};
use crate::inference::{
    a1_covariance_from_norms, confidence_intervals, efficiency_blocks_from_norms,
};
use crate::panel::{
    add_noise, sample_rows, ConstraintRegime, CurvePanel, ModelTruth, PeriodicShape, RegimeKind,
    Shape, ShapeSpec, DEFAULT_UPSILON_MAX,
};
use crate::{unwrap_difference, Error, Result};

/// Raw truth `a_j f(t - θ_j) + υ_j`; normalized per regime before use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub shape: ShapeSpec,
    pub theta: Vec<f64>,
    pub a: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub sigma: f64,
}

impl TruthSpec {
    pub fn normalized(&self, regime: ConstraintRegime) -> Result<ModelTruth> {
        let shape = Shape::from_spec(&self.shape)?;
        ModelTruth::from_raw(&self.theta, &self.a, &self.upsilon, self.sigma, &shape, regime)
    }
}

fn default_regimes() -> Vec<RegimeKind> {
    vec![RegimeKind::A0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub truth: TruthSpec,
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub fit_config: FitConfig,
    #[serde(default = "default_regimes")]
    pub regimes: Vec<RegimeKind>,
    #[serde(default)]
    pub upsilon_max: Option<f64>,
    /// Level of the intervals whose coverage is reported.
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_level() -> f64 {
    0.95
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.replicates < 2 {
            return bad(format!("replicates must be >= 2, got {}", self.replicates));
        }
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        for &n in &self.n_list {
            if n % 2 == 0 || n < 3 {
                return bad(format!("n must be odd and >= 3, got {n}"));
            }
            self.fit_config
                .m_rule
                .resolve(n)
                .map_err(|e| Error::ConfigInvalid(format!("n = {n}: {e}")))?;
        }
        if self.regimes.is_empty() {
            return bad("no regime requested".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level {} outside (0, 1)", self.level));
        }
        if !(self.truth.sigma >= 0.0 && self.truth.sigma.is_finite()) {
            return bad("truth sigma must be finite and >= 0".into());
        }
        for kind in &self.regimes {
            self.truth
                .normalized(self.regime(*kind))
                .map_err(|e| Error::ConfigInvalid(format!("truth: {e}")))?;
        }
        Ok(())
    }

    pub fn regime(&self, kind: RegimeKind) -> ConstraintRegime {
        ConstraintRegime {
            kind,
            upsilon_max: self.upsilon_max.unwrap_or(DEFAULT_UPSILON_MAX),
        }
    }

    pub fn seed(&self, replicate: usize) -> u64 {
        self.base_seed.wrapping_add(replicate as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(feature = "parallel", default)]
    Parallel,
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
}

/// Maps `f` over `0..count`, preserving order.
fn map_indexed<T, F>(count: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// One fit of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFit {
    pub seed: u64,
    pub converged: bool,
    /// Free coordinates of `β̂`; empty when the fit errored.
    pub estimate: Vec<f64>,
    /// `β̂ - β*` with shift errors unwrapped to `(-π, π]`.
    pub error: Vec<f64>,
    /// `ĉ_l - c_l` for `l = 1..m`.
    pub coeff_error: Vec<Complex64>,
    /// `sup_t |f̂(t) - f(t)|` of the centered shapes.
    pub sup_error: f64,
    /// Whether each coordinate's interval contained the truth.
    pub covered: Vec<bool>,
    pub sigma_hat: f64,
}

impl ReplicateFit {
    fn failed(seed: u64) -> Self {
        Self {
            seed,
            converged: false,
            estimate: vec![],
            error: vec![],
            coeff_error: vec![],
            sup_error: f64::NAN,
            covered: vec![],
            sigma_hat: f64::NAN,
        }
    }

    pub fn error_norm(&self) -> f64 {
        self.error.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

const SUP_POINTS: usize = 512;

/// Everything a study needs about the truth in one regime.
#[derive(Debug, Clone)]
struct RegimeTruth {
    regime: ConstraintRegime,
    truth: ModelTruth,
    free: Vec<f64>,
    /// Centered truth shape on the sup-error grid.
    reference: Vec<f64>,
}

impl RegimeTruth {
    fn new(spec: &TruthSpec, regime: ConstraintRegime) -> Result<Self> {
        let truth = spec.normalized(regime)?;
        let free = truth.params.free_coordinates();
        let centered = truth.shape.centered();
        let reference = (0..SUP_POINTS)
            .map(|k| centered.eval(TAU * k as f64 / SUP_POINTS as f64))
            .collect();
        Ok(Self {
            regime,
            truth,
            free,
            reference,
        })
    }

    fn assess(&self, result: &FitResult, seed: u64, level: f64) -> ReplicateFit {
        let j = self.truth.params.curves();
        let estimate = result.beta_hat.free_coordinates();
        let error: Vec<f64> = estimate
            .iter()
            .zip(&self.free)
            .enumerate()
            .map(|(k, (e, t))| if k < j - 1 { unwrap_difference(e - t) } else { e - t })
            .collect();
        let coeff_error = (1..=result.m as i64)
            .map(|l| result.shape_hat.coeff(l) - self.truth.shape.coeff(l))
            .collect();
        let c0 = result.shape_hat.mean();
        let sup_error = self
            .reference
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let t = TAU * k as f64 / SUP_POINTS as f64;
                (result.shape_hat.eval(t) - c0 - r).abs()
            })
            .fold(0.0, f64::max);
        let covered = match confidence_intervals(result, level) {
            Ok(ci) => ci
                .intervals
                .iter()
                .zip(&error)
                .map(|(iv, e)| e.abs() <= iv.half_width)
                .collect(),
            Err(_) => vec![false; error.len()],
        };
        ReplicateFit {
            seed,
            converged: result.converged,
            estimate,
            error,
            coeff_error,
            sup_error,
            covered,
            sigma_hat: result.sigma_hat,
        }
    }

    /// `σ² H⁻¹` (A0) or `σ² Γ` (A1) at the truth.
    fn theory(&self) -> Result<DMatrix<f64>> {
        let p = &self.truth.params;
        let s = &self.truth.shape;
        Ok(match self.regime.kind {
            RegimeKind::A0 => efficiency_blocks_from_norms(p.a(), s.energy(), s.derivative_energy(), p.sigma())?
                .asymptotic_covariance(),
            RegimeKind::A1 => {
                a1_covariance_from_norms(p.a(), s.mean(), s.energy(), s.derivative_energy(), p.sigma())?
                    .asymptotic_covariance()
            }
        })
    }
}

/// Fits of every replicate at one `n`, one vector per requested regime.
#[derive(Debug, Clone)]
pub struct ReplicateSet {
    pub n: usize,
    pub m: usize,
    pub fits: Vec<(RegimeKind, Vec<ReplicateFit>)>,
}

/// Generates and fits all replicates at size `n`. Each replicate's panel is
/// fitted under every regime of the config, so regimes are paired.
pub fn run_replicates(config: &StudyConfig, n: usize, exec: Execution) -> Result<ReplicateSet> {
    config.validate()?;
    let grid = make_grid(n)?;
    let m = config.fit_config.m_rule.resolve(n)?;
    let truths: Vec<RegimeTruth> = config
        .regimes
        .iter()
        .map(|k| RegimeTruth::new(&config.truth, config.regime(*k)))
        .collect::<Result<_>>()?;
    // every regime represents the same curves; sample once
    let a0 = config.truth.normalized(config.regime(RegimeKind::A0))?;
    let clean = sample_rows(&a0.params, &a0.shape, &grid)?;

    let per_replicate = map_indexed(config.replicates, exec, |r| {
        let seed = config.seed(r);
        replicate(config, &grid, &clean, &truths, seed)
    });

    let mut fits: Vec<(RegimeKind, Vec<ReplicateFit>)> =
        config.regimes.iter().map(|k| (*k, Vec::with_capacity(config.replicates))).collect();
    for outcome in per_replicate {
        for (slot, f) in fits.iter_mut().zip(outcome) {
            slot.1.push(f);
        }
    }
    Ok(ReplicateSet { n, m, fits })
}

fn replicate(
    config: &StudyConfig,
    grid: &SamplingGrid,
    clean: &[Vec<f64>],
    truths: &[RegimeTruth],
    seed: u64,
) -> Vec<ReplicateFit> {
    let mut rows = clean.to_vec();
    add_noise(&mut rows, config.truth.sigma, seed);
    let Ok(panel) = CurvePanel::new(grid.clone(), rows, None) else {
        return truths.iter().map(|_| ReplicateFit::failed(seed)).collect();
    };
    truths
        .iter()
        .map(|t| match fit(&panel, t.regime, &config.fit_config) {
            Ok(res) => t.assess(&res, seed, config.level),
            Err(_) => ReplicateFit::failed(seed),
        })
        .collect()
}

/// Five-number summary for boxplots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> f64 {
    quantile_sorted(&sorted(values.to_vec()), 0.5)
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        let s = sorted(values.to_vec());
        Self {
            min: quantile_sorted(&s, 0.0),
            q25: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            q75: quantile_sorted(&s, 0.75),
            max: quantile_sorted(&s, 1.0),
        }
    }
}

/// Relative Frobenius deviation `‖emp - theory‖ / ‖theory‖` per block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDeviation {
    pub theta: f64,
    pub a: f64,
    pub upsilon: f64,
}

/// Integrated squared error of the shape, split into variance, squared bias
/// over the retained band, and the truncated tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiseEstimate {
    pub n: usize,
    pub m: usize,
    pub total: f64,
    pub variance: f64,
    pub bias: f64,
    pub truncation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub label: String,
    pub truth: f64,
    pub bias: f64,
    pub estimates: Quantiles,
    pub coverage: f64,
}

/// Aggregates for one `(n, regime)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub n: usize,
    pub m: usize,
    pub regime: RegimeKind,
    pub replicates: usize,
    pub failures: usize,
    /// More than 5% of replicates failed.
    pub invalid: bool,
    pub labels: Vec<String>,
    pub parameters: Vec<ParameterSummary>,
    /// Empirical covariance of `√n (β̂ - β*)`.
    pub empirical_cov: Vec<Vec<f64>>,
    /// `σ² H⁻¹` (A0) or `σ² Γ` (A1) at the truth.
    pub theory_cov: Vec<Vec<f64>>,
    /// `empirical / theory`, `None` where the theory entry is zero.
    pub ratio: Vec<Vec<Option<f64>>>,
    pub correlation: Vec<Vec<f64>>,
    pub block_deviation: BlockDeviation,
    /// Largest `|corr|` between coordinates of different blocks.
    pub max_cross_block_corr: f64,
    pub mise: MiseEstimate,
    pub median_sup_error: f64,
    pub median_error_norm: f64,
    pub mean_sigma_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub cells: Vec<CellReport>,
    pub invalid: bool,
}

impl StudyReport {
    pub fn cell(&self, n: usize, regime: RegimeKind) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.n == n && c.regime == regime)
    }
}

/// Sample covariance (divisor `R - 1`) of the rows of `data`, times `scale`.
pub fn sample_covariance(data: &[Vec<f64>], scale: f64) -> DMatrix<f64> {
    let r = data.len();
    let dim = data.first().map_or(0, Vec::len);
    if r < 2 {
        return DMatrix::from_element(dim, dim, f64::NAN);
    }
    let mean: Vec<f64> = (0..dim)
        .map(|k| data.iter().map(|x| x[k]).sum::<f64>() / r as f64)
        .collect();
    DMatrix::from_fn(dim, dim, |p, q| {
        let s: f64 = data.iter().map(|x| (x[p] - mean[p]) * (x[q] - mean[q])).sum();
        scale * s / (r - 1) as f64
    })
}

pub fn correlation_from_covariance(cov: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(cov.nrows(), cov.ncols(), |p, q| {
        cov[(p, q)] / (cov[(p, p)] * cov[(q, q)]).sqrt()
    })
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn block_ranges(j: usize, kind: RegimeKind) -> [std::ops::Range<usize>; 3] {
    let d = j - 1;
    let levels = match kind {
        RegimeKind::A0 => j,
        RegimeKind::A1 => d,
    };
    [0..d, d..2 * d, 2 * d..2 * d + levels]
}

fn relative_frobenius(emp: &DMatrix<f64>, theory: &DMatrix<f64>, range: std::ops::Range<usize>) -> f64 {
    let len = range.len();
    let e = emp.view((range.start, range.start), (len, len));
    let t = theory.view((range.start, range.start), (len, len));
    (e - t).norm() / t.norm()
}

/// Spectral MISE decomposition over the converged replicates.
pub fn mise_from_fits<S: PeriodicShape + ?Sized>(fits: &[ReplicateFit], truth: &S, n: usize, m: usize) -> MiseEstimate {
    let ok: Vec<&ReplicateFit> = fits.iter().filter(|f| f.converged).collect();
    let r = ok.len().max(1) as f64;
    let mean: Vec<Complex64> = (0..m)
        .map(|l| ok.iter().map(|f| f.coeff_error[l]).sum::<Complex64>() / r)
        .collect();
    // both ±l contribute, hence the factor 2
    let bias = 2.0 * mean.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let variance = 2.0
        * ok.iter()
            .map(|f| f.coeff_error.iter().zip(&mean).map(|(e, b)| (e - b).norm_sqr()).sum::<f64>())
            .sum::<f64>()
        / r;
    let truncation = truth.tail_energy(m);
    MiseEstimate {
        n,
        m,
        total: variance + bias + truncation,
        variance,
        bias,
        truncation,
    }
}

fn summarize(config: &StudyConfig, n: usize, m: usize, kind: RegimeKind, fits: &[ReplicateFit]) -> Result<CellReport> {
    let truth = RegimeTruth::new(&config.truth, config.regime(kind))?;
    let j = truth.truth.params.curves();
    let labels = truth.regime.free_labels(j);
    let dim = labels.len();
    let ok: Vec<&ReplicateFit> = fits.iter().filter(|f| f.converged).collect();
    let failures = fits.len() - ok.len();
    let r = ok.len();

    let errors: Vec<Vec<f64>> = ok.iter().map(|f| f.error.clone()).collect();
    let emp = sample_covariance(&errors, n as f64);
    let theory = truth.theory()?;
    let corr = correlation_from_covariance(&emp);

    let ratio = (0..dim)
        .map(|p| {
            (0..dim)
                .map(|q| (theory[(p, q)] != 0.0).then(|| emp[(p, q)] / theory[(p, q)]))
                .collect()
        })
        .collect();
    let blocks = block_ranges(j, kind);
    let block_of = |k: usize| blocks.iter().position(|b| b.contains(&k)).unwrap_or(usize::MAX);
    let mut max_cross = 0.0f64;
    for p in 0..dim {
        for q in 0..dim {
            if block_of(p) != block_of(q) {
                max_cross = max_cross.max(corr[(p, q)].abs());
            }
        }
    }
    let [bt, ba, bu] = blocks;
    let block_deviation = BlockDeviation {
        theta: relative_frobenius(&emp, &theory, bt),
        a: relative_frobenius(&emp, &theory, ba),
        upsilon: relative_frobenius(&emp, &theory, bu),
    };

    let parameters = labels
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let est: Vec<f64> = ok.iter().map(|f| f.estimate[k]).collect();
            let bias = ok.iter().map(|f| f.error[k]).sum::<f64>() / r.max(1) as f64;
            let coverage = ok.iter().filter(|f| f.covered[k]).count() as f64 / r.max(1) as f64;
            ParameterSummary {
                label: label.clone(),
                truth: truth.free[k],
                bias,
                estimates: Quantiles::of(&est),
                coverage,
            }
        })
        .collect();

    let sups: Vec<f64> = ok.iter().map(|f| f.sup_error).collect();
    let norms: Vec<f64> = ok.iter().map(|f| f.error_norm()).collect();
    Ok(CellReport {
        n,
        m,
        regime: kind,
        replicates: fits.len(),
        failures,
        invalid: failures * 20 > fits.len(),
        labels,
        parameters,
        empirical_cov: rows_of(&emp),
        theory_cov: rows_of(&theory),
        ratio,
        correlation: rows_of(&corr),
        block_deviation,
        max_cross_block_corr: max_cross,
        mise: mise_from_fits(fits, &truth.truth.shape, n, m),
        median_sup_error: median(&sups),
        median_error_norm: median(&norms),
        mean_sigma_hat: ok.iter().map(|f| f.sigma_hat).sum::<f64>() / r.max(1) as f64,
    })
}

pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    run_study_with(config, Execution::default())
}

pub fn run_study_with(config: &StudyConfig, exec: Execution) -> Result<StudyReport> {
    config.validate()?;
    let mut cells = Vec::new();
    for &n in &config.n_list {
        let set = run_replicates(config, n, exec)?;
        for (kind, fits) in &set.fits {
            cells.push(summarize(config, n, set.m, *kind, fits)?);
        }
    }
    let invalid = cells.iter().any(|c| c.invalid);
    Ok(StudyReport {
        config: config.clone(),
        cells,
        invalid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiseCurve {
    pub points: Vec<MiseEstimate>,
    /// Least-squares slope of `log MISE` against `log n`.
    pub slope: f64,
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// MISE of the shape estimate at each `n` of `config.n_list` (A0 fits, band
/// from `config.fit_config.m_rule`), with its log-log slope.
pub fn mise_curve(config: &StudyConfig, exec: Execution) -> Result<MiseCurve> {
    let config = StudyConfig {
        regimes: vec![RegimeKind::A0],
        ..config.clone()
    };
    config.validate()?;
    let truth = config.truth.normalized(config.regime(RegimeKind::A0))?;
    let mut points = Vec::new();
    for &n in &config.n_list {
        let set = run_replicates(&config, n, exec)?;
        points.push(mise_from_fits(&set.fits[0].1, &truth.shape, n, set.m));
    }
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.total.ln()).collect();
    Ok(MiseCurve {
        slope: fitted_slope(&x, &y),
        points,
    })
}

/// `corr(â_j, υ̂_j)` per curve `j >= 2` in both regimes on shared panels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeComparison {
    pub n: usize,
    pub replicates: usize,
    pub a0_corr: Vec<f64>,
    pub a1_corr: Vec<f64>,
    /// Correlations implied by `Γ` at the truth.
    pub a1_theory_corr: Vec<f64>,
    /// Shape mean under A1.
    pub c0: f64,
    /// Every A1 correlation has the sign of `-c_0`.
    pub sign_matches: bool,
    /// Every A0 correlation is within `3 / √R` of zero.
    pub a0_uncorrelated: bool,
    pub a0_cov: Vec<Vec<f64>>,
    pub a1_cov: Vec<Vec<f64>>,
    pub a1_theory_cov: Vec<Vec<f64>>,
    pub failures: usize,
}

fn amplitude_level_corr(errors: &[Vec<f64>], j: usize, kind: RegimeKind) -> Vec<f64> {
    let corr = correlation_from_covariance(&sample_covariance(errors, 1.0));
    let d = j - 1;
    (1..j)
        .map(|k| {
            let a = d + k - 1;
            let u = match kind {
                RegimeKind::A0 => 2 * d + k,
                RegimeKind::A1 => 2 * d + k - 1,
            };
            corr[(a, u)]
        })
        .collect()
}

pub fn compare_regimes(config: &StudyConfig, n: usize, exec: Execution) -> Result<RegimeComparison> {
    let config = StudyConfig {
        regimes: vec![RegimeKind::A0, RegimeKind::A1],
        n_list: vec![n],
        ..config.clone()
    };
    config.validate()?;
    let set = run_replicates(&config, n, exec)?;
    let (f0, f1) = (&set.fits[0].1, &set.fits[1].1);
    // keep only replicates that converged under both regimes
    let both: Vec<usize> = (0..f0.len()).filter(|&r| f0[r].converged && f1[r].converged).collect();
    let e0: Vec<Vec<f64>> = both.iter().map(|&r| f0[r].error.clone()).collect();
    let e1: Vec<Vec<f64>> = both.iter().map(|&r| f1[r].error.clone()).collect();

    let t1 = RegimeTruth::new(&config.truth, config.regime(RegimeKind::A1))?;
    let j = t1.truth.params.curves();
    let a0_corr = amplitude_level_corr(&e0, j, RegimeKind::A0);
    let a1_corr = amplitude_level_corr(&e1, j, RegimeKind::A1);
    let gamma = t1.theory()?;
    let gcorr = correlation_from_covariance(&gamma);
    let d = j - 1;
    let a1_theory_corr = (0..d).map(|k| gcorr[(d + k, 2 * d + k)]).collect();
    let c0 = t1.truth.shape.mean();
    let bound = 3.0 / (both.len() as f64).sqrt();
    Ok(RegimeComparison {
        n,
        replicates: config.replicates,
        sign_matches: a1_corr.iter().all(|c| c.signum() == -c0.signum()),
        a0_uncorrelated: a0_corr.iter().all(|c| c.abs() <= bound),
        a0_corr,
        a1_corr,
        a1_theory_corr,
        c0,
        a0_cov: rows_of(&sample_covariance(&e0, n as f64)),
        a1_cov: rows_of(&sample_covariance(&e1, n as f64)),
        a1_theory_cov: rows_of(&gamma),
        failures: f0.len() - both.len(),
    })
}
