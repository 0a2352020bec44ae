//! Minimization of the profiled criterion.
//!
//! Levels are profiled in closed form and amplitudes through the leading
//! eigenvector of a `J × J` cross-spectral matrix, so the numerical search
//! runs over the `J - 1` free shifts only. Starting points come from a grid
//! search on the cross-correlation of each curve with the reference curve;
//! each start is refined by BFGS with a backtracking line search.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criterion::CriterionContext;
use crate::grid::SamplingGrid;
use crate::panel::{ConstraintRegime, CurvePanel, ParameterSet, ShapeSpectrum};
use crate::{wrap_angle, Error, Result};

/// How the band `m` is chosen from `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandRule {
    Explicit(usize),
    /// `m = max(1, floor(n^exponent))`, clamped to `2m < n`.
    PowerLaw { exponent: f64 },
    /// `m = ceil(n^(1/(2k+1)))` for a shape with `k` derivatives, clamped to
    /// `2m < n`.
    Smoothness { k: f64 },
}

impl Default for BandRule {
    fn default() -> Self {
        BandRule::PowerLaw { exponent: 0.25 }
    }
}

impl BandRule {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        match *self {
            BandRule::Explicit(m) => {
                if m == 0 {
                    return Err(Error::ConfigInvalid("band m must be at least 1".into()));
                }
                if 2 * m >= n {
                    return Err(Error::BandTooWide { m, n });
                }
                Ok(m)
            }
            BandRule::PowerLaw { exponent } => {
                if !(exponent > 0.0 && exponent < 1.0) {
                    return Err(Error::ConfigInvalid(format!(
                        "power-law exponent {exponent} outside (0, 1)"
                    )));
                }
                let m = ((n as f64).powf(exponent).floor() as usize).max(1);
                Ok(m.min((n - 1) / 2))
            }
            BandRule::Smoothness { k } => {
                if !(k > 0.0) {
                    return Err(Error::ConfigInvalid(format!("smoothness {k} must be positive")));
                }
                let m = ((n as f64).powf(1.0 / (2.0 * k + 1.0)).ceil() as usize).max(1);
                Ok(m.min((n - 1) / 2))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub m_rule: BandRule,
    /// Number of equispaced shifts scanned per curve; `None` means `n`.
    pub theta_grid_size: Option<usize>,
    pub n_multistart: usize,
    pub tol_objective: f64,
    pub tol_param: f64,
    pub max_iters: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            m_rule: BandRule::default(),
            theta_grid_size: None,
            n_multistart: 5,
            tol_objective: 1e-12,
            tol_param: 1e-9,
            max_iters: 500,
        }
    }
}

impl FitConfig {
    pub fn with_band(m: usize) -> Self {
        Self {
            m_rule: BandRule::Explicit(m),
            ..Self::default()
        }
    }
}

/// Exact amplitude profile at fixed shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeProfile {
    /// On the sphere `Σ a_j² = J`, `a_1 > 0`.
    pub a: Vec<f64>,
    /// `M_n(θ, a, υ̂(a))`.
    pub objective: f64,
    /// Largest eigenvalue of `Q(θ)`; equals `Σ |ĉ_l|²` at the profiled `a`.
    pub top_eigenvalue: f64,
    /// The two largest eigenvalues are within `1e-10`.
    pub tie: bool,
}

/// Maximizes `Σ|ĉ_l|²` over the amplitude sphere at fixed `θ`.
///
/// `Σ_l |ĉ_l|² = aᵗ Q a / J` with
/// `Q_jk = (1/J) Re Σ_{1<=|l|<=m} d_jl conj(d_kl) e^{il(θ_j - θ_k)}`,
/// so the maximizer is `√J` times the leading unit eigenvector of `Q`.
pub fn profile_amplitude(ctx: &CriterionContext, theta: &[f64]) -> Result<AmplitudeProfile> {
    let j = ctx.curves();
    if theta.len() != j {
        return Err(Error::LengthMismatch {
            expected: j,
            got: theta.len(),
        });
    }
    let m = ctx.m() as i64;
    let w: Vec<Vec<Complex64>> = (0..j)
        .map(|k| {
            (1..=m)
                .map(|l| ctx.d(k, l) * Complex64::from_polar(1.0, l as f64 * theta[k]))
                .collect()
        })
        .collect();
    let jf = j as f64;
    let mut q = DMatrix::<f64>::zeros(j, j);
    for r in 0..j {
        for c in r..j {
            let s: f64 = w[r].iter().zip(&w[c]).map(|(x, y)| (x * y.conj()).re).sum();
            let v = 2.0 * s / jf;
            q[(r, c)] = v;
            q[(c, r)] = v;
        }
    }
    if q.amax() == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let eig = SymmetricEigen::new(q);
    let mut order: Vec<usize> = (0..j).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let top = eig.eigenvalues[order[0]];
    if top <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let tie = j > 1 && (top - eig.eigenvalues[order[1]]).abs() <= 1e-10 * top.max(1.0);
    let v = eig.eigenvectors.column(order[0]);
    let norm = v.norm();
    let mut a: Vec<f64> = v.iter().map(|x| x / norm * jf.sqrt()).collect();
    let lead = a.iter().copied().find(|x| x.abs() > 1e-14).unwrap_or(1.0);
    if lead < 0.0 {
        a.iter_mut().for_each(|x| *x = -*x);
    }
    let upsilon = ctx.profiled_levels(&a);
    let objective = ctx.criterion_value(theta, &a, &upsilon)?;
    Ok(AmplitudeProfile {
        a,
        objective,
        top_eigenvalue: top,
        tie,
    })
}

/// Starting shifts and the per-curve correlation profiles they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftCandidates {
    /// Full shift vectors (`θ_1 = 0`), best first.
    pub candidates: Vec<Vec<f64>>,
    /// Profiled objective at each candidate.
    pub objectives: Vec<f64>,
    /// `scores[j - 1][k]`: correlation magnitude of curve `j + 1` with the
    /// reference curve at shift `2πk / G`.
    pub scores: Vec<Vec<f64>>,
}

/// `|Σ_{1<=|l|<=m} conj(d_1l) d_jl e^{ilΔ}|` on `size` equispaced shifts; peaks
/// at `Δ = θ_j` for noiseless data.
pub fn shift_scores(ctx: &CriterionContext, j: usize, size: usize) -> Vec<f64> {
    let m = ctx.m() as i64;
    let cross: Vec<Complex64> = (1..=m).map(|l| ctx.d(0, l).conj() * ctx.d(j, l)).collect();
    (0..size)
        .map(|k| {
            let delta = TAU * k as f64 / size as f64;
            let s: f64 = cross
                .iter()
                .enumerate()
                .map(|(i, c)| (c * Complex64::from_polar(1.0, (i + 1) as f64 * delta)).re)
                .sum();
            (2.0 * s).abs()
        })
        .collect()
}

fn local_maxima(scores: &[f64], keep: usize) -> Vec<usize> {
    let g = scores.len();
    let mut peaks: Vec<usize> = (0..g)
        .filter(|&k| {
            let prev = scores[(k + g - 1) % g];
            let next = scores[(k + 1) % g];
            scores[k] >= prev && scores[k] > next
        })
        .collect();
    if peaks.is_empty() {
        peaks.push(0);
    }
    peaks.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]).then(x.cmp(&y)));
    peaks.truncate(keep.max(1));
    peaks
}

fn lexicographic(x: &[f64], y: &[f64]) -> std::cmp::Ordering {
    for (a, b) in x.iter().zip(y) {
        match a.total_cmp(b) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

const MAX_COMBINATIONS: usize = 5000;

/// Grid-search initialization of the shifts.
pub fn initialize_shifts(ctx: &CriterionContext, config: &FitConfig) -> Result<ShiftCandidates> {
    let j = ctx.curves();
    let size = config.theta_grid_size.unwrap_or(ctx.panel().n()).max(3);
    let scores: Vec<Vec<f64>> = (1..j).map(|k| shift_scores(ctx, k, size)).collect();

    let mut keep = config.n_multistart.max(1);
    while keep > 1 && keep.saturating_pow((j - 1) as u32) > MAX_COMBINATIONS {
        keep -= 1;
    }
    let peaks: Vec<Vec<usize>> = scores.iter().map(|s| local_maxima(s, keep)).collect();

    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for p in &peaks {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                p.iter().map(move |&k| {
                    let mut next = c.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }

    let mut ranked = Vec::with_capacity(combos.len());
    for combo in combos {
        let mut theta = vec![0.0];
        theta.extend(combo.iter().map(|&k| TAU * k as f64 / size as f64));
        let obj = profile_amplitude(ctx, &theta)?.objective;
        ranked.push((obj, theta));
    }
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| lexicographic(&x.1, &y.1)));
    ranked.truncate(config.n_multistart.max(1));
    let (objectives, candidates) = ranked.into_iter().unzip();
    Ok(ShiftCandidates {
        candidates,
        objectives,
        scores,
    })
}

#[derive(Debug, Clone)]
struct LocalMin {
    theta: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

/// Profiled objective and its gradient over `θ_2..θ_J`. The amplitude and
/// level derivatives vanish at the profiled point, so the partial in `θ` is
/// the full derivative.
fn profiled_eval(ctx: &CriterionContext, free: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    let mut theta = Vec::with_capacity(free.len() + 1);
    theta.push(0.0);
    theta.extend_from_slice(free);
    let prof = profile_amplitude(ctx, &theta)?;
    let ups = ctx.profiled_levels(&prof.a);
    let grad = ctx.criterion_gradient(&theta, &prof.a, &ups)?;
    Ok((prof.objective, grad[..free.len()].to_vec(), prof.top_eigenvalue))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

const MAX_STEP: f64 = 0.5;

fn bfgs(ctx: &CriterionContext, start: &[f64], config: &FitConfig) -> Result<LocalMin> {
    let d = start.len() - 1;
    let mut x = start[1..].to_vec();
    let (mut f, mut g, scale) = profiled_eval(ctx, &x)?;
    let gtol = 1e-11 * (1.0 + scale);
    let mut hinv = DMatrix::<f64>::identity(d, d);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iters {
        if inf_norm(&g) <= gtol {
            converged = true;
            break;
        }
        iterations += 1;
        let gv = nalgebra::DVector::from_column_slice(&g);
        let mut dir: Vec<f64> = (-(&hinv * &gv)).iter().copied().collect();
        if dot(&dir, &g) >= 0.0 {
            hinv = DMatrix::identity(d, d);
            dir = g.iter().map(|v| -v).collect();
        }
        let longest = inf_norm(&dir);
        if longest > MAX_STEP {
            dir.iter_mut().for_each(|v| *v *= MAX_STEP / longest);
        }
        let slope = dot(&dir, &g);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
            let (ft, gt, _) = profiled_eval(ctx, &trial)?;
            let armijo = ft <= f + 1e-4 * alpha * slope;
            // Near the optimum the objective difference drowns in rounding;
            // fall back to progress in the gradient.
            let flat = (ft - f).abs() <= 1e-14 * (1.0 + f.abs()) && inf_norm(&gt) < inf_norm(&g);
            if armijo || flat {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if hinv != DMatrix::identity(d, d) {
                hinv = DMatrix::identity(d, d);
                continue;
            }
            converged = inf_norm(&g) <= 1e-8 * (1.0 + scale);
            break;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let df = (f - fn_).abs();
        x = xn;
        f = fn_;
        g = gn;
        if sy > 1e-300 {
            let sv = nalgebra::DVector::from_vec(s.clone());
            let yv = nalgebra::DVector::from_vec(y);
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(d, d);
            let left = &eye - rho * &sv * yv.transpose();
            let right = &eye - rho * &yv * sv.transpose();
            hinv = &left * &hinv * &right + rho * &sv * sv.transpose();
        }
        if inf_norm(&g) <= gtol
            || (df <= config.tol_objective * (1.0 + f.abs()) && inf_norm(&s) <= config.tol_param)
        {
            converged = true;
            break;
        }
    }

    let mut theta = vec![0.0];
    theta.extend(x.iter().map(|t| wrap_angle(*t)));
    Ok(LocalMin {
        theta,
        objective: f,
        iterations,
        converged,
    })
}

/// Output of [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: ParameterSet,
    pub sigma_hat: f64,
    pub shape_hat: ShapeSpectrum,
    /// `M_n(β̂)`.
    pub objective: f64,
    pub m: usize,
    pub n: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    /// `M_n(β̂) <= 0`, so `σ̂` was set to 0.
    pub zero_noise: bool,
    /// Leading eigenvalues of the amplitude problem were tied at `β̂`.
    pub amplitude_tie: bool,
    /// Profiled objective at each starting point.
    pub start_objectives: Vec<f64>,
    /// Correlation profiles from the initialization grid.
    pub shift_profile: Vec<Vec<f64>>,
}

impl FitResult {
    pub fn regime(&self) -> ConstraintRegime {
        self.beta_hat.regime()
    }
}

/// Estimates `(θ, a, υ, σ)` and the common shape from a panel.
pub fn fit(panel: &CurvePanel, regime: ConstraintRegime, config: &FitConfig) -> Result<FitResult> {
    if config.max_iters == 0 || config.n_multistart == 0 {
        return Err(Error::ConfigInvalid(
            "max_iters and n_multistart must be positive".into(),
        ));
    }
    let m = config.m_rule.resolve(panel.n())?;
    let ctx = CriterionContext::new(panel, m, regime)?;
    let init = initialize_shifts(&ctx, config)?;

    let mut best: Option<LocalMin> = None;
    let mut iterations = 0;
    let mut any_converged = false;
    for start in &init.candidates {
        let local = bfgs(&ctx, start, config)?;
        iterations += local.iterations;
        any_converged |= local.converged;
        best = Some(match best {
            None => local,
            Some(b) => {
                let diff = local.objective - b.objective;
                if diff < -config.tol_objective
                    || (diff.abs() <= config.tol_objective
                        && lexicographic(&local.theta, &b.theta).is_lt())
                {
                    local
                } else {
                    b
                }
            }
        });
    }
    let best = best.expect("at least one start");

    let prof = profile_amplitude(&ctx, &best.theta)?;
    let upsilon = ctx.profiled_levels(&prof.a);
    let objective = ctx.criterion_value(&best.theta, &prof.a, &upsilon)?;
    let zero_noise = objective <= 0.0;
    let sigma_hat = if zero_noise { 0.0 } else { objective.sqrt() };
    let shape_hat = ctx.shape_at(&best.theta, &prof.a, &upsilon)?;
    let beta_hat = ParameterSet::new(best.theta, prof.a, upsilon, sigma_hat, regime)?;

    Ok(FitResult {
        beta_hat,
        sigma_hat,
        shape_hat,
        objective,
        m,
        n: panel.n(),
        iterations,
        restarts: init.candidates.len(),
        converged: any_converged,
        zero_noise,
        amplitude_tie: prof.tie,
        start_objectives: init.objectives,
        shift_profile: init.scores,
    })
}

/// The estimated common shape as an evaluable trigonometric polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEstimate {
    pub spectrum: ShapeSpectrum,
}

impl ShapeEstimate {
    pub fn eval(&self, t: f64) -> f64 {
        self.spectrum.eval(t)
    }

    pub fn on_grid(&self, grid: &SamplingGrid) -> Vec<f64> {
        grid.points().iter().map(|&t| self.eval(t)).collect()
    }
}

pub fn estimate_shape(fit: &FitResult) -> ShapeEstimate {
    ShapeEstimate {
        spectrum: fit.shape_hat.clone(),
    }
}

/// Finite-difference Hessian of `M_n` at `β̂` in free coordinates, compared
/// with the efficient information `H` (A0 only).
#[derive(Debug, Clone, PartialEq)]
pub struct HessianDiagnostic {
    pub hessian: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub positive_definite: bool,
    /// `hessian[k][k] / H[k][k]`.
    pub diag_ratio: Vec<f64>,
}

pub fn hessian_diagnostic(panel: &CurvePanel, fit: &FitResult) -> Result<HessianDiagnostic> {
    let regime = fit.regime();
    let ctx = CriterionContext::new(panel, fit.m, regime)?;
    let beta = &fit.beta_hat;
    let j = beta.curves();
    let x0 = beta.free_coordinates();
    let dim = x0.len();
    let h = 1e-5;
    let grad_at = |x: &[f64]| -> Result<Vec<f64>> {
        let (t, a, u) = crate::criterion::unpack_free(x, j, regime)?;
        ctx.criterion_gradient(&t, &a, &u)
    };
    let mut hess = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let mut p = x0.clone();
        let mut q = x0.clone();
        p[k] += h;
        q[k] -= h;
        let gp = grad_at(&p)?;
        let gq = grad_at(&q)?;
        for r in 0..dim {
            hess[(r, k)] = (gp[r] - gq[r]) / (2.0 * h);
        }
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    let min_eigenvalue = SymmetricEigen::new(sym.clone()).eigenvalues.min();
    let info = crate::inference::efficiency_blocks(beta.a(), &fit.shape_hat, 1.0)?;
    // level coordinates only line up with H under A0
    let comparable = match regime.kind {
        crate::panel::RegimeKind::A0 => dim,
        crate::panel::RegimeKind::A1 => 2 * (j - 1),
    };
    let diag_ratio = (0..comparable)
        .map(|k| sym[(k, k)] / info.h[(k, k)])
        .collect();
    Ok(HessianDiagnostic {
        hessian: sym,
        min_eigenvalue,
        positive_definite: min_eigenvalue > 0.0,
        diag_ratio,
    })
}
