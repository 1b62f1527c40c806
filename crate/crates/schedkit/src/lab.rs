//! Small convex test bed: averaging reductions, scheduled optimizer runs,
//! and the weighted-regret identity used to sanity-check them.
//!
//! The central object is the averaging reduction: running a step-size
//! schedule induced by weights `w` is the same as running unit-rate updates
//! and folding each update into the iterate with the suffix-mass ratio
//! `w_{t+1:T} / w_{1:T}`. [`scheduled_reduction`] implements the fold
//! incrementally; [`scheduled_points_reference`] recomputes every point from
//! the closed-form rearrangement so tests can compare the two.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::bounds::fnv1a_f64;
use crate::error::{Error, Result};
use crate::refine::{GradientNormLog, NormKind};
use crate::schedule::{Schedule, WeightSequence};

/// Rows drawn per stochastic gradient on the logistic problems.
const BATCH: usize = 16;

/// Additive fuzz inside the adaptive step's square root.
const ADAM_EPS: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Problems
// ---------------------------------------------------------------------------

/// Sparse rows in 1-based `(index, value)` form plus raw labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    pub rows: Vec<Vec<(u32, f64)>>,
    pub labels: Vec<f64>,
    /// Largest feature index seen anywhere; 0 when every row is empty.
    pub dim: usize,
}

/// Parse LIBSVM-style text: `label idx:val idx:val ...`, indices 1-based and
/// strictly increasing within a row. Blank lines are skipped; all reported
/// line numbers count them.
pub fn parse_libsvm(text: &str) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut tokens = raw.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid label '{label_tok}'"),
        })?;
        if !label.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("non-finite label '{label_tok}'"),
            });
        }
        let mut row: Vec<(u32, f64)> = Vec::new();
        let mut prev = 0u32;
        for tok in tokens {
            let Some((is, vs)) = tok.split_once(':') else {
                return Err(Error::Parse {
                    line,
                    message: format!("invalid feature token '{tok}'"),
                });
            };
            let index: u32 = is.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid feature index '{is}'"),
            })?;
            if index == 0 {
                return Err(Error::Parse {
                    line,
                    message: "feature index 0 (indices are 1-based)".into(),
                });
            }
            let value: f64 = vs.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid feature value '{vs}'"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite feature value '{vs}'"),
                });
            }
            if index <= prev {
                return Err(Error::Parse {
                    line,
                    message: "indices not increasing".into(),
                });
            }
            prev = index;
            dim = dim.max(index as usize);
            row.push((index, value));
        }
        rows.push(row);
        labels.push(label);
    }
    Ok(SparseDataset { rows, labels, dim })
}

#[derive(Debug, Clone)]
enum Features {
    /// Row-major dense matrix, `rows.len() x dim`.
    Dense { rows: Vec<Vec<f64>> },
    /// 1-based sparse pairs per row.
    Sparse { rows: Vec<Vec<(u32, f64)>>, dim: usize },
}

impl Features {
    fn dim(&self) -> usize {
        match self {
            Features::Dense { rows } => rows.first().map_or(0, Vec::len),
            Features::Sparse { dim, .. } => *dim,
        }
    }

    fn dot(&self, row: usize, x: &[f64]) -> f64 {
        match self {
            Features::Dense { rows } => rows[row].iter().zip(x).map(|(a, b)| a * b).sum(),
            Features::Sparse { rows, .. } => rows[row]
                .iter()
                .map(|&(i, v)| v * x[i as usize - 1])
                .sum(),
        }
    }

    /// `out += coef * row`.
    fn add_scaled(&self, row: usize, coef: f64, out: &mut [f64]) {
        match self {
            Features::Dense { rows } => {
                for (o, a) in out.iter_mut().zip(&rows[row]) {
                    *o += coef * a;
                }
            }
            Features::Sparse { rows, .. } => {
                for &(i, v) in &rows[row] {
                    out[i as usize - 1] += coef * v;
                }
            }
        }
    }
}

/// Binary logistic-loss dataset with labels already mapped to `+-1`.
#[derive(Debug, Clone)]
pub struct LogregData {
    features: Features,
    labels: Vec<f64>,
}

impl LogregData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }
}

/// Map raw labels to `+-1`. Two distinct values: the smaller becomes -1.
/// Otherwise one-vs-rest against the most frequent value (ties broken toward
/// the smallest value).
fn binarize_labels(raw: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = Vec::new();
    for &l in raw {
        if !distinct.contains(&l) {
            distinct.push(l);
        }
    }
    distinct.sort_by(f64::total_cmp);
    if distinct.len() == 2 {
        let low = distinct[0];
        return raw.iter().map(|&l| if l == low { -1.0 } else { 1.0 }).collect();
    }
    let positive = distinct
        .iter()
        .copied()
        .max_by(|a, b| {
            let ca = raw.iter().filter(|&&l| l == *a).count();
            let cb = raw.iter().filter(|&&l| l == *b).count();
            // on frequency ties the smaller label wins, so compare reversed
            ca.cmp(&cb).then(b.total_cmp(a))
        })
        .unwrap_or(1.0);
    raw.iter()
        .map(|&l| if l == positive { 1.0 } else { -1.0 })
        .collect()
}

/// A convex objective the runners can optimize.
#[derive(Debug, Clone)]
pub enum Problem {
    /// `f(x) = lipschitz * |x - center|` in one dimension; the subgradient at
    /// the kink is taken to be zero.
    AbsLipschitz {
        lipschitz: f64,
        center: f64,
        initial: f64,
    },
    /// Mean logistic loss over a synthetic Gaussian dataset with a planted
    /// separator and 10% label noise.
    SyntheticLogreg(LogregData),
    /// Mean logistic loss over rows loaded from LIBSVM text.
    LibsvmLogreg(LogregData),
}

impl Problem {
    /// Scalar sharp-V objective with known minimum value 0 at `center`.
    pub fn abs_lipschitz(lipschitz: f64, center: f64, initial: f64) -> Result<Problem> {
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::Domain(format!(
                "lipschitz constant must be finite and positive, got {lipschitz}"
            )));
        }
        if !center.is_finite() || !initial.is_finite() {
            return Err(Error::Domain(
                "center and initial point must be finite".into(),
            ));
        }
        Ok(Problem::AbsLipschitz {
            lipschitz,
            center,
            initial,
        })
    }

    /// Gaussian features, Gaussian planted separator, labels flipped with
    /// probability 0.1. Fully determined by `(examples, dim, seed)`.
    pub fn synthetic_logreg(examples: usize, dim: usize, seed: u64) -> Result<Problem> {
        if examples == 0 || dim == 0 {
            return Err(Error::Domain(
                "synthetic dataset needs at least one example and one feature".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let planted: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        let mut rows = Vec::with_capacity(examples);
        let mut labels = Vec::with_capacity(examples);
        for _ in 0..examples {
            let row: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
            let margin: f64 = row.iter().zip(&planted).map(|(a, b)| a * b).sum();
            let mut y = if margin >= 0.0 { 1.0 } else { -1.0 };
            if rng.random::<f64>() < 0.1 {
                y = -y;
            }
            rows.push(row);
            labels.push(y);
        }
        Ok(Problem::SyntheticLogreg(LogregData {
            features: Features::Dense { rows },
            labels,
        }))
    }

    /// Wrap a parsed LIBSVM dataset, binarizing its labels.
    pub fn from_libsvm(dataset: SparseDataset) -> Result<Problem> {
        if dataset.rows.is_empty() {
            return Err(Error::Domain("dataset has no rows".into()));
        }
        if dataset.dim == 0 {
            return Err(Error::Domain("dataset has no features".into()));
        }
        let labels = binarize_labels(&dataset.labels);
        Ok(Problem::LibsvmLogreg(LogregData {
            features: Features::Sparse {
                rows: dataset.rows,
                dim: dataset.dim,
            },
            labels,
        }))
    }

    pub fn dimension(&self) -> usize {
        match self {
            Problem::AbsLipschitz { .. } => 1,
            Problem::SyntheticLogreg(d) | Problem::LibsvmLogreg(d) => d.dim(),
        }
    }

    pub fn initial_point(&self) -> Vec<f64> {
        match self {
            Problem::AbsLipschitz { initial, .. } => vec![*initial],
            _ => vec![0.0; self.dimension()],
        }
    }

    /// Minimum objective value, when it is known in closed form.
    pub fn optimum_value(&self) -> Option<f64> {
        match self {
            Problem::AbsLipschitz { .. } => Some(0.0),
            _ => None,
        }
    }

    /// Reference comparator `u` for regret reporting: the minimizer when
    /// known, the origin otherwise.
    pub fn comparator(&self) -> Vec<f64> {
        match self {
            Problem::AbsLipschitz { center, .. } => vec![*center],
            _ => vec![0.0; self.dimension()],
        }
    }

    /// Full (deterministic) objective value at `x`.
    pub fn loss(&self, x: &[f64]) -> f64 {
        match self {
            Problem::AbsLipschitz {
                lipschitz, center, ..
            } => lipschitz * (x[0] - center).abs(),
            Problem::SyntheticLogreg(data) | Problem::LibsvmLogreg(data) => {
                let n = data.len();
                let mut total = 0.0;
                for row in 0..n {
                    let z = data.labels[row] * data.features.dot(row, x);
                    total += logistic_loss(z);
                }
                total / n as f64
            }
        }
    }

    /// Fraction of rows misclassified by `sign(<x, row>)` (score 0 counts as
    /// positive). `None` for problems without labels.
    pub fn error_rate(&self, x: &[f64]) -> Option<f64> {
        match self {
            Problem::AbsLipschitz { .. } => None,
            Problem::SyntheticLogreg(data) | Problem::LibsvmLogreg(data) => {
                let n = data.len();
                let wrong = (0..n)
                    .filter(|&row| {
                        let score = data.features.dot(row, x);
                        let pred = if score >= 0.0 { 1.0 } else { -1.0 };
                        pred != data.labels[row]
                    })
                    .count();
                Some(wrong as f64 / n as f64)
            }
        }
    }

    /// Stochastic (sub)gradient at `x`. Deterministic for the scalar
    /// problem; a mean over [`BATCH`] rows drawn with replacement otherwise.
    pub fn gradient(&self, x: &[f64], rng: &mut impl Rng) -> Vec<f64> {
        match self {
            Problem::AbsLipschitz {
                lipschitz, center, ..
            } => {
                let d = x[0] - center;
                // subgradient 0 exactly at the kink
                vec![lipschitz * if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 }]
            }
            Problem::SyntheticLogreg(data) | Problem::LibsvmLogreg(data) => {
                let n = data.len();
                let mut g = vec![0.0; self.dimension()];
                for _ in 0..BATCH {
                    let row = rng.random_range(0..n);
                    let y = data.labels[row];
                    let z = y * data.features.dot(row, x);
                    // d/dz log(1+e^-z) = -sigma(-z)
                    let coef = -y * sigma_neg(z) / BATCH as f64;
                    data.features.add_scaled(row, coef, &mut g);
                }
                g
            }
        }
    }
}

/// `log(1 + exp(-z))` without overflow for large `|z|`.
fn logistic_loss(z: f64) -> f64 {
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// `sigma(-z) = 1 / (1 + e^z)` without overflow.
fn sigma_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

// ---------------------------------------------------------------------------
// Averaging reduction
// ---------------------------------------------------------------------------

/// Suffix-mass ratios `w_{t+1:T} / w_{1:T}` for `t = 1..=T`, computed from a
/// running prefix so the final ratio is exactly zero. Matches the arithmetic
/// used when converting weights to a multiplier schedule.
fn reduction_ratios(weights: &WeightSequence) -> Vec<f64> {
    let total = weights.total();
    let mut prefix = 0.0;
    weights
        .values()
        .iter()
        .map(|&w| {
            prefix += w;
            1.0 - prefix / total
        })
        .collect()
}

fn check_updates(updates: &[Vec<f64>], expected: usize, z1: &[f64]) -> Result<()> {
    if updates.len() != expected {
        return Err(Error::LengthMismatch {
            left: updates.len(),
            right: expected,
            context: "updates vs horizon minus one",
        });
    }
    if z1.is_empty() {
        return Err(Error::Domain("initial point must be non-empty".into()));
    }
    if !z1.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("initial point must be finite".into()));
    }
    for (i, u) in updates.iter().enumerate() {
        if u.len() != z1.len() {
            return Err(Error::LengthMismatch {
                left: u.len(),
                right: z1.len(),
                context: "update dimension vs initial point",
            });
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("non-finite update at step {}", i + 1)));
        }
    }
    Ok(())
}

/// Fold base-path updates `delta_1..delta_{T-1}` into scheduled points via
/// `x_{t+1} = x_t + (w_{t+1:T} / w_{1:T}) delta_t`, returning `x_1..x_T`.
/// The final entry is the scheduled output point.
pub fn scheduled_reduction(
    updates: &[Vec<f64>],
    weights: &WeightSequence,
    z1: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_updates(updates, weights.len() - 1, z1)?;
    let ratios = reduction_ratios(weights);
    let mut points = Vec::with_capacity(weights.len());
    let mut x = z1.to_vec();
    points.push(x.clone());
    for (t, delta) in updates.iter().enumerate() {
        for (xi, di) in x.iter_mut().zip(delta) {
            *xi += ratios[t] * di;
        }
        points.push(x.clone());
    }
    Ok(points)
}

/// Reference evaluation of the same points from the closed-form
/// rearrangement
/// `x_t = w_{t:T} (z_t / w_{1:T} + sum_{p<t} x_p (1/w_{p+1:T} - 1/w_{p:T}))`.
/// Quadratic in the horizon; exists so tests can check [`scheduled_reduction`]
/// against independent arithmetic.
pub fn scheduled_points_reference(
    updates: &[Vec<f64>],
    weights: &WeightSequence,
    z1: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_updates(updates, weights.len() - 1, z1)?;
    let horizon = weights.len();
    let d = z1.len();
    let s1 = weights.total();
    let mut z = z1.to_vec();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        if t > 1 {
            for (zi, di) in z.iter_mut().zip(&updates[t - 2]) {
                *zi += di;
            }
        }
        let mut x: Vec<f64> = z.iter().map(|zi| zi / s1).collect();
        for p in 1..t {
            let coeff = 1.0 / weights.suffix_sum(p + 1) - 1.0 / weights.suffix_sum(p);
            for i in 0..d {
                x[i] += points[p - 1][i] * coeff;
            }
        }
        let st = weights.suffix_sum(t);
        for xi in &mut x {
            *xi *= st;
        }
        points.push(x);
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// Summary of one optimizer run, serialized as one JSON line per run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// Full objective at the final iterate.
    pub final_loss: f64,
    /// `final_loss - f*` when the optimum value is known.
    pub final_suboptimality: Option<f64>,
    /// Training 0/1 error at the final iterate, for classification problems.
    pub error_rate: Option<f64>,
    /// Weighted-regret left-hand side against the problem's comparator,
    /// for runs produced by the weighted driver.
    pub regret_vs_u: Option<f64>,
    pub seed: u64,
    /// Content hash of the schedule or weights that drove the run.
    pub schedule_digest: String,
    /// Per-step gradient norms in the run's native kind.
    pub norm_log: GradientNormLog,
}

/// A [`RunReport`] plus the raw trajectory data the report was computed from.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    /// Iterates `x_1..x_{T+1}`.
    pub points: Vec<Vec<f64>>,
    /// Stochastic gradients `g_1..g_T` as used by the updates.
    pub gradients: Vec<Vec<f64>>,
    /// Adaptive runs additionally log plain l1 gradient magnitudes.
    pub l1_log: Option<GradientNormLog>,
}

fn check_run_args(schedule: &Schedule, scale: f64, horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    if schedule.len() < horizon {
        return Err(Error::LengthMismatch {
            left: schedule.len(),
            right: horizon,
            context: "schedule length vs horizon",
        });
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!(
            "scale must be finite and positive, got {scale}"
        )));
    }
    Ok(())
}

fn check_finite(x: &[f64], step: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { step })
    }
}

fn digest_of(label: &str, values: &[f64]) -> String {
    format!("{label}-{:016x}", fnv1a_f64(values))
}

/// Run subgradient descent `x_{t+1} = x_t - scale * eta_t * g_t` for
/// `horizon` steps, logging Euclidean gradient norms. Identical arguments
/// produce bit-identical outcomes.
pub fn run_sgd(
    problem: &Problem,
    schedule: &Schedule,
    scale: f64,
    horizon: usize,
    seed: u64,
) -> Result<RunOutcome> {
    check_run_args(schedule, scale, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = problem.initial_point();
    let mut points = Vec::with_capacity(horizon + 1);
    let mut gradients = Vec::with_capacity(horizon);
    let mut norms = Vec::with_capacity(horizon);
    points.push(x.clone());
    for t in 1..=horizon {
        let g = problem.gradient(&x, &mut rng);
        check_finite(&g, t)?;
        norms.push(l2_norm(&g));
        let step = scale * schedule.value_at(t);
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        check_finite(&x, t)?;
        gradients.push(g);
        points.push(x.clone());
    }
    let report = finish_report(
        problem,
        &x,
        horizon,
        seed,
        digest_of("sched", schedule.values()),
        GradientNormLog::from_norms(norms, NormKind::L2)?,
        None,
    )?;
    Ok(RunOutcome {
        report,
        points,
        gradients,
        l1_log: None,
    })
}

/// Run a momentum-free adaptive method: `v` is an exponential average of
/// squared gradients and each coordinate steps by
/// `scale * eta_t * g_i / sqrt(v_i + eps)`. Logs the preconditioner-weighted
/// norms `G_t = sum_i g_i^2 / sqrt(v_i)` plus a secondary l1 log.
pub fn run_adam_like(
    problem: &Problem,
    schedule: &Schedule,
    scale: f64,
    horizon: usize,
    seed: u64,
    beta2: f64,
) -> Result<RunOutcome> {
    check_run_args(schedule, scale, horizon)?;
    if !(beta2.is_finite() && beta2 > 0.0 && beta2 < 1.0) {
        return Err(Error::Domain(format!(
            "beta2 must lie strictly inside (0, 1), got {beta2}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = problem.initial_point();
    let mut v = vec![0.0; x.len()];
    let mut points = Vec::with_capacity(horizon + 1);
    let mut gradients = Vec::with_capacity(horizon);
    let mut weighted = Vec::with_capacity(horizon);
    let mut l1 = Vec::with_capacity(horizon);
    points.push(x.clone());
    for t in 1..=horizon {
        let g = problem.gradient(&x, &mut rng);
        check_finite(&g, t)?;
        let mut gt = 0.0;
        for (vi, gi) in v.iter_mut().zip(&g) {
            let sq = gi * gi;
            *vi = beta2 * *vi + (1.0 - beta2) * sq;
            if sq > 0.0 {
                // v_i >= (1 - beta2) g_i^2 > 0 here
                gt += sq / vi.sqrt();
            }
        }
        weighted.push(gt);
        l1.push(g.iter().map(|gi| gi.abs()).sum());
        let step = scale * schedule.value_at(t);
        for ((xi, gi), vi) in x.iter_mut().zip(&g).zip(&v) {
            *xi -= step * gi / (vi + ADAM_EPS).sqrt();
        }
        check_finite(&x, t)?;
        gradients.push(g);
        points.push(x.clone());
    }
    let report = finish_report(
        problem,
        &x,
        horizon,
        seed,
        digest_of("sched", schedule.values()),
        GradientNormLog::from_norms(weighted, NormKind::AdamWeighted)?,
        None,
    )?;
    Ok(RunOutcome {
        report,
        points,
        gradients,
        l1_log: Some(GradientNormLog::from_norms(l1, NormKind::L1)?),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    problem: &Problem,
    x: &[f64],
    horizon: usize,
    seed: u64,
    schedule_digest: String,
    norm_log: GradientNormLog,
    regret_vs_u: Option<f64>,
) -> Result<RunReport> {
    let final_loss = problem.loss(x);
    if !final_loss.is_finite() {
        return Err(Error::Diverged { step: horizon });
    }
    Ok(RunReport {
        final_loss,
        final_suboptimality: problem.optimum_value().map(|f| final_loss - f),
        error_rate: problem.error_rate(x),
        regret_vs_u,
        seed,
        schedule_digest,
        norm_log,
    })
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Weighted driver and the regret identity
// ---------------------------------------------------------------------------

/// Base and scheduled paths from one weighted-driver run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Unit-rate base points `z_1..z_{T+1}`, stepped by `-w_t g_t`.
    pub base_points: Vec<Vec<f64>>,
    /// Scheduled points `x_1..x_{T+1}`; the last ratio is zero so the final
    /// two entries coincide.
    pub scheduled_points: Vec<Vec<f64>>,
    /// `delta_t = z_{t+1} - z_t` as realized in floating point.
    pub updates: Vec<Vec<f64>>,
    /// Gradients evaluated at the scheduled points `x_t`.
    pub gradients: Vec<Vec<f64>>,
    /// `f(x_t) - f*` for `t = 1..=T` when the optimum value is known,
    /// empty otherwise.
    pub suboptimality: Vec<f64>,
}

/// Outcome of [`run_weighted_ogd`].
#[derive(Debug, Clone)]
pub struct WeightedRun {
    pub report: RunReport,
    pub trajectory: Trajectory,
}

/// Drive the base path by weighted unit-rate steps `z_{t+1} = z_t - w_t g_t`
/// (gradients taken at the scheduled points) and fold the updates into the
/// scheduled path on the fly. The run both exercises the averaging reduction
/// and produces trajectories on which the regret identity must hold.
pub fn run_weighted_ogd(
    problem: &Problem,
    weights: &WeightSequence,
    seed: u64,
) -> Result<WeightedRun> {
    let horizon = weights.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratios = reduction_ratios(weights);
    let mut z = problem.initial_point();
    let mut x = z.clone();
    let mut base_points = vec![z.clone()];
    let mut scheduled_points = vec![x.clone()];
    let mut updates = Vec::with_capacity(horizon);
    let mut gradients = Vec::with_capacity(horizon);
    let mut suboptimality = Vec::new();
    let mut norms = Vec::with_capacity(horizon);
    let track_gap = problem.optimum_value().is_some();
    for t in 1..=horizon {
        if track_gap {
            let f = problem.loss(&x);
            suboptimality.push(f - problem.optimum_value().unwrap_or(0.0));
        }
        let g = problem.gradient(&x, &mut rng);
        check_finite(&g, t)?;
        norms.push(l2_norm(&g));
        let w = weights.values()[t - 1];
        let mut delta = Vec::with_capacity(z.len());
        for (zi, gi) in z.iter_mut().zip(&g) {
            let next = *zi - w * gi;
            delta.push(next - *zi);
            *zi = next;
        }
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi += ratios[t - 1] * di;
        }
        check_finite(&x, t)?;
        check_finite(&z, t)?;
        base_points.push(z.clone());
        scheduled_points.push(x.clone());
        updates.push(delta);
        gradients.push(g);
    }
    let trajectory = Trajectory {
        base_points,
        scheduled_points,
        updates,
        gradients,
        suboptimality,
    };
    let u = problem.comparator();
    let (lhs, _) = regret(&trajectory, weights, &u)?;
    let report = finish_report(
        problem,
        &x,
        horizon,
        seed,
        digest_of("weights", weights.values()),
        GradientNormLog::from_norms(norms, NormKind::L2)?,
        Some(lhs),
    )?;
    Ok(WeightedRun { report, trajectory })
}

/// Both sides of the weighted online-gradient regret identity
/// `sum_t <w_t g_t, z_t - u> =
///  |z_1 - u|^2/2 - |z_{T+1} - u|^2/2 + sum_t |w_t g_t|^2 / 2`
/// for a trajectory whose base path was stepped by `-w_t g_t`. The two sides
/// are returned, not compared: on a trajectory of a different form the
/// identity simply fails and the caller sees the mismatch.
pub fn regret(trajectory: &Trajectory, weights: &WeightSequence, u: &[f64]) -> Result<(f64, f64)> {
    let horizon = weights.len();
    if trajectory.gradients.len() != horizon {
        return Err(Error::LengthMismatch {
            left: trajectory.gradients.len(),
            right: horizon,
            context: "trajectory gradients vs weights",
        });
    }
    if trajectory.base_points.len() != horizon + 1 {
        return Err(Error::LengthMismatch {
            left: trajectory.base_points.len(),
            right: horizon + 1,
            context: "trajectory base points vs horizon plus one",
        });
    }
    let d = trajectory.base_points[0].len();
    if u.len() != d {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: d,
            context: "comparator dimension vs trajectory",
        });
    }
    let mut lhs = 0.0;
    let mut step_sq = 0.0;
    for t in 0..horizon {
        let w = weights.values()[t];
        let z = &trajectory.base_points[t];
        let g = &trajectory.gradients[t];
        let mut inner = 0.0;
        let mut gsq = 0.0;
        for i in 0..d {
            inner += g[i] * (z[i] - u[i]);
            gsq += g[i] * g[i];
        }
        lhs += w * inner;
        step_sq += w * w * gsq;
    }
    let first = dist_sq(&trajectory.base_points[0], u);
    let last = dist_sq(&trajectory.base_points[horizon], u);
    Ok((lhs, 0.5 * first - 0.5 * last + 0.5 * step_sq))
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
