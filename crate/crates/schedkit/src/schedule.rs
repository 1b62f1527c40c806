//! Core types for step weightings and learning-rate schedules, plus the
//! standard schedule zoo, warmup composition, and polynomial fitting.
//!
//! The central objects are [`WeightSequence`] (strictly positive per-step
//! weights with precomputed suffix sums) and [`Schedule`] (nonnegative
//! multipliers, optionally normalized to peak 1). A weight sequence induces
//! a schedule through `eta_t = w_t * s_{t+1} / s_1`, which is what
//! [`weights_to_schedule`] computes; the reverse direction lives in the
//! `represent` module because it needs extended-precision arithmetic.

use crate::error::{Error, Result};

/// Strictly positive per-step weights `w_1..w_T` with precomputed suffix
/// sums `s_t = w_t + w_{t+1} + ... + w_T`.
///
/// Invariants enforced at construction: every weight is finite and > 0,
/// `s_t = w_t + s_{t+1}` holds bitwise, `s_{T+1} = 0`, and `T >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    weights: Vec<f64>,
    /// suffix[t-1] = s_t for t in 1..=T+1, so suffix.len() == T+1 and the
    /// last entry is exactly 0.
    suffix: Vec<f64>,
}

impl WeightSequence {
    /// Builds a weight sequence, rejecting empty input and any weight that
    /// is zero, negative, or non-finite.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DegenerateHorizon(
                "weight sequence must contain at least one step".into(),
            ));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Domain(format!(
                    "weight at step {} must be finite and strictly positive, got {w}",
                    i + 1
                )));
            }
        }
        let mut suffix = vec![0.0; weights.len() + 1];
        for t in (0..weights.len()).rev() {
            suffix[t] = weights[t] + suffix[t + 1];
        }
        Ok(Self { weights, suffix })
    }

    /// Uniform weights `[1.0; steps]`.
    pub fn uniform(steps: usize) -> Result<Self> {
        Self::new(vec![1.0; steps])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty sequences
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    /// Suffix sum `s_t` for 1-indexed `t` in `1..=T+1`; `s_{T+1} = 0`.
    pub fn suffix_sum(&self, t: usize) -> f64 {
        self.suffix[t - 1]
    }

    /// All suffix sums `s_1..s_{T+1}` as a slice of length `T + 1`.
    pub fn suffix_sums(&self) -> &[f64] {
        &self.suffix
    }

    /// Total mass `s_1 = w_1 + ... + w_T`.
    pub fn total(&self) -> f64 {
        self.suffix[0]
    }
}

/// Nonnegative per-step multipliers `eta_1..eta_T`.
///
/// `normalized` is true exactly when the maximum value is 1.0; the
/// [`Schedule::normalize`] method rescales to achieve that.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    values: Vec<f64>,
    normalized: bool,
}

impl Schedule {
    /// Builds a schedule, rejecting empty input and any value that is
    /// negative or non-finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateHorizon(
                "schedule must contain at least one step".into(),
            ));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "schedule value at step {} must be finite and nonnegative, got {v}",
                    i + 1
                )));
            }
        }
        let normalized = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) == 1.0;
        Ok(Self { values, normalized })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty schedules
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Multiplier at 1-indexed step `t`.
    pub fn value_at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Rescales so the peak value is exactly 1. Fails when every value is
    /// zero (a single-step induced schedule has only the zero multiplier).
    pub fn normalize(&self) -> Result<Schedule> {
        let max = self.max_value();
        if max <= 0.0 {
            return Err(Error::DegenerateHorizon(
                "cannot normalize a schedule whose peak multiplier is zero".into(),
            ));
        }
        let values = self.values.iter().map(|v| v / max).collect();
        Ok(Schedule {
            values,
            normalized: true,
        })
    }
}

/// Converts weights into the schedule they induce: `eta_t = w_t * s_{t+1} / s_1`.
///
/// The ratio `s_{t+1} / s_1` is evaluated as `1 - p_t / s_1` with `p_t` the
/// running prefix sum, so uniform weights reproduce the linear-decay
/// multipliers `1 - t/T` bit for bit and the final multiplier is exactly
/// zero. With `normalize` set, the result is rescaled to peak 1; that fails
/// for `T = 1` where the only multiplier is zero.
pub fn weights_to_schedule(w: &WeightSequence, normalize: bool) -> Result<Schedule> {
    let n = w.len();
    let mut prefix = vec![0.0; n];
    let mut acc = 0.0;
    for (t, &wt) in w.values().iter().enumerate() {
        acc += wt;
        prefix[t] = acc;
    }
    let total = prefix[n - 1];
    let values: Vec<f64> = w
        .values()
        .iter()
        .zip(&prefix)
        .map(|(&wt, &pt)| wt * (1.0 - pt / total))
        .collect();
    let schedule = Schedule::new(values)?;
    if normalize {
        if n == 1 {
            return Err(Error::DegenerateHorizon(
                "degenerate horizon: a single-step schedule has peak multiplier zero".into(),
            ));
        }
        schedule.normalize()
    } else {
        Ok(schedule)
    }
}

/// The schedule families the toolkit can synthesize.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// `1 - t/T`; reaches exactly zero at the final step.
    Linear,
    /// `(1 - t/T)^power`; `power = 1` coincides bitwise with `Linear`.
    Poly { power: f64 },
    /// Half-cosine ramp from 1 down towards 0.
    Cosine,
    /// Piecewise-constant decay: multiply by `factor` after each milestone
    /// fraction of the horizon is passed.
    Stepwise { milestones: Vec<f64>, factor: f64 },
    /// `beta / (beta + (t-1))`.
    InvT { beta: f64 },
    /// `sqrt(beta) / sqrt(beta + (t-1))`.
    InvSqrt { beta: f64 },
    /// All ones.
    Constant,
}

impl ScheduleKind {
    /// The conventional milestone setup: decay by 0.1 at 30%, 60%, and 90%
    /// of the horizon.
    pub fn stepwise_default() -> Self {
        ScheduleKind::Stepwise {
            milestones: vec![0.3, 0.6, 0.9],
            factor: 0.1,
        }
    }
}

/// Synthesizes a schedule of the given family over `steps` steps.
///
/// Steps are 1-indexed. `Linear` and `Poly` evaluate at `t` (so the final
/// multiplier is `0` and `(1/T)^p` respectively); every other family
/// evaluates at `t - 1` so the first multiplier is exactly 1.
pub fn make_schedule(kind: &ScheduleKind, steps: usize) -> Result<Schedule> {
    if steps == 0 {
        return Err(Error::DegenerateHorizon(
            "schedule must contain at least one step".into(),
        ));
    }
    let horizon = steps as f64;
    let values: Vec<f64> = match kind {
        ScheduleKind::Linear => (1..=steps).map(|t| 1.0 - t as f64 / horizon).collect(),
        ScheduleKind::Poly { power } => {
            if !power.is_finite() || *power <= 0.0 {
                return Err(Error::Domain(format!(
                    "polynomial power must be positive, got {power}"
                )));
            }
            if *power == 1.0 {
                // Keep poly(1) bitwise identical to the linear family.
                (1..=steps).map(|t| 1.0 - t as f64 / horizon).collect()
            } else {
                (1..=steps)
                    .map(|t| (1.0 - t as f64 / horizon).powf(*power))
                    .collect()
            }
        }
        ScheduleKind::Cosine => (1..=steps)
            .map(|t| 0.5 * (1.0 + (std::f64::consts::PI * (t - 1) as f64 / horizon).cos()))
            .collect(),
        ScheduleKind::Stepwise { milestones, factor } => {
            if !factor.is_finite() || *factor <= 0.0 || *factor > 1.0 {
                return Err(Error::Domain(format!(
                    "stepwise decay factor must lie in (0, 1], got {factor}"
                )));
            }
            for pair in milestones.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(Error::Domain(
                        "stepwise milestones must be strictly increasing".into(),
                    ));
                }
            }
            if milestones.iter().any(|&m| !(0.0..1.0).contains(&m) || m <= 0.0) {
                return Err(Error::Domain(
                    "stepwise milestones must be fractions in (0, 1)".into(),
                ));
            }
            (1..=steps)
                .map(|t| {
                    let passed = milestones
                        .iter()
                        .filter(|&&m| (t - 1) as f64 >= m * horizon)
                        .count();
                    factor.powi(passed as i32)
                })
                .collect()
        }
        ScheduleKind::InvT { beta } => {
            if !beta.is_finite() || *beta <= 0.0 {
                return Err(Error::Domain(format!(
                    "offset beta must be positive, got {beta}"
                )));
            }
            (1..=steps).map(|t| beta / (beta + (t - 1) as f64)).collect()
        }
        ScheduleKind::InvSqrt { beta } => {
            if !beta.is_finite() || *beta <= 0.0 {
                return Err(Error::Domain(format!(
                    "offset beta must be positive, got {beta}"
                )));
            }
            (1..=steps)
                .map(|t| beta.sqrt() / (beta + (t - 1) as f64).sqrt())
                .collect()
        }
        ScheduleKind::Constant => vec![1.0; steps],
    };
    Schedule::new(values)
}

/// Composes a linear warmup ramp onto a schedule.
///
/// With `W = ceil(warmup_fraction * T)`, the output multiplier at step `t`
/// is `min(t/W, 1) * s_t`. A fraction of zero returns the input unchanged.
pub fn apply_warmup(s: &Schedule, warmup_fraction: f64) -> Result<Schedule> {
    if !warmup_fraction.is_finite() || !(0.0..1.0).contains(&warmup_fraction) {
        return Err(Error::Domain(format!(
            "warmup fraction must lie in [0, 1), got {warmup_fraction}"
        )));
    }
    if warmup_fraction == 0.0 {
        return Ok(s.clone());
    }
    let steps = s.len();
    let window = (warmup_fraction * steps as f64).ceil() as usize;
    let window = window.max(1);
    let values = s
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let t = i + 1;
            let ramp = (t as f64 / window as f64).min(1.0);
            ramp * v
        })
        .collect();
    Schedule::new(values)
}

/// A warmup-plus-polynomial-decay description fitted to a schedule.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PolyFit {
    /// Warmup fraction in `[0, 1)`.
    pub warmup_fraction: f64,
    /// Decay exponent, > 0.
    pub power: f64,
    /// Root-mean-square deviation of the best fit against the peak-
    /// normalized input.
    pub rms_residual: f64,
}

fn rms_deviation(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

fn warmup_poly_rms(target: &[f64], steps: usize, power: f64, warmup: f64) -> f64 {
    // Both sides are peak-normalized so the comparison is purely about
    // shape; otherwise the warmup ramp's sub-unit peak biases the power.
    let candidate = apply_warmup(
        &make_schedule(&ScheduleKind::Poly { power }, steps).expect("positive power"),
        warmup,
    )
    .expect("fraction below 1")
    .normalize()
    .expect("positive peak");
    rms_deviation(target, candidate.values())
}

/// Fits a `min(t/W, 1) * (1 - t/T)^p` description to a schedule.
///
/// Searches warmup fractions `{0, 0.01, ..., 0.5}` and powers
/// `{0.1, 0.2, ..., 5.0}` for the smallest RMS deviation against the
/// peak-normalized input, then refines the power by golden-section search
/// around the best grid cell. Ties prefer the smaller warmup fraction,
/// then the smaller power.
pub fn fit_poly(s: &Schedule) -> Result<PolyFit> {
    let steps = s.len();
    if steps < 10 {
        return Err(Error::Domain(format!(
            "fitting requires at least 10 steps, got {steps}"
        )));
    }
    if s.max_value() <= 0.0 {
        return Err(Error::Domain(
            "cannot fit an all-zero schedule".into(),
        ));
    }
    let target = s.normalize()?;
    let target = target.values();

    let mut best = (f64::INFINITY, 0.0, 0.1);
    for wi in 0..=50 {
        let warmup = wi as f64 / 100.0;
        for pi in 1..=50 {
            let power = pi as f64 / 10.0;
            let rms = warmup_poly_rms(target, steps, power, warmup);
            // Strict improvement keeps the earliest (smallest) tie-break order.
            if rms < best.0 {
                best = (rms, warmup, power);
            }
        }
    }
    let (mut best_rms, warmup, grid_power) = best;
    let mut best_power = grid_power;

    // Golden-section refinement of the power within one grid cell.
    let inv_phi = 0.618_033_988_749_894_9;
    let mut lo = (grid_power - 0.1).max(1e-3);
    let mut hi = grid_power + 0.1;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = warmup_poly_rms(target, steps, c, warmup);
    let mut fd = warmup_poly_rms(target, steps, d, warmup);
    for _ in 0..60 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = warmup_poly_rms(target, steps, c, warmup);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = warmup_poly_rms(target, steps, d, warmup);
        }
        let (p, r) = if fc < fd { (c, fc) } else { (d, fd) };
        if r < best_rms {
            best_rms = r;
            best_power = p;
        }
    }

    Ok(PolyFit {
        warmup_fraction: warmup,
        power: best_power,
        rms_residual: best_rms,
    })
}
