//! Norm-adaptive schedule refinement and closed-form optimal weights.
//!
//! The refinement pipeline median-filters an observed gradient-norm log,
//! inverts the filtered norms into per-step weights (inverse squared norm
//! for plain SGD logs, plain inverse for l1 or adaptively-weighted logs),
//! and converts the weights into a peak-normalized schedule. When the
//! per-step norms are known exactly, [`optimal_weights`] instead evaluates
//! the closed-form weighting that minimizes the last-iterate bound, and
//! [`per_coordinate_weights`] generalizes it to per-coordinate learning
//! rates.

use crate::error::{Error, Result};
use crate::schedule::{weights_to_schedule, Schedule, WeightSequence};

/// What a scalar gradient-norm entry measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Euclidean norm of the stochastic gradient.
    L2,
    /// l1 norm of the stochastic gradient.
    L1,
    /// Squared coordinates weighted by the adaptive preconditioner,
    /// `sum_i g_i^2 / sqrt(v_i)`.
    AdamWeighted,
}

/// Per-step scalar gradient norms with their step indices and kind.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GradientNormLog {
    steps: Vec<u64>,
    norms: Vec<f64>,
    kind: NormKind,
}

impl GradientNormLog {
    pub fn new(steps: Vec<u64>, norms: Vec<f64>, kind: NormKind) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Domain("gradient-norm log must be nonempty".into()));
        }
        if steps.len() != norms.len() {
            return Err(Error::LengthMismatch {
                left: steps.len(),
                right: norms.len(),
                context: "norm log steps vs norms",
            });
        }
        if steps[0] == 0 {
            return Err(Error::Domain("steps are 1-indexed; step 0 is invalid".into()));
        }
        for pair in steps.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::Domain(format!(
                    "steps must be strictly increasing; saw {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        for (i, &n) in norms.iter().enumerate() {
            if !n.is_finite() || n < 0.0 {
                return Err(Error::Domain(format!(
                    "norm at step {} must be finite and nonnegative, got {n}",
                    steps[i]
                )));
            }
        }
        Ok(Self { steps, norms, kind })
    }

    /// Log with consecutive steps `1..=norms.len()`.
    pub fn from_norms(norms: Vec<f64>, kind: NormKind) -> Result<Self> {
        let steps = (1..=norms.len() as u64).collect();
        Self::new(steps, norms, kind)
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty logs
    }

    pub fn steps(&self) -> &[u64] {
        &self.steps
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }
}

/// How filtered norms are inverted into weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `w_t = G_t^-2`, the rule for plain Euclidean norms.
    InvSqL2,
    /// `w_t = G_t^-1` applied to l1 norms.
    InvL1,
    /// `w_t = G_t^-1` applied to adaptively-weighted norms.
    InvAdamWeighted,
}

impl Weighting {
    /// The conventional pairing for each norm kind.
    pub fn for_kind(kind: NormKind) -> Self {
        match kind {
            NormKind::L2 => Weighting::InvSqL2,
            NormKind::L1 => Weighting::InvL1,
            NormKind::AdamWeighted => Weighting::InvAdamWeighted,
        }
    }
}

/// What to do when a filtered norm is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroPolicy {
    /// Refuse to refine: inverting a zero norm concentrates all mass there.
    Error,
    /// Replace zeros by `epsilon_fraction * max(filtered norms)`.
    Clamp { epsilon_fraction: f64 },
}

/// Tuning for [`refine`].
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementConfig {
    /// Smoothing fraction: the filter width is `max(1, round(tau * T))`,
    /// bumped to the next odd integer. Must lie in `(0, 1]`.
    pub tau: f64,
    pub weighting: Weighting,
    pub zero_policy: ZeroPolicy,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            weighting: Weighting::InvSqL2,
            zero_policy: ZeroPolicy::Error,
        }
    }
}

/// Output of [`refine`]: the schedule plus the intermediate filtered norms
/// and whether any zero norm was clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub schedule: Schedule,
    pub filtered_norms: Vec<f64>,
    pub clamped: bool,
}

/// Sliding-window median with asymmetric padding: the left edge repeats the
/// first element, the right edge mirrors the tail without repeating the
/// final element. Every output value is an element of the padded input.
pub fn median_filter(values: &[f64], width: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Domain("median filter input must be nonempty".into()));
    }
    if width.is_multiple_of(2) || width == 0 {
        return Err(Error::Domain(format!(
            "median filter width must be a positive odd integer, got {width}"
        )));
    }
    if width > 2 * n + 1 {
        return Err(Error::Domain(format!(
            "median filter width {width} exceeds the maximum {} for {n} values",
            2 * n + 1
        )));
    }
    let half = (width / 2) as isize;
    let padded_at = |j: isize| -> f64 {
        if j < 0 {
            values[0]
        } else if (j as usize) < n {
            values[j as usize]
        } else if n == 1 {
            values[0]
        } else {
            // Mirror about the last element without repeating it; the
            // pattern has period 2(n-1).
            let period = 2 * (n - 1);
            let mut k = (j as usize - (n - 1)) % period;
            if k > n - 1 {
                k = period - k;
            }
            values[n - 1 - k]
        }
    };
    let mut window = vec![0.0; width];
    let mut out = Vec::with_capacity(n);
    for t in 0..n as isize {
        for (slot, j) in window.iter_mut().zip(t - half..=t + half) {
            *slot = padded_at(j);
        }
        window.sort_by(f64::total_cmp);
        out.push(window[width / 2]);
    }
    Ok(out)
}

/// Turns a gradient-norm log into a peak-normalized schedule.
///
/// Pipeline: median-filter the norms with width `max(1, round(tau * T))`
/// (made odd), invert them into weights per the configured rule, and
/// convert the weights into the induced schedule normalized to peak 1.
/// Filtered zeros either abort (the refined schedule would put all mass on
/// the zero step) or are clamped to a small fraction of the peak norm,
/// with the clamp recorded in the result.
pub fn refine(log: &GradientNormLog, config: &RefinementConfig) -> Result<Refinement> {
    if !config.tau.is_finite() || config.tau <= 0.0 || config.tau > 1.0 {
        return Err(Error::Domain(format!(
            "smoothing fraction tau must lie in (0, 1], got {}",
            config.tau
        )));
    }
    let n = log.len();
    let mut width = ((config.tau * n as f64).round() as usize).max(1);
    if width.is_multiple_of(2) {
        width += 1;
    }
    let mut filtered = median_filter(log.norms(), width)?;

    let peak = filtered.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak <= 0.0 {
        return Err(Error::Domain(
            "all filtered gradient norms are zero; the log carries no signal to refine".into(),
        ));
    }
    let mut clamped = false;
    match config.zero_policy {
        ZeroPolicy::Error => {
            if let Some(i) = filtered.iter().position(|&g| g == 0.0) {
                return Err(Error::DegenerateNorms { step: i + 1 });
            }
        }
        ZeroPolicy::Clamp { epsilon_fraction } => {
            if !epsilon_fraction.is_finite() || epsilon_fraction <= 0.0 {
                return Err(Error::Domain(format!(
                    "clamp epsilon fraction must be positive, got {epsilon_fraction}"
                )));
            }
            let floor = epsilon_fraction * peak;
            for g in &mut filtered {
                if *g == 0.0 {
                    *g = floor;
                    clamped = true;
                }
            }
        }
    }

    // Scale-invariant weight construction: dividing by the peak first keeps
    // the inverses in a tame range without changing the normalized output.
    let weights: Vec<f64> = filtered
        .iter()
        .map(|&g| {
            let r = g / peak;
            match config.weighting {
                Weighting::InvSqL2 => 1.0 / (r * r),
                Weighting::InvL1 | Weighting::InvAdamWeighted => 1.0 / r,
            }
        })
        .collect();
    let weights = WeightSequence::new(weights)?;
    let schedule = weights_to_schedule(&weights, true)?;
    Ok(Refinement {
        schedule,
        filtered_norms: filtered,
        clamped,
    })
}

/// Closed-form optimal weighting for known per-step gradient norms.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalWeightsResult {
    pub weights: WeightSequence,
    /// Common scale `lambda = distance / sqrt(sum of inverse squared norms)`.
    pub lambda: f64,
    /// The bound objective `(D^2 + sum w_t^2 g_t^2) / (2 sum w_t)` evaluated
    /// at the returned weights; analytically equal to `lambda`.
    pub bound_value: f64,
}

fn check_norms_positive(gnorms: &[f64]) -> Result<()> {
    if gnorms.is_empty() {
        return Err(Error::Domain("need at least one gradient norm".into()));
    }
    for (i, &g) in gnorms.iter().enumerate() {
        if !g.is_finite() || g <= 0.0 {
            return Err(Error::Domain(format!(
                "gradient norm at step {} must be finite and strictly positive, got {g}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// The weighting `w_t = g_t^-2 * lambda` that minimizes the last-iterate
/// bound `(D^2 + sum w_t^2 g_t^2) / (2 sum w_t)` over positive weights.
pub fn optimal_weights(gnorms: &[f64], distance: f64) -> Result<OptimalWeightsResult> {
    check_norms_positive(gnorms)?;
    if !distance.is_finite() || distance <= 0.0 {
        return Err(Error::Domain(format!(
            "distance bound must be finite and positive, got {distance}"
        )));
    }
    let invs: Vec<f64> = gnorms.iter().map(|&g| 1.0 / (g * g)).collect();
    let inv_sum: f64 = invs.iter().sum();
    let lambda = distance / inv_sum.sqrt();
    let weights: Vec<f64> = invs.iter().map(|&r| r * lambda).collect();
    let weights = WeightSequence::new(weights)?;
    let bound_value = bound_objective(gnorms, distance, weights.values());
    Ok(OptimalWeightsResult {
        weights,
        lambda,
        bound_value,
    })
}

/// The bound objective `(D^2 + sum w_t^2 g_t^2) / (2 sum w_t)`.
pub fn bound_objective(gnorms: &[f64], distance: f64, w: &[f64]) -> f64 {
    let variance: f64 = w.iter().zip(gnorms).map(|(&wt, &g)| wt * wt * g * g).sum();
    let total: f64 = w.iter().sum();
    (distance * distance + variance) / (2.0 * total)
}

/// Largest central-difference derivative of the log bound objective across
/// the weight coordinates, using step `1e-6 * w_k`. Near zero at the
/// optimum.
pub fn stationarity_residual(gnorms: &[f64], distance: f64, w: &WeightSequence) -> f64 {
    let mut probe: Vec<f64> = w.values().to_vec();
    let mut worst = 0.0f64;
    for k in 0..probe.len() {
        let base = probe[k];
        let h = 1e-6 * base;
        probe[k] = base + h;
        let up = bound_objective(gnorms, distance, &probe).ln();
        probe[k] = base - h;
        let down = bound_objective(gnorms, distance, &probe).ln();
        probe[k] = base;
        worst = worst.max(((up - down) / (2.0 * h)).abs());
    }
    worst
}

/// Optimal weights when each coordinate has its own learning rate.
///
/// With per-step per-coordinate rates `lr[t][i]` and gradients
/// `grads[t][i]`, the step energy is `E_t = sum_i lr[t][i] * grads[t][i]^2`
/// and the weights are `w_t = radius / sqrt(sum_p E_p^-1) * E_t^-1`. With
/// one coordinate and unit rates this reduces bitwise to
/// [`optimal_weights`] on `|g_t|` with `distance = radius`.
pub fn per_coordinate_weights(
    lr: &[Vec<f64>],
    grads: &[Vec<f64>],
    radius: f64,
) -> Result<WeightSequence> {
    if lr.len() != grads.len() {
        return Err(Error::LengthMismatch {
            left: lr.len(),
            right: grads.len(),
            context: "learning-rate rows vs gradient rows",
        });
    }
    if lr.is_empty() {
        return Err(Error::Domain("need at least one step".into()));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::Domain(format!(
            "radius must be finite and positive, got {radius}"
        )));
    }
    let mut invs = Vec::with_capacity(lr.len());
    for (t, (rates, gs)) in lr.iter().zip(grads).enumerate() {
        if rates.len() != gs.len() {
            return Err(Error::LengthMismatch {
                left: rates.len(),
                right: gs.len(),
                context: "per-coordinate rates vs gradients",
            });
        }
        if rates.iter().any(|&r| !r.is_finite() || r <= 0.0) {
            return Err(Error::Domain(format!(
                "learning rates at step {} must be finite and strictly positive",
                t + 1
            )));
        }
        let energy: f64 = rates.iter().zip(gs).map(|(&r, &g)| r * (g * g)).sum();
        if energy <= 0.0 || !energy.is_finite() {
            return Err(Error::Domain(format!(
                "step {} has zero gradient energy; its inverse weight is undefined",
                t + 1
            )));
        }
        invs.push(1.0 / energy);
    }
    let inv_sum: f64 = invs.iter().sum();
    let lambda = radius / inv_sum.sqrt();
    WeightSequence::new(invs.iter().map(|&r| r * lambda).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{fit_poly, make_schedule, ScheduleKind};
    use approx::assert_relative_eq;

    fn l2_log(norms: &[f64]) -> GradientNormLog {
        GradientNormLog::from_norms(norms.to_vec(), NormKind::L2).unwrap()
    }

    #[test]
    fn median_filter_hand_example() {
        let out = median_filter(&[1.0, 2.0, 100.0, 2.0, 1.0], 3).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn median_filter_constant_input_any_width() {
        for width in [1usize, 3, 5, 9] {
            let out = median_filter(&[7.5; 4], width).unwrap();
            assert_eq!(out, vec![7.5; 4]);
        }
    }

    #[test]
    fn median_filter_width_one_is_identity() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(median_filter(&v, 1).unwrap(), v);
    }

    #[test]
    fn median_filter_max_width_uses_mirrored_tail() {
        // Padded [1,2,3] with 3 on each side: [1,1,1, 1,2,3, 2,1,2].
        let out = median_filter(&[1.0, 2.0, 3.0], 7).unwrap();
        assert_eq!(out, vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn median_filter_output_values_come_from_padded_input() {
        let v = [0.3, 9.1, 2.2, 5.5, 1.7, 8.8, 0.1];
        let n = v.len();
        for width in [3usize, 5, 7, 9, 15] {
            let out = median_filter(&v, width).unwrap();
            // The padded input only contains original elements.
            for x in out {
                assert!(v[..n].contains(&x), "{x} not in input");
            }
        }
    }

    #[test]
    fn median_filter_rejects_bad_widths() {
        assert!(median_filter(&[1.0, 2.0], 2).is_err());
        assert!(median_filter(&[1.0, 2.0], 0).is_err());
        assert!(median_filter(&[1.0, 2.0], 7).is_err());
        assert!(median_filter(&[], 1).is_err());
        assert!(median_filter(&[1.0, 2.0], 5).is_ok());
    }

    #[test]
    fn constant_norms_refine_to_linear_decay() {
        let t_max = 10;
        let log = l2_log(&[3.2; 10]);
        let out = refine(&log, &RefinementConfig::default()).unwrap();
        assert!(!out.clamped);
        let lin = make_schedule(&ScheduleKind::Linear, t_max)
            .unwrap()
            .normalize()
            .unwrap();
        assert_eq!(out.schedule.value_at(1), 1.0);
        assert_eq!(out.schedule.value_at(t_max), 0.0);
        for t in 1..=t_max {
            assert_relative_eq!(
                out.schedule.value_at(t),
                lin.value_at(t),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn step_norms_match_direct_summation() {
        let log = l2_log(&[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
        let config = RefinementConfig {
            tau: 0.1, // width max(1, round(0.8)) = 1
            ..RefinementConfig::default()
        };
        let out = refine(&log, &config).unwrap();
        let expected = [1.0, 0.75, 0.5, 0.25, 0.046875, 0.03125, 0.015625, 0.0];
        for (got, want) in out.schedule.values().iter().zip(expected) {
            if want == 0.0 {
                assert_eq!(*got, 0.0);
            } else {
                assert_relative_eq!(*got, want, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn decreasing_norms_flatten_the_early_schedule() {
        let t_max = 200;
        let falling: Vec<f64> = (0..t_max)
            .map(|i| 2.0 - 1.5 * i as f64 / (t_max - 1) as f64)
            .collect();
        let rising: Vec<f64> = falling.iter().rev().cloned().collect();
        let refined_fall = refine(&l2_log(&falling), &RefinementConfig::default()).unwrap();
        let refined_rise = refine(&l2_log(&rising), &RefinementConfig::default()).unwrap();
        let p_fall = fit_poly(&refined_fall.schedule).unwrap().power;
        let p_rise = fit_poly(&refined_rise.schedule).unwrap().power;
        assert!(p_fall < 0.95, "falling norms gave power {p_fall}");
        assert!(p_rise > 1.05, "rising norms gave power {p_rise}");
    }

    #[test]
    fn refinement_ignores_uniform_norm_scale() {
        let base: Vec<f64> = (1..=50).map(|i| 1.0 + (i as f64 * 0.37).sin().abs()).collect();
        let reference = refine(&l2_log(&base), &RefinementConfig::default()).unwrap();
        let pow2: Vec<f64> = base.iter().map(|x| x * 4.0).collect();
        let scaled = refine(&l2_log(&pow2), &RefinementConfig::default()).unwrap();
        assert_eq!(scaled.schedule.values(), reference.schedule.values());
        let odd: Vec<f64> = base.iter().map(|x| x * 3.7).collect();
        let scaled = refine(&l2_log(&odd), &RefinementConfig::default()).unwrap();
        for (a, b) in scaled
            .schedule
            .values()
            .iter()
            .zip(reference.schedule.values())
        {
            assert_relative_eq!(*a, *b, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_filtered_norm_errors_by_default() {
        let log = l2_log(&[1.0, 0.0, 2.0]);
        let err = refine(&log, &RefinementConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("step 2"), "{msg}");
        assert!(msg.contains("linear decay"), "{msg}");
    }

    #[test]
    fn zero_filtered_norm_can_be_clamped() {
        let log = l2_log(&[1.0, 0.0, 2.0]);
        let config = RefinementConfig {
            zero_policy: ZeroPolicy::Clamp {
                epsilon_fraction: 1e-6,
            },
            ..RefinementConfig::default()
        };
        let out = refine(&log, &config).unwrap();
        assert!(out.clamped);
        assert_eq!(out.filtered_norms[1], 2e-6);
        assert!(out.schedule.values().iter().all(|v| v.is_finite()));
        // The huge clamped inverse weight sits in step 1's suffix, so the
        // normalized schedule is [1, w2*s3/(w1*s2), 0] ~ [1, 1/4, 0].
        assert_eq!(out.schedule.value_at(1), 1.0);
        assert_relative_eq!(out.schedule.value_at(2), 0.25, max_relative = 1e-4);
        assert_eq!(out.schedule.value_at(3), 0.0);
    }

    #[test]
    fn all_zero_norms_cannot_be_refined() {
        let log = l2_log(&[0.0, 0.0, 0.0]);
        let config = RefinementConfig {
            zero_policy: ZeroPolicy::Clamp {
                epsilon_fraction: 1e-6,
            },
            ..RefinementConfig::default()
        };
        assert!(refine(&log, &config).is_err());
    }

    #[test]
    fn config_validation() {
        let log = l2_log(&[1.0, 2.0]);
        for tau in [0.0, -0.5, 1.5, f64::NAN] {
            let config = RefinementConfig {
                tau,
                ..RefinementConfig::default()
            };
            assert!(refine(&log, &config).is_err(), "tau {tau}");
        }
        let config = RefinementConfig {
            zero_policy: ZeroPolicy::Clamp {
                epsilon_fraction: 0.0,
            },
            ..RefinementConfig::default()
        };
        assert!(refine(&log, &config).is_err());
    }

    #[test]
    fn log_validation() {
        assert!(GradientNormLog::from_norms(vec![], NormKind::L2).is_err());
        assert!(GradientNormLog::new(vec![1, 1], vec![1.0, 2.0], NormKind::L2).is_err());
        assert!(GradientNormLog::new(vec![0, 1], vec![1.0, 2.0], NormKind::L2).is_err());
        assert!(GradientNormLog::new(vec![1], vec![-1.0], NormKind::L2).is_err());
        assert!(GradientNormLog::new(vec![1, 2], vec![1.0], NormKind::L2).is_err());
        assert!(GradientNormLog::new(vec![3, 9], vec![1.0, 2.0], NormKind::L1).is_ok());
    }

    #[test]
    fn equal_norms_give_uniform_optimal_weights() {
        let g = 2.5;
        let d = 0.8;
        let t_max = 16;
        let out = optimal_weights(&vec![g; t_max], d).unwrap();
        let expect = d / (g * (t_max as f64).sqrt());
        for &w in out.weights.values() {
            assert_relative_eq!(w, expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn two_norm_example_matches_closed_form() {
        let out = optimal_weights(&[1.0, 2.0], 1.0).unwrap();
        let lambda = 1.0 / 1.25f64.sqrt();
        assert_relative_eq!(out.lambda, lambda, max_relative = 1e-15);
        assert_relative_eq!(out.weights.values()[0], lambda, max_relative = 1e-15);
        assert_relative_eq!(out.weights.values()[1], lambda / 4.0, max_relative = 1e-15);
        assert!((out.weights.values()[0] - 0.8944).abs() < 5e-5);
        assert!((out.weights.values()[1] - 0.2236).abs() < 5e-5);
        assert_relative_eq!(out.bound_value, out.lambda, max_relative = 1e-12);
    }

    #[test]
    fn coarse_grid_never_beats_the_closed_form() {
        let gnorms = [1.0, 2.0];
        let d = 1.0;
        let out = optimal_weights(&gnorms, d).unwrap();
        let w_star = out.weights.values();
        for i in 1..=50 {
            for j in 1..=50 {
                let w = [w_star[0] * i as f64 / 17.0, w_star[1] * j as f64 / 17.0];
                let obj = bound_objective(&gnorms, d, &w);
                assert!(obj >= out.bound_value * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn optimal_weights_are_stationary() {
        let cases: [&[f64]; 3] = [
            &[1.0, 2.0],
            &[0.5, 3.0, 1.2, 0.9],
            &[2.0, 2.0, 2.0, 2.0, 2.0],
        ];
        for gnorms in cases {
            let out = optimal_weights(gnorms, 1.3).unwrap();
            let res = stationarity_residual(gnorms, 1.3, &out.weights);
            assert!(res < 1e-5, "residual {res}");
        }
    }

    #[test]
    fn optimal_weights_rejects_bad_input() {
        assert!(optimal_weights(&[1.0, 0.0], 1.0).is_err());
        assert!(optimal_weights(&[1.0, -2.0], 1.0).is_err());
        assert!(optimal_weights(&[], 1.0).is_err());
        assert!(optimal_weights(&[1.0], 0.0).is_err());
        assert!(optimal_weights(&[1.0], f64::NAN).is_err());
    }

    #[test]
    fn one_dimensional_per_coordinate_reduces_to_scalar() {
        let g = [0.7, 1.9, 0.4, 2.5];
        let lr: Vec<Vec<f64>> = vec![vec![1.0]; 4];
        let grads: Vec<Vec<f64>> = g.iter().map(|&x| vec![x]).collect();
        let pc = per_coordinate_weights(&lr, &grads, 1.4).unwrap();
        let scalar = optimal_weights(&g, 1.4).unwrap();
        assert_eq!(pc.values(), scalar.weights.values());
    }

    #[test]
    fn two_dimensional_example_matches_energies() {
        let lr = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let grads = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
        let w = per_coordinate_weights(&lr, &grads, 1.0).unwrap();
        // Energies [1, 4], so the weights match the scalar [1, 2] case.
        let lambda = 1.0 / 1.25f64.sqrt();
        assert_relative_eq!(w.values()[0], lambda, max_relative = 1e-15);
        assert_relative_eq!(w.values()[1], lambda / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn adaptive_norm_refinement_matches_per_coordinate_weights() {
        let grads: Vec<Vec<f64>> = vec![vec![0.3, 0.4], vec![0.1, 0.2], vec![0.5, 0.1]];
        let v: Vec<Vec<f64>> = vec![vec![0.09, 0.16], vec![0.04, 0.09], vec![0.25, 0.04]];
        let lr: Vec<Vec<f64>> = v
            .iter()
            .map(|row| row.iter().map(|&x| 1.0 / x.sqrt()).collect())
            .collect();
        let weighted_norms: Vec<f64> = grads
            .iter()
            .zip(&v)
            .map(|(grow, vrow)| {
                grow.iter()
                    .zip(vrow)
                    .map(|(&g, &vi)| g * g / vi.sqrt())
                    .sum()
            })
            .collect();
        let log = GradientNormLog::from_norms(weighted_norms, NormKind::AdamWeighted).unwrap();
        let config = RefinementConfig {
            tau: 0.01, // width 1: no smoothing on this short log
            weighting: Weighting::InvAdamWeighted,
            zero_policy: ZeroPolicy::Error,
        };
        let via_refine = refine(&log, &config).unwrap().schedule;
        let pc = per_coordinate_weights(&lr, &grads, 1.0).unwrap();
        let via_weights = weights_to_schedule(&pc, true).unwrap();
        for (a, b) in via_refine.values().iter().zip(via_weights.values()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn per_coordinate_rejects_bad_input() {
        assert!(per_coordinate_weights(&[], &[], 1.0).is_err());
        let lr = vec![vec![1.0]];
        assert!(per_coordinate_weights(&lr, &[vec![0.0]], 1.0).is_err());
        assert!(per_coordinate_weights(&lr, &[vec![1.0, 2.0]], 1.0).is_err());
        assert!(per_coordinate_weights(&[vec![0.0]], &[vec![1.0]], 1.0).is_err());
        assert!(per_coordinate_weights(&lr, &[vec![1.0]], 0.0).is_err());
        let two = vec![vec![1.0], vec![1.0]];
        assert!(per_coordinate_weights(&two, &[vec![1.0]], 1.0).is_err());
    }
}
