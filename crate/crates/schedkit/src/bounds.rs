//! Evaluators for the last-iterate identities and suboptimality bounds.
//!
//! Two summation rearrangements express a final value through weighted averages
//! plus tail-difference corrections ([`tail_identity`] is an exact
//! identity, [`tail_upper_bound`] an inequality for nonincreasing
//! multiplier sequences). On top of them sit the weighted-SGD bound
//! ([`sgd_weighted_bound`]) and the schedule-agnostic last-iterate bound
//! ([`anyeta_bound`]), whose three terms are reported separately.
//!
//! All evaluators run in O(T) via suffix-sum recurrences with compensated
//! accumulation; the [`reference`] module keeps naive quadratic evaluators
//! as independent test oracles.

use crate::error::{Error, Result};
use crate::schedule::{Schedule, WeightSequence};

/// Neumaier-compensated running sum; the accumulated error of plain
/// left-to-right addition is visible at the 1e-9 tolerances used here once
/// T reaches the hundreds of thousands.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn compensated_total(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// FNV-1a over the raw bits of a float sequence; used for input digests.
pub(crate) fn fnv1a_f64(values: &[f64]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    }
    hash
}

fn check_finite(name: &'static str, values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "{name} at step {} must be finite, got {v}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Exact rearrangement of the final element of a sequence:
///
/// `q_T = (1/s_1) sum_t w_t q_t
///        + sum_{k<T} (1/s_{k+1} - 1/s_k) sum_{t>=k} w_t (q_t - q_k)`
///
/// Returns `(lhs, rhs) = (q_T, the right-hand side)`. The identity holds
/// for arbitrary real `q`; the weights must be strictly positive.
pub fn tail_identity(q: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    if q.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: q.len(),
            right: w.len(),
            context: "sequence vs weights",
        });
    }
    let n = q.len();
    if n == 0 {
        return Err(Error::Domain("sequences must be nonempty".into()));
    }
    check_finite("sequence value", q)?;
    for (i, &wt) in w.iter().enumerate() {
        if !wt.is_finite() || wt <= 0.0 {
            return Err(Error::Domain(format!(
                "weight at step {} must be finite and strictly positive, got {wt}",
                i + 1
            )));
        }
    }

    // Suffix sums s_k = sum_{t>=k} w_t and b_k = sum_{t>=k} w_t q_t.
    let mut s = vec![0.0; n + 1];
    let mut b = vec![0.0; n + 1];
    for t in (0..n).rev() {
        s[t] = w[t] + s[t + 1];
        b[t] = w[t] * q[t] + b[t + 1];
    }

    let mut rhs = CompensatedSum::default();
    rhs.add(b[0] / s[0]);
    for k in 0..n - 1 {
        // sum_{t>=k} w_t (q_t - q_k) = b_k - q_k * s_k
        let inner = b[k] - q[k] * s[k];
        rhs.add((1.0 / s[k + 1] - 1.0 / s[k]) * inner);
    }
    Ok((q[n - 1], rhs.value()))
}

/// Upper bound on the final weighted element for positive nonincreasing
/// multipliers:
///
/// `eta_T q_T <= (1/T) sum_t eta_t q_t
///              + sum_{k<T} 1/((T-k)(T-k+1)) sum_{t>k} eta_t (q_t - q_k)`
///
/// Returns `(lhs, rhs)`; the inequality `lhs <= rhs` holds up to rounding
/// whenever `q >= 0` and `eta` is positive and nonincreasing.
///
/// The `1/((T-k)(T-k+1))` factor pairs each pivot `q_k` with the number of
/// steps remaining after it. (A common restatement indexes the factor as
/// `1/(k(k+1))` without re-indexing the inner sums; that variant is
/// falsified by `q = [1,0,1]`, `eta = [1,0.5,0.5]`, so this follows the
/// derivation, which substitutes `k -> T-k` in both places.)
pub fn tail_upper_bound(q: &[f64], eta: &[f64]) -> Result<(f64, f64)> {
    if q.len() != eta.len() {
        return Err(Error::LengthMismatch {
            left: q.len(),
            right: eta.len(),
            context: "sequence vs multipliers",
        });
    }
    let n = q.len();
    if n == 0 {
        return Err(Error::Domain("sequences must be nonempty".into()));
    }
    for (i, &v) in q.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Domain(format!(
                "sequence value at step {} must be finite and nonnegative, got {v}",
                i + 1
            )));
        }
    }
    for (i, &e) in eta.iter().enumerate() {
        if !e.is_finite() || e <= 0.0 {
            return Err(Error::Domain(format!(
                "multiplier at step {} must be finite and strictly positive, got {e}",
                i + 1
            )));
        }
        if i > 0 && eta[i - 1] < e {
            return Err(Error::Domain(format!(
                "multipliers must be nonincreasing; step {} rises from {} to {e}",
                i + 1,
                eta[i - 1]
            )));
        }
    }

    // Suffix sums over eta_t q_t and eta_t.
    let mut c = vec![0.0; n + 1];
    let mut e = vec![0.0; n + 1];
    for t in (0..n).rev() {
        c[t] = eta[t] * q[t] + c[t + 1];
        e[t] = eta[t] + e[t + 1];
    }

    let mut rhs = CompensatedSum::default();
    rhs.add(c[0] / n as f64);
    for k in 0..n - 1 {
        // sum_{t>k} eta_t (q_t - q_k) = c_{k+1} - q_k * e_{k+1},
        // weighted by 1/((T-k)(T-k+1)) for 1-indexed pivot k.
        let inner = c[k + 1] - q[k] * e[k + 1];
        let remaining = (n - 1 - k) as f64;
        rhs.add(inner / (remaining * (remaining + 1.0)));
    }
    Ok((eta[n - 1] * q[n - 1], rhs.value()))
}

/// The weighted-SGD suboptimality bound
/// `(D^2 + sum w_t^2 g_t^2) / (2 s_1)`.
pub fn sgd_weighted_bound(w: &WeightSequence, gnorms: &[f64], distance: f64) -> Result<f64> {
    if w.len() != gnorms.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: gnorms.len(),
            context: "weights vs gradient norms",
        });
    }
    check_finite("gradient norm", gnorms)?;
    if !distance.is_finite() || distance <= 0.0 {
        return Err(Error::Domain(format!(
            "distance bound must be finite and positive, got {distance}"
        )));
    }
    let variance = compensated_total(
        w.values()
            .iter()
            .zip(gnorms)
            .map(|(&wt, &g)| wt * wt * (g * g)),
    );
    let total = compensated_total(w.values().iter().copied());
    Ok((distance * distance + variance) / (2.0 * total))
}

/// The three evaluated terms of the last-iterate bound for an arbitrary
/// positive schedule, plus their sum and a digest of the inputs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundReport {
    pub distance_term: f64,
    pub variance_term: f64,
    pub tail_term: f64,
    pub total: f64,
    pub inputs_digest: String,
}

/// Evaluates the last-iterate bound for a positive multiplier sequence:
///
/// * distance term `D^2 / (2 sum eta)`,
/// * variance term `(sum eta_t^2 g_t^2) / (2 sum eta)`,
/// * tail term `(1/2) sum_{k<T} [eta_k / S_{k+1}] [(1/S_k) sum_{t>=k} eta_t^2 g_t^2]`
///
/// where `S_k` is the suffix sum of the multipliers. Every suffix that is
/// divided by must be positive: a zero multiplier before the final step is
/// rejected outright, and a zero final multiplier makes `S_T = 0`, which
/// is reported as a zero suffix sum (use the variant of a decaying
/// schedule that stays positive at the last step instead).
pub fn anyeta_bound(eta: &Schedule, gnorms: &[f64], distance: f64) -> Result<BoundReport> {
    let n = eta.len();
    if n != gnorms.len() {
        return Err(Error::LengthMismatch {
            left: n,
            right: gnorms.len(),
            context: "schedule vs gradient norms",
        });
    }
    check_finite("gradient norm", gnorms)?;
    if !distance.is_finite() || distance <= 0.0 {
        return Err(Error::Domain(format!(
            "distance bound must be finite and positive, got {distance}"
        )));
    }
    let values = eta.values();

    // Suffix sums of eta and of eta^2 g^2. A vanishing suffix (trailing
    // zeros, e.g. a plain linear decay whose last multiplier is 0) makes the
    // tail term divide by zero and is reported before the positivity check
    // so the message names the real obstruction.
    let mut s = vec![0.0; n + 1];
    let mut v2 = vec![0.0; n + 1];
    for t in (0..n).rev() {
        s[t] = values[t] + s[t + 1];
        v2[t] = values[t] * values[t] * (gnorms[t] * gnorms[t]) + v2[t + 1];
    }
    if let Some(j) = (1..n).find(|&j| s[j] == 0.0) {
        return Err(Error::ZeroSuffix { step: j + 1 });
    }
    for (i, &v) in values.iter().enumerate().take(n - 1) {
        if v <= 0.0 {
            return Err(Error::Domain(format!(
                "multiplier at step {} must be strictly positive before the final step",
                i + 1
            )));
        }
    }

    let total_eta = compensated_total(values.iter().copied());
    let variance_sum = compensated_total(
        values
            .iter()
            .zip(gnorms)
            .map(|(&e, &g)| e * e * (g * g)),
    );
    let distance_term = distance * distance / (2.0 * total_eta);
    let variance_term = variance_sum / (2.0 * total_eta);

    let mut tail = CompensatedSum::default();
    for k in 0..n - 1 {
        tail.add(values[k] / s[k + 1] * (v2[k] / s[k]));
    }
    let tail_term = 0.5 * tail.value();

    let total = distance_term + variance_term + tail_term;
    let inputs_digest = format!(
        "T={} D={} eta_fnv={:016x} gnorm_fnv={:016x}",
        n,
        distance,
        fnv1a_f64(values),
        fnv1a_f64(gnorms)
    );
    Ok(BoundReport {
        distance_term,
        variance_term,
        tail_term,
        total,
        inputs_digest,
    })
}

/// The constant in front of `DG/sqrt(T)` for the benchmark decaying
/// schedule: `2 + (H(T-1) - 2/3)/(T+1)` with `H` the harmonic sum. Stays
/// below 2.25 for every horizon.
pub fn linear_decay_constant(horizon: usize) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::Domain(format!(
            "the decay constant needs a horizon of at least 2, got {horizon}"
        )));
    }
    let mut h = CompensatedSum::default();
    for t in 1..horizon {
        h.add(1.0 / t as f64);
    }
    Ok(2.0 + (h.value() - 2.0 / 3.0) / (horizon as f64 + 1.0))
}

/// Harmonic sum `H(m) = sum_{t=1}^m 1/t` with compensated accumulation.
pub fn harmonic(m: usize) -> f64 {
    let mut h = CompensatedSum::default();
    for t in 1..=m {
        h.add(1.0 / t as f64);
    }
    h.value()
}

/// Naive quadratic evaluators of the same quantities, kept as independent
/// oracles for the fast suffix-sum implementations.
pub mod reference {
    /// Direct double-loop evaluation of the [`super::tail_identity`]
    /// right-hand side.
    pub fn tail_identity_rhs(q: &[f64], w: &[f64]) -> f64 {
        let n = q.len();
        let suffix = |k: usize| -> f64 { w[k..].iter().sum() };
        let mut rhs = 0.0;
        let total: f64 = suffix(0);
        let weighted: f64 = q.iter().zip(w).map(|(&qt, &wt)| wt * qt).sum();
        rhs += weighted / total;
        for k in 0..n - 1 {
            let factor = 1.0 / suffix(k + 1) - 1.0 / suffix(k);
            let inner: f64 = (k..n).map(|t| w[t] * (q[t] - q[k])).sum();
            rhs += factor * inner;
        }
        rhs
    }

    /// Direct double-loop evaluation of the [`super::tail_upper_bound`]
    /// right-hand side.
    pub fn tail_upper_bound_rhs(q: &[f64], eta: &[f64]) -> f64 {
        let n = q.len();
        let mut rhs = q.iter().zip(eta).map(|(&qt, &et)| et * qt).sum::<f64>() / n as f64;
        for k in 0..n - 1 {
            let remaining = (n - 1 - k) as f64;
            let inner: f64 = (k + 1..n).map(|t| eta[t] * (q[t] - q[k])).sum();
            rhs += inner / (remaining * (remaining + 1.0));
        }
        rhs
    }

    /// Direct double-loop evaluation of the [`super::anyeta_bound`] tail
    /// term.
    pub fn anyeta_tail_term(eta: &[f64], gnorms: &[f64]) -> f64 {
        let n = eta.len();
        let mut tail = 0.0;
        for k in 0..n - 1 {
            let s_next: f64 = eta[k + 1..].iter().sum();
            let s_k: f64 = eta[k..].iter().sum();
            let v_k: f64 = (k..n)
                .map(|t| eta[t] * eta[t] * gnorms[t] * gnorms[t])
                .sum();
            tail += eta[k] / s_next * (v_k / s_k);
        }
        0.5 * tail
    }
}
