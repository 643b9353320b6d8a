//! Measured quantities over traces: exact true average, consensus error,
//! convergence detection and the conservation audit. No floating point.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::engine::RoundRecord;
use crate::network::NodeId;
use crate::scalar::{ceil_div, floor_div, ratio_ceil, ratio_floor, Mass};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("true average of an empty active set is undefined")]
    EmptyActiveSet,
    #[error("membership changes at step {0} inside the convergence window")]
    MembershipChanged(usize),
    #[error("no records at or after step {0}")]
    EmptyWindow(usize),
}

/// `q = Σx / n`, exactly.
pub fn true_average<T: Mass, I: IntoIterator<Item = T>>(states: I) -> Result<Ratio<T>, AnalysisError> {
    let (sum, n) = states.into_iter().fold((T::zero(), T::zero()), |(s, n), x| (s + x, n + T::one()));
    if n.is_zero() {
        return Err(AnalysisError::EmptyActiveSet);
    }
    Ok(Ratio::new(sum, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConsensusError<T> {
    pub epsilon: T,
    /// Nodes left out because their token count is not positive.
    pub excluded: usize,
}

/// One-sided excess above `⌈q⌉` plus deficit below `⌊q⌋` of the node
/// ratios `y / z`.
pub fn consensus_error<T: Mass, I>(masses: I, q: &Ratio<T>) -> ConsensusError<T>
where
    I: IntoIterator<Item = (T, T)>,
{
    let (q_lo, q_hi) = (ratio_floor(q), ratio_ceil(q));
    let mut epsilon = T::zero();
    let mut excluded = 0;
    for (y, z) in masses {
        if z <= T::zero() {
            excluded += 1;
            continue;
        }
        let hi = ceil_div(y, z);
        if hi > q_hi {
            epsilon = epsilon + (hi - q_hi);
        }
        let lo = floor_div(y, z);
        if lo < q_lo {
            epsilon = epsilon + (q_lo - lo);
        }
    }
    ConsensusError { epsilon, excluded }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvergenceReport<T: Mass> {
    /// Every node holds one of `⌊q⌋`, `⌈q⌉` unchanged from `k0` to the end
    /// of the window.
    pub converged: bool,
    pub k0: Option<usize>,
    /// First step from which every node's `q_s` stays inside `{⌊q⌋, ⌈q⌉}`,
    /// possibly alternating between the two.
    pub band_k0: Option<usize>,
    pub settled_values: BTreeMap<NodeId, T>,
    pub residual_error_at_horizon: T,
    /// Inclusive step range examined; settlement is relative to its end.
    pub window: (usize, usize),
    pub q: Ratio<T>,
}

impl<T: Mass> ConvergenceReport<T> {
    pub fn band_settled(&self) -> bool {
        self.band_k0.is_some()
    }
}

/// Convergence of `q_s` toward the quantized average over the records with
/// `step ≥ from_step`. Membership must be constant over that window.
///
/// A window with a single record gives no evidence of persistence and is
/// reported as unsettled.
pub fn convergence_time<T: Mass>(
    trace: &[RoundRecord<T>],
    from_step: usize,
) -> Result<ConvergenceReport<T>, AnalysisError> {
    let window: Vec<&RoundRecord<T>> = trace.iter().filter(|r| r.step >= from_step).collect();
    let (first, last) = match (window.first(), window.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(AnalysisError::EmptyWindow(from_step)),
    };
    if let Some(r) = window.iter().find(|r| r.active != first.active) {
        return Err(AnalysisError::MembershipChanged(r.step));
    }
    let q = first.q_true.ok_or(AnalysisError::EmptyActiveSet)?;
    let (lo, hi) = (ratio_floor(&q), ratio_ceil(&q));
    let in_band = |v: T| v == lo || v == hi;

    let mut report = ConvergenceReport {
        converged: false,
        k0: None,
        band_k0: None,
        settled_values: BTreeMap::new(),
        residual_error_at_horizon: last.epsilon,
        window: (first.step, last.step),
        q,
    };
    if window.len() < 2 {
        return Ok(report);
    }

    // Scan backwards for the start of the settled suffix.
    let mut strict_start = 0usize;
    let mut band_start = 0usize;
    let mut settled = true;
    for &v in &first.active {
        let series: Vec<T> = window.iter().map(|r| r.per_node[&v].q_s).collect();
        let end = series[series.len() - 1];
        if !in_band(end) {
            settled = false;
            band_start = window.len();
            break;
        }
        let same = series.iter().rev().take_while(|&&s| s == end).count();
        strict_start = strict_start.max(series.len() - same);
        let inside = series.iter().rev().take_while(|&&s| in_band(s)).count();
        band_start = band_start.max(series.len() - inside);
        report.settled_values.insert(v, end);
    }
    if band_start < window.len() {
        report.band_k0 = Some(window[band_start].step);
    }
    // The suffix must span at least two records to count as settled.
    if settled && strict_start < window.len() - 1 {
        report.converged = true;
        report.k0 = Some(window[strict_start].step);
    } else {
        report.settled_values.clear();
    }
    if band_start >= window.len() - 1 {
        report.band_k0 = None;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Imbalance<T> {
    pub step: usize,
    /// `Σy − 2Σx` over the active set.
    pub y: T,
    /// `Σz − 2n[k]` over the active set.
    pub z: T,
}

impl<T: Mass> Imbalance<T> {
    pub fn is_zero(&self) -> bool {
        self.y.is_zero() && self.z.is_zero()
    }
}

/// Exact mass imbalance of every record.
pub fn conservation_audit<T: Mass>(trace: &[RoundRecord<T>]) -> Vec<Imbalance<T>> {
    trace
        .iter()
        .map(|r| {
            let two = T::two();
            let (mut y, mut z) = (T::zero(), T::zero());
            for s in r.per_node.values() {
                y = y + s.y - two * s.x;
                z = z + s.z - two;
            }
            Imbalance { step: r.step, y, z }
        })
        .collect()
}
