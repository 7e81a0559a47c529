//! Exact weighted ERM over threshold stumps and the two constants.
//!
//! Candidates are searched in a fixed order: `Constant(+1)`, `Constant(-1)`,
//! then stumps by feature, threshold and polarity (`+1` first). The winner is
//! the first candidate whose error is within [`TIE_TOLERANCE`] (relative to the
//! total weight) of the minimum. Stump thresholds come only from items with
//! positive weight, so zero-weight items can never change the answer.
//!
//! Each feature costs one sort plus a prefix-sum sweep.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Instance, Label};
use crate::error::{MilError, Result};
use crate::hypothesis::{thresholds_for_sorted, InstanceHypothesis};

/// Relative slack under which two weighted errors count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Below this many (item, feature) pairs the sweep stays on one thread.
const PARALLEL_WORK: usize = 1 << 15;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedItem {
    pub x: Instance,
    pub y: Label,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedInstanceSample {
    dimension: usize,
    items: Vec<WeightedItem>,
}

impl WeightedInstanceSample {
    /// Validates dimensions and weights (finite, non-negative). A zero total is
    /// allowed here and rejected by the oracles.
    pub fn new(dimension: usize, items: Vec<WeightedItem>) -> Result<Self> {
        for it in &items {
            if it.x.dimension() != dimension {
                return Err(MilError::invalid(format!(
                    "sample item has dimension {}, expected {dimension}",
                    it.x.dimension()
                )));
            }
            if !it.w.is_finite() || it.w < 0.0 {
                return Err(MilError::invalid(format!(
                    "sample weight {} is not finite and non-negative",
                    it.w
                )));
            }
        }
        Ok(WeightedInstanceSample { dimension, items })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn items(&self) -> &[WeightedItem] {
        &self.items
    }

    pub fn total_weight(&self) -> f64 {
        self.items.iter().map(|it| it.w).sum()
    }

    /// `sum w [h(x) != y] / sum w`.
    pub fn weighted_error(&self, h: &InstanceHypothesis) -> Result<f64> {
        h.check_dimension(self.dimension)?;
        let total = self.total_weight();
        if total.is_nan() || total <= 0.0 {
            return Err(MilError::ZeroWeight);
        }
        let wrong: f64 = self
            .items
            .iter()
            .filter(|it| h.label_of(it.x.features()) != it.y)
            .map(|it| it.w)
            .sum();
        Ok(wrong / total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub hypothesis: InstanceHypothesis,
    pub weighted_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    #[default]
    Agnostic,
    /// Only hypotheses with no mistakes on (positive-weight) negatives qualify.
    OneSided,
}

impl OracleKind {
    pub fn run(self, sample: &WeightedInstanceSample) -> Result<OracleReport> {
        match self {
            OracleKind::Agnostic => erm_stumps(sample),
            OracleKind::OneSided => erm_one_sided(sample),
        }
    }
}

impl FromStr for OracleKind {
    type Err = MilError;

    fn from_str(s: &str) -> Result<OracleKind> {
        match s {
            "agnostic" => Ok(OracleKind::Agnostic),
            "one_sided" => Ok(OracleKind::OneSided),
            _ => Err(MilError::invalid(format!(
                "unknown oracle {s:?} (expected agnostic or one_sided)"
            ))),
        }
    }
}

/// Weighted ERM over all stumps and both constants.
pub fn erm_stumps(sample: &WeightedInstanceSample) -> Result<OracleReport> {
    search(sample, false)
}

/// Weighted ERM restricted to hypotheses that label every positive-weight
/// negative item `-1`. `Constant(-1)` always qualifies.
pub fn erm_one_sided(sample: &WeightedInstanceSample) -> Result<OracleReport> {
    search(sample, true)
}

/// Per-threshold results for one feature, in candidate order.
struct FeatureSweep {
    feature: usize,
    thresholds: Vec<f64>,
    /// (error with polarity +1, error with polarity -1) per threshold.
    errors: Vec<(f64, f64)>,
    /// Positive-weight negatives mislabelled, per threshold and polarity.
    negative_mistakes: Vec<(usize, usize)>,
}

#[derive(Clone, Copy)]
struct Totals {
    pos_w: f64,
    neg_w: f64,
    neg_n: usize,
}

fn sweep_feature(feature: usize, sample: &WeightedInstanceSample, totals: Totals) -> FeatureSweep {
    let mut column: Vec<(f64, Label, f64)> = sample
        .items
        .iter()
        .filter(|it| it.w > 0.0)
        .map(|it| (it.x[feature], it.y, it.w))
        .collect();
    column.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut distinct = Vec::new();
    // Group boundaries: `ends[j]` is one past the last item with value distinct[j].
    let mut ends = Vec::new();
    for (i, &(v, _, _)) in column.iter().enumerate() {
        if distinct.last() != Some(&v) {
            if !distinct.is_empty() {
                ends.push(i);
            }
            distinct.push(v);
        }
    }
    ends.push(column.len());
    let thresholds = thresholds_for_sorted(&distinct);

    let mut errors = Vec::with_capacity(thresholds.len());
    let mut negative_mistakes = Vec::with_capacity(thresholds.len());
    let (mut pos_left, mut neg_left, mut neg_left_n) = (0.0, 0.0, 0usize);
    let mut start = 0;
    for j in 0..thresholds.len() {
        // Items left of threshold j (value <= distinct[j-1]) are predicted -polarity.
        errors.push((
            pos_left + (totals.neg_w - neg_left),
            neg_left + (totals.pos_w - pos_left),
        ));
        negative_mistakes.push((totals.neg_n - neg_left_n, neg_left_n));
        if j < ends.len() {
            for &(_, y, w) in &column[start..ends[j]] {
                match y {
                    Label::Positive => pos_left += w,
                    Label::Negative => {
                        neg_left += w;
                        neg_left_n += 1;
                    }
                }
            }
            start = ends[j];
        }
    }
    FeatureSweep {
        feature,
        thresholds,
        errors,
        negative_mistakes,
    }
}

fn search(sample: &WeightedInstanceSample, one_sided: bool) -> Result<OracleReport> {
    let total = sample.total_weight();
    if total.is_nan() || total <= 0.0 {
        return Err(MilError::ZeroWeight);
    }
    let mut totals = Totals {
        pos_w: 0.0,
        neg_w: 0.0,
        neg_n: 0,
    };
    for it in sample.items.iter().filter(|it| it.w > 0.0) {
        match it.y {
            Label::Positive => totals.pos_w += it.w,
            Label::Negative => {
                totals.neg_w += it.w;
                totals.neg_n += 1;
            }
        }
    }

    let features: Vec<usize> = (0..sample.dimension).collect();
    let sweeps: Vec<FeatureSweep> = if sample.items.len() * sample.dimension >= PARALLEL_WORK {
        features
            .par_iter()
            .map(|&f| sweep_feature(f, sample, totals))
            .collect()
    } else {
        features
            .iter()
            .map(|&f| sweep_feature(f, sample, totals))
            .collect()
    };

    // Candidates in tie-breaking order, with their (unnormalized) error.
    let mut candidates: Vec<(InstanceHypothesis, f64)> = Vec::new();
    if !one_sided || totals.neg_n == 0 {
        candidates.push((InstanceHypothesis::constant(Label::Positive), totals.neg_w));
    }
    candidates.push((InstanceHypothesis::constant(Label::Negative), totals.pos_w));
    for sw in &sweeps {
        for (j, &t) in sw.thresholds.iter().enumerate() {
            let (e_plus, e_minus) = sw.errors[j];
            let (n_plus, n_minus) = sw.negative_mistakes[j];
            if !one_sided || n_plus == 0 {
                candidates.push((
                    InstanceHypothesis::stump(sw.feature, t, Label::Positive),
                    e_plus,
                ));
            }
            if !one_sided || n_minus == 0 {
                candidates.push((
                    InstanceHypothesis::stump(sw.feature, t, Label::Negative),
                    e_minus,
                ));
            }
        }
    }

    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let slack = TIE_TOLERANCE * total;
    let (hypothesis, _) = candidates
        .into_iter()
        .find(|c| c.1 <= best + slack)
        .expect("Constant(-1) is always a candidate");
    let weighted_error = sample.weighted_error(&hypothesis)?;
    Ok(OracleReport {
        hypothesis,
        weighted_error,
    })
}
