//! The MIL weak learner.
//!
//! A bag distribution is lifted to a weighted instance sample in which every
//! instance carries its bag's label, the instance oracle is queried on it, and
//! the learner returns whichever of `psi ∘ h`, the positive bag constant and
//! the negative bag constant has the largest edge. Since the two constants
//! have opposite edges, the returned edge is never negative.

use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::{Bag, BagDistribution, BagFunction, Label};
use crate::error::{MilError, Result};
use crate::hypothesis::{enumerate_stumps_over, BagHypothesis, InstanceHypothesis};
use crate::oracle::{OracleKind, WeightedInstanceSample, WeightedItem};

/// How bag mass is spread over a bag's instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftMode {
    /// Each instance of bag `i` gets `D_i / r_i`; the total stays one.
    #[default]
    PerInstance,
    /// Each instance of bag `i` gets `D_i`.
    PerBag,
}

impl FromStr for LiftMode {
    type Err = MilError;

    fn from_str(s: &str) -> Result<LiftMode> {
        match s {
            "per_instance" => Ok(LiftMode::PerInstance),
            "per_bag" => Ok(LiftMode::PerBag),
            _ => Err(MilError::invalid(format!(
                "unknown lift mode {s:?} (expected per_instance or per_bag)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct MilearnConfig {
    pub psi: BagFunction,
    pub oracle: OracleKind,
    pub mode: LiftMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CandidateEdges {
    pub composed: f64,
    pub h_pos: f64,
    pub h_neg: f64,
}

impl CandidateEdges {
    pub fn max(&self) -> f64 {
        self.composed.max(self.h_pos).max(self.h_neg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakLearnerOutput {
    pub hypothesis: BagHypothesis,
    pub edge: f64,
    pub candidate_edges: CandidateEdges,
}

fn check_lengths(bags: &[Bag], dist: &BagDistribution) -> Result<()> {
    if bags.len() != dist.len() {
        return Err(MilError::LengthMismatch {
            bags: bags.len(),
            weights: dist.len(),
        });
    }
    Ok(())
}

/// `sum_i D_i y_i hb(bag_i)`, clamped into `[-1, 1]` against round-off.
pub fn edge(hb: &BagHypothesis, bags: &[Bag], dist: &BagDistribution) -> Result<f64> {
    check_lengths(bags, dist)?;
    let mut total = 0.0;
    for (bag, &w) in bags.iter().zip(dist.weights()) {
        total += w * bag.label.sign() * hb.evaluate(bag)?;
    }
    Ok(total.clamp(-1.0, 1.0))
}

/// Every instance of bag `i` becomes an item labelled `y_i`, in bag order then
/// within-bag order.
pub fn lift_distribution(
    bags: &[Bag],
    dist: &BagDistribution,
    mode: LiftMode,
) -> Result<WeightedInstanceSample> {
    check_lengths(bags, dist)?;
    let dimension = bags
        .first()
        .ok_or(MilError::NoBags)?
        .dimension()
        .ok_or(MilError::EmptyBag)?;
    let mut items = Vec::with_capacity(bags.iter().map(Bag::len).sum());
    for (bag, &d) in bags.iter().zip(dist.weights()) {
        if bag.is_empty() {
            return Err(MilError::EmptyBag);
        }
        let w = match mode {
            LiftMode::PerInstance => d / bag.len() as f64,
            LiftMode::PerBag => d,
        };
        items.extend(bag.instances.iter().map(|x| WeightedItem {
            x: x.clone(),
            y: bag.label,
            w,
        }));
    }
    WeightedInstanceSample::new(dimension, items)
}

/// The oracle's answer when every instance is presented with its bag's label.
pub fn learn_all_true(
    bags: &[Bag],
    dist: &BagDistribution,
    oracle: OracleKind,
    mode: LiftMode,
) -> Result<InstanceHypothesis> {
    let sample = lift_distribution(bags, dist, mode)?;
    Ok(oracle.run(&sample)?.hypothesis)
}

/// Best of `psi ∘ learn_all_true`, `+1` and `-1` by edge. Ties go to the
/// composed hypothesis, then the positive constant.
pub fn weak_learn_d(
    bags: &[Bag],
    dist: &BagDistribution,
    psi: BagFunction,
    oracle: OracleKind,
    mode: LiftMode,
) -> Result<WeakLearnerOutput> {
    if bags.is_empty() {
        return Err(MilError::NoBags);
    }
    let h = learn_all_true(bags, dist, oracle, mode)?;
    let composed = BagHypothesis::composed(psi, h);
    let h_pos = BagHypothesis::constant(Label::Positive);
    let h_neg = BagHypothesis::constant(Label::Negative);
    let candidate_edges = CandidateEdges {
        composed: edge(&composed, bags, dist)?,
        h_pos: edge(&h_pos, bags, dist)?,
        h_neg: edge(&h_neg, bags, dist)?,
    };
    let mut best = (composed, candidate_edges.composed);
    for cand in [
        (h_pos, candidate_edges.h_pos),
        (h_neg, candidate_edges.h_neg),
    ] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(WeakLearnerOutput {
        hypothesis: best.0,
        edge: best.1,
        candidate_edges,
    })
}

/// Entry point used by the boosters.
pub fn milearn(
    bags: &[Bag],
    dist: &BagDistribution,
    config: &MilearnConfig,
) -> Result<WeakLearnerOutput> {
    weak_learn_d(bags, dist, config.psi, config.oracle, config.mode)
}

/// The largest edge over every enumerated `psi ∘ stump` and
/// both bag constants, with the first maximizer in enumeration order.
pub fn best_bag_edge(
    bags: &[Bag],
    dist: &BagDistribution,
    psi: BagFunction,
) -> Result<(BagHypothesis, f64)> {
    let dimension = bags
        .first()
        .ok_or(MilError::NoBags)?
        .dimension()
        .ok_or(MilError::EmptyBag)?;
    let mut candidates = vec![
        BagHypothesis::constant(Label::Positive),
        BagHypothesis::constant(Label::Negative),
    ];
    let points = bags
        .iter()
        .flat_map(|b| b.instances.iter().map(|x| x.features()));
    candidates.extend(
        enumerate_stumps_over(dimension, points)
            .into_iter()
            .map(|h| BagHypothesis::composed(psi, h)),
    );
    let mut best: Option<(BagHypothesis, f64)> = None;
    for hb in candidates {
        let e = edge(&hb, bags, dist)?;
        if best.as_ref().is_none_or(|b| e > b.1) {
            best = Some((hb, e));
        }
    }
    Ok(best.expect("constants are always candidates"))
}

/// The largest instance-level edge `sum_j w_j y_j h(x_j)` over stumps and
/// constants on the lifted sample.
pub fn best_instance_edge(bags: &[Bag], dist: &BagDistribution, mode: LiftMode) -> Result<f64> {
    let sample = lift_distribution(bags, dist, mode)?;
    let total = sample.total_weight();
    let report = OracleKind::Agnostic.run(&sample)?;
    // For binary outputs, edge = total * (1 - 2 * error).
    Ok(total * (1.0 - 2.0 * report.weighted_error))
}

/// One observation of the weak-learner guarantee `edge >= gamma* / (2 r)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeCheck {
    pub edge: f64,
    pub gamma_star_bag: f64,
    pub gamma_star_instance: f64,
    pub max_bag_size: usize,
    pub threshold: f64,
    pub satisfied: bool,
}

/// Compares the learner's edge against `gamma* / (2 r)` with `gamma*` the
/// exhaustive best bag-level edge. Violations are logged, not returned as
/// errors: the constant is a monitoring threshold.
pub fn check_weak_learnability(
    bags: &[Bag],
    dist: &BagDistribution,
    config: &MilearnConfig,
    output: &WeakLearnerOutput,
) -> Result<EdgeCheck> {
    let r = bags.iter().map(Bag::len).max().ok_or(MilError::NoBags)?;
    let (_, gamma_star_bag) = best_bag_edge(bags, dist, config.psi)?;
    let gamma_star_instance = best_instance_edge(bags, dist, config.mode)?;
    let threshold = gamma_star_bag / (2.0 * r as f64);
    let satisfied = output.edge >= threshold - 1e-12;
    if !satisfied {
        warn!(
            "weak-learner edge {} below gamma*/(2r) = {} (gamma* = {}, r = {})",
            output.edge, threshold, gamma_star_bag, r
        );
    }
    Ok(EdgeCheck {
        edge: output.edge,
        gamma_star_bag,
        gamma_star_instance,
        max_bag_size: r,
        threshold,
        satisfied,
    })
}
