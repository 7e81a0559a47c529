//! Instance hypotheses and the bag hypotheses built by pooling them.

use serde::{Deserialize, Serialize};

use crate::data::{Bag, BagFunction, Instance, Label, MilDataset};
use crate::error::{MilError, Result};

/// A binary-output instance classifier.
///
/// A stump outputs `polarity` when `x[feature] > threshold` and `-polarity`
/// otherwise, so a point sitting exactly on the threshold is on the negative side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InstanceHypothesis {
    #[serde(rename = "stump")]
    Stump {
        feature: usize,
        threshold: f64,
        polarity: Label,
    },
    #[serde(rename = "const")]
    Constant { value: Label },
}

impl InstanceHypothesis {
    pub fn stump(feature: usize, threshold: f64, polarity: Label) -> Self {
        InstanceHypothesis::Stump {
            feature,
            threshold,
            polarity,
        }
    }

    pub fn constant(value: Label) -> Self {
        InstanceHypothesis::Constant { value }
    }

    /// Label on raw features. Panics if `feature` is out of range.
    #[inline]
    pub fn label_of(&self, x: &[f64]) -> Label {
        match *self {
            InstanceHypothesis::Stump {
                feature,
                threshold,
                polarity,
            } => {
                if x[feature] > threshold {
                    polarity
                } else {
                    polarity.flipped()
                }
            }
            InstanceHypothesis::Constant { value } => value,
        }
    }

    /// Feature index read by a stump.
    pub fn feature(&self) -> Option<usize> {
        match *self {
            InstanceHypothesis::Stump { feature, .. } => Some(feature),
            InstanceHypothesis::Constant { .. } => None,
        }
    }

    pub fn check_dimension(&self, dimension: usize) -> Result<()> {
        match self.feature() {
            Some(index) if index >= dimension => {
                Err(MilError::FeatureOutOfRange { index, dimension })
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, x: &Instance) -> Result<f64> {
        self.check_dimension(x.dimension())?;
        Ok(self.label_of(x.features()).sign())
    }
}

pub fn evaluate_instance(h: &InstanceHypothesis, x: &Instance) -> Result<f64> {
    h.evaluate(x)
}

/// A hypothesis on bags: either `psi` pooled over an instance hypothesis, or a
/// constant that ignores the bag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BagHypothesisRepr", into = "BagHypothesisRepr")]
pub enum BagHypothesis {
    Composed {
        psi: BagFunction,
        h: InstanceHypothesis,
    },
    BagConstant {
        value: Label,
    },
}

/// Flat JSON form: the instance hypothesis fields plus `psi`, or `bag_const`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum BagHypothesisRepr {
    #[serde(rename = "stump")]
    Stump {
        feature: usize,
        threshold: f64,
        polarity: Label,
        psi: BagFunction,
    },
    #[serde(rename = "const")]
    Const { value: Label, psi: BagFunction },
    #[serde(rename = "bag_const")]
    BagConst { value: Label },
}

impl From<BagHypothesis> for BagHypothesisRepr {
    fn from(hb: BagHypothesis) -> Self {
        match hb {
            BagHypothesis::Composed {
                psi,
                h:
                    InstanceHypothesis::Stump {
                        feature,
                        threshold,
                        polarity,
                    },
            } => BagHypothesisRepr::Stump {
                feature,
                threshold,
                polarity,
                psi,
            },
            BagHypothesis::Composed {
                psi,
                h: InstanceHypothesis::Constant { value },
            } => BagHypothesisRepr::Const { value, psi },
            BagHypothesis::BagConstant { value } => BagHypothesisRepr::BagConst { value },
        }
    }
}

impl TryFrom<BagHypothesisRepr> for BagHypothesis {
    type Error = MilError;

    fn try_from(r: BagHypothesisRepr) -> Result<Self> {
        Ok(match r {
            BagHypothesisRepr::Stump {
                feature,
                threshold,
                polarity,
                psi,
            } => {
                if !threshold.is_finite() {
                    return Err(MilError::NonFinite("stump threshold".into()));
                }
                BagHypothesis::Composed {
                    psi,
                    h: InstanceHypothesis::stump(feature, threshold, polarity),
                }
            }
            BagHypothesisRepr::Const { value, psi } => BagHypothesis::Composed {
                psi,
                h: InstanceHypothesis::constant(value),
            },
            BagHypothesisRepr::BagConst { value } => BagHypothesis::BagConstant { value },
        })
    }
}

impl BagHypothesis {
    pub fn composed(psi: BagFunction, h: InstanceHypothesis) -> Self {
        BagHypothesis::Composed { psi, h }
    }

    pub fn constant(value: Label) -> Self {
        BagHypothesis::BagConstant { value }
    }

    pub fn check_dimension(&self, dimension: usize) -> Result<()> {
        match self {
            BagHypothesis::Composed { h, .. } => h.check_dimension(dimension),
            BagHypothesis::BagConstant { .. } => Ok(()),
        }
    }

    pub fn evaluate(&self, bag: &Bag) -> Result<f64> {
        if bag.is_empty() {
            return Err(MilError::EmptyBag);
        }
        match self {
            BagHypothesis::BagConstant { value } => Ok(value.sign()),
            BagHypothesis::Composed { psi, h } => {
                h.check_dimension(bag.instances[0].dimension())?;
                match psi {
                    // OR rule, short-circuits on the first positive instance.
                    BagFunction::Max => {
                        let any = bag
                            .instances
                            .iter()
                            .any(|x| h.label_of(x.features()).is_positive());
                        Ok(if any { 1.0 } else { -1.0 })
                    }
                    _ => {
                        let outputs: Vec<f64> = bag
                            .instances
                            .iter()
                            .map(|x| h.label_of(x.features()).sign())
                            .collect();
                        psi.apply(&outputs)
                    }
                }
            }
        }
    }
}

pub fn evaluate_bag(hb: &BagHypothesis, bag: &Bag) -> Result<f64> {
    hb.evaluate(bag)
}

/// A threshold strictly below `v`.
pub(crate) fn below(v: f64) -> f64 {
    let t = v - 0.5;
    if t < v {
        t
    } else {
        v.next_down()
    }
}

/// A threshold at or above `v`.
pub(crate) fn above(v: f64) -> f64 {
    let t = v + 0.5;
    if t.is_finite() {
        t
    } else {
        v
    }
}

/// A threshold `t` with `lo <= t < hi`, at the midpoint when representable.
pub(crate) fn split_between(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= lo && mid < hi {
        mid
    } else {
        lo
    }
}

/// Candidate thresholds for ascending distinct values `v_1 < ... < v_k`:
/// one below `v_1`, the midpoints, and one above `v_k` (`k + 1` in total).
/// Threshold `j` puts exactly `v_1..=v_j` on the non-positive side.
pub(crate) fn thresholds_for_sorted(distinct: &[f64]) -> Vec<f64> {
    let Some((&first, rest)) = distinct.split_first() else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(distinct.len() + 1);
    out.push(below(first));
    let mut prev = first;
    for &v in rest {
        out.push(split_between(prev, v));
        prev = v;
    }
    out.push(above(prev));
    out
}

pub(crate) fn sorted_distinct(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

/// Every stump that induces a distinct split of the given points, ordered by
/// feature, then threshold, then polarity `+1` before `-1`.
pub fn enumerate_stumps_over<'a>(
    dimension: usize,
    points: impl IntoIterator<Item = &'a [f64]>,
) -> Vec<InstanceHypothesis> {
    let mut per_feature: Vec<Vec<f64>> = vec![Vec::new(); dimension];
    for p in points {
        for (f, col) in per_feature.iter_mut().enumerate() {
            col.push(p[f]);
        }
    }
    let mut out = Vec::new();
    for (feature, col) in per_feature.into_iter().enumerate() {
        for t in thresholds_for_sorted(&sorted_distinct(col)) {
            out.push(InstanceHypothesis::stump(feature, t, Label::Positive));
            out.push(InstanceHypothesis::stump(feature, t, Label::Negative));
        }
    }
    out
}

/// Stumps realizing every labeling a stump can induce on the dataset's
/// instances: `2 * sum_f (distinct values of f + 1)` of them.
pub fn enumerate_stumps(dataset: &MilDataset) -> Vec<InstanceHypothesis> {
    enumerate_stumps_over(
        dataset.dimension(),
        dataset.instances().map(Instance::features),
    )
}
