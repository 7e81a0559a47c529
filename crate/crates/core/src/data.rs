//! Bags, instances and the functions that pool instance outputs into a bag
//! output.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MilError, Result};

/// Tolerance on the total mass of a [`BagDistribution`].
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// A binary label, serialized as the integer `-1` or `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// Sign of a real score, with `sign(0) = +1`.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl TryFrom<i64> for Label {
    type Error = MilError;

    fn try_from(v: i64) -> Result<Label> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(MilError::InvalidLabel(other)),
        }
    }
}

impl From<Label> for i64 {
    fn from(l: Label) -> i64 {
        match l {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", i64::from(*self))
    }
}

/// A finite real feature vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Instance(Vec<f64>);

impl Instance {
    pub fn new(features: Vec<f64>) -> Result<Instance> {
        if features.iter().any(|v| !v.is_finite()) {
            return Err(MilError::NonFinite("instance features".into()));
        }
        Ok(Instance(features))
    }

    pub fn features(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }
}

impl std::ops::Index<usize> for Instance {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A labelled bag of instances. Order of `instances` is kept for
/// reproducibility only; nothing downstream depends on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Bag {
    pub id: String,
    pub instances: Vec<Instance>,
    pub label: Label,
}

impl Bag {
    pub fn new(id: impl Into<String>, instances: Vec<Instance>, label: Label) -> Result<Bag> {
        let id = id.into();
        let Some(first) = instances.first() else {
            return Err(MilError::EmptyBag);
        };
        let dim = first.dimension();
        if let Some(bad) = instances.iter().find(|x| x.dimension() != dim) {
            return Err(MilError::DimensionMismatch {
                bag_id: id,
                expected: dim,
                found: bad.dimension(),
            });
        }
        Ok(Bag {
            id,
            instances,
            label,
        })
    }

    /// Convenience constructor from raw rows.
    pub fn from_rows(id: impl Into<String>, rows: Vec<Vec<f64>>, label: Label) -> Result<Bag> {
        let instances = rows
            .into_iter()
            .map(Instance::new)
            .collect::<Result<Vec<_>>>()?;
        Bag::new(id, instances, label)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Dimension of the first instance, `None` for an empty bag.
    pub fn dimension(&self) -> Option<usize> {
        self.instances.first().map(Instance::dimension)
    }
}

/// A validated collection of bags sharing one dimension and a max bag size.
#[derive(Clone, Debug, PartialEq)]
pub struct MilDataset {
    dimension: usize,
    max_bag_size: usize,
    bags: Vec<Bag>,
}

impl MilDataset {
    pub fn new(dimension: usize, max_bag_size: usize, bags: Vec<Bag>) -> Result<MilDataset> {
        if dimension == 0 {
            return Err(MilError::invalid("dimension must be positive"));
        }
        if max_bag_size == 0 {
            return Err(MilError::invalid("max bag size must be positive"));
        }
        if bags.is_empty() {
            return Err(MilError::NoBags);
        }
        let mut seen = HashSet::with_capacity(bags.len());
        for bag in &bags {
            if bag.is_empty() {
                return Err(MilError::EmptyBag);
            }
            if bag.len() > max_bag_size {
                return Err(MilError::BagTooLarge {
                    bag_id: bag.id.clone(),
                    size: bag.len(),
                    max: max_bag_size,
                });
            }
            if let Some(x) = bag.instances.iter().find(|x| x.dimension() != dimension) {
                return Err(MilError::DimensionMismatch {
                    bag_id: bag.id.clone(),
                    expected: dimension,
                    found: x.dimension(),
                });
            }
            if !seen.insert(bag.id.as_str()) {
                return Err(MilError::DuplicateBagId(bag.id.clone()));
            }
        }
        Ok(MilDataset {
            dimension,
            max_bag_size,
            bags,
        })
    }

    /// Builds a dataset whose dimension comes from the first bag and whose
    /// max bag size is the largest bag present.
    pub fn from_bags(bags: Vec<Bag>) -> Result<MilDataset> {
        let first = bags.first().ok_or(MilError::NoBags)?;
        let dimension = first.dimension().ok_or(MilError::EmptyBag)?;
        let max_bag_size = bags.iter().map(Bag::len).max().unwrap_or(1);
        MilDataset::new(dimension, max_bag_size, bags)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn max_bag_size(&self) -> usize {
        self.max_bag_size
    }

    pub fn bags(&self) -> &[Bag] {
        &self.bags
    }

    pub fn into_bags(self) -> Vec<Bag> {
        self.bags
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.bags.iter().flat_map(|b| b.instances.iter())
    }
}

/// Pools per-instance outputs in `[-1, 1]` into one bag output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BagFunctionRepr", into = "BagFunctionRepr")]
pub enum BagFunction {
    #[default]
    Max,
    Avg,
    /// Power mean of the shifted values `v + 1`, shifted back by one.
    /// `p = 1` is `Avg`; `p -> inf` approaches `Max`.
    PNorm(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BagFunctionRepr {
    Max,
    Avg,
    Pnorm(f64),
}

impl TryFrom<BagFunctionRepr> for BagFunction {
    type Error = MilError;

    fn try_from(r: BagFunctionRepr) -> Result<BagFunction> {
        match r {
            BagFunctionRepr::Max => Ok(BagFunction::Max),
            BagFunctionRepr::Avg => Ok(BagFunction::Avg),
            BagFunctionRepr::Pnorm(p) => BagFunction::pnorm(p),
        }
    }
}

impl From<BagFunction> for BagFunctionRepr {
    fn from(f: BagFunction) -> BagFunctionRepr {
        match f {
            BagFunction::Max => BagFunctionRepr::Max,
            BagFunction::Avg => BagFunctionRepr::Avg,
            BagFunction::PNorm(p) => BagFunctionRepr::Pnorm(p),
        }
    }
}

impl BagFunction {
    pub fn pnorm(p: f64) -> Result<BagFunction> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(MilError::invalid(format!(
                "pnorm exponent must be finite and >= 1, got {p}"
            )));
        }
        Ok(BagFunction::PNorm(p))
    }

    pub fn apply(&self, values: &[f64]) -> Result<f64> {
        if values.is_empty() {
            return Err(MilError::EmptyBag);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MilError::NonFinite("bag function input".into()));
        }
        Ok(match *self {
            BagFunction::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            BagFunction::Avg => values.iter().sum::<f64>() / values.len() as f64,
            BagFunction::PNorm(p) => power_mean_shifted(values, p),
        })
    }
}

fn power_mean_shifted(values: &[f64], p: f64) -> f64 {
    // Scale by the largest shifted value so that large p cannot overflow.
    let shifted: Vec<f64> = values.iter().map(|v| (v + 1.0).abs()).collect();
    let top = shifted.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return -1.0;
    }
    let mean = shifted.iter().map(|s| (s / top).powf(p)).sum::<f64>() / values.len() as f64;
    (top * mean.powf(1.0 / p) - 1.0).clamp(-1.0, 1.0)
}

impl fmt::Display for BagFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BagFunction::Max => write!(f, "max"),
            BagFunction::Avg => write!(f, "avg"),
            BagFunction::PNorm(p) => write!(f, "pnorm:{p}"),
        }
    }
}

impl FromStr for BagFunction {
    type Err = MilError;

    /// Accepts `max`, `avg` and `pnorm:<p>`.
    fn from_str(s: &str) -> Result<BagFunction> {
        match s {
            "max" => Ok(BagFunction::Max),
            "avg" => Ok(BagFunction::Avg),
            _ => match s.strip_prefix("pnorm:") {
                Some(p) => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| MilError::invalid(format!("bad pnorm exponent in {s:?}")))?;
                    BagFunction::pnorm(p)
                }
                None => Err(MilError::invalid(format!(
                    "unknown bag function {s:?} (expected max, avg or pnorm:<p>)"
                ))),
            },
        }
    }
}

/// Pools `values` with `psi`. Errors with "empty bag" on an empty slice.
pub fn apply_bag_function(psi: BagFunction, values: &[f64]) -> Result<f64> {
    psi.apply(values)
}

/// Non-negative weights over bags in a fixed sample order, summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct BagDistribution {
    weights: Vec<f64>,
}

impl BagDistribution {
    pub fn new(weights: Vec<f64>) -> Result<BagDistribution> {
        if weights.is_empty() {
            return Err(MilError::InvalidDistribution("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(MilError::InvalidDistribution(format!(
                "weight {w} is not a finite non-negative number"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(MilError::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(BagDistribution { weights })
    }

    pub fn uniform(m: usize) -> Result<BagDistribution> {
        if m == 0 {
            return Err(MilError::NoBags);
        }
        Ok(BagDistribution {
            weights: vec![1.0 / m as f64; m],
        })
    }

    /// Normalizes arbitrary non-negative weights with positive total.
    pub fn normalized(weights: Vec<f64>) -> Result<BagDistribution> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MilError::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(MilError::ZeroWeight);
        }
        BagDistribution::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn max_avg_examples() {
        assert_eq!(
            apply_bag_function(BagFunction::Max, &[-1.0, 0.5, -0.2]).unwrap(),
            0.5
        );
        assert_eq!(apply_bag_function(BagFunction::Max, &[0.3]).unwrap(), 0.3);
        assert_eq!(
            apply_bag_function(BagFunction::Avg, &[-1.0, 1.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn empty_values_rejected() {
        for psi in [BagFunction::Max, BagFunction::Avg, BagFunction::PNorm(2.0)] {
            let err = apply_bag_function(psi, &[]).unwrap_err();
            assert_eq!(err.to_string(), "empty bag");
        }
    }

    #[test]
    fn pnorm_one_is_avg_and_large_p_approaches_max() {
        let v = [-1.0, 0.2, 0.6, -0.4];
        let avg = BagFunction::Avg.apply(&v).unwrap();
        let p1 = BagFunction::PNorm(1.0).apply(&v).unwrap();
        assert!((avg - p1).abs() < 1e-12);
        let p_big = BagFunction::PNorm(1e5).apply(&v).unwrap();
        assert!((p_big - 0.6).abs() < 1e-3);
        assert_eq!(BagFunction::PNorm(3.0).apply(&[-1.0, -1.0]).unwrap(), -1.0);
    }

    #[test]
    fn bag_function_parsing_and_json() {
        assert_eq!("max".parse::<BagFunction>().unwrap(), BagFunction::Max);
        assert_eq!(
            "pnorm:2.5".parse::<BagFunction>().unwrap(),
            BagFunction::PNorm(2.5)
        );
        assert!("pnorm:0.5".parse::<BagFunction>().is_err());
        assert!("median".parse::<BagFunction>().is_err());
        assert_eq!(serde_json::to_string(&BagFunction::Avg).unwrap(), "\"avg\"");
        assert_eq!(
            serde_json::to_string(&BagFunction::PNorm(3.0)).unwrap(),
            "{\"pnorm\":3.0}"
        );
        let back: BagFunction = serde_json::from_str("{\"pnorm\":4}").unwrap();
        assert_eq!(back, BagFunction::PNorm(4.0));
        assert!(serde_json::from_str::<BagFunction>("{\"pnorm\":0.2}").is_err());
    }

    #[test]
    fn label_conversion() {
        assert_eq!(Label::try_from(1).unwrap(), Label::Positive);
        assert_eq!(Label::try_from(-1).unwrap(), Label::Negative);
        assert!(matches!(Label::try_from(0), Err(MilError::InvalidLabel(0))));
        assert_eq!(Label::from_score(0.0), Label::Positive);
        assert_eq!(serde_json::to_string(&Label::Negative).unwrap(), "-1");
    }

    #[test]
    fn dataset_invariants() {
        let b = |id: &str, rows: Vec<Vec<f64>>| Bag::from_rows(id, rows, Label::Positive).unwrap();
        assert!(matches!(
            MilDataset::new(2, 2, vec![]),
            Err(MilError::NoBags)
        ));
        let dup = MilDataset::new(1, 2, vec![b("a", vec![vec![0.0]]), b("a", vec![vec![1.0]])]);
        assert!(matches!(dup, Err(MilError::DuplicateBagId(_))));
        let big = MilDataset::new(1, 1, vec![b("a", vec![vec![0.0], vec![1.0]])]);
        assert!(matches!(big, Err(MilError::BagTooLarge { .. })));
        let dim = MilDataset::new(2, 2, vec![b("a", vec![vec![0.0]])]);
        assert!(matches!(dim, Err(MilError::DimensionMismatch { .. })));
        assert!(Bag::from_rows("x", vec![vec![0.0], vec![0.0, 1.0]], Label::Negative).is_err());
        assert!(Instance::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(BagDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(BagDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(BagDistribution::new(vec![1.5, -0.5]).is_err());
        let d = BagDistribution::normalized(vec![2.0, 6.0]).unwrap();
        assert_eq!(d.weights(), &[0.25, 0.75]);
        assert!(matches!(
            BagDistribution::normalized(vec![0.0, 0.0]),
            Err(MilError::ZeroWeight)
        ));
    }

    fn psi_strategy() -> impl Strategy<Value = BagFunction> {
        prop_oneof![
            Just(BagFunction::Max),
            Just(BagFunction::Avg),
            (1.0f64..8.0).prop_map(BagFunction::PNorm),
        ]
    }

    proptest! {
        #[test]
        fn max_is_monotone(pairs in prop::collection::vec((-1.0f64..1.0, 0.0f64..1.0), 1..10)) {
            let ws: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let vs: Vec<f64> = pairs.iter().map(|p| (p.0 + p.1).min(1.0)).collect();
            prop_assert!(BagFunction::Max.apply(&vs).unwrap() >= BagFunction::Max.apply(&ws).unwrap());
        }

        #[test]
        fn pooling_is_permutation_invariant_and_in_range(
            psi in psi_strategy(),
            values in prop::collection::vec(-1.0f64..=1.0, 1..12),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let mut shuffled = values.clone();
            shuffled.shuffle(&mut crate::rng::stream(seed, "test"));
            let a = psi.apply(&values).unwrap();
            let b = psi.apply(&shuffled).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
        }

        #[test]
        fn singleton_pooling_is_identity(psi in psi_strategy(), v in -1.0f64..=1.0) {
            prop_assert!((psi.apply(&[v]).unwrap() - v).abs() <= 1e-12);
        }

        #[test]
        fn all_kinds_are_monotone(
            psi in psi_strategy(),
            pairs in prop::collection::vec((-1.0f64..1.0, 0.0f64..1.0), 1..10),
        ) {
            let ws: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let vs: Vec<f64> = pairs.iter().map(|p| (p.0 + p.1).min(1.0)).collect();
            prop_assert!(psi.apply(&vs).unwrap() >= psi.apply(&ws).unwrap() - 1e-12);
        }
    }
}
