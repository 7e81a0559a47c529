//! Seeded synthetic MIL data.
//!
//! Bags are labelled by pooling a target instance hypothesis with `max` (a bag
//! is positive iff some instance is), then each bag label is flipped
//! independently with probability `noise`. The regime controls how instances
//! inside a bag relate to each other:
//!
//! * `homogeneous_independent`: every instance i.i.d. `N(0, I)`.
//! * `homogeneous_dependent`: a per-bag center `c ~ N(0, 0.75 I)` shared by the
//!   bag's instances, each `c + N(0, 0.25 I)`. Marginals match the independent
//!   regime; instances within a bag are correlated.
//! * `heterogeneous_dependent`: a per-bag center `c ~ N(0, I)` and per-bag scale
//!   `s ~ U(0.2, 1.0)`, instances `c + s N(0, I)`.
//!
//! The requested positive rate is met exactly (`round(rate * num_bags)` clean
//! positives) by rejection: bags are redrawn until their clean label matches
//! the slot, with a budget of `100 * num_bags` draws overall.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Bag, Instance, Label, MilDataset};
use crate::error::{MilError, Result};
use crate::hypothesis::InstanceHypothesis;
use crate::rng;

const DEPENDENT_CENTER_VAR: f64 = 0.75;
const HETERO_SCALE: (f64, f64) = (0.2, 1.0);
const DRAWS_PER_BAG: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    HomogeneousIndependent,
    HomogeneousDependent,
    HeterogeneousDependent,
}

impl FromStr for Regime {
    type Err = MilError;

    fn from_str(s: &str) -> Result<Regime> {
        match s {
            "homogeneous_independent" => Ok(Regime::HomogeneousIndependent),
            "homogeneous_dependent" => Ok(Regime::HomogeneousDependent),
            "heterogeneous_dependent" => Ok(Regime::HeterogeneousDependent),
            _ => Err(MilError::invalid(format!(
                "unknown regime {s:?} (expected homogeneous_independent, homogeneous_dependent or heterogeneous_dependent)"
            ))),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::HomogeneousIndependent => "homogeneous_independent",
            Regime::HomogeneousDependent => "homogeneous_dependent",
            Regime::HeterogeneousDependent => "heterogeneous_dependent",
        })
    }
}

/// How many instances each bag gets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BagSizes {
    /// Every bag has exactly `max_bag_size` instances.
    #[default]
    Fixed,
    /// Sizes drawn uniformly from `1..=max_bag_size`.
    Uniform,
}

impl FromStr for BagSizes {
    type Err = MilError;

    fn from_str(s: &str) -> Result<BagSizes> {
        match s {
            "fixed" => Ok(BagSizes::Fixed),
            "uniform" => Ok(BagSizes::Uniform),
            _ => Err(MilError::invalid(format!(
                "unknown bag size mode {s:?} (expected fixed or uniform)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub dimension: usize,
    pub max_bag_size: usize,
    pub num_bags: usize,
    pub positive_rate: f64,
    pub target: InstanceHypothesis,
    pub noise: f64,
    pub seed: u64,
    pub bag_sizes: BagSizes,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_bags == 0 {
            return Err(MilError::invalid("num_bags must be positive"));
        }
        if self.dimension == 0 {
            return Err(MilError::invalid("dimension must be positive"));
        }
        if self.max_bag_size == 0 {
            return Err(MilError::invalid("max_bag_size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.positive_rate) {
            return Err(MilError::invalid("positive_rate must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(MilError::invalid("noise must lie in [0, 1)"));
        }
        if let InstanceHypothesis::Stump { threshold, .. } = self.target {
            if !threshold.is_finite() {
                return Err(MilError::NonFinite("target threshold".into()));
            }
        }
        self.target.check_dimension(self.dimension)
    }
}

struct BagSampler<'a> {
    regime: Regime,
    spec: &'a SynthSpec,
}

impl BagSampler<'_> {
    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<Instance> {
        let d = self.spec.dimension;
        let size = match self.spec.bag_sizes {
            BagSizes::Fixed => self.spec.max_bag_size,
            BagSizes::Uniform => rng.random_range(1..=self.spec.max_bag_size),
        };
        let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let (center, spread) = match self.regime {
            Regime::HomogeneousIndependent => (vec![0.0; d], 1.0),
            Regime::HomogeneousDependent => (
                (0..d)
                    .map(|_| DEPENDENT_CENTER_VAR.sqrt() * gauss(rng))
                    .collect(),
                (1.0 - DEPENDENT_CENTER_VAR).sqrt(),
            ),
            Regime::HeterogeneousDependent => {
                let center = (0..d).map(|_| gauss(rng)).collect();
                (center, rng.random_range(HETERO_SCALE.0..HETERO_SCALE.1))
            }
        };
        (0..size)
            .map(|_| {
                let x = center.iter().map(|c| c + spread * gauss(rng)).collect();
                Instance::new(x).expect("gaussian draws are finite")
            })
            .collect()
    }
}

/// Clean bag label: `max` over the target's instance labels.
fn pooled_label(target: &InstanceHypothesis, instances: &[Instance]) -> Label {
    if instances
        .iter()
        .any(|x| target.label_of(x.features()).is_positive())
    {
        Label::Positive
    } else {
        Label::Negative
    }
}

pub fn generate_synthetic(regime: Regime, spec: &SynthSpec) -> Result<MilDataset> {
    spec.validate()?;
    let m = spec.num_bags;
    let n_pos = (spec.positive_rate * m as f64).round() as usize;
    let mut wanted: Vec<Label> = (0..m)
        .map(|i| {
            if i < n_pos {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    wanted.shuffle(&mut rng::stream(spec.seed, "synth/labels"));

    let mut inst_rng = rng::stream(spec.seed, "synth/instances");
    let mut noise_rng = rng::stream(spec.seed, "synth/noise");
    let sampler = BagSampler { regime, spec };
    let budget = DRAWS_PER_BAG * m;
    let mut draws = 0usize;
    let width = m.to_string().len();

    let mut bags = Vec::with_capacity(m);
    for (i, want) in wanted.into_iter().enumerate() {
        let instances = loop {
            if draws == budget {
                return Err(MilError::RateUnreachable);
            }
            draws += 1;
            let instances = sampler.draw(&mut inst_rng);
            if pooled_label(&spec.target, &instances) == want {
                break instances;
            }
        };
        let flip = noise_rng.random::<f64>() < spec.noise;
        let label = if flip { want.flipped() } else { want };
        bags.push(Bag::new(format!("bag{i:0width$}"), instances, label)?);
    }
    MilDataset::new(spec.dimension, spec.max_bag_size, bags)
}
