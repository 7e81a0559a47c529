//! Multiple-instance learning by boosting bag hypotheses.
//!
//! The pipeline runs bottom-up:
//!
//! * [`data`] holds bags, instances, bag-combining functions and weight
//!   distributions over bags; [`io`] and [`synth`] load and generate datasets.
//! * [`hypothesis`] defines instance hypotheses (threshold stumps, constants)
//!   and the bag hypotheses obtained by pooling them.
//! * [`oracle`] is an exact weighted ERM over stumps, in agnostic and
//!   one-sided flavours.
//! * [`milearn`] lifts a bag distribution to an instance sample, queries the
//!   oracle and returns the best of the pooled hypothesis and the two bag
//!   constants, measured by edge.
//! * [`boost`] runs AdaBoost and AdaBoost* on top of the weak learner.
//! * [`complexity`] measures VC, covering and fat-shattering quantities of
//!   finite instance and bag classes by exhaustive search.
//! * [`cli`] wires everything into the `milboost` binary.

pub mod boost;
pub mod cli;
pub mod complexity;
pub mod data;
pub mod error;
pub mod hypothesis;
pub mod io;
pub mod milearn;
pub mod oracle;
pub mod rng;
pub mod synth;

pub use boost::{
    adaboost, adaboost_star, BoostConfig, BoostTrace, Ensemble, RoundRecord, WeakLearner,
};
pub use data::{
    apply_bag_function, Bag, BagDistribution, BagFunction, Instance, Label, MilDataset,
};
pub use error::{MilError, Result};
pub use hypothesis::{enumerate_stumps, BagHypothesis, InstanceHypothesis};
pub use milearn::{milearn, LiftMode, MilearnConfig, WeakLearnerOutput};
pub use oracle::{erm_one_sided, erm_stumps, OracleKind, OracleReport, WeightedInstanceSample};
