//! AdaBoost and AdaBoost* over bag hypotheses.
//!
//! Both boosters start from the uniform distribution over bags and apply the
//! multiplicative update `D_{t+1}(i) ∝ D_t(i) exp(-alpha_t y_i h_t(bag_i))`.
//! AdaBoost uses `alpha_t = atanh(gamma_t)`. AdaBoost* keeps a running target
//! margin `rho_t = min_{s<=t} gamma_s - nu` and uses
//! `alpha_t = atanh(gamma_t) - atanh(rho_t)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Bag, BagDistribution, BagFunction, Label};
use crate::error::{MilError, Result};
use crate::hypothesis::BagHypothesis;
use crate::milearn::{edge, milearn, MilearnConfig};

/// Edges are clamped into `[-1 + EDGE_CLAMP, 1 - EDGE_CLAMP]` before taking logs.
pub const EDGE_CLAMP: f64 = 1e-12;
/// An edge at or above `1 - PERFECT_EDGE` ends boosting.
pub const PERFECT_EDGE: f64 = 1e-9;

const PARALLEL_BAGS: usize = 512;

pub trait WeakLearner {
    fn propose(&self, bags: &[Bag], dist: &BagDistribution) -> Result<BagHypothesis>;
}

impl WeakLearner for MilearnConfig {
    fn propose(&self, bags: &[Bag], dist: &BagDistribution) -> Result<BagHypothesis> {
        Ok(milearn(bags, dist, self)?.hypothesis)
    }
}

impl<F> WeakLearner for F
where
    F: Fn(&[Bag], &BagDistribution) -> Result<BagHypothesis>,
{
    fn propose(&self, bags: &[Bag], dist: &BagDistribution) -> Result<BagHypothesis> {
        self(bags, dist)
    }
}

/// Exact weak learner over an explicit finite pool: returns the first
/// hypothesis of maximal edge.
#[derive(Clone, Debug)]
pub struct BestOf(pub Vec<BagHypothesis>);

impl WeakLearner for BestOf {
    fn propose(&self, bags: &[Bag], dist: &BagDistribution) -> Result<BagHypothesis> {
        let mut best: Option<(BagHypothesis, f64)> = None;
        for hb in &self.0 {
            let e = edge(hb, bags, dist)?;
            if best.as_ref().is_none_or(|b| e > b.1) {
                best = Some((*hb, e));
            }
        }
        best.map(|b| b.0)
            .ok_or_else(|| MilError::invalid("empty hypothesis pool"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub alpha: f64,
    pub hypothesis: BagHypothesis,
}

/// A weighted vote of bag hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct Ensemble {
    psi: BagFunction,
    terms: Vec<Term>,
}

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u64,
    psi: BagFunction,
    terms: Vec<Term>,
}

impl TryFrom<ModelFile> for Ensemble {
    type Error = MilError;

    fn try_from(f: ModelFile) -> Result<Ensemble> {
        if f.format_version != MODEL_FORMAT_VERSION {
            return Err(MilError::FormatVersion(f.format_version));
        }
        if f.terms.iter().any(|t| !t.alpha.is_finite()) {
            return Err(MilError::NonFinite("term alpha".into()));
        }
        Ok(Ensemble {
            psi: f.psi,
            terms: f.terms,
        })
    }
}

impl From<Ensemble> for ModelFile {
    fn from(e: Ensemble) -> ModelFile {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            psi: e.psi,
            terms: e.terms,
        }
    }
}

impl Ensemble {
    pub fn new(psi: BagFunction) -> Ensemble {
        Ensemble {
            psi,
            terms: Vec::new(),
        }
    }

    pub fn with_terms(psi: BagFunction, terms: Vec<Term>) -> Ensemble {
        Ensemble { psi, terms }
    }

    pub fn push(&mut self, alpha: f64, hypothesis: BagHypothesis) {
        self.terms.push(Term { alpha, hypothesis });
    }

    pub fn psi(&self) -> BagFunction {
        self.psi
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn check_dimension(&self, dimension: usize) -> Result<()> {
        self.terms
            .iter()
            .try_for_each(|t| t.hypothesis.check_dimension(dimension))
    }

    /// `sum_t |alpha_t|`.
    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.alpha.abs()).sum()
    }

    /// Raw vote `sum_t alpha_t h_t(bag)`.
    pub fn score(&self, bag: &Bag) -> Result<f64> {
        if self.terms.is_empty() {
            return Err(MilError::Untrained);
        }
        let mut s = 0.0;
        for t in &self.terms {
            s += t.alpha * t.hypothesis.evaluate(bag)?;
        }
        Ok(s)
    }

    /// Vote divided by `sum |alpha|`, in `[-1, 1]`; zero when every alpha is zero.
    pub fn normalized_score(&self, bag: &Bag) -> Result<f64> {
        let s = self.score(bag)?;
        let w = self.total_weight();
        Ok(if w > 0.0 {
            (s / w).clamp(-1.0, 1.0)
        } else {
            0.0
        })
    }

    pub fn predict(&self, bag: &Bag) -> Result<Label> {
        Ok(Label::from_score(self.score(bag)?))
    }

    pub fn margins(&self, bags: &[Bag]) -> Result<Vec<f64>> {
        bags.iter()
            .map(|b| Ok(b.label.sign() * self.normalized_score(b)?))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Ensemble> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn predict(ensemble: &Ensemble, bag: &Bag) -> Result<Label> {
    ensemble.predict(bag)
}

pub fn margins(ensemble: &Ensemble, bags: &[Bag]) -> Result<Vec<f64>> {
    ensemble.margins(bags)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoostConfig {
    pub rounds: usize,
    /// Bag function recorded on the ensemble.
    pub psi: BagFunction,
    /// Keep every round's distribution in the trace.
    pub record_distributions: bool,
}

impl BoostConfig {
    pub fn new(rounds: usize, psi: BagFunction) -> BoostConfig {
        BoostConfig {
            rounds,
            psi,
            record_distributions: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Ran the requested number of rounds.
    Completed,
    /// A hypothesis with edge `>= 1 - PERFECT_EDGE` was added.
    Perfect,
    /// The proposed edge fell to the stopping threshold (0, or `nu` for
    /// AdaBoost*); that round was not added.
    NoEdge,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub t: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub z: f64,
    pub rho: Option<f64>,
    /// Bag training error of the ensemble after this round.
    pub train_error: f64,
    /// Smallest normalized margin after this round.
    pub min_margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoostTrace {
    pub rounds: Vec<RoundRecord>,
    pub stop: StopReason,
    /// `distributions[t - 1]` is `D_t`, present when requested in the config.
    pub distributions: Vec<BagDistribution>,
}

impl BoostTrace {
    /// `prod_{s<=t} sqrt(1 - gamma_s^2)` for every round `t`.
    pub fn edge_bounds(&self) -> Vec<f64> {
        self.rounds
            .iter()
            .scan(1.0, |acc, r| {
                *acc *= (1.0 - r.gamma * r.gamma).max(0.0).sqrt();
                Some(*acc)
            })
            .collect()
    }

    /// `prod_{s<=t} Z_s` for every round `t`.
    pub fn z_products(&self) -> Vec<f64> {
        self.rounds
            .iter()
            .scan(1.0, |acc, r| {
                *acc *= r.z;
                Some(*acc)
            })
            .collect()
    }

    /// CSV with header `t,gamma,alpha,Z,rho,train_error,min_margin`; `rho` is
    /// empty for plain AdaBoost.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "t",
            "gamma",
            "alpha",
            "Z",
            "rho",
            "train_error",
            "min_margin",
        ])?;
        for r in &self.rounds {
            wtr.write_record([
                r.t.to_string(),
                format!("{:?}", r.gamma),
                format!("{:?}", r.alpha),
                format!("{:?}", r.z),
                r.rho.map(|v| format!("{v:?}")).unwrap_or_default(),
                format!("{:?}", r.train_error),
                format!("{:?}", r.min_margin),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn clamp_edge(g: f64) -> f64 {
    g.clamp(-1.0 + EDGE_CLAMP, 1.0 - EDGE_CLAMP)
}

/// `½ ln((1 + g) / (1 - g))` on the clamped edge.
pub fn half_log_odds(g: f64) -> f64 {
    let g = clamp_edge(g);
    0.5 * ((1.0 + g) / (1.0 - g)).ln()
}

fn evaluate_all(h: &BagHypothesis, bags: &[Bag]) -> Result<Vec<f64>> {
    if bags.len() >= PARALLEL_BAGS {
        bags.par_iter().map(|b| h.evaluate(b)).collect()
    } else {
        bags.iter().map(|b| h.evaluate(b)).collect()
    }
}

pub fn adaboost<W: WeakLearner + ?Sized>(
    bags: &[Bag],
    weak: &W,
    config: &BoostConfig,
) -> Result<(Ensemble, BoostTrace)> {
    run(bags, weak, config, None)
}

pub fn adaboost_star<W: WeakLearner + ?Sized>(
    bags: &[Bag],
    weak: &W,
    config: &BoostConfig,
    nu: f64,
) -> Result<(Ensemble, BoostTrace)> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(MilError::invalid(format!(
            "nu must lie in (0, 1), got {nu}"
        )));
    }
    run(bags, weak, config, Some(nu))
}

/// Boosts with the MIL weak learner configured by `learner`.
pub fn boost_milearn(
    bags: &[Bag],
    learner: &MilearnConfig,
    rounds: usize,
    nu: Option<f64>,
) -> Result<(Ensemble, BoostTrace)> {
    let config = BoostConfig::new(rounds, learner.psi);
    match nu {
        None => adaboost(bags, learner, &config),
        Some(nu) => adaboost_star(bags, learner, &config, nu),
    }
}

fn run<W: WeakLearner + ?Sized>(
    bags: &[Bag],
    weak: &W,
    config: &BoostConfig,
    nu: Option<f64>,
) -> Result<(Ensemble, BoostTrace)> {
    if config.rounds == 0 {
        return Err(MilError::invalid("rounds must be at least 1"));
    }
    if bags.is_empty() {
        return Err(MilError::NoBags);
    }
    let m = bags.len();
    let labels: Vec<f64> = bags.iter().map(|b| b.label.sign()).collect();
    let mut dist = BagDistribution::uniform(m)?;
    let mut ensemble = Ensemble::new(config.psi);
    let mut scores = vec![0.0; m];
    let mut alpha_mass = 0.0;
    let mut min_gamma = f64::INFINITY;
    let mut rounds = Vec::new();
    let mut distributions = Vec::new();
    let mut stop = StopReason::Completed;

    for t in 1..=config.rounds {
        if config.record_distributions {
            distributions.push(dist.clone());
        }
        let h = weak.propose(bags, &dist)?;
        let outputs = evaluate_all(&h, bags)?;
        let gamma: f64 = dist
            .weights()
            .iter()
            .zip(&labels)
            .zip(&outputs)
            .map(|((d, y), o)| d * y * o)
            .sum::<f64>()
            .clamp(-1.0, 1.0);
        if gamma <= nu.unwrap_or(0.0) {
            stop = StopReason::NoEdge;
            if config.record_distributions {
                distributions.pop();
            }
            break;
        }
        let (alpha, rho) = match nu {
            None => (half_log_odds(gamma), None),
            Some(nu) => {
                min_gamma = min_gamma.min(gamma);
                let rho = min_gamma - nu;
                (half_log_odds(gamma) - half_log_odds(rho), Some(rho))
            }
        };

        let unnormalized: Vec<f64> = dist
            .weights()
            .iter()
            .zip(&labels)
            .zip(&outputs)
            .map(|((d, y), o)| d * (-alpha * y * o).exp())
            .collect();
        let z: f64 = unnormalized.iter().sum();

        ensemble.push(alpha, h);
        alpha_mass += alpha.abs();
        for (s, o) in scores.iter_mut().zip(&outputs) {
            *s += alpha * o;
        }
        let mistakes = scores
            .iter()
            .zip(bags)
            .filter(|(s, b)| Label::from_score(**s) != b.label)
            .count();
        let min_margin = scores
            .iter()
            .zip(&labels)
            .map(|(s, y)| {
                if alpha_mass > 0.0 {
                    y * s / alpha_mass
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min);
        rounds.push(RoundRecord {
            t,
            gamma,
            alpha,
            z,
            rho,
            train_error: mistakes as f64 / m as f64,
            min_margin,
        });

        if gamma >= 1.0 - PERFECT_EDGE {
            stop = StopReason::Perfect;
            break;
        }
        dist = BagDistribution::new(unnormalized.into_iter().map(|w| w / z).collect())?;
    }

    Ok((
        ensemble,
        BoostTrace {
            rounds,
            stop,
            distributions,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::InstanceHypothesis;
    use crate::milearn::LiftMode;
    use crate::oracle::OracleKind;

    fn bag(id: &str, rows: Vec<Vec<f64>>, y: i64) -> Bag {
        Bag::from_rows(id, rows, Label::try_from(y).unwrap()).unwrap()
    }

    fn stump(f: usize, t: f64) -> BagHypothesis {
        BagHypothesis::composed(
            BagFunction::Max,
            InstanceHypothesis::stump(f, t, Label::Positive),
        )
    }

    fn xor_like() -> Vec<Bag> {
        vec![
            bag("a", vec![vec![0.0, 0.0]], -1),
            bag("b", vec![vec![1.0, 0.0], vec![0.0, 0.0]], 1),
            bag("c", vec![vec![0.0, 1.0]], 1),
            bag("d", vec![vec![1.0, 1.0]], -1),
            bag("e", vec![vec![0.5, 0.2], vec![0.1, 0.9]], 1),
        ]
    }

    #[test]
    fn perfect_first_round_stops() {
        let bags = vec![
            bag("p", vec![vec![2.0], vec![0.0]], 1),
            bag("n", vec![vec![0.0]], -1),
        ];
        let weak = |_: &[Bag], _: &BagDistribution| Ok(stump(0, 1.0));
        let (ens, trace) = adaboost(&bags, &weak, &BoostConfig::new(50, BagFunction::Max)).unwrap();
        assert_eq!(ens.len(), 1);
        assert_eq!(trace.stop, StopReason::Perfect);
        assert_eq!(trace.rounds[0].train_error, 0.0);
    }

    #[test]
    fn single_bag_is_fit_in_one_round() {
        for y in [1, -1] {
            let bags = vec![bag("only", vec![vec![0.3]], y)];
            let (ens, trace) = boost_milearn(&bags, &MilearnConfig::default(), 10, None).unwrap();
            assert_eq!(trace.rounds[0].train_error, 0.0);
            assert_eq!(ens.predict(&bags[0]).unwrap(), bags[0].label);
        }
    }

    #[test]
    fn no_edge_round_is_not_added() {
        let bags = vec![bag("p", vec![vec![0.0]], 1), bag("n", vec![vec![0.0]], -1)];
        let weak = |_: &[Bag], _: &BagDistribution| Ok(BagHypothesis::constant(Label::Positive));
        let (ens, trace) = adaboost(&bags, &weak, &BoostConfig::new(5, BagFunction::Max)).unwrap();
        assert!(ens.is_empty());
        assert!(trace.rounds.is_empty());
        assert_eq!(trace.stop, StopReason::NoEdge);
    }

    #[test]
    fn trace_invariants() {
        let bags = xor_like();
        let learner = MilearnConfig {
            psi: BagFunction::Max,
            oracle: OracleKind::Agnostic,
            mode: LiftMode::PerInstance,
        };
        for nu in [None, Some(0.05)] {
            let mut config = BoostConfig::new(40, BagFunction::Max);
            config.record_distributions = true;
            let (ens, trace) = match nu {
                None => adaboost(&bags, &learner, &config).unwrap(),
                Some(nu) => adaboost_star(&bags, &learner, &config, nu).unwrap(),
            };
            assert_eq!(trace.distributions.len(), trace.rounds.len());
            let bounds = trace.edge_bounds();
            let zs = trace.z_products();
            for (i, r) in trace.rounds.iter().enumerate() {
                let d = &trace.distributions[i];
                assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let h = &ens.terms()[i].hypothesis;
                let z: f64 = bags
                    .iter()
                    .zip(d.weights())
                    .map(|(b, w)| w * (-r.alpha * b.label.sign() * h.evaluate(b).unwrap()).exp())
                    .sum();
                assert!((z - r.z).abs() < 1e-9);
                assert!(r.train_error <= zs[i] + 1e-9);
                if nu.is_none() {
                    assert!(r.z <= (1.0 - r.gamma * r.gamma).sqrt() + 1e-9);
                    assert!(r.train_error <= bounds[i] + 1e-9);
                    if i > 0 {
                        assert!(zs[i] <= zs[i - 1] + 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn star_rho_is_non_increasing_and_alpha_positive() {
        let bags = xor_like();
        let (_, trace) = adaboost_star(
            &bags,
            &MilearnConfig::default(),
            &BoostConfig::new(60, BagFunction::Max),
            0.1,
        )
        .unwrap();
        let rhos: Vec<f64> = trace.rounds.iter().map(|r| r.rho.unwrap()).collect();
        assert!(rhos.windows(2).all(|w| w[1] <= w[0]));
        for r in &trace.rounds {
            if r.gamma >= r.rho.unwrap() {
                assert!(r.alpha >= 0.0);
            }
        }
        assert!(adaboost_star(
            &bags,
            &MilearnConfig::default(),
            &BoostConfig::new(5, BagFunction::Max),
            1.0
        )
        .is_err());
    }

    #[test]
    fn prediction_and_margins() {
        let bags = xor_like();
        let h = stump(0, 0.5);
        let single = Ensemble::with_terms(
            BagFunction::Max,
            vec![Term {
                alpha: 1.0,
                hypothesis: h,
            }],
        );
        for b in &bags {
            assert_eq!(
                single.predict(b).unwrap(),
                Label::from_score(h.evaluate(b).unwrap())
            );
        }
        let mut ens = Ensemble::new(BagFunction::Max);
        assert!(matches!(ens.predict(&bags[0]), Err(MilError::Untrained)));
        assert_eq!(ens.margins(&bags).unwrap_err().to_string(), "untrained");
        ens.push(0.7, stump(0, 0.5));
        ens.push(0.2, stump(1, 0.5));
        ens.push(0.4, BagHypothesis::constant(Label::Negative));
        let doubled = Ensemble::with_terms(
            BagFunction::Max,
            ens.terms().iter().chain(ens.terms()).copied().collect(),
        );
        let m1 = ens.margins(&bags).unwrap();
        let m2 = doubled.margins(&bags).unwrap();
        for (a, b) in m1.iter().zip(&m2) {
            assert!((-1.0..=1.0).contains(a));
            assert!((a - b).abs() < 1e-12);
        }
        for b in &bags {
            assert_eq!(ens.predict(b).unwrap(), doubled.predict(b).unwrap());
        }
    }

    #[test]
    fn model_json_shape() {
        let ens = Ensemble::with_terms(
            BagFunction::Max,
            vec![Term {
                alpha: 0.5,
                hypothesis: BagHypothesis::constant(Label::Positive),
            }],
        );
        let v: serde_json::Value = serde_json::from_str(&ens.to_json().unwrap()).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["psi"], "max");
        assert_eq!(v["terms"][0]["alpha"], 0.5);
        assert_eq!(v["terms"][0]["hypothesis"]["kind"], "bag_const");
        assert_eq!(Ensemble::from_json(&ens.to_json().unwrap()).unwrap(), ens);
        let bad = r#"{"format_version":2,"psi":"max","terms":[]}"#;
        assert!(Ensemble::from_json(bad).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let bags = xor_like();
        let (_, trace) = boost_milearn(&bags, &MilearnConfig::default(), 3, Some(0.05)).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,gamma,alpha,Z,rho,train_error,min_margin\n"));
        assert_eq!(text.lines().count(), trace.rounds.len() + 1);
    }
}
