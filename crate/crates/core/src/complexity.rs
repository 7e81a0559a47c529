//! Brute-force combinatorial dimensions of finite hypothesis classes.
//!
//! Everything here works on the behavior matrix of a class over a point pool.
//! Subset searches grow point sets one index at a time and keep the partition
//! of hypotheses by the sign pattern they realize on the current set; a set is
//! shattered exactly when every block splits in two on the new point, so
//! non-shattered sets are never extended.
//!
//! Measured dimensions are relative to the pool, and the covering number is
//! the greedy upper bound, not the minimum.

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Bag, BagFunction, Instance, Label};
use crate::error::{MilError, Result};
use crate::hypothesis::{
    enumerate_stumps_over, sorted_distinct, thresholds_for_sorted, BagHypothesis,
    InstanceHypothesis,
};
use crate::rng;

pub const MAX_SHATTER_POINTS: usize = 25;
pub const MAX_VC_CAP: usize = 12;
pub const MAX_FAT_CAP: usize = 6;
pub const MAX_FAT_POOL: usize = 64;

/// Something that maps a point to a real output (`{-1, +1}` for binary classes).
pub trait PointClassifier<P: ?Sized> {
    fn output(&self, point: &P) -> Result<f64>;
}

impl PointClassifier<Instance> for InstanceHypothesis {
    fn output(&self, x: &Instance) -> Result<f64> {
        self.evaluate(x)
    }
}

impl PointClassifier<Bag> for BagHypothesis {
    fn output(&self, bag: &Bag) -> Result<f64> {
        self.evaluate(bag)
    }
}

/// `+1` iff `lower < x[feature] <= upper`: the conjunction of the stumps
/// `x > lower` and `not (x > upper)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub feature: usize,
    pub lower: f64,
    pub upper: f64,
}

impl PointClassifier<Instance> for Interval {
    fn output(&self, x: &Instance) -> Result<f64> {
        if self.feature >= x.dimension() {
            return Err(MilError::FeatureOutOfRange {
                index: self.feature,
                dimension: x.dimension(),
            });
        }
        let v = x[self.feature];
        Ok(if self.lower < v && v <= self.upper {
            1.0
        } else {
            -1.0
        })
    }
}

/// An instance classifier lifted to bags with `psi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pooled<H> {
    pub psi: BagFunction,
    pub inner: H,
}

impl<H: PointClassifier<Instance>> PointClassifier<Bag> for Pooled<H> {
    fn output(&self, bag: &Bag) -> Result<f64> {
        let outputs = bag
            .instances
            .iter()
            .map(|x| self.inner.output(x))
            .collect::<Result<Vec<f64>>>()?;
        self.psi.apply(&outputs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Instance,
    Bag,
}

/// A non-empty, explicitly listed hypothesis class.
#[derive(Clone, Debug)]
pub struct FiniteClass<H> {
    hypotheses: Vec<H>,
    domain: Domain,
}

impl<H> FiniteClass<H> {
    pub fn new(hypotheses: Vec<H>, domain: Domain) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(MilError::invalid("hypothesis class is empty"));
        }
        Ok(FiniteClass { hypotheses, domain })
    }

    pub fn hypotheses(&self) -> &[H] {
        &self.hypotheses
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    /// `out[h][i]` is hypothesis `h` on `points[i]`.
    pub fn behaviors<P>(&self, points: &[P]) -> Result<Vec<Vec<f64>>>
    where
        H: PointClassifier<P>,
    {
        self.hypotheses
            .iter()
            .map(|h| points.iter().map(|p| h.output(p)).collect())
            .collect()
    }
}

fn sign_patterns(behaviors: &[Vec<f64>]) -> Vec<Vec<bool>> {
    behaviors
        .iter()
        .map(|row| row.iter().map(|&v| v >= 0.0).collect())
        .collect()
}

/// Number of distinct sign patterns (`sign(0) = +1`) the class realizes on `points`.
pub fn realized_patterns<H, P>(class: &FiniteClass<H>, points: &[P]) -> Result<usize>
where
    H: PointClassifier<P>,
{
    let k = points.len();
    if k > MAX_SHATTER_POINTS {
        return Err(MilError::BudgetExceeded(format!(
            "{k} points > {MAX_SHATTER_POINTS}"
        )));
    }
    let mut seen = vec![0u64; (1usize << k).div_ceil(64)];
    let mut count = 0;
    for h in class.hypotheses() {
        let mut mask = 0usize;
        for (i, p) in points.iter().enumerate() {
            if h.output(p)? >= 0.0 {
                mask |= 1 << i;
            }
        }
        let (word, bit) = (mask / 64, mask % 64);
        if seen[word] & (1 << bit) == 0 {
            seen[word] |= 1 << bit;
            count += 1;
        }
    }
    Ok(count)
}

/// True iff all `2^|points|` sign patterns are realized.
pub fn shatters<H, P>(class: &FiniteClass<H>, points: &[P]) -> Result<bool>
where
    H: PointClassifier<P>,
{
    Ok(realized_patterns(class, points)? == 1usize << points.len())
}

/// Hypothesis behaviors reduced to distinct rows.
fn distinct_rows<T: Clone + PartialEq + Eq + std::hash::Hash>(rows: Vec<Vec<T>>) -> Vec<Vec<T>> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for row in rows {
        if !seen.contains_key(&row) {
            seen.insert(row.clone(), ());
            out.push(row);
        }
    }
    out
}

/// Point-major sign table: `table[p][h]`.
struct SignTable {
    positive: Vec<Vec<bool>>,
    hypotheses: usize,
}

impl SignTable {
    fn new(patterns: &[Vec<bool>], points: usize) -> SignTable {
        let positive = (0..points)
            .map(|p| patterns.iter().map(|row| row[p]).collect())
            .collect();
        SignTable {
            positive,
            hypotheses: patterns.len(),
        }
    }
}

/// Splits every block on point `p`; `None` unless every block splits.
fn refine(blocks: &[Vec<u32>], p: &[bool]) -> Option<Vec<Vec<u32>>> {
    let mut next = Vec::with_capacity(blocks.len() * 2);
    for block in blocks {
        let (pos, neg): (Vec<u32>, Vec<u32>) = block.iter().partition(|&&h| p[h as usize]);
        if pos.is_empty() || neg.is_empty() {
            return None;
        }
        next.push(pos);
        next.push(neg);
    }
    Some(next)
}

fn vc_search(
    table: &SignTable,
    start: usize,
    blocks: &[Vec<u32>],
    depth: usize,
    cap: usize,
    best: &AtomicUsize,
) {
    best.fetch_max(depth, Ordering::Relaxed);
    if depth >= cap {
        return;
    }
    let n = table.positive.len();
    for p in start..n {
        if depth + (n - p) <= best.load(Ordering::Relaxed) || best.load(Ordering::Relaxed) >= cap {
            return;
        }
        if let Some(next) = refine(blocks, &table.positive[p]) {
            vc_search(table, p + 1, &next, depth + 1, cap, best);
        }
    }
}

fn log2_floor(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

/// Largest `k <= cap` such that some `k`-subset of `pool` is shattered.
pub fn vc_dimension<H, P>(class: &FiniteClass<H>, pool: &[P], cap: usize) -> Result<usize>
where
    H: PointClassifier<P>,
{
    if cap > MAX_VC_CAP {
        return Err(MilError::BudgetExceeded(format!(
            "vc cap {cap} > {MAX_VC_CAP}"
        )));
    }
    let patterns = distinct_rows(sign_patterns(&class.behaviors(pool)?));
    // 2^k distinct behaviors are needed to shatter k points.
    let cap = cap.min(log2_floor(patterns.len())).min(pool.len());
    if cap == 0 {
        return Ok(0);
    }
    let table = SignTable::new(&patterns, pool.len());
    let all: Vec<u32> = (0..table.hypotheses as u32).collect();
    let best = AtomicUsize::new(0);
    (0..pool.len()).into_par_iter().for_each(|p| {
        if let Some(blocks) = refine(std::slice::from_ref(&all), &table.positive[p]) {
            vc_search(&table, p + 1, &blocks, 1, cap, &best);
        }
    });
    Ok(best.load(Ordering::Relaxed))
}

/// Greedy cover size in the empirical sup metric `max_i |h(x_i) - g(x_i)|`.
///
/// Each step picks the uncovered hypothesis whose `epsilon`-ball holds the most
/// uncovered hypotheses (first index on ties) and covers that ball.
pub fn covering_number<H, P>(class: &FiniteClass<H>, sample: &[P], epsilon: f64) -> Result<usize>
where
    H: PointClassifier<P>,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(MilError::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if sample.is_empty() {
        return Err(MilError::invalid(
            "covering number needs a non-empty sample",
        ));
    }
    let behaviors = class.behaviors(sample)?;
    // Collapse identical behaviors, remembering multiplicity; the first
    // occurrence keeps its index order.
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut mult: Vec<usize> = Vec::new();
    for row in behaviors {
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        match index.get(&key) {
            Some(&i) => mult[i] += 1,
            None => {
                index.insert(key, rows.len());
                rows.push(row);
                mult.push(1);
            }
        }
    }
    let n = rows.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    rows[i]
                        .iter()
                        .zip(&rows[j])
                        .all(|(a, b)| (a - b).abs() <= epsilon)
                })
                .collect()
        })
        .collect();
    let mut gain: Vec<usize> = neighbors
        .iter()
        .map(|nb| nb.iter().map(|&j| mult[j]).sum())
        .collect();
    let mut covered = vec![false; n];
    let mut remaining = n;
    let mut centers = 0;
    while remaining > 0 {
        let mut pick = None;
        for i in 0..n {
            if !covered[i] && pick.is_none_or(|p: usize| gain[i] > gain[p]) {
                pick = Some(i);
            }
        }
        let c = pick.expect("an uncovered hypothesis exists");
        centers += 1;
        for &j in &neighbors[c] {
            if !covered[j] {
                covered[j] = true;
                remaining -= 1;
                for &k in &neighbors[j] {
                    gain[k] -= mult[j];
                }
            }
        }
    }
    Ok(centers)
}

/// Witness levels `-0.9, -0.8, ..., 0.9`.
pub fn witness_grid() -> Vec<f64> {
    (-9..=9).map(|i| f64::from(i) / 10.0).collect()
}

/// Per-hypothesis side of one (point, witness) pair: +1 above `s + gamma`,
/// -1 below `s - gamma`, 0 neither.
type SideVector = Vec<i8>;

fn fat_search(
    options: &[Vec<SideVector>],
    start: usize,
    blocks: &[Vec<u32>],
    depth: usize,
    cap: usize,
    best: &mut usize,
) {
    *best = (*best).max(depth);
    if depth >= cap {
        return;
    }
    let n = options.len();
    for p in start..n {
        if depth + (n - p) <= *best || *best >= cap {
            return;
        }
        for sides in &options[p] {
            let mut next = Vec::with_capacity(blocks.len() * 2);
            let mut ok = true;
            for block in blocks {
                let pos: Vec<u32> = block
                    .iter()
                    .copied()
                    .filter(|&h| sides[h as usize] > 0)
                    .collect();
                let neg: Vec<u32> = block
                    .iter()
                    .copied()
                    .filter(|&h| sides[h as usize] < 0)
                    .collect();
                if pos.is_empty() || neg.is_empty() {
                    ok = false;
                    break;
                }
                next.push(pos);
                next.push(neg);
            }
            if ok {
                fat_search(options, p + 1, &next, depth + 1, cap, best);
                if *best >= cap {
                    return;
                }
            }
        }
    }
}

/// Largest `k <= cap` such that some `k`-subset of `pool` is
/// `gamma`-shattered with witnesses from [`witness_grid`].
pub fn fat_shattering<H, P>(
    class: &FiniteClass<H>,
    pool: &[P],
    gamma: f64,
    cap: usize,
) -> Result<usize>
where
    H: PointClassifier<P>,
{
    if cap > MAX_FAT_CAP {
        return Err(MilError::BudgetExceeded(format!(
            "fat cap {cap} > {MAX_FAT_CAP}"
        )));
    }
    if pool.len() > MAX_FAT_POOL {
        return Err(MilError::BudgetExceeded(format!(
            "fat pool {} > {MAX_FAT_POOL}",
            pool.len()
        )));
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(MilError::invalid(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let key = |row: &Vec<f64>| row.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
    let mut seen = HashMap::new();
    let mut rows = Vec::new();
    for row in class.behaviors(pool)? {
        if seen.insert(key(&row), ()).is_none() {
            rows.push(row);
        }
    }
    let grid = witness_grid();
    let options: Vec<Vec<SideVector>> = (0..pool.len())
        .map(|p| {
            let per_witness = grid
                .iter()
                .map(|&s| {
                    rows.iter()
                        .map(|row| {
                            let v = row[p];
                            if v >= s + gamma {
                                1
                            } else if v <= s - gamma {
                                -1
                            } else {
                                0
                            }
                        })
                        .collect::<SideVector>()
                })
                .filter(|sides| sides.contains(&1) && sides.contains(&-1))
                .collect();
            distinct_rows(per_witness)
        })
        .collect();
    let all: Vec<u32> = (0..rows.len() as u32).collect();
    let mut best = 0;
    fat_search(&options, 0, std::slice::from_ref(&all), 0, cap, &mut best);
    Ok(best)
}

/// Intervals `(a, b]` over the candidate thresholds of the given 1-D values,
/// plus one empty interval; together they realize every interval labeling.
pub fn enumerate_intervals(feature: usize, values: &[f64]) -> Vec<Interval> {
    let thresholds = thresholds_for_sorted(&sorted_distinct(values.to_vec()));
    let mut out = Vec::new();
    if let Some(&last) = thresholds.last() {
        out.push(Interval {
            feature,
            lower: last,
            upper: last,
        });
    }
    for (i, &lower) in thresholds.iter().enumerate() {
        for &upper in &thresholds[i + 1..] {
            out.push(Interval {
                feature,
                lower,
                upper,
            });
        }
    }
    out
}

/// Stumps on feature 0 with the given polarity only.
pub fn single_polarity_thresholds(values: &[f64], polarity: Label) -> Vec<InstanceHypothesis> {
    enumerate_stumps_over(1, values.iter().map(std::slice::from_ref))
        .into_iter()
        .filter(|h| matches!(h, InstanceHypothesis::Stump { polarity: p, .. } if *p == polarity))
        .collect()
}

/// Both-polarity stumps on feature 0.
pub fn stumps_1d(values: &[f64]) -> Vec<InstanceHypothesis> {
    enumerate_stumps_over(1, values.iter().map(std::slice::from_ref))
}

// ---------------------------------------------------------------------------
// Measurement lab
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct LabConfig {
    /// Bag sizes to measure, ascending.
    pub rs: Vec<usize>,
    pub seed: u64,
    /// 1-D instance pool: half on a regular grid in `[0, 1)`, half uniform draws.
    pub instance_pool: usize,
    /// Fresh bags added to the pool at each bag size.
    pub fresh_bags: usize,
    pub vc_cap: usize,
    pub cover_eps: Vec<f64>,
    pub fat_gammas: Vec<f64>,
    /// Trailing (most recently added) bags of each pool used for fat-shattering.
    pub fat_pool: usize,
    pub fat_cap: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            rs: vec![1, 2, 4, 8],
            seed: 0,
            instance_pool: 12,
            fresh_bags: 8,
            vc_cap: MAX_VC_CAP,
            cover_eps: vec![0.25, 0.5, 1.0],
            fat_gammas: vec![0.25, 0.5],
            fat_pool: 8,
            fat_cap: 4,
        }
    }
}

impl LabConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rs.is_empty() || self.rs.contains(&0) {
            return Err(MilError::invalid(
                "bag sizes must be positive and non-empty",
            ));
        }
        if self.rs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MilError::invalid("bag sizes must be strictly increasing"));
        }
        if self.instance_pool == 0 {
            return Err(MilError::invalid("instance pool must be non-empty"));
        }
        if self.vc_cap > MAX_VC_CAP {
            return Err(MilError::BudgetExceeded(format!(
                "vc cap {} > {MAX_VC_CAP}",
                self.vc_cap
            )));
        }
        if self.fat_cap > MAX_FAT_CAP {
            return Err(MilError::BudgetExceeded(format!(
                "fat cap {} > {MAX_FAT_CAP}",
                self.fat_cap
            )));
        }
        if self.fat_pool > MAX_FAT_POOL {
            return Err(MilError::BudgetExceeded(format!(
                "fat pool {} > {MAX_FAT_POOL}",
                self.fat_pool
            )));
        }
        if self.cover_eps.iter().any(|e| e.is_nan() || *e <= 0.0)
            || self.fat_gammas.iter().any(|g| g.is_nan() || *g <= 0.0)
        {
            return Err(MilError::invalid(
                "epsilon and gamma values must be positive",
            ));
        }
        Ok(())
    }

    /// The 1-D instance pool: a regular grid followed by seeded uniform draws.
    pub fn instance_values(&self) -> Vec<f64> {
        let grid = self.instance_pool.div_ceil(2);
        let mut values: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) / grid as f64).collect();
        let mut rng = rng::stream(self.seed, "complexity/instances");
        values.extend((grid..self.instance_pool).map(|_| rng.random::<f64>()));
        values
    }
}

/// Bag pools for one bag size `r`.
#[derive(Clone, Debug)]
pub struct BagPools {
    pub r: usize,
    /// Bags of exactly `r` instances: every smaller-size pool bag padded by
    /// cycling its instances, plus fresh size-`r` bags.
    pub exact: Vec<Bag>,
    /// Bags of at most `r` instances: every smaller-size pool bag as is, plus
    /// fresh bags with sizes uniform in `1..=r`.
    pub up_to: Vec<Bag>,
}

fn one_d_bag(id: String, values: Vec<f64>) -> Bag {
    let instances = values
        .into_iter()
        .map(|v| Instance::new(vec![v]).expect("finite"))
        .collect();
    Bag::new(id, instances, Label::Positive).expect("non-empty bag")
}

fn pad_to(bag: &Bag, r: usize) -> Bag {
    let instances = bag
        .instances
        .iter()
        .cycle()
        .take(r.max(bag.len()))
        .cloned()
        .collect();
    Bag {
        id: bag.id.clone(),
        instances,
        label: bag.label,
    }
}

/// Nested pools: the pool at size `r` embeds every pool at smaller sizes, so
/// measured dimensions cannot decrease with `r`.
pub fn bag_pools(config: &LabConfig) -> Result<Vec<BagPools>> {
    config.validate()?;
    let singles: Vec<Bag> = config
        .instance_values()
        .into_iter()
        .enumerate()
        .map(|(i, v)| one_d_bag(format!("s{i}"), vec![v]))
        .collect();
    let mut exact = singles.clone();
    let mut up_to = singles;
    let mut out = Vec::new();
    for &r in &config.rs {
        exact = exact.iter().map(|b| pad_to(b, r)).collect();
        if r > 1 {
            let mut rng = rng::stream(config.seed, &format!("complexity/bags/{r}"));
            for i in 0..config.fresh_bags {
                let values = (0..r).map(|_| rng.random::<f64>()).collect();
                exact.push(one_d_bag(format!("e{r}_{i}"), values));
                let size = rng.random_range(1..=r);
                let values = (0..size).map(|_| rng.random::<f64>()).collect();
                up_to.push(one_d_bag(format!("u{r}_{i}"), values));
            }
        }
        out.push(BagPools {
            r,
            exact: exact.clone(),
            up_to: up_to.clone(),
        });
    }
    Ok(out)
}

fn pool_values(bags: &[Bag]) -> Vec<f64> {
    bags.iter()
        .flat_map(|b| b.instances.iter().map(|x| x[0]))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceClassKind {
    Stump,
    Interval,
}

impl InstanceClassKind {
    pub fn name(self) -> &'static str {
        match self {
            InstanceClassKind::Stump => "stump",
            InstanceClassKind::Interval => "interval",
        }
    }
}

/// A 1-D instance class instantiated on some values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LabHypothesis {
    Stump(InstanceHypothesis),
    Interval(Interval),
}

impl PointClassifier<Instance> for LabHypothesis {
    fn output(&self, x: &Instance) -> Result<f64> {
        match self {
            LabHypothesis::Stump(h) => h.output(x),
            LabHypothesis::Interval(h) => h.output(x),
        }
    }
}

pub fn instance_class(
    kind: InstanceClassKind,
    values: &[f64],
) -> Result<FiniteClass<LabHypothesis>> {
    let hyps = match kind {
        InstanceClassKind::Stump => stumps_1d(values)
            .into_iter()
            .map(LabHypothesis::Stump)
            .collect(),
        InstanceClassKind::Interval => enumerate_intervals(0, values)
            .into_iter()
            .map(LabHypothesis::Interval)
            .collect(),
    };
    FiniteClass::new(hyps, Domain::Instance)
}

pub fn bag_class(
    kind: InstanceClassKind,
    psi: BagFunction,
    pool: &[Bag],
) -> Result<FiniteClass<Pooled<LabHypothesis>>> {
    let inner = instance_class(kind, &pool_values(pool))?;
    FiniteClass::new(
        inner
            .hypotheses()
            .iter()
            .map(|&h| Pooled { psi, inner: h })
            .collect(),
        Domain::Bag,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Vc,
    Cov,
    Fat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabRow {
    pub class: String,
    pub r: usize,
    pub pool_size: usize,
    pub metric: Metric,
    pub param: String,
    pub value: usize,
    pub seed: u64,
}

/// `d_r` for one instance class, both pool conventions, plus the fitted
/// constant `c = max_r d_r / (log2(2r) d_1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthTable {
    pub class: String,
    pub d1: usize,
    /// `(r, d_r on exact-size pools, d_r on up-to-size pools)`.
    pub rows: Vec<(usize, usize, usize)>,
    pub fitted_c: f64,
}

impl GrowthTable {
    /// Checks `d_r <= c log2(2r) d_1` for every row, exact pools.
    pub fn within_log_bound(&self) -> bool {
        self.rows.iter().all(|&(r, d, _)| {
            d as f64 <= self.fitted_c * (2.0 * r as f64).log2() * self.d1 as f64 + 1e-9
        })
    }
}

impl std::fmt::Display for GrowthTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "class {} (d_1 = {})", self.class, self.d1)?;
        writeln!(f, "{:>4} {:>10} {:>10}", "r", "d_r exact", "d_r up_to")?;
        for (r, e, u) in &self.rows {
            writeln!(f, "{r:>4} {e:>10} {u:>10}")?;
        }
        write!(f, "fitted c = {:.4}", self.fitted_c)
    }
}

pub fn growth_table(kind: InstanceClassKind, config: &LabConfig) -> Result<GrowthTable> {
    let pools = bag_pools(config)?;
    let values = config.instance_values();
    let instances: Vec<Instance> = values
        .iter()
        .map(|&v| Instance::new(vec![v]))
        .collect::<Result<_>>()?;
    let d1 = vc_dimension(&instance_class(kind, &values)?, &instances, config.vc_cap)?;
    let mut rows = Vec::new();
    for pool in &pools {
        let exact = vc_dimension(
            &bag_class(kind, BagFunction::Max, &pool.exact)?,
            &pool.exact,
            config.vc_cap,
        )?;
        let up_to = vc_dimension(
            &bag_class(kind, BagFunction::Max, &pool.up_to)?,
            &pool.up_to,
            config.vc_cap,
        )?;
        rows.push((pool.r, exact, up_to));
    }
    let fitted_c = rows
        .iter()
        .map(|&(r, d, _)| d as f64 / ((2.0 * r as f64).log2() * d1.max(1) as f64))
        .fold(0.0, f64::max);
    Ok(GrowthTable {
        class: kind.name().to_string(),
        d1,
        rows,
        fitted_c,
    })
}

/// Runs the full measurement grid: instance-level VC, bag-level VC under
/// `max` on both pool conventions, and covering / fat-shattering numbers for
/// `avg`-pooled classes.
pub fn run_lab(config: &LabConfig) -> Result<Vec<LabRow>> {
    let pools = bag_pools(config)?;
    let values = config.instance_values();
    let instances: Vec<Instance> = values
        .iter()
        .map(|&v| Instance::new(vec![v]))
        .collect::<Result<_>>()?;
    let seed = config.seed;
    let mut rows = Vec::new();
    for kind in [InstanceClassKind::Stump, InstanceClassKind::Interval] {
        let name = kind.name();
        rows.push(LabRow {
            class: name.to_string(),
            r: 1,
            pool_size: instances.len(),
            metric: Metric::Vc,
            param: "instance".into(),
            value: vc_dimension(&instance_class(kind, &values)?, &instances, config.vc_cap)?,
            seed,
        });
        for pool in &pools {
            for (param, bags) in [("exact", &pool.exact), ("up_to", &pool.up_to)] {
                let class = bag_class(kind, BagFunction::Max, bags)?;
                rows.push(LabRow {
                    class: format!("max_{name}"),
                    r: pool.r,
                    pool_size: bags.len(),
                    metric: Metric::Vc,
                    param: param.into(),
                    value: vc_dimension(&class, bags, config.vc_cap)?,
                    seed,
                });
            }
            let avg = bag_class(kind, BagFunction::Avg, &pool.exact)?;
            for &eps in &config.cover_eps {
                rows.push(LabRow {
                    class: format!("avg_{name}"),
                    r: pool.r,
                    pool_size: pool.exact.len(),
                    metric: Metric::Cov,
                    param: format!("{eps}"),
                    value: covering_number(&avg, &pool.exact, eps)?,
                    seed,
                });
            }
            let fat_pool = &pool.exact[pool.exact.len().saturating_sub(config.fat_pool)..];
            for &gamma in &config.fat_gammas {
                rows.push(LabRow {
                    class: format!("avg_{name}"),
                    r: pool.r,
                    pool_size: fat_pool.len(),
                    metric: Metric::Fat,
                    param: format!("{gamma}"),
                    value: fat_shattering(&avg, fat_pool, gamma, config.fat_cap)?,
                    seed,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with header `class,r,pool_size,metric,param,value,seed`.
pub fn write_results_csv<W: Write>(rows: &[LabRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "class",
        "r",
        "pool_size",
        "metric",
        "param",
        "value",
        "seed",
    ])?;
    for row in rows {
        let metric = match row.metric {
            Metric::Vc => "vc",
            Metric::Cov => "cov",
            Metric::Fat => "fat",
        };
        wtr.write_record([
            row.class.clone(),
            row.r.to_string(),
            row.pool_size.to_string(),
            metric.to_string(),
            row.param.clone(),
            row.value.to_string(),
            row.seed.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn points(values: &[f64]) -> Vec<Instance> {
        values
            .iter()
            .map(|&v| Instance::new(vec![v]).unwrap())
            .collect()
    }

    fn constants() -> FiniteClass<InstanceHypothesis> {
        FiniteClass::new(
            vec![
                InstanceHypothesis::constant(Label::Positive),
                InstanceHypothesis::constant(Label::Negative),
            ],
            Domain::Instance,
        )
        .unwrap()
    }

    /// Reference: test every subset of the pool with `shatters`.
    fn vc_by_subsets<H: PointClassifier<Instance>>(
        class: &FiniteClass<H>,
        pool: &[Instance],
        cap: usize,
    ) -> usize {
        let n = pool.len();
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let k = mask.count_ones() as usize;
            if k <= best || k > cap {
                continue;
            }
            let subset: Vec<Instance> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| pool[i].clone())
                .collect();
            if shatters(class, &subset).unwrap() {
                best = k;
            }
        }
        best
    }

    #[test]
    fn single_polarity_thresholds_on_two_points() {
        let pts = points(&[0.0, 1.0]);
        let class = FiniteClass::new(
            single_polarity_thresholds(&[0.0, 1.0], Label::Positive),
            Domain::Instance,
        )
        .unwrap();
        // Realized patterns: (-,-), (-,+), (+,+); (+,-) is missing.
        assert_eq!(realized_patterns(&class, &pts).unwrap(), 3);
        assert!(!shatters(&class, &pts).unwrap());
        assert!(shatters(&class, &pts[..1]).unwrap());
        assert_eq!(vc_dimension(&class, &pts, 12).unwrap(), 1);
    }

    #[test]
    fn constants_shatter_one_point_only() {
        let pts = points(&[0.0, 1.0, 2.0]);
        assert!(shatters(&constants(), &pts[..1]).unwrap());
        assert!(!shatters(&constants(), &pts[..2]).unwrap());
        assert_eq!(vc_dimension(&constants(), &pts, 12).unwrap(), 1);
        assert!(realized_patterns(&constants(), &pts).unwrap() >= 1);
    }

    #[test]
    fn budgets() {
        let many = points(&(0..26).map(f64::from).collect::<Vec<_>>());
        assert!(matches!(
            shatters(&constants(), &many),
            Err(MilError::BudgetExceeded(_))
        ));
        assert!(matches!(
            vc_dimension(&constants(), &many, 13),
            Err(MilError::BudgetExceeded(_))
        ));
        assert!(matches!(
            fat_shattering(&constants(), &many[..3], 0.5, 7),
            Err(MilError::BudgetExceeded(_))
        ));
        assert!(covering_number(&constants(), &many, 0.0).is_err());
        assert!(FiniteClass::<InstanceHypothesis>::new(vec![], Domain::Instance).is_err());
    }

    #[test]
    fn known_dimensions() {
        let values: Vec<f64> = (0..9).map(|i| f64::from(i) * 0.37).collect();
        let pts = points(&values);
        let stumps = FiniteClass::new(stumps_1d(&values), Domain::Instance).unwrap();
        assert_eq!(vc_dimension(&stumps, &pts, 12).unwrap(), 2);
        let intervals = instance_class(InstanceClassKind::Interval, &values).unwrap();
        assert_eq!(vc_dimension(&intervals, &pts, 12).unwrap(), 2);
    }

    #[test]
    fn vc_matches_subset_enumeration() {
        let mut rng = rng::stream(3, "vc-ref");
        for _ in 0..30 {
            let values: Vec<f64> = (0..8).map(|_| f64::from(rng.random_range(0..6))).collect();
            let pts = points(&values);
            let mut hyps: Vec<LabHypothesis> = stumps_1d(&values)
                .into_iter()
                .map(LabHypothesis::Stump)
                .collect();
            hyps.extend(
                enumerate_intervals(0, &values)
                    .into_iter()
                    .map(LabHypothesis::Interval),
            );
            hyps.shuffle(&mut rng);
            hyps.truncate(rng.random_range(1..=hyps.len()));
            let class = FiniteClass::new(hyps, Domain::Instance).unwrap();
            assert_eq!(
                vc_dimension(&class, &pts, 12).unwrap(),
                vc_by_subsets(&class, &pts, 12)
            );
            let iv = instance_class(InstanceClassKind::Interval, &values).unwrap();
            assert_eq!(
                vc_dimension(&iv, &pts, 12).unwrap(),
                vc_by_subsets(&iv, &pts, 12)
            );
        }
    }

    #[test]
    fn cover_examples() {
        let values = [0.1, 0.4, 0.8];
        let pts = points(&values);
        let class = FiniteClass::new(stumps_1d(&values), Domain::Instance).unwrap();
        assert_eq!(covering_number(&class, &pts, 2.0).unwrap(), 1);
        assert_eq!(covering_number(&class, &pts, 5.0).unwrap(), 1);
        let distinct = distinct_rows(
            class
                .behaviors(&pts)
                .unwrap()
                .into_iter()
                .map(|r| r.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
                .collect(),
        )
        .len();
        assert_eq!(covering_number(&class, &pts, 1.0).unwrap(), distinct);
    }

    #[test]
    fn fat_examples() {
        let values = [0.1, 0.4, 0.8, 0.9];
        let pts = points(&values);
        let class = FiniteClass::new(stumps_1d(&values), Domain::Instance).unwrap();
        let vc = vc_dimension(&class, &pts, 6).unwrap();
        for gamma in [1e-6, 0.3, 1.0] {
            assert_eq!(fat_shattering(&class, &pts, gamma, 6).unwrap(), vc);
        }
        assert_eq!(fat_shattering(&class, &pts, 1.0 + 1e-9, 6).unwrap(), 0);
    }

    #[test]
    fn pools_are_nested() {
        let config = LabConfig::default();
        let pools = bag_pools(&config).unwrap();
        for w in pools.windows(2) {
            assert!(w[1].exact.len() > w[0].exact.len());
            for (small, big) in w[0].exact.iter().zip(&w[1].exact) {
                assert_eq!(small.id, big.id);
                assert_eq!(big.len(), w[1].r);
            }
            assert!(w[1].up_to.iter().all(|b| b.len() <= w[1].r));
        }
    }

    #[test]
    fn results_csv_header() {
        let rows = vec![LabRow {
            class: "stump".into(),
            r: 1,
            pool_size: 3,
            metric: Metric::Vc,
            param: "instance".into(),
            value: 2,
            seed: 9,
        }];
        let mut buf = Vec::new();
        write_results_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "class,r,pool_size,metric,param,value,seed\nstump,1,3,vc,instance,2,9\n"
        );
    }
}
