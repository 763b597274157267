//! Multiplexed click detectors.
//!
//! An input pulse is split over `N` bins, each read by an on/off detector.
//! Photons are lost independently with probability `1 - η`; survivors land in
//! bin `b` with probability `w_b`. A bin clicks if it received at least one
//! photon, or through a dark click with probability `d` otherwise.

use alloc::vec;
use alloc::vec::Vec;
use rand_distr::{Distribution, Poisson};

use crate::distributions::{JointPhotonDistribution, PhotonDistribution};
use crate::error::{Error, Result};
use crate::math::{binomial, binomial_pmf};
use crate::rng::stream_rng;

const NORMALIZATION_TOL: f64 = 1e-9;
const DEGENERATE_PROB: f64 = 1e-15;
/// Subset recursion for unbalanced bins is exponential in the bin count.
pub const MAX_UNBALANCED_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    bin_weights: Vec<f64>,
    efficiency: f64,
    dark_click_prob: f64,
}

impl DetectorModel {
    pub fn new(bin_weights: Vec<f64>, efficiency: f64, dark_click_prob: f64) -> Result<Self> {
        if bin_weights.is_empty() {
            return Err(Error::invalid("detector needs at least one bin"));
        }
        if bin_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("bin weights must be finite and non-negative"));
        }
        let total: f64 = bin_weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("bin weights must sum to 1"));
        }
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::invalid("efficiency must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&dark_click_prob) {
            return Err(Error::invalid("dark-click probability must lie in [0, 1)"));
        }
        let det = DetectorModel { bin_weights, efficiency, dark_click_prob };
        if !det.is_balanced() && det.n_bins() > MAX_UNBALANCED_BINS {
            return Err(Error::invalid("unbalanced bin weights are limited to 20 bins"));
        }
        Ok(det)
    }

    /// Balanced, lossless, noiseless `n_bins`-bin detector.
    pub fn ideal(n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::invalid("detector needs at least one bin"));
        }
        Ok(DetectorModel { bin_weights: vec![1.0 / n_bins as f64; n_bins], efficiency: 1.0, dark_click_prob: 0.0 })
    }

    pub fn with_efficiency(self, efficiency: f64) -> Result<Self> {
        DetectorModel::new(self.bin_weights, efficiency, self.dark_click_prob)
    }

    pub fn with_dark_click_prob(self, dark_click_prob: f64) -> Result<Self> {
        DetectorModel::new(self.bin_weights, self.efficiency, dark_click_prob)
    }

    pub fn n_bins(&self) -> usize {
        self.bin_weights.len()
    }

    pub fn bin_weights(&self) -> &[f64] {
        &self.bin_weights
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_click_prob(&self) -> f64 {
        self.dark_click_prob
    }

    pub fn is_balanced(&self) -> bool {
        let w0 = self.bin_weights[0];
        self.bin_weights.iter().all(|w| (w - w0).abs() <= 1e-15)
    }
}

/// `L[i][n] = P(i clicks | n photons)`, shape `(N+1) × (n_max+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickMatrix {
    n_bins: usize,
    n_max: usize,
    data: Vec<f64>,
}

impl ClickMatrix {
    fn zeros(n_bins: usize, n_max: usize) -> Self {
        ClickMatrix { n_bins, n_max, data: vec![0.0; (n_bins + 1) * (n_max + 1)] }
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn get(&self, clicks: usize, photons: usize) -> f64 {
        self.data[clicks * (self.n_max + 1) + photons]
    }

    fn set(&mut self, clicks: usize, photons: usize, value: f64) {
        self.data[clicks * (self.n_max + 1) + photons] = value;
    }

    pub fn column(&self, photons: usize) -> Vec<f64> {
        (0..=self.n_bins).map(|i| self.get(i, photons)).collect()
    }

    pub fn row(&self, clicks: usize) -> &[f64] {
        let w = self.n_max + 1;
        &self.data[clicks * w..(clicks + 1) * w]
    }

    /// `L · p` for a photon vector of length at most `n_max + 1`.
    pub fn apply(&self, photons: &[f64]) -> Vec<f64> {
        (0..=self.n_bins).map(|i| photons.iter().enumerate().map(|(n, p)| self.get(i, n) * p).sum()).collect()
    }
}

/// Click probabilities for every photon number up to `n_max`.
///
/// Built photon by photon: every intermediate quantity is a probability, so
/// the result carries no cancellation error for any bin count. Balanced bins
/// track only the number of occupied bins; unbalanced bins track the occupied
/// subset. Dark clicks are folded in afterwards.
pub fn click_matrix(det: &DetectorModel, n_max: usize) -> ClickMatrix {
    let n_bins = det.n_bins();
    let occupancy = if det.is_balanced() {
        occupancy_balanced(n_bins, det.efficiency, n_max)
    } else {
        occupancy_subsets(det, n_max)
    };
    with_dark_clicks(n_bins, det.dark_click_prob, n_max, &occupancy)
}

/// `occ[n][a]`: probability that `n` photons occupy exactly `a` bins.
fn occupancy_balanced(n_bins: usize, eta: f64, n_max: usize) -> Vec<Vec<f64>> {
    let nb = n_bins as f64;
    let mut occ = Vec::with_capacity(n_max + 1);
    let mut cur = vec![0.0; n_bins + 1];
    cur[0] = 1.0;
    occ.push(cur.clone());
    for _ in 0..n_max {
        let mut next = vec![0.0; n_bins + 1];
        for (a, &p) in cur.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let af = a as f64;
            next[a] += p * (1.0 - eta + eta * af / nb);
            if a < n_bins {
                next[a + 1] += p * eta * (nb - af) / nb;
            }
        }
        occ.push(next.clone());
        cur = next;
    }
    occ
}

fn occupancy_subsets(det: &DetectorModel, n_max: usize) -> Vec<Vec<f64>> {
    let n_bins = det.n_bins();
    let eta = det.efficiency;
    let w = &det.bin_weights;
    let n_sets = 1usize << n_bins;
    let set_weight: Vec<f64> =
        (0..n_sets).map(|s| (0..n_bins).filter(|b| s >> b & 1 == 1).map(|b| w[b]).sum()).collect();
    let collapse = |state: &[f64]| {
        let mut by_count = vec![0.0; n_bins + 1];
        for (s, p) in state.iter().enumerate() {
            by_count[s.count_ones() as usize] += p;
        }
        by_count
    };
    let mut state = vec![0.0; n_sets];
    state[0] = 1.0;
    let mut occ = Vec::with_capacity(n_max + 1);
    occ.push(collapse(&state));
    for _ in 0..n_max {
        let mut next = vec![0.0; n_sets];
        for (s, &p) in state.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            next[s] += p * (1.0 - eta + eta * set_weight[s]);
            for b in 0..n_bins {
                if s >> b & 1 == 0 {
                    next[s | 1 << b] += p * eta * w[b];
                }
            }
        }
        state = next;
        occ.push(collapse(&state));
    }
    occ
}

fn with_dark_clicks(n_bins: usize, dark: f64, n_max: usize, occ: &[Vec<f64>]) -> ClickMatrix {
    let mut m = ClickMatrix::zeros(n_bins, n_max);
    for (n, by_count) in occ.iter().enumerate() {
        for (a, &p) in by_count.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let silent = n_bins - a;
            for extra in 0..=silent {
                let flip = binomial_pmf(silent, extra, dark);
                let cur = m.get(a + extra, n);
                m.set(a + extra, n, cur + p * flip);
            }
        }
    }
    m
}

/// The same matrix by inclusion–exclusion over bin subsets,
/// `P(occupied = A) = Σ_{S⊆A} (-1)^{|A|-|S|} (1 - η + η w(S))ⁿ`.
///
/// The alternating sums lose roughly `log10 C(N, N/2) 2^{N/2}` digits, so
/// this form is exact to ~1e-13 only for small `N`; it is kept as an
/// independent route for cross-checks. Subset enumeration limits it to 20 bins.
pub fn click_matrix_inclusion_exclusion(det: &DetectorModel, n_max: usize) -> Result<ClickMatrix> {
    let n_bins = det.n_bins();
    if n_bins > MAX_UNBALANCED_BINS {
        return Err(Error::invalid("inclusion-exclusion is limited to 20 bins"));
    }
    let eta = det.efficiency;
    let n_sets = 1usize << n_bins;
    // avoid[s][n] = Σ_{|S|=s} (1 - η + η w(S))ⁿ, the mass of "no photon outside S".
    let mut avoid = vec![vec![0.0; n_max + 1]; n_bins + 1];
    for set in 0..n_sets {
        let size = set.count_ones() as usize;
        let w: f64 = (0..n_bins).filter(|b| set >> b & 1 == 1).map(|b| det.bin_weights[b]).sum();
        let q = 1.0 - eta + eta * w;
        let mut qn = 1.0;
        for slot in avoid[size].iter_mut() {
            *slot += qn;
            qn *= q;
        }
    }
    let occ: Vec<Vec<f64>> = (0..=n_max)
        .map(|n| {
            (0..=n_bins)
                .map(|a| {
                    (0..=a)
                        .map(|s| {
                            let sign = if (a - s) % 2 == 0 { 1.0 } else { -1.0 };
                            sign * binomial(n_bins - s, a - s) * avoid[s][n]
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(with_dark_clicks(n_bins, det.dark_click_prob, n_max, &occ))
}

/// Probability vector over click number `i = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickDistribution {
    probs: Vec<f64>,
}

impl ClickDistribution {
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("click distribution needs at least one entry"));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || *p > 1.0 + NORMALIZATION_TOL) {
            return Err(Error::invalid("click probabilities must lie in [0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid("click probabilities must sum to 1"));
        }
        Ok(ClickDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of bins implied by the vector length.
    pub fn n_bins(&self) -> usize {
        self.probs.len() - 1
    }

    /// `(c̄, Δ²c)`.
    pub fn moments(&self) -> (f64, f64) {
        crate::distributions::weighted_moments(&self.probs)
    }
}

/// `c = L · p`.
pub fn forward_clicks(p: &PhotonDistribution, det: &DetectorModel) -> ClickDistribution {
    let l = click_matrix(det, p.n_max());
    ClickDistribution { probs: l.apply(p.probs()) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    First,
    Second,
}

impl Arm {
    pub fn other(self) -> Arm {
        match self {
            Arm::First => Arm::Second,
            Arm::Second => Arm::First,
        }
    }

    /// 1 or 2.
    pub fn index(self) -> usize {
        match self {
            Arm::First => 1,
            Arm::Second => 2,
        }
    }
}

/// Event selection on one detector of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// Keep every event ("regardless of the result on the other detector").
    Unconditioned,
    Clicks(usize),
}

/// Joint click probabilities, row-major in `(i, j)` for detectors 1 and 2.
#[derive(Debug, Clone, PartialEq)]
pub struct JointClickDistribution {
    n_bins1: usize,
    n_bins2: usize,
    probs: Vec<f64>,
}

impl JointClickDistribution {
    pub fn from_probs(n_bins1: usize, n_bins2: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != (n_bins1 + 1) * (n_bins2 + 1) {
            return Err(Error::invalid("joint click grid has the wrong number of entries"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("joint click probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid("joint click probabilities must sum to 1"));
        }
        Ok(JointClickDistribution { n_bins1, n_bins2, probs })
    }

    pub fn n_bins(&self, arm: Arm) -> usize {
        match arm {
            Arm::First => self.n_bins1,
            Arm::Second => self.n_bins2,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * (self.n_bins2 + 1) + j]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal click distribution of one arm.
    pub fn marginal(&self, arm: Arm) -> ClickDistribution {
        let probs = marginal_of(&self.probs, self.n_bins1, self.n_bins2, arm);
        ClickDistribution { probs }
    }

    /// `(i, j)` entry with the most probability.
    pub fn mode(&self) -> (usize, usize) {
        let idx = self.probs.iter().enumerate().fold(0, |best, (k, p)| if *p > self.probs[best] { k } else { best });
        (idx / (self.n_bins2 + 1), idx % (self.n_bins2 + 1))
    }
}

fn marginal_of(grid: &[f64], n1: usize, n2: usize, arm: Arm) -> Vec<f64> {
    match arm {
        Arm::First => (0..=n1).map(|i| (0..=n2).map(|j| grid[i * (n2 + 1) + j]).sum()).collect(),
        Arm::Second => (0..=n2).map(|j| (0..=n1).map(|i| grid[i * (n2 + 1) + j]).sum()).collect(),
    }
}

/// Slice of a row-major grid along the arm that is *not* `conditioning`.
fn slice_of<T: Copy>(grid: &[T], n1: usize, n2: usize, conditioning: Arm, k: usize) -> Vec<T> {
    match conditioning {
        Arm::First => grid[k * (n2 + 1)..(k + 1) * (n2 + 1)].to_vec(),
        Arm::Second => (0..=n1).map(|i| grid[i * (n2 + 1) + k]).collect(),
    }
}

/// `probs(i, j) = Σ_{n,m} L1[i][n] L2[j][m] p(n, m)`.
pub fn joint_forward_clicks(
    p_joint: &JointPhotonDistribution,
    det1: &DetectorModel,
    det2: &DetectorModel,
) -> JointClickDistribution {
    let (m1, m2) = (p_joint.n_max1(), p_joint.n_max2());
    let l1 = click_matrix(det1, m1);
    let l2 = click_matrix(det2, m2);
    let (n1, n2) = (det1.n_bins(), det2.n_bins());
    // Contract the second index first: t[n][j] = Σ_m p(n, m) L2[j][m].
    let mut t = vec![0.0; (m1 + 1) * (n2 + 1)];
    for n in 0..=m1 {
        for j in 0..=n2 {
            t[n * (n2 + 1) + j] = (0..=m2).map(|m| p_joint.get(n, m) * l2.get(j, m)).sum();
        }
    }
    let mut probs = vec![0.0; (n1 + 1) * (n2 + 1)];
    for i in 0..=n1 {
        for j in 0..=n2 {
            probs[i * (n2 + 1) + j] = (0..=m1).map(|n| l1.get(i, n) * t[n * (n2 + 1) + j]).sum();
        }
    }
    JointClickDistribution { n_bins1: n1, n_bins2: n2, probs }
}

/// Click distribution of the arm opposite `conditioning`, given `condition`
/// on `conditioning`, together with the probability of the condition.
pub fn condition_on_clicks(
    joint: &JointClickDistribution,
    conditioning: Arm,
    condition: Condition,
) -> Result<(ClickDistribution, f64)> {
    let (n1, n2) = (joint.n_bins1, joint.n_bins2);
    let weights = match condition {
        Condition::Unconditioned => return Ok((joint.marginal(conditioning.other()), 1.0)),
        Condition::Clicks(k) => {
            if k > joint.n_bins(conditioning) {
                return Err(Error::invalid("conditioning click number exceeds the bin count"));
            }
            slice_of(&joint.probs, n1, n2, conditioning, k)
        }
    };
    let probability: f64 = weights.iter().sum();
    if probability < DEGENERATE_PROB {
        return Err(Error::DegenerateConditioning { probability });
    }
    let probs = weights.into_iter().map(|w| w / probability).collect();
    Ok((ClickDistribution { probs }, probability))
}

/// Histogram of events over click number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRecord {
    counts: Vec<u64>,
}

impl CountRecord {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::invalid("count record needs at least one entry"));
        }
        Ok(CountRecord { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_events(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn frequencies(&self) -> Result<ClickDistribution> {
        let total = self.total_events();
        if total == 0 {
            return Err(Error::UndefinedWitness("count record holds no events"));
        }
        let probs = self.counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(ClickDistribution { probs })
    }
}

/// Joint histogram over `(i, j)` click pairs, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCountRecord {
    n_bins1: usize,
    n_bins2: usize,
    counts: Vec<u64>,
}

impl JointCountRecord {
    pub fn new(n_bins1: usize, n_bins2: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != (n_bins1 + 1) * (n_bins2 + 1) {
            return Err(Error::invalid("joint count grid has the wrong number of entries"));
        }
        Ok(JointCountRecord { n_bins1, n_bins2, counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * (self.n_bins2 + 1) + j]
    }

    pub fn total_events(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts on the arm opposite `conditioning` for the selected events.
    pub fn condition(&self, conditioning: Arm, condition: Condition) -> Result<CountRecord> {
        let (n1, n2) = (self.n_bins1, self.n_bins2);
        let counts = match condition {
            Condition::Unconditioned => {
                let other = conditioning.other();
                let n = if other == Arm::First { n1 } else { n2 };
                (0..=n)
                    .map(|x| match other {
                        Arm::First => (0..=n2).map(|j| self.get(x, j)).sum(),
                        Arm::Second => (0..=n1).map(|i| self.get(i, x)).sum(),
                    })
                    .collect()
            }
            Condition::Clicks(k) => {
                let limit = if conditioning == Arm::First { n1 } else { n2 };
                if k > limit {
                    return Err(Error::invalid("conditioning click number exceeds the bin count"));
                }
                slice_of(&self.counts, n1, n2, conditioning, k)
            }
        };
        CountRecord::new(counts)
    }
}

fn poisson_draw<R: rand_core::RngCore>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only rejects non-positive or non-finite means.
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Independent Poisson counts with means `expected_total · c_i`.
pub fn sample_counts(c: &ClickDistribution, expected_total: f64, seed: u64) -> Result<CountRecord> {
    if !(expected_total > 0.0) || !expected_total.is_finite() {
        return Err(Error::invalid("expected total must be positive"));
    }
    let mut rng = stream_rng(seed, 0);
    let counts = c.probs.iter().map(|p| poisson_draw(expected_total * p, &mut rng)).collect();
    CountRecord::new(counts)
}

pub fn sample_joint_counts(j: &JointClickDistribution, expected_total: f64, seed: u64) -> Result<JointCountRecord> {
    if !(expected_total > 0.0) || !expected_total.is_finite() {
        return Err(Error::invalid("expected total must be positive"));
    }
    let mut rng = stream_rng(seed, 0);
    let counts = j.probs.iter().map(|p| poisson_draw(expected_total * p, &mut rng)).collect();
    JointCountRecord::new(j.n_bins1, j.n_bins2, counts)
}

pub(crate) fn resample_poisson<R: rand_core::RngCore>(counts: &[u64], rng: &mut R) -> Vec<u64> {
    counts.iter().map(|&c| poisson_draw(c as f64, rng)).collect()
}
