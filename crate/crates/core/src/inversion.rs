//! Recovery of photon statistics from click statistics.
//!
//! Two estimators of `p` from `c ≈ L p`:
//! plain least squares through the pseudo-inverse (may go negative), and
//! least squares over the probability simplex (`p ≥ 0`, `Σp = 1`) solved
//! exactly by a primal active-set method.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::detector::{click_matrix, ClickDistribution, CountRecord, DetectorModel};
use crate::distributions::PhotonDistribution;
use crate::error::{Error, Result};
use crate::witnesses::{poisson_bootstrap, q_mandel, WitnessEstimate};

pub const MAX_CONDITION_NUMBER: f64 = 1e12;
const KKT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InversionMethod {
    PseudoInverse,
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InversionWarning {
    /// Some recovered entries are negative.
    NegativeEntries,
    /// Recovered entries do not sum to one.
    NotNormalized,
    /// The active-set iteration stopped before the optimality test passed.
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionReport {
    pub probs: Vec<f64>,
    /// `‖L p − c‖₂`.
    pub residual_norm: f64,
    pub condition_number: f64,
    pub warnings: Vec<InversionWarning>,
}

impl InversionReport {
    /// The recovered vector as a distribution, clipping negatives and
    /// renormalizing when the pseudo-inverse produced them.
    pub fn distribution(&self) -> Result<PhotonDistribution> {
        PhotonDistribution::normalized(self.probs.iter().map(|p| p.max(0.0)).collect())
    }
}

/// Click matrix of one detector with its factorizations, reusable across
/// many right-hand sides.
#[derive(Debug, Clone)]
pub struct Inverter {
    n_bins: usize,
    matrix: DMatrix<f64>,
    gram: DMatrix<f64>,
    pseudo_inverse: DMatrix<f64>,
    condition_number: f64,
}

impl Inverter {
    pub fn new(det: &DetectorModel, n_max: usize) -> Result<Self> {
        let l = click_matrix(det, n_max);
        let rows = det.n_bins() + 1;
        let cols = n_max + 1;
        let matrix = DMatrix::from_fn(rows, cols, |i, n| l.get(i, n));
        let condition_number = if cols > rows {
            f64::INFINITY
        } else {
            let sv = matrix.clone().svd(false, false).singular_values;
            let hi = sv.iter().copied().fold(0.0, f64::max);
            let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
            if lo > 0.0 {
                hi / lo
            } else {
                f64::INFINITY
            }
        };
        if !(condition_number <= MAX_CONDITION_NUMBER) {
            return Err(Error::IllConditionedInversion { condition_number });
        }
        let pseudo_inverse =
            matrix.clone().pseudo_inverse(0.0).map_err(|_| Error::IllConditionedInversion { condition_number })?;
        let gram = matrix.transpose() * &matrix;
        Ok(Inverter { n_bins: det.n_bins(), matrix, gram, pseudo_inverse, condition_number })
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn n_max(&self) -> usize {
        self.matrix.ncols() - 1
    }

    pub fn invert(&self, c: &ClickDistribution, method: InversionMethod) -> Result<InversionReport> {
        if c.n_bins() != self.n_bins {
            return Err(Error::invalid("click distribution does not match the detector bin count"));
        }
        let rhs = DVector::from_column_slice(c.probs());
        let mut warnings = Vec::new();
        let p = match method {
            InversionMethod::PseudoInverse => &self.pseudo_inverse * &rhs,
            InversionMethod::Constrained => {
                let b = self.matrix.transpose() * &rhs;
                let (p, converged) = simplex_least_squares(&self.gram, &b);
                if !converged {
                    warnings.push(InversionWarning::NotConverged);
                }
                p
            }
        };
        if p.iter().any(|x| *x < 0.0) {
            warnings.push(InversionWarning::NegativeEntries);
        }
        if (p.sum() - 1.0).abs() > 1e-9 {
            warnings.push(InversionWarning::NotNormalized);
        }
        let residual_norm = (&self.matrix * &p - &rhs).norm();
        Ok(InversionReport {
            probs: p.iter().copied().collect(),
            residual_norm,
            condition_number: self.condition_number,
            warnings,
        })
    }
}

/// Estimates photon statistics up to `n_max` from click statistics.
pub fn invert_clicks(
    c: &ClickDistribution,
    det: &DetectorModel,
    n_max: usize,
    method: InversionMethod,
) -> Result<InversionReport> {
    Inverter::new(det, n_max)?.invert(c, method)
}

/// Minimizes `½ pᵀ H p − bᵀ p` over the probability simplex.
///
/// Primal active set: the working set holds coordinates pinned at zero; each
/// step solves the equality-constrained problem on the free coordinates via
/// its KKT system, then either moves to the blocking bound or releases the
/// bound with the most negative multiplier. Terminates at the exact optimum
/// (to rounding) for positive-definite `H`.
fn simplex_least_squares(h: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let n = b.len();
    let mut p = DVector::from_element(n, 1.0 / n as f64);
    let mut pinned = vec![false; n];
    let max_iter = 50 * n + 50;
    for _ in 0..max_iter {
        let free: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
        let Some((x_free, nu)) = solve_equality_qp(h, b, &free) else {
            return (p, false);
        };
        let mut target = DVector::zeros(n);
        for (k, &i) in free.iter().enumerate() {
            target[i] = x_free[k];
        }
        if free.iter().all(|&i| target[i] >= 0.0) {
            p = target;
            let grad = h * &p - b;
            let release = (0..n)
                .filter(|&j| pinned[j])
                .map(|j| (j, grad[j] + nu))
                .filter(|&(_, mult)| mult < -KKT_TOLERANCE)
                .fold(None, |best: Option<(usize, f64)>, cur| match best {
                    Some(b) if b.1 <= cur.1 => Some(b),
                    _ => Some(cur),
                });
            match release {
                Some((j, _)) => pinned[j] = false,
                None => return (p, true),
            }
        } else {
            let d = &target - &p;
            let (alpha, block) = free
                .iter()
                .filter(|&&i| d[i] < 0.0)
                .map(|&i| (p[i] / -d[i], i))
                .fold((1.0, usize::MAX), |acc, cur| if cur.0 < acc.0 { cur } else { acc });
            p += d * alpha;
            if block != usize::MAX {
                pinned[block] = true;
                p[block] = 0.0;
            }
            for &i in &free {
                if p[i] < 0.0 {
                    p[i] = 0.0;
                    pinned[i] = true;
                }
            }
        }
    }
    (p, false)
}

/// `argmin ½ xᵀ H_FF x − b_Fᵀ x` subject to `Σ x = 1`, with its multiplier.
fn solve_equality_qp(h: &DMatrix<f64>, b: &DVector<f64>, free: &[usize]) -> Option<(DVector<f64>, f64)> {
    let f = free.len();
    if f == 0 {
        return None;
    }
    let mut kkt = DMatrix::zeros(f + 1, f + 1);
    let mut rhs = DVector::zeros(f + 1);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            kkt[(r, c)] = h[(i, j)];
        }
        kkt[(r, f)] = 1.0;
        kkt[(f, r)] = 1.0;
        rhs[r] = b[i];
    }
    rhs[f] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some((sol.rows(0, f).into_owned(), sol[f]))
}

/// `Q_M` of the photon statistics recovered from a count record, with
/// Poisson-bootstrap errors that redo the constrained inversion per replica.
pub fn q_mandel_from_clicks(
    r: &CountRecord,
    det: &DetectorModel,
    n_max: usize,
    n_replicas: usize,
    seed: u64,
) -> Result<WitnessEstimate> {
    let inverter = Inverter::new(det, n_max)?;
    poisson_bootstrap(r.counts(), n_replicas, seed, |counts| mandel_of_counts(&inverter, counts))
}

pub(crate) fn mandel_of_counts(inverter: &Inverter, counts: &[u64]) -> Result<f64> {
    let freqs = CountRecord::new(counts.to_vec())?.frequencies()?;
    let report = inverter.invert(&freqs, InversionMethod::Constrained)?;
    q_mandel(&report.distribution()?)
}
