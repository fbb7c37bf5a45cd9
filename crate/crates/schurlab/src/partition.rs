//! Smooth partitions of unity subordinate to the dominance covers.
//!
//! On the sphere in R^k, chart l is the set where every coordinate is
//! strictly smaller than twice the l-th one in absolute value. The charts
//! for l = 1..k cover everything but the origin: the largest coordinate
//! always dominates. The weight of chart l is a smooth cutoff applied to
//! the ratio (smoothed max of |xi_b|) / (2 |xi_l|), and the partition
//! normalizes the weights. The smoothed max is a log-sum-exp upper bound
//! on the true max, so each weight vanishes identically outside its chart
//! and the support condition holds exactly, not just approximately.
//!
//! Pulled back along the consecutive-difference map Q_I, the same family
//! partitions unity on the complement of the diagonal where all
//! coordinates indexed by I agree. Chart l of the pullback is attached to
//! the l-th element of I above its minimum.

use crate::divdiff::NODE_CLASH_TOL;
use thiserror::Error;

/// Sharpness of the log-sum-exp smoothing of the max. With weights built
/// from the normalized input, the denominator of the partition stays
/// bounded away from zero as long as sqrt(k) ln(2k) < beta/2; 64 leaves
/// room up to k around 40.
const LSE_SHARPNESS: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("evaluation point is on the diagonal of the index set")]
    OnDiagonal,
    #[error("index {0} is not a chart label of the index set")]
    BadIndex(usize),
}

/// Smooth step: 0 for x <= 0, 1 for x >= 1, strictly increasing between,
/// with all derivatives vanishing at both ends.
pub(crate) fn smooth_step(x: f64) -> f64 {
    fn h(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    let a = h(x);
    let b = h(1.0 - x);
    if a == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Cutoff profile: 1 on [0, 3/4], 0 on [1, inf), smooth and monotone.
fn cutoff(t: f64) -> f64 {
    smooth_step(4.0 * (1.0 - t))
}

/// Partition of unity on the unit sphere of R^k (extended to R^k minus the
/// origin by 0-homogeneity), subordinate to the dominance charts
/// `|xi_b| < 2 |xi_l| for all b`.
#[derive(Debug, Clone)]
pub struct SpherePartition {
    k: usize,
}

impl SpherePartition {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Strict chart membership, the epsilon = 1 dominance condition.
    pub fn in_chart(&self, l: usize, xi: &[f64]) -> bool {
        assert_eq!(xi.len(), self.k);
        assert!(l >= 1 && l <= self.k, "chart labels are 1..=k");
        let cap = 2.0 * xi[l - 1].abs();
        xi.iter().all(|x| x.abs() < cap)
    }

    /// All chart weights at once; they sum to 1 for xi != 0.
    pub fn weights(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.k);
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm > 0.0, "partition undefined at the origin");
        let unit: Vec<f64> = xi.iter().map(|x| x / norm).collect();
        // Upper log-sum-exp bound on max |xi_b|; normalized input keeps the
        // exponents in [-beta, beta] so no rescaling is needed.
        let beta = LSE_SHARPNESS;
        let smax = unit
            .iter()
            .map(|x| (beta * x).exp() + (-beta * x).exp())
            .sum::<f64>()
            .ln()
            / beta;
        let raw: Vec<f64> = unit
            .iter()
            .map(|x| {
                let a = x.abs();
                if a == 0.0 {
                    0.0
                } else {
                    cutoff(smax / (2.0 * a))
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        debug_assert!(total > 0.0, "cover property violated");
        raw.iter().map(|w| w / total).collect()
    }

    /// Weight of chart l at xi, in [0, 1].
    pub fn eval(&self, l: usize, xi: &[f64]) -> f64 {
        assert!(l >= 1 && l <= self.k, "chart labels are 1..=k");
        self.weights(xi)[l - 1]
    }
}

/// The dominance partition on the sphere in R^k.
pub fn sphere_partition(k: usize) -> SpherePartition {
    assert!(k >= 1);
    SpherePartition { k }
}

/// Consecutive differences of the coordinates of `lambda` selected by the
/// sorted index set: component l-1 is lambda[i_l] - lambda[i_{l-1}].
pub fn q_map(index_set: &[usize], lambda: &[f64]) -> Vec<f64> {
    debug_assert!(index_set.windows(2).all(|w| w[0] < w[1]), "index set must be sorted");
    index_set.windows(2).map(|w| lambda[w[1]] - lambda[w[0]]).collect()
}

/// One chart of the pullback cover on R^{n+1}: the region where the
/// difference coordinate attached to `member` dominates.
#[derive(Debug, Clone)]
pub struct CoverChart {
    index_set: Vec<usize>,
    l: usize,
}

impl CoverChart {
    /// `member` must be an element of the sorted index set other than its
    /// minimum; charts are labeled by those elements.
    pub fn new(index_set: &[usize], member: usize) -> Result<Self, PartitionError> {
        let l = chart_position(index_set, member)?;
        Ok(Self { index_set: index_set.to_vec(), l })
    }

    pub fn q(&self, lambda: &[f64]) -> Vec<f64> {
        q_map(&self.index_set, lambda)
    }

    /// Strict membership in U_{I,i_l} (epsilon = 1).
    pub fn membership(&self, lambda: &[f64]) -> bool {
        let q = self.q(lambda);
        let cap = 2.0 * q[self.l - 1].abs();
        q.iter().all(|x| x.abs() < cap)
    }
}

fn chart_position(index_set: &[usize], member: usize) -> Result<usize, PartitionError> {
    match index_set.iter().position(|&x| x == member) {
        Some(0) | None => Err(PartitionError::BadIndex(member)),
        Some(p) => Ok(p),
    }
}

fn diagonal_guard(index_set: &[usize], lambda: &[f64], q: &[f64]) -> Result<(), PartitionError> {
    let scale = index_set.iter().map(|&i| lambda[i].abs()).fold(0.0f64, f64::max);
    let spread = q.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    if spread <= NODE_CLASH_TOL * (1.0 + scale) {
        return Err(PartitionError::OnDiagonal);
    }
    Ok(())
}

/// theta_{I,i}(lambda): weight of the chart attached to `member` in the
/// pullback partition. The family over all admissible members sums to 1
/// away from the diagonal of the index set.
pub fn theta_eval(index_set: &[usize], member: usize, lambda: &[f64]) -> Result<f64, PartitionError> {
    let l = chart_position(index_set, member)?;
    let q = q_map(index_set, lambda);
    diagonal_guard(index_set, lambda, &q)?;
    Ok(sphere_partition(q.len()).eval(l, &q))
}

/// All pullback weights at once, ordered by the chart labels (the index
/// set minus its minimum, ascending).
pub fn theta_all(index_set: &[usize], lambda: &[f64]) -> Result<Vec<f64>, PartitionError> {
    let q = q_map(index_set, lambda);
    diagonal_guard(index_set, lambda, &q)?;
    Ok(sphere_partition(q.len()).weights(&q))
}
