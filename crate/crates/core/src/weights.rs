//! Row and column weights derived from how many entries each row/column observes.
//!
//! A row with `N` of its `n` entries observed gets weight
//! `p = exp(−θ₁ (N/n − 1)) − 1`, so fully observed rows get exactly zero and
//! emptier rows get larger weights, up to `e^{θ₁} − 1`. Columns use `θ₂`
//! the same way. The weights are stored as vectors and applied as row/column
//! scalings; the diagonal matrices are never built.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, ObservationMask};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationCounts {
    /// Observed entries per row, `0 ≤ N^r_i ≤ n`.
    pub row_counts: Vec<usize>,
    /// Observed entries per column, `0 ≤ N^c_j ≤ m`.
    pub col_counts: Vec<usize>,
}

pub fn observation_counts(mask: &ObservationMask) -> ObservationCounts {
    let (m, n) = mask.shape();
    let mut row_counts = vec![0; m];
    let mut col_counts = vec![0; n];
    for i in 0..m {
        for j in 0..n {
            if mask.is_observed(i, j) {
                row_counts[i] += 1;
                col_counts[j] += 1;
            }
        }
    }
    ObservationCounts {
        row_counts,
        col_counts,
    }
}

/// Diagonals of the row weight matrix `𝒫 = diag(p)` and column weight matrix `𝒬 = diag(q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVectors {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Zero for [`WeightVectors::unit`].
    pub theta1: f64,
    pub theta2: f64,
}

impl WeightVectors {
    /// `p ≡ 1`, `q ≡ 1`: the unweighted baseline.
    pub fn unit(m: usize, n: usize) -> Self {
        Self {
            p: vec![1.0; m],
            q: vec![1.0; n],
            theta1: 0.0,
            theta2: 0.0,
        }
    }

    pub fn rows(&self) -> usize {
        self.p.len()
    }

    pub fn cols(&self) -> usize {
        self.q.len()
    }

    /// `‖𝒫‖_F`
    pub fn p_norm(&self) -> f64 {
        self.p.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖𝒬‖_F`
    pub fn q_norm(&self) -> f64 {
        self.q.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `𝒫·G·𝒬`, scaling row `i` by `p_i` and column `j` by `q_j`.
    pub fn apply(&self, g: &DenseMatrix) -> DenseMatrix {
        scale_rows_cols(g, &self.p, &self.q)
    }
}

pub(crate) fn scale_rows_cols(g: &DenseMatrix, rows: &[f64], cols: &[f64]) -> DenseMatrix {
    debug_assert_eq!(g.shape(), (rows.len(), cols.len()));
    DenseMatrix::from_fn(g.nrows(), g.ncols(), |i, j| rows[i] * g[(i, j)] * cols[j])
}

pub fn exponential_weights(
    counts: &ObservationCounts,
    theta1: f64,
    theta2: f64,
) -> Result<WeightVectors> {
    if !(theta1 > 0.0 && theta1.is_finite()) || !(theta2 > 0.0 && theta2.is_finite()) {
        return Err(Error::config(format!(
            "weight scales must be positive, got theta1={theta1}, theta2={theta2}"
        )));
    }
    let m = counts.row_counts.len();
    let n = counts.col_counts.len();
    let law = |count: usize, len: usize, theta: f64| {
        if count == len {
            return 0.0;
        }
        let frac = count as f64 / len as f64;
        (-theta * (frac - 1.0)).exp_m1()
    };
    Ok(WeightVectors {
        p: counts
            .row_counts
            .iter()
            .map(|&c| law(c, n, theta1))
            .collect(),
        q: counts
            .col_counts
            .iter()
            .map(|&c| law(c, m, theta2))
            .collect(),
        theta1,
        theta2,
    })
}

/// `γ = ‖𝒫‖_F (√m + √r) ‖𝒬‖_F`, the per-step change bound constant.
///
/// `m` is the row count of the problem. This is the constant as used by the
/// iteration lower bound; [`weight_gamma_tight`] gives the sharper value.
pub fn weight_gamma(w: &WeightVectors, m: usize, r: usize) -> f64 {
    w.p_norm() * ((m as f64).sqrt() + (r as f64).sqrt()) * w.q_norm()
}

/// `‖𝒫‖_F √(s − r) ‖𝒬‖_F`, using `‖ΦᵀΛ‖_F = √(s − r)` exactly. Diagnostic only.
pub fn weight_gamma_tight(w: &WeightVectors, s: usize, r: usize) -> f64 {
    w.p_norm() * (s.saturating_sub(r) as f64).sqrt() * w.q_norm()
}

/// `𝒲`: `p_i q_j` at missing entries, zero at observed ones.
pub fn weight_visualization(w: &WeightVectors, mask: &ObservationMask) -> Result<DenseMatrix> {
    mask.check_shape(w.rows(), w.cols(), "weight vectors")?;
    Ok(DenseMatrix::from_fn(w.rows(), w.cols(), |i, j| {
        if mask.is_observed(i, j) {
            0.0
        } else {
            w.p[i] * w.q[j]
        }
    }))
}
