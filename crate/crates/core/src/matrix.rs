//! Dense matrices, observation masks and the SVD pieces every solver step needs.
//!
//! A completion problem is a [`MaskedMatrix`]: the observed values `M_Ω` (zero
//! elsewhere) together with the [`ObservationMask`] `Ω`. Each solver step takes
//! a thin SVD of the current iterate, splits the singular vectors at the
//! truncation count `r`, and moves along the trailing outer-product sum
//! `Φᵀ·Λ = Σ_{i>r} u_i v_iᵀ` (see [`residual_gradient`]).

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Real matrix in `f64`. Solvers work on the `[0, 255]` pixel scale without normalization.
pub type DenseMatrix = DMatrix<f64>;

/// Builds a matrix from row-major entries.
pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::domain("matrix dimensions must be positive"));
    }
    if entries.len() != rows * cols {
        return Err(Error::domain(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, entries))
}

pub(crate) fn ensure_finite(x: &DenseMatrix, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} contains non-finite entries")))
    }
}

/// Which entries of an `rows × cols` matrix are observed (`Ω`) and which are missing (`Ωᶜ`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    // row-major
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn new(rows: usize, cols: usize, observed: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain("mask dimensions must be positive"));
        }
        if observed.len() != rows * cols {
            return Err(Error::domain(format!(
                "mask needs {} flags, got {}",
                rows * cols,
                observed.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            observed,
        })
    }

    pub fn all_observed(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            observed: vec![true; rows * cols],
        }
    }

    pub fn all_missing(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            observed: vec![false; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut observed = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                observed.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            observed,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, observed: bool) {
        self.observed[i * self.cols + j] = observed;
    }

    /// Row-major observation flags.
    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }

    /// `|Ω|`
    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// `|Ωᶜ|`
    pub fn missing_count(&self) -> usize {
        self.observed.len() - self.observed_count()
    }

    /// Iterates `(i, j)` over the missing entries in row-major order.
    pub fn missing_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &o)| !o)
            .map(move |(k, _)| (k / cols, k % cols))
    }

    pub(crate) fn check_shape(&self, rows: usize, cols: usize, what: &str) -> Result<()> {
        if self.shape() == (rows, cols) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{what} is {rows}x{cols} but the mask is {}x{}",
                self.rows, self.cols
            )))
        }
    }
}

/// The problem instance `(M_Ω, Ω)`. Data is exactly zero wherever the mask is false.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    data: DenseMatrix,
    mask: ObservationMask,
}

impl MaskedMatrix {
    /// Masks `full`, zeroing every unobserved entry.
    pub fn new(full: &DenseMatrix, mask: ObservationMask) -> Result<Self> {
        mask.check_shape(full.nrows(), full.ncols(), "matrix")?;
        let mut data = full.clone();
        for i in 0..data.nrows() {
            for j in 0..data.ncols() {
                if !mask.is_observed(i, j) {
                    data[(i, j)] = 0.0;
                }
            }
        }
        ensure_observed_finite(&data, &mask)?;
        Ok(Self { data, mask })
    }

    /// Accepts already-masked data, rejecting nonzero values at missing positions.
    pub fn from_parts(data: DenseMatrix, mask: ObservationMask) -> Result<Self> {
        mask.check_shape(data.nrows(), data.ncols(), "matrix")?;
        for (i, j) in mask.missing_indices() {
            if data[(i, j)] != 0.0 {
                return Err(Error::domain(format!(
                    "entry ({i}, {j}) is unobserved but holds {}",
                    data[(i, j)]
                )));
            }
        }
        ensure_observed_finite(&data, &mask)?;
        Ok(Self { data, mask })
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.data
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mask.shape()
    }

    /// `‖M_Ω‖_F`
    pub fn observed_norm(&self) -> f64 {
        self.data.norm()
    }
}

fn ensure_observed_finite(data: &DenseMatrix, mask: &ObservationMask) -> Result<()> {
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            if mask.is_observed(i, j) && !data[(i, j)].is_finite() {
                return Err(Error::domain(format!(
                    "observed entry ({i}, {j}) is not finite"
                )));
            }
        }
    }
    Ok(())
}

/// Thin SVD `X = U·diag(σ)·Vᵀ` with `s = min(m, n)` columns in `U` and `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `m × s`, orthonormal columns.
    pub u: DenseMatrix,
    /// Non-increasing, non-negative.
    pub singular_values: DVector<f64>,
    /// `n × s`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdFactors {
    /// `s = min(m, n)`
    pub fn rank_capacity(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (mut col, &sigma) in us.column_iter_mut().zip(self.singular_values.iter()) {
            col *= sigma;
        }
        us * self.v.transpose()
    }
}

const SVD_EPS: f64 = f64::EPSILON;
const SVD_MAX_ITERS: usize = 10_000;

/// Thin SVD with singular values sorted non-increasing.
///
/// Non-finite input is a domain error; a non-converging decomposition is a
/// numerical error rather than silently wrong factors.
pub fn svd_thin(x: &DenseMatrix) -> Result<SvdFactors> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::domain("cannot decompose an empty matrix"));
    }
    ensure_finite(x, "SVD input")?;
    let svd = SVD::try_new(x.clone(), true, true, SVD_EPS, SVD_MAX_ITERS).ok_or_else(|| {
        Error::Numerical {
            iteration: None,
            message: format!(
                "SVD of a {}x{} matrix did not converge",
                x.nrows(),
                x.ncols()
            ),
        }
    })?;
    let u = svd.u.expect("left singular vectors requested");
    let v = svd
        .v_t
        .expect("right singular vectors requested")
        .transpose();
    Ok(SvdFactors {
        u,
        singular_values: svd.singular_values,
        v,
    })
}

/// Singular vectors split at the truncation count `r`.
///
/// Rows of `c`/`d` are the leading `r` left/right singular vectors; rows of
/// `phi`/`lambda` are the remaining `s − r`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFactors {
    pub r: usize,
    /// `r × m`
    pub c: DenseMatrix,
    /// `r × n`
    pub d: DenseMatrix,
    /// `(s − r) × m`
    pub phi: DenseMatrix,
    /// `(s − r) × n`
    pub lambda: DenseMatrix,
}

impl TruncatedFactors {
    pub fn rows(&self) -> usize {
        self.c.ncols()
    }

    pub fn cols(&self) -> usize {
        self.d.ncols()
    }

    /// `Cᵀ·D = Σ_{i≤r} u_i v_iᵀ`
    pub fn leading_product(&self) -> DenseMatrix {
        self.c.transpose() * &self.d
    }

    /// `AᵀB = Cᵀ·D + Φᵀ·Λ = Σ_{i≤s} u_i v_iᵀ`, built without the padded `B`.
    pub fn full_product(&self) -> DenseMatrix {
        self.leading_product() + residual_gradient(self)
    }
}

pub fn truncate(f: &SvdFactors, r: usize) -> Result<TruncatedFactors> {
    let s = f.rank_capacity();
    if r > s {
        return Err(Error::Range {
            what: "truncation count r",
            value: r,
            allowed: format!("0..={s}"),
        });
    }
    let ut = f.u.transpose();
    let vt = f.v.transpose();
    Ok(TruncatedFactors {
        r,
        c: ut.rows(0, r).into_owned(),
        d: vt.rows(0, r).into_owned(),
        phi: ut.rows(r, s - r).into_owned(),
        lambda: vt.rows(r, s - r).into_owned(),
    })
}

/// `Φᵀ·Λ = Σ_{i=r+1}^{s} u_i v_iᵀ`, the gradient of the truncated trace surrogate.
/// Zero when `r = s`.
pub fn residual_gradient(t: &TruncatedFactors) -> DenseMatrix {
    t.phi.transpose() * &t.lambda
}

/// Observed entries from `m`, everything else from `x`. A pure copy, no arithmetic.
pub fn project_observed(x: &DenseMatrix, m: &MaskedMatrix) -> Result<DenseMatrix> {
    let mut out = x.clone();
    project_observed_in_place(&mut out, m)?;
    Ok(out)
}

pub fn project_observed_in_place(x: &mut DenseMatrix, m: &MaskedMatrix) -> Result<()> {
    m.mask().check_shape(x.nrows(), x.ncols(), "iterate")?;
    let mask = m.mask();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            if mask.is_observed(i, j) {
                x[(i, j)] = m.data()[(i, j)];
            }
        }
    }
    Ok(())
}

/// `‖X‖_* = Σ σ_i`
pub fn nuclear_norm(x: &DenseMatrix) -> Result<f64> {
    Ok(svd_thin(x)?.singular_values.sum())
}

/// `trace(C·X·Dᵀ)` for `C` of shape `r × m` and `D` of shape `r × n`.
pub fn trace_surrogate(x: &DenseMatrix, c: &DenseMatrix, d: &DenseMatrix) -> Result<f64> {
    let (m, n) = x.shape();
    if c.ncols() != m || d.ncols() != n || c.nrows() != d.nrows() {
        return Err(Error::domain(format!(
            "trace surrogate needs C: r x {m} and D: r x {n}, got {}x{} and {}x{}",
            c.nrows(),
            c.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    // Σ_k c_kᵀ X d_k without forming C X Dᵀ
    let xd = x * d.transpose();
    Ok((0..c.nrows())
        .map(|k| c.row(k).transpose().dot(&xd.column(k)))
        .sum())
}
