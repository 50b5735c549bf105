#![allow(dead_code)]

use dwtnnr::{DenseMatrix, MaskedMatrix, ObservationMask};
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

pub fn coin_mask(m: usize, n: usize, p_missing: f64, seed: u64) -> ObservationMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ObservationMask::from_fn(m, n, |_, _| rng.random::<f64>() >= p_missing)
}

pub fn masked(full: &DenseMatrix, mask: &ObservationMask) -> MaskedMatrix {
    MaskedMatrix::new(full, mask.clone()).unwrap()
}

/// Full `m × m` left factor from the eigenvectors of `X Xᵀ`, sorted by
/// descending eigenvalue, plus the padded/trimmed right factor built from
/// `v_i = Xᵀ u_i / σ_i`.
///
/// Returns `(A, B, sigma)` with `A` of shape `m × m` and `B` of shape `m × n`;
/// rows of `B` past `min(m, n)` are zero.
pub fn full_factors(x: &DenseMatrix) -> (DenseMatrix, DenseMatrix, Vec<f64>) {
    let (m, n) = x.shape();
    let s = m.min(n);
    let eig = SymmetricEigen::new(x * x.transpose());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut a = DenseMatrix::zeros(m, m);
    let mut b = DenseMatrix::zeros(m, n);
    let mut sigma = Vec::with_capacity(s);
    for (row, &k) in order.iter().enumerate() {
        let u = eig.eigenvectors.column(k);
        a.row_mut(row).copy_from(&u.transpose());
        if row < s {
            let sv = eig.eigenvalues[k].max(0.0).sqrt();
            sigma.push(sv);
            let v = x.transpose() * u / sv;
            b.row_mut(row).copy_from(&v.transpose());
        }
    }
    (a, b, sigma)
}

/// `Σ_{i<r} a_iᵀ b_i` over rows of the padded factors.
pub fn leading_outer(a: &DenseMatrix, b: &DenseMatrix, r: usize) -> DenseMatrix {
    a.rows(0, r).transpose() * b.rows(0, r)
}

pub fn max_abs(x: &DenseMatrix) -> f64 {
    x.amax()
}

/// `max |a − b| / max |b|`
pub fn max_rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}

/// `‖(a − b)_{Ωᶜ}‖_F / ‖b_{Ωᶜ}‖_F`
pub fn missing_rel_err(a: &DenseMatrix, b: &DenseMatrix, mask: &ObservationMask) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, j) in mask.missing_indices() {
        num += (a[(i, j)] - b[(i, j)]).powi(2);
        den += b[(i, j)].powi(2);
    }
    (num / den).sqrt()
}

/// Bitwise check that `x` matches the observed data on Ω.
pub fn agrees_on_observed(x: &DenseMatrix, m: &MaskedMatrix) -> bool {
    let (rows, cols) = m.shape();
    (0..rows).all(|i| {
        (0..cols).all(|j| {
            !m.mask().is_observed(i, j) || x[(i, j)].to_bits() == m.data()[(i, j)].to_bits()
        })
    })
}
