//! Seeded synthetic low-rank matrices and a rank-1 completion reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MaskedMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    /// Target range is `[0, scale]`.
    pub scale: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(m: usize, n: usize, rank: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            rank,
            scale: 255.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSample {
    /// Affinely rescaled onto `[0, scale]`.
    pub data: DenseMatrix,
    /// The factor product before rescaling, rank `≤ rank`.
    pub raw: DenseMatrix,
    /// The affine shift adds at most one to the rank.
    pub rank_bound: usize,
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    // row-major draw order so the stream does not depend on storage layout
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        entries.push(rng.sample::<f64, _>(StandardNormal));
    }
    DenseMatrix::from_row_slice(rows, cols, &entries)
}

fn check_dims(spec: &SynthSpec) -> Result<()> {
    if spec.m == 0 || spec.n == 0 {
        return Err(Error::domain("matrix dimensions must be positive"));
    }
    let s = spec.m.min(spec.n);
    if spec.rank == 0 || spec.rank > s {
        return Err(Error::Range {
            what: "rank",
            value: spec.rank,
            allowed: format!("1..={s}"),
        });
    }
    if !(spec.scale > 0.0 && spec.scale.is_finite()) {
        return Err(Error::domain("scale must be positive"));
    }
    Ok(())
}

/// `U·V` with standard-normal `m × rank` and `rank × n` factors, mapped affinely onto `[0, scale]`.
pub fn make_low_rank(spec: &SynthSpec) -> Result<LowRankSample> {
    check_dims(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u = gaussian(spec.m, spec.rank, &mut rng);
    let v = gaussian(spec.rank, spec.n, &mut rng);
    let raw = &u * &v;
    let (lo, hi) = (raw.min(), raw.max());
    let data = if hi > lo {
        raw.map(|x| (x - lo) / (hi - lo) * spec.scale)
    } else {
        DenseMatrix::zeros(spec.m, spec.n)
    };
    Ok(LowRankSample {
        data,
        raw,
        rank_bound: (spec.rank + 1).min(spec.m.min(spec.n)),
    })
}

/// `|u|·|v|ᵀ` scaled so the largest entry equals `scale`. Exactly rank 1 and nonnegative.
pub fn make_rank_one(m: usize, n: usize, scale: f64, seed: u64) -> Result<DenseMatrix> {
    check_dims(&SynthSpec {
        m,
        n,
        rank: 1,
        scale,
        seed,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = gaussian(m, 1, &mut rng).abs();
    let v = gaussian(1, n, &mut rng).abs();
    let raw = &u * &v;
    let peak = raw.max();
    if peak == 0.0 {
        return Err(Error::domain("degenerate rank-1 draw"));
    }
    Ok(raw * (scale / peak))
}

/// Best rank-1 fit `u vᵀ` to the observed entries, filled in everywhere.
///
/// Alternating least squares over the observed entries until the relative
/// change drops below `1e-12`. The answer is unique only when the bipartite
/// graph of rows and columns joined by observed entries is connected, so a
/// disconnected pattern is refused.
pub fn rank1_completion_oracle(m: &MaskedMatrix) -> Result<DenseMatrix> {
    let (rows, cols) = m.shape();
    let mask = m.mask();
    if !observation_graph_connected(m) {
        return Err(Error::OracleInapplicable(
            "rows and columns are not connected through observed entries".into(),
        ));
    }
    let data = m.data();
    let mut v = vec![1.0; cols];
    let mut u = vec![0.0; rows];
    let mut prev = DenseMatrix::zeros(rows, cols);
    for _ in 0..100_000 {
        for (i, ui) in u.iter_mut().enumerate() {
            let (mut num, mut den) = (0.0, 0.0);
            for (j, &vj) in v.iter().enumerate() {
                if mask.is_observed(i, j) {
                    num += data[(i, j)] * vj;
                    den += vj * vj;
                }
            }
            *ui = if den > 0.0 { num / den } else { 0.0 };
        }
        for (j, vj) in v.iter_mut().enumerate() {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, &ui) in u.iter().enumerate() {
                if mask.is_observed(i, j) {
                    num += data[(i, j)] * ui;
                    den += ui * ui;
                }
            }
            *vj = if den > 0.0 { num / den } else { 0.0 };
        }
        let fit = DenseMatrix::from_fn(rows, cols, |i, j| u[i] * v[j]);
        let scale = fit.norm().max(f64::MIN_POSITIVE);
        let change = (&fit - &prev).norm() / scale;
        prev = fit;
        if change < 1e-12 {
            return Ok(prev);
        }
    }
    Err(Error::Numerical {
        iteration: None,
        message: "rank-1 alternating least squares did not settle".into(),
    })
}

fn observation_graph_connected(m: &MaskedMatrix) -> bool {
    let (rows, cols) = m.shape();
    let mask = m.mask();
    // nodes 0..rows are rows, rows..rows+cols are columns
    let mut seen = vec![false; rows + cols];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(node) = stack.pop() {
        if node < rows {
            for j in 0..cols {
                if mask.is_observed(node, j) && !seen[rows + j] {
                    seen[rows + j] = true;
                    stack.push(rows + j);
                }
            }
        } else {
            let j = node - rows;
            for i in 0..rows {
                if mask.is_observed(i, j) && !seen[i] {
                    seen[i] = true;
                    stack.push(i);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}
