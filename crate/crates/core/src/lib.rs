//! Low-rank matrix completion by doubly weighted truncated nuclear norm regularization.
//!
//! Missing entries of a partially observed matrix are filled in by shrinking
//! every singular value except the `r` largest. Rows and columns that observe
//! fewer entries are pushed harder, through exponential row and column weights.
//!
//! ```
//! use dwtnnr::{make_low_rank, random_mask, psnr_gray, solve_dwtnnr, MaskedMatrix, SolverConfig, SynthSpec};
//!
//! let truth = make_low_rank(&SynthSpec::new(30, 20, 1, 5)).unwrap().data;
//! let mask = random_mask(30, 20, 0.3, 9).unwrap();
//! let observed = MaskedMatrix::new(&truth, mask.clone()).unwrap();
//!
//! let cfg = SolverConfig { r: 1, ..SolverConfig::default() };
//! let out = solve_dwtnnr(&observed, &cfg).unwrap();
//! let score = psnr_gray(&out.recovered, &truth, &mask).unwrap();
//! assert!(score.as_db() > 30.0);
//! ```

pub mod bench;
pub mod error;
pub mod imageio;
pub mod masks;
pub mod matrix;
pub mod metrics;
pub mod solvers;
pub mod synth;
pub mod weights;

pub use bench::{
    complete_channels, run_bench, write_bench_csv, BenchCase, BenchInstance, BenchPlan, BenchRow,
    Method,
};
pub use error::{Error, Result};
pub use imageio::{heatmap, merge_channels, read_pnm, split_channels, write_pnm, ImagePlanes};
pub use masks::{
    block_mask, mask_from_image, mask_to_image, random_mask, shape_mask, MaskSpec, Rect, Shape,
};
pub use matrix::{
    nuclear_norm, project_observed, residual_gradient, svd_thin, trace_surrogate, truncate,
    DenseMatrix, MaskedMatrix, ObservationMask, SvdFactors, TruncatedFactors,
};
pub use metrics::{erec, psnr, psnr_gray, relative_change, ChannelResiduals, Psnr};
pub use solvers::{
    iteration_lower_bound, solve_dwtnnr, solve_dwtnnr_with, solve_inner_admm, solve_tnnr_admm,
    solve_tnnr_admm_with, AdmmConfig, CompletionResult, SolveOptions, SolverConfig, SolverTrace,
    StoppingMode, TraceRecord, Weighting,
};
pub use synth::{make_low_rank, make_rank_one, rank1_completion_oracle, LowRankSample, SynthSpec};
pub use weights::{
    exponential_weights, observation_counts, weight_gamma, weight_visualization, ObservationCounts,
    WeightVectors,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/masks.md")]
    mod masks {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/gradient.md")]
    mod gradient {}
    #[doc = include_str!("../../../book/src/admm.md")]
    mod admm {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
