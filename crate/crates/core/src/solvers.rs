//! Completion solvers.
//!
//! [`solve_dwtnnr`] is the one-step weighted gradient method: every iteration
//! takes a thin SVD of the iterate `X_k`, forms the trailing outer-product sum
//! `ΦᵀΛ`, and moves
//!
//! ```text
//! X_{k+1} = P_Ω( X_k − (1/α_k) · 𝒫 ΦᵀΛ 𝒬 ),    α_{k+1} = ρ α_k
//! ```
//!
//! where `P_Ω` restores the observed entries. [`solve_tnnr_admm`] keeps the
//! two-step structure instead: the same SVD step followed by an inner weighted
//! ADMM loop ([`solve_inner_admm`]) over `W`, `X` and the multiplier `Y`.
//! Without the per-step projection of `W`, `N` inner steps collapse to a single
//! gradient step with `1/α = Σ 1/μ_t`; the gradient solver is that collapsed form.

use std::fmt;
use std::io::{self, Write};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::{
    project_observed_in_place, residual_gradient, svd_thin, truncate, DenseMatrix, MaskedMatrix,
    TruncatedFactors,
};
use crate::metrics::psnr_gray;
use crate::weights::{
    exponential_weights, observation_counts, scale_rows_cols, weight_gamma, WeightVectors,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weighting {
    /// Exponential row/column weights from the observation counts.
    DoubleWeighted,
    /// `𝒫 = 𝒬 = I`.
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoppingMode {
    /// Stop once `‖X_{k+1} − X_k‖_F / ‖M_Ω‖_F < ε`.
    Relative,
    /// Stop once `‖X_{k+1} − X_k‖_F ≤ ε`; covered by [`iteration_lower_bound`].
    Absolute,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::DoubleWeighted => "double-weighted",
            Weighting::Unweighted => "unweighted",
        })
    }
}

impl fmt::Display for StoppingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StoppingMode::Relative => "relative",
            StoppingMode::Absolute => "absolute",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of leading singular values left unpenalized.
    pub r: usize,
    pub theta1: f64,
    pub theta2: f64,
    /// Initial step denominator; the first step is `1/α₁`.
    pub alpha1: f64,
    /// Growth of `α_k` per iteration.
    pub rho: f64,
    pub eps: f64,
    pub max_iters: usize,
    pub weighting: Weighting,
    pub stopping: StoppingMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            r: 3,
            theta1: 1.2,
            theta2: 1.2,
            alpha1: 1e-4,
            rho: 1.2,
            eps: 1e-4,
            max_iters: 200,
            weighting: Weighting::DoubleWeighted,
            stopping: StoppingMode::Relative,
        }
    }
}

impl SolverConfig {
    pub fn with_r(self, r: usize) -> Self {
        Self { r, ..self }
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if !(self.alpha1 > 0.0 && self.alpha1.is_finite()) {
            return Err(Error::config(format!(
                "alpha1 must be positive, got {}",
                self.alpha1
            )));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(Error::config(format!(
                "rho must exceed 1, got {}",
                self.rho
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        let s = m.min(n);
        if self.r == 0 || self.r > s {
            return Err(Error::Range {
                what: "truncation count r",
                value: self.r,
                allowed: format!("1..={s}"),
            });
        }
        Ok(())
    }

    fn step_inverse(&self, k: usize) -> f64 {
        // 1/α_k = (1/α₁)·ρ^{−(k−1)}
        1.0 / (self.alpha1 * self.rho.powi(k as i32 - 1))
    }
}

/// Inner ADMM settings. `β_t = μ_t` always.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub mu1: f64,
    /// `μ_{t+1} = rho_inner · μ_t`; must exceed 1.
    pub rho_inner: f64,
    pub inner_eps: f64,
    pub max_inner: usize,
    /// Restore the observed entries of `W` after every `W` update.
    pub project_each_step: bool,
}

impl AdmmConfig {
    /// `μ₁ = α₁`, `rho_inner = ρ`, `inner_eps = ε`, 100 inner steps, projection on.
    pub fn from_solver(cfg: &SolverConfig) -> Self {
        Self {
            mu1: cfg.alpha1,
            rho_inner: cfg.rho,
            inner_eps: cfg.eps,
            max_inner: 100,
            project_each_step: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu1 > 0.0 && self.mu1.is_finite()) {
            return Err(Error::config(format!(
                "mu1 must be positive, got {}",
                self.mu1
            )));
        }
        if !(self.rho_inner > 1.0 && self.rho_inner.is_finite()) {
            return Err(Error::config(format!(
                "penalty schedule must increase strictly (rho_inner > 1), got {}",
                self.rho_inner
            )));
        }
        if !(self.inner_eps > 0.0) {
            return Err(Error::config("inner_eps must be positive"));
        }
        if self.max_inner == 0 {
            return Err(Error::config("max_inner must be at least 1"));
        }
        Ok(())
    }
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self::from_solver(&SolverConfig::default())
    }
}

/// Settings a trace was produced with.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceHeader {
    pub method: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub config: SolverConfig,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// `‖X_{k+1} − X_k‖_F / ‖M_Ω‖_F`
    pub delta: f64,
    /// Step size used this iteration: `1/α_k`, or `Σ_t 1/μ_t` for the two-step solver.
    pub inv_alpha: f64,
    /// `γ · inv_alpha`
    pub step_bound: f64,
    /// `‖X_{k+1} − X_k‖_F` after projection.
    pub step_norm: f64,
    /// Norm of the weighted step before the observed entries are restored.
    pub unprojected_step_norm: f64,
    pub elapsed_ms: f64,
    pub psnr: Option<f64>,
    /// Inner ADMM steps taken; 1 for the gradient solver.
    pub inner_iters: usize,
}

pub const TRACE_CSV_HEADER: &str = "iter,delta,inv_alpha,step_bound,elapsed_ms,psnr";

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

impl SolverTrace {
    pub fn csv_row(rec: &TraceRecord) -> String {
        let psnr = rec.psnr.map(fmt_psnr).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            rec.iter, rec.delta, rec.inv_alpha, rec.step_bound, rec.elapsed_ms, psnr
        )
    }

    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for rec in &self.records {
            writeln!(w, "{}", Self::csv_row(rec))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Total inner steps (equals the iteration count for the gradient solver).
    pub fn total_inner_iters(&self) -> usize {
        self.records.iter().map(|r| r.inner_iters).sum()
    }
}

fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_owned()
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub recovered: DenseMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub trace: SolverTrace,
}

/// Optional ground truth (adds PSNR to each trace record) and a per-iteration callback.
#[derive(Default)]
pub struct SolveOptions<'a> {
    pub truth: Option<&'a DenseMatrix>,
    /// Called after every outer iteration with the record and the projected iterate.
    pub observer: Option<&'a mut dyn FnMut(&TraceRecord, &DenseMatrix)>,
}

/// Weights for `cfg.weighting` computed once from the mask.
pub fn weights_for(m: &MaskedMatrix, cfg: &SolverConfig) -> Result<WeightVectors> {
    let (rows, cols) = m.shape();
    match cfg.weighting {
        Weighting::DoubleWeighted => {
            exponential_weights(&observation_counts(m.mask()), cfg.theta1, cfg.theta2)
        }
        Weighting::Unweighted => Ok(WeightVectors::unit(rows, cols)),
    }
}

/// Shared setup. The inner `Err` carries the finished result when nothing is missing.
fn prepare(
    method: &'static str,
    m: &MaskedMatrix,
    cfg: &SolverConfig,
) -> Result<std::result::Result<(WeightVectors, TraceHeader, f64), CompletionResult>> {
    let (rows, cols) = m.shape();
    let mut header = TraceHeader {
        method,
        rows,
        cols,
        config: cfg.clone(),
        gamma: 0.0,
    };
    if m.mask().missing_count() == 0 {
        return Ok(Err(CompletionResult {
            recovered: m.data().clone(),
            iterations: 0,
            converged: true,
            trace: SolverTrace {
                header,
                records: Vec::new(),
            },
        }));
    }
    if m.mask().observed_count() == 0 {
        return Err(Error::domain(
            "no observed entries: nothing to complete from",
        ));
    }
    cfg.validate(rows, cols)?;
    let norm_m = m.observed_norm();
    if norm_m == 0.0 {
        return Err(Error::domain(
            "observed data is all zero; relative change is undefined",
        ));
    }
    let w = weights_for(m, cfg)?;
    header.gamma = weight_gamma(&w, rows, cfg.r);
    Ok(Ok((w, header, norm_m)))
}

fn stop(cfg: &SolverConfig, delta: f64, step_norm: f64) -> bool {
    match cfg.stopping {
        StoppingMode::Relative => delta < cfg.eps,
        StoppingMode::Absolute => step_norm <= cfg.eps,
    }
}

fn trace_psnr(
    x: &DenseMatrix,
    m: &MaskedMatrix,
    truth: Option<&DenseMatrix>,
) -> Result<Option<f64>> {
    truth
        .map(|t| psnr_gray(x, t, m.mask()).map(|p| p.as_db()))
        .transpose()
}

pub fn solve_dwtnnr(m: &MaskedMatrix, cfg: &SolverConfig) -> Result<CompletionResult> {
    solve_dwtnnr_with(m, cfg, SolveOptions::default())
}

/// The gradient solver, starting from `X₁ = M_Ω`.
pub fn solve_dwtnnr_with(
    m: &MaskedMatrix,
    cfg: &SolverConfig,
    mut opts: SolveOptions<'_>,
) -> Result<CompletionResult> {
    let method = match cfg.weighting {
        Weighting::DoubleWeighted => "dwtnnr",
        Weighting::Unweighted => "unweighted",
    };
    let (w, header, norm_m) = match prepare(method, m, cfg)? {
        Ok(ready) => ready,
        Err(done) => return Ok(done),
    };
    let start = Instant::now();
    let mut x = m.data().clone();
    let mut records = Vec::new();
    let mut converged = false;

    for k in 1..=cfg.max_iters {
        let svd = svd_thin(&x).map_err(|e| e.at_iteration(k))?;
        let factors = truncate(&svd, cfg.r)?;
        let inv_alpha = cfg.step_inverse(k);
        let step = w.apply(&residual_gradient(&factors)) * inv_alpha;

        let mut next = &x - &step;
        project_observed_in_place(&mut next, m)?;
        let step_norm = (&next - &x).norm();
        let delta = step_norm / norm_m;
        x = next;

        let rec = TraceRecord {
            iter: k,
            delta,
            inv_alpha,
            step_bound: header.gamma * inv_alpha,
            step_norm,
            unprojected_step_norm: step.norm(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            psnr: trace_psnr(&x, m, opts.truth)?,
            inner_iters: 1,
        };
        if let Some(obs) = opts.observer.as_mut() {
            obs(&rec, &x);
        }
        records.push(rec);

        if stop(cfg, delta, step_norm) {
            converged = true;
            break;
        }
    }

    Ok(CompletionResult {
        recovered: x,
        iterations: records.len(),
        converged,
        trace: SolverTrace { header, records },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub x: DenseMatrix,
    pub iterations: usize,
    /// `Σ_t 1/μ_t` over the steps taken.
    pub step_sum: f64,
}

/// Diagonal factors of the weighted Lagrangian, with `𝒫 = P⁻²`.
struct AdmmDiagonals {
    /// `P⁻¹ = diag(√p)`
    sqrt: Vec<f64>,
    /// `P = diag(1/√p)`, zero where `p = 0`
    inv_sqrt: Vec<f64>,
}

impl AdmmDiagonals {
    fn new(weights: &[f64]) -> Self {
        Self {
            sqrt: weights.iter().map(|&p| p.sqrt()).collect(),
            inv_sqrt: weights
                .iter()
                .map(|&p| if p > 0.0 { 1.0 / p.sqrt() } else { 0.0 })
                .collect(),
        }
    }
}

/// Weighted ADMM on `W`, `X`, `Y` with the singular-vector factors held fixed.
///
/// With `β_t = μ_t`, `Y₁ = 0` and `μ_{t+1} = rho_inner · μ_t`, each step does
///
/// ```text
/// W ← X + (𝒫 CᵀD 𝒬 + P⁻¹ Y Q⁻¹)/μ        (then W_Ω ← M_Ω if project_each_step)
/// X ← W − (𝒫 AᵀB 𝒬 + P⁻¹ Y Q⁻¹)/μ
/// Y ← Y + μ P (X − W) Q
/// ```
///
/// `AᵀB` is taken as `CᵀD + ΦᵀΛ`. Stops when the relative change of `X`
/// drops below `inner_eps` or after `max_inner` steps.
pub fn solve_inner_admm(
    m: &MaskedMatrix,
    factors: &TruncatedFactors,
    w: &WeightVectors,
    x0: &DenseMatrix,
    cfg: &AdmmConfig,
) -> Result<InnerSolution> {
    cfg.validate()?;
    let (rows, cols) = m.shape();
    if x0.shape() != (rows, cols)
        || (factors.rows(), factors.cols()) != (rows, cols)
        || (w.rows(), w.cols()) != (rows, cols)
    {
        return Err(Error::domain("ADMM inputs disagree in shape"));
    }
    for (i, j) in m.mask().missing_indices() {
        if !(w.p[i] > 0.0 && w.q[j] > 0.0) {
            return Err(Error::domain(format!(
                "weights vanish at missing entry ({i}, {j})"
            )));
        }
    }
    let norm_m = m.observed_norm();
    if norm_m == 0.0 {
        return Err(Error::domain(
            "observed data is all zero; relative change is undefined",
        ));
    }

    let rp = AdmmDiagonals::new(&w.p);
    let cq = AdmmDiagonals::new(&w.q);
    let lead = w.apply(&factors.leading_product());
    let full = w.apply(&factors.full_product());

    let mut x = x0.clone();
    let mut y = DenseMatrix::zeros(rows, cols);
    let mut mu = cfg.mu1;
    let mut step_sum = 0.0;
    let mut iterations = 0;

    for _ in 0..cfg.max_inner {
        let y_scaled = scale_rows_cols(&y, &rp.sqrt, &cq.sqrt);
        let mut w_next = &x + (&lead + &y_scaled) / mu;
        if cfg.project_each_step {
            project_observed_in_place(&mut w_next, m)?;
        }
        let x_next = &w_next - (&full + &y_scaled) / mu;
        y += scale_rows_cols(&(&x_next - &w_next), &rp.inv_sqrt, &cq.inv_sqrt) * mu;

        let change = (&x_next - &x).norm() / norm_m;
        x = x_next;
        step_sum += 1.0 / mu;
        iterations += 1;
        mu *= cfg.rho_inner;
        if change < cfg.inner_eps {
            break;
        }
    }

    Ok(InnerSolution {
        x,
        iterations,
        step_sum,
    })
}

/// Two-step solver: SVD factors, then inner ADMM, then restore `M_Ω`.
pub fn solve_tnnr_admm(
    m: &MaskedMatrix,
    cfg: &SolverConfig,
    inner: &AdmmConfig,
) -> Result<CompletionResult> {
    solve_tnnr_admm_with(m, cfg, inner, SolveOptions::default())
}

/// At outer iteration `k` the inner penalty starts from `μ₁ · ρ^{k−1}`, so the
/// outer steps shrink on the same schedule as the gradient solver's `1/α_k`.
pub fn solve_tnnr_admm_with(
    m: &MaskedMatrix,
    cfg: &SolverConfig,
    inner: &AdmmConfig,
    mut opts: SolveOptions<'_>,
) -> Result<CompletionResult> {
    let (w, header, norm_m) = match prepare("admm", m, cfg)? {
        Ok(ready) => ready,
        Err(done) => return Ok(done),
    };
    inner.validate()?;
    let start = Instant::now();
    let mut x = m.data().clone();
    let mut records = Vec::new();
    let mut converged = false;

    for k in 1..=cfg.max_iters {
        let svd = svd_thin(&x).map_err(|e| e.at_iteration(k))?;
        let factors = truncate(&svd, cfg.r)?;
        let inner_k = AdmmConfig {
            mu1: inner.mu1 * cfg.rho.powi(k as i32 - 1),
            ..inner.clone()
        };
        let sol = solve_inner_admm(m, &factors, &w, &x, &inner_k)?;
        let unprojected_step_norm = (&sol.x - &x).norm();
        let mut next = sol.x;
        project_observed_in_place(&mut next, m)?;
        let step_norm = (&next - &x).norm();
        let delta = step_norm / norm_m;
        x = next;

        let rec = TraceRecord {
            iter: k,
            delta,
            inv_alpha: sol.step_sum,
            step_bound: header.gamma * sol.step_sum,
            step_norm,
            unprojected_step_norm,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            psnr: trace_psnr(&x, m, opts.truth)?,
            inner_iters: sol.iterations,
        };
        if let Some(obs) = opts.observer.as_mut() {
            obs(&rec, &x);
        }
        records.push(rec);

        if stop(cfg, delta, step_norm) {
            converged = true;
            break;
        }
    }

    Ok(CompletionResult {
        recovered: x,
        iterations: records.len(),
        converged,
        trace: SolverTrace { header, records },
    })
}

/// Smallest `N ≥ 1` with `N ≥ 1 + (ln γ − ln(α₁ ε)) / ln ρ`.
///
/// From iteration `N` on, `γ/α_k ≤ ε`, so the absolute per-step change is
/// within tolerance. `γ = 0` (no gradient at all) gives 1.
pub fn iteration_lower_bound(gamma: f64, cfg: &SolverConfig) -> usize {
    if !(gamma > 0.0) {
        return 1;
    }
    let n = 1.0 + (gamma.ln() - (cfg.alpha1 * cfg.eps).ln()) / cfg.rho.ln();
    if n <= 1.0 {
        1
    } else {
        n.ceil() as usize
    }
}
