//! Sweeps over the truncation count `r` for one or more methods.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MaskedMatrix};
use crate::metrics::{psnr, ChannelResiduals};
use crate::solvers::{
    solve_dwtnnr_with, solve_tnnr_admm_with, AdmmConfig, CompletionResult, SolveOptions,
    SolverConfig, Weighting,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Weighted gradient solver.
    DwTnnr,
    /// Weighted two-step solver with inner ADMM.
    Admm,
    /// Gradient solver with unit weights.
    Unweighted,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::DwTnnr, Method::Admm, Method::Unweighted];

    pub fn name(self) -> &'static str {
        match self {
            Method::DwTnnr => "dwtnnr",
            Method::Admm => "admm",
            Method::Unweighted => "unweighted",
        }
    }

    pub fn solve(
        self,
        m: &MaskedMatrix,
        cfg: &SolverConfig,
        inner: &AdmmConfig,
        opts: SolveOptions<'_>,
    ) -> Result<CompletionResult> {
        match self {
            Method::DwTnnr => solve_dwtnnr_with(
                m,
                &SolverConfig {
                    weighting: Weighting::DoubleWeighted,
                    ..cfg.clone()
                },
                opts,
            ),
            Method::Unweighted => solve_dwtnnr_with(
                m,
                &SolverConfig {
                    weighting: Weighting::Unweighted,
                    ..cfg.clone()
                },
                opts,
            ),
            Method::Admm => solve_tnnr_admm_with(m, cfg, inner, opts),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown method {s:?}")))
    }
}

/// Channels completed independently under one mask, with optional ground truth.
#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub name: String,
    pub channels: Vec<MaskedMatrix>,
    pub truth: Option<Vec<DenseMatrix>>,
}

impl BenchInstance {
    fn validate(&self) -> Result<()> {
        let first = self
            .channels
            .first()
            .ok_or_else(|| Error::domain("instance has no channels"))?;
        if self.channels.iter().any(|c| c.mask() != first.mask()) {
            return Err(Error::domain("channels of one instance must share a mask"));
        }
        if let Some(t) = &self.truth {
            if t.len() != self.channels.len() || t.iter().any(|p| p.shape() != first.shape()) {
                return Err(Error::domain("truth does not match the instance channels"));
            }
        }
        Ok(())
    }
}

/// Complete every channel, then pool PSNR over channels when truth is given.
pub fn complete_channels(
    channels: &[MaskedMatrix],
    method: Method,
    cfg: &SolverConfig,
    inner: &AdmmConfig,
    truth: Option<&[DenseMatrix]>,
) -> Result<(Vec<CompletionResult>, Option<f64>)> {
    let results = channels
        .iter()
        .enumerate()
        .map(|(c, m)| {
            let opts = SolveOptions {
                truth: truth.map(|t| &t[c]),
                observer: None,
            };
            method.solve(m, cfg, inner, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let pooled = match (truth, channels.first()) {
        (Some(t), Some(first)) if first.mask().missing_count() > 0 => {
            let recovered: Vec<_> = results.iter().map(|r| r.recovered.clone()).collect();
            let res = ChannelResiduals::from_planes(&recovered, t, first.mask())?;
            Some(psnr(&res)?.as_db())
        }
        _ => None,
    };
    Ok((results, pooled))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub method: Method,
    pub r: usize,
    /// Mean pooled PSNR over the draws.
    pub psnr: Option<f64>,
    /// Mean over the draws of solver steps summed over channels: outer
    /// iterations for the gradient solvers, inner ADMM steps for the two-step solver.
    pub iterations: f64,
    /// Mean wall time per draw.
    pub elapsed_ms: f64,
    /// Highest PSNR for this instance and method. Ties go to the smaller `r`.
    pub best: bool,
}

pub const BENCH_CSV_HEADER: &str = "instance,method,r,psnr,iterations,elapsed_ms,best";

/// One named benchmark instance as a list of independently seeded draws.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub name: String,
    pub draws: Vec<BenchInstance>,
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub methods: Vec<Method>,
    pub r_values: Vec<usize>,
    pub config: SolverConfig,
    pub inner: AdmmConfig,
}

pub fn run_bench(cases: &[BenchCase], plan: &BenchPlan) -> Result<Vec<BenchRow>> {
    if cases.is_empty() {
        return Err(Error::config("no benchmark instances"));
    }
    if plan.r_values.is_empty() || plan.methods.is_empty() {
        return Err(Error::config("nothing to sweep"));
    }
    let mut rows = Vec::new();
    for case in cases {
        if case.draws.is_empty() {
            return Err(Error::config(format!(
                "instance {} has no draws",
                case.name
            )));
        }
        for draw in &case.draws {
            draw.validate()?;
        }
        for &method in &plan.methods {
            let first = rows.len();
            for &r in &plan.r_values {
                let cfg = plan.config.clone().with_r(r);
                let mut total_ms = 0.0;
                let mut total_iters = 0usize;
                let mut scores = Vec::new();
                for draw in &case.draws {
                    let start = Instant::now();
                    let (results, psnr) = complete_channels(
                        &draw.channels,
                        method,
                        &cfg,
                        &plan.inner,
                        draw.truth.as_deref(),
                    )?;
                    total_ms += start.elapsed().as_secs_f64() * 1e3;
                    total_iters += results
                        .iter()
                        .map(|r| r.trace.total_inner_iters())
                        .sum::<usize>();
                    scores.extend(psnr);
                }
                let count = case.draws.len() as f64;
                let psnr =
                    (scores.len() == case.draws.len()).then(|| scores.iter().sum::<f64>() / count);
                rows.push(BenchRow {
                    instance: case.name.clone(),
                    method,
                    r,
                    psnr,
                    iterations: total_iters as f64 / count,
                    elapsed_ms: total_ms / count,
                    best: false,
                });
            }
            mark_best(&mut rows[first..]);
        }
    }
    Ok(rows)
}

fn mark_best(group: &mut [BenchRow]) {
    let mut best: Option<(usize, f64)> = None;
    for (idx, row) in group.iter().enumerate() {
        if let Some(p) = row.psnr {
            if best.map_or(true, |(_, b)| p > b) {
                best = Some((idx, p));
            }
        }
    }
    if let Some((idx, _)) = best {
        group[idx].best = true;
    }
}

pub fn write_bench_csv(rows: &[BenchRow], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{BENCH_CSV_HEADER}")?;
    for row in rows {
        let psnr = match row.psnr {
            Some(p) if p.is_infinite() => "inf".to_owned(),
            Some(p) => p.to_string(),
            None => String::new(),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.instance, row.method, row.r, psnr, row.iterations, row.elapsed_ms, row.best
        )?;
    }
    Ok(())
}
