//! Flat `key=value` run manifests.
//!
//! Keys are the long flag names of `complete`, so a manifest replays by
//! turning each line back into `--key value`. Repeated keys (`block`) are
//! allowed; `true` booleans become bare flags.

use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::args::{CompleteArgs, MethodArg, StoppingArg};

pub const VERSION_KEY: &str = "tool_version";

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Dwtnnr => "dwtnnr",
        MethodArg::Admm => "admm",
        MethodArg::Unweighted => "unweighted",
    }
}

fn stopping_name(s: StoppingArg) -> &'static str {
    match s {
        StoppingArg::Relative => "relative",
        StoppingArg::Absolute => "absolute",
    }
}

/// Every setting that affects the output, with defaults resolved.
pub fn manifest_entries(args: &CompleteArgs) -> Vec<(&'static str, String)> {
    let path = |p: &Path| p.display().to_string();
    let mut out = vec![(VERSION_KEY, env!("CARGO_PKG_VERSION").to_owned())];
    if let Some(p) = &args.input {
        out.push(("input", path(p)));
    }
    if let Some(p) = &args.output {
        out.push(("output", path(p)));
    }
    let m = &args.mask;
    if let Some(p) = &m.mask_file {
        out.push(("mask", path(p)));
        out.push(("threshold", m.threshold.to_string()));
    }
    if let Some(r) = m.random {
        out.push(("random", r.to_string()));
        out.push(("seed", m.seed.to_string()));
    }
    for b in &m.block {
        out.push(("block", b.to_string()));
    }
    if let Some(t) = &m.triangle {
        out.push(("triangle", t.to_string()));
    }
    if let Some(d) = &m.diamond {
        out.push(("diamond", d.to_string()));
    }

    let s = &args.solver;
    let inner = s.inner();
    out.extend([
        ("method", method_name(s.method).to_owned()),
        ("r", s.r.to_string()),
        ("theta1", s.theta1.to_string()),
        ("theta2", s.theta2.to_string()),
        ("alpha1", s.alpha1.to_string()),
        ("rho", s.rho.to_string()),
        ("eps", s.eps.to_string()),
        ("max-iters", s.max_iters.to_string()),
        ("stopping", stopping_name(s.stopping).to_owned()),
        ("mu1", inner.mu1.to_string()),
        ("rho-inner", inner.rho_inner.to_string()),
        ("inner-eps", inner.inner_eps.to_string()),
        ("max-inner", inner.max_inner.to_string()),
        ("no-inner-projection", s.no_inner_projection.to_string()),
    ]);
    if let Some(p) = &args.truth {
        out.push(("truth", path(p)));
    }
    if let Some(p) = &args.log {
        out.push(("log", path(p)));
    }
    out
}

pub fn render(entries: &[(&str, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Command-line arguments for `complete` that reproduce a manifest.
pub fn replay_args(text: &str) -> Result<Vec<String>> {
    let mut argv = vec!["dwtnnr".to_owned(), "complete".to_owned()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("manifest line {}: expected key=value", lineno + 1))?;
        match (key, value) {
            (VERSION_KEY, v) => {
                if v != env!("CARGO_PKG_VERSION") {
                    eprintln!(
                        "warning: manifest written by version {v}, running {}",
                        env!("CARGO_PKG_VERSION")
                    );
                }
            }
            ("from-manifest" | "manifest", _) => {
                bail!("manifest line {}: key {key} is not replayable", lineno + 1)
            }
            (k, "true") if k == "no-inner-projection" => argv.push(format!("--{k}")),
            (k, "false") if k == "no-inner-projection" => {}
            (k, v) => {
                argv.push(format!("--{k}"));
                argv.push(v.to_owned());
            }
        }
    }
    Ok(argv)
}
