use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dwtnnr::masks::DEFAULT_THRESHOLD;
use dwtnnr::{AdmmConfig, Method, Rect, Shape, SolverConfig, StoppingMode};

#[derive(Parser, Debug)]
#[command(
    name = "dwtnnr",
    version,
    about = "Low-rank matrix and image completion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fill in the missing pixels of an image, channel by channel.
    Complete(CompleteArgs),
    /// Generate a mask PGM (255 observed, 0 missing).
    Mask(MaskArgs),
    /// Score a recovered image against the truth over the missing pixels.
    Metrics(MetricsArgs),
    /// Sweep r for one or more methods and write a CSV table.
    Bench(BenchArgs),
    /// Write the weight heatmap of a mask.
    Weights(WeightsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dwtnnr,
    Admm,
    Unweighted,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dwtnnr => Method::DwTnnr,
            MethodArg::Admm => Method::Admm,
            MethodArg::Unweighted => Method::Unweighted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StoppingArg {
    Relative,
    Absolute,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Dwtnnr)]
    pub method: MethodArg,
    /// Leading singular values left unpenalized.
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 1.2)]
    pub theta1: f64,
    #[arg(long, default_value_t = 1.2)]
    pub theta2: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub alpha1: f64,
    #[arg(long, default_value_t = 1.2)]
    pub rho: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = StoppingArg::Relative)]
    pub stopping: StoppingArg,
    /// Inner ADMM starting penalty [default: alpha1]
    #[arg(long)]
    pub mu1: Option<f64>,
    /// Inner ADMM penalty growth [default: rho]
    #[arg(long)]
    pub rho_inner: Option<f64>,
    /// Inner ADMM tolerance [default: eps]
    #[arg(long)]
    pub inner_eps: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub max_inner: usize,
    /// Skip restoring observed entries inside the inner ADMM loop.
    #[arg(long)]
    pub no_inner_projection: bool,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            r: self.r,
            theta1: self.theta1,
            theta2: self.theta2,
            alpha1: self.alpha1,
            rho: self.rho,
            eps: self.eps,
            max_iters: self.max_iters,
            weighting: dwtnnr::Weighting::DoubleWeighted,
            stopping: match self.stopping {
                StoppingArg::Relative => StoppingMode::Relative,
                StoppingArg::Absolute => StoppingMode::Absolute,
            },
        }
    }

    pub fn inner(&self) -> AdmmConfig {
        AdmmConfig {
            mu1: self.mu1.unwrap_or(self.alpha1),
            rho_inner: self.rho_inner.unwrap_or(self.rho),
            inner_eps: self.inner_eps.unwrap_or(self.eps),
            max_inner: self.max_inner,
            project_each_step: !self.no_inner_projection,
        }
    }
}

/// `TOP,LEFT,HEIGHT,WIDTH`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectArg(pub Rect);

impl FromStr for RectArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let v = parse_list::<usize>(s, 4).context("expected TOP,LEFT,HEIGHT,WIDTH")?;
        Ok(RectArg(Rect::new(v[0], v[1], v[2], v[3])))
    }
}

impl std::fmt::Display for RectArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let r = self.0;
        write!(f, "{},{},{},{}", r.top, r.left, r.height, r.width)
    }
}

/// `ROW,COL,A,B`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamondArg {
    pub row: usize,
    pub col: usize,
    pub a: f64,
    pub b: f64,
}

impl FromStr for DiamondArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            bail!("expected ROW,COL,A,B");
        }
        Ok(DiamondArg {
            row: parts[0].parse()?,
            col: parts[1].parse()?,
            a: parts[2].parse()?,
            b: parts[3].parse()?,
        })
    }
}

impl std::fmt::Display for DiamondArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{},{}", self.row, self.col, self.a, self.b)
    }
}

/// `WIDTHxHEIGHT`, image convention: width is the column count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size {
    pub width: usize,
    pub height: usize,
}

impl FromStr for Size {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s.split_once(['x', 'X']).context("expected WIDTHxHEIGHT")?;
        Ok(Size {
            width: w.trim().parse()?,
            height: h.trim().parse()?,
        })
    }
}

/// Inclusive `A..B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RRange {
    pub start: usize,
    pub end: usize,
}

impl FromStr for RRange {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once("..").context("expected A..B")?;
        let (start, end) = (a.trim().parse()?, b.trim().parse()?);
        if start == 0 || start > end {
            bail!("r range must satisfy 1 <= A <= B");
        }
        Ok(RRange { start, end })
    }
}

fn parse_list<T: FromStr>(s: &str, count: usize) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let v = s
        .split(',')
        .map(|p| p.trim().parse::<T>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if v.len() != count {
        bail!("expected {count} comma-separated values, got {}", v.len());
    }
    Ok(v)
}

/// Exactly one of these picks the mask.
#[derive(Args, Debug, Clone, Default)]
pub struct MaskSourceArgs {
    /// Mask or text image; pixels >= --threshold are observed.
    #[arg(long = "mask", visible_alias = "from-image", value_name = "PGM")]
    pub mask_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
    /// Fraction of entries to remove uniformly at random.
    #[arg(long, visible_alias = "missing-ratio", value_name = "RATIO")]
    pub random: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Missing rectangle; repeat for several.
    #[arg(long, value_name = "TOP,LEFT,HEIGHT,WIDTH")]
    pub block: Vec<RectArg>,
    /// Missing triangle on and below the anti-diagonal of the box.
    #[arg(long, value_name = "TOP,LEFT,HEIGHT,WIDTH")]
    pub triangle: Option<RectArg>,
    /// Missing diamond |di|/A + |dj|/B <= 1 around (ROW, COL).
    #[arg(long, value_name = "ROW,COL,A,B")]
    pub diamond: Option<DiamondArg>,
}

pub enum MaskChoice<'a> {
    File(&'a PathBuf),
    Random(f64),
    Blocks(Vec<Rect>),
    Shape(Shape),
}

impl MaskSourceArgs {
    pub fn choice(&self) -> Result<MaskChoice<'_>> {
        let given = [
            self.mask_file.is_some(),
            self.random.is_some(),
            !self.block.is_empty(),
            self.triangle.is_some(),
            self.diamond.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if given != 1 {
            bail!(
                "give exactly one mask source: --mask, --random, --block, --triangle or --diamond"
            );
        }
        Ok(if let Some(p) = &self.mask_file {
            MaskChoice::File(p)
        } else if let Some(r) = self.random {
            MaskChoice::Random(r)
        } else if let Some(t) = self.triangle {
            MaskChoice::Shape(Shape::Triangle(t.0))
        } else if let Some(d) = self.diamond {
            MaskChoice::Shape(Shape::Diamond {
                center_row: d.row,
                center_col: d.col,
                a: d.a,
                b: d.b,
            })
        } else {
            MaskChoice::Blocks(self.block.iter().map(|b| b.0).collect())
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct CompleteArgs {
    /// Re-run exactly what a manifest records; other flags are ignored.
    #[arg(long, value_name = "FILE")]
    pub from_manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "from_manifest")]
    pub input: Option<PathBuf>,
    #[arg(short, long, required_unless_present = "from_manifest")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub mask: MaskSourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Ground truth image; adds PSNR to the trace and prints the final score.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Per-iteration CSV trace. RGB inputs get one file per channel (`name-c0.csv`, ...).
    #[arg(long, value_name = "CSV")]
    pub log: Option<PathBuf>,
    /// Where to write the run manifest [default: OUTPUT.manifest]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MaskArgs {
    #[command(flatten)]
    pub source: MaskSourceArgs,
    /// Required unless the mask comes from an image.
    #[arg(long, value_name = "WxH")]
    pub size: Option<Size>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct MetricsArgs {
    #[arg(long)]
    pub recovered: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// Directory of ground-truth PGM/PPM images.
    #[arg(long, value_name = "DIR")]
    pub input_dir: Option<PathBuf>,
    /// Synthetic low-rank instance `ROWSxCOLS:RANK`; repeat for several.
    #[arg(long, value_name = "MxN:RANK")]
    pub synthetic: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "dwtnnr")]
    pub methods: Vec<MethodArg>,
    /// Inclusive sweep range; overrides --r.
    #[arg(long, value_name = "A..B")]
    pub r_range: Option<RRange>,
    /// Seeded draws per cell; each draw offsets --seed by its index.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[command(flatten)]
    pub mask: MaskSourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV destination [default: stdout]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct WeightsArgs {
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
    #[arg(long, default_value_t = 1.2)]
    pub theta1: f64,
    #[arg(long, default_value_t = 1.2)]
    pub theta2: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}
