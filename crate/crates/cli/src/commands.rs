use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::Parser;
use dwtnnr::solvers::TRACE_CSV_HEADER;
use dwtnnr::{
    block_mask, exponential_weights, heatmap, make_low_rank, mask_from_image, mask_to_image,
    merge_channels, observation_counts, psnr, random_mask, read_pnm, run_bench, shape_mask,
    weight_visualization, write_bench_csv, BenchCase, BenchInstance, BenchPlan, ChannelResiduals,
    DenseMatrix, ImagePlanes, MaskedMatrix, Method, ObservationMask, SolveOptions, SolverTrace,
    SynthSpec, TraceRecord,
};

use crate::args::{
    BenchArgs, Cli, Command, CompleteArgs, MaskArgs, MaskChoice, MaskSourceArgs, MetricsArgs,
    WeightsArgs,
};
use crate::manifest::{manifest_entries, render, replay_args};

fn read_image(path: &Path) -> Result<ImagePlanes> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_pnm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn write_image(path: &Path, img: &ImagePlanes) -> Result<()> {
    fs::write(path, dwtnnr::write_pnm(img)).with_context(|| format!("writing {}", path.display()))
}

fn load_mask_file(path: &Path, threshold: u8) -> Result<ObservationMask> {
    let img = read_image(path)?;
    mask_from_image(&img, threshold).with_context(|| format!("mask {}", path.display()))
}

/// Builds the mask for a `rows × cols` target. `seed` replaces `--seed` for random masks.
fn resolve_mask(
    src: &MaskSourceArgs,
    rows: usize,
    cols: usize,
    seed: u64,
) -> Result<ObservationMask> {
    let mask = match src.choice()? {
        MaskChoice::File(p) => {
            let mask = load_mask_file(p, src.threshold)?;
            ensure!(
                mask.shape() == (rows, cols),
                "mask {} is {}x{} but the image is {}x{} (width x height)",
                p.display(),
                mask.cols(),
                mask.rows(),
                cols,
                rows
            );
            mask
        }
        MaskChoice::Random(ratio) => random_mask(rows, cols, ratio, seed)?,
        MaskChoice::Blocks(rects) => block_mask(rows, cols, &rects)?,
        MaskChoice::Shape(shape) => shape_mask(rows, cols, &shape)?,
    };
    Ok(mask)
}

/// `trace.csv` stays as is for one channel; otherwise `trace-c0.csv`, `trace-c1.csv`, ...
fn channel_log_path(base: &Path, channel: usize, channels: usize) -> PathBuf {
    if channels == 1 {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}-c{channel}.{}", ext.to_string_lossy()),
        None => format!("{stem}-c{channel}"),
    };
    base.with_file_name(name)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Complete(args) => complete(args),
        Command::Mask(args) => mask(args),
        Command::Metrics(args) => metrics(args),
        Command::Bench(args) => bench(args),
        Command::Weights(args) => weights(args),
    }
}

fn complete(args: CompleteArgs) -> Result<()> {
    if let Some(path) = &args.from_manifest {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let argv = replay_args(&text)?;
        let replay = match Cli::try_parse_from(&argv)
            .with_context(|| format!("manifest {} does not parse", path.display()))?
            .command
        {
            Command::Complete(a) => a,
            _ => unreachable!("replay always targets complete"),
        };
        return complete(CompleteArgs {
            manifest: args.manifest.clone(),
            ..replay
        });
    }
    let input = args.input.as_ref().context("--input is required")?;
    let output = args.output.as_ref().context("--output is required")?;

    let img = read_image(input)?;
    let (rows, cols) = (img.height(), img.width());
    let mask = resolve_mask(&args.mask, rows, cols, args.mask.seed)?;
    let truth = match &args.truth {
        Some(p) => {
            let t = read_image(p)?;
            ensure!(
                t.channels() == img.channels() && (t.height(), t.width()) == (rows, cols),
                "truth {} does not match the input dimensions",
                p.display()
            );
            Some(t)
        }
        None => None,
    };

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.manifest", output.display())));
    fs::write(&manifest_path, render(&manifest_entries(&args)))
        .with_context(|| format!("writing {}", manifest_path.display()))?;

    let method: Method = args.solver.method.into();
    let cfg = args.solver.config();
    let inner = args.solver.inner();
    let channels = img.channels();
    let mut recovered = Vec::with_capacity(channels);
    for (c, plane) in img.planes().iter().enumerate() {
        let observed = MaskedMatrix::new(plane, mask.clone())?;
        let mut log = match &args.log {
            Some(base) => {
                let path = channel_log_path(base, c, channels);
                let mut w = BufWriter::new(
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?,
                );
                writeln!(w, "{TRACE_CSV_HEADER}")?;
                Some(w)
            }
            None => None,
        };
        let mut log_error: Option<io::Error> = None;
        let mut observer = |rec: &TraceRecord, _: &DenseMatrix| {
            if let Some(w) = log.as_mut() {
                let res = writeln!(w, "{}", SolverTrace::csv_row(rec)).and_then(|_| w.flush());
                if let Err(e) = res {
                    log_error.get_or_insert(e);
                }
            }
        };
        let opts = SolveOptions {
            truth: truth.as_ref().map(|t| t.plane(c)),
            observer: Some(&mut observer),
        };
        let result = method
            .solve(&observed, &cfg, &inner, opts)
            .with_context(|| format!("channel {c}"))?;
        if let Some(e) = log_error {
            return Err(e).context("writing trace log");
        }
        eprintln!(
            "channel {c}: {} iterations, {}",
            result.iterations,
            if result.converged {
                "converged"
            } else {
                "iteration cap reached"
            }
        );
        recovered.push(result.recovered);
    }

    let out = merge_channels(recovered)?;
    write_image(output, &out)?;
    if let Some(t) = &truth {
        let res = ChannelResiduals::from_planes(out.planes(), t.planes(), &mask)?;
        println!("psnr_db={}", psnr(&res)?);
    }
    Ok(())
}

fn mask(args: MaskArgs) -> Result<()> {
    let (rows, cols) = match (&args.source.mask_file, args.size) {
        (Some(p), _) => {
            let m = load_mask_file(p, args.source.threshold)?;
            (m.rows(), m.cols())
        }
        (None, Some(size)) => (size.height, size.width),
        (None, None) => bail!("--size WxH is required unless the mask comes from an image"),
    };
    let mask = resolve_mask(&args.source, rows, cols, args.source.seed)?;
    write_image(&args.output, &mask_to_image(&mask))?;
    eprintln!(
        "{}x{} mask, {} missing of {}",
        cols,
        rows,
        mask.missing_count(),
        rows * cols
    );
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let rec = read_image(&args.recovered)?;
    let truth = read_image(&args.truth)?;
    let mask = load_mask_file(&args.mask, args.threshold)?;
    ensure!(
        rec.channels() == truth.channels(),
        "recovered has {} channels, truth has {}",
        rec.channels(),
        truth.channels()
    );
    let res = ChannelResiduals::from_planes(rec.planes(), truth.planes(), &mask)?;
    let score = psnr(&res)?;
    println!("erec,mse,psnr_db");
    println!("{},{},{}", res.squared_error().sqrt(), res.mse()?, score);
    Ok(())
}

fn parse_synthetic(spec: &str) -> Result<(usize, usize, usize)> {
    let parse = || -> Option<(usize, usize, usize)> {
        let (dims, rank) = spec.split_once(':')?;
        let (m, n) = dims.split_once(['x', 'X'])?;
        Some((m.parse().ok()?, n.parse().ok()?, rank.parse().ok()?))
    };
    parse().with_context(|| format!("--synthetic {spec:?}: expected ROWSxCOLS:RANK"))
}

/// Offset between mask and data seeds of a synthetic draw.
const DATA_SEED_OFFSET: u64 = 1_000_003;

fn draw(
    name: &str,
    planes: &[DenseMatrix],
    src: &MaskSourceArgs,
    seed: u64,
) -> Result<BenchInstance> {
    let (rows, cols) = planes[0].shape();
    let mask = resolve_mask(src, rows, cols, seed)?;
    let channels = planes
        .iter()
        .map(|p| MaskedMatrix::new(p, mask.clone()))
        .collect::<dwtnnr::Result<Vec<_>>>()?;
    Ok(BenchInstance {
        name: name.to_owned(),
        channels,
        truth: Some(planes.to_vec()),
    })
}

fn bench(args: BenchArgs) -> Result<()> {
    ensure!(args.repeats >= 1, "--repeats must be at least 1");
    let mut cases = Vec::new();
    if let Some(dir) = &args.input_dir {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("listing {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("ppm"))
            })
            .collect();
        files.sort();
        for path in files {
            let img = read_image(&path)?;
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let draws = (0..args.repeats as u64)
                .map(|k| draw(&name, img.planes(), &args.mask, args.mask.seed + k))
                .collect::<Result<Vec<_>>>()?;
            cases.push(BenchCase { name, draws });
        }
    }
    for spec in &args.synthetic {
        let (m, n, rank) = parse_synthetic(spec)?;
        let draws = (0..args.repeats as u64)
            .map(|k| {
                let seed = args.mask.seed + k;
                let data =
                    make_low_rank(&SynthSpec::new(m, n, rank, seed + DATA_SEED_OFFSET))?.data;
                draw(spec, &[data], &args.mask, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        cases.push(BenchCase {
            name: spec.clone(),
            draws,
        });
    }
    ensure!(
        !cases.is_empty(),
        "no benchmark instances: give --input-dir with images or --synthetic"
    );

    let r_values = match args.r_range {
        Some(range) => (range.start..=range.end).collect(),
        None => vec![args.solver.r],
    };
    let plan = BenchPlan {
        methods: args.methods.iter().map(|&m| m.into()).collect(),
        r_values,
        config: args.solver.config(),
        inner: args.solver.inner(),
    };
    let rows = run_bench(&cases, &plan)?;
    match &args.output {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write_bench_csv(&rows, &mut w)?;
            w.flush()?;
        }
        None => write_bench_csv(&rows, io::stdout().lock())?,
    }
    for row in rows.iter().filter(|r| r.best) {
        eprintln!(
            "best: {} {} r={} psnr={:.4}",
            row.instance,
            row.method,
            row.r,
            row.psnr.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn weights(args: WeightsArgs) -> Result<()> {
    let mask = load_mask_file(&args.mask, args.threshold)?;
    let w = exponential_weights(&observation_counts(&mask), args.theta1, args.theta2)?;
    let vis = weight_visualization(&w, &mask)?;
    write_image(&args.output, &heatmap(&vis)?)?;
    Ok(())
}
