//! End-to-end runs of the `dwtnnr` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dwtnnr::{make_low_rank, SynthSpec};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dwtnnr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "dwtnnr {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Minimal binary netpbm reader: (width, height, channels, samples).
fn read_pnm(path: &Path) -> (usize, usize, usize, Vec<u8>) {
    let bytes = fs::read(path).unwrap();
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => panic!("unexpected magic {other:?}"),
    };
    let mut fields = Vec::new();
    let mut pos = 2;
    while fields.len() < 3 {
        while bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if bytes[pos] == b'#' {
            while bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos])
                .unwrap()
                .parse::<usize>()
                .unwrap(),
        );
    }
    assert_eq!(fields[2], 255);
    let data = bytes[pos + 1..].to_vec();
    assert_eq!(data.len(), fields[0] * fields[1] * channels);
    (fields[0], fields[1], channels, data)
}

fn write_pnm(path: &Path, width: usize, height: usize, channels: usize, data: &[u8]) {
    let magic = if channels == 1 { "P5" } else { "P6" };
    let mut bytes = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(data);
    fs::write(path, bytes).unwrap();
}

/// Rank-`rank` synthetic rounded to bytes, row-major.
fn synthetic_bytes(rows: usize, cols: usize, rank: usize, seed: u64) -> Vec<u8> {
    let x = make_low_rank(&SynthSpec::new(rows, cols, rank, seed))
        .unwrap()
        .data;
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(x[(i, j)].round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

fn psnr_line(out: &Output) -> f64 {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix("psnr_db="))
        .expect("psnr_db line")
        .parse()
        .unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

struct Scene {
    dir: TempDir,
}

impl Scene {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// 24×18 RGB image built from three rank-2 planes plus a 50% random mask.
    fn rgb_with_mask(&self) -> (PathBuf, PathBuf) {
        let (w, h) = (24, 18);
        let planes: Vec<Vec<u8>> = (0..3).map(|c| synthetic_bytes(h, w, 2, 40 + c)).collect();
        let mut data = Vec::with_capacity(w * h * 3);
        for k in 0..w * h {
            for p in &planes {
                data.push(p[k]);
            }
        }
        let img = self.path("img.ppm");
        write_pnm(&img, w, h, 3, &data);
        let mask = self.path("mask.pgm");
        ok(&[
            "mask",
            "--random",
            "0.5",
            "--size",
            "24x18",
            "--seed",
            "3",
            "-o",
            s(&mask),
        ]);
        (img, mask)
    }
}

#[test]
fn random_mask_has_exact_missing_count() {
    let sc = Scene::new();
    let m = sc.path("m.pgm");
    ok(&[
        "mask",
        "--random",
        "0.5",
        "--size",
        "400x300",
        "--seed",
        "7",
        "-o",
        s(&m),
    ]);
    let (w, h, c, data) = read_pnm(&m);
    assert_eq!((w, h, c), (400, 300, 1));
    assert_eq!(data.iter().filter(|&&v| v == 0).count(), 60000);
    assert!(data.iter().all(|&v| v == 0 || v == 255));

    let again = sc.path("m2.pgm");
    ok(&[
        "mask",
        "--missing-ratio",
        "0.5",
        "--size",
        "400x300",
        "--seed",
        "7",
        "-o",
        s(&again),
    ]);
    assert_eq!(fs::read(&m).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn diamond_mask_matches_the_predicate() {
    let sc = Scene::new();
    let m = sc.path("d.pgm");
    ok(&[
        "mask",
        "--diamond",
        "12,20,6.5,9",
        "--size",
        "40x30",
        "-o",
        s(&m),
    ]);
    let (w, h, _, data) = read_pnm(&m);
    assert_eq!((w, h), (40, 30));
    for i in 0..h {
        for j in 0..w {
            let inside = (i as f64 - 12.0).abs() / 6.5 + (j as f64 - 20.0).abs() / 9.0 <= 1.0;
            let expect = if inside { 0 } else { 255 };
            assert_eq!(data[i * w + j], expect, "pixel ({i}, {j})");
        }
    }
}

#[test]
fn mask_from_image_thresholds_at_128() {
    let sc = Scene::new();
    let text = sc.path("text.pgm");
    let (w, h) = (16, 16);
    let src: Vec<u8> = (0..w * h).map(|k| k as u8).collect();
    write_pnm(&text, w, h, 1, &src);
    let m = sc.path("m.pgm");
    ok(&["mask", "--from-image", s(&text), "-o", s(&m)]);
    let (_, _, _, data) = read_pnm(&m);
    for (k, (&v, &out)) in src.iter().zip(&data).enumerate() {
        assert_eq!(out == 255, v >= 128, "pixel {k} value {v}");
    }
}

#[test]
fn invalid_mask_specs_fail() {
    let sc = Scene::new();
    let m = sc.path("m.pgm");
    for args in [
        vec!["mask", "--random", "1.5", "--size", "4x4", "-o", s(&m)],
        vec!["mask", "--block", "0,0,9,9", "--size", "4x4", "-o", s(&m)],
        vec!["mask", "--size", "4x4", "-o", s(&m)],
        vec![
            "mask",
            "--random",
            "0.5",
            "--block",
            "0,0,1,1",
            "--size",
            "4x4",
            "-o",
            s(&m),
        ],
        vec!["mask", "--triangle", "0,0,2", "--size", "4x4", "-o", s(&m)],
    ] {
        assert_eq!(run(&args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn complete_keeps_observed_pixels_and_writes_artifacts() {
    let sc = Scene::new();
    let (img, mask) = sc.rgb_with_mask();
    let out = sc.path("out.ppm");
    let log = sc.path("trace.csv");
    ok(&[
        "complete",
        "--input",
        s(&img),
        "--mask",
        s(&mask),
        "--method",
        "dwtnnr",
        "--r",
        "3",
        "--output",
        s(&out),
        "--log",
        s(&log),
    ]);
    let (w, h, c, rec) = read_pnm(&out);
    let (_, _, _, src) = read_pnm(&img);
    let (_, _, _, m) = read_pnm(&mask);
    assert_eq!((w, h, c), (24, 18, 3));
    for k in 0..w * h {
        if m[k] == 255 {
            assert_eq!(&rec[3 * k..3 * k + 3], &src[3 * k..3 * k + 3], "pixel {k}");
        }
    }

    for ch in 0..3 {
        let text = fs::read_to_string(sc.path(&format!("trace-c{ch}.csv"))).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("iter,delta,inv_alpha,step_bound,elapsed_ms,psnr")
        );
        assert!(text.lines().count() > 1);
    }
    assert!(!log.exists());

    let manifest = fs::read_to_string(sc.path("out.ppm.manifest")).unwrap();
    for line in [
        "theta1=1.2",
        "theta2=1.2",
        "alpha1=0.0001",
        "rho=1.2",
        "eps=0.0001",
        "max-iters=200",
        "method=dwtnnr",
        "r=3",
        "stopping=relative",
    ] {
        assert!(
            manifest.lines().any(|l| l == line),
            "missing {line} in\n{manifest}"
        );
    }
    assert!(manifest.lines().any(|l| l.starts_with("tool_version=")));
}

#[test]
fn identical_flags_give_identical_outputs() {
    let sc = Scene::new();
    let (img, _) = sc.rgb_with_mask();
    let runs: Vec<(PathBuf, PathBuf)> = (0..2)
        .map(|k| {
            let out = sc.path(&format!("out{k}.ppm"));
            let log = sc.path(&format!("log{k}.csv"));
            ok(&[
                "complete",
                "--input",
                s(&img),
                "--random",
                "0.4",
                "--seed",
                "9",
                "--r",
                "2",
                "-o",
                s(&out),
                "--log",
                s(&log),
                "--truth",
                s(&img),
            ]);
            (out, log)
        })
        .collect();
    assert_eq!(fs::read(&runs[0].0).unwrap(), fs::read(&runs[1].0).unwrap());
    for ch in 0..3 {
        let read = |k: usize| {
            let p = sc.path(&format!("log{k}-c{ch}.csv"));
            let mut rows = csv_rows(&fs::read_to_string(p).unwrap());
            // wall-clock time is the one column allowed to differ
            for row in &mut rows {
                row[4].clear();
            }
            rows
        };
        assert_eq!(read(0), read(1), "channel {ch}");
    }
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let sc = Scene::new();
    let (img, mask) = sc.rgb_with_mask();
    let out = sc.path("out.ppm");
    ok(&[
        "complete",
        "--input",
        s(&img),
        "--mask",
        s(&mask),
        "--r",
        "2",
        "--max-iters",
        "60",
        "--alpha1",
        "0.0002",
        "-o",
        s(&out),
        "--manifest",
        s(&sc.path("run.txt")),
    ]);
    let first = fs::read(&out).unwrap();
    fs::remove_file(&out).unwrap();
    ok(&[
        "complete",
        "--from-manifest",
        s(&sc.path("run.txt")),
        "--manifest",
        s(&sc.path("again.txt")),
    ]);
    assert_eq!(fs::read(&out).unwrap(), first);
    assert_eq!(
        fs::read_to_string(sc.path("run.txt")).unwrap(),
        fs::read_to_string(sc.path("again.txt")).unwrap()
    );
}

#[test]
fn unweighted_scores_below_weighted_on_a_triangle() {
    let sc = Scene::new();
    let (rows, cols) = (60, 60);
    let img = sc.path("tri.pgm");
    write_pnm(&img, cols, rows, 1, &synthetic_bytes(rows, cols, 3, 5));
    let score = |method: &str| {
        let out = sc.path(&format!("{method}.pgm"));
        psnr_line(&ok(&[
            "complete",
            "--input",
            s(&img),
            "--triangle",
            "15,15,30,30",
            "--r",
            "3",
            "--method",
            method,
            "-o",
            s(&out),
            "--truth",
            s(&img),
        ]))
    };
    let weighted = score("dwtnnr");
    let unweighted = score("unweighted");
    assert!(
        unweighted < weighted,
        "unweighted {unweighted} dB, weighted {weighted} dB"
    );
}

#[test]
fn complete_rejects_bad_inputs() {
    let sc = Scene::new();
    let (img, _) = sc.rgb_with_mask();
    let out = sc.path("out.ppm");
    let wrong = sc.path("small.pgm");
    write_pnm(&wrong, 4, 4, 1, &[255; 16]);
    let garbage = sc.path("garbage.ppm");
    fs::write(&garbage, b"not an image").unwrap();
    for args in [
        vec![
            "complete",
            "--input",
            "/nonexistent/in.ppm",
            "--random",
            "0.5",
            "-o",
            s(&out),
        ],
        vec![
            "complete",
            "--input",
            s(&garbage),
            "--random",
            "0.5",
            "-o",
            s(&out),
        ],
        vec![
            "complete",
            "--input",
            s(&img),
            "--mask",
            s(&wrong),
            "-o",
            s(&out),
        ],
        vec![
            "complete",
            "--input",
            s(&img),
            "--random",
            "0.5",
            "-o",
            "/nonexistent/dir/o.ppm",
        ],
        vec![
            "complete",
            "--input",
            s(&img),
            "--random",
            "0.5",
            "--r",
            "0",
            "-o",
            s(&out),
        ],
        vec!["complete", "--input", s(&img), "-o", s(&out)],
    ] {
        let res = run(&args);
        assert_eq!(res.status.code(), Some(1), "{args:?}");
        assert!(!res.stderr.is_empty());
    }
}

#[test]
fn metrics_prints_csv() {
    let sc = Scene::new();
    let truth = sc.path("t.pgm");
    let rec = sc.path("r.pgm");
    let mask = sc.path("m.pgm");
    write_pnm(&truth, 2, 2, 1, &[10, 20, 30, 40]);
    write_pnm(&rec, 2, 2, 1, &[10, 23, 30, 36]);
    write_pnm(&mask, 2, 2, 1, &[255, 0, 255, 0]);
    let out = ok(&[
        "metrics",
        "--recovered",
        s(&rec),
        "--truth",
        s(&truth),
        "--mask",
        s(&mask),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("erec,mse,psnr_db"));
    let vals: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    // two missing pixels with errors 3 and 4
    assert!((vals[0] - 5.0).abs() < 1e-12);
    assert!((vals[1] - 12.5).abs() < 1e-12);
    let expect = 10.0 * (255.0f64 * 255.0 / 12.5).log10();
    assert!((vals[2] - expect).abs() < 1e-9);
}

fn bench_rows(args: &[&str]) -> Vec<Vec<String>> {
    let out = ok(args);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("instance,method,r,psnr,iterations,elapsed_ms,best")
    );
    csv_rows(&text)
}

#[test]
fn bench_sweeps_r_and_marks_one_best() {
    let rows = bench_rows(&[
        "bench",
        "--synthetic",
        "20x15:2",
        "--r-range",
        "1..3",
        "--random",
        "0.3",
    ]);
    assert_eq!(rows.len(), 3);
    let rs: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(rs, ["1", "2", "3"]);
    assert_eq!(rows.iter().filter(|r| r[6] == "true").count(), 1);
}

#[test]
fn bench_psnr_is_the_mean_over_repeats() {
    let base = [
        "bench",
        "--synthetic",
        "20x15:2",
        "--r",
        "2",
        "--random",
        "0.3",
        "--max-iters",
        "80",
    ];
    let mut args = base.to_vec();
    args.extend(["--repeats", "10", "--seed", "100"]);
    let pooled: f64 = bench_rows(&args)[0][3].parse().unwrap();
    let singles: Vec<f64> = (100..110)
        .map(|seed| {
            let seed = seed.to_string();
            let mut args = base.to_vec();
            args.extend(["--seed", seed.as_str()]);
            bench_rows(&args)[0][3].parse().unwrap()
        })
        .collect();
    let mean = singles.iter().sum::<f64>() / 10.0;
    assert!(
        (pooled - mean).abs() <= 1e-9 * mean.abs().max(1.0),
        "{pooled} vs {mean}"
    );
    // the draws really differ
    assert!(singles.iter().any(|&p| p != singles[0]));
}

#[test]
fn gradient_solver_needs_fewer_steps_than_admm() {
    let rows = bench_rows(&[
        "bench",
        "--synthetic",
        "30x20:2",
        "--methods",
        "dwtnnr,admm",
        "--r",
        "2",
        "--random",
        "0.4",
    ]);
    let iters = |method: &str| -> f64 {
        rows.iter().find(|r| r[1] == method).unwrap()[4]
            .parse()
            .unwrap()
    };
    assert!(
        iters("dwtnnr") <= iters("admm"),
        "{} vs {}",
        iters("dwtnnr"),
        iters("admm")
    );
}

#[test]
fn bench_reads_a_directory_and_refuses_an_empty_one() {
    let sc = Scene::new();
    let empty = sc.path("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(
        run(&["bench", "--input-dir", s(&empty), "--random", "0.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["bench", "--random", "0.5"]).status.code(), Some(1));

    let full = sc.path("imgs");
    fs::create_dir(&full).unwrap();
    write_pnm(
        &full.join("a.pgm"),
        12,
        10,
        1,
        &synthetic_bytes(10, 12, 1, 1),
    );
    write_pnm(
        &full.join("b.pgm"),
        12,
        10,
        1,
        &synthetic_bytes(10, 12, 2, 2),
    );
    fs::write(full.join("notes.txt"), "skip me").unwrap();
    let csv = sc.path("bench.csv");
    ok(&[
        "bench",
        "--input-dir",
        s(&full),
        "--r-range",
        "1..2",
        "--random",
        "0.3",
        "-o",
        s(&csv),
    ]);
    let rows = csv_rows(&fs::read_to_string(&csv).unwrap());
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][0], "a.pgm");
    assert_eq!(rows[3][0], "b.pgm");
}

#[test]
fn heatmap_of_a_fully_observed_mask_is_black() {
    let sc = Scene::new();
    let mask = sc.path("m.pgm");
    write_pnm(&mask, 8, 6, 1, &[255; 48]);
    let vis = sc.path("w.pgm");
    ok(&["weights", "--mask", s(&mask), "-o", s(&vis)]);
    let (w, h, _, data) = read_pnm(&vis);
    assert_eq!((w, h), (8, 6));
    assert!(data.iter().all(|&v| v == 0));
}

#[test]
fn heatmap_of_one_block_is_uniform_inside() {
    let sc = Scene::new();
    let mask = sc.path("m.pgm");
    ok(&[
        "mask",
        "--block",
        "3,4,5,6",
        "--size",
        "20x15",
        "-o",
        s(&mask),
    ]);
    let vis = sc.path("w.pgm");
    ok(&["weights", "--mask", s(&mask), "-o", s(&vis)]);
    let (w, _, _, data) = read_pnm(&vis);
    for (k, &v) in data.iter().enumerate() {
        let (i, j) = (k / w, k % w);
        let inside = (3..8).contains(&i) && (4..10).contains(&j);
        assert_eq!(v, if inside { 255 } else { 0 }, "pixel ({i}, {j})");
    }
}

#[test]
fn heatmap_brightness_grows_with_block_size() {
    let sc = Scene::new();
    let mask = sc.path("m.pgm");
    // four square blocks on separate rows and columns
    let blocks = [(2, 2, 3), (10, 10, 5), (20, 20, 7), (32, 32, 9)];
    let mut args = vec![
        "mask".to_owned(),
        "--size".into(),
        "48x48".into(),
        "-o".into(),
        s(&mask).into(),
    ];
    for (t, l, k) in blocks {
        args.push("--block".into());
        args.push(format!("{t},{l},{k},{k}"));
    }
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let vis = sc.path("w.pgm");
    ok(&["weights", "--mask", s(&mask), "-o", s(&vis)]);
    let (w, _, _, data) = read_pnm(&vis);
    let means: Vec<f64> = blocks
        .iter()
        .map(|&(t, l, k)| {
            let mut sum = 0.0;
            for i in t..t + k {
                for j in l..l + k {
                    sum += data[i * w + j] as f64;
                }
            }
            sum / (k * k) as f64
        })
        .collect();
    assert!(means.windows(2).all(|p| p[0] < p[1]), "{means:?}");
}

#[test]
fn weights_rejects_bad_masks() {
    let sc = Scene::new();
    let rgb = sc.path("rgb.ppm");
    write_pnm(&rgb, 2, 2, 3, &[0; 12]);
    let vis = sc.path("w.pgm");
    assert_eq!(
        run(&["weights", "--mask", s(&rgb), "-o", s(&vis)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["weights", "--mask", "/nonexistent.pgm", "-o", s(&vis)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn help_and_unknown_flags() {
    assert!(run(&["--help"]).status.success());
    assert_eq!(run(&["complete", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}
