use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sfvq::datasets::{generate, Distribution};
use sfvq::io::{read_codebook, read_direction, read_vectors, write_codebook, write_vectors};
use sfvq::{Codebook, VectorSet};

fn sfvq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfvq"))
        .args(args)
        .env_remove("SFVQ_SEED")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn kv(out: &Output) -> HashMap<String, String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn pentagon_file(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("d.vec");
    ok(&sfvq(&[
        "gen",
        "--kind",
        "pentagon2d",
        "--n",
        &n.to_string(),
        "--seed",
        "7",
        "--out",
        p(&path),
    ]));
    path
}

#[test]
fn gen_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = pentagon_file(dir.path(), 100);
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 + 100 * 2 * 4);
    let vs = read_vectors(&path).unwrap();
    assert_eq!((vs.count(), vs.dim()), (100, 2));
}

#[test]
fn seed_env_applies_only_without_flag() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed_flag: Option<&str>, env: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_sfvq"));
        cmd.args(["gen", "--kind", "moons3d", "--n", "50", "--out", p(&out)]);
        cmd.env_remove("SFVQ_SEED");
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        if let Some(e) = env {
            cmd.env("SFVQ_SEED", e);
        }
        ok(&cmd.output().unwrap());
        std::fs::read(out).unwrap()
    };
    let flag7 = run("a", Some("7"), None);
    let env7 = run("b", None, Some("7"));
    let both = run("c", Some("7"), Some("9"));
    let default = run("d", None, None);
    assert_eq!(flag7, env7);
    assert_eq!(flag7, both);
    assert_ne!(flag7, default);
}

#[test]
fn train_is_byte_reproducible_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let data = pentagon_file(dir.path(), 2000);
    let mut outputs = Vec::new();
    for name in ["a.vec", "b.vec"] {
        let out = dir.path().join(name);
        let log = dir.path().join(format!("{name}.log"));
        let res = sfvq(&[
            "train",
            "--data",
            p(&data),
            "--bits",
            "3",
            "--batches-per-stage",
            "500",
            "--seed",
            "1",
            "--log",
            p(&log),
            "--log-interval",
            "100",
            "--out",
            p(&out),
        ]);
        ok(&res);
        let kv = kv(&res);
        assert_eq!(kv["codewords"], "8");
        assert_eq!(kv["stages"], "2");
        let log = std::fs::read_to_string(&log).unwrap();
        assert_eq!(log.lines().count(), 10);
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(read_codebook(dir.path().join("a.vec")).unwrap().len(), 8);
}

#[test]
fn metrics_reports_far_codeword_as_outlier() {
    let dir = tempfile::tempdir().unwrap();
    let data = pentagon_file(dir.path(), 2000);
    let cb = Codebook::from_rows(&[[-0.3, -0.3], [0.0, 0.0], [0.3, 0.2], [40.0, 40.0]]).unwrap();
    let cb_path = dir.path().join("cb.vec");
    write_codebook(&cb_path, &cb).unwrap();
    let out = sfvq(&["metrics", "--data", p(&data), "--codebook", p(&cb_path)]);
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l == "outlier_count=1"), "{stdout}");
    let kv = kv(&out);
    for key in [
        "adjacency_ratio",
        "jump_count",
        "inside_fraction",
        "total_path_length",
        "codeword_distortion",
        "segment_distortion",
    ] {
        assert!(kv.contains_key(key), "missing {key}");
    }
    let seg: f64 = kv["segment_distortion"].parse().unwrap();
    let cw: f64 = kv["codeword_distortion"].parse().unwrap();
    assert!(seg <= cw);
}

#[test]
fn help_on_every_subcommand() {
    let subs = [
        "gen",
        "train",
        "quantize",
        "metrics",
        "reorder",
        "directions",
        "sample-line",
        "pullback",
        "plot",
    ];
    for sub in subs {
        let out = sfvq(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(
            text.contains("--out") || sub == "metrics" || sub == "quantize",
            "{sub}"
        );
    }
    let out = String::from_utf8_lossy(&sfvq(&["sample-line", "--help"]).stdout).into_owned();
    assert!(out.contains("[default: 20]") && out.contains("[default: 0.3]"));
    let out = String::from_utf8_lossy(&sfvq(&["metrics", "--help"]).stdout).into_owned();
    assert!(out.contains("[default: 3]") && out.contains("[default: 95]"));
    assert_eq!(sfvq(&["--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one_with_usage_on_stderr() {
    for args in [
        vec!["bogus"],
        vec![
            "gen",
            "--kind",
            "pentagon2d",
            "--n",
            "10",
            "--out",
            "x.vec",
            "--wat",
        ],
        vec![],
    ] {
        let out = sfvq(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains("Usage"),
            "{args:?}"
        );
        assert!(out.stdout.is_empty());
    }
    let out = sfvq(&[
        "reorder",
        "--codebook",
        "c.vec",
        "--heuristic",
        "2opt",
        "--out",
        "o.vec",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("possible values"));
}

#[test]
fn failures_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let data = pentagon_file(dir.path(), 200);
    let cb_path = dir.path().join("cb.vec");
    write_codebook(
        &cb_path,
        &Codebook::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap(),
    )
    .unwrap();
    let out = dir.path().join("out.vec");
    let log = dir.path().join("train.log");
    let garbage = dir.path().join("garbage.vec");
    std::fs::write(&garbage, b"SFVQVEC2\x01\0\0\0\x02\0\0\0").unwrap();

    let cases: Vec<(Vec<&str>, i32)> = vec![
        (
            vec![
                "train",
                "--data",
                p(&data),
                "--bits",
                "13",
                "--log",
                p(&log),
                "--out",
                p(&out),
            ],
            1,
        ),
        (vec!["train", "--data", p(&garbage), "--out", p(&out)], 2),
        (
            vec![
                "train",
                "--data",
                p(&data),
                "--bits",
                "2",
                "--batch-size",
                "0",
                "--out",
                p(&out),
            ],
            1,
        ),
        (
            vec![
                "directions",
                "--codebook",
                p(&cb_path),
                "--pair",
                "1",
                "--out",
                p(&out),
            ],
            2,
        ),
        (
            vec![
                "sample-line",
                "--codebook",
                p(&cb_path),
                "--pair",
                "0",
                "--k",
                "1",
                "--out",
                p(&out),
            ],
            1,
        ),
        (
            vec!["reorder", "--codebook", p(&garbage), "--out", p(&out)],
            2,
        ),
        (
            vec![
                "quantize",
                "--data",
                p(&garbage),
                "--codebook",
                p(&cb_path),
                "--out",
                p(&out),
            ],
            2,
        ),
        (
            vec![
                "pullback",
                "--pairs-src",
                p(&data),
                "--pairs-img",
                p(&garbage),
                "--codebook",
                p(&cb_path),
                "--out",
                p(&out),
            ],
            2,
        ),
        (vec!["plot", "--heatmap", p(&garbage), "--out", p(&out)], 2),
        (
            vec![
                "gen",
                "--kind",
                "gaussian",
                "--dim",
                "0",
                "--n",
                "5",
                "--out",
                p(&out),
            ],
            1,
        ),
    ];
    for (args, code) in cases {
        let res = sfvq(&args);
        assert_eq!(
            res.status.code(),
            Some(code),
            "{args:?}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        assert!(String::from_utf8_lossy(&res.stderr).starts_with("error") || code == 1);
        assert!(!out.exists(), "{args:?} wrote output");
        assert!(!log.exists(), "{args:?} wrote log");
        assert!(!dir.path().join("out.vec.txt").exists());
    }
}

#[test]
fn reorder_directions_sample_line_pullback_quantize() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = pentagon_file(d, 3000);
    let cb = d.join("cb.vec");
    ok(&sfvq(&[
        "train",
        "--data",
        p(&data),
        "--bits",
        "4",
        "--batches-per-stage",
        "300",
        "--mode",
        "vq",
        "--out",
        p(&cb),
    ]));
    let original = read_codebook(&cb).unwrap();

    let re = d.join("re.vec");
    let out = sfvq(&[
        "reorder",
        "--codebook",
        p(&cb),
        "--heuristic",
        "greedy",
        "--out",
        p(&re),
    ]);
    ok(&out);
    let kv = kv(&out);
    assert_eq!(kv["heuristic"], "greedy");
    let len: f64 = kv["path_length"].parse().unwrap();
    assert!(len > 0.0);
    let reordered = read_codebook(&re).unwrap();
    let mut a: Vec<Vec<u64>> = original
        .codewords()
        .map(|c| c.iter().map(|v| v.to_bits()).collect())
        .collect();
    let mut b: Vec<Vec<u64>> = reordered
        .codewords()
        .map(|c| c.iter().map(|v| v.to_bits()).collect())
        .collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);

    let dir_path = d.join("dir5.vec");
    let out = sfvq(&[
        "directions",
        "--codebook",
        p(&re),
        "--pair",
        "5",
        "--label",
        "smile",
        "--layer-mask",
        "0-3",
        "--angle-with",
        "6",
        "--out",
        p(&dir_path),
    ]);
    ok(&out);
    assert_eq!(kv_of(&out, "pair"), "5,6");
    assert!(kv_of(&out, "angle_deg_with_6").parse::<f64>().is_ok());
    let dv = read_direction(&dir_path).unwrap();
    assert_eq!(dv.label, "smile");
    assert_eq!(dv.layer_mask, "0-3");
    assert!((dv.vector.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-6);

    let aug = d.join("aug.vec");
    ok(&sfvq(&[
        "sample-line",
        "--codebook",
        p(&re),
        "--pair",
        "6",
        "--k",
        "20",
        "--noise",
        "0",
        "--out",
        p(&aug),
    ]));
    let line = read_vectors(&aug).unwrap();
    assert_eq!(line.count(), 20);
    let as32 = |x: &[f64]| x.iter().map(|v| *v as f32 as f64).collect::<Vec<_>>();
    assert_eq!(line.row(0), as32(reordered.codeword(6)).as_slice());
    assert_eq!(line.row(19), as32(reordered.codeword(7)).as_slice());

    // pullback through the identity map returns the cell means of the data itself
    let pb = d.join("pb.vec");
    let out = sfvq(&[
        "pullback",
        "--pairs-src",
        p(&data),
        "--pairs-img",
        p(&data),
        "--codebook",
        p(&re),
        "--out",
        p(&pb),
    ]);
    ok(&out);
    assert_eq!(kv_of(&out, "codewords"), "16");
    assert_eq!(read_codebook(&pb).unwrap().len(), 16);

    let rec = d.join("rec.csv");
    let out = sfvq(&[
        "quantize",
        "--data",
        p(&data),
        "--codebook",
        p(&re),
        "--method",
        "nearest",
        "--out",
        p(&rec),
    ]);
    ok(&out);
    let nearest: f64 = kv_of(&out, "distortion").parse().unwrap();
    assert_eq!(read_vectors(&rec).unwrap().count(), 3000);
    let out = sfvq(&["quantize", "--data", p(&data), "--codebook", p(&re)]);
    let segment: f64 = kv_of(&out, "distortion").parse().unwrap();
    assert!(segment <= nearest);
}

fn kv_of(out: &Output, key: &str) -> String {
    kv(out).remove(key).unwrap_or_else(|| panic!("no {key}"))
}

fn luminance(rgb: &str) -> f64 {
    let inner = rgb.trim_start_matches("rgb(").trim_end_matches(')');
    let c: Vec<f64> = inner.split(',').map(|v| v.parse().unwrap()).collect();
    0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
}

#[test]
fn curve_svg_structure() {
    let dir = tempfile::tempdir().unwrap();
    let data = pentagon_file(dir.path(), 2000);
    let cb = dir.path().join("cb.vec");
    ok(&sfvq(&[
        "train",
        "--data",
        p(&data),
        "--bits",
        "6",
        "--batches-per-stage",
        "100",
        "--out",
        p(&cb),
    ]));
    let svg = dir.path().join("curve.svg");
    ok(&sfvq(&[
        "plot",
        "--data",
        p(&data),
        "--codebook",
        p(&cb),
        "--out",
        p(&svg),
    ]));
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let named = |n: &str| {
        doc.descendants()
            .filter(|e| e.has_tag_name(n))
            .collect::<Vec<_>>()
    };
    assert_eq!(named("circle").len(), 64);
    let lines = named("line");
    assert_eq!(lines.len(), 63);
    let lum: Vec<f64> = lines
        .iter()
        .map(|l| luminance(l.attribute("stroke").unwrap()))
        .collect();
    assert!(lum.windows(2).all(|w| w[1] < w[0]));

    let again = dir.path().join("again.svg");
    ok(&sfvq(&[
        "plot",
        "--data",
        p(&data),
        "--codebook",
        p(&cb),
        "--out",
        p(&again),
    ]));
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn moons_svg_is_valid_xml() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("m.vec");
    write_vectors(&data, &generate(Distribution::moons3d(), 500, 3).unwrap()).unwrap();
    let cb = dir.path().join("cb.vec");
    ok(&sfvq(&[
        "train",
        "--data",
        p(&data),
        "--bits",
        "4",
        "--batches-per-stage",
        "100",
        "--out",
        p(&cb),
    ]));
    let svg = dir.path().join("m.svg");
    let out = sfvq(&[
        "plot",
        "--data",
        p(&data),
        "--codebook",
        p(&cb),
        "--out",
        p(&svg),
    ]);
    ok(&out);
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(
        doc.descendants()
            .filter(|e| e.has_tag_name("circle"))
            .count(),
        16
    );
}

#[test]
fn heatmap_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let cb = dir.path().join("cb.vec");
    let rows = VectorSet::from_rows(&[[0.0, 0.0], [3.0, 4.0], [1.0, 0.0]]).unwrap();
    write_codebook(&cb, &Codebook::new(rows).unwrap()).unwrap();
    let pgm = dir.path().join("hm.pgm");
    let out = sfvq(&["plot", "--heatmap", p(&cb), "--out", p(&pgm)]);
    ok(&out);
    assert_eq!(kv_of(&out, "size"), "3");
    let bytes = std::fs::read(&pgm).unwrap();
    let header = b"P5\n3 3\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    let px = &bytes[header.len()..];
    assert_eq!(px.len(), 9);
    assert_eq!([px[0], px[4], px[8]], [255, 255, 255]);
    assert_eq!(px.iter().filter(|&&v| v == 0).count(), 2);
}
