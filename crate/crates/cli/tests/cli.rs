use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cvrnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvrnn")).args(args).output().expect("spawn cvrnn")
}

fn ok(args: &[&str]) -> String {
    let out = cvrnn(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    cvrnn(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_pgm(path: &Path, side: usize, data: &[u8]) {
    let mut bytes = format!("P5\n{side} {side}\n255\n").into_bytes();
    bytes.extend_from_slice(data);
    fs::write(path, bytes).unwrap();
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn tsv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(String::from).collect())
        .collect()
}

fn generate(out: &Path, count: &str, shapes: &str, seed: &str) {
    ok(&["generate", "--count", count, "--shapes", shapes, "--seed", seed, "--out", s(out)]);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "run_manifest.tsv")
        .map(|e| (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn generate_is_deterministic() {
    let t = TempDir::new().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    generate(&a, "4", "2", "11");
    generate(&b, "4", "2", "11");
    let (da, db) = (dir_bytes(&a), dir_bytes(&b));
    assert_eq!(da.len(), 9);
    assert_eq!(da, db);
    assert!(a.join("run_manifest.tsv").exists());

    let c = t.path().join("c");
    generate(&c, "4", "2", "12");
    assert_ne!(dir_bytes(&c), da);
}

#[test]
fn zero_shapes_is_usage_error() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&["generate", "--count", "2", "--shapes", "0", "--out", s(t.path())]), 2);
    assert_eq!(code(&["generate", "--count", "2", "--shapes", "2", "--overlap", "maybe", "--out", s(t.path())]), 2);
}

#[test]
fn missing_or_invalid_config_is_usage_error() {
    let t = TempDir::new().unwrap();
    generate(t.path(), "1", "2", "0");
    let img = t.path().join("image_00000.pgm");
    let out = t.path().join("seg");
    assert_eq!(code(&["segment", "--image", s(&img), "--config", "/nonexistent.cfg", "--out", s(&out)]), 2);
    let bad = write_config(t.path(), "bad.cfg", "layer2.sigma = -1\n");
    assert_eq!(code(&["segment", "--image", s(&img), "--config", s(&bad), "--out", s(&out)]), 2);
    let unknown = write_config(t.path(), "unknown.cfg", "layer3.sigma = 1\n");
    let o = cvrnn(&["segment", "--image", s(&img), "--config", s(&unknown), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("layer3.sigma"));
}

#[test]
fn segment_writes_labels_and_numbered_frames() {
    let t = TempDir::new().unwrap();
    generate(t.path(), "1", "2", "3");
    let cfg = write_config(t.path(), "run.cfg", "# defaults\n");
    let out = t.path().join("seg");
    let img = t.path().join("image_00000.pgm");
    let stdout = ok(&["segment", "--image", s(&img), "--config", s(&cfg), "--out", s(&out), "--frames", "--projection"]);
    assert!(stdout.starts_with("objects\t"));
    assert!(out.join("labels.pgm").exists());
    assert!(out.join("projection.tsv").exists());
    let l1: Vec<String> = {
        let mut v: Vec<String> = fs::read_dir(out.join("frames/layer1"))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    assert_eq!(l1.len(), 60);
    assert_eq!(l1[0], "frame_00001.pgm");
    assert_eq!(l1[59], "frame_00060.pgm");
    assert!(out.join("frames/layer2/frame_00100.pgm").exists());
    let manifest = fs::read_to_string(out.join("run_manifest.tsv")).unwrap();
    assert!(manifest.contains("command\tsegment"));
    assert!(manifest.contains("labels.pgm"));
}

#[test]
fn evaluate_perfect_predictions_scores_one() {
    let t = TempDir::new().unwrap();
    let data = t.path().join("data");
    generate(&data, "3", "2", "5");
    // truth maps stand in for predictions, with labels permuted in gray
    let pred = t.path().join("pred");
    fs::create_dir(&pred).unwrap();
    for i in 0..3 {
        let truth = fs::read(data.join(format!("truth_{i:05}.pgm"))).unwrap();
        let header = truth.len() - 28 * 28;
        let mut swapped = truth.clone();
        for b in &mut swapped[header..] {
            *b = match *b {
                0 => 0,
                255 => 100,
                _ => 200,
            };
        }
        fs::write(pred.join(format!("image_{i:05}.pgm")), swapped).unwrap();
    }
    let out = t.path().join("eval");
    let stdout = ok(&["evaluate", "--dataset", s(&data), "--predictions", s(&pred), "--out", s(&out)]);
    assert!(stdout.contains("mean_accuracy=1.000000"), "{stdout}");
    assert!(stdout.contains("evaluated=3"));
}

#[test]
fn evaluate_segments_generated_images() {
    let t = TempDir::new().unwrap();
    let data = t.path().join("data");
    generate(&data, "4", "2", "8");
    let out = t.path().join("eval");
    let stdout = ok(&["evaluate", "--dataset", s(&data), "--out", s(&out)]);
    let mean: f64 = stdout.split("mean_accuracy=").nth(1).unwrap().split('\t').next().unwrap().parse().unwrap();
    assert!(mean > 0.9, "{stdout}");
    assert_eq!(tsv(&out.join("evaluation.tsv")).len(), 5);
}

#[test]
fn empty_dataset_is_usage_error() {
    let t = TempDir::new().unwrap();
    let empty = t.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(code(&["evaluate", "--dataset", s(&empty), "--out", s(&t.path().join("o"))]), 2);
}

#[test]
fn missing_truth_is_skipped() {
    let t = TempDir::new().unwrap();
    let data = t.path().join("data");
    generate(&data, "2", "2", "9");
    fs::remove_file(data.join("truth_00001.pgm")).unwrap();
    let o = cvrnn(&["evaluate", "--dataset", s(&data), "--out", s(&t.path().join("o"))]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("evaluated=1\tskipped=1"), "{stdout}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

const DIAG_CFG: &str = "side = 4\nlayer1.epsilon = 0\nlayer1.steps = 10\nbackground_step = 10\n";

fn ramp_image(dir: &Path) -> PathBuf {
    let p = dir.join("ramp.pgm");
    let data: Vec<u8> = (0..16u8).map(|i| i * 17).collect();
    write_pgm(&p, 4, &data);
    p
}

#[test]
fn spectrum_of_uncoupled_matrix_is_its_frequencies() {
    let t = TempDir::new().unwrap();
    let img = ramp_image(t.path());
    let cfg = write_config(t.path(), "diag.cfg", DIAG_CFG);
    let out = t.path().join("spec");
    ok(&["spectrum", "--image", s(&img), "--config", s(&cfg), "--layer", "1", "--modes", "4", "--out", s(&out)]);
    let rows = tsv(&out.join("eigenvalues.tsv"));
    assert_eq!(rows.len(), 4);
    // omega = -0.5 + p for p in {0, 1/15, ..., 1}; largest moduli are the ends
    let mut ims: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    for r in &rows {
        assert!(r[1].parse::<f64>().unwrap().abs() < 1e-14);
    }
    ims.sort_by(f64::total_cmp);
    let want = [-0.5, -0.5 + 1.0 / 15.0, 0.5 - 1.0 / 15.0, 0.5];
    for (a, b) in ims.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert!(out.join("modes/mode_00004.pgm").exists());
}

#[test]
fn contribution_rows_sum_to_one() {
    let t = TempDir::new().unwrap();
    let img = ramp_image(t.path());
    let cfg = write_config(t.path(), "c.cfg", "side = 4\nlayer1.steps = 10\nbackground_step = 10\n");
    let out = t.path().join("spec");
    ok(&["spectrum", "--image", s(&img), "--config", s(&cfg), "--layer", "1", "--modes", "16", "--steps", "20", "--out", s(&out)]);
    let rows = tsv(&out.join("contributions.tsv"));
    assert_eq!(rows.len(), 21);
    for r in rows {
        let sum: f64 = r[1..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9, "{sum}");
    }
}

#[test]
fn spectrum_rejects_more_modes_than_nodes() {
    let t = TempDir::new().unwrap();
    let img = ramp_image(t.path());
    let cfg = write_config(t.path(), "d.cfg", DIAG_CFG);
    let out = t.path().join("o");
    assert_eq!(code(&["spectrum", "--image", s(&img), "--config", s(&cfg), "--layer", "1", "--modes", "17", "--out", s(&out)]), 2);
    assert_eq!(code(&["spectrum", "--image", s(&img), "--config", s(&cfg), "--layer", "1", "--modes", "0", "--out", s(&out)]), 2);
}

#[test]
fn lowrank_full_rank_matches_propagation() {
    let t = TempDir::new().unwrap();
    let img = ramp_image(t.path());
    let cfg = write_config(t.path(), "c.cfg", "side = 4\nlayer1.steps = 10\nbackground_step = 10\n");
    let out = t.path().join("lr");
    let args = ["lowrank", "--image", s(&img), "--config", s(&cfg), "--layer", "1", "--rank", "16", "--steps", "30", "--frames", "--out", s(&out)];
    ok(&args);
    let rows = tsv(&out.join("lowrank.tsv"));
    assert_eq!(rows.len(), 30);
    for r in &rows {
        assert!(r[2].parse::<f64>().unwrap() <= 1e-6, "{r:?}");
    }
    assert!(out.join("frames/frame_00030.pgm").exists());

    let mut zero = args.to_vec();
    zero[8] = "0";
    assert_eq!(code(&zero), 2);
    let mut excess = args.to_vec();
    excess[8] = "17";
    assert_eq!(code(&excess), 2);
}

fn sweep_setup(t: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let data = t.join("data");
    generate(&data, "4", "2", "21");
    let grid = write_config(t, "grid.txt", "layer2.epsilon = 0.1, 0.2\nsimilarity_window = 0.5, 1\n");
    let base = write_config(t, "base.cfg", "layer2.steps = 40\n");
    (data, grid, base)
}

#[test]
fn sweep_resumes_to_identical_results() {
    let t = TempDir::new().unwrap();
    let (data, grid, base) = sweep_setup(t.path());
    let full = t.path().join("full");
    let part = t.path().join("part");
    let common = ["sweep", "--dataset", s(&data), "--grid", s(&grid), "--config", s(&base)];

    let mut a = common.to_vec();
    a.extend(["--out", s(&full)]);
    ok(&a);

    let mut b = common.to_vec();
    b.extend(["--out", s(&part), "--limit", "1"]);
    let first = ok(&b);
    assert!(first.contains("stopped"));
    assert!(!part.join("best.cfg").exists());
    ok(&b);
    let mut c = common.to_vec();
    c.extend(["--out", s(&part)]);
    ok(&c);

    for f in ["sweep_log.tsv", "sweep_table.tsv", "best.cfg"] {
        assert_eq!(fs::read(full.join(f)).unwrap(), fs::read(part.join(f)).unwrap(), "{f}");
    }
    assert_eq!(tsv(&full.join("sweep_table.tsv")).len(), 4);
    let best = fs::read_to_string(full.join("best.cfg")).unwrap();
    assert!(best.contains("layer2.steps = 40"));
}

#[test]
fn sweep_rejects_bad_grid_key() {
    let t = TempDir::new().unwrap();
    let (data, _, _) = sweep_setup(t.path());
    let grid = write_config(t.path(), "bad.txt", "layer2.epsilon = 0.1\nlayer2.bogus = 1, 2\n");
    let o = cvrnn(&["sweep", "--dataset", s(&data), "--grid", s(&grid), "--out", s(&t.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("layer2.bogus") && err.contains('2'), "{err}");
}
