//! Resumable grid search. Each finished grid point is appended to
//! `sweep_log.tsv`; a rerun with the same inputs skips logged points.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use cvrnn::data::{ImageMeta, LabeledImage};
use cvrnn::pipeline::sweep::{best_row, evaluate_point, SweepGrid, SweepRow};

use crate::dataset::{entries, load_image, load_labels};
use crate::output::RunManifest;
use crate::{config_or_default, usage};

const LOG: &str = "sweep_log.tsv";

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    dataset: PathBuf,
    /// Grid file: `key = v1, v2, ...` per line
    #[arg(long)]
    grid: PathBuf,
    /// Base config that grid values override
    #[arg(long)]
    config: Option<PathBuf>,
    /// `train` uses even-indexed images, `all` every image
    #[arg(long, default_value = "train")]
    split: String,
    #[arg(long)]
    out: PathBuf,
    /// Stop after evaluating this many new grid points
    #[arg(long, hide = true)]
    limit: Option<usize>,
}

fn fnv(bytes: &[u8], seed: u64) -> u64 {
    bytes.iter().fold(seed, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn format_row(r: &SweepRow) -> String {
    let a: Vec<String> = r.assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{}\t{:.10}\t{:.10}\t{}\t{}", r.index, r.mean_accuracy, r.min_accuracy, r.failures, a.join(" "))
}

fn parse_row(line: &str, grid: &SweepGrid) -> Option<SweepRow> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 5 {
        return None;
    }
    let index: usize = f[0].parse().ok()?;
    if index >= grid.len() {
        return None;
    }
    Some(SweepRow {
        index,
        assignments: grid.assignments(index),
        mean_accuracy: f[1].parse().ok()?,
        min_accuracy: f[2].parse().ok()?,
        failures: f[3].parse().ok()?,
    })
}

pub fn run(a: Args) -> Result<()> {
    let start = Instant::now();
    let base = config_or_default(a.config.as_ref())?;
    let grid_text = std::fs::read_to_string(&a.grid).map_err(|e| usage(format!("cannot read grid {}: {e}", a.grid.display())))?;
    let grid = SweepGrid::parse(&grid_text, &a.grid.display().to_string()).map_err(|e| usage(e.to_string()))?;
    if grid.is_empty() {
        return Err(usage("grid has no points"));
    }
    for i in 0..grid.len() {
        grid.point(&base, i).map_err(|e| usage(format!("grid point {i}: {e}")))?;
    }
    let train_only = match a.split.as_str() {
        "train" => true,
        "all" => false,
        other => return Err(usage(format!("unknown split `{other}`"))),
    };

    let mut images = Vec::new();
    for (i, e) in entries(&a.dataset)?.into_iter().enumerate() {
        if train_only && i % 2 == 1 {
            continue;
        }
        let Some(tp) = e.truth else {
            eprintln!("warning: skipping {}: missing truth", e.image.display());
            continue;
        };
        let (side, pixels) = load_image(&e.image)?;
        let (_, truth) = load_labels(&tp)?;
        images.push(LabeledImage {
            side,
            pixels,
            truth,
            meta: ImageMeta {
                seed: 0,
                shapes: Vec::new(),
                overlap_zone: Vec::new(),
            },
        });
    }
    if images.is_empty() {
        return Err(usage("no usable images in dataset"));
    }
    let refs: Vec<&LabeledImage> = images.iter().collect();

    // identifies the inputs so a stale log is never reused
    let mut id = fnv(grid_text.as_bytes(), 0xcbf2_9ce4_8422_2325);
    id = fnv(base.to_text().as_bytes(), id);
    for img in &images {
        id = fnv(&img.truth.iter().map(|&t| t as u8).collect::<Vec<_>>(), id);
        id = fnv(&img.pixels.iter().flat_map(|p| p.to_le_bytes()).collect::<Vec<_>>(), id);
    }
    let header = format!("# sweep {id:016x} points {}", grid.len());

    std::fs::create_dir_all(&a.out)?;
    let log_path = a.out.join(LOG);
    let mut done: BTreeMap<usize, SweepRow> = BTreeMap::new();
    if log_path.exists() {
        let text = std::fs::read_to_string(&log_path)?;
        let mut lines = text.lines();
        if lines.next() != Some(header.as_str()) {
            return Err(usage(format!("{} belongs to a different sweep; remove it to start over", log_path.display())));
        }
        for line in lines {
            if let Some(r) = parse_row(line, &grid) {
                done.insert(r.index, r);
            }
        }
    } else {
        std::fs::write(&log_path, format!("{header}\n"))?;
    }
    let mut log = std::fs::OpenOptions::new().append(true).open(&log_path).context("opening sweep log")?;

    let mut fresh = 0usize;
    for i in 0..grid.len() {
        if done.contains_key(&i) {
            continue;
        }
        if a.limit.is_some_and(|l| fresh >= l) {
            println!("stopped after {fresh} new grid point(s); rerun to resume");
            return Ok(());
        }
        let row = evaluate_point(&refs, &grid, &base, i)?;
        let line = format_row(&row);
        writeln!(log, "{line}")?;
        log.flush()?;
        eprintln!("point {i}/{}: mean {:.4}", grid.len(), row.mean_accuracy);
        // keep exactly what the log holds so resumed runs match
        done.insert(i, parse_row(&line, &grid).expect("own format"));
        fresh += 1;
    }

    let rows: Vec<SweepRow> = done.into_values().collect();
    let best = best_row(&rows).expect("nonempty grid");
    let best_cfg = grid.point(&base, best.index)?;
    let mut table = String::from("index");
    for (k, _) in &grid.axes {
        let _ = write!(table, "\t{k}");
    }
    table.push_str("\tmean_accuracy\tmin_accuracy\tfailures\n");
    for r in &rows {
        let _ = write!(table, "{}", r.index);
        for (_, v) in &r.assignments {
            let _ = write!(table, "\t{v}");
        }
        let _ = writeln!(table, "\t{:.10}\t{:.10}\t{}", r.mean_accuracy, r.min_accuracy, r.failures);
    }

    let mut manifest = RunManifest::new("sweep", base.seed);
    manifest.config_digest = Some(best_cfg.digest());
    manifest.inputs = vec![a.dataset.clone(), a.grid.clone()];
    manifest.inputs.extend(a.config.clone());
    manifest.emit(a.out.join("sweep_table.tsv"), table.as_bytes())?;
    manifest.emit(a.out.join("best.cfg"), best_cfg.to_text().as_bytes())?;
    manifest.timings.push(("sweep".into(), start.elapsed()));
    manifest.write(&a.out)?;
    println!("best\t{}\tmean_accuracy\t{:.6}", best.index, best.mean_accuracy);
    Ok(())
}
