use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use rayon::prelude::*;

use cvrnn::pipeline::{permutation_matched_accuracy, segment_image, Clusters};
use cvrnn::seed;

use crate::dataset::{entries, load_image, load_labels};
use crate::output::RunManifest;
use crate::{config_or_default, usage};

#[derive(clap::Args)]
pub struct Args {
    /// Directory with images and truth maps
    #[arg(long)]
    dataset: PathBuf,
    /// Pipeline config; the built-in default when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of predicted label maps named like the images; when given,
    /// no segmentation is run
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// `truth` (object count from the truth map), `auto`, or a number
    #[arg(long, default_value = "truth")]
    clusters: String,
    /// Master seed; image i runs with mix(seed, i)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

enum Outcome {
    Scored(f64, u32),
    Skipped(String),
    Failed(String),
}

pub fn run(a: Args) -> Result<()> {
    let start = Instant::now();
    let mut cfg = config_or_default(a.config.as_ref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let from_truth = a.clusters == "truth";
    if !from_truth {
        cfg.set("clusters", &a.clusters).map_err(usage)?;
        cfg.validate().map_err(|e| usage(e.to_string()))?;
    }
    let list = entries(&a.dataset)?;
    let outcomes: Vec<Outcome> = list
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let Some(truth_path) = &e.truth else {
                return Outcome::Skipped("missing truth".into());
            };
            let (tside, truth) = match load_labels(truth_path) {
                Ok(t) => t,
                Err(err) => return Outcome::Skipped(format!("{err:#}")),
            };
            let objects = truth.iter().copied().max().unwrap_or(0);
            let pred = match &a.predictions {
                Some(dir) => {
                    let name = e.image.file_name().expect("file name");
                    load_labels(&dir.join(name)).map(|(_, l)| l)
                }
                None => load_image(&e.image).and_then(|(side, px)| {
                    let mut c = cfg.clone();
                    c.side = side;
                    c.seed = seed::mix(cfg.seed, i as u64);
                    if from_truth {
                        c.clusters = Clusters::Fixed(objects.max(1) as usize);
                    }
                    Ok(segment_image(&px, &c)?.labels)
                }),
            };
            match pred {
                Ok(p) if p.len() == tside * tside => match permutation_matched_accuracy(&p, &truth) {
                    Ok(acc) => Outcome::Scored(acc, objects),
                    Err(err) => Outcome::Failed(err.to_string()),
                },
                Ok(_) => Outcome::Failed("prediction size differs from truth".into()),
                Err(err) => Outcome::Failed(format!("{err:#}")),
            }
        })
        .collect();

    let mut table = String::from("image\taccuracy\tobjects\tstatus\n");
    let (mut sum, mut scored, mut skipped, mut failed) = (0.0, 0usize, 0usize, 0usize);
    for (e, o) in list.iter().zip(&outcomes) {
        let name = e.image.file_name().unwrap_or_default().to_string_lossy();
        match o {
            Outcome::Scored(acc, k) => {
                sum += acc;
                scored += 1;
                let _ = writeln!(table, "{name}\t{acc:.6}\t{k}\tok");
            }
            Outcome::Skipped(why) => {
                skipped += 1;
                eprintln!("warning: skipping {name}: {why}");
                let _ = writeln!(table, "{name}\t\t\tskipped: {why}");
            }
            Outcome::Failed(why) => {
                failed += 1;
                eprintln!("warning: {name} failed: {why}");
                let _ = writeln!(table, "{name}\t0.000000\t\tfailed: {why}");
            }
        }
    }
    // failures count as zero accuracy
    let denom = scored + failed;
    if denom == 0 {
        return Err(usage("no image had a truth map"));
    }
    let mean = sum / denom as f64;
    let summary = format!("summary\tmean_accuracy={mean:.6}\tevaluated={denom}\tskipped={skipped}\tfailed={failed}\n");
    table.push_str(&summary);

    let mut manifest = RunManifest::new("evaluate", cfg.seed);
    manifest.config_digest = Some(cfg.digest());
    manifest.inputs.push(a.dataset.clone());
    manifest.inputs.extend(a.config.clone());
    manifest.emit(a.out.join("evaluation.tsv"), table.as_bytes())?;
    manifest.timings.push(("evaluate".into(), start.elapsed()));
    manifest.write(&a.out)?;
    print!("{summary}");
    Ok(())
}
