use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use cvrnn::dynamics::PhaseRecord;
use cvrnn::pipeline::{segment_image, Clusters};

use crate::dataset::load_image;
use crate::output::{frame_name, label_pgm, phase_pgm, phase_ppm, RunManifest};
use crate::{load_config, usage};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of objects, or `auto`
    #[arg(long)]
    clusters: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write phase frames for both layers at every recorded step
    #[arg(long)]
    frames: bool,
    /// Also write hue-coded PPM frames
    #[arg(long)]
    ppm: bool,
    /// Write the similarity projection as a table
    #[arg(long)]
    projection: bool,
}

fn write_frames(manifest: &mut RunManifest, dir: PathBuf, side: usize, rec: &PhaseRecord, ppm: bool) -> Result<()> {
    for (t, &step) in rec.step_indices().iter().enumerate() {
        manifest.emit(dir.join(frame_name(step, "pgm")), &phase_pgm(side, rec.phases_at(t)))?;
        if ppm {
            manifest.emit(dir.join(frame_name(step, "ppm")), &phase_ppm(side, rec.phases_at(t)))?;
        }
    }
    Ok(())
}

pub fn run(a: Args) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    if let Some(c) = &a.clusters {
        cfg.set("clusters", c).map_err(usage)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let (side, image) = load_image(&a.image)?;
    if side != cfg.side {
        return Err(usage(format!("image is {side}x{side} but config side is {}", cfg.side)));
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let result = segment_image(&image, &cfg)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    let mut manifest = RunManifest::new("segment", cfg.seed);
    manifest.config_digest = Some(cfg.digest());
    manifest.inputs = vec![a.image.clone(), a.config.clone()];
    manifest.emit(a.out.join("labels.pgm"), &label_pgm(side, &result.labels))?;
    if a.frames {
        write_frames(&mut manifest, a.out.join("frames/layer1"), side, &result.layer1, a.ppm)?;
        if let Some(rec) = &result.layer2 {
            write_frames(&mut manifest, a.out.join("frames/layer2"), side, rec, a.ppm)?;
        }
    }
    if a.projection {
        let mut t = String::from("node\trow\tcol\tx\ty\tz\tlabel\n");
        if let Some(p) = &result.projection {
            for (node, c) in p.node_ids().iter().zip(p.coordinates()) {
                let _ = writeln!(
                    t,
                    "{node}\t{}\t{}\t{:.12e}\t{:.12e}\t{:.12e}\t{}",
                    node / side,
                    node % side,
                    c[0],
                    c[1],
                    c[2],
                    result.labels[*node]
                );
            }
        }
        manifest.emit(a.out.join("projection.tsv"), t.as_bytes())?;
    }
    manifest.timings = result.timings.iter().map(|(s, d)| (s.to_string(), *d)).collect();
    manifest.write(&a.out)?;
    let k = match result.config.clusters {
        Clusters::Auto => format!("{} (auto)", result.object_count()),
        Clusters::Fixed(_) => result.object_count().to_string(),
    };
    let fg = result.foreground.iter().filter(|&&f| f).count();
    println!("objects\t{k}\tforeground_pixels\t{fg}");
    Ok(())
}
