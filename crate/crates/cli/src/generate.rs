use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use cvrnn::data::manifest::{write_manifest, ManifestEntry};
use cvrnn::data::{generate_dataset, pgm, OverlapPolicy, ShapeRecipe};

use crate::dataset::MANIFEST;
use crate::output::{label_pgm, RunManifest};
use crate::usage;

#[derive(clap::Args)]
pub struct Args {
    /// Number of images
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// Shapes per image (triangle, square, circle, repeating)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    shapes: u64,
    /// forbid or allow overlapping bounding boxes
    #[arg(long, default_value = "forbid")]
    overlap: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 28)]
    side: usize,
    #[arg(long, default_value_t = 7)]
    size_min: usize,
    #[arg(long, default_value_t = 11)]
    size_max: usize,
    #[arg(long, default_value_t = 1.0)]
    intensity: f64,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(a: Args) -> Result<()> {
    let start = Instant::now();
    let overlap: OverlapPolicy = a.overlap.parse().map_err(|e: cvrnn::Error| usage(e.to_string()))?;
    let recipe = ShapeRecipe {
        side: a.side,
        count: a.shapes as usize,
        overlap,
        size_range: (a.size_min, a.size_max),
        intensity: a.intensity,
        min_gap: 2,
    };
    let data = generate_dataset(a.count as usize, &recipe, a.seed).map_err(|e| usage(e.to_string()))?;
    let mut manifest = RunManifest::new("generate", a.seed);
    let mut entries = Vec::new();
    let mut idx = 0usize;
    for i in 0..a.count as usize {
        if data.failed.contains(&i) {
            continue;
        }
        let img = &data.images[idx];
        idx += 1;
        let image = format!("image_{i:05}.pgm");
        let truth = format!("truth_{i:05}.pgm");
        let px: Vec<u8> = img.pixels.iter().map(|&v| pgm::quantize(v)).collect();
        manifest.emit(a.out.join(&image), &pgm::encode(img.side, img.side, &px))?;
        manifest.emit(a.out.join(&truth), &label_pgm(img.side, &img.truth))?;
        entries.push(ManifestEntry {
            image,
            truth,
            seed: img.meta.seed,
            shapes: img.meta.shapes.clone(),
        });
    }
    manifest.emit(a.out.join(MANIFEST), write_manifest(&entries).as_bytes())?;
    if !data.failed.is_empty() {
        eprintln!("warning: {} image(s) could not be placed and were skipped: {:?}", data.failed.len(), data.failed);
    }
    manifest.timings.push(("generate".into(), start.elapsed()));
    manifest.write(&a.out)?;
    println!("wrote {} images to {}", entries.len(), a.out.display());
    Ok(())
}
