//! Reading dataset directories written by `generate`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cvrnn::data::manifest::parse_manifest;
use cvrnn::data::pgm;

use crate::output::labels_from_gray;
use crate::usage;

pub const MANIFEST: &str = "dataset.tsv";

pub struct Entry {
    pub image: PathBuf,
    pub truth: Option<PathBuf>,
}

/// Entries from `dataset.tsv`, or `image_*.pgm` files paired with
/// `truth_*.pgm` when no manifest exists. Empty directories are usage errors.
pub fn entries(dir: &Path) -> Result<Vec<Entry>> {
    if !dir.is_dir() {
        return Err(usage(format!("{} is not a directory", dir.display())));
    }
    let manifest = dir.join(MANIFEST);
    let out: Vec<Entry> = if manifest.exists() {
        let text = std::fs::read_to_string(&manifest)?;
        parse_manifest(&text, &manifest.display().to_string())
            .map_err(|e| usage(e.to_string()))?
            .into_iter()
            .map(|e| {
                let truth = dir.join(&e.truth);
                Entry {
                    image: dir.join(&e.image),
                    truth: truth.exists().then_some(truth),
                }
            })
            .collect()
    } else {
        let mut names: Vec<String> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| n.starts_with("image_") && n.ends_with(".pgm"))
            .collect();
        names.sort();
        names
            .into_iter()
            .map(|n| {
                let truth = dir.join(n.replacen("image_", "truth_", 1));
                Entry {
                    image: dir.join(&n),
                    truth: truth.exists().then_some(truth),
                }
            })
            .collect()
    };
    if out.is_empty() {
        return Err(usage(format!("no images found in {}", dir.display())));
    }
    Ok(out)
}

pub fn load_image(path: &Path) -> Result<(usize, Vec<f64>)> {
    pgm::load_pgm(path).with_context(|| format!("loading {}", path.display()))
}

pub fn load_labels(path: &Path) -> Result<(usize, Vec<u32>)> {
    let img = pgm::load_pgm_any(path).with_context(|| format!("loading {}", path.display()))?;
    anyhow::ensure!(img.width == img.height, "{} is not square", path.display());
    Ok((img.width, labels_from_gray(&img.data)))
}
