//! Grid search over pipeline hyperparameters.
//!
//! Grid files hold one axis per line, `key = v1, v2, ...`, with the same keys
//! and `#` comments as the config format. Points are the cartesian product of
//! the axes in file order, the last axis varying fastest.

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::{permutation_matched_accuracy, segment_image, Clusters};
use crate::data::LabeledImage;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepGrid {
    pub axes: Vec<(String, Vec<String>)>,
}

impl SweepGrid {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut axes: Vec<(String, Vec<String>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                path: path.to_string(),
                line: i + 1,
                message,
            };
            let (key, values) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = v1, v2, ...`, found `{line}`")))?;
            let key = key.trim().to_string();
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            if values.is_empty() {
                return Err(err(format!("no values for `{key}`")));
            }
            let mut probe = PipelineConfig::default();
            for v in &values {
                probe.set(&key, v).map_err(err)?;
            }
            if axes.iter().any(|(k, _)| *k == key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            axes.push((key, values));
        }
        Ok(Self { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Key/value assignments of point `index`.
    pub fn assignments(&self, mut index: usize) -> Vec<(String, String)> {
        let mut out = vec![(String::new(), String::new()); self.axes.len()];
        for (slot, (key, values)) in out.iter_mut().zip(&self.axes).rev() {
            *slot = (key.clone(), values[index % values.len()].clone());
            index /= values.len();
        }
        out
    }

    pub fn point(&self, base: &PipelineConfig, index: usize) -> Result<PipelineConfig> {
        let mut cfg = base.clone();
        for (k, v) in self.assignments(index) {
            cfg.set(&k, &v).map_err(Error::InvalidArgument)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Per-image accuracy with the true object count as `k`. Image `i` runs
/// with seed `mix(cfg.seed, i)`; failed runs score 0.
pub fn evaluate_config(images: &[&LabeledImage], cfg: &PipelineConfig) -> Vec<(f64, Option<String>)> {
    images
        .par_iter()
        .enumerate()
        .map(|(i, img)| score_image(img, cfg, i))
        .collect()
}

pub fn score_image(img: &LabeledImage, cfg: &PipelineConfig, index: usize) -> (f64, Option<String>) {
    let run_cfg = PipelineConfig {
        clusters: Clusters::Fixed(img.object_count().max(1)),
        seed: seed::mix(cfg.seed, index as u64),
        side: img.side,
        ..cfg.clone()
    };
    match segment_image(&img.pixels, &run_cfg).and_then(|r| permutation_matched_accuracy(&r.labels, &img.truth)) {
        Ok(a) => (a, None),
        Err(e) => (0.0, Some(e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub assignments: Vec<(String, String)>,
    pub mean_accuracy: f64,
    pub min_accuracy: f64,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub best: usize,
    pub config: PipelineConfig,
}

pub fn evaluate_point(images: &[&LabeledImage], grid: &SweepGrid, base: &PipelineConfig, index: usize) -> Result<SweepRow> {
    let cfg = grid.point(base, index)?;
    let scores = evaluate_config(images, &cfg);
    let n = scores.len().max(1) as f64;
    Ok(SweepRow {
        index,
        assignments: grid.assignments(index),
        mean_accuracy: scores.iter().map(|s| s.0).sum::<f64>() / n,
        min_accuracy: scores.iter().map(|s| s.0).fold(f64::INFINITY, f64::min),
        failures: scores.iter().filter(|s| s.1.is_some()).count(),
    })
}

/// Best row by mean accuracy; ties go to the lower index.
pub fn best_row(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter().fold(None, |best: Option<&SweepRow>, r| match best {
        Some(b) if b.mean_accuracy >= r.mean_accuracy => Some(b),
        _ => Some(r),
    })
}

pub fn hyperparameter_sweep(images: &[&LabeledImage], base: &PipelineConfig, grid: &SweepGrid) -> Result<SweepReport> {
    if images.is_empty() {
        return Err(Error::invalid("sweep needs at least one image"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    let rows = (0..grid.len())
        .map(|i| evaluate_point(images, grid, base, i))
        .collect::<Result<Vec<_>>>()?;
    let best = best_row(&rows).expect("nonempty").index;
    Ok(SweepReport {
        config: grid.point(base, best)?,
        best,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, ShapeRecipe};

    #[test]
    fn grid_parsing_and_order() {
        let g = SweepGrid::parse("layer2.epsilon = 0.05, 0.1\n# c\nlayer2.sigma = 1, 2, 3\n", "g").unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(
            g.assignments(4),
            vec![("layer2.epsilon".into(), "0.1".into()), ("layer2.sigma".into(), "2".into())]
        );
        let cfg = g.point(&PipelineConfig::default(), 5).unwrap();
        assert_eq!((cfg.layer2.epsilon, cfg.layer2.sigma), (0.1, 3.0));
        match SweepGrid::parse("layer2.epsilon = 1\nbogus = 3\n", "g") {
            Err(Error::Config { line: 2, message, .. }) => assert!(message.contains("bogus")),
            other => panic!("{other:?}"),
        }
        assert!(SweepGrid::parse("layer2.sigma = \n", "g").is_err());
    }

    #[test]
    fn argmax_and_single_point() {
        let rows: Vec<SweepRow> = [0.5, 0.9, 0.9, 0.1]
            .iter()
            .enumerate()
            .map(|(index, &m)| SweepRow {
                index,
                assignments: vec![],
                mean_accuracy: m,
                min_accuracy: m,
                failures: 0,
            })
            .collect();
        assert_eq!(best_row(&rows).unwrap().index, 1);

        let data = generate_dataset(2, &ShapeRecipe::new(2), 3).unwrap();
        let imgs: Vec<&LabeledImage> = data.images.iter().collect();
        let grid = SweepGrid::parse("layer2.epsilon = 0.1\n", "g").unwrap();
        let report = hyperparameter_sweep(&imgs, &PipelineConfig::default(), &grid).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.best, 0);
        assert_eq!(report.config.layer2.epsilon, 0.1);
        let again = hyperparameter_sweep(&imgs, &PipelineConfig::default(), &grid).unwrap();
        assert_eq!(report.rows, again.rows);
    }
}
