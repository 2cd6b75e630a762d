//! File output: atomic writes, image rendering and the run manifest.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use cvrnn::data::pgm;

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Gray level of a phase: `round(255 (theta + pi) / (2 pi))`.
pub fn phase_gray(theta: f64) -> u8 {
    pgm::quantize((theta + PI) / (2.0 * PI))
}

/// Hue-encoded phase at full saturation and value.
pub fn phase_rgb(theta: f64) -> [u8; 3] {
    let h = ((theta + PI) / (2.0 * PI)).rem_euclid(1.0) * 6.0;
    let x = 1.0 - ((h % 2.0) - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [pgm::quantize(r), pgm::quantize(g), pgm::quantize(b)]
}

pub fn phase_pgm(side: usize, phases: &[f64]) -> Vec<u8> {
    let data: Vec<u8> = phases.iter().map(|&t| phase_gray(t)).collect();
    pgm::encode(side, side, &data)
}

pub fn phase_ppm(side: usize, phases: &[f64]) -> Vec<u8> {
    let rgb: Vec<[u8; 3]> = phases.iter().map(|&t| phase_rgb(t)).collect();
    pgm::encode_ppm(side, side, &rgb)
}

/// Labels spread over distinct gray levels: `round(255 l / max_label)`.
pub fn label_pgm(side: usize, labels: &[u32]) -> Vec<u8> {
    let top = labels.iter().copied().max().unwrap_or(0).max(1) as f64;
    let data: Vec<u8> = labels.iter().map(|&l| pgm::quantize(l as f64 / top)).collect();
    pgm::encode(side, side, &data)
}

/// Inverse of [`label_pgm`] up to relabeling: gray 0 is background and the
/// other distinct gray levels become labels `1..` in ascending order.
pub fn labels_from_gray(data: &[u8]) -> Vec<u32> {
    let mut levels: Vec<u8> = data.iter().copied().filter(|&g| g > 0).collect();
    levels.sort_unstable();
    levels.dedup();
    data.iter()
        .map(|&g| if g == 0 { 0 } else { levels.binary_search(&g).unwrap() as u32 + 1 })
        .collect()
}

pub fn frame_name(step: usize, ext: &str) -> String {
    format!("frame_{step:05}.{ext}")
}

/// Record of one command invocation, written last.
pub struct RunManifest {
    pub command: String,
    pub config_digest: Option<u64>,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub timings: Vec<(String, Duration)>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_digest: None,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// Writes `bytes` atomically and lists the file as an output.
    pub fn emit(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        write_atomic(&path, bytes)?;
        self.outputs.push(path);
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command\t{}", self.command);
        let _ = writeln!(s, "version\t{}", env!("CARGO_PKG_VERSION"));
        if let Some(d) = self.config_digest {
            let _ = writeln!(s, "config_digest\t{d:016x}");
        }
        let _ = writeln!(s, "seed\t{}", self.seed);
        for p in &self.inputs {
            let _ = writeln!(s, "input\t{}", p.display());
        }
        for p in &self.outputs {
            let _ = writeln!(s, "output\t{}", p.display());
        }
        for (stage, d) in &self.timings {
            let _ = writeln!(s, "timing\t{stage}\t{:.6}", d.as_secs_f64());
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for p in &self.outputs {
            anyhow::ensure!(p.exists(), "output {} missing", p.display());
        }
        write_atomic(&dir.join("run_manifest.tsv"), self.to_text().as_bytes())
    }
}
