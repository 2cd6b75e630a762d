//! Pipeline configuration and its text format.
//!
//! One `key = value` pair per line, UTF-8. `#` starts a comment anywhere on a
//! line. Keys are dotted (`layer1.alpha`); every key is optional and falls
//! back to the shipped default. Values:
//!
//! ```text
//! side                = <integer >= 2>
//! seed                = <u64>
//! background_step     = <integer>
//! similarity_window   = <fraction in (0, 1]> | <first>..<last>
//! clusters            = auto | <integer >= 1>
//! kmeans_restarts     = <integer >= 1>
//! layerN.alpha        = <real >= 0>
//! layerN.sigma        = <real > 0>
//! layerN.epsilon      = <real>
//! layerN.steps        = <integer >= 1>
//! layerN.record_every = <integer >= 1>
//! layerN.omega_min    = <real>
//! layerN.omega_max    = <real>
//! ```

use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerConfig {
    pub alpha: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub record_every: usize,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl LayerConfig {
    pub fn validate(&self, name: &str) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(format!("{name}: {m}")));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !self.epsilon.is_finite() || !self.omega_min.is_finite() || !self.omega_max.is_finite() {
            return bad("epsilon and omega bounds must be finite".into());
        }
        if self.steps == 0 || self.record_every == 0 {
            return bad("steps and record_every must be at least 1".into());
        }
        if self.omega_min > self.omega_max {
            return bad(format!("omega_min {} exceeds omega_max {}", self.omega_min, self.omega_max));
        }
        Ok(())
    }
}

/// Which recorded layer-2 steps enter the similarity average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityWindow {
    /// The trailing fraction of recorded samples.
    Fraction(f64),
    /// Explicit inclusive step range.
    Steps(usize, usize),
}

impl SimilarityWindow {
    /// Step range for a record with the given step indices.
    pub fn resolve(&self, steps: &[usize]) -> Result<RangeInclusive<usize>> {
        let last = *steps.last().ok_or_else(|| Error::invalid("empty phase record"))?;
        match *self {
            SimilarityWindow::Fraction(f) => {
                let take = ((f * steps.len() as f64).ceil() as usize).clamp(1, steps.len());
                Ok(steps[steps.len() - take]..=last)
            }
            SimilarityWindow::Steps(a, b) => Ok(a..=b),
        }
    }
}

impl fmt::Display for SimilarityWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityWindow::Fraction(x) => write!(f, "{x}"),
            SimilarityWindow::Steps(a, b) => write!(f, "{a}..{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clusters {
    Auto,
    Fixed(usize),
}

impl fmt::Display for Clusters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clusters::Auto => f.write_str("auto"),
            Clusters::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub side: usize,
    pub layer1: LayerConfig,
    pub layer2: LayerConfig,
    pub background_step: usize,
    pub similarity_window: SimilarityWindow,
    pub clusters: Clusters,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    /// Values chosen by a grid search on generated two-shape images.
    fn default() -> Self {
        Self {
            side: 28,
            layer1: LayerConfig {
                alpha: 2.0,
                sigma: 8.0,
                epsilon: 0.005,
                steps: 60,
                record_every: 1,
                omega_min: -0.5,
                omega_max: 0.5,
            },
            layer2: LayerConfig {
                alpha: 1.0,
                sigma: 1.0,
                epsilon: 0.2,
                steps: 100,
                record_every: 1,
                omega_min: -1.0,
                omega_max: 1.0,
            },
            background_step: 60,
            similarity_window: SimilarityWindow::Fraction(0.5),
            clusters: Clusters::Auto,
            kmeans_restarts: crate::similarity::KMEANS_RESTARTS,
            seed: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "side",
    "seed",
    "background_step",
    "similarity_window",
    "clusters",
    "kmeans_restarts",
    "layer1.alpha",
    "layer1.sigma",
    "layer1.epsilon",
    "layer1.steps",
    "layer1.record_every",
    "layer1.omega_min",
    "layer1.omega_max",
    "layer2.alpha",
    "layer2.sigma",
    "layer2.epsilon",
    "layer2.steps",
    "layer2.record_every",
    "layer2.omega_min",
    "layer2.omega_max",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.side < 2 {
            return Err(Error::invalid("side must be at least 2"));
        }
        self.layer1.validate("layer1")?;
        self.layer2.validate("layer2")?;
        if self.background_step == 0 || self.background_step > self.layer1.steps {
            return Err(Error::invalid(format!(
                "background_step {} must lie in 1..={}",
                self.background_step, self.layer1.steps
            )));
        }
        if self.background_step % self.layer1.record_every != 0 {
            return Err(Error::invalid("background_step is not a recorded layer1 step"));
        }
        match self.similarity_window {
            SimilarityWindow::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::invalid(format!("similarity_window fraction {f} outside (0, 1]")));
            }
            SimilarityWindow::Steps(a, b) if a > b || b > self.layer2.steps => {
                return Err(Error::invalid(format!("similarity_window {a}..{b} outside 0..={}", self.layer2.steps)));
            }
            _ => {}
        }
        if self.clusters == Clusters::Fixed(0) {
            return Err(Error::invalid("clusters must be at least 1"));
        }
        if self.kmeans_restarts == 0 {
            return Err(Error::invalid("kmeans_restarts must be at least 1"));
        }
        Ok(())
    }

    /// Assigns one key. The message of the error names the key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        if let Some((layer, field)) = key.split_once('.') {
            let l = match layer {
                "layer1" => &mut self.layer1,
                "layer2" => &mut self.layer2,
                _ => return Err(format!("unknown key `{key}`")),
            };
            match field {
                "alpha" => l.alpha = parse_num(key, value)?,
                "sigma" => l.sigma = parse_num(key, value)?,
                "epsilon" => l.epsilon = parse_num(key, value)?,
                "steps" => l.steps = parse_num(key, value)?,
                "record_every" => l.record_every = parse_num(key, value)?,
                "omega_min" => l.omega_min = parse_num(key, value)?,
                "omega_max" => l.omega_max = parse_num(key, value)?,
                _ => return Err(format!("unknown key `{key}`")),
            }
            return Ok(());
        }
        match key {
            "side" => self.side = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "background_step" => self.background_step = parse_num(key, value)?,
            "kmeans_restarts" => self.kmeans_restarts = parse_num(key, value)?,
            "clusters" => {
                self.clusters = if value == "auto" {
                    Clusters::Auto
                } else {
                    Clusters::Fixed(parse_num(key, value)?)
                }
            }
            "similarity_window" => {
                self.similarity_window = match value.split_once("..") {
                    Some((a, b)) => SimilarityWindow::Steps(parse_num(key, a.trim())?, parse_num(key, b.trim())?),
                    None => SimilarityWindow::Fraction(parse_num(key, value)?),
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let layer = |l: &LayerConfig, field: &str| -> Option<String> {
            Some(match field {
                "alpha" => l.alpha.to_string(),
                "sigma" => l.sigma.to_string(),
                "epsilon" => l.epsilon.to_string(),
                "steps" => l.steps.to_string(),
                "record_every" => l.record_every.to_string(),
                "omega_min" => l.omega_min.to_string(),
                "omega_max" => l.omega_max.to_string(),
                _ => return None,
            })
        };
        match key.split_once('.') {
            Some(("layer1", f)) => layer(&self.layer1, f),
            Some(("layer2", f)) => layer(&self.layer2, f),
            Some(_) => None,
            None => Some(match key {
                "side" => self.side.to_string(),
                "seed" => self.seed.to_string(),
                "background_step" => self.background_step.to_string(),
                "similarity_window" => self.similarity_window.to_string(),
                "clusters" => self.clusters.to_string(),
                "kmeans_restarts" => self.kmeans_restarts.to_string(),
                _ => return None,
            }),
        }
    }

    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut cfg = Self::default();
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
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            cfg.set(key.trim(), value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text: every key in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# cvrnn pipeline config\n");
        for key in KEYS {
            out.push_str(&format!("{key} = {}\n", self.get(key).expect("known key")));
        }
        out
    }

    /// FNV-1a hash of the canonical text.
    pub fn digest(&self) -> u64 {
        self.to_text()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let mut cfg = PipelineConfig::default();
        cfg.layer2.epsilon = 0.037;
        cfg.similarity_window = SimilarityWindow::Steps(40, 90);
        cfg.clusters = Clusters::Fixed(3);
        let back = PipelineConfig::parse(&cfg.to_text(), "x").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
        assert_ne!(PipelineConfig::default().digest(), cfg.digest());
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = PipelineConfig::parse("# only one\nlayer1.sigma = 5 # inline\n\n", "x").unwrap();
        assert_eq!(cfg.layer1.sigma, 5.0);
        assert_eq!(cfg.layer2, PipelineConfig::default().layer2);
    }

    #[test]
    fn errors_name_key_and_line() {
        match PipelineConfig::parse("side = 28\nlayer3.alpha = 1\n", "c.cfg") {
            Err(Error::Config { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("layer3.alpha"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(PipelineConfig::parse("seed 4\n", "c"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(PipelineConfig::parse("layer1.sigma = x\n", "c"), Err(Error::Config { .. })));
        assert!(matches!(PipelineConfig::parse("layer1.sigma = 0\n", "c"), Err(Error::InvalidArgument(_))));
        assert!(PipelineConfig::parse("background_step = 61\n", "c").is_err());
        assert!(PipelineConfig::parse("layer2.omega_min = 2\n", "c").is_err());
    }

    #[test]
    fn window_resolution() {
        let steps: Vec<usize> = (1..=100).collect();
        assert_eq!(SimilarityWindow::Fraction(0.5).resolve(&steps).unwrap(), 51..=100);
        assert_eq!(SimilarityWindow::Fraction(1.0).resolve(&steps).unwrap(), 1..=100);
        assert_eq!(SimilarityWindow::Steps(3, 7).resolve(&steps).unwrap(), 3..=7);
        let sparse = [10, 20, 30];
        assert_eq!(SimilarityWindow::Fraction(0.01).resolve(&sparse).unwrap(), 30..=30);
    }
}
