//! Two-layer segmentation.
//!
//! Layer 1 uses broad coupling; at `background_step` its phases split into a
//! background and a foreground group. Layer 2 disconnects background nodes,
//! runs local dynamics from a fresh random state, and the foreground nodes
//! are clustered by phase similarity.

pub mod config;
pub mod metrics;
pub mod sweep;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

pub use config::{Clusters, LayerConfig, PipelineConfig, SimilarityWindow};
pub use metrics::{mask_iou, permutation_matched_accuracy};

use crate::dynamics::{build_system_matrix, propagate, sample_initial_state, ComplexState, FrequencyVector, PhaseRecord, PropagateOptions, SystemMatrix};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, gaussian_adjacency, mask_adjacency, LatticeSpec};
use crate::seed;
use crate::similarity::{eigengap_estimate, kmeans, phase_similarity_matrix, similarity_projection, ClusterAssignment, ProjectionPoints, SimilarityMatrix};
use crate::spectral::hermitian_leading_eigenpairs;

/// Phase spread (radians) below which the layer-1 phases count as one group.
pub const DEGENERATE_SPREAD: f64 = 1e-6;

/// Upper bound on the cluster count chosen by `clusters = auto`.
pub const AUTO_MAX_CLUSTERS: usize = 8;

/// Affine pixel-to-frequency map `omega_min + (omega_max - omega_min) p`.
pub fn pixels_to_frequencies(image: &[f64], node_count: usize, cfg: &LayerConfig) -> Result<FrequencyVector> {
    if image.len() != node_count {
        return Err(Error::invalid(format!("image has {} pixels, lattice has {node_count} nodes", image.len())));
    }
    if image.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("image contains non-finite values"));
    }
    let span = cfg.omega_max - cfg.omega_min;
    FrequencyVector::new(image.iter().map(|&p| cfg.omega_min + span * p).collect())
}

fn lattice(cfg: &PipelineConfig) -> Result<LatticeSpec> {
    build_lattice(cfg.side)
}

/// Layer-1 system matrix for an image.
pub fn layer1_matrix(image: &[f64], cfg: &PipelineConfig) -> Result<SystemMatrix> {
    let spec = lattice(cfg)?;
    let l = &cfg.layer1;
    let omega = pixels_to_frequencies(image, spec.node_count(), l)?;
    let adj = gaussian_adjacency(&spec, l.alpha, l.sigma)?;
    build_system_matrix(&adj, &omega, l.epsilon)
}

pub fn layer1_initial_state(cfg: &PipelineConfig) -> Result<ComplexState> {
    sample_initial_state(cfg.side * cfg.side, seed::mix(cfg.seed, seed::stream::LAYER1_INIT))
}

pub fn layer1_run(image: &[f64], cfg: &PipelineConfig) -> Result<PhaseRecord> {
    let b = layer1_matrix(image, cfg)?;
    let x0 = layer1_initial_state(cfg)?;
    propagate(&b, &x0, PropagateOptions::new(cfg.layer1.steps, cfg.layer1.record_every))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSplit {
    /// `true` for foreground nodes.
    pub foreground: Vec<bool>,
    /// Set when the phases formed a single group and everything was marked
    /// background.
    pub degenerate: bool,
}

/// Circular distance between two angles, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Best two-arc partition of angles on the circle: maximizes the summed
/// resultant lengths of the two groups. Returns group membership (`true`
/// for the group holding the first sorted angle's complement arc).
fn circular_two_means(theta: &[f64]) -> Vec<bool> {
    let n = theta.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]).then(a.cmp(&b)));
    let mut pc = vec![0.0; n + 1];
    let mut ps = vec![0.0; n + 1];
    for (k, &i) in order.iter().enumerate() {
        pc[k + 1] = pc[k] + theta[i].cos();
        ps[k + 1] = ps[k] + theta[i].sin();
    }
    let (tc, ts) = (pc[n], ps[n]);
    let mut best = (f64::NEG_INFINITY, 0, 0);
    // group A = sorted[i..j], group B = the rest
    for i in 0..n {
        for j in i + 1..=n {
            if j - i == n {
                continue;
            }
            let (ac, as_) = (pc[j] - pc[i], ps[j] - ps[i]);
            let score = ac.hypot(as_) + (tc - ac).hypot(ts - as_);
            if score > best.0 + 1e-12 {
                best = (score, i, j);
            }
        }
    }
    let mut in_a = vec![false; n];
    for &i in &order[best.1..best.2] {
        in_a[i] = true;
    }
    in_a
}

/// Splits layer-1 phases at `at_step` into two circular clusters; the
/// cluster holding more border nodes is background (ties: the larger one).
pub fn background_split(rec: &PhaseRecord, at_step: usize, spec: &LatticeSpec) -> Result<BackgroundSplit> {
    let t = rec
        .position_of(at_step)
        .ok_or_else(|| Error::invalid(format!("step {at_step} was not recorded")))?;
    let theta = rec.phases_at(t);
    let n = theta.len();
    if n != spec.node_count() {
        return Err(Error::invalid("record does not match lattice"));
    }
    let all_background = BackgroundSplit {
        foreground: vec![false; n],
        degenerate: true,
    };
    let (c, s) = theta.iter().fold((0.0, 0.0), |(c, s), &a| (c + a.cos(), s + a.sin()));
    let centre = s.atan2(c);
    let spread = theta.iter().map(|&a| circular_distance(a, centre)).fold(0.0, f64::max);
    if n < 2 || spread < DEGENERATE_SPREAD {
        return Ok(all_background);
    }
    let in_a = circular_two_means(theta);
    let border_a = (0..n).filter(|&i| spec.is_border(i) && in_a[i]).count();
    let border_b = (0..n).filter(|&i| spec.is_border(i) && !in_a[i]).count();
    let size_a = in_a.iter().filter(|&&x| x).count();
    let a_is_background = border_a > border_b || (border_a == border_b && size_a * 2 >= n);
    let foreground = in_a.iter().map(|&a| a != a_is_background).collect();
    Ok(BackgroundSplit {
        foreground,
        degenerate: false,
    })
}

/// Layer-2 system matrix: local coupling with background nodes disconnected.
pub fn layer2_matrix(image: &[f64], foreground: &[bool], cfg: &PipelineConfig) -> Result<SystemMatrix> {
    let spec = lattice(cfg)?;
    let l = &cfg.layer2;
    if foreground.len() != spec.node_count() {
        return Err(Error::invalid("foreground mask does not match lattice"));
    }
    if !foreground.iter().any(|&f| f) {
        return Err(Error::invalid("foreground mask is empty"));
    }
    let omega = pixels_to_frequencies(image, spec.node_count(), l)?;
    let adj = mask_adjacency(&gaussian_adjacency(&spec, l.alpha, l.sigma)?, foreground)?;
    build_system_matrix(&adj, &omega, l.epsilon)
}

pub fn layer2_initial_state(cfg: &PipelineConfig) -> Result<ComplexState> {
    sample_initial_state(cfg.side * cfg.side, seed::mix(cfg.seed, seed::stream::LAYER2_INIT))
}

pub fn layer2_run(image: &[f64], foreground: &[bool], cfg: &PipelineConfig) -> Result<PhaseRecord> {
    let b = layer2_matrix(image, foreground, cfg)?;
    let x0 = layer2_initial_state(cfg)?;
    propagate(&b, &x0, PropagateOptions::new(cfg.layer2.steps, cfg.layer2.record_every))
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub side: usize,
    /// 0 for background, `1..=k` for objects.
    pub labels: Vec<u32>,
    pub foreground: Vec<bool>,
    pub layer1: PhaseRecord,
    pub layer2: Option<PhaseRecord>,
    pub similarity: Option<SimilarityMatrix>,
    pub projection: Option<ProjectionPoints>,
    pub clusters: Option<ClusterAssignment>,
    pub config: PipelineConfig,
    pub timings: Vec<(&'static str, Duration)>,
    pub warnings: Vec<String>,
}

impl SegmentationResult {
    pub fn object_count(&self) -> usize {
        self.clusters.as_ref().map_or(0, |c| c.k())
    }
}

fn timed<T>(timings: &mut Vec<(&'static str, Duration)>, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage));
    timings.push((stage, start.elapsed()));
    out
}

pub fn segment_image(image: &[f64], cfg: &PipelineConfig) -> Result<SegmentationResult> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let mut timings = Vec::new();
    let mut warnings = Vec::new();
    let spec = lattice(cfg)?;
    let layer1 = timed(&mut timings, "layer1", || layer1_run(image, cfg))?;
    let split = timed(&mut timings, "background_split", || background_split(&layer1, cfg.background_step, &spec))?;
    let n = spec.node_count();
    let mut result = SegmentationResult {
        side: cfg.side,
        labels: vec![0; n],
        foreground: split.foreground.clone(),
        layer1,
        layer2: None,
        similarity: None,
        projection: None,
        clusters: None,
        config: cfg.clone(),
        timings: Vec::new(),
        warnings: Vec::new(),
    };
    if split.degenerate || !split.foreground.iter().any(|&f| f) {
        warnings.push("layer-1 phases form a single group; image treated as background".to_string());
        result.timings = timings;
        result.warnings = warnings;
        return Ok(result);
    }
    let layer2 = timed(&mut timings, "layer2", || layer2_run(image, &split.foreground, cfg))?;
    let ids: Vec<usize> = (0..n).filter(|&i| split.foreground[i]).collect();
    let s = timed(&mut timings, "similarity", || {
        let window = cfg.similarity_window.resolve(layer2.step_indices())?;
        phase_similarity_matrix(&layer2, &ids, window)
    })?;
    let p = timed(&mut timings, "projection", || similarity_projection(&s))?;
    let k = match cfg.clusters {
        Clusters::Fixed(k) => {
            if k > ids.len() {
                warnings.push(format!("only {} foreground nodes; using that many clusters instead of {k}", ids.len()));
            }
            k.min(ids.len())
        }
        Clusters::Auto => timed(&mut timings, "eigengap", || {
            let m = (AUTO_MAX_CLUSTERS + 1).min(ids.len());
            let (vals, _) = hermitian_leading_eigenpairs(s.entries(), m, 1e-10)?;
            Ok(eigengap_estimate(&vals))
        })?,
    };
    let assignment = timed(&mut timings, "kmeans", || kmeans(&p, k, seed::mix(cfg.seed, seed::stream::KMEANS), cfg.kmeans_restarts))?;
    for (&node, &label) in ids.iter().zip(&assignment.labels) {
        result.labels[node] = label as u32 + 1;
    }
    result.layer2 = Some(layer2);
    result.similarity = Some(s);
    result.projection = Some(p);
    result.clusters = Some(assignment);
    result.timings = timings;
    result.warnings = warnings;
    Ok(result)
}
