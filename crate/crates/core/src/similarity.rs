//! Phase similarity between nodes, its three-dimensional spectral embedding,
//! and K-means on the embedded points.

use std::ops::RangeInclusive;

use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::PhaseRecord;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ONE};
use crate::seed;
use crate::spectral::hermitian_leading_eigenpairs;

/// Tolerance handed to the Hermitian eigensolver.
const EIG_TOL: f64 = 1e-10;

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_MAX_ITER: usize = 100;
const KMEANS_SHIFT_TOL: f64 = 1e-8;

/// Time-averaged phasor alignment `s_jk = (1/T) sum_t exp(i (theta_j - theta_k))`.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    entries: CMatrix,
    node_ids: Vec<usize>,
    window: Vec<usize>,
}

impl SimilarityMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn node_ids(&self) -> &[usize] {
        &self.node_ids
    }

    /// Step indices averaged over.
    pub fn window(&self) -> &[usize] {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }
}

pub fn phase_similarity_matrix(rec: &PhaseRecord, node_ids: &[usize], window: RangeInclusive<usize>) -> Result<SimilarityMatrix> {
    let positions: Vec<usize> = rec
        .step_indices()
        .iter()
        .enumerate()
        .filter(|(_, s)| window.contains(s))
        .map(|(t, _)| t)
        .collect();
    if positions.is_empty() {
        return Err(Error::invalid(format!(
            "window {}..={} contains no recorded step",
            window.start(),
            window.end()
        )));
    }
    if node_ids.is_empty() {
        return Err(Error::invalid("no nodes selected"));
    }
    if let Some(&bad) = node_ids.iter().find(|&&i| i >= rec.node_count()) {
        return Err(Error::invalid(format!("node {bad} outside record of {} nodes", rec.node_count())));
    }
    let m = node_ids.len();
    let t_len = positions.len();
    // phasors[j * T + t]
    let mut phasors = vec![ONE; m * t_len];
    for (t, &pos) in positions.iter().enumerate() {
        let ph = rec.phases_at(pos);
        for (j, &node) in node_ids.iter().enumerate() {
            phasors[j * t_len + t] = C64::from_polar(1.0, ph[node]);
        }
    }
    let inv_t = 1.0 / t_len as f64;
    let upper: Vec<Vec<C64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let pj = &phasors[j * t_len..(j + 1) * t_len];
            (j + 1..m)
                .map(|k| {
                    let pk = &phasors[k * t_len..(k + 1) * t_len];
                    pj.iter().zip(pk).map(|(a, b)| a * b.conj()).sum::<C64>() * inv_t
                })
                .collect()
        })
        .collect();
    let mut entries = CMatrix::identity(m);
    for (j, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let k = j + 1 + off;
            // clamp rounding excursions past the unit disk
            let v = if v.norm() > 1.0 { v / v.norm() } else { v };
            entries[(j, k)] = v;
            entries[(k, j)] = v.conj();
        }
    }
    Ok(SimilarityMatrix {
        entries,
        node_ids: node_ids.to_vec(),
        window: positions.iter().map(|&p| rec.step_indices()[p]).collect(),
    })
}

/// Rows of `Re(S) [Re z_1, Re z_2, Re z_3]`.
#[derive(Debug, Clone)]
pub struct ProjectionPoints {
    coordinates: Vec<[f64; 3]>,
    node_ids: Vec<usize>,
    eigenvalues: Vec<f64>,
}

impl ProjectionPoints {
    pub fn new(coordinates: Vec<[f64; 3]>, node_ids: Vec<usize>) -> Result<Self> {
        if coordinates.len() != node_ids.len() {
            return Err(Error::invalid("coordinate and node id counts differ"));
        }
        if coordinates.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite projection coordinate"));
        }
        Ok(Self {
            coordinates,
            node_ids,
            eigenvalues: Vec::new(),
        })
    }

    pub fn coordinates(&self) -> &[[f64; 3]] {
        &self.coordinates
    }

    pub fn node_ids(&self) -> &[usize] {
        &self.node_ids
    }

    /// Eigenvalues of `S` used for the projection, descending in modulus.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }
}

pub fn similarity_projection(s: &SimilarityMatrix) -> Result<ProjectionPoints> {
    let m = s.len();
    let want = m.min(3);
    let (values, vectors) = hermitian_leading_eigenpairs(s.entries(), want, EIG_TOL)?;
    let re_s: Vec<f64> = s.entries().as_slice().iter().map(|z| z.re).collect();
    let mut coordinates = vec![[0.0; 3]; m];
    for (c, v) in vectors.iter().enumerate() {
        let re_z: Vec<f64> = v.iter().map(|z| z.re).collect();
        for (j, point) in coordinates.iter_mut().enumerate() {
            point[c] = re_s[j * m..(j + 1) * m].iter().zip(&re_z).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = ProjectionPoints::new(coordinates, s.node_ids().to_vec())?;
    out.eigenvalues = values;
    Ok(out)
}

/// Number of clusters suggested by the largest ratio between consecutive
/// eigenvalue magnitudes. Ties go to the smaller count.
pub fn eigengap_estimate(eigenvalues: &[f64]) -> usize {
    if eigenvalues.len() < 2 {
        return 1;
    }
    // magnitudes at rounding level count as zero
    let floor = 1e-12 * eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mag = |v: f64| if v.abs() <= floor { 0.0 } else { v.abs() };
    let mut best = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for i in 0..eigenvalues.len() - 1 {
        let (a, b) = (mag(eigenvalues[i]), mag(eigenvalues[i + 1]));
        let ratio = if b > 0.0 {
            a / b
        } else if a > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        if ratio > best_ratio {
            best_ratio = ratio;
            best = i + 1;
        }
    }
    best.clamp(1, eigenvalues.len() - 1)
}

#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centroids: Vec<[f64; 3]>,
    pub inertia: f64,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Lloyd iterations from k-means++ seeds; the lowest-inertia restart wins.
/// Labels are numbered in order of first appearance.
pub fn kmeans(points: &ProjectionPoints, k: usize, seed: u64, restarts: usize) -> Result<ClusterAssignment> {
    let pts = points.coordinates();
    let m = pts.len();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if m < k {
        return Err(Error::invalid(format!("cannot form {k} clusters from {m} points")));
    }
    let base = seed::mix(seed, seed::stream::KMEANS);
    let runs: Vec<ClusterAssignment> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| lloyd(pts, k, seed::mix(base, r as u64)))
        .collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.inertia.total_cmp(&b.inertia).then(i.cmp(j)))
        .map(|(_, a)| a)
        .expect("at least one restart");
    Ok(canonical_labels(best))
}

fn lloyd(pts: &[[f64; 3]], k: usize, seed: u64) -> ClusterAssignment {
    let m = pts.len();
    let mut rng = seed::rng(seed);
    // k-means++ seeding over distinct point indices
    let mut chosen = vec![rng.gen_range(0..m)];
    let mut d2: Vec<f64> = pts.iter().map(|p| dist2(p, &pts[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if u < d {
                        break;
                    }
                    u -= d;
                }
            }
            pick.unwrap_or(0)
        } else {
            let free: Vec<usize> = (0..m).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(pts) {
            *d = d.min(dist2(p, &pts[next]));
        }
    }
    let mut centroids: Vec<[f64; 3]> = chosen.iter().map(|&i| pts[i]).collect();
    let mut labels = vec![0usize; m];
    for _ in 0..KMEANS_MAX_ITER {
        assign(pts, &centroids, &mut labels);
        fill_empty(pts, &mut centroids, &mut labels);
        let updated = means(pts, &labels, k, &centroids);
        let shift = updated
            .iter()
            .zip(&centroids)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < KMEANS_SHIFT_TOL {
            break;
        }
    }
    assign(pts, &centroids, &mut labels);
    fill_empty(pts, &mut centroids, &mut labels);
    centroids = means(pts, &labels, k, &centroids);
    let inertia = pts.iter().zip(&labels).map(|(p, &l)| dist2(p, &centroids[l])).sum();
    ClusterAssignment {
        labels,
        centroids,
        inertia,
    }
}

fn assign(pts: &[[f64; 3]], centroids: &[[f64; 3]], labels: &mut [usize]) {
    for (p, l) in pts.iter().zip(labels.iter_mut()) {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (c, q) in centroids.iter().enumerate() {
            let d = dist2(p, q);
            if d < bd {
                bd = d;
                best = c;
            }
        }
        *l = best;
    }
}

/// Gives every empty cluster the point farthest from its own centroid among
/// clusters that can spare one.
fn fill_empty(pts: &[[f64; 3]], centroids: &mut [[f64; 3]], labels: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..pts.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                dist2(&pts[a], &centroids[labels[a]])
                    .total_cmp(&dist2(&pts[b], &centroids[labels[b]]))
                    .then(b.cmp(&a))
            })
            .expect("m >= k leaves a donor");
        labels[donor] = empty;
        centroids[empty] = pts[donor];
    }
}

fn means(pts: &[[f64; 3]], labels: &[usize], k: usize, old: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut sum = vec![[0.0; 3]; k];
    let mut count = vec![0usize; k];
    for (p, &l) in pts.iter().zip(labels) {
        for d in 0..3 {
            sum[l][d] += p[d];
        }
        count[l] += 1;
    }
    (0..k)
        .map(|c| {
            if count[c] == 0 {
                old[c]
            } else {
                let n = count[c] as f64;
                [sum[c][0] / n, sum[c][1] / n, sum[c][2] / n]
            }
        })
        .collect()
}

fn canonical_labels(a: ClusterAssignment) -> ClusterAssignment {
    let k = a.centroids.len();
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &l in &a.labels {
        if map[l] == usize::MAX {
            map[l] = next;
            next += 1;
        }
    }
    let mut centroids = vec![[0.0; 3]; k];
    for (old, &new) in map.iter().enumerate() {
        centroids[new] = a.centroids[old];
    }
    ClusterAssignment {
        labels: a.labels.iter().map(|&l| map[l]).collect(),
        centroids,
        inertia: a.inertia,
    }
}
