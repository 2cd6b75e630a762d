//! Square lattice geometry and Gaussian distance-decayed connectivity.

use crate::error::{Error, Result};

/// An `N x N` grid of nodes indexed row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    side_length: usize,
}

impl LatticeSpec {
    pub fn new(side_length: usize) -> Result<Self> {
        if side_length < 2 {
            return Err(Error::invalid(format!(
                "lattice side length must be at least 2, got {side_length}"
            )));
        }
        Ok(Self { side_length })
    }

    #[inline]
    pub fn side_length(&self) -> usize {
        self.side_length
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.side_length * self.side_length
    }

    pub fn coords(&self, index: usize) -> Result<(usize, usize)> {
        if index >= self.node_count() {
            return Err(Error::invalid(format!(
                "node index {index} out of range for {} nodes",
                self.node_count()
            )));
        }
        Ok((index / self.side_length, index % self.side_length))
    }

    pub fn index(&self, row: usize, col: usize) -> Result<usize> {
        if row >= self.side_length || col >= self.side_length {
            return Err(Error::invalid(format!(
                "coordinate ({row}, {col}) outside a {0}x{0} lattice",
                self.side_length
            )));
        }
        Ok(row * self.side_length + col)
    }

    /// Whether the node sits on the outer ring of the grid.
    pub fn is_border(&self, index: usize) -> bool {
        let (r, c) = (index / self.side_length, index % self.side_length);
        let last = self.side_length - 1;
        r == 0 || c == 0 || r == last || c == last
    }
}

pub fn build_lattice(side_length: usize) -> Result<LatticeSpec> {
    LatticeSpec::new(side_length)
}

/// Open-boundary Euclidean distance between two nodes.
pub fn euclidean_distance(i: usize, j: usize, spec: &LatticeSpec) -> Result<f64> {
    let (ri, ci) = spec.coords(i)?;
    let (rj, cj) = spec.coords(j)?;
    Ok(squared_distance(ri, ci, rj, cj).sqrt())
}

#[inline]
fn squared_distance(ri: usize, ci: usize, rj: usize, cj: usize) -> f64 {
    let dr = ri.abs_diff(rj) as f64;
    let dc = ci.abs_diff(cj) as f64;
    dr * dr + dc * dc
}

/// Dense symmetric nonnegative weights over all node pairs, self-loops included.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    spec: LatticeSpec,
    peak_strength: f64,
    spatial_scale: f64,
    weights: Vec<f64>,
}

impl AdjacencyMatrix {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn peak_strength(&self) -> f64 {
        self.peak_strength
    }

    pub fn spatial_scale(&self) -> f64 {
        self.spatial_scale
    }

    pub fn dim(&self) -> usize {
        self.spec.node_count()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.dim() + j]
    }

    /// Row-major weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.weights[i * n..(i + 1) * n]
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (i + 1..n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Builds an adjacency from arbitrary weights. Used for tests and for
    /// instances that do not come from a Gaussian kernel.
    pub fn from_weights(spec: LatticeSpec, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != spec.node_count() * spec.node_count() {
            return Err(Error::invalid(format!(
                "expected {} weights, got {}",
                spec.node_count() * spec.node_count(),
                weights.len()
            )));
        }
        let peak = weights.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            spec,
            peak_strength: peak,
            spatial_scale: 0.0,
            weights,
        })
    }
}

/// `a_ij = alpha * exp(-d_ij^2 / (2 sigma^2))` for every pair, `i == j` included.
pub fn gaussian_adjacency(spec: &LatticeSpec, alpha: f64, sigma: f64) -> Result<AdjacencyMatrix> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !alpha.is_finite() {
        return Err(Error::invalid("alpha must be finite"));
    }
    let n = spec.node_count();
    let side = spec.side_length();
    let inv = 1.0 / (2.0 * sigma * sigma);
    // Weights depend only on (|dr|, |dc|); tabulate once so mirrored pairs are
    // bitwise identical.
    let mut table = vec![0.0; side * side];
    for dr in 0..side {
        for dc in 0..side {
            table[dr * side + dc] = alpha * (-((dr * dr + dc * dc) as f64) * inv).exp();
        }
    }
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        let (ri, ci) = (i / side, i % side);
        let row = &mut weights[i * n..(i + 1) * n];
        for (j, w) in row.iter_mut().enumerate() {
            let (rj, cj) = (j / side, j % side);
            *w = table[ri.abs_diff(rj) * side + ci.abs_diff(cj)];
        }
    }
    Ok(AdjacencyMatrix {
        spec: *spec,
        peak_strength: alpha,
        spatial_scale: sigma,
        weights,
    })
}

/// Zeroes every weight touching a node whose `keep` flag is false.
pub fn mask_adjacency(adj: &AdjacencyMatrix, keep: &[bool]) -> Result<AdjacencyMatrix> {
    let n = adj.dim();
    if keep.len() != n {
        return Err(Error::invalid(format!(
            "mask has {} entries, lattice has {n} nodes",
            keep.len()
        )));
    }
    let mut out = adj.clone();
    for i in 0..n {
        let row = &mut out.weights[i * n..(i + 1) * n];
        if !keep[i] {
            row.fill(0.0);
            continue;
        }
        for (w, &k) in row.iter_mut().zip(keep) {
            if !k {
                *w = 0.0;
            }
        }
    }
    Ok(out)
}
