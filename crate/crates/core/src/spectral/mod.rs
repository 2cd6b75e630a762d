//! Eigen-analysis of the system matrix.
//!
//! `B^k x(0) = sum_i lambda_i^k (r_i^T x(0)) v_i`, where `v_i` are right
//! eigenvectors and `r_i^T` the biorthogonal left rows. The weights
//! `mu_i(k) = lambda_i^k (r_i^T x(0))` describe how much each mode
//! contributes at step `k`; truncating the sum gives low-rank dynamics.

pub mod hermitian;
pub mod krylov;
pub mod schur;

use std::f64::consts::PI;

pub use hermitian::{hermitian_eigh, hermitian_leading_eigenpairs};

use crate::dynamics::{principal_arg, ComplexState, SystemMatrix};
use crate::error::{Error, Result};
use crate::linalg::{dotc, dotu, norm2, CMatrix, C64, ONE, ZERO};
use krylov::{largest_modulus, Adjoint, KrylovOptions};
use schur::{schur, triangular_left_eigenvectors, triangular_right_eigenvectors};

/// Connected blocks up to this size are decomposed densely.
pub const DENSE_LIMIT: usize = 1024;

/// Moduli closer than this are treated as ties when ordering.
const MODULUS_TIE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverStrategy {
    /// Dense QR for blocks up to [`DENSE_LIMIT`], Krylov-Schur above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub modes: usize,
    /// Residual bound relative to `||B||_F`.
    pub tol: f64,
    pub seed: u64,
    pub strategy: SolverStrategy,
}

impl EigenOptions {
    pub fn new(modes: usize, tol: f64, seed: u64) -> Self {
        Self {
            modes,
            tol,
            seed,
            strategy: SolverStrategy::Auto,
        }
    }
}

/// Leading eigenpairs of a (generally non-normal) matrix with biorthogonal
/// left rows.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    dim: usize,
    eigenvalues: Vec<C64>,
    right: Vec<Vec<C64>>,
    left_rows: Vec<Vec<C64>>,
    residuals: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Unit-norm right eigenvector `v_i`.
    pub fn right_vector(&self, i: usize) -> &[C64] {
        &self.right[i]
    }

    /// Left row `r_i^T`, scaled so that `r_i^T v_i = 1`.
    pub fn left_row(&self, i: usize) -> &[C64] {
        &self.left_rows[i]
    }

    /// `||B v_i - lambda_i v_i||_2`.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// `sum_i lambda_i v_i r_i^T`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..self.modes() {
            let lam = self.eigenvalues[i];
            for r in 0..n {
                let f = lam * self.right[i][r];
                if f == ZERO {
                    continue;
                }
                for (o, l) in out.row_mut(r).iter_mut().zip(&self.left_rows[i]) {
                    *o += f * l;
                }
            }
        }
        out
    }

    /// Largest `|r_i^T v_j - delta_ij|` over all pairs.
    pub fn biorthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.modes() {
            for j in 0..self.modes() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((dotu(&self.left_rows[i], &self.right[j]) - target).norm());
            }
        }
        worst
    }
}

struct Candidate {
    value: C64,
    right: Vec<C64>,
    left: Vec<C64>,
    anchor: usize,
    block: usize,
}

/// The `m` eigenpairs of largest modulus of `B`.
pub fn leading_eigenpairs(b: &SystemMatrix, m: usize, tol: f64, seed: u64) -> Result<EigenDecomposition> {
    leading_eigenpairs_with(b.entries(), &EigenOptions::new(m, tol, seed))
}

pub fn leading_eigenpairs_with(b: &CMatrix, opts: &EigenOptions) -> Result<EigenDecomposition> {
    if !b.is_square() {
        return Err(Error::invalid("matrix must be square"));
    }
    let n = b.rows();
    let m = opts.modes;
    if m == 0 || m > n {
        return Err(Error::invalid(format!("requested {m} eigenpairs of a {n}x{n} matrix")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    let bnorm = b.frobenius_norm();
    let blocks = coupled_blocks(b);
    let mut candidates = Vec::new();
    for (bi, nodes) in blocks.iter().enumerate() {
        let local = block_pairs(b, nodes, m, opts, bnorm)?;
        for (value, rv, lv) in local {
            let mut right = vec![ZERO; n];
            let mut left = vec![ZERO; n];
            for (k, &node) in nodes.iter().enumerate() {
                right[node] = rv[k];
                left[node] = lv[k];
            }
            let anchor = normalize_right(&mut right);
            candidates.push(Candidate {
                value,
                right,
                left,
                anchor,
                block: bi,
            });
        }
    }
    order_candidates(&mut candidates);
    candidates.truncate(m);
    biorthogonalize(&mut candidates);

    let mut residuals = Vec::with_capacity(m);
    let mut bv = vec![ZERO; n];
    for c in &candidates {
        b.matvec_into(&c.right, &mut bv);
        let r = bv
            .iter()
            .zip(&c.right)
            .map(|(x, v)| (x - c.value * v).norm_sqr())
            .sum::<f64>()
            .sqrt();
        residuals.push(r);
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > opts.tol * bnorm.max(f64::MIN_POSITIVE) {
        return Err(Error::Convergence {
            iterations: 0,
            residual: worst,
        });
    }
    Ok(EigenDecomposition {
        dim: n,
        eigenvalues: candidates.iter().map(|c| c.value).collect(),
        right: candidates.iter().map(|c| c.right.clone()).collect(),
        left_rows: candidates.into_iter().map(|c| c.left).collect(),
        residuals,
    })
}

/// Groups indices into blocks that are not coupled by any nonzero entry, so
/// `B` is a permuted block-diagonal matrix over them.
fn coupled_blocks(b: &CMatrix) -> Vec<Vec<usize>> {
    let n = b.rows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for (j, v) in b.row(i).iter().enumerate() {
            if i != j && *v != ZERO {
                let (a, c) = (find(&mut parent, i), find(&mut parent, j));
                if a != c {
                    parent[a.max(c)] = a.min(c);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[root]].push(i);
    }
    blocks
}

/// Eigen-triples (value, right, unnormalized left) of one coupled block, in
/// block-local coordinates.
fn block_pairs(b: &CMatrix, nodes: &[usize], m: usize, opts: &EigenOptions, bnorm: f64) -> Result<Vec<(C64, Vec<C64>, Vec<C64>)>> {
    let k = nodes.len();
    if k == 1 {
        let i = nodes[0];
        return Ok(vec![(b[(i, i)], vec![ONE], vec![ONE])]);
    }
    let sub = CMatrix::from_fn(k, k, |r, c| b[(nodes[r], nodes[c])]);
    let dense = match opts.strategy {
        SolverStrategy::Dense => true,
        SolverStrategy::Krylov => false,
        SolverStrategy::Auto => k <= DENSE_LIMIT,
    };
    if dense {
        let s = schur(&sub)?;
        let y = triangular_right_eigenvectors(&s.t);
        let w = triangular_left_eigenvectors(&s.t);
        let right = s.z.matmul(&y);
        let left = s.z.matmul(&w);
        return Ok((0..k)
            .map(|i| (s.t[(i, i)], right.column(i), left.column(i)))
            .collect());
    }
    let want = m.min(k);
    let kopts = KrylovOptions::new(want, k, opts.tol * bnorm * 0.1, opts.seed);
    let rp = largest_modulus(&sub, &kopts)?;
    let lp = largest_modulus(&Adjoint(&sub), &kopts)?;
    // pair each right value with the left value whose conjugate is closest
    let mut used = vec![false; lp.values.len()];
    let mut out = Vec::with_capacity(want);
    for (lam, v) in rp.values.iter().zip(rp.vectors) {
        let mut best = None;
        let mut best_score = f64::INFINITY;
        for (j, mu) in lp.values.iter().enumerate() {
            if used[j] {
                continue;
            }
            let score = (mu.conj() - lam).norm() + lp.residuals[j];
            if score < best_score {
                best_score = score;
                best = Some(j);
            }
        }
        let j = best.ok_or(Error::Convergence {
            iterations: kopts.max_restarts,
            residual: f64::INFINITY,
        })?;
        used[j] = true;
        out.push((*lam, v, lp.vectors[j].clone()));
    }
    Ok(out)
}

/// Unit norm with the largest component real and positive. Returns that
/// component's index.
fn normalize_right(v: &mut [C64]) -> usize {
    let nrm = norm2(v);
    if nrm == 0.0 {
        return 0;
    }
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let anchor = v
        .iter()
        .position(|z| z.norm() >= peak * (1.0 - 1e-9))
        .unwrap_or(0);
    let ph = v[anchor] / v[anchor].norm();
    let f = ph.conj() / nrm;
    v.iter_mut().for_each(|z| *z *= f);
    v[anchor] = C64::new(v[anchor].re, 0.0);
    anchor
}

/// Descending modulus; near-equal moduli ordered by phase angle, then by the
/// index of the eigenvector's largest component.
fn order_candidates(c: &mut [Candidate]) {
    c.sort_by(|a, b| b.value.norm().total_cmp(&a.value.norm()));
    let mut start = 0;
    while start < c.len() {
        let mut end = start + 1;
        while end < c.len() && (c[end - 1].value.norm() - c[end].value.norm()).abs() < MODULUS_TIE {
            end += 1;
        }
        c[start..end].sort_by(|a, b| {
            principal_arg(a.value)
                .total_cmp(&principal_arg(b.value))
                .then(a.anchor.cmp(&b.anchor))
        });
        start = end;
    }
}

/// Rescales left vectors so `r_i^T v_j = delta_ij`. Eigenvalues that coincide
/// within one coupled block are handled as a group by inverting their
/// cross-Gram matrix.
fn biorthogonalize(c: &mut [Candidate]) {
    let n = c.len();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        let scale = c[i].value.norm().max(1.0);
        let group: Vec<usize> = (i..n)
            .filter(|&j| !done[j] && c[j].block == c[i].block && (c[j].value - c[i].value).norm() <= 1e-8 * scale)
            .collect();
        for &j in &group {
            done[j] = true;
        }
        // M[a][b] = u_a^H v_b ; rows of R = M^{-1} U^H
        let g = group.len();
        let mmat = CMatrix::from_fn(g, g, |a, b| dotc(&c[group[a]].left, &c[group[b]].right));
        let inv = invert_small(&mmat);
        let uh: Vec<Vec<C64>> = group.iter().map(|&a| c[a].left.iter().map(|z| z.conj()).collect()).collect();
        for (a, &ga) in group.iter().enumerate() {
            let mut row = vec![ZERO; c[ga].left.len()];
            for (bidx, u) in uh.iter().enumerate() {
                let f = inv[(a, bidx)];
                if f == ZERO {
                    continue;
                }
                for (r, x) in row.iter_mut().zip(u) {
                    *r += f * x;
                }
            }
            c[ga].left = row;
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting; singular pivots are floored.
fn invert_small(a: &CMatrix) -> CMatrix {
    let n = a.rows();
    let mut m = a.clone();
    let mut inv = CMatrix::identity(n);
    let floor = f64::EPSILON * a.frobenius_norm().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[(x, col)].norm().total_cmp(&m[(y, col)].norm()))
            .unwrap_or(col);
        if piv != col {
            for j in 0..n {
                let t = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = t;
                let t = inv[(col, j)];
                inv[(col, j)] = inv[(piv, j)];
                inv[(piv, j)] = t;
            }
        }
        let mut p = m[(col, col)];
        if p.norm() < floor {
            p = C64::new(floor, 0.0);
        }
        let pinv = ONE / p;
        for j in 0..n {
            m[(col, j)] *= pinv;
            inv[(col, j)] *= pinv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f == ZERO {
                continue;
            }
            for j in 0..n {
                let mv = m[(col, j)];
                let iv = inv[(col, j)];
                m[(r, j)] -= f * mv;
                inv[(r, j)] -= f * iv;
            }
        }
    }
    inv
}

/// `mu_i(k)` for `k = 0..=steps`, held as log-modulus and phase so that
/// `|lambda_i|^k` may exceed the floating-point range.
#[derive(Debug, Clone)]
pub struct ContributionTrace {
    modes: usize,
    steps: usize,
    log_modulus: Vec<f64>,
    phase: Vec<f64>,
}

impl ContributionTrace {
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of recorded steps, `steps + 1` rows including `k = 0`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn log_modulus(&self, k: usize, i: usize) -> f64 {
        self.log_modulus[k * self.modes + i]
    }

    pub fn phase(&self, k: usize, i: usize) -> f64 {
        self.phase[k * self.modes + i]
    }

    /// `mu_i(k)`; infinite when it overflows.
    pub fn mu(&self, k: usize, i: usize) -> C64 {
        let lm = self.log_modulus(k, i);
        if lm == f64::NEG_INFINITY {
            return ZERO;
        }
        C64::from_polar(lm.exp(), self.phase(k, i))
    }

    /// `|mu_i(k)| / sum_j |mu_j(k)|` over the computed modes.
    pub fn normalized_row(&self, k: usize) -> Vec<f64> {
        let row = &self.log_modulus[k * self.modes..(k + 1) * self.modes];
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return vec![0.0; self.modes];
        }
        let w: Vec<f64> = row.iter().map(|&l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    pub fn mu_normalized(&self, k: usize, i: usize) -> f64 {
        self.normalized_row(k)[i]
    }
}

pub fn mode_contributions(dec: &EigenDecomposition, x0: &ComplexState, steps: usize) -> Result<ContributionTrace> {
    if x0.len() != dec.dim() {
        return Err(Error::invalid(format!(
            "state has {} entries, decomposition is {}-dimensional",
            x0.len(),
            dec.dim()
        )));
    }
    let m = dec.modes();
    let coeff: Vec<C64> = (0..m).map(|i| dotu(dec.left_row(i), x0.as_slice())).collect();
    let mut log_modulus = Vec::with_capacity((steps + 1) * m);
    let mut phase = Vec::with_capacity((steps + 1) * m);
    for k in 0..=steps {
        for i in 0..m {
            let (lm, ph) = mu_polar(dec.eigenvalues()[i], coeff[i], k);
            log_modulus.push(lm);
            phase.push(ph);
        }
    }
    Ok(ContributionTrace {
        modes: m,
        steps,
        log_modulus,
        phase,
    })
}

fn mu_polar(lambda: C64, coeff: C64, k: usize) -> (f64, f64) {
    if coeff == ZERO || (lambda == ZERO && k > 0) {
        return (f64::NEG_INFINITY, 0.0);
    }
    let kf = k as f64;
    let lm = if k == 0 { 0.0 } else { kf * lambda.norm().ln() };
    let ph = if k == 0 { 0.0 } else { kf * lambda.arg() };
    (lm + coeff.norm().ln(), (ph + coeff.arg()).rem_euclid(2.0 * PI))
}

/// `sum_{i < rank} mu_i(k) v_i`.
pub fn lowrank_reconstruct(dec: &EigenDecomposition, x0: &ComplexState, k: usize, rank: usize) -> Result<ComplexState> {
    let (scaled, log_scale) = lowrank_reconstruct_scaled(dec, x0, k, rank)?;
    let f = log_scale.exp();
    Ok(ComplexState(scaled.0.into_iter().map(|z| z * f).collect()))
}

/// Low-rank state divided by `exp(log_scale)`, the largest `|mu_i(k)|` in
/// the sum. Phases are those of the exact combination even when it overflows.
pub fn lowrank_reconstruct_scaled(dec: &EigenDecomposition, x0: &ComplexState, k: usize, rank: usize) -> Result<(ComplexState, f64)> {
    if rank == 0 || rank > dec.modes() {
        return Err(Error::invalid(format!(
            "rank must be in 1..={}, got {rank}",
            dec.modes()
        )));
    }
    if x0.len() != dec.dim() {
        return Err(Error::invalid("state dimension does not match decomposition"));
    }
    let polar: Vec<(f64, f64)> = (0..rank)
        .map(|i| mu_polar(dec.eigenvalues()[i], dotu(dec.left_row(i), x0.as_slice()), k))
        .collect();
    let top = polar.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![ZERO; dec.dim()];
    if top == f64::NEG_INFINITY {
        return Ok((ComplexState(out), 0.0));
    }
    for (i, &(lm, ph)) in polar.iter().enumerate() {
        if lm == f64::NEG_INFINITY {
            continue;
        }
        let w = C64::from_polar((lm - top).exp(), ph);
        for (o, v) in out.iter_mut().zip(dec.right_vector(i)) {
            *o += w * v;
        }
    }
    Ok((ComplexState(out), top))
}
