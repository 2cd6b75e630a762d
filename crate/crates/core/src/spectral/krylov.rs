//! Krylov-Schur restarted Arnoldi for a few eigenvalues of largest modulus.
//!
//! The factorization `A V_j = V_j H_j + f e_j^T` is grown to `max_dim`
//! vectors, `H_j` is brought to Schur form, the wanted Ritz values are moved
//! to the leading block and the factorization is truncated to that block.

use rand::Rng;

use super::schur::{hessenberg, hessenberg_qr, reorder_front, triangular_right_eigenvectors};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dotc, norm2, CMatrix, C64, ZERO};
use crate::seed;

/// Linear operator on `C^n`.
pub trait Operator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

impl Operator for CMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec_into(x, y);
    }
}

/// Conjugate transpose of a dense matrix, applied without forming it.
pub struct Adjoint<'a>(pub &'a CMatrix);

impl Operator for Adjoint<'_> {
    fn dim(&self) -> usize {
        self.0.rows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(&self.0.adjoint_matvec(x));
    }
}

#[derive(Debug, Clone)]
pub struct KrylovOptions {
    pub wanted: usize,
    pub max_dim: usize,
    /// Absolute residual target.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl KrylovOptions {
    pub fn new(wanted: usize, n: usize, tol: f64, seed: u64) -> Self {
        Self {
            wanted,
            max_dim: (2 * wanted + 20).max(40).min(n),
            tol,
            max_restarts: 500,
            seed,
        }
    }
}

/// Converged Ritz pairs, largest modulus first.
#[derive(Debug, Clone)]
pub struct RitzPairs {
    pub values: Vec<C64>,
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
}

/// Orthogonalizes `w` against the first `j` basis vectors (two classical
/// Gram-Schmidt passes) and returns the projection coefficients.
fn orthogonalize(basis: &[Vec<C64>], j: usize, w: &mut [C64]) -> Vec<C64> {
    let mut h = vec![ZERO; j];
    for _ in 0..2 {
        for (i, v) in basis.iter().take(j).enumerate() {
            let c = dotc(v, w);
            h[i] += c;
            axpy(-c, v, w);
        }
    }
    h
}

fn random_unit(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let nrm = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nrm);
    v
}

pub fn largest_modulus<O: Operator>(op: &O, opts: &KrylovOptions) -> Result<RitzPairs> {
    let n = op.dim();
    let wanted = opts.wanted;
    if wanted == 0 || wanted > n {
        return Err(Error::invalid(format!("cannot compute {wanted} eigenpairs of a {n}-dimensional operator")));
    }
    let p = opts.max_dim.clamp((wanted + 2).min(n), n);
    let keep = (wanted + (p - wanted) / 2).min(p.saturating_sub(1)).max(wanted);
    let mut rng = seed::rng(seed::mix(opts.seed, seed::stream::KRYLOV));

    // basis[0..=j]; h is (p+1) x p stored as a p x p block plus the residual row
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(p + 1);
    basis.push(random_unit(n, &mut rng));
    let mut hmat = CMatrix::zeros(p, p);
    let mut resid_row = vec![ZERO; p];
    let mut start = 0usize;
    let mut best = f64::INFINITY;
    let mut w = vec![ZERO; n];

    for restart in 0..=opts.max_restarts {
        // extend the factorization from `start` to `p` columns
        let mut size = p;
        for j in start..p {
            op.apply(&basis[j], &mut w);
            let coeffs = orthogonalize(&basis, j + 1, &mut w);
            for (i, c) in coeffs.into_iter().enumerate() {
                hmat[(i, j)] += c;
            }
            let beta = norm2(&w);
            if j + 1 < p {
                if beta <= 1e-14 * hmat.frobenius_norm().max(1.0) {
                    // invariant subspace: continue with a fresh orthogonal direction
                    let mut v = random_unit(n, &mut rng);
                    orthogonalize(&basis, j + 1, &mut v);
                    let nv = norm2(&v);
                    if nv == 0.0 {
                        size = j + 1;
                        break;
                    }
                    v.iter_mut().for_each(|x| *x /= nv);
                    basis.truncate(j + 1);
                    basis.push(v);
                } else {
                    hmat[(j + 1, j)] = C64::new(beta, 0.0);
                    basis.truncate(j + 1);
                    basis.push(w.iter().map(|x| x / beta).collect());
                }
            } else {
                resid_row.fill(ZERO);
                resid_row[j] = C64::new(beta, 0.0);
                basis.truncate(j + 1);
                if beta > 0.0 {
                    basis.push(w.iter().map(|x| x / beta).collect());
                } else {
                    basis.push(vec![ZERO; n]);
                }
            }
        }

        // Schur form of the projected matrix; wanted values to the front
        let mut t = CMatrix::from_fn(size, size, |i, j| hmat[(i, j)]);
        let mut y = hessenberg(&mut t);
        hessenberg_qr(&mut t, &mut y)?;
        reorder_front(&mut t, &mut y, wanted.max(keep.min(size)), |z| -z.norm());

        // residual coupling b^T = f-row * Y
        let b: Vec<C64> = if size == p {
            (0..size).map(|c| resid_row[p - 1] * y[(p - 1, c)]).collect()
        } else {
            vec![ZERO; size]
        };

        let k_want = wanted.min(size);
        let tw = CMatrix::from_fn(k_want, k_want, |i, j| t[(i, j)]);
        let ev = triangular_right_eigenvectors(&tw);
        let mut residuals = Vec::with_capacity(k_want);
        for c in 0..k_want {
            let col = ev.column(c);
            let nrm = norm2(&col);
            let r: C64 = (0..k_want).map(|i| b[i] * col[i]).sum();
            residuals.push(r.norm() / nrm);
        }
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        best = best.min(worst);

        if worst <= opts.tol || size < p {
            let vk: Vec<&Vec<C64>> = basis.iter().take(size).collect();
            let mut values = Vec::with_capacity(k_want);
            let mut vectors = Vec::with_capacity(k_want);
            for c in 0..k_want {
                values.push(t[(c, c)]);
                let s = ev.column(c);
                // x = V_size * (Y[:, :k] s)
                let coef: Vec<C64> = (0..size)
                    .map(|i| (0..k_want).map(|l| y[(i, l)] * s[l]).sum())
                    .collect();
                let mut x = vec![ZERO; n];
                for (i, v) in vk.iter().enumerate() {
                    axpy(coef[i], v, &mut x);
                }
                let nrm = norm2(&x);
                x.iter_mut().for_each(|e| *e /= nrm);
                vectors.push(x);
            }
            return Ok(RitzPairs {
                values,
                vectors,
                residuals,
            });
        }
        if restart == opts.max_restarts {
            break;
        }

        // truncate to the leading `keep` Schur vectors
        let k = keep.min(size - 1);
        let mut new_basis: Vec<Vec<C64>> = Vec::with_capacity(p + 1);
        for c in 0..k {
            let mut x = vec![ZERO; n];
            for i in 0..size {
                axpy(y[(i, c)], &basis[i], &mut x);
            }
            new_basis.push(x);
        }
        new_basis.push(basis[size].clone());
        basis = new_basis;
        hmat = CMatrix::zeros(p, p);
        for i in 0..k {
            for j in 0..k {
                hmat[(i, j)] = t[(i, j)];
            }
        }
        for j in 0..k {
            hmat[(k, j)] = b[j];
        }
        start = k;
    }
    Err(Error::Convergence {
        iterations: opts.max_restarts,
        residual: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_dominant_diagonal_entries() {
        let d: Vec<C64> = (0..200).map(|k| C64::new(0.0, 1.0 + k as f64 * 0.01)).collect();
        let a = CMatrix::from_diag(&d);
        let opts = KrylovOptions::new(3, 200, 1e-10, 1);
        let r = largest_modulus(&a, &opts).unwrap();
        let expect = [2.99, 2.98, 2.97];
        for (v, e) in r.values.iter().zip(expect) {
            assert!((v - C64::new(0.0, e)).norm() < 1e-8, "{v} vs {e}");
        }
    }

    #[test]
    fn ritz_vectors_have_small_residuals() {
        use rand::Rng;
        let mut rng = crate::seed::rng(4);
        let n = 150;
        let a = CMatrix::from_fn(n, n, |i, j| {
            let base = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.05;
            if i == j {
                base + C64::new(0.0, (i as f64) / 10.0)
            } else {
                base
            }
        });
        let opts = KrylovOptions::new(5, n, 1e-9, 9);
        let r = largest_modulus(&a, &opts).unwrap();
        for (lam, v) in r.values.iter().zip(&r.vectors) {
            let av = a.matvec(v);
            let res: f64 = av.iter().zip(v).map(|(x, y)| (x - lam * y).norm_sqr()).sum::<f64>().sqrt();
            assert!(res < 1e-7, "residual {res}");
        }
        for w in r.values.windows(2) {
            assert!(w[0].norm() >= w[1].norm() - 1e-9);
        }
    }
}
