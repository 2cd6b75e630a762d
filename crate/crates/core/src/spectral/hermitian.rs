//! Hermitian eigensolver: Householder tridiagonalization followed by implicit
//! QL on the real tridiagonal form. Large inputs go through the Krylov-Schur
//! solver instead.

use super::krylov::{largest_modulus, KrylovOptions};
use crate::error::{Error, Result};
use crate::linalg::{dotc, norm2, CMatrix, C64, ONE, ZERO};

/// Dimension above which only the requested pairs are computed iteratively.
pub const DENSE_HERMITIAN_LIMIT: usize = 1500;

/// Allowed deviation from Hermitian symmetry.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Full eigendecomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.rows();
    let mut h = a.clone();
    let (mut d, e_complex, q) = tridiagonalize(&mut h);
    // Unitary diagonal scaling turns the complex off-diagonal into |e_k|.
    let mut phase = vec![ONE; n];
    let mut e = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let ek = e_complex[k];
        let mag = ek.norm();
        e[k] = mag;
        phase[k + 1] = if mag > 0.0 { phase[k] * ek / mag } else { phase[k] };
    }
    let mut y = vec![0.0; n * n];
    for i in 0..n {
        y[i * n + i] = 1.0;
    }
    tql(&mut d, &mut e, &mut y, n)?;
    // Z = Q * diag(phase) * Y
    let mut z = CMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let qk = q[(i, k)] * phase[k];
            if qk == ZERO {
                continue;
            }
            let yrow = &y[k * n..(k + 1) * n];
            let zrow = z.row_mut(i);
            for (zc, &yv) in zrow.iter_mut().zip(yrow) {
                *zc += qk * yv;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| z[(i, order[j])]);
    Ok((values, vectors))
}

/// Householder reduction `A = Q T Q^H`; returns (diagonal, sub-diagonal, Q).
fn tridiagonalize(a: &mut CMatrix) -> (Vec<f64>, Vec<C64>, CMatrix) {
    let n = a.rows();
    let mut q = CMatrix::identity(n);
    let mut u = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let xnorm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let ph = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let alpha = -ph * xnorm;
        u.fill(ZERO);
        for i in k + 1..n {
            u[i] = a[(i, k)];
        }
        u[k + 1] -= alpha;
        let unorm = norm2(&u[k + 1..]);
        if unorm == 0.0 {
            continue;
        }
        u[k + 1..].iter_mut().for_each(|v| *v /= unorm);
        // trailing block update A <- A - u w^H - w u^H, w = 2p - 2(u^H p) u
        for i in k..n {
            let row = a.row(i);
            p[i] = (k + 1..n).map(|j| row[j] * u[j]).sum();
        }
        let kk = dotc(&u[k + 1..], &p[k + 1..]).re;
        let w: Vec<C64> = (0..n)
            .map(|i| if i <= k { p[i] * 2.0 } else { (p[i] - u[i] * kk) * 2.0 })
            .collect();
        for i in k..n {
            for j in k..n {
                let upd = u[i] * w[j].conj() + w[i] * u[j].conj();
                a[(i, j)] -= upd;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
            a[(k, i)] = ZERO;
        }
        for i in 0..n {
            let row = q.row_mut(i);
            let dot: C64 = (k + 1..n).map(|j| row[j] * u[j]).sum();
            for j in k + 1..n {
                row[j] -= dot * 2.0 * u[j].conj();
            }
        }
    }
    let d = (0..n).map(|i| a[(i, i)].re).collect();
    let e = (0..n.saturating_sub(1)).map(|i| a[(i + 1, i)]).collect();
    (d, e, q)
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix
/// (`d` diagonal, `e[k]` couples `k` and `k+1`). Eigenvectors accumulate
/// into the row-major `z` as columns.
fn tql(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    if n <= 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    // absolute floor so clusters of near-zero eigenvalues still deflate
    let floor = f64::EPSILON * (0..n).map(|i| d[i].abs() + e[i].abs()).fold(0.0, f64::max);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Convergence {
                    iterations: iter,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[k * n + i + 1];
                    let zk = z[k * n + i];
                    z[k * n + i + 1] = s * zk + c * zk1;
                    z[k * n + i] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// The `m` eigenpairs of largest `|lambda|`, ordered by descending `|lambda|`.
pub fn hermitian_leading_eigenpairs(s: &CMatrix, m: usize, tol: f64) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    if !s.is_square() {
        return Err(Error::invalid("matrix must be square"));
    }
    let n = s.rows();
    if m == 0 || m > n {
        return Err(Error::invalid(format!("requested {m} eigenpairs of a {n}x{n} matrix")));
    }
    let scale = s.frobenius_norm().max(1.0);
    let defect = s.hermitian_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::invalid(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    if n <= DENSE_HERMITIAN_LIMIT {
        let (vals, vecs) = hermitian_eigh(s)?;
        let mut order: Vec<usize> = (0..n).collect();
        // descending |lambda|; ties toward the larger signed value, then index
        order.sort_by(|&i, &j| {
            vals[j]
                .abs()
                .total_cmp(&vals[i].abs())
                .then(vals[j].total_cmp(&vals[i]))
                .then(i.cmp(&j))
        });
        let take = &order[..m];
        let values = take.iter().map(|&i| vals[i]).collect();
        let vectors = take.iter().map(|&i| vecs.column(i)).collect();
        return Ok((values, vectors));
    }
    let opts = KrylovOptions::new(m, n, tol * scale, 0x5eed);
    let ritz = largest_modulus(s, &opts)?;
    let values = ritz.values.iter().map(|z| z.re).collect();
    let mut vectors = ritz.vectors;
    // re-orthonormalize; Ritz vectors of a Hermitian operator are orthogonal up to rounding
    for i in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(i);
        let v = &mut rest[0];
        for u in done.iter() {
            let c = dotc(u, v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
        let nrm = norm2(v);
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    Ok((values, vectors))
}
