//! Dense complex Schur decomposition: Householder reduction to upper
//! Hessenberg form followed by single-shift implicit QR with Wilkinson shifts.
//! Also eigenvectors of the resulting triangular factor and Schur reordering,
//! both needed by the Krylov-Schur restart.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ONE, ZERO};

/// `A = Z T Z^H` with `Z` unitary and `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: CMatrix,
    pub z: CMatrix,
}

#[inline]
fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Rotation `[c s; -conj(s) c]` mapping `(f, g)` to `(r, 0)`.
#[inline]
pub(crate) fn givens(f: C64, g: C64) -> (f64, C64) {
    if g == ZERO {
        return (1.0, ZERO);
    }
    if f == ZERO {
        return (0.0, g.conj() / g.norm());
    }
    let fa = f.norm();
    let norm = fa.hypot(g.norm());
    (fa / norm, (f / fa) * g.conj() / norm)
}

#[inline]
fn rot_rows(m: &mut CMatrix, r1: usize, r2: usize, cols: std::ops::Range<usize>, c: f64, s: C64) {
    for j in cols {
        let a = m[(r1, j)];
        let b = m[(r2, j)];
        m[(r1, j)] = a * c + s * b;
        m[(r2, j)] = b * c - s.conj() * a;
    }
}

#[inline]
fn rot_cols(m: &mut CMatrix, c1: usize, c2: usize, rows: std::ops::Range<usize>, c: f64, s: C64) {
    let sc = s.conj();
    for i in rows {
        let a = m[(i, c1)];
        let b = m[(i, c2)];
        m[(i, c1)] = a * c + sc * b;
        m[(i, c2)] = b * c - s * a;
    }
}

/// Reduces `a` in place to upper Hessenberg form, returning the unitary `Q`
/// with `A_original = Q H Q^H`.
pub fn hessenberg(a: &mut CMatrix) -> CMatrix {
    let n = a.rows();
    let mut q = CMatrix::identity(n);
    if n < 3 {
        return q;
    }
    let mut u = vec![ZERO; n];
    for k in 0..n - 2 {
        let xnorm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        // u = (x - alpha e1) / |x - alpha e1|
        u[..=k].fill(ZERO);
        for i in k + 1..n {
            u[i] = a[(i, k)];
        }
        u[k + 1] -= alpha;
        let unorm = u[k + 1..].iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        if unorm == 0.0 {
            continue;
        }
        for v in &mut u[k + 1..] {
            *v /= unorm;
        }
        // A <- (I - 2uu^H) A  on rows k+1.., all columns from k
        for j in k..n {
            let mut dot = ZERO;
            for i in k + 1..n {
                dot += u[i].conj() * a[(i, j)];
            }
            let f = dot * 2.0;
            for i in k + 1..n {
                let ui = u[i];
                a[(i, j)] -= ui * f;
            }
        }
        // A <- A (I - 2uu^H)  on columns k+1.., all rows
        for i in 0..n {
            let row = a.row_mut(i);
            let mut dot = ZERO;
            for j in k + 1..n {
                dot += row[j] * u[j];
            }
            let f = dot * 2.0;
            for j in k + 1..n {
                row[j] -= f * u[j].conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
        for i in 0..n {
            let row = q.row_mut(i);
            let mut dot = ZERO;
            for j in k + 1..n {
                dot += row[j] * u[j];
            }
            let f = dot * 2.0;
            for j in k + 1..n {
                row[j] -= f * u[j].conj();
            }
        }
    }
    q
}

/// Full Schur decomposition of a general square matrix.
pub fn schur(a: &CMatrix) -> Result<Schur> {
    assert!(a.is_square(), "schur: matrix must be square");
    let mut h = a.clone();
    let mut z = hessenberg(&mut h);
    hessenberg_qr(&mut h, &mut z)?;
    Ok(Schur { t: h, z })
}

/// Single-shift implicit QR on an upper Hessenberg matrix, accumulating the
/// rotations into `z`. On return `h` is upper triangular.
pub fn hessenberg_qr(h: &mut CMatrix, z: &mut CMatrix) -> Result<()> {
    let n = h.rows();
    if n == 0 {
        return Ok(());
    }
    let ulp = f64::EPSILON;
    let safmin = f64::MIN_POSITIVE;
    let hnorm = h.frobenius_norm().max(safmin);
    let max_iter = 30 * n.max(10);
    let mut ihi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    while ihi > 0 {
        // find the start of the active unreduced block
        let mut l = ihi;
        while l > 0 {
            let sub = abs1(h[(l, l - 1)]);
            let mut tst = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            if tst == 0.0 {
                tst = hnorm;
            }
            if sub <= ulp * tst || sub <= safmin {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == ihi {
            ihi -= 1;
            its = 0;
            continue;
        }
        if its >= max_iter {
            return Err(Error::Convergence {
                iterations: total,
                residual: abs1(h[(ihi, ihi - 1)]),
            });
        }
        its += 1;
        total += 1;

        let shift = if its % 10 == 0 {
            // exceptional shift
            h[(ihi, ihi)] + C64::new(0.75 * abs1(h[(ihi, ihi - 1)]), 0.0)
        } else {
            wilkinson(h[(ihi - 1, ihi - 1)], h[(ihi - 1, ihi)], h[(ihi, ihi - 1)], h[(ihi, ihi)])
        };

        for k in l..ihi {
            let (f, g) = if k == l {
                (h[(l, l)] - shift, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(f, g);
            let first_col = if k == l { l } else { k - 1 };
            rot_rows(h, k, k + 1, first_col..n, c, s);
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
            let last_row = (k + 2).min(ihi);
            rot_cols(h, k, k + 1, 0..last_row + 1, c, s);
            rot_cols(z, k, k + 1, 0..z.rows(), c, s);
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(())
}

fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let e1 = half_tr + disc;
    let e2 = half_tr - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Right eigenvectors of an upper triangular `t`, as columns. Column `k`
/// belongs to `t[k][k]` and has zeros below row `k`.
pub fn triangular_right_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.rows();
    let smin = (f64::EPSILON * t.frobenius_norm()).max(f64::MIN_POSITIVE);
    let mut y = CMatrix::zeros(n, n);
    let mut col = vec![ZERO; n];
    for k in 0..n {
        let lambda = t[(k, k)];
        col.fill(ZERO);
        col[k] = ONE;
        for j in (0..k).rev() {
            let mut acc = ZERO;
            for l in j + 1..=k {
                acc += t[(j, l)] * col[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < smin {
                denom = C64::new(smin, 0.0);
            }
            col[j] = -acc / denom;
        }
        y.set_column(k, &col);
    }
    y
}

/// Left eigenvectors `w` of upper triangular `t` (`w^H t = lambda w^H`), as
/// columns. Column `k` has zeros above row `k`.
pub fn triangular_left_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.rows();
    let smin = (f64::EPSILON * t.frobenius_norm()).max(f64::MIN_POSITIVE);
    let mut w = CMatrix::zeros(n, n);
    let mut col = vec![ZERO; n];
    for k in 0..n {
        let lc = t[(k, k)].conj();
        col.fill(ZERO);
        col[k] = ONE;
        for j in k + 1..n {
            let mut acc = ZERO;
            for l in k..j {
                acc += t[(l, j)].conj() * col[l];
            }
            let mut denom = t[(j, j)].conj() - lc;
            if denom.norm() < smin {
                denom = C64::new(smin, 0.0);
            }
            col[j] = -acc / denom;
        }
        w.set_column(k, &col);
    }
    w
}

/// Swaps the adjacent diagonal entries `k` and `k+1` of triangular `t`,
/// updating the Schur vectors.
pub fn swap_adjacent(t: &mut CMatrix, z: &mut CMatrix, k: usize) {
    let n = t.rows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let (c, s) = givens(t[(k, k + 1)], t22 - t11);
    if k + 2 < n {
        rot_rows(t, k, k + 1, k + 2..n, c, s);
    }
    rot_cols(t, k, k + 1, 0..k, c, s);
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    rot_cols(z, k, k + 1, 0..z.rows(), c, s);
}

/// Moves the diagonal entries for which `rank` is smallest to the front,
/// in ascending `rank` order. Only the first `count` positions are sorted.
pub fn reorder_front(t: &mut CMatrix, z: &mut CMatrix, count: usize, rank: impl Fn(C64) -> f64) {
    let n = t.rows();
    for pos in 0..count.min(n) {
        let mut best = pos;
        for j in pos + 1..n {
            if rank(t[(j, j)]) < rank(t[(best, best)]) {
                best = j;
            }
        }
        for j in (pos..best).rev() {
            swap_adjacent(t, z, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::relative_error;
    use rand::Rng;

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut rng = crate::seed::rng(seed);
        CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn assert_unitary(z: &CMatrix) {
        let p = z.adjoint().matmul(z);
        let err = p.sub(&CMatrix::identity(z.rows())).frobenius_norm();
        assert!(err < 1e-12, "unitarity defect {err}");
    }

    #[test]
    fn hessenberg_similarity() {
        let a = random_matrix(7, 3);
        let mut h = a.clone();
        let q = hessenberg(&mut h);
        assert_unitary(&q);
        for i in 2..7 {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], ZERO);
            }
        }
        let back = q.matmul(&h).matmul(&q.adjoint());
        assert!(back.sub(&a).frobenius_norm() < 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn schur_reconstructs() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (12, 4), (30, 5)] {
            let a = random_matrix(n, seed);
            let s = schur(&a).unwrap();
            assert_unitary(&s.z);
            let back = s.z.matmul(&s.t).matmul(&s.z.adjoint());
            assert!(back.sub(&a).frobenius_norm() < 1e-12 * a.frobenius_norm().max(1.0), "n={n}");
        }
    }

    #[test]
    fn triangular_eigenvectors_satisfy_equations() {
        let a = random_matrix(9, 8);
        let s = schur(&a).unwrap();
        let y = triangular_right_eigenvectors(&s.t);
        let w = triangular_left_eigenvectors(&s.t);
        for k in 0..9 {
            let lambda = s.t[(k, k)];
            let yk = y.column(k);
            let ty = s.t.matvec(&yk);
            let ly: Vec<C64> = yk.iter().map(|v| v * lambda).collect();
            assert!(relative_error(&ty, &ly) < 1e-12);
            let wk = w.column(k);
            let thw = s.t.adjoint_matvec(&wk);
            let lw: Vec<C64> = wk.iter().map(|v| v * lambda.conj()).collect();
            assert!(relative_error(&thw, &lw) < 1e-12);
        }
    }

    #[test]
    fn reorder_keeps_similarity() {
        let a = random_matrix(10, 12);
        let mut s = schur(&a).unwrap();
        reorder_front(&mut s.t, &mut s.z, 10, |z| -z.norm());
        for k in 1..10 {
            assert!(s.t[(k - 1, k - 1)].norm() >= s.t[(k, k)].norm() - 1e-12);
        }
        let back = s.z.matmul(&s.t).matmul(&s.z.adjoint());
        assert!(back.sub(&a).frobenius_norm() < 1e-12 * a.frobenius_norm());
    }
}
