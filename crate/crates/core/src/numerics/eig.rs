//! General (non-Hermitian) complex eigendecomposition.
//!
//! Householder reduction to Hessenberg form followed by single-shift complex
//! QR sweeps (Wilkinson shift, Givens bulge chasing) gives the Schur form
//! `A = Q T Q^H`. Right eigenvectors come from back substitution on `T`.
//! Dimensions in this crate are at most 9, so no blocking or balancing.

use std::cmp::Ordering;

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Iteration budget per eigenvalue.
const ITERATIONS_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending by real part, ties broken by imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Column `k` is the unit-norm right eigenvector for `eigenvalues[k]`.
    pub right_eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.right_eigenvectors.column_vec(k)
    }
}

/// Schur form `A = Q T Q^H` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub q: ComplexMatrix,
    pub t: ComplexMatrix,
}

/// Eigenvalues and unit right eigenvectors of a square complex matrix.
///
/// Eigenvectors have their first non-negligible component rotated onto the
/// positive real axis. At defective points the returned vectors are nearly
/// parallel; that is reported downstream, not treated as failure here.
pub fn eig_general(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    a.ensure_square()?;
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.rows();
    let Schur { q, t } = schur(a)?;

    let t_norm = t.frobenius_norm();
    let small = (f64::EPSILON * t_norm).max(1e-140);

    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        // Solve (T - λ I) y = 0 with y_k = 1, y_j = 0 for j > k.
        let mut y = vec![ZERO; n];
        y[k] = ONE;
        for j in (0..k).rev() {
            let mut rhs = ZERO;
            for m in (j + 1)..=k {
                rhs -= t[(j, m)] * y[m];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[j] = rhs / denom;
            // Rescale to keep growth bounded near (defective) degeneracies.
            let big = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big > 1e150 {
                for z in y.iter_mut() {
                    *z /= big;
                }
            }
        }
        let mut v = q.matvec(&y);
        normalize_with_phase(&mut v);
        pairs.push((lambda, v));
    }

    let scale = a.frobenius_norm().max(1.0);
    pairs.sort_by(|x, y| canonical_order(x.0, y.0, scale));

    let eigenvalues: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let right_eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(EigenDecomposition {
        eigenvalues,
        right_eigenvectors,
    })
}

/// Eigenvalues only, in canonical order.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    a.ensure_square()?;
    let Schur { t, .. } = schur(a)?;
    let n = t.rows();
    let mut vals: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let scale = a.frobenius_norm().max(1.0);
    vals.sort_by(|x, y| canonical_order(*x, *y, scale));
    Ok(vals)
}

/// Real parts are compared on a grid of `1e-9 · scale` so that conjugate
/// pairs whose real parts differ only by rounding still order by imaginary part.
fn canonical_order(a: Complex64, b: Complex64, scale: f64) -> Ordering {
    let q = 1e-9 * scale;
    let ka = (a.re / q).round();
    let kb = (b.re / q).round();
    ka.total_cmp(&kb).then(a.im.total_cmp(&b.im))
}

fn normalize_with_phase(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    for z in v.iter_mut() {
        *z /= norm;
    }
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-10).copied() {
        let phase = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Complex Schur decomposition.
pub fn schur(a: &ComplexMatrix) -> Result<Schur> {
    a.ensure_square()?;
    let n = a.rows();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    if n == 1 {
        return Ok(Schur { q, t: h });
    }

    hessenberg_reduce(&mut h, &mut q);

    let norm = a.frobenius_norm();
    let max_total = ITERATIONS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;

    while hi > 0 {
        // Deflate negligible subdiagonal entries.
        for k in 1..=hi {
            let sub = h[(k, k - 1)].norm();
            let mut diag = h[(k - 1, k - 1)].norm() + h[(k, k)].norm();
            if diag == 0.0 {
                diag = norm;
            }
            if sub <= f64::EPSILON * diag {
                h[(k, k - 1)] = ZERO;
            }
        }
        let mut lo = hi;
        while lo > 0 && h[(lo, lo - 1)] != ZERO {
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        total += 1;
        since_deflation += 1;
        if total > max_total {
            return Err(Error::NonConvergence {
                norm,
                iterations: total,
            });
        }

        let shift = if since_deflation.is_multiple_of(11) {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_sweep(&mut h, &mut q, lo, hi, shift);
    }

    // Clean the strictly lower part, which holds only rounding noise now.
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { q, t: h })
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
    let mu1 = half_tr + disc;
    let mu2 = half_tr - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let norm = ax.hypot(ay);
    let c = ax / norm;
    let s = (x / ax) * y.conj() / norm;
    (c, s)
}

fn rotate_rows(h: &mut ComplexMatrix, r0: usize, c: f64, s: Complex64, cols: std::ops::Range<usize>) {
    for j in cols {
        let x = h[(r0, j)];
        let y = h[(r0 + 1, j)];
        h[(r0, j)] = x * c + s * y;
        h[(r0 + 1, j)] = -s.conj() * x + y * c;
    }
}

/// Right-multiplies columns `c0, c0+1` by `G^H`.
fn rotate_cols(h: &mut ComplexMatrix, c0: usize, c: f64, s: Complex64, rows: std::ops::Range<usize>) {
    for i in rows {
        let x = h[(i, c0)];
        let y = h[(i, c0 + 1)];
        h[(i, c0)] = x * c + y * s.conj();
        h[(i, c0 + 1)] = -x * s + y * c;
    }
}

fn qr_sweep(h: &mut ComplexMatrix, q: &mut ComplexMatrix, lo: usize, hi: usize, shift: Complex64) {
    let n = h.rows();
    let mut x = h[(lo, lo)] - shift;
    let mut y = h[(lo + 1, lo)];
    for k in lo..hi {
        let (c, s) = givens(x, y);
        let first_col = if k > lo { k - 1 } else { lo };
        rotate_rows(h, k, c, s, first_col..n);
        let last_row = (k + 2).min(hi);
        rotate_cols(h, k, c, s, 0..last_row + 1);
        rotate_cols(q, k, c, s, 0..n);
        if k > lo {
            h[(k + 1, k - 1)] = ZERO;
        }
        if k + 1 < hi {
            x = h[(k + 1, k)];
            y = h[(k + 2, k)];
        }
    }
}

/// Householder reduction to upper Hessenberg form, accumulating `Q`.
fn hessenberg_reduce(h: &mut ComplexMatrix, q: &mut ComplexMatrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let alpha_norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        v[0] += phase * alpha_norm;
        let vnorm2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if vnorm2 == 0.0 {
            continue;
        }
        // H ← P H P with P = I − 2 v v^H / (v^H v)
        for j in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * h[(k + 1 + i, j)]).sum();
            let f = dot * (2.0 / vnorm2);
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= vi * f;
            }
        }
        for mat in [&mut *h, &mut *q] {
            for i in 0..n {
                let dot: Complex64 = v.iter().enumerate().map(|(j, vj)| mat[(i, k + 1 + j)] * vj).sum();
                let f = dot * (2.0 / vnorm2);
                for (j, vj) in v.iter().enumerate() {
                    mat[(i, k + 1 + j)] -= f * vj.conj();
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Principal angle between two complex vectors, in radians (`[0, π/2]`).
pub fn principal_angle(u: &[Complex64], v: &[Complex64]) -> f64 {
    let nu = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let overlap: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>() / (nu * nv);
    // Component of v orthogonal to u, for accuracy at small angles.
    let sin2: f64 = u
        .iter()
        .zip(v)
        .map(|(a, b)| (b / nv - overlap * a / nu).norm_sqr())
        .sum();
    sin2.sqrt().atan2(overlap.norm())
}
