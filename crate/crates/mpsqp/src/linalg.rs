//! Dense complex linear algebra shared by every module.
//!
//! Vectorization is row-major throughout: `vec(X)[a * D + b] = X[(a, b)]`.
//! In this convention `vec(A X B) = (A ⊗ Bᵀ) vec(X)`, so the channel
//! `X ↦ Σ A X A†` has matrix `Σ A ⊗ conj(A)` and its Hilbert–Schmidt
//! adjoint is the conjugate transpose of that matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^{iθ}`
#[inline]
pub fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn vec_rm(x: &CMat) -> CVec {
    let (r, cols) = x.shape();
    CVec::from_fn(r * cols, |i, _| x[(i / cols, i % cols)])
}

pub fn unvec_rm(v: &CVec, d: usize) -> CMat {
    CMat::from_fn(d, d, |a, b| v[a * d + b])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Hilbert–Schmidt inner product `Tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Sum of singular values.
pub fn schatten1(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().sum()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], CMat::zeros(0, 0));
    }
    let e = hermitian_part(m).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, col| e.eigenvectors[(r, idx[col])]);
    (vals, vecs)
}

/// Square root of a Hermitian positive semidefinite matrix.
pub fn herm_sqrt(m: &CMat) -> CMat {
    let (vals, u) = herm_eig(m);
    let s = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&v| c(v.max(0.0).sqrt(), 0.0)),
    ));
    &u * s * u.adjoint()
}

/// Moore–Penrose pseudo-inverse with a cutoff relative to the largest
/// singular value. Returns the inverse and the numerical rank.
pub fn pinv(m: &CMat, rel_cutoff: f64) -> (CMat, usize) {
    let (r, cols) = m.shape();
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.max();
    let mut out = CMat::zeros(cols, r);
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if smax > 0.0 && s > rel_cutoff * smax {
            rank += 1;
            let ui = u.column(i);
            let vi = vt.row(i).adjoint();
            out += (vi * ui.adjoint()) * c(1.0 / s, 0.0);
        }
    }
    (out, rank)
}

/// Numerical rank with a relative singular-value cutoff.
pub fn rank(m: &CMat, rel_cutoff: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| smax > 0.0 && s > rel_cutoff * smax).count()
}

pub fn mat_pow(m: &CMat, n: usize) -> CMat {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Scale `x` so its largest-modulus entry (first in row-major order among
/// ties) is real and positive.
pub fn phase_fix(x: &mut CMat) {
    let (r, cols) = x.shape();
    let max = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    for a in 0..r {
        for b in 0..cols {
            let z = x[(a, b)];
            if z.norm() >= max * (1.0 - 1e-9) {
                let f = z.conj() / z.norm();
                *x *= f;
                return;
            }
        }
    }
}

/// Result of a general (non-Hermitian) eigen-decomposition.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Right eigenvectors as unit-norm columns.
    pub vectors: CMat,
    /// True when the eigenvector matrix is numerically singular.
    pub defective: bool,
    /// Schur factors `M = Q T Q†`.
    pub schur_q: CMat,
    pub schur_t: CMat,
}

/// Eigenvalues and right eigenvectors from the complex Schur form.
pub fn eig(m: &CMat) -> Eigen {
    let n = m.nrows();
    if n == 0 {
        return Eigen {
            values: vec![],
            vectors: CMat::zeros(0, 0),
            defective: false,
            schur_q: CMat::zeros(0, 0),
            schur_t: CMat::zeros(0, 0),
        };
    }
    let (q, t) = m.clone().schur().unpack();
    let scale = t.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    let deg_tol = 1e-10 * scale;
    let mut defective = false;
    let mut y = CMat::zeros(n, n);
    for j in 0..n {
        let lam = t[(j, j)];
        y[(j, j)] = ONE;
        for i in (0..j).rev() {
            let mut num = ZERO;
            for k in (i + 1)..=j {
                num += t[(i, k)] * y[(k, j)];
            }
            let den = t[(i, i)] - lam;
            if den.norm() <= deg_tol {
                if num.norm() <= 1e-8 * scale {
                    y[(i, j)] = ZERO;
                } else {
                    defective = true;
                    y[(i, j)] = -num / c(deg_tol, 0.0);
                }
            } else {
                y[(i, j)] = -num / den;
            }
        }
    }
    let mut v = &q * y;
    for j in 0..n {
        let nrm = v.column(j).norm();
        if nrm > 0.0 {
            v.column_mut(j).scale_mut(1.0 / nrm);
        }
    }
    let sv = v.singular_values();
    if sv.min() < 1e-8 * sv.max() {
        defective = true;
    }
    Eigen {
        values: (0..n).map(|i| t[(i, i)]).collect(),
        vectors: v,
        defective,
        schur_q: q,
        schur_t: t,
    }
}

/// Matrix with independent standard complex Gaussian entries.
pub fn random_cmat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// Pauli matrices `[1, σx, σy, σz]`.
pub fn paulis() -> [CMat; 4] {
    [
        CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

pub fn sigma_plus() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

pub fn sigma_minus() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
}
