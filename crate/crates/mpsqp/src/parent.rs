//! Frustration-free parent Hamiltonians and exact diagonalization.
//!
//! `H = Σ_j (1 − h_j)` on a ring, where `h_j` projects sites `j, …, j+L`
//! onto the span of the MPS window states `Σ_w Tr(A^{w} X)|w⟩`.

use crate::error::{Error, Result};
use crate::linalg::*;
use crate::mps::{words, MpsTensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Largest window dimension `d^{L+1}` for which `h` is built.
pub const WINDOW_CAP: usize = 4096;
/// Largest Hilbert space assembled densely.
pub const DENSE_ASSEMBLY_CAP: usize = 4096;
/// Largest Hilbert space diagonalized densely.
pub const DENSE_EIGEN_CAP: usize = 1024;
pub const LANCZOS_MAX_ITER: usize = 160;
pub const LANCZOS_RESTARTS: usize = 8;

/// Inverse Gram matrix of the window map, reshuffled.
#[derive(Clone, Debug)]
pub struct CorrectionMatrix {
    pub range: usize,
    /// `G_{(xy),(uv)} = (E^{L+1})_{(vy),(ux)}`
    pub gram: CMat,
    /// `K = G⁻¹`
    pub inverse: CMat,
    /// `C_{(xu),(yv)} = K_{(xy),(uv)}`
    pub c: CMat,
    pub rank: usize,
}

fn window_gram(mps: &MpsTensor, n: usize) -> CMat {
    let d = mps.bond;
    let e = mat_pow(&kron_transfer(mps), n);
    CMat::from_fn(d * d, d * d, |xy, uv| {
        let (x, y) = (xy / d, xy % d);
        let (u, v) = (uv / d, uv % d);
        e[(v * d + y, u * d + x)]
    })
}

fn kron_transfer(mps: &MpsTensor) -> CMat {
    mps.mats.iter().fold(CMat::zeros(mps.bond * mps.bond, mps.bond * mps.bond), |acc, a| {
        acc + kron(a, &a.map(|z| z.conj()))
    })
}

fn reshuffle(k: &CMat, d: usize) -> CMat {
    CMat::from_fn(d * d, d * d, |xu, yv| {
        let (x, u) = (xu / d, xu % d);
        let (y, v) = (yv / d, yv % d);
        k[(x * d + y, u * d + v)]
    })
}

pub fn correction_matrix(mps: &MpsTensor, l: usize) -> Result<CorrectionMatrix> {
    if l == 0 {
        return Err(Error::Invalid("L must be at least 1".into()));
    }
    let gram = window_gram(mps, l + 1);
    let (inverse, rank) = pinv(&gram, 1e-12);
    let dd = mps.bond * mps.bond;
    if rank < dd {
        return Err(Error::NonInjective(format!("window of {} sites has rank {rank} < {dd}", l + 1)));
    }
    let c = reshuffle(&inverse, mps.bond);
    Ok(CorrectionMatrix { range: l, gram, inverse, c, rank })
}

/// `C^∞_{(xu),(yv)} = δ_{xu} (ρ⁻¹)_{vy}` for a tensor with `Γ*[𝟙] = 𝟙`.
pub fn asymptotic_correction(rho: &CMat) -> Result<CMat> {
    let d = rho.nrows();
    let inv = rho.clone().try_inverse().ok_or_else(|| Error::NonInjective("singular fixed point".into()))?;
    Ok(CMat::from_fn(d * d, d * d, |xu, yv| {
        let (x, u) = (xu / d, xu % d);
        let (y, v) = (yv / d, yv % d);
        if x == u {
            inv[(v, y)]
        } else {
            ZERO
        }
    }))
}

/// Projector `h` on `L+1` sites.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub d: usize,
    pub range: usize,
    pub h: CMat,
    /// `‖h² − h‖_F`
    pub projector_defect: f64,
}

impl LocalTerm {
    pub fn span(&self) -> usize {
        self.range + 1
    }
}

pub fn local_term(mps: &MpsTensor, l: usize) -> Result<LocalTerm> {
    let corr = correction_matrix(mps, l)?;
    let n = l + 1;
    let count = mps.d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if count > WINDOW_CAP {
        return Err(Error::CapExceeded { requested: count, cap: WINDOW_CAP });
    }
    let d = mps.bond;
    let ws = words(mps, n);
    let v = CMat::from_fn(ws.len(), d * d, |w, xy| ws[w][(xy % d, xy / d)]);
    let h = hermitian_part(&(&v * &corr.inverse * v.adjoint()));
    let projector_defect = (&h * &h - &h).norm();
    Ok(LocalTerm { d: mps.d, range: l, h, projector_defect })
}

/// `H = Σ_j (1 − h_j)` on a ring of `n` sites.
#[derive(Clone, Debug)]
pub enum Hamiltonian {
    Dense { n_sites: usize, d: usize, matrix: CMat, apply: MatrixFree },
    MatrixFree(MatrixFree),
}

#[derive(Clone, Debug)]
pub struct MatrixFree {
    pub n_sites: usize,
    pub d: usize,
    term: LocalTerm,
    /// Per window: `(sites, offsets)` with `offsets[w] = Σ_t w_t d^{N−1−s_t}`.
    windows: Vec<(Vec<usize>, Vec<usize>)>,
}

impl MatrixFree {
    fn new(n_sites: usize, term: LocalTerm) -> Self {
        let d = term.d;
        let span = term.span();
        let stride = |s: usize| d.pow((n_sites - 1 - s) as u32);
        let windows = (0..n_sites)
            .map(|j| {
                let sites: Vec<usize> = (0..span).map(|t| (j + t) % n_sites).collect();
                let offsets = (0..d.pow(span as u32))
                    .map(|w| {
                        let mut rem = w;
                        let mut off = 0;
                        for t in (0..span).rev() {
                            off += (rem % d) * stride(sites[t]);
                            rem /= d;
                        }
                        off
                    })
                    .collect();
                (sites, offsets)
            })
            .collect();
        MatrixFree { n_sites, d, term, windows }
    }

    /// Row `idx` of `H`, as `(column, value)` contributions.
    fn row_entries(&self, idx: usize, mut emit: impl FnMut(usize, C64)) {
        let d = self.d;
        let n = self.n_sites;
        let h = &self.term.h;
        emit(idx, c(n as f64, 0.0));
        for (sites, offsets) in &self.windows {
            let mut w = 0;
            let mut base = idx;
            for &s in sites {
                let stride = d.pow((n - 1 - s) as u32);
                let digit = (idx / stride) % d;
                w = w * d + digit;
                base -= digit * stride;
            }
            let row = h.row(w);
            for (wp, off) in offsets.iter().enumerate() {
                emit(base + off, -row[wp]);
            }
        }
    }

    fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; psi.len()];
        out.par_iter_mut().enumerate().for_each(|(idx, o)| {
            let mut acc = ZERO;
            self.row_entries(idx, |j, v| acc += v * psi[j]);
            *o = acc;
        });
        out
    }
}

impl Hamiltonian {
    pub fn n_sites(&self) -> usize {
        match self {
            Hamiltonian::Dense { n_sites, .. } => *n_sites,
            Hamiltonian::MatrixFree(m) => m.n_sites,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Hamiltonian::Dense { d, .. } => *d,
            Hamiltonian::MatrixFree(m) => m.d,
        }
    }

    pub fn dim(&self) -> usize {
        self.d().pow(self.n_sites() as u32)
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        match self {
            Hamiltonian::Dense { matrix, .. } if matrix.nrows() <= 256 => {
                (matrix * CVec::from_column_slice(psi)).iter().copied().collect()
            }
            Hamiltonian::Dense { apply, .. } | Hamiltonian::MatrixFree(apply) => apply.apply(psi),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, Hamiltonian::Dense { .. })
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let hp = self.apply(psi);
        let num: C64 = psi.iter().zip(&hp).map(|(a, b)| a.conj() * b).sum();
        num.re / psi.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

/// Dense matrix when `d^N ≤ 4096`, otherwise a matrix-free operator.
pub fn assemble_or_apply(n_sites: usize, term: &LocalTerm) -> Result<Hamiltonian> {
    if n_sites < term.span() {
        return Err(Error::Invalid(format!("ring of {n_sites} sites is shorter than the {}-site window", term.span())));
    }
    let dim = term.d.checked_pow(n_sites as u32).unwrap_or(usize::MAX);
    if dim > crate::mps::AMPLITUDE_CAP {
        return Err(Error::CapExceeded { requested: dim, cap: crate::mps::AMPLITUDE_CAP });
    }
    let mf = MatrixFree::new(n_sites, term.clone());
    if dim > DENSE_ASSEMBLY_CAP {
        return Ok(Hamiltonian::MatrixFree(mf));
    }
    let rows: Vec<Vec<C64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![ZERO; dim];
            mf.row_entries(i, |j, v| row[j] += v);
            row
        })
        .collect();
    let matrix = CMat::from_fn(dim, dim, |i, j| rows[i][j]);
    Ok(Hamiltonian::Dense { n_sites, d: term.d, matrix: hermitian_part(&matrix), apply: mf })
}

/// Left shift `ψ'(i₁,…,i_N) = ψ(i₂,…,i_N,i₁)`.
pub fn translate(psi: &[C64], d: usize) -> Vec<C64> {
    let tail = psi.len() / d;
    (0..psi.len()).map(|idx| psi[(idx % tail) * d + idx / tail]).collect()
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub energy: f64,
    /// `⟨v|T|v⟩` for the left shift `T`.
    pub translation: C64,
    /// `k` with `T v = e^{−ik} v`, in `[0, 2π)`.
    pub momentum: f64,
    pub vector: Vec<C64>,
}

fn momentum_of(t: C64) -> f64 {
    let k = (-t.arg()).rem_euclid(2.0 * PI);
    if (2.0 * PI - k) < 1e-10 {
        0.0
    } else {
        k
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Rotates each cluster of degenerate eigenvectors into translation eigenstates.
fn resolve_momenta(energies: &[f64], vectors: Vec<Vec<C64>>, d: usize) -> Vec<EigenPair> {
    let mut out = vec![];
    let mut i = 0;
    while i < energies.len() {
        let mut j = i + 1;
        while j < energies.len() && (energies[j] - energies[i]).abs() < 1e-8 * (1.0 + energies[i].abs()) {
            j += 1;
        }
        let block = &vectors[i..j];
        let tv: Vec<Vec<C64>> = block.iter().map(|v| translate(v, d)).collect();
        let m = CMat::from_fn(j - i, j - i, |a, b| inner(&block[a], &tv[b]));
        let e = eig(&m);
        for (col, t) in e.values.iter().enumerate() {
            let coef = e.vectors.column(col);
            let mut v = vec![ZERO; block[0].len()];
            for (b, vb) in block.iter().enumerate() {
                for (o, x) in v.iter_mut().zip(vb) {
                    *o += coef[b] * x;
                }
            }
            let nrm = inner(&v, &v).re.sqrt();
            v.iter_mut().for_each(|z| *z /= nrm);
            let mean = energies[i..j].iter().sum::<f64>() / (j - i) as f64;
            out.push(EigenPair { energy: mean, translation: *t, momentum: momentum_of(*t), vector: v });
        }
        i = j;
    }
    out
}

/// Lowest `count` eigenpairs. Dense for `dim ≤ 1024`; otherwise Lanczos with
/// full reorthogonalization in every momentum sector from seeded start
/// vectors. Lanczos resolves one vector per degenerate eigenvalue within a
/// sector.
pub fn lowest_eigenpairs(ham: &Hamiltonian, count: usize, seed: u64) -> Result<Vec<EigenPair>> {
    let dim = ham.dim();
    let d = ham.d();
    let count = count.min(dim);
    if dim <= DENSE_EIGEN_CAP {
        let matrix = match ham {
            Hamiltonian::Dense { matrix, .. } => matrix.clone(),
            Hamiltonian::MatrixFree(_) => unreachable!("small Hamiltonians are assembled densely"),
        };
        let (vals, vecs) = herm_eig(&matrix);
        // extend to the full degenerate cluster of the last requested level
        let mut take = count;
        while take < dim && take > 0 && (vals[take] - vals[take - 1]).abs() < 1e-8 * (1.0 + vals[take].abs()) {
            take += 1;
        }
        let vectors = (0..take).map(|j| vecs.column(j).iter().copied().collect()).collect();
        let mut pairs = resolve_momenta(&vals[..take], vectors, d);
        pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        pairs.truncate(count);
        return Ok(pairs);
    }
    let mut pairs = vec![];
    for m in 0..ham.n_sites() {
        pairs.extend(sector_eigenpairs(ham, m, count, seed)?);
    }
    pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    pairs.truncate(count);
    Ok(pairs)
}

/// Smallest eigenvalue over the whole space (no momentum resolution).
pub fn ground_energy(ham: &Hamiltonian, seed: u64) -> Result<f64> {
    if let Hamiltonian::Dense { matrix, .. } = ham {
        if ham.dim() <= DENSE_EIGEN_CAP {
            return Ok(herm_eig(matrix).0[0]);
        }
    }
    let (vals, _) = lanczos(ham, 1, seed, &|v: &[C64]| v.to_vec())?;
    vals.first().copied().ok_or(Error::NoConvergence(0))
}

/// `P_k ψ = (1/N) Σ_r e^{ikr} Tʳ ψ`, projecting onto `T = e^{−ik}`.
pub fn momentum_projection(psi: &[C64], d: usize, n_sites: usize, k: f64) -> Vec<C64> {
    let mut out = vec![ZERO; psi.len()];
    let mut cur = psi.to_vec();
    for r in 0..n_sites {
        let z = phase(k * r as f64) / n_sites as f64;
        out.par_iter_mut().zip(cur.par_iter()).for_each(|(o, x)| *o += z * x);
        cur = translate(&cur, d);
    }
    out
}

/// Lowest `count` eigenpairs with momentum `2πm/N`, by Lanczos.
pub fn sector_eigenpairs(ham: &Hamiltonian, m: usize, count: usize, seed: u64) -> Result<Vec<EigenPair>> {
    let n = ham.n_sites();
    let d = ham.d();
    let k = 2.0 * PI * (m % n) as f64 / n as f64;
    let project = |v: &[C64]| momentum_projection(v, d, n, k);
    let (vals, vecs) = lanczos(ham, count, seed.wrapping_add(m as u64), &project)?;
    let t = phase(-k);
    Ok(vals
        .into_iter()
        .zip(vecs)
        .map(|(energy, vector)| EigenPair { energy, translation: t, momentum: k, vector })
        .collect())
}

fn lanczos(
    ham: &Hamiltonian,
    count: usize,
    seed: u64,
    project: &dyn Fn(&[C64]) -> Vec<C64>,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let dim = ham.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<C64> = random_cmat(&mut rng, dim, 1).iter().copied().collect();
    for _ in 0..LANCZOS_RESTARTS {
        let (vals, vecs, converged) = lanczos_run(ham, count, &start, project);
        if converged {
            return Ok((vals, vecs));
        }
        // restart from the sum of the current Ritz vectors
        start = vec![ZERO; dim];
        for v in &vecs {
            start.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
    }
    Err(Error::NoConvergence(LANCZOS_MAX_ITER * LANCZOS_RESTARTS))
}

fn lanczos_run(
    ham: &Hamiltonian,
    count: usize,
    start: &[C64],
    project: &dyn Fn(&[C64]) -> Vec<C64>,
) -> (Vec<f64>, Vec<Vec<C64>>, bool) {
    let dim = ham.dim();
    let start = project(start);
    let nrm = inner(&start, &start).re.sqrt();
    if nrm < 1e-12 {
        return (vec![], vec![], true);
    }
    let mut q: Vec<Vec<C64>> = vec![start.iter().map(|z| z / nrm).collect()];
    let mut alpha = vec![];
    let mut beta: Vec<f64> = vec![];
    let max_iter = LANCZOS_MAX_ITER.min(dim);
    for it in 0..max_iter {
        let mut w = ham.apply(&q[it]);
        let hnorm = inner(&w, &w).re.sqrt();
        let a = inner(&q[it], &w).re;
        alpha.push(a);
        for pass in 0..2 {
            for qj in &q {
                let p = inner(qj, &w);
                w.par_iter_mut().zip(qj.par_iter()).for_each(|(x, y)| *x -= p * y);
            }
            if pass == 0 {
                w = project(&w);
            }
        }
        let b = inner(&w, &w).re.sqrt();
        let m = alpha.len();
        let (theta, s) = tridiag_eig(&alpha, &beta);
        let want = count.min(m);
        let converged = (0..want).all(|i| (b * s[(m - 1, i)].norm()) < 1e-10 * (1.0 + theta[i].abs()));
        let exhausted = b <= 1e-9 * hnorm.max(1e-300);
        if (converged && m >= count) || exhausted || it + 1 == max_iter {
            let vecs = (0..want)
                .map(|i| {
                    let mut v = vec![ZERO; dim];
                    for (j, qj) in q.iter().enumerate().take(m) {
                        let coef = s[(j, i)];
                        v.iter_mut().zip(qj).for_each(|(o, x)| *o += coef * x);
                    }
                    v
                })
                .collect();
            let ok = (converged && m >= count) || exhausted;
            return (theta[..want].to_vec(), vecs, ok);
        }
        beta.push(b);
        q.push(w.into_iter().map(|z| z / b).collect());
    }
    unreachable!("loop returns on its last iteration")
}

fn tridiag_eig(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, CMat) {
    let m = alpha.len();
    let t = CMat::from_fn(m, m, |i, j| {
        if i == j {
            c(alpha[i], 0.0)
        } else if i + 1 == j || j + 1 == i {
            c(beta[i.min(j)], 0.0)
        } else {
            ZERO
        }
    });
    herm_eig(&t)
}

#[derive(Clone, Debug, Serialize)]
pub struct Level {
    pub energy: f64,
    pub momentum: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdReport {
    pub n_sites: usize,
    pub range: usize,
    pub dim: usize,
    pub dense: bool,
    pub projector_defect: f64,
    /// `⟨Ψ|H|Ψ⟩/⟨Ψ|Ψ⟩` for the MPS itself.
    pub mps_energy: f64,
    pub levels: Vec<Level>,
}

pub fn ed_report(mps: &MpsTensor, n_sites: usize, l: usize, count: usize) -> Result<EdReport> {
    let term = local_term(mps, l)?;
    let ham = assemble_or_apply(n_sites, &term)?;
    let psi = crate::mps::state_vector(mps, n_sites)?;
    let mps_energy = ham.expectation(&psi.amps);
    let pairs = lowest_eigenpairs(&ham, count, 0x5eed)?;
    Ok(EdReport {
        n_sites,
        range: l,
        dim: ham.dim(),
        dense: ham.is_dense(),
        projector_defect: term.projector_defect,
        mps_energy,
        levels: pairs.iter().map(|p| Level { energy: p.energy, momentum: p.momentum }).collect(),
    })
}
