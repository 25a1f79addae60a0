//! One- and multi-particle spectra computed from the transfer channel.
//!
//! Superoperators are `D²×D²` matrices in the row-major vectorization of
//! [`crate::linalg`]. `R_ρ[X] = Xρ`, `Q_ρ[X] = X − ρ Tr X`, and the connected
//! channel is `Γ_c = Γ − Γ^∞`.

use crate::channel::{channel_spectrum, transfer_matrix, QuantumChannel, SpectralData, StructureTensor};
use crate::error::{Error, Result};
use crate::linalg::*;
use crate::mps::{excited_state_vector, MpsTensor, ParticleInsertionSpec};
use crate::parent::{assemble_or_apply, local_term};
use serde::Serialize;

/// Resolvent condition numbers above this raise [`Error::NearPole`].
pub const POLE_COND: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Truncation {
    Finite(usize),
    Infinite,
}

/// `T_k = R_ρ + ½ Σ_n (e^{ikn} Γⁿ∘R_ρ + e^{−ikn} R_ρ∘Γ*ⁿ)`.
#[derive(Clone, Debug)]
pub struct FourierTransfer {
    pub k: f64,
    pub truncation: Truncation,
    pub matrix: CMat,
    /// Series built from `Γ_c` instead of `Γ`.
    pub vacuum_projected: bool,
    /// `‖T − T†‖_F / ‖T‖_F`
    pub hermiticity_defect: f64,
}

/// Matrix of `X ↦ Xρ`.
pub fn r_rho(rho: &CMat) -> CMat {
    kron(&identity(rho.nrows()), &rho.transpose())
}

/// Matrix of `X ↦ X − ρ Tr X`.
pub fn q_rho(rho: &CMat) -> CMat {
    let d = rho.nrows();
    identity(d * d) - vec_rm(rho) * vec_rm(&identity(d)).adjoint()
}

fn leading(ch: &QuantumChannel) -> Result<SpectralData> {
    let sd = channel_spectrum(ch);
    if sd.leading_degenerate {
        return Err(Error::NonInjective("degenerate leading eigenvalue".into()));
    }
    Ok(sd)
}

/// `Σ_{n≥1} zⁿ Gⁿ = zG (1 − zG)⁻¹`, guarded against poles.
fn resolvent_sum(g: &CMat, z: C64, eigenvalues: &[C64]) -> Result<CMat> {
    let n = g.nrows();
    let a = identity(n) - g * z;
    let sv = a.singular_values();
    let cond = if sv.min() > 0.0 { sv.max() / sv.min() } else { f64::INFINITY };
    if cond > POLE_COND {
        let worst = eigenvalues
            .iter()
            .min_by(|x, y| (ONE - z * **x).norm().total_cmp(&(ONE - z * **y).norm()))
            .copied()
            .unwrap_or(ZERO);
        return Err(Error::NearPole { eigenvalue: format!("{worst}"), distance: (ONE - z * worst).norm() });
    }
    let inv = a.try_inverse().ok_or_else(|| Error::NearPole { eigenvalue: "?".into(), distance: 0.0 })?;
    Ok(g * z * inv)
}

pub fn fourier_transfer(ch: &QuantumChannel, k: f64, truncation: Truncation, vacuum_projected: bool) -> Result<FourierTransfer> {
    let sd = leading(ch)?;
    fourier_transfer_with(ch, &sd, k, truncation, vacuum_projected)
}

pub fn fourier_transfer_with(
    ch: &QuantumChannel,
    sd: &SpectralData,
    k: f64,
    truncation: Truncation,
    vacuum_projected: bool,
) -> Result<FourierTransfer> {
    let r = r_rho(&sd.rho);
    let g = if vacuum_projected { &ch.matrix - &sd.projector } else { ch.matrix.clone() };
    let z = phase(k);
    let matrix = match truncation {
        Truncation::Finite(l) => {
            let mut acc = r.clone();
            let mut p = identity(g.nrows());
            for n in 1..l {
                p = &p * &g;
                let zn = phase(k * n as f64);
                let term = &p * &r * zn;
                acc += (&term + term.adjoint()) * c(0.5, 0.0);
            }
            acc
        }
        Truncation::Infinite => {
            let eigen: Vec<C64> = if vacuum_projected {
                sd.eigenvalues.iter().skip(1).copied().collect()
            } else {
                sd.eigenvalues.clone()
            };
            let s = resolvent_sum(&g, z, &eigen)? * &r;
            &r + (&s + s.adjoint()) * c(0.5, 0.0)
        }
    };
    let hermiticity_defect = (&matrix - matrix.adjoint()).norm() / matrix.norm().max(1e-300);
    Ok(FourierTransfer { k, truncation, matrix, vacuum_projected, hermiticity_defect })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Series {
    /// Closed (resolvent) form of the connected transfer.
    Resummed,
    /// `T_k^{(L)}` of the connected transfer.
    Truncated,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityRecord {
    pub epsilon1: f64,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct ParticleMode {
    /// Unit Hilbert–Schmidt norm.
    pub x: CMat,
    pub k: f64,
    /// Channel eigenvalue when `x` is an eigenmatrix of `Γ`.
    pub eigenvalue: Option<C64>,
    /// `2L − 2μ`
    pub energy: f64,
    /// `−2μ`
    pub epsilon: f64,
    pub range: usize,
    pub stability: Option<StabilityRecord>,
}

fn is_zero_momentum(k: f64) -> bool {
    (phase(k) - ONE).norm() < 1e-12
}

/// Orthonormal columns spanning `{X : Tr(ρX) = 0}`.
fn vacuum_complement(rho: &CMat) -> CMat {
    let v = vec_rm(rho);
    let n = v.len();
    let p = identity(n) - &v * v.adjoint() / c(v.norm_squared(), 0.0);
    let (_, vecs) = herm_eig(&p);
    vecs.columns(1, n - 1).into_owned()
}

/// Modes of `ℋ_k = R_{ρ⁻¹}∘T_k`, i.e. solutions of `T x = μ R_ρ x`, sorted by
/// ascending `ε = −2μ`. At `k = 0` the problem is restricted to
/// `Tr(ρX) = 0`. Eigenvectors are orthonormal in the metric `Tr(X† Y ρ)`.
pub fn one_particle_modes(ch: &QuantumChannel, k: f64, l: usize, series: Series) -> Result<Vec<ParticleMode>> {
    if l == 0 {
        return Err(Error::Invalid("L must be at least 1".into()));
    }
    let sd = leading(ch)?;
    let trunc = match series {
        Series::Resummed => Truncation::Infinite,
        Series::Truncated => Truncation::Finite(l),
    };
    let t = fourier_transfer_with(ch, &sd, k, trunc, true)?;
    let metric = r_rho(&sd.rho);
    let n = metric.nrows();
    let p = if is_zero_momentum(k) { vacuum_complement(&sd.rho) } else { identity(n) };
    if p.ncols() == 0 {
        return Ok(vec![]);
    }
    let a = p.adjoint() * hermitian_part(&t.matrix) * &p;
    let b = hermitian_part(&(p.adjoint() * &metric * &p));
    let chol = b
        .cholesky()
        .ok_or_else(|| Error::NonInjective("fixed point is not positive definite".into()))?;
    let linv = chol.l().try_inverse().ok_or_else(|| Error::NonInjective("singular metric".into()))?;
    let reduced = &linv * a * linv.adjoint();
    let (mu, z) = herm_eig(&reduced);
    let y = linv.adjoint() * z;
    let x_all = &p * y;
    let mut modes: Vec<ParticleMode> = (0..mu.len())
        .map(|i| {
            let mut x = unvec_rm(&x_all.column(i).into_owned(), ch.dim);
            x /= c(x.norm(), 0.0);
            phase_fix(&mut x);
            let gx = ch.apply(&x);
            let lam = hs_inner(&x, &gx);
            let eigenvalue = if (gx - &x * lam).norm() <= 1e-8 { Some(lam) } else { None };
            ParticleMode {
                x,
                k,
                eigenvalue,
                energy: 2.0 * l as f64 - 2.0 * mu[i],
                epsilon: -2.0 * mu[i],
                range: l,
                stability: None,
            }
        })
        .collect();
    modes.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    Ok(modes)
}

/// `G_ab = Tr(X_a† T_k^{(N)}[X_b])` with the full (unprojected) transfer.
pub fn gram_matrix(ch: &QuantumChannel, k: f64, n_sites: usize, xs: &[CMat]) -> Result<CMat> {
    let t = fourier_transfer(ch, k, Truncation::Finite(n_sites), false)?;
    let v: Vec<CVec> = xs.iter().map(vec_rm).collect();
    Ok(CMat::from_fn(xs.len(), xs.len(), |a, b| (v[a].adjoint() * &t.matrix * &v[b])[(0, 0)]))
}

/// Exact `⟨ψ{X,k}|ψ{Y,k}⟩ / N` on a ring of `N` sites:
/// `Σ_r e^{ikr} Tr((𝟙⊗X̄) Eʳ (Y⊗𝟙) E^{N−r})`.
pub fn ring_gram(ch: &QuantumChannel, k: f64, n_sites: usize, x: &CMat, y: &CMat) -> C64 {
    let d = ch.dim;
    let bra = kron(&identity(d), &x.map(|z| z.conj()));
    let ket = kron(y, &identity(d));
    let mut powers = vec![identity(d * d)];
    for n in 1..=n_sites {
        powers.push(&powers[n - 1] * &ch.matrix);
    }
    (0..n_sites)
        .map(|r| phase(k * r as f64) * (&bra * &powers[r] * &ket * &powers[n_sites - r]).trace())
        .sum()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormalDispersion {
    pub energy: f64,
    pub epsilon: f64,
    /// Minimizing momentum (the rest momentum `φ`).
    pub k_star: f64,
    pub e_star: f64,
}

/// `σ = Re 1/(1 − e^{i(k−φ)}|λ|)`
pub fn sigma(abs: f64, phi: f64, k: f64) -> f64 {
    (ONE / (ONE - phase(k - phi) * abs)).re
}

/// `E = 2L − 2 Re 1/(1 − e^{i(k−φ)}|λ|)`
pub fn normal_dispersion(abs: f64, phi: f64, k: f64, l: usize) -> Result<NormalDispersion> {
    if !(0.0..1.0).contains(&abs) {
        return Err(Error::OutOfDomain { value: abs, domain: "[0, 1)".into() });
    }
    let s = sigma(abs, phi, k);
    let two_l = 2.0 * l as f64;
    Ok(NormalDispersion {
        energy: two_l - 2.0 * s,
        epsilon: -2.0 * s,
        k_star: phi.rem_euclid(2.0 * std::f64::consts::PI),
        e_star: two_l - 2.0 / (1.0 - abs),
    })
}

/// `B^i = A^i X + e^{−ik} Y A^i − A^i Y` with `Y = (Id − e^{−ik}Γ*)⁻¹[X]`.
/// The tensor must satisfy `Γ*[𝟙] = 𝟙`.
pub fn gauge_particle_tensor(mps: &MpsTensor, x: &CMat, k: f64) -> Result<Vec<CMat>> {
    let ch = transfer_matrix(mps);
    if ch.trace_preservation_defect() > 1e-10 {
        return Err(Error::Invalid("gauge tensor needs a canonical tensor (Γ*[1] = 1)".into()));
    }
    if x.shape() != (mps.bond, mps.bond) {
        return Err(Error::Shape("insertion must be DxD".into()));
    }
    let y = solve_y(&ch, x, k)?;
    let zk = phase(-k);
    Ok(mps.mats.iter().map(|a| a * x + &y * a * zk - a * &y).collect())
}

fn solve_y(ch: &QuantumChannel, x: &CMat, k: f64) -> Result<CMat> {
    let adj = ch.matrix.adjoint();
    let zk = phase(-k);
    let e = eig(&adj);
    let vx = vec_rm(x);
    let scale = vx.norm().max(1e-300);
    if !e.defective {
        if let Some(vinv) = e.vectors.clone().try_inverse() {
            let coef = &vinv * &vx;
            let mut y = CVec::zeros(vx.len());
            for (a, mu) in e.values.iter().enumerate() {
                let weight = coef[a].norm() * e.vectors.column(a).norm();
                if weight <= 1e-10 * scale {
                    continue;
                }
                let den = ONE - zk * mu;
                if den.norm() <= 1e-8 {
                    return Err(Error::Singular { eigenvalue: format!("{}", mu.conj()), distance: den.norm() });
                }
                y += e.vectors.column(a) * (coef[a] / den);
            }
            return Ok(unvec_rm(&y, ch.dim));
        }
    }
    let a = identity(vx.len()) - adj * zk;
    let lu = a.lu();
    lu.solve(&vx)
        .map(|y| unvec_rm(&y, ch.dim))
        .ok_or(Error::Singular { eigenvalue: "defective".into(), distance: 0.0 })
}

/// `‖Σ_i A^{i†} B^i‖_F`
pub fn annihilation_residual(mps: &MpsTensor, b: &[CMat]) -> f64 {
    mps.mats
        .iter()
        .zip(b)
        .fold(CMat::zeros(mps.bond, mps.bond), |acc, (a, bi)| acc + a.adjoint() * bi)
        .norm()
}

#[derive(Clone, Debug, Serialize)]
pub struct FusionEntry {
    pub alpha: usize,
    pub beta: usize,
    pub f_re: f64,
    pub f_im: f64,
    pub involves_vacuum: bool,
}

#[derive(Clone, Debug)]
pub enum EpsilonMethod {
    /// Leakage superoperator and infinite-chain overlaps.
    Analytic,
    /// Normalized residual of the parent Hamiltonian on a ring.
    Ed { mps: MpsTensor, n_sites: usize },
}

#[derive(Clone, Debug)]
pub struct StabilityOptions {
    pub gamma: Option<f64>,
    pub method: EpsilonMethod,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions { gamma: None, method: EpsilonMethod::Analytic }
    }
}

#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub mode: usize,
    pub k: f64,
    pub range: usize,
    /// `‖Hψ − 2(L − σ)ψ‖² / ⟨ψ|ψ⟩`
    pub epsilon1: f64,
    /// ED only: `‖Hψ − ⟨H⟩ψ‖² / ⟨ψ|ψ⟩`.
    pub variance: Option<f64>,
    pub delta: f64,
    pub sigma: f64,
    pub fusion: Vec<FusionEntry>,
    /// `c_{αβ} = Tr(X_α† 𝒞[X_β])` in the structure-tensor basis.
    pub leakage: CMat,
    /// Eigenvalues actually used (after rescaling).
    pub eigenvalues: Vec<C64>,
}

/// `λ(L) = e^{−γ ln L / L}`
pub fn renormalized_modulus(gamma: f64, l: usize) -> f64 {
    (-gamma * (l as f64).ln() / l as f64).exp()
}

fn vacuum_index(eigenvalues: &[C64]) -> usize {
    (0..eigenvalues.len())
        .min_by(|&a, &b| (eigenvalues[a] - ONE).norm().total_cmp(&(eigenvalues[b] - ONE).norm()))
        .unwrap_or(0)
}

/// Bound-state diagnostics of mode `a` of a normal unital channel.
///
/// `sd.right` must be the basis of `st` (as produced by
/// [`crate::channel::structure_constants`]).
pub fn stability_diagnostics(
    sd: &SpectralData,
    st: &StructureTensor,
    a: usize,
    k: f64,
    l: usize,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    if !sd.is_normal_unital() {
        return Err(Error::NotNormal(sd.normality_defect.max(sd.unitality_defect)));
    }
    let n = st.len();
    if a >= n || sd.eigenvalues.len() != n {
        return Err(Error::Invalid(format!("mode index {a} out of range")));
    }
    for (x, y) in sd.right.iter().zip(&st.basis) {
        if (x - y).norm() > 1e-9 {
            return Err(Error::Invalid("structure tensor basis differs from the spectral eigenmatrices".into()));
        }
    }
    if l < 1 {
        return Err(Error::Invalid("L must be at least 1".into()));
    }
    let vac = vacuum_index(&sd.eigenvalues);
    if a == vac {
        return Err(Error::Invalid("the vacuum mode has no dispersion".into()));
    }
    let eigenvalues: Vec<C64> = match opts.gamma {
        Some(g) => {
            if l < 2 {
                return Err(Error::Invalid("renormalization needs L >= 2".into()));
            }
            let m = renormalized_modulus(g, l);
            sd.eigenvalues
                .iter()
                .enumerate()
                .map(|(i, z)| if i == vac { *z } else { C64::from_polar(m, z.arg()) })
                .collect()
        }
        None => sd.eigenvalues.clone(),
    };
    let lam_a = eigenvalues[a];
    if lam_a.norm() >= 1.0 {
        return Err(Error::OutOfDomain { value: lam_a.norm(), domain: "|lambda_a| < 1".into() });
    }
    let sig = (ONE / (ONE - phase(k) * lam_a)).re;

    let mut delta = 0.0;
    let mut fusion = vec![];
    for alpha in 0..n {
        for beta in 0..n {
            let f = st.f(alpha, a, beta);
            if f.norm() > 1e-12 {
                fusion.push(FusionEntry { alpha, beta, f_re: f.re, f_im: f.im, involves_vacuum: alpha == vac || beta == vac });
            }
            if alpha == vac || beta == vac || f.norm() <= 1e-14 {
                continue;
            }
            let (la, lb) = (eigenvalues[alpha], eigenvalues[beta]);
            let (pa, pb) = (-la.arg(), -lb.arg());
            let s: C64 = (1..=l)
                .map(|j| {
                    let jf = j as f64;
                    phase((k - pa + pb) * jf) * (la.norm().powi(j as i32) * lb.norm().powi((l - j) as i32))
                })
                .sum();
            delta += f.norm_sqr() / sig * s.norm_sqr();
        }
    }

    let d = sd.dim;
    let basis = &st.basis;
    let channel = basis
        .iter()
        .zip(&eigenvalues)
        .fold(CMat::zeros(d * d, d * d), |acc, (x, lam)| acc + vec_rm(x) * vec_rm(x).adjoint() * *lam);
    let rho = identity(d) / c(d as f64, 0.0);
    let leak = leakage_superoperator(&channel, &rho, &basis[a], k, l);
    let coeff = CMat::from_fn(n, n, |al, be| (vec_rm(&basis[al]).adjoint() * &leak * vec_rm(&basis[be]))[(0, 0)]);

    let (epsilon1, variance) = match &opts.method {
        EpsilonMethod::Analytic => {
            let norm = chain_gram(&channel, &rho, &basis[a], k);
            (leakage_norm(&channel, &rho, basis, &coeff, k, l) / norm, None)
        }
        EpsilonMethod::Ed { mps, n_sites } => {
            if opts.gamma.is_some() {
                return Err(Error::Invalid("the ED estimate cannot use a renormalized spectrum".into()));
            }
            let (e, v) = ed_epsilon(mps, *n_sites, l, &basis[a], k, 2.0 * (l as f64 - sig))?;
            (e, Some(v))
        }
    };
    Ok(StabilityReport { mode: a, k, range: l, epsilon1, variance, delta, sigma: sig, fusion, leakage: coeff, eigenvalues })
}

/// `𝒞{X,k} = Σ_{j=1}^{L−1} e^{ikj} R_{ρ⁻¹}∘Γʲ∘L̃_X∘Γ^{L−j}` with
/// `L̃_X[Y] = Q_ρ[X Q_ρ[Y]]`.
pub fn leakage_superoperator(channel: &CMat, rho: &CMat, x: &CMat, k: f64, l: usize) -> CMat {
    let d = rho.nrows();
    let q = q_rho(rho);
    let lx = &q * kron(x, &identity(d)) * &q;
    let rinv = r_rho(&rho.clone().try_inverse().expect("positive fixed point"));
    let mut powers = vec![identity(d * d)];
    for j in 1..=l {
        powers.push(&powers[j - 1] * channel);
    }
    (1..l).fold(CMat::zeros(d * d, d * d), |acc, j| acc + &rinv * &powers[j] * &lx * &powers[l - j] * phase(k * j as f64))
}

/// Infinite-chain `Σ_r e^{ikr} ⟨φ{X,0}|φ{X,r}⟩`, vacuum part removed.
fn chain_gram(channel: &CMat, rho: &CMat, x: &CMat, k: f64) -> f64 {
    let d = rho.nrows();
    let left = vec_rm(&identity(d));
    let right = vec_rm(rho);
    let inf = &right * left.adjoint();
    let conn = channel - &inf;
    let bra = kron(&identity(d), &x.map(|z| z.conj()));
    let ket = kron(x, &identity(d));
    let mut total = (left.adjoint() * &bra * &ket * &right)[(0, 0)];
    let mut p = identity(d * d);
    for r in 1..100_000 {
        p = &p * &conn;
        let fwd = (left.adjoint() * &bra * &p * &ket * &right)[(0, 0)] * phase(k * r as f64);
        let bwd = (left.adjoint() * &ket * &p * &bra * &right)[(0, 0)] * phase(-k * r as f64);
        total += fwd + bwd;
        if p.norm() < 1e-17 {
            break;
        }
    }
    total.re
}

/// `Σ_r e^{ikr} ⟨Φ₀|Φ_r⟩` for `Φ_r = Σ_{αβ} c_{αβ} |φ{X_α, r; X_β, r+L}⟩` on an
/// infinite chain, with the disconnected (vacuum) part removed.
fn leakage_norm(channel: &CMat, rho: &CMat, basis: &[CMat], coeff: &CMat, k: f64, l: usize) -> f64 {
    let d = rho.nrows();
    let n = basis.len();
    let left = vec_rm(&identity(d));
    let right = vec_rm(rho);
    let inf = &right * left.adjoint();
    let conn = channel - &inf;
    // Φ = Σ_α |φ{X_α, r; Y_α, r+L}⟩ with Y_α = Σ_β c_{αβ} X_β
    let pairs: Vec<(CMat, CMat)> = (0..n)
        .map(|al| {
            let y = (0..n).fold(CMat::zeros(d, d), |acc, be| acc + &basis[be] * coeff[(al, be)]);
            (basis[al].clone(), y)
        })
        .collect();
    let id = identity(d);
    let kets: Vec<(CMat, CMat)> = pairs.iter().map(|(x, y)| (kron(x, &id), kron(y, &id))).collect();
    let bras: Vec<(CMat, CMat)> = pairs
        .iter()
        .map(|(x, y)| (kron(&id, &x.map(|z| z.conj())), kron(&id, &y.map(|z| z.conj()))))
        .collect();
    let mut full = vec![identity(d * d)];
    let mut connp = vec![identity(d * d)];
    let cap = 2 * l + 4000;
    for g in 1..=cap {
        full.push(&full[g - 1] * channel);
        connp.push(&connp[g - 1] * &conn);
        if g > 2 * l + 10 && connp[g].norm() < 1e-18 {
            break;
        }
    }
    let gmax = connp.len() - 1;

    // events: (position, operator); bra pair at 0 and L, ket pair at r and r+L
    let overlap = |r: i64| -> C64 {
        let mut total = ZERO;
        for (b0, bl) in &bras {
            for (k0, kl) in &kets {
                let mut ev: Vec<(i64, u8, &CMat)> = vec![(0, 0, b0), (l as i64, 0, bl), (r, 1, k0), (r + l as i64, 1, kl)];
                ev.sort_by_key(|e| (e.0, e.1));
                let separated = r > l as i64 || r < -(l as i64);
                let mut v = right.clone();
                for i in (0..ev.len()).rev() {
                    v = ev[i].2 * v;
                    if i > 0 {
                        let gap = (ev[i].0 - ev[i - 1].0) as usize;
                        if gap > 0 {
                            let cluster_gap = separated && i == 2;
                            if cluster_gap {
                                if gap > gmax {
                                    v.fill(ZERO);
                                } else {
                                    v = &connp[gap] * v;
                                }
                            } else {
                                v = &full[gap.min(full.len() - 1)] * v;
                            }
                        }
                    }
                }
                total += (left.adjoint() * v)[(0, 0)];
            }
        }
        total
    };
    let reach = (l + gmax) as i64;
    let mut sum = ZERO;
    for r in -reach..=reach {
        sum += phase(k * r as f64) * overlap(r);
    }
    sum.re
}

fn ed_epsilon(mps: &MpsTensor, n_sites: usize, l: usize, x: &CMat, k: f64, e_ref: f64) -> Result<(f64, f64)> {
    let term = local_term(mps, l)?;
    let ham = assemble_or_apply(n_sites, &term)?;
    let psi = excited_state_vector(mps, n_sites, &ParticleInsertionSpec::single(x.clone(), k))?;
    let hpsi = ham.apply(&psi.amps);
    let nsq = psi.norm_sq;
    let mean: C64 = psi.amps.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum::<C64>() / nsq;
    let res = |e: f64| hpsi.iter().zip(&psi.amps).map(|(h, p)| (h - p * e).norm_sqr()).sum::<f64>() / nsq;
    Ok((res(e_ref), res(mean.re)))
}

/// Magnitudes of the low-density error terms (unit prefactors).
#[derive(Clone, Debug, Serialize)]
pub struct RegimeReport {
    pub bond: usize,
    pub lambda2: f64,
    pub range: usize,
    pub n_sites: usize,
    pub particles: usize,
    /// `D²|λ₂|^L` per particle (0 when `m = 0`).
    pub leakage: f64,
    /// `Σ_{n=1}^{m} (m−n+1) C(L,n) N^{−n} D^{2(n+1)}`
    pub lemma2: f64,
    /// `m!/N^m` (0 when `m = 0`).
    pub orthogonality: f64,
    /// `m D^{2m} L^{m+1} / N^m`
    pub identity_action: f64,
}

impl RegimeReport {
    /// Sum of all terms, with the leakage counted once per particle.
    pub fn envelope(&self) -> f64 {
        self.particles as f64 * self.leakage + self.lemma2 + self.orthogonality + self.identity_action
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn regime_validity(bond: usize, lambda2: f64, l: usize, n: usize, m: usize) -> Result<RegimeReport> {
    if bond == 0 || l == 0 || n == 0 || !(lambda2 >= 0.0) {
        return Err(Error::Invalid("regime inputs must be positive".into()));
    }
    let dd = (bond * bond) as f64;
    let nf = n as f64;
    let leakage = if m == 0 { 0.0 } else { dd * lambda2.powi(l as i32) };
    let lemma2 = (1..=m)
        .map(|j| (m - j + 1) as f64 * binomial(l, j) * nf.powi(-(j as i32)) * dd.powi(j as i32 + 1))
        .sum();
    let factorial: f64 = (1..=m).map(|i| i as f64).product();
    let orthogonality = if m == 0 { 0.0 } else { factorial / nf.powi(m as i32) };
    let identity_action = m as f64 * dd.powi(m as i32) * (l as f64).powi(m as i32 + 1) / nf.powi(m as i32);
    Ok(RegimeReport { bond, lambda2, range: l, n_sites: n, particles: m, leakage, lemma2, orthogonality, identity_action })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MultiEnergy {
    pub total: f64,
    pub epsilon_sum: f64,
}

/// `Σ_j E[X_j, k_j]` and `Σ_j ε_j`.
pub fn multiparticle_energy(modes: &[ParticleMode]) -> MultiEnergy {
    MultiEnergy {
        total: modes.iter().map(|m| m.energy).sum(),
        epsilon_sum: modes.iter().map(|m| m.epsilon).sum(),
    }
}
