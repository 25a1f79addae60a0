//! Translation-invariant matrix product states on a ring.

use crate::channel::{channel_spectrum, transfer_matrix};
use crate::error::{Error, Result};
use crate::excitations::gauge_particle_tensor;
use crate::linalg::*;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default cap on the number of amplitudes of a synthesized state.
pub const AMPLITUDE_CAP: usize = 1 << 24;

/// `d` complex `D×D` matrices `A^{(i)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsTensor {
    pub d: usize,
    pub bond: usize,
    pub mats: Vec<CMat>,
}

impl MpsTensor {
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        let bond = mats.first().ok_or_else(|| Error::Invalid("need at least one matrix".into()))?.nrows();
        for (i, m) in mats.iter().enumerate() {
            if m.shape() != (bond, bond) {
                return Err(Error::Shape(format!("matrix {i} is {:?}, expected {bond}x{bond}", m.shape())));
            }
            if !is_finite(m) {
                return Err(Error::NonFinite(format!("matrix {i}")));
            }
        }
        if bond == 0 {
            return Err(Error::Shape("bond dimension must be positive".into()));
        }
        Ok(MpsTensor { d: mats.len(), bond, mats })
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> MpsTensor {
        MpsTensor { d: self.d, bond: self.bond, mats: self.mats.iter().map(f).collect() }
    }

    /// `S A S⁻¹` for every physical index.
    pub fn gauge(&self, s: &CMat) -> Result<MpsTensor> {
        let si = s.clone().try_inverse().ok_or_else(|| Error::Invalid("gauge matrix is singular".into()))?;
        Ok(self.map(|a| s * a * &si))
    }
}

/// Build a tensor from `d·D²` entries, matrix by matrix, each row-major.
pub fn load_mps(raw: &[C64], d: usize, bond: usize) -> Result<MpsTensor> {
    if d == 0 || bond == 0 {
        return Err(Error::Shape("d and D must be positive".into()));
    }
    if raw.len() != d * bond * bond {
        return Err(Error::Shape(format!("{} entries supplied, expected d*D^2 = {}", raw.len(), d * bond * bond)));
    }
    let mats = raw.chunks(bond * bond).map(|ch| CMat::from_row_slice(bond, bond, ch)).collect();
    MpsTensor::new(mats)
}

/// `A^i = √p_i σ_i`
pub fn pauli_tensor(p: [f64; 4]) -> MpsTensor {
    let s = paulis();
    MpsTensor::new((0..4).map(|i| &s[i] * c(p[i].sqrt(), 0.0)).collect()).unwrap()
}

/// `(√(1−λ) σ⁺, √(1−λ) σ⁻, √λ σ_z)`; `λ = 2/3` is the AKLT point.
pub fn aklt_tensor(lambda: f64) -> MpsTensor {
    let a = c((1.0 - lambda).sqrt(), 0.0);
    let b = c(lambda.sqrt(), 0.0);
    MpsTensor::new(vec![sigma_plus() * a, sigma_minus() * a, &paulis()[3] * b]).unwrap()
}

/// Gaussian random tensor (generically injective).
pub fn random_mps<R: Rng + ?Sized>(rng: &mut R, d: usize, bond: usize) -> MpsTensor {
    MpsTensor::new((0..d).map(|_| random_cmat(rng, bond, bond)).collect()).unwrap()
}

/// Bring a tensor to the gauge with `Γ*[𝟙] = 𝟙` and diagonal fixed point `ρ`.
pub fn canonicalize(mps: &MpsTensor) -> Result<(MpsTensor, CMat)> {
    let ch = transfer_matrix(mps);
    let sd = channel_spectrum(&ch);
    if sd.leading_degenerate {
        return Err(Error::NonInjective(format!(
            "leading eigenvalues {} and {} share a modulus",
            sd.eigenvalues[0], sd.eigenvalues[1]
        )));
    }
    let radius = sd.eigenvalues[0].norm();
    if radius == 0.0 {
        return Err(Error::NonInjective("nilpotent transfer channel".into()));
    }
    let scaled = mps.map(|a| a / c(radius.sqrt(), 0.0));

    let adj = transfer_matrix(&scaled).matrix.adjoint();
    let l = leading_vector(&adj, mps.bond);
    let s = herm_sqrt(&l);
    let a1 = scaled.gauge(&s)?;

    let r = leading_vector(&transfer_matrix(&a1).matrix, mps.bond);
    let (vals, u) = herm_eig(&r);
    let a2 = a1.map(|a| u.adjoint() * a * &u);
    let total: f64 = vals.iter().sum();
    let rho = CMat::from_fn(mps.bond, mps.bond, |i, j| if i == j { c(vals[i] / total, 0.0) } else { ZERO });

    let lead = channel_spectrum(&transfer_matrix(&a2)).eigenvalues[0];
    let drift = (lead - ONE).norm();
    if drift > 1e-8 {
        return Err(Error::NormalizationDrift(drift));
    }
    Ok((a2, rho))
}

/// Leading eigenvector of `m`, returned as a Hermitian matrix of unit trace.
fn leading_vector(m: &CMat, bond: usize) -> CMat {
    let e = eig(m);
    let i = (0..e.values.len()).max_by(|&a, &b| e.values[a].norm().total_cmp(&e.values[b].norm())).unwrap();
    let x = unvec_rm(&e.vectors.column(i).into_owned(), bond);
    hermitian_part(&(&x / x.trace()))
}

/// All products `A^{i₁}⋯A^{i_L}` with `i₁` the most significant index.
pub fn words(mps: &MpsTensor, len: usize) -> Vec<CMat> {
    let mut out = vec![identity(mps.bond)];
    for _ in 0..len {
        out = out.iter().flat_map(|w| mps.mats.iter().map(move |a| w * a)).collect();
    }
    out
}

/// Rank of `X ↦ (Tr(X W))_W` over words `W` of length `L`.
pub fn injectivity_rank(mps: &MpsTensor, len: usize) -> Result<(usize, bool)> {
    if len == 0 {
        return Err(Error::Invalid("L must be at least 1".into()));
    }
    let count = mps.d.checked_pow(len as u32).unwrap_or(usize::MAX);
    if count > 1 << 20 {
        return Err(Error::CapExceeded { requested: count, cap: 1 << 20 });
    }
    let dd = mps.bond * mps.bond;
    let ws = words(mps, len);
    let m = CMat::from_fn(ws.len(), dd, |w, xy| ws[w][(xy % mps.bond, xy / mps.bond)]);
    let r = rank(&m, 1e-10);
    Ok((r, r == dd))
}

/// Amplitudes on `N` sites, basis index `Σ_s i_s d^{N−s}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateVector {
    pub n_sites: usize,
    pub d: usize,
    pub amps: Vec<C64>,
    pub norm_sq: f64,
}

impl StateVector {
    pub fn new(n_sites: usize, d: usize, amps: Vec<C64>) -> Result<Self> {
        let want = d.checked_pow(n_sites as u32).ok_or(Error::CapExceeded { requested: usize::MAX, cap: AMPLITUDE_CAP })?;
        if amps.len() != want {
            return Err(Error::Shape(format!("{} amplitudes, expected {want}", amps.len())));
        }
        let norm_sq = amps.par_iter().map(|z| z.norm_sqr()).sum();
        Ok(StateVector { n_sites, d, amps, norm_sq })
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.par_iter().zip(other.amps.par_iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn normalized(&self) -> StateVector {
        let n = self.norm();
        let amps = if n > 0.0 { self.amps.iter().map(|z| z / n).collect() } else { self.amps.clone() };
        StateVector { n_sites: self.n_sites, d: self.d, amps, norm_sq: if n > 0.0 { 1.0 } else { 0.0 } }
    }

    /// `ψ'(i₁,…,i_N) = ψ(i₂,…,i_N,i₁)`
    pub fn translate(&self) -> StateVector {
        let tail = self.amps.len() / self.d;
        let amps = (0..self.amps.len()).map(|idx| self.amps[(idx % tail) * self.d + idx / tail]).collect();
        StateVector { n_sites: self.n_sites, d: self.d, amps, norm_sq: self.norm_sq }
    }

    pub fn recomputed_norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn check_cap(d: usize, n: usize, cap: usize) -> Result<usize> {
    match d.checked_pow(n as u32) {
        Some(v) if v <= cap => Ok(v),
        Some(v) => Err(Error::CapExceeded { requested: v, cap }),
        None => Err(Error::CapExceeded { requested: usize::MAX, cap }),
    }
}

/// Amplitudes `Σ_j (T^{i₁}⋯T^{i_N})_{j, off+j}` for `j < bond`, by depth-first
/// traversal of prefix products.
fn synthesize(site: &[CMat], n: usize, bond: usize, off: usize) -> Vec<C64> {
    let d = site.len();
    let total = d.pow(n as u32);
    let mut amps = vec![ZERO; total];
    let split = n.min(2);
    let chunk = d.pow((n - split) as u32);
    let dim = site[0].nrows();
    amps.par_chunks_mut(chunk).enumerate().for_each(|(head, out)| {
        let mut prefix = identity(dim);
        let mut h = head;
        let mut digits = vec![0; split];
        for s in (0..split).rev() {
            digits[s] = h % d;
            h /= d;
        }
        for &i in &digits {
            prefix = &prefix * &site[i];
        }
        fill(site, &prefix, n - split, bond, off, out);
    });
    amps
}

fn fill(site: &[CMat], prefix: &CMat, remaining: usize, bond: usize, off: usize, out: &mut [C64]) {
    if remaining == 0 {
        out[0] = (0..bond).map(|j| prefix[(j, off + j)]).sum();
        return;
    }
    let d = site.len();
    let chunk = out.len() / d;
    if remaining == 1 {
        for (i, t) in site.iter().enumerate() {
            let mut acc = ZERO;
            for j in 0..bond {
                let row = prefix.row(j);
                let col = t.column(off + j);
                acc += row.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<C64>();
            }
            out[i] = acc;
        }
        return;
    }
    for (i, t) in site.iter().enumerate() {
        let next = prefix * t;
        fill(site, &next, remaining - 1, bond, off, &mut out[i * chunk..(i + 1) * chunk]);
    }
}

pub fn state_vector(mps: &MpsTensor, n: usize) -> Result<StateVector> {
    state_vector_capped(mps, n, AMPLITUDE_CAP)
}

pub fn state_vector_capped(mps: &MpsTensor, n: usize, cap: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    check_cap(mps.d, n, cap)?;
    StateVector::new(n, mps.d, synthesize(&mps.mats, n, mps.bond, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetrization {
    Symmetric,
    Antisymmetric,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    PlainX,
    BTensor,
}

#[derive(Clone, Debug)]
pub struct Insertion {
    pub x: CMat,
    pub k: f64,
}

#[derive(Clone, Debug)]
pub struct ParticleInsertionSpec {
    pub insertions: Vec<Insertion>,
    pub symmetrization: Symmetrization,
    pub gauge: Gauge,
}

impl ParticleInsertionSpec {
    pub fn single(x: CMat, k: f64) -> Self {
        ParticleInsertionSpec {
            insertions: vec![Insertion { x, k }],
            symmetrization: Symmetrization::None,
            gauge: Gauge::PlainX,
        }
    }

    pub fn with_gauge(mut self, gauge: Gauge) -> Self {
        self.gauge = gauge;
        self
    }

    pub fn with_symmetrization(mut self, s: Symmetrization) -> Self {
        self.symmetrization = s;
        self
    }
}

/// `2πm/N`, reduced to `[0, 2π)`.
pub fn ring_momentum(m: i64, n: usize) -> f64 {
    2.0 * PI * m.rem_euclid(n as i64) as f64 / n as f64
}

fn permutations(m: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if left.is_empty() {
            out.push((prefix.clone(), sign));
            return;
        }
        for i in 0..left.len() {
            let v = left.remove(i);
            prefix.push(v);
            let s = if i % 2 == 0 { sign } else { -sign };
            rec(prefix, left, s, out);
            prefix.pop();
            left.insert(i, v);
        }
    }
    let mut out = vec![];
    rec(&mut vec![], &mut (0..m).collect(), 1.0, &mut out);
    out
}

/// `Σ_P sgn Σ_{n₁<…<n_m} e^{i Σ k_{P(j)} n_j} |φ[B_{P(1)}, n₁; …]⟩`, with the
/// particle tensor replacing the site tensor at `n_j` (`B = A X` inserts `X`
/// after site `n_j`).
pub fn excited_state_vector(mps: &MpsTensor, n: usize, spec: &ParticleInsertionSpec) -> Result<StateVector> {
    let m = spec.insertions.len();
    if m == 0 {
        return state_vector(mps, n);
    }
    if m >= n {
        return Err(Error::Invalid(format!("{m} insertions on {n} sites")));
    }
    check_cap(mps.d, n, AMPLITUDE_CAP)?;
    let dd = mps.bond;
    let mut particles = Vec::with_capacity(m);
    for ins in &spec.insertions {
        if ins.x.shape() != (dd, dd) {
            return Err(Error::Shape(format!("insertion is {:?}, expected {dd}x{dd}", ins.x.shape())));
        }
        if !(0.0..2.0 * PI).contains(&ins.k) {
            return Err(Error::OutOfDomain { value: ins.k, domain: "[0, 2pi)".into() });
        }
        let b = match spec.gauge {
            Gauge::PlainX => mps.mats.iter().map(|a| a * &ins.x).collect::<Vec<_>>(),
            Gauge::BTensor => gauge_particle_tensor(mps, &ins.x, ins.k)?,
        };
        particles.push((b, ins.k));
    }
    let perms = match spec.symmetrization {
        Symmetrization::None => vec![((0..m).collect(), 1.0)],
        _ => permutations(m),
    };
    let mut total = vec![ZERO; mps.d.pow(n as u32)];
    for (perm, sign) in perms {
        let w = if spec.symmetrization == Symmetrization::Antisymmetric { sign } else { 1.0 };
        let site: Vec<CMat> = (0..mps.d)
            .map(|i| {
                let mut t = CMat::zeros((m + 1) * dd, (m + 1) * dd);
                for level in 0..=m {
                    let q: f64 = perm[level..].iter().map(|&p| particles[p].1).sum();
                    let z = phase(q);
                    t.view_mut((level * dd, level * dd), (dd, dd)).copy_from(&(&mps.mats[i] * z));
                    if level < m {
                        let b = &particles[perm[level]].0[i];
                        t.view_mut((level * dd, (level + 1) * dd), (dd, dd)).copy_from(&(b * z));
                    }
                }
                t
            })
            .collect();
        let amps = synthesize(&site, n, dd, m * dd);
        total.par_iter_mut().zip(amps.par_iter()).for_each(|(t, a)| *t += a * w);
    }
    StateVector::new(n, mps.d, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::transfer_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Amplitude by explicit matrix products, independent of the traversal.
    fn brute_amplitude(mps: &MpsTensor, idx: usize, n: usize) -> C64 {
        let mut digits = vec![0; n];
        let mut h = idx;
        for s in (0..n).rev() {
            digits[s] = h % mps.d;
            h /= mps.d;
        }
        digits.iter().fold(identity(mps.bond), |p, &i| p * &mps.mats[i]).trace()
    }

    #[test]
    fn load_examples() {
        let scalar = load_mps(&[ONE], 1, 1).unwrap();
        assert_eq!((scalar.d, scalar.bond), (1, 1));
        let aklt = aklt_tensor(2.0 / 3.0);
        let raw: Vec<C64> = aklt.mats.iter().flat_map(|m| m.transpose().iter().copied().collect::<Vec<_>>()).collect();
        assert_eq!(load_mps(&raw, 3, 2).unwrap(), aklt);
        let mixed = MpsTensor::new(vec![identity(2), identity(3), identity(2)]);
        assert!(matches!(mixed, Err(Error::Shape(_))));
        assert!(matches!(load_mps(&[ONE; 7], 2, 2), Err(Error::Shape(_))));
        assert!(matches!(load_mps(&[c(f64::NAN, 0.0)], 1, 1), Err(Error::NonFinite(_))));
    }

    #[test]
    fn pauli_tensor_is_canonical() {
        let mps = pauli_tensor([0.7, 0.1, 0.1, 0.1]);
        let (can, rho) = canonicalize(&mps).unwrap();
        assert!((rho - identity(2) * c(0.5, 0.0)).norm() < 1e-12);
        assert!(transfer_matrix(&can).trace_preservation_defect() < 1e-12);
    }

    #[test]
    fn scalar_canonicalizes_to_one() {
        let (can, rho) = canonicalize(&load_mps(&[c(2.5, 0.0)], 1, 1).unwrap()).unwrap();
        assert!((can.mats[0][(0, 0)] - ONE).norm() < 1e-14);
        assert!((rho[(0, 0)] - ONE).norm() < 1e-14);
    }

    #[test]
    fn ghz_canonicalize_fails() {
        let mut a0 = CMat::zeros(2, 2);
        a0[(0, 0)] = ONE;
        let mut a1 = CMat::zeros(2, 2);
        a1[(1, 1)] = ONE;
        let ghz = MpsTensor::new(vec![a0, a1]).unwrap();
        assert!(matches!(canonicalize(&ghz), Err(Error::NonInjective(_))));
        assert_eq!(injectivity_rank(&ghz, 3).unwrap(), (2, false));
    }

    #[test]
    fn injectivity_examples() {
        assert_eq!(injectivity_rank(&aklt_tensor(2.0 / 3.0), 2).unwrap(), (4, true));
        assert_eq!(injectivity_rank(&load_mps(&[ONE], 1, 1).unwrap(), 1).unwrap(), (1, true));
        assert!(injectivity_rank(&aklt_tensor(0.6), 0).is_err());
    }

    #[test]
    fn product_state_amplitudes() {
        let mps = MpsTensor::new(vec![CMat::from_element(1, 1, ONE), CMat::from_element(1, 1, ZERO)]).unwrap();
        let v = state_vector(&mps, 3).unwrap();
        assert_eq!(v.amps[0], ONE);
        assert!(v.amps[1..].iter().all(|z| *z == ZERO));
    }

    #[test]
    fn amplitudes_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mps = random_mps(&mut rng, 3, 2);
        for n in 1..=5 {
            let v = state_vector(&mps, n).unwrap();
            for idx in 0..v.amps.len() {
                assert!((v.amps[idx] - brute_amplitude(&mps, idx, n)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn norm_is_trace_of_channel_power() {
        let mps = pauli_tensor([0.7, 0.1, 0.1, 0.1]);
        let v = state_vector(&mps, 6).unwrap();
        let tr = mat_pow(&transfer_matrix(&mps).matrix, 6).trace();
        assert!((v.norm_sq - tr.re).abs() < 1e-12);
        assert!((v.norm_sq - v.recomputed_norm_sq()).abs() < 1e-12 * v.norm_sq);
    }

    #[test]
    fn cap_is_enforced() {
        let mps = pauli_tensor([0.7, 0.1, 0.1, 0.1]);
        assert!(matches!(state_vector_capped(&mps, 8, 1000), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn no_insertions_is_ground_state() {
        let mps = aklt_tensor(2.0 / 3.0);
        let spec = ParticleInsertionSpec { insertions: vec![], symmetrization: Symmetrization::None, gauge: Gauge::PlainX };
        assert_eq!(excited_state_vector(&mps, 5, &spec).unwrap().amps, state_vector(&mps, 5).unwrap().amps);
    }

    #[test]
    fn identity_insertion_at_zero_momentum_is_ground_state() {
        let mps = aklt_tensor(2.0 / 3.0);
        let g = state_vector(&mps, 6).unwrap().normalized();
        let e = excited_state_vector(&mps, 6, &ParticleInsertionSpec::single(identity(2), 0.0)).unwrap().normalized();
        assert!((g.inner(&e).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_insertion_matches_explicit_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mps = random_mps(&mut rng, 2, 2);
        let x = random_cmat(&mut rng, 2, 2);
        let n = 5;
        let k = ring_momentum(2, n);
        let v = excited_state_vector(&mps, n, &ParticleInsertionSpec::single(x.clone(), k)).unwrap();
        for idx in 0..v.amps.len() {
            let mut digits = vec![0; n];
            let mut h = idx;
            for s in (0..n).rev() {
                digits[s] = h % 2;
                h /= 2;
            }
            let mut want = ZERO;
            for pos in 1..=n {
                let mut p = identity(2);
                for (s, &i) in digits.iter().enumerate() {
                    p = p * &mps.mats[i];
                    if s + 1 == pos {
                        p = p * &x;
                    }
                }
                want += phase(k * pos as f64) * p.trace();
            }
            assert!((v.amps[idx] - want).norm() < 1e-10);
        }
    }

    #[test]
    fn two_insertions_match_explicit_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mps = random_mps(&mut rng, 2, 2);
        let x = random_cmat(&mut rng, 2, 2);
        let y = random_cmat(&mut rng, 2, 2);
        let n = 5;
        let (k1, k2) = (ring_momentum(1, n), ring_momentum(3, n));
        let spec = ParticleInsertionSpec {
            insertions: vec![Insertion { x: x.clone(), k: k1 }, Insertion { x: y.clone(), k: k2 }],
            symmetrization: Symmetrization::Symmetric,
            gauge: Gauge::PlainX,
        };
        let v = excited_state_vector(&mps, n, &spec).unwrap();
        let ordered = |digits: &[usize], a: &CMat, ka: f64, b: &CMat, kb: f64| {
            let mut s = ZERO;
            for p1 in 1..=n {
                for p2 in (p1 + 1)..=n {
                    let mut p = identity(2);
                    for (site, &i) in digits.iter().enumerate() {
                        p = p * &mps.mats[i];
                        if site + 1 == p1 {
                            p = p * a;
                        }
                        if site + 1 == p2 {
                            p = p * b;
                        }
                    }
                    s += phase(ka * p1 as f64 + kb * p2 as f64) * p.trace();
                }
            }
            s
        };
        for idx in [0usize, 5, 17, 31] {
            let digits: Vec<usize> = (0..n).map(|s| (idx >> (n - 1 - s)) & 1).collect();
            let want = ordered(&digits, &x, k1, &y, k2) + ordered(&digits, &y, k2, &x, k1);
            assert!((v.amps[idx] - want).norm() < 1e-10);
        }
    }

    #[test]
    fn translation_multiplies_by_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mps = random_mps(&mut rng, 3, 2);
        let n = 6;
        for m in 0..n as i64 {
            let k = ring_momentum(m, n);
            let x = random_cmat(&mut rng, 2, 2);
            let v = excited_state_vector(&mps, n, &ParticleInsertionSpec::single(x, k)).unwrap();
            let t = v.translate();
            let err: f64 = t.amps.iter().zip(&v.amps).map(|(a, b)| (a - b * phase(-k)).norm_sqr()).sum::<f64>().sqrt();
            assert!(err <= 1e-10 * v.norm().max(1e-300));
        }
    }

    #[test]
    fn too_many_insertions_rejected() {
        let mps = aklt_tensor(0.6);
        let ins = Insertion { x: identity(2), k: 0.0 };
        let spec = ParticleInsertionSpec { insertions: vec![ins; 3], symmetrization: Symmetrization::None, gauge: Gauge::PlainX };
        assert!(excited_state_vector(&mps, 3, &spec).is_err());
    }

    #[test]
    fn permutation_signs() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        let sum: f64 = p.iter().map(|(_, s)| s).sum();
        assert_eq!(sum, 0.0);
    }
}
