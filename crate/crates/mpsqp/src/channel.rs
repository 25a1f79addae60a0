//! Transfer channels: spectra, fixed points, complete positivity, normality
//! and structure constants.

use crate::error::{Error, Result};
use crate::linalg::*;
use crate::mps::MpsTensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const NORMALITY_TOL: f64 = 1e-9;
pub const DEGENERACY_TOL: f64 = 1e-9;
pub const CP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FromMps,
    Direct,
    DisorderAveraged,
}

/// Linear superoperator on `D×D` matrices, stored as its `D²×D²` matrix.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    pub dim: usize,
    pub matrix: CMat,
    pub kraus: Option<Vec<CMat>>,
    pub provenance: Provenance,
}

impl QuantumChannel {
    pub fn from_matrix(dim: usize, matrix: CMat) -> Result<Self> {
        if matrix.shape() != (dim * dim, dim * dim) {
            return Err(Error::Shape(format!(
                "channel matrix is {:?}, expected {}x{}",
                matrix.shape(),
                dim * dim,
                dim * dim
            )));
        }
        if !is_finite(&matrix) {
            return Err(Error::NonFinite("channel matrix".into()));
        }
        Ok(QuantumChannel { dim, matrix, kraus: None, provenance: Provenance::Direct })
    }

    pub fn from_kraus(kraus: &[CMat]) -> Result<Self> {
        let dim = kraus.first().map(|k| k.nrows()).ok_or_else(|| Error::Invalid("no Kraus operators".into()))?;
        if kraus.iter().any(|k| k.shape() != (dim, dim)) {
            return Err(Error::Shape("Kraus operators must all be DxD".into()));
        }
        let mut m = CMat::zeros(dim * dim, dim * dim);
        for k in kraus {
            m += kron(k, &k.map(|z| z.conj()));
        }
        Ok(QuantumChannel { dim, matrix: m, kraus: Some(kraus.to_vec()), provenance: Provenance::FromMps })
    }

    /// `Γ[X]`
    pub fn apply(&self, x: &CMat) -> CMat {
        unvec_rm(&(&self.matrix * vec_rm(x)), self.dim)
    }

    /// `Γ*[X]`
    pub fn apply_adjoint(&self, x: &CMat) -> CMat {
        unvec_rm(&(self.matrix.adjoint() * vec_rm(x)), self.dim)
    }

    /// Action through the Kraus sum, when available.
    pub fn apply_kraus(&self, x: &CMat) -> Option<CMat> {
        self.kraus.as_ref().map(|ks| {
            ks.iter().fold(CMat::zeros(self.dim, self.dim), |acc, k| acc + k * x * k.adjoint())
        })
    }

    pub fn adjoint(&self) -> QuantumChannel {
        QuantumChannel {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
            kraus: self.kraus.as_ref().map(|ks| ks.iter().map(|k| k.adjoint()).collect()),
            provenance: self.provenance,
        }
    }

    /// `‖ΓΓ* − Γ*Γ‖_F / ‖Γ‖_F²`
    pub fn normality_defect(&self) -> f64 {
        let m = &self.matrix;
        let md = m.adjoint();
        let n2 = m.norm_squared();
        if n2 == 0.0 {
            return 0.0;
        }
        (m * &md - &md * m).norm() / n2
    }

    /// `‖Γ[𝟙] − 𝟙‖_F`
    pub fn unitality_defect(&self) -> f64 {
        let id = identity(self.dim);
        (self.apply(&id) - id).norm()
    }

    /// `‖Γ*[𝟙] − 𝟙‖_F`
    pub fn trace_preservation_defect(&self) -> f64 {
        let id = identity(self.dim);
        (self.apply_adjoint(&id) - id).norm()
    }

    /// Largest `‖Γ[X†] − Γ[X]†‖_F` over `samples` Gaussian matrices.
    pub fn hermiticity_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                let x = random_cmat(&mut rng, self.dim, self.dim);
                (self.apply(&x.adjoint()) - self.apply(&x).adjoint()).norm() / x.norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_normal_unital(&self) -> bool {
        self.normality_defect() <= NORMALITY_TOL && self.unitality_defect() <= NORMALITY_TOL
    }
}

pub fn transfer_matrix(mps: &MpsTensor) -> QuantumChannel {
    QuantumChannel::from_kraus(&mps.mats).expect("validated tensor")
}

/// Eigen-decomposition of a channel.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub dim: usize,
    /// Sorted by modulus, descending; ties by phase.
    pub eigenvalues: Vec<C64>,
    /// Unit Hilbert–Schmidt norm, phase fixed.
    pub right: Vec<CMat>,
    /// Biorthogonal to `right`: `⟨left_a, right_b⟩ = δ_ab`.
    pub left: Vec<CMat>,
    /// Leading right eigenmatrix, Hermitian part, trace one.
    pub rho: CMat,
    /// `Γ^∞ = |X₁⟩⟨L₁|`
    pub projector: CMat,
    pub leading_degenerate: bool,
    pub defective: bool,
    pub schur_q: CMat,
    pub schur_t: CMat,
    pub normality_defect: f64,
    pub unitality_defect: f64,
}

impl SpectralData {
    pub fn is_normal_unital(&self) -> bool {
        self.normality_defect <= NORMALITY_TOL && self.unitality_defect <= NORMALITY_TOL
    }

    /// Modulus of the second eigenvalue (0 if there is none).
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues.get(1).map(|z| z.norm()).unwrap_or(0.0)
    }
}

fn sort_key(z: &C64) -> (i64, i64) {
    (-(z.norm() * 1e9).round() as i64, (z.arg() * 1e9).round() as i64)
}

pub fn channel_spectrum(ch: &QuantumChannel) -> SpectralData {
    let d = ch.dim;
    let e = eig(&ch.matrix);
    let n = e.values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| sort_key(&e.values[i]));
    let eigenvalues: Vec<C64> = order.iter().map(|&i| e.values[i]).collect();
    let mut right: Vec<CMat> = order
        .iter()
        .map(|&i| {
            let mut x = unvec_rm(&e.vectors.column(i).into_owned(), d);
            x /= c(x.norm(), 0.0);
            phase_fix(&mut x);
            x
        })
        .collect();
    let v = CMat::from_fn(n, n, |r, col| vec_rm(&right[col])[r]);
    let w = match v.clone().try_inverse() {
        Some(w) if !e.defective => w,
        _ => pinv(&v, 1e-14).0,
    };
    let mut left: Vec<CMat> = (0..n)
        .map(|a| CMat::from_fn(d, d, |i, j| w[(a, i * d + j)].conj()))
        .collect();
    let leading_degenerate = n > 1 && (eigenvalues[0].norm() - eigenvalues[1].norm()).abs() < DEGENERACY_TOL;

    let x1 = right[0].clone();
    let tr = x1.trace();
    let rho = if tr.norm() > 1e-12 { hermitian_part(&(&x1 / tr)) } else { x1.clone() };
    if n > 0 && tr.norm() > 1e-12 {
        right[0] = &rho / c(rho.norm(), 0.0);
        let s = hs_inner(&left[0], &right[0]);
        left[0] /= s.conj();
    }
    let projector = if n > 0 { vec_rm(&right[0]) * vec_rm(&left[0]).adjoint() } else { CMat::zeros(0, 0) };
    SpectralData {
        dim: d,
        eigenvalues,
        right,
        left,
        rho,
        projector,
        leading_degenerate,
        defective: e.defective,
        schur_q: e.schur_q,
        schur_t: e.schur_t,
        normality_defect: ch.normality_defect(),
        unitality_defect: ch.unitality_defect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChoiReport {
    pub min_eigenvalue: f64,
    pub is_cp: bool,
    /// `‖C − C†‖_F`; CP maps have a Hermitian Choi matrix.
    pub hermiticity_defect: f64,
}

/// `C = Σ_{αβ} |α⟩⟨β| ⊗ Γ[|α⟩⟨β|]`, no `1/D` prefactor.
pub fn choi_matrix(ch: &QuantumChannel) -> CMat {
    let d = ch.dim;
    let mut out = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(a, b)] = ONE;
            let g = ch.apply(&e);
            for i in 0..d {
                for j in 0..d {
                    out[(a * d + i, b * d + j)] = g[(i, j)];
                }
            }
        }
    }
    out
}

pub fn choi_cp_check(ch: &QuantumChannel) -> ChoiReport {
    let choi = choi_matrix(ch);
    let herm = (&choi - choi.adjoint()).norm();
    let (vals, _) = herm_eig(&choi);
    let min_eigenvalue = vals.first().copied().unwrap_or(0.0);
    ChoiReport { min_eigenvalue, is_cp: min_eigenvalue >= -CP_TOL && herm <= CP_TOL, hermiticity_defect: herm }
}

/// Coefficients `f^c_{ab} = ⟨X_c, X_a X_b⟩` of an orthonormal basis.
#[derive(Clone, Debug)]
pub struct StructureTensor {
    pub basis: Vec<CMat>,
    coeffs: Vec<C64>,
    /// Largest `‖X_a X_b − Σ_c f^c_{ab} X_c‖_F`.
    pub reconstruction_residual: f64,
}

impl StructureTensor {
    pub fn from_basis(basis: &[CMat]) -> Result<Self> {
        let n = basis.len();
        let d = basis.first().map(|b| b.nrows()).unwrap_or(0);
        if n != d * d {
            return Err(Error::Shape(format!("basis has {n} elements, expected {}", d * d)));
        }
        for a in 0..n {
            for b in 0..n {
                let g = hs_inner(&basis[a], &basis[b]);
                let want = if a == b { 1.0 } else { 0.0 };
                if (g - c(want, 0.0)).norm() > 1e-9 {
                    return Err(Error::Invalid(format!("basis not orthonormal at ({a},{b})")));
                }
            }
        }
        let mut coeffs = vec![ZERO; n * n * n];
        let mut residual: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let prod = &basis[a] * &basis[b];
                let mut recon = CMat::zeros(d, d);
                for cc in 0..n {
                    let f = hs_inner(&basis[cc], &prod);
                    coeffs[(cc * n + a) * n + b] = f;
                    recon += &basis[cc] * f;
                }
                residual = residual.max((recon - prod).norm());
            }
        }
        Ok(StructureTensor { basis: basis.to_vec(), coeffs, reconstruction_residual: residual })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `f^c_{ab}`
    pub fn f(&self, c_: usize, a: usize, b: usize) -> C64 {
        let n = self.basis.len();
        self.coeffs[(c_ * n + a) * n + b]
    }
}

/// Structure constants of the eigenmatrices of a normal unital channel.
pub fn structure_constants(sd: &SpectralData) -> Result<StructureTensor> {
    if !sd.is_normal_unital() {
        return Err(Error::NotNormal(sd.normality_defect.max(sd.unitality_defect)));
    }
    StructureTensor::from_basis(&sd.right)
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `α` attaining the smallest constraint value.
    pub worst_alpha: usize,
    pub margin: f64,
    /// Constraint values for `α = 1..=2D`.
    pub constraints: Vec<f64>,
    /// All `α` whose constraint equals the minimum (within 1e-12).
    pub active_alphas: Vec<usize>,
    pub choi: ChoiReport,
    pub agrees_with_choi: bool,
}

/// Clock matrix `U_g = diag(e^{2πijg/D})`.
pub fn clock_matrix(g: usize, d: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| if i == j { phase(2.0 * PI * (i * g) as f64 / d as f64) } else { ZERO })
}

/// Channel `Γ[X] = Σ_g λ_g U_g Tr(U_g† X) / D` with `λ_g = |λ_g| e^{2πiκ_g/D}`.
pub fn clock_channel(moduli: &[f64], kappas: &[i64], d: usize) -> Result<QuantumChannel> {
    if moduli.len() != d || kappas.len() != d {
        return Err(Error::Invalid(format!(
            "expected {d} moduli and phase indices, got {} and {}",
            moduli.len(),
            kappas.len()
        )));
    }
    let mut m = CMat::zeros(d * d, d * d);
    for g in 0..d {
        let lam = moduli[g] * phase(2.0 * PI * kappas[g] as f64 / d as f64);
        let u = vec_rm(&clock_matrix(g, d));
        m += (&u * u.adjoint()) * (lam / d as f64);
    }
    QuantumChannel::from_matrix(d, m)
}

/// Phase-spectrum constraints `Σ_g |λ_g| cos(2π(κ_g − gα)/D) ≥ 0`, α = 1..2D,
/// cross-checked against the Choi matrix of the corresponding clock channel.
///
/// The spectrum must be closed under conjugation (`λ_{−g} = conj λ_g`),
/// otherwise no Hermiticity-preserving map has it.
pub fn spectrum_feasibility(moduli: &[f64], kappas: &[i64], d: usize) -> Result<FeasibilityReport> {
    if d == 0 {
        return Err(Error::Invalid("D must be positive".into()));
    }
    if moduli.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::Invalid("moduli must be finite and nonnegative".into()));
    }
    let ch = clock_channel(moduli, kappas, d)?;
    let di = d as i64;
    for g in 0..d {
        let h = (d - g) % d;
        let closed = (moduli[g] - moduli[h]).abs() <= 1e-12 * (1.0 + moduli[g])
            && (moduli[g] == 0.0 || (kappas[g] + kappas[h]).rem_euclid(di) == 0);
        if !closed {
            return Err(Error::Invalid(format!(
                "spectrum not closed under conjugation at g={g} (pair g={h})"
            )));
        }
    }
    let constraints: Vec<f64> = (1..=2 * d)
        .map(|alpha| {
            (0..d)
                .map(|g| {
                    let arg = 2.0 * PI * (kappas[g] - (g * alpha) as i64) as f64 / d as f64;
                    moduli[g] * arg.cos()
                })
                .sum()
        })
        .collect();
    let (mut worst, mut margin) = (1, f64::INFINITY);
    for (i, &v) in constraints.iter().enumerate() {
        if v < margin {
            margin = v;
            worst = i + 1;
        }
    }
    let active_alphas = constraints
        .iter()
        .enumerate()
        .filter(|(_, &v)| (v - margin).abs() <= 1e-12)
        .map(|(i, _)| i + 1)
        .collect();
    let feasible = margin >= -1e-12;
    let choi = choi_cp_check(&ch);
    Ok(FeasibilityReport {
        feasible,
        worst_alpha: worst,
        margin,
        constraints,
        active_alphas,
        agrees_with_choi: feasible == choi.is_cp,
        choi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{pauli_tensor, MpsTensor};

    fn assert_spectrum(got: &[C64], want: &[C64]) {
        let mut used = vec![false; want.len()];
        for g in got {
            let hit = want.iter().enumerate().position(|(i, w)| !used[i] && (g - w).norm() < 1e-9);
            let i = hit.unwrap_or_else(|| panic!("unexpected eigenvalue {g}"));
            used[i] = true;
        }
    }

    #[test]
    fn scalar_channel() {
        let mps = MpsTensor::new(vec![CMat::from_element(1, 1, ONE)]).unwrap();
        let ch = transfer_matrix(&mps);
        assert_eq!(ch.matrix, CMat::from_element(1, 1, ONE));
    }

    #[test]
    fn pauli_channel_spectrum_and_modes() {
        let ch = transfer_matrix(&pauli_tensor([0.7, 0.1, 0.1, 0.1]));
        let sd = channel_spectrum(&ch);
        assert_spectrum(&sd.eigenvalues, &[ONE, c(0.6, 0.0), c(0.6, 0.0), c(0.6, 0.0)]);
        assert!(!sd.leading_degenerate);
        assert!((&sd.rho - identity(2) * c(0.5, 0.0)).norm() < 1e-12);
        assert!(sd.is_normal_unital());
        let p = &sd.projector;
        assert!((p * p - p).norm() < 1e-10);
    }

    #[test]
    fn aklt_family_spectrum() {
        for lam in [0.5, 2.0 / 3.0, 0.9] {
            let sd = channel_spectrum(&transfer_matrix(&crate::mps::aklt_tensor(lam)));
            assert_spectrum(&sd.eigenvalues, &[ONE, c(2.0 * lam - 1.0, 0.0), c(-lam, 0.0), c(-lam, 0.0)]);
        }
    }

    #[test]
    fn ghz_is_flagged() {
        let mut a0 = CMat::zeros(2, 2);
        a0[(0, 0)] = ONE;
        let mut a1 = CMat::zeros(2, 2);
        a1[(1, 1)] = ONE;
        let sd = channel_spectrum(&transfer_matrix(&MpsTensor::new(vec![a0, a1]).unwrap()));
        assert!(sd.leading_degenerate);
    }

    #[test]
    fn left_and_right_are_biorthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mps = crate::mps::random_mps(&mut rng, 3, 3);
        let ch = transfer_matrix(&mps);
        let sd = channel_spectrum(&ch);
        for a in 0..9 {
            for b in 0..9 {
                let want = if a == b { ONE } else { ZERO };
                assert!((hs_inner(&sd.left[a], &sd.right[b]) - want).norm() < 1e-9);
            }
            let r = ch.apply(&sd.right[a]) - &sd.right[a] * sd.eigenvalues[a];
            assert!(r.norm() < 1e-9);
            let l = ch.apply_adjoint(&sd.left[a]) - &sd.left[a] * sd.eigenvalues[a].conj();
            assert!(l.norm() < 1e-8);
        }
    }

    #[test]
    fn kraus_and_matrix_actions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = transfer_matrix(&crate::mps::random_mps(&mut rng, 2, 3));
        for _ in 0..5 {
            let x = random_cmat(&mut rng, 3, 3);
            assert!((ch.apply(&x) - ch.apply_kraus(&x).unwrap()).norm() < 1e-12);
        }
        assert!(ch.hermiticity_defect(20, 4) < 1e-12);
    }

    #[test]
    fn choi_examples() {
        let id = QuantumChannel::from_matrix(2, identity(4)).unwrap();
        let r = choi_cp_check(&id);
        assert!(r.is_cp);
        assert!(r.min_eigenvalue.abs() < 1e-12);

        // dephasing with λ = 1.2
        let lam = 1.2;
        let [s0, _, _, sz] = paulis();
        let m = (vec_rm(&s0) * vec_rm(&s0).adjoint() + vec_rm(&sz) * vec_rm(&sz).adjoint() * c(lam, 0.0)) * c(0.5, 0.0);
        let r = choi_cp_check(&QuantumChannel::from_matrix(2, m).unwrap());
        assert!(!r.is_cp);
        assert!((r.min_eigenvalue - (1.0 - lam) / 2.0).abs() < 1e-12);

        // transpose map
        let mut t = CMat::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                t[(b * 2 + a, a * 2 + b)] = ONE;
            }
        }
        let r = choi_cp_check(&QuantumChannel::from_matrix(2, t).unwrap());
        assert!(!r.is_cp);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_structure_constants() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let basis: Vec<CMat> = paulis().iter().map(|p| p * c(s, 0.0)).collect();
        let st = StructureTensor::from_basis(&basis).unwrap();
        assert!((st.f(3, 1, 2) - c(0.0, s)).norm() < 1e-14);
        assert!((st.f(1, 1, 0) - c(s, 0.0)).norm() < 1e-14);
        assert!((st.f(0, 1, 1) - c(s, 0.0)).norm() < 1e-14);
        assert!(st.reconstruction_residual < 1e-12);
    }

    #[test]
    fn structure_constants_need_normal_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mps, _) = crate::mps::canonicalize(&crate::mps::random_mps(&mut rng, 2, 2)).unwrap();
        let sd = channel_spectrum(&transfer_matrix(&mps));
        assert!(matches!(structure_constants(&sd), Err(Error::NotNormal(_))));
        let sd = channel_spectrum(&transfer_matrix(&pauli_tensor([0.7, 0.15, 0.1, 0.05])));
        let st = structure_constants(&sd).unwrap();
        assert!(st.reconstruction_residual < 1e-10);
    }

    #[test]
    fn feasibility_examples() {
        for l1 in [0.0, 0.5, 1.0, 1.3] {
            for k1 in [0, 1] {
                let r = spectrum_feasibility(&[1.0, l1], &[0, k1], 2).unwrap();
                assert_eq!(r.feasible, l1 <= 1.0 + 1e-12, "l1={l1}");
                assert!(r.agrees_with_choi);
            }
        }
        let r = spectrum_feasibility(&[1.0, 0.0, 0.0], &[0, 0, 0], 3).unwrap();
        assert!(r.feasible && r.agrees_with_choi);
        assert!(spectrum_feasibility(&[1.0, 0.5], &[0], 2).is_err());
        assert!(spectrum_feasibility(&[1.0, 0.5, 0.2], &[0, 1, 1], 3).is_err());
    }

    #[test]
    fn alpha_and_alpha_plus_d_coincide() {
        let r = spectrum_feasibility(&[1.0, 0.4, 0.7, 0.4], &[0, 1, 2, 3], 4).unwrap();
        for a in 0..4 {
            assert!((r.constraints[a] - r.constraints[a + 4]).abs() < 1e-12);
        }
    }
}
