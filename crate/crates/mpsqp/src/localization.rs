//! Disordered one-parameter MPS families and the localization metric
//! `Ξ = Σ_n n ‖Γⁿ − Γ^∞‖₁ / Σ_n ‖Γⁿ − Γ^∞‖₁`.

use crate::channel::{channel_spectrum, transfer_matrix, Provenance, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::*;
use crate::mps::{aklt_tensor, MpsTensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

pub const DEFAULT_TRUNCATION: usize = 100;
/// Terms of `Ξ` below this Schatten norm count as vanishing.
pub const ZERO_TERM: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Aklt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Exact second moments of the Gaussian disorder.
    AnalyticGaussian,
    /// Sample mean of `Σ_i B⊗B̄` over `samples` draws.
    MonteCarlo { samples: usize, seed: u64 },
}

/// How the disorder amplitudes enter the `d` site matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sharing {
    /// One `(w₁, w₂)` per site, shared by all physical indices.
    Shared,
    /// Independent `(w₁, w₂)` for every physical index.
    PerTensor,
}

/// How `Ξ` is averaged over disorder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Average the channel, then evaluate `Ξ`.
    Annealed,
    /// Evaluate `Ξ` per realization, then average.
    Quenched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderFamily {
    pub family: Family,
    /// Variance of each disorder amplitude.
    pub w: f64,
    pub averaging: Averaging,
    pub sharing: Sharing,
}

impl DisorderFamily {
    pub fn aklt(w: f64) -> Self {
        DisorderFamily { family: Family::Aklt, w, averaging: Averaging::AnalyticGaussian, sharing: Sharing::Shared }
    }

    pub fn with_averaging(mut self, averaging: Averaging) -> Self {
        self.averaging = averaging;
        self
    }

    pub fn with_sharing(mut self, sharing: Sharing) -> Self {
        self.sharing = sharing;
        self
    }

    fn validate(&self, lambda: f64) -> Result<()> {
        if !(self.w >= 0.0 && self.w.is_finite()) {
            return Err(Error::OutOfDomain { value: self.w, domain: "W >= 0".into() });
        }
        match self.family {
            Family::Aklt if !(0.5..=1.0).contains(&lambda) => {
                Err(Error::OutOfDomain { value: lambda, domain: "[1/2, 1]".into() })
            }
            _ => Ok(()),
        }
    }

    pub fn clean_tensor(&self, lambda: f64) -> Result<MpsTensor> {
        self.validate(lambda)?;
        Ok(match self.family {
            Family::Aklt => aklt_tensor(lambda),
        })
    }

    /// Disorder directions `G_r^{(i)}` with `B^{(i)} = A^{(i)} + Σ_r w_r G_r^{(i)}`.
    pub fn directions(&self) -> Vec<Vec<CMat>> {
        match self.family {
            Family::Aklt => {
                let s = c(FRAC_1_SQRT_2, 0.0);
                let z = &paulis()[3] * c(0.5, 0.0);
                let half = identity(2) * c(0.5, 0.0);
                vec![
                    vec![sigma_plus() * s, sigma_minus() * s, z],
                    vec![CMat::zeros(2, 2), CMat::zeros(2, 2), half],
                ]
            }
        }
    }

    /// One disordered tensor.
    pub fn sample_tensor<R: rand::Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> Result<MpsTensor> {
        let clean = self.clean_tensor(lambda)?;
        let dirs = self.directions();
        let normal = Normal::new(0.0, self.w.sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
        let d = clean.d;
        let weights: Vec<Vec<f64>> = match self.sharing {
            Sharing::Shared => {
                let w: Vec<f64> = dirs.iter().map(|_| normal.sample(rng)).collect();
                vec![w; d]
            }
            Sharing::PerTensor => (0..d).map(|_| dirs.iter().map(|_| normal.sample(rng)).collect()).collect(),
        };
        let mats = (0..d)
            .map(|i| {
                dirs.iter()
                    .zip(&weights[i])
                    .fold(clean.mats[i].clone(), |acc, (g, &w)| acc + &g[i] * c(w, 0.0))
            })
            .collect();
        MpsTensor::new(mats)
    }
}

fn renormalize(m: CMat, dim: usize) -> Result<QuantumChannel> {
    let ch = QuantumChannel::from_matrix(dim, m)?;
    let radius = channel_spectrum(&ch).eigenvalues[0].norm();
    if radius <= 0.0 {
        return Err(Error::NonInjective("vanishing spectral radius".into()));
    }
    let mut out = QuantumChannel::from_matrix(dim, ch.matrix / c(radius, 0.0))?;
    out.provenance = Provenance::DisorderAveraged;
    Ok(out)
}

fn superop(mats: &[CMat]) -> CMat {
    let d = mats[0].nrows();
    mats.iter().fold(CMat::zeros(d * d, d * d), |acc, a| acc + kron(a, &a.map(|z| z.conj())))
}

/// Entrywise mean and standard error of a Monte Carlo channel estimate.
#[derive(Clone, Debug)]
pub struct SampledChannel {
    pub mean: CMat,
    pub std_error: CMat,
    pub samples: usize,
}

/// `E_w Σ_i B^{(i)} ⊗ B̄^{(i)}` by sampling, before renormalization.
pub fn sampled_moment(family: &DisorderFamily, lambda: f64, samples: usize, seed: u64) -> Result<SampledChannel> {
    if samples < 2 {
        return Err(Error::Statistics("at least two samples required".into()));
    }
    family.validate(lambda)?;
    let chunk = 256;
    let parts: Vec<Result<(CMat, CMat, usize)>> = (0..samples.div_ceil(chunk))
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = chunk.min(samples - b * chunk);
            let mut sum: Option<CMat> = None;
            let mut sq: Option<CMat> = None;
            for _ in 0..count {
                let m = superop(&family.sample_tensor(lambda, &mut rng)?.mats);
                let m2 = m.map(|z| c(z.re * z.re, z.im * z.im));
                sum = Some(sum.map_or(m.clone(), |s| s + &m));
                sq = Some(sq.map_or(m2.clone(), |s| s + m2));
            }
            Ok((sum.unwrap(), sq.unwrap(), count))
        })
        .collect();
    let mut sum: Option<CMat> = None;
    let mut sq: Option<CMat> = None;
    for p in parts {
        let (s, q, _) = p?;
        sum = Some(sum.map_or(s.clone(), |a| a + s));
        sq = Some(sq.map_or(q.clone(), |a| a + q));
    }
    let n = samples as f64;
    let mean = sum.unwrap() / c(n, 0.0);
    let sq = sq.unwrap() / c(n, 0.0);
    let std_error = CMat::from_fn(mean.nrows(), mean.ncols(), |i, j| {
        let m = mean[(i, j)];
        let v = sq[(i, j)];
        let var_re = (v.re - m.re * m.re).max(0.0) * n / (n - 1.0);
        let var_im = (v.im - m.im * m.im).max(0.0) * n / (n - 1.0);
        c((var_re / n).sqrt(), (var_im / n).sqrt())
    });
    Ok(SampledChannel { mean, std_error, samples })
}

/// Exact `E_w Σ_i B^{(i)} ⊗ B̄^{(i)} = Σ_i A⊗Ā + W Σ_{r,i} G_r⊗Ḡ_r`, before
/// renormalization. Both sharing modes give the same second moment.
pub fn analytic_moment(family: &DisorderFamily, lambda: f64) -> Result<CMat> {
    let clean = family.clean_tensor(lambda)?;
    let noise = family.directions().iter().fold(CMat::zeros(4, 4), |acc, g| acc + superop(g));
    Ok(superop(&clean.mats) + noise * c(family.w, 0.0))
}

/// Disorder-averaged channel renormalized to spectral radius 1.
pub fn family_channel(family: &DisorderFamily, lambda: f64) -> Result<QuantumChannel> {
    let bond = family.clean_tensor(lambda)?.bond;
    if family.w == 0.0 {
        let mut ch = transfer_matrix(&family.clean_tensor(lambda)?);
        ch.provenance = Provenance::DisorderAveraged;
        return Ok(ch);
    }
    let m = match &family.averaging {
        Averaging::AnalyticGaussian => analytic_moment(family, lambda)?,
        Averaging::MonteCarlo { samples, seed } => sampled_moment(family, lambda, *samples, *seed)?.mean,
    };
    renormalize(m, bond)
}

/// `Ξ` with sums over `n = 1..N` and the Schatten-1 norm of the superoperator
/// matrix. Returns 0 when every term vanishes (below [`ZERO_TERM`]).
pub fn xi_metric(ch: &QuantumChannel, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("N must be at least 1".into()));
    }
    let sd = channel_spectrum(ch);
    if sd.leading_degenerate {
        return Err(Error::NonInjective("degenerate leading eigenvalue".into()));
    }
    let scale = sd.eigenvalues[0];
    let g = &ch.matrix / scale;
    let conn = &g - &sd.projector;
    let mut p = identity(g.nrows());
    let (mut num, mut den) = (0.0, 0.0);
    for k in 1..=n {
        p = &p * &conn;
        let s = schatten1(&p);
        if s <= ZERO_TERM {
            continue;
        }
        num += k as f64 * s;
        den += s;
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// `λ(t) = √t / (1 + √t)` for `t ≥ 1`.
pub fn lambda_schedule(t: f64) -> Result<f64> {
    if !(t >= 1.0) || !t.is_finite() {
        return Err(Error::OutOfDomain { value: t, domain: "t >= 1".into() });
    }
    let s = t.sqrt();
    Ok(s / (1.0 + s))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct XiCurve {
    pub w: f64,
    pub n: usize,
    pub ensemble: Ensemble,
    pub t: Vec<f64>,
    pub lambda: Vec<f64>,
    pub xi: Vec<f64>,
    /// Seeds used for Monte Carlo or quenched cells.
    pub seeds: Vec<u64>,
}

/// `points` values of `t` spaced logarithmically over `[tmin, tmax]`.
pub fn log_grid(tmin: f64, tmax: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(tmin >= 1.0) || tmax < tmin {
        return Err(Error::Invalid("grid needs points >= 1 and 1 <= tmin <= tmax".into()));
    }
    if points == 1 {
        return Ok(vec![tmin]);
    }
    let (a, b) = (tmin.ln(), tmax.ln());
    Ok((0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub t: Vec<f64>,
    pub n: usize,
    pub w: Vec<f64>,
    pub seeds: Vec<u64>,
    pub ensemble: Ensemble,
    /// Realizations per seed in the quenched ensemble.
    pub realizations: usize,
}

/// One curve per `W`. Cells are evaluated in parallel and merged in grid order.
pub fn sweep(base: &DisorderFamily, cfg: &SweepConfig) -> Result<Vec<XiCurve>> {
    if cfg.t.is_empty() || cfg.w.is_empty() {
        return Err(Error::Invalid("empty sweep grid".into()));
    }
    let lambdas: Vec<f64> = cfg.t.iter().map(|&t| lambda_schedule(t)).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..cfg.w.len()).flat_map(|wi| (0..cfg.t.len()).map(move |ti| (wi, ti))).collect();
    let values: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(wi, ti)| {
            let fam = DisorderFamily { w: cfg.w[wi], ..base.clone() };
            cell_xi(&fam, lambdas[ti], cfg)
        })
        .collect();
    let mut curves: Vec<XiCurve> = cfg
        .w
        .iter()
        .map(|&w| XiCurve {
            w,
            n: cfg.n,
            ensemble: cfg.ensemble,
            t: cfg.t.clone(),
            lambda: lambdas.clone(),
            xi: vec![],
            seeds: cfg.seeds.clone(),
        })
        .collect();
    for ((wi, _), v) in cells.iter().zip(values) {
        curves[*wi].xi.push(v?);
    }
    Ok(curves)
}

fn cell_xi(fam: &DisorderFamily, lambda: f64, cfg: &SweepConfig) -> Result<f64> {
    match cfg.ensemble {
        Ensemble::Annealed => match fam.averaging {
            Averaging::AnalyticGaussian => xi_metric(&family_channel(fam, lambda)?, cfg.n),
            Averaging::MonteCarlo { samples, .. } => {
                if cfg.seeds.is_empty() {
                    return Err(Error::Invalid("Monte Carlo averaging needs seeds".into()));
                }
                let mut acc = 0.0;
                for &seed in &cfg.seeds {
                    let f = fam.clone().with_averaging(Averaging::MonteCarlo { samples, seed });
                    acc += xi_metric(&family_channel(&f, lambda)?, cfg.n)?;
                }
                Ok(acc / cfg.seeds.len() as f64)
            }
        },
        Ensemble::Quenched => {
            if cfg.seeds.is_empty() || cfg.realizations == 0 {
                return Err(Error::Invalid("quenched averaging needs seeds and realizations".into()));
            }
            let mut acc = 0.0;
            let mut count = 0;
            for &seed in &cfg.seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..cfg.realizations {
                    let t = fam.sample_tensor(lambda, &mut rng)?;
                    acc += xi_metric(&transfer_matrix(&t), cfg.n)?;
                    count += 1;
                }
            }
            Ok(acc / count as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_spectrum(ch: &QuantumChannel) -> Vec<C64> {
        let mut v = channel_spectrum(ch).eigenvalues;
        v.sort_by(|a, b| b.re.total_cmp(&a.re));
        v
    }

    #[test]
    fn clean_family_spectrum() {
        for lam in [0.5, 2.0 / 3.0, 0.9] {
            let ch = family_channel(&DisorderFamily::aklt(0.0), lam).unwrap();
            let want = [1.0, 2.0 * lam - 1.0, -lam, -lam];
            let mut want = want.to_vec();
            want.sort_by(|a, b| b.total_cmp(a));
            for (z, w) in sorted_spectrum(&ch).iter().zip(want) {
                assert!((z - c(w, 0.0)).norm() < 1e-12);
            }
            assert_eq!(ch.matrix, transfer_matrix(&aklt_tensor(lam)).matrix);
        }
    }

    #[test]
    fn disordered_spectrum_matches_closed_form() {
        for w in [0.5, 1.0, 3.0] {
            for lam in [0.5, 0.7, 0.95] {
                let ch = family_channel(&DisorderFamily::aklt(w), lam).unwrap();
                let mut want = vec![1.0, (2.0 * lam - 1.0) / (1.0 + w), -lam / (1.0 + w), -lam / (1.0 + w)];
                want.sort_by(|a, b| b.total_cmp(a));
                for (z, w) in sorted_spectrum(&ch).iter().zip(want) {
                    assert!((z - c(w, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sharing_modes_have_equal_second_moment() {
        let a = analytic_moment(&DisorderFamily::aklt(1.0), 0.7).unwrap();
        let b = analytic_moment(&DisorderFamily::aklt(1.0).with_sharing(Sharing::PerTensor), 0.7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_within_three_standard_errors() {
        for sharing in [Sharing::Shared, Sharing::PerTensor] {
            let fam = DisorderFamily::aklt(1.0).with_sharing(sharing);
            let exact = analytic_moment(&fam, 2.0 / 3.0).unwrap();
            let s = sampled_moment(&fam, 2.0 / 3.0, 10_000, 17).unwrap();
            for i in 0..16 {
                let (m, e, se) = (s.mean[i], exact[i], s.std_error[i]);
                assert!((m.re - e.re).abs() <= 3.0 * se.re + 1e-12, "{sharing:?} {i}");
                assert!((m.im - e.im).abs() <= 3.0 * se.im + 1e-12);
            }
        }
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let fam = DisorderFamily::aklt(1.0);
        let a = sampled_moment(&fam, 0.6, 1000, 3).unwrap();
        let b = sampled_moment(&fam, 0.6, 1000, 3).unwrap();
        assert_eq!(a.mean, b.mean);
    }

    #[test]
    fn xi_of_mixing_channel_is_zero() {
        let rho = identity(2) * c(0.5, 0.0);
        let m = vec_rm(&rho) * vec_rm(&identity(2)).adjoint();
        assert_eq!(xi_metric(&QuantumChannel::from_matrix(2, m).unwrap(), 50).unwrap(), 0.0);
    }

    #[test]
    fn xi_of_single_mode() {
        for mu in [0.1, 0.5, 0.9] {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let x0 = identity(2) * c(s, 0.0);
            let x1 = &paulis()[3] * c(s, 0.0);
            let m = vec_rm(&x0) * vec_rm(&x0).adjoint() + vec_rm(&x1) * vec_rm(&x1).adjoint() * c(mu, 0.0);
            let ch = QuantumChannel::from_matrix(2, m).unwrap();
            let xi = xi_metric(&ch, 2000).unwrap();
            assert!((xi - 1.0 / (1.0 - mu)).abs() < 1e-9);
        }
    }

    #[test]
    fn xi_matches_matrix_power_oracle() {
        let ch = family_channel(&DisorderFamily::aklt(0.0), 2.0 / 3.0).unwrap();
        // |1/3| on σz, |-2/3| on σ±: singular values of Γⁿ−Γ^∞ are (1/3)ⁿ and (2/3)ⁿ twice
        let (mut num, mut den) = (0.0, 0.0);
        for n in 1..=100 {
            let s = (1.0f64 / 3.0).powi(n) + 2.0 * (2.0f64 / 3.0).powi(n);
            num += n as f64 * s;
            den += s;
        }
        assert!((xi_metric(&ch, 100).unwrap() - num / den).abs() < 1e-10);
    }

    #[test]
    fn schedule_examples() {
        assert!((lambda_schedule(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((lambda_schedule(4.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(lambda_schedule(1e12).unwrap() > 0.999);
        assert!(lambda_schedule(0.5).is_err());
    }

    #[test]
    fn out_of_domain_lambda() {
        assert!(matches!(family_channel(&DisorderFamily::aklt(0.0), 0.3), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn xi_is_unitarily_invariant() {
        let ch = family_channel(&DisorderFamily::aklt(1.0), 0.8).unwrap();
        let u = herm_eig(&hermitian_part(&CMat::from_row_slice(2, 2, &[ONE, c(0.3, 0.4), c(0.3, -0.4), c(-1.0, 0.0)]))).1;
        let uu = kron(&u, &u.map(|z| z.conj()));
        let rot = QuantumChannel::from_matrix(2, &uu * &ch.matrix * uu.adjoint()).unwrap();
        assert!((xi_metric(&ch, 100).unwrap() - xi_metric(&rot, 100).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn sweep_orders_curves_by_w() {
        let cfg = SweepConfig {
            t: log_grid(1.0, 100.0, 5).unwrap(),
            n: 100,
            w: vec![0.0, 1.0],
            seeds: vec![],
            ensemble: Ensemble::Annealed,
            realizations: 0,
        };
        let curves = sweep(&DisorderFamily::aklt(0.0), &cfg).unwrap();
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[1].w, 1.0);
        for (a, b) in curves[0].xi.iter().zip(&curves[1].xi).skip(2) {
            assert!(a >= b);
        }
    }
}
