//! Ising MPS, virtual `Z`-particle coefficients and the continuous-time
//! particle dynamics they generate.

use crate::channel::{transfer_matrix, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::*;
use crate::mps::MpsTensor;
use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Entries of `τ` below this magnitude count as zero.
pub const RATE_TOL: f64 = 1e-14;
pub const MIN_TRAJECTORIES: usize = 10_000;
pub const BATCHES: usize = 20;
/// Largest acceptable standard error of the fitted recursion coefficient.
pub const MAX_LAMBDA_SE: f64 = 0.05;
/// Grid points with fewer expected counts are left out of the z-score envelope.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Clone, Debug)]
pub struct IsingMps {
    pub beta: f64,
    /// Row-stochastic weight matrix.
    pub a: Matrix2<f64>,
}

pub fn ising_mps(beta: f64) -> Result<IsingMps> {
    if !beta.is_finite() {
        return Err(Error::NonFinite("beta".into()));
    }
    let (p, m) = ((beta).exp(), (-beta).exp());
    let a = Matrix2::new(p, m, m, p) / (p + m);
    Ok(IsingMps { beta, a })
}

impl IsingMps {
    /// `A^{(i)}_{ab} = δ_{ia} A_{ab}`
    pub fn tensor(&self) -> MpsTensor {
        let mats = (0..2)
            .map(|i| CMat::from_fn(2, 2, |r, col| if r == i { c(self.a[(r, col)], 0.0) } else { ZERO }))
            .collect();
        MpsTensor::new(mats).expect("2x2 selector tensor")
    }

    /// Eigenvalues of `A`, descending: `{1, tanh β}`.
    pub fn weight_eigenvalues(&self) -> [f64; 2] {
        let e = self.a.symmetric_eigenvalues();
        let (x, y) = (e[0], e[1]);
        if x >= y {
            [x, y]
        } else {
            [y, x]
        }
    }

    pub fn channel(&self) -> QuantumChannel {
        transfer_matrix(&self.tensor())
    }

    /// `Π_k A_{s_k, s_{k+1}}` on a ring of `n` sites; spin `s` is bit `k` of `config`.
    pub fn weight(&self, config: usize, n: usize) -> f64 {
        (0..n).map(|k| self.a[((config >> k) & 1, (config >> ((k + 1) % n)) & 1)]).product()
    }
}

/// `τ[a_{j−1}, a_j, a_{j+1}, b_{j−1}, b_{j+1}]`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TauTable {
    pub beta: f64,
    pub tau: [[[[[f64; 2]; 2]; 2]; 2]; 2],
}

fn z_pow(a: usize) -> DMatrix<f64> {
    if a % 2 == 1 {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]))
    } else {
        DMatrix::identity(2, 2)
    }
}

pub fn tau_table(beta: f64) -> Result<TauTable> {
    let ising = ising_mps(beta)?;
    let a = DMatrix::from_iterator(2, 2, ising.a.iter().copied());
    let a2 = &a * &a;
    if a2.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return Err(Error::Singular { eigenvalue: "A^2 entry".into(), distance: 0.0 });
    }
    let cm = a2.map(|x| 1.0 / x);
    let at = a.transpose();
    let mut tau = [[[[[0.0; 2]; 2]; 2]; 2]; 2];
    for am in 0..2 {
        for aj in 0..2 {
            for ap in 0..2 {
                for bm in 0..2 {
                    for bp in 0..2 {
                        let m = &at * z_pow(aj) * &at * z_pow(am + bm) * &cm * z_pow(ap + bp);
                        tau[am][aj][ap][bm][bp] = 0.25 * m.trace();
                    }
                }
            }
        }
    }
    Ok(TauTable { beta, tau })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Hop,
    Annihilate,
    Kill,
}

/// One local move: the center empties and the neighbours become `(bl, br)`.
#[derive(Clone, Copy, Debug)]
pub struct Move {
    pub bl: usize,
    pub br: usize,
    pub rate: f64,
}

/// Jump rates out of each local pattern `(a_{j−1}, a_j, a_{j+1})` and the
/// killing rate `1 − Σ_b τ`.
#[derive(Clone, Debug)]
pub struct RateTable {
    pub moves: [Vec<Move>; 8],
    pub kill: [f64; 8],
    pub total: [f64; 8],
}

fn pattern(l: usize, j: usize, r: usize) -> usize {
    (l << 2) | (j << 1) | r
}

impl TauTable {
    pub fn get(&self, a: [usize; 3], b: [usize; 2]) -> f64 {
        self.tau[a[0]][a[1]][a[2]][b[0]][b[1]]
    }

    /// Coefficient of a single hop from an isolated particle.
    pub fn hop(&self) -> f64 {
        self.get([0, 1, 0], [1, 0])
    }

    /// `max |τ^{a,1,a'}_{a+1,a'} − τ^{a,1,a'}_{a,a'+1}|`
    pub fn hopping_symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for ap in 0..2 {
                let l = self.get([a, 1, ap], [(a + 1) % 2, ap]);
                let r = self.get([a, 1, ap], [a, (ap + 1) % 2]);
                worst = worst.max((l - r).abs());
            }
        }
        worst
    }

    /// Largest `|τ|` on entries that raise the particle number at an empty center.
    pub fn creation_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for am in 0..2 {
            for ap in 0..2 {
                for bm in 0..2 {
                    for bp in 0..2 {
                        if bm + bp > am + ap {
                            worst = worst.max(self.get([am, 0, ap], [bm, bp]).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn rates(&self) -> Result<RateTable> {
        let mut moves: [Vec<Move>; 8] = Default::default();
        let mut kill = [0.0; 8];
        let mut total = [0.0; 8];
        for am in 0..2 {
            for aj in 0..2 {
                for ap in 0..2 {
                    let p = pattern(am, aj, ap);
                    let mut mass = 0.0;
                    for bm in 0..2 {
                        for bp in 0..2 {
                            let t = self.get([am, aj, ap], [bm, bp]);
                            if t < -RATE_TOL {
                                return Err(Error::NegativeRate {
                                    entry: format!("tau[{am}{aj}{ap} -> {bm}{bp}]"),
                                    value: t,
                                });
                            }
                            mass += t;
                            let same = aj == 0 && bm == am && bp == ap;
                            if !same && t > RATE_TOL {
                                moves[p].push(Move { bl: bm, br: bp, rate: t });
                            }
                        }
                    }
                    let k = 1.0 - mass;
                    if k < -1e-12 {
                        return Err(Error::NegativeRate { entry: format!("killing[{am}{aj}{ap}]"), value: k });
                    }
                    kill[p] = k.max(0.0);
                    if kill[p] <= RATE_TOL {
                        kill[p] = 0.0;
                    }
                    total[p] = moves[p].iter().map(|m| m.rate).sum::<f64>() + kill[p];
                }
            }
        }
        Ok(RateTable { moves, kill, total })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupationState {
    pub occ: Vec<u8>,
}

impl OccupationState {
    pub fn new(occ: Vec<u8>) -> Result<Self> {
        if occ.len() < 3 {
            return Err(Error::Invalid("ring needs at least 3 sites".into()));
        }
        if occ.iter().any(|&a| a > 1) {
            return Err(Error::Invalid("occupations must be 0 or 1".into()));
        }
        Ok(OccupationState { occ })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(vec![0; n])
    }

    pub fn single(n: usize, site: usize) -> Result<Self> {
        let mut s = Self::empty(n)?;
        if site >= n {
            return Err(Error::Invalid(format!("site {site} outside ring of {n}")));
        }
        s.occ[site] = 1;
        Ok(s)
    }

    pub fn n_sites(&self) -> usize {
        self.occ.len()
    }

    pub fn particles(&self) -> usize {
        self.occ.iter().map(|&a| a as usize).sum()
    }

    fn local(&self, j: usize) -> usize {
        let n = self.occ.len();
        pattern(self.occ[(j + n - 1) % n] as usize, self.occ[j] as usize, self.occ[(j + 1) % n] as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub center: usize,
    pub kind: EventKind,
    /// Site receiving the particle or hosting the annihilation.
    pub target: Option<usize>,
    pub particles: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub stream: u64,
    pub horizon: f64,
    pub events: Vec<Event>,
    /// State at each grid time; `None` once the trajectory is killed.
    pub snapshots: Vec<(f64, Option<OccupationState>)>,
    pub killed_at: Option<f64>,
    pub final_state: OccupationState,
}

fn validate_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::OutOfDomain { value: horizon, domain: "horizon >= 0".into() });
    }
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.iter().any(|&t| t < 0.0 || t > horizon) {
        return Err(Error::Invalid("grid times must be sorted and within [0, horizon]".into()));
    }
    Ok(())
}

/// Event-driven sampling of `ℒ = Σ_j (T_j − 𝟙)` from the rate table.
fn run(
    rates: &RateTable,
    init: &OccupationState,
    horizon: f64,
    grid: &[f64],
    rng: &mut ChaCha8Rng,
    mut on_event: impl FnMut(Event),
    mut on_snapshot: impl FnMut(usize, Option<&OccupationState>),
) -> Result<(OccupationState, Option<f64>)> {
    let n = init.n_sites();
    let mut state = init.clone();
    let mut t = 0.0;
    let mut next_grid = 0;
    let mut local: Vec<f64> = (0..n).map(|j| rates.total[state.local(j)]).collect();
    loop {
        let total: f64 = local.iter().sum();
        let dt = if total > 0.0 { -(1.0 - rng.random::<f64>()).ln() / total } else { f64::INFINITY };
        let t_next = t + dt;
        while next_grid < grid.len() && grid[next_grid] < t_next {
            on_snapshot(next_grid, Some(&state));
            next_grid += 1;
        }
        if t_next > horizon {
            return Ok((state, None));
        }
        t = t_next;
        let mut u = rng.random::<f64>() * total;
        let mut j = n - 1;
        for (i, &r) in local.iter().enumerate() {
            if u < r {
                j = i;
                break;
            }
            u -= r;
        }
        let p = state.local(j);
        let before = state.particles();
        let mut chosen = None;
        for m in &rates.moves[p] {
            if u < m.rate {
                chosen = Some(*m);
                break;
            }
            u -= m.rate;
        }
        let Some(m) = chosen else {
            on_event(Event { time: t, center: j, kind: EventKind::Kill, target: None, particles: before });
            for k in next_grid..grid.len() {
                on_snapshot(k, None);
            }
            return Ok((state, Some(t)));
        };
        let (l, r) = ((j + n - 1) % n, (j + 1) % n);
        let al = state.occ[l];
        state.occ[j] = 0;
        state.occ[l] = m.bl as u8;
        state.occ[r] = m.br as u8;
        let after = state.particles();
        if after > before {
            return Err(Error::Invalid(format!("particle creation at site {j}")));
        }
        let target = if m.bl as u8 != al { l } else { r };
        let kind = if state.occ[target] == 1 { EventKind::Hop } else { EventKind::Annihilate };
        on_event(Event { time: t, center: j, kind, target: Some(target), particles: after });
        for i in [l, j, r] {
            local[i] = rates.total[state.local(i)];
        }
        for i in [(l + n - 1) % n, (r + 1) % n] {
            local[i] = rates.total[state.local(i)];
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Trajectory with snapshots at `grid` (sorted times in `[0, horizon]`).
pub fn simulate_sampled(
    table: &TauTable,
    init: &OccupationState,
    horizon: f64,
    grid: &[f64],
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    validate_grid(grid, horizon)?;
    let rates = table.rates()?;
    let mut events = Vec::new();
    let mut snapshots: Vec<(f64, Option<OccupationState>)> = grid.iter().map(|&t| (t, None)).collect();
    let mut rng = rng_for(seed, stream);
    let (final_state, killed_at) =
        run(&rates, init, horizon, grid, &mut rng, |e| events.push(e), |k, s| snapshots[k].1 = s.cloned())?;
    Ok(Trajectory { seed, stream, horizon, events, snapshots, killed_at, final_state })
}

pub fn simulate(table: &TauTable, init: &OccupationState, horizon: f64, seed: u64) -> Result<Trajectory> {
    simulate_sampled(table, init, horizon, &[0.0, horizon], seed, 0)
}

/// Occupation counts of a single-particle ensemble on a time grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ensemble {
    pub beta: f64,
    pub n_sites: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
    /// `counts[batch][t][n]`: trajectories alive with the particle at displacement `n`.
    pub counts: Vec<Vec<Vec<u64>>>,
    pub batch_sizes: Vec<usize>,
    pub kills: usize,
    pub annihilations: usize,
}

/// `m` trajectories from one particle at site 0; trajectory `i` uses stream `i`
/// and belongs to batch `i mod BATCHES`.
pub fn simulate_ensemble(table: &TauTable, n_sites: usize, horizon: f64, grid: &[f64], m: usize, seed: u64) -> Result<Ensemble> {
    validate_grid(grid, horizon)?;
    let rates = table.rates()?;
    let init = OccupationState::single(n_sites, 0)?;
    let parts: Vec<Result<(Vec<Vec<u64>>, usize, usize, usize)>> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut counts = vec![vec![0u64; n_sites]; grid.len()];
            let (mut size, mut kills, mut ann) = (0, 0, 0);
            for i in (b..m).step_by(BATCHES) {
                let mut rng = rng_for(seed, i as u64);
                let (_, killed) = run(
                    &rates,
                    &init,
                    horizon,
                    grid,
                    &mut rng,
                    |e| {
                        if e.kind == EventKind::Annihilate {
                            ann += 1
                        }
                    },
                    |k, s| {
                        if let Some(s) = s {
                            for (n, &a) in s.occ.iter().enumerate() {
                                counts[k][n] += a as u64;
                            }
                        }
                    },
                )?;
                kills += killed.is_some() as usize;
                size += 1;
            }
            Ok((counts, size, kills, ann))
        })
        .collect();
    let mut ens = Ensemble {
        beta: table.beta,
        n_sites,
        trajectories: m,
        seed,
        grid: grid.to_vec(),
        counts: vec![],
        batch_sizes: vec![],
        kills: 0,
        annihilations: 0,
    };
    for p in parts {
        let (counts, size, kills, ann) = p?;
        ens.counts.push(counts);
        ens.batch_sizes.push(size);
        ens.kills += kills;
        ens.annihilations += ann;
    }
    Ok(ens)
}

impl Ensemble {
    /// `C_n(t)` from the batches in `sel`.
    fn estimate(&self, sel: &[usize]) -> Vec<Vec<f64>> {
        let total: usize = sel.iter().map(|&b| self.batch_sizes[b]).sum();
        (0..self.grid.len())
            .map(|k| {
                (0..self.n_sites)
                    .map(|n| sel.iter().map(|&b| self.counts[b][k][n]).sum::<u64>() as f64 / total as f64)
                    .collect()
            })
            .collect()
    }

    pub fn correlations(&self) -> Vec<Vec<f64>> {
        self.estimate(&(0..self.counts.len()).collect::<Vec<_>>())
    }
}

/// `C_n(t) = e^{−t} (1/N) Σ_q cos(qn) e^{2λ t cos q}` solves
/// `∂_t C_n = −C_n + λ(C_{n−1} + C_{n+1})` with `C_n(0) = δ_{n0}` on the ring.
pub fn recursion_solution(lambda: f64, n_sites: usize, t: f64) -> Vec<f64> {
    let nf = n_sites as f64;
    (0..n_sites)
        .map(|n| {
            (0..n_sites)
                .map(|q| {
                    let q = 2.0 * PI * q as f64 / nf;
                    (q * n as f64).cos() * (-t + 2.0 * lambda * t * q.cos()).exp()
                })
                .sum::<f64>()
                / nf
        })
        .collect()
}

fn fit_lambda(c: &[Vec<f64>], grid: &[f64]) -> f64 {
    let n = c[0].len();
    let mut int_c = vec![0.0; n];
    let mut int_nb = vec![0.0; n];
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for k in 1..grid.len() {
        let h = grid[k] - grid[k - 1];
        for i in 0..n {
            let nb = |row: &Vec<f64>| row[(i + n - 1) % n] + row[(i + 1) % n];
            int_c[i] += 0.5 * h * (c[k][i] + c[k - 1][i]);
            int_nb[i] += 0.5 * h * (nb(&c[k]) + nb(&c[k - 1]));
            let y = c[k][i] - c[0][i] + int_c[i];
            let x = int_nb[i];
            sxy += x * y;
            sxx += x * x;
        }
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub lambda_hat: f64,
    pub std_error: f64,
    /// Hop coefficient read from the τ table, for comparison.
    pub hop: f64,
    pub rms_z: f64,
    pub max_z: f64,
    pub envelope_points: usize,
    /// RMS of `Ċ_n − (−C_n + λ̂(C_{n−1}+C_{n+1}))` with central differences.
    pub derivative_residual: f64,
    /// `max |C_n − C_{−n}|`
    pub reflection_defect: f64,
    pub within_envelope: bool,
    pub correlations: Vec<Vec<f64>>,
}

/// Fits the recursion coefficient by the integrated form
/// `C_n(t) − C_n(0) + ∫C_n = λ ∫(C_{n−1} + C_{n+1})` and compares the ensemble
/// against the exact solution at the fitted value.
pub fn correlation_check(ens: &Ensemble, hop: f64) -> Result<CorrelationReport> {
    if ens.trajectories < MIN_TRAJECTORIES {
        return Err(Error::Statistics(format!("{} trajectories, need {MIN_TRAJECTORIES}", ens.trajectories)));
    }
    if ens.grid.len() < 3 || ens.grid[0] != 0.0 {
        return Err(Error::Invalid("grid must start at 0 and have at least 3 points".into()));
    }
    let c = ens.correlations();
    let lambda_hat = fit_lambda(&c, &ens.grid);
    let per_batch: Vec<f64> = (0..ens.counts.len()).map(|b| fit_lambda(&ens.estimate(&[b]), &ens.grid)).collect();
    let nb = per_batch.len() as f64;
    let mean = per_batch.iter().sum::<f64>() / nb;
    let var = per_batch.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nb - 1.0);
    let std_error = (var / nb).sqrt();
    if std_error > MAX_LAMBDA_SE {
        return Err(Error::Statistics(format!("standard error {std_error:.3e} of the fitted coefficient")));
    }
    let m = ens.trajectories as f64;
    let n = ens.n_sites;
    let (mut sum_z2, mut max_z, mut points) = (0.0, 0.0f64, 0usize);
    for (k, &t) in ens.grid.iter().enumerate().skip(1) {
        let pred = recursion_solution(lambda_hat, n, t);
        for i in 0..n {
            let p = pred[i].clamp(0.0, 1.0);
            if m * p < MIN_EXPECTED_COUNT || m * (1.0 - p) < MIN_EXPECTED_COUNT {
                continue;
            }
            let z = (c[k][i] - p) / (p * (1.0 - p) / m).sqrt();
            sum_z2 += z * z;
            max_z = max_z.max(z.abs());
            points += 1;
        }
    }
    let rms_z = if points > 0 { (sum_z2 / points as f64).sqrt() } else { 0.0 };
    let mut res2 = 0.0;
    let mut cnt = 0usize;
    for k in 1..ens.grid.len() - 1 {
        let dt = ens.grid[k + 1] - ens.grid[k - 1];
        for i in 0..n {
            let deriv = (c[k + 1][i] - c[k - 1][i]) / dt;
            let rhs = -c[k][i] + lambda_hat * (c[k][(i + n - 1) % n] + c[k][(i + 1) % n]);
            res2 += (deriv - rhs).powi(2);
            cnt += 1;
        }
    }
    let reflection_defect = c
        .iter()
        .flat_map(|row| (1..n).map(move |i| (row[i] - row[n - i]).abs()))
        .fold(0.0, f64::max);
    Ok(CorrelationReport {
        lambda_hat,
        std_error,
        hop,
        rms_z,
        max_z,
        envelope_points: points,
        derivative_residual: (res2 / cnt.max(1) as f64).sqrt(),
        reflection_defect,
        within_envelope: rms_z <= 3.0,
        correlations: c,
    })
}

/// Spin-flip rates `w_i(s) = ½(1 − λ s_i (s_{i−1} + s_{i+1}))` with the hop
/// coefficient `λ` of the particle picture, on a ring of `n` spins.
pub fn spin_flip_rate(hop: f64, config: usize, i: usize, n: usize) -> f64 {
    let s = |k: usize| if (config >> (k % n)) & 1 == 0 { 1.0 } else { -1.0 };
    0.5 * (1.0 - hop * s(i) * (s(i + n - 1) + s(i + 1)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BalanceReport {
    /// `max |ln(π(s) w(s→s') / (π(s') w(s'→s)))|`
    pub pair_defect: f64,
    /// `max |ln` of forward over backward rate products around flip squares `|`
    pub cycle_defect: f64,
}

/// Detailed balance of the spin chain against the Ising weights on a 3-site ring.
pub fn detailed_balance(beta: f64) -> Result<BalanceReport> {
    let n = 3;
    let hop = tau_table(beta)?.hop();
    let ising = ising_mps(beta)?;
    let w = |s: usize, i: usize| spin_flip_rate(hop, s, i, n);
    let (mut pair, mut cycle) = (0.0f64, 0.0f64);
    for s in 0..(1usize << n) {
        for i in 0..n {
            let t = s ^ (1 << i);
            let lhs = ising.weight(s, n) * w(s, i);
            let rhs = ising.weight(t, n) * w(t, i);
            pair = pair.max((lhs / rhs).ln().abs());
            for j in 0..n {
                if j == i {
                    continue;
                }
                let (a, b, d) = (s ^ (1 << i), s ^ (1 << i) ^ (1 << j), s ^ (1 << j));
                let fwd = w(s, i) * w(a, j) * w(b, i) * w(d, j);
                let bwd = w(s, j) * w(d, i) * w(b, j) * w(a, i);
                cycle = cycle.max((fwd / bwd).ln().abs());
            }
        }
    }
    Ok(BalanceReport { pair_defect: pair, cycle_defect: cycle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::channel_spectrum;

    #[test]
    fn weight_matrix_examples() {
        let a = ising_mps(0.0).unwrap().a;
        assert!((a - Matrix2::repeat(0.5)).norm() < 1e-15);
        let i = ising_mps(0.5).unwrap();
        for r in 0..2 {
            assert!((i.a.row(r).sum() - 1.0).abs() < 1e-14);
        }
        let e = i.weight_eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 0.5f64.tanh()).abs() < 1e-14);
        assert!((e[1] - 0.46211715726000974).abs() < 1e-14);
    }

    #[test]
    fn amplitudes_are_boltzmann_weights() {
        let ising = ising_mps(0.7).unwrap();
        let sv = crate::mps::state_vector(&ising.tensor(), 5).unwrap();
        for idx in 0..32usize {
            // site 0 is the most significant digit of the basis index
            let config = (0..5).fold(0, |acc, k| acc | (((idx >> (4 - k)) & 1) << k));
            assert!((sv.amps[idx] - c(ising.weight(config, 5), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn channel_spectrum_normalized() {
        for beta in [0.25, 0.5, 1.0] {
            let sd = channel_spectrum(&ising_mps(beta).unwrap().channel());
            let top = sd.eigenvalues[0];
            let ratio = sd.eigenvalues[1] / top;
            assert!((ratio - c((2.0 * beta).tanh(), 0.0)).norm() < 1e-12);
            assert!(sd.eigenvalues[2].norm() < 1e-12);
        }
    }

    #[test]
    fn tau_identities() {
        for beta in [0.0, 0.25, 0.5, 1.0] {
            let t = tau_table(beta).unwrap();
            assert!(t.hopping_symmetry_defect() <= 1e-12);
            assert!(t.creation_defect() <= 1e-14);
            assert!((t.hop() - (2.0 * beta).tanh() / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_center_is_identity() {
        let t = tau_table(0.5).unwrap();
        for am in 0..2 {
            for ap in 0..2 {
                for bm in 0..2 {
                    for bp in 0..2 {
                        let want = if (bm, bp) == (am, ap) { 1.0 } else { 0.0 };
                        assert!((t.get([am, 0, ap], [bm, bp]) - want).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn negative_rate_is_reported() {
        let mut t = tau_table(0.5).unwrap();
        t.tau[0][1][0][1][0] = -0.1;
        match t.rates() {
            Err(Error::NegativeRate { entry, value }) => {
                assert!(entry.contains("010"));
                assert_eq!(value, -0.1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vacuum_is_absorbing() {
        let t = tau_table(0.5).unwrap();
        let tr = simulate(&t, &OccupationState::empty(8).unwrap(), 100.0, 1).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.final_state.particles(), 0);
    }

    #[test]
    fn seed_determinism() {
        let t = tau_table(0.5).unwrap();
        let init = OccupationState::new(vec![1, 1, 0, 1, 0, 0, 1, 1]).unwrap();
        let a = simulate(&t, &init, 20.0, 42).unwrap();
        let b = simulate(&t, &init, 20.0, 42).unwrap();
        assert_eq!(a.events, b.events);
        let c = simulate(&t, &init, 20.0, 43).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn particle_number_never_increases() {
        let t = tau_table(1.0).unwrap();
        for seed in 0..50 {
            let init = OccupationState::new((0..12).map(|i| ((i * 7 + seed) % 3 == 0) as u8).collect()).unwrap();
            let tr = simulate(&t, &init, 50.0, seed as u64).unwrap();
            let mut last = init.particles();
            for e in &tr.events {
                assert!(e.particles <= last);
                last = e.particles;
            }
        }
    }

    #[test]
    fn single_particle_moments() {
        let beta = 0.5;
        let t = tau_table(beta).unwrap();
        let n = 64;
        let horizon = 6.0;
        let (mut s1, mut s2, mut alive) = (0.0, 0.0, 0usize);
        for seed in 0..20_000u64 {
            let tr = simulate_sampled(&t, &OccupationState::single(n, 0).unwrap(), horizon, &[horizon], 9, seed).unwrap();
            if let Some(s) = &tr.snapshots[0].1 {
                let pos = s.occ.iter().position(|&a| a == 1).unwrap() as i64;
                let x = if pos > n as i64 / 2 { pos - n as i64 } else { pos } as f64;
                s1 += x;
                s2 += x * x;
                alive += 1;
            }
        }
        let a = alive as f64;
        let msd = s2 / a;
        let want = 2.0 * t.hop() * horizon;
        // variance of x² for a continuous-time walk: 2σ⁴ + σ² (σ² = want)
        let se = ((2.0 * want * want + want) / a).sqrt();
        assert!((msd - want).abs() < 4.0 * se, "msd {msd} want {want} se {se}");
        assert!((s1 / a).abs() < 4.0 * (want / a).sqrt());
        let survive = (-(1.0 - 2.0 * t.hop()) * horizon).exp();
        assert!((a / 20_000.0 - survive).abs() < 4.0 * (survive * (1.0 - survive) / 20_000.0).sqrt());
    }

    #[test]
    fn adjacent_pair_annihilation_rate() {
        // rate of the annihilating move from a pair 0110 is 2τ (either particle hops onto the other)
        let beta = 0.5;
        let t = tau_table(beta).unwrap();
        let tau = t.hop();
        let init = OccupationState::new(vec![0, 1, 1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let runs = 20_000;
        let mut ann = 0usize;
        for s in 0..runs {
            let tr = simulate_sampled(&t, &init, 100.0, &[], 5, s).unwrap();
            if let Some(e) = tr.events.first() {
                ann += (e.kind == EventKind::Annihilate) as usize;
            }
        }
        // first event total rate is 2; annihilation accounts for 2τ of it
        let p = tau;
        let f = ann as f64 / runs as f64;
        assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / runs as f64).sqrt(), "{f} vs {p}");
    }

    #[test]
    fn recursion_solution_solves_ode() {
        let (lam, n, t, h) = (0.3, 16, 1.3, 1e-5);
        let c0 = recursion_solution(lam, n, t);
        let cp = recursion_solution(lam, n, t + h);
        let cm = recursion_solution(lam, n, t - h);
        for i in 0..n {
            let d = (cp[i] - cm[i]) / (2.0 * h);
            let rhs = -c0[i] + lam * (c0[(i + n - 1) % n] + c0[(i + 1) % n]);
            assert!((d - rhs).abs() < 1e-8);
        }
        assert!((recursion_solution(lam, n, 0.0)[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn correlations_at_infinite_temperature() {
        let t = tau_table(0.0).unwrap();
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let ens = simulate_ensemble(&t, 16, 4.0, &grid, MIN_TRAJECTORIES, 3).unwrap();
        let r = correlation_check(&ens, t.hop()).unwrap();
        assert!(r.lambda_hat.abs() <= 3.0 * r.std_error);
        assert_eq!(r.lambda_hat, 0.0);
    }

    #[test]
    fn too_few_trajectories() {
        let t = tau_table(0.5).unwrap();
        let ens = simulate_ensemble(&t, 8, 1.0, &[0.0, 0.5, 1.0], 100, 1).unwrap();
        assert!(matches!(correlation_check(&ens, t.hop()), Err(Error::Statistics(_))));
    }

    #[test]
    fn spin_rates_satisfy_detailed_balance() {
        for beta in [0.0, 0.25, 0.5, 1.0] {
            let r = detailed_balance(beta).unwrap();
            assert!(r.pair_defect <= 1e-10 && r.cycle_defect <= 1e-10, "{beta} {r:?}");
        }
    }

    #[test]
    fn fixture_table() {
        let raw: serde_json::Value =
            serde_json::from_str(include_str!("../tests/fixtures/tau_beta_0.5.json")).unwrap();
        let t = tau_table(0.5).unwrap();
        for e in raw["entries"].as_array().unwrap() {
            let a: Vec<usize> = serde_json::from_value(e["a"].clone()).unwrap();
            let b: Vec<usize> = serde_json::from_value(e["b"].clone()).unwrap();
            let want = e["tau"].as_f64().unwrap();
            assert!((t.get([a[0], a[1], a[2]], [b[0], b[1]]) - want).abs() < 1e-12);
        }
    }
}
