//! Command execution. Every command writes comma-separated tables with a
//! header row plus a JSON summary into the output directory.

use crate::config::{
    AveragingArg, EnsembleArg, FamilyArg, GlauberParams, LocalizationParams, Params, RunConfig, SeriesArg, SharingArg,
    Source, TrialOp,
};
use mpsqp::channel::{channel_spectrum, choi_cp_check, spectrum_feasibility, structure_constants, transfer_matrix, QuantumChannel};
use mpsqp::excitations::{one_particle_modes, stability_diagnostics, Series, StabilityOptions};
use mpsqp::glauber::{correlation_check, detailed_balance, simulate_ensemble, simulate_sampled, tau_table, OccupationState};
use mpsqp::io::{num, read_channel, read_mps, spectral_report, Table};
use mpsqp::linalg::{c, paulis};
use mpsqp::localization::{log_grid, sweep, Averaging, DisorderFamily, Ensemble, Sharing, SweepConfig};
use mpsqp::mps::{aklt_tensor, canonicalize, excited_state_vector, pauli_tensor, ring_momentum, state_vector, MpsTensor, ParticleInsertionSpec};
use mpsqp::parent::{assemble_or_apply, ed_report, local_term};
use mpsqp::{Error, Result};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";
pub const ERROR_RECORD: &str = "error.json";

fn tensor(source: &Source) -> Result<MpsTensor> {
    match source {
        Source::Mps(p) => read_mps(p),
        Source::Pauli(p) => Ok(pauli_tensor(*p)),
        Source::Aklt(l) => Ok(aklt_tensor(*l)),
        Source::Channel(_) => Err(Error::Invalid("a tensor is required".into())),
    }
}

/// Transfer channel of the source; tensors are brought to the canonical gauge
/// first when `canonical` is set.
fn channel(source: &Source, canonical: bool) -> Result<QuantumChannel> {
    match source {
        Source::Channel(p) => read_channel(p),
        _ if canonical => Ok(transfer_matrix(&canonicalize(&tensor(source)?)?.0)),
        _ => Ok(transfer_matrix(&tensor(source)?)),
    }
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Output<'_> {
    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.dir.join(name);
        t.write(&p)?;
        self.files.push(p);
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let p = self.dir.join(name);
        std::fs::write(&p, serde_json::to_string_pretty(v)? + "\n")?;
        self.files.push(p);
        Ok(())
    }
}

pub fn write_manifest(cfg: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out)?;
    let p = cfg.out.join(MANIFEST);
    std::fs::write(&p, serde_json::to_string_pretty(&cfg.manifest())? + "\n")?;
    Ok(p)
}

/// Writes the manifest, then the command's result files. Returns all paths written.
pub fn execute(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let manifest = write_manifest(cfg)?;
    let mut out = Output { dir: &cfg.out, files: vec![manifest] };
    match &cfg.params {
        Params::Spectrum { source } => spectrum(&mut out, source)?,
        Params::Dispersion { source, l, k_points, series } => dispersion(&mut out, source, *l, *k_points, *series)?,
        Params::Verify { source, n, l, levels, trial, trial_m } => verify(&mut out, source, *n, *l, *levels, *trial, *trial_m)?,
        Params::BoundState { source, mode, k, gammas, ls } => bound_state(&mut out, source, *mode, *k, gammas, ls)?,
        Params::Localization(p) => localization(&mut out, p)?,
        Params::Glauber(p) => glauber(&mut out, p)?,
        Params::CpCheck { d, moduli, kappas } => cp_check(&mut out, *d, moduli, kappas)?,
    }
    Ok(out.files)
}

fn spectrum(out: &mut Output, source: &Source) -> Result<()> {
    let ch = channel(source, false)?;
    let sd = channel_spectrum(&ch);
    out.table("spectrum.csv", &spectral_report(&sd))?;
    let choi = choi_cp_check(&ch);
    out.json(
        "spectrum.json",
        &json!({
            "dim": ch.dim,
            "lambda2": sd.lambda2(),
            "leading_degenerate": sd.leading_degenerate,
            "defective": sd.defective,
            "normality_defect": sd.normality_defect,
            "unitality_defect": sd.unitality_defect,
            "trace_preservation_defect": ch.trace_preservation_defect(),
            "choi": choi,
        }),
    )
}

fn opt(z: Option<Complex64>, f: impl Fn(Complex64) -> f64) -> String {
    z.map(|z| num(f(z))).unwrap_or_default()
}

fn dispersion(out: &mut Output, source: &Source, l: usize, k_points: usize, series: SeriesArg) -> Result<()> {
    let ch = channel(source, true)?;
    let series = match series {
        SeriesArg::Resummed => Series::Resummed,
        SeriesArg::Truncated => Series::Truncated,
    };
    let mut t = Table::new(&["k_rad", "mode", "epsilon", "energy", "eigenvalue_re", "eigenvalue_im"]);
    for j in 0..k_points {
        let k = 2.0 * std::f64::consts::PI * j as f64 / k_points as f64;
        for (i, m) in one_particle_modes(&ch, k, l, series)?.iter().enumerate() {
            t.push(vec![
                num(k),
                i.to_string(),
                num(m.epsilon),
                num(m.energy),
                opt(m.eigenvalue, |z| z.re),
                opt(m.eigenvalue, |z| z.im),
            ])?;
        }
    }
    out.table("dispersion.csv", &t)
}

fn verify(
    out: &mut Output,
    source: &Source,
    n: usize,
    l: usize,
    levels: usize,
    trial: Option<TrialOp>,
    trial_m: i64,
) -> Result<()> {
    let mps = tensor(source)?;
    let report = ed_report(&mps, n, l, levels)?;
    let ham = assemble_or_apply(n, &local_term(&mps, l)?)?;
    let residual = |psi: &mpsqp::mps::StateVector| {
        let h = ham.apply(&psi.amps);
        let nsq = psi.norm_sq;
        let mean: Complex64 = psi.amps.iter().zip(&h).map(|(a, b)| a.conj() * b).sum::<Complex64>() / nsq;
        let res: f64 = h.iter().zip(&psi.amps).map(|(x, p)| (x - p * mean.re).norm_sqr()).sum::<f64>() / nsq;
        (mean.re, res.sqrt(), (h.iter().map(|x| x.norm_sqr()).sum::<f64>() / nsq).sqrt())
    };
    let (_, _, mps_residual) = residual(&state_vector(&mps, n)?);
    let trial = match trial {
        Some(op) => {
            if mps.bond != 2 {
                return Err(Error::Invalid("trial states need bond dimension 2".into()));
            }
            let idx = match op {
                TrialOp::X => 1,
                TrialOp::Y => 2,
                TrialOp::Z => 3,
            };
            let x = &paulis()[idx] * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let k = ring_momentum(trial_m, n);
            let psi = excited_state_vector(&mps, n, &ParticleInsertionSpec::single(x, k))?;
            let (rq, res, _) = residual(&psi);
            json!({"op": op, "m": trial_m, "k_rad": k, "rayleigh_quotient": rq, "residual": res})
        }
        None => Value::Null,
    };
    let mut t = Table::new(&["index", "energy", "momentum_rad"]);
    for (i, lv) in report.levels.iter().enumerate() {
        t.push(vec![i.to_string(), num(lv.energy), num(lv.momentum)])?;
    }
    out.table("levels.csv", &t)?;
    let ground = report.levels.first().map(|lv| lv.energy).unwrap_or(f64::NAN);
    out.json(
        "verify.json",
        &json!({
            "n_sites": report.n_sites,
            "range": report.range,
            "dim": report.dim,
            "dense": report.dense,
            "projector_defect": report.projector_defect,
            "ground_energy": ground,
            "ground_residual": ground.abs().max(mps_residual),
            "mps_energy": report.mps_energy,
            "mps_residual": mps_residual,
            "trial": trial,
        }),
    )
}

fn bound_state(out: &mut Output, source: &Source, mode: usize, k: f64, gammas: &[f64], ls: &[usize]) -> Result<()> {
    let ch = channel(source, true)?;
    let sd = channel_spectrum(&ch);
    let st = structure_constants(&sd)?;
    let mut t = Table::new(&["gamma", "L", "k_rad", "mode", "modulus", "sigma", "epsilon1", "delta"]);
    let runs = std::iter::once(None).chain(gammas.iter().map(|&g| Some(g)));
    for gamma in runs {
        for &l in ls {
            if gamma.is_some() && l < 2 {
                continue;
            }
            let opts = StabilityOptions { gamma, ..Default::default() };
            let r = stability_diagnostics(&sd, &st, mode, k, l, &opts)?;
            t.push(vec![
                gamma.map(num).unwrap_or_else(|| "none".into()),
                l.to_string(),
                num(k),
                mode.to_string(),
                num(r.eigenvalues[mode].norm()),
                num(r.sigma),
                num(r.epsilon1),
                num(r.delta),
            ])?;
        }
    }
    out.table("bound_state.csv", &t)
}

fn localization(out: &mut Output, p: &LocalizationParams) -> Result<()> {
    let FamilyArg::Aklt = p.family;
    let averaging = match p.averaging {
        AveragingArg::Analytic => Averaging::AnalyticGaussian,
        AveragingArg::MonteCarlo => Averaging::MonteCarlo { samples: p.samples, seed: p.seeds.first().copied().unwrap_or(0) },
    };
    let sharing = match p.sharing {
        SharingArg::Shared => Sharing::Shared,
        SharingArg::PerTensor => Sharing::PerTensor,
    };
    let base = DisorderFamily::aklt(0.0).with_averaging(averaging).with_sharing(sharing);
    let cfg = SweepConfig {
        t: log_grid(p.tmin, p.tmax, p.points)?,
        n: p.n,
        w: p.w.clone(),
        seeds: p.seeds.clone(),
        ensemble: match p.ensemble {
            EnsembleArg::Annealed => Ensemble::Annealed,
            EnsembleArg::Quenched => Ensemble::Quenched,
        },
        realizations: p.realizations,
    };
    let mut t = Table::new(&["t", "lambda", "W", "xi"]);
    for curve in sweep(&base, &cfg)? {
        for ((tv, lam), xi) in curve.t.iter().zip(&curve.lambda).zip(&curve.xi) {
            t.push(vec![num(*tv), num(*lam), num(curve.w), num(*xi)])?;
        }
    }
    out.table("localization.csv", &t)
}

fn glauber(out: &mut Output, p: &GlauberParams) -> Result<()> {
    let table = tau_table(p.beta)?;
    let grid: Vec<f64> = (0..p.grid_points).map(|i| p.horizon * i as f64 / (p.grid_points - 1) as f64).collect();
    let log_path = out.dir.join("events.jsonl");
    let mut log = std::io::BufWriter::new(std::fs::File::create(&log_path)?);
    let init = OccupationState::single(p.sites, 0)?;
    for i in 0..p.log_trajectories.min(p.trajectories) {
        let tr = simulate_sampled(&table, &init, p.horizon, &[0.0, p.horizon], p.seed, i as u64)?;
        let rec = json!({"trajectory": i, "seed": tr.seed, "stream": tr.stream, "killed_at": tr.killed_at, "events": tr.events});
        writeln!(log, "{rec}")?;
    }
    log.flush()?;
    out.files.push(log_path);

    let ens = simulate_ensemble(&table, p.sites, p.horizon, &grid, p.trajectories, p.seed)?;
    let corr = ens.correlations();
    let mut t = Table::new(&["t", "site", "c"]);
    for (tv, row) in grid.iter().zip(&corr) {
        for (site, v) in row.iter().enumerate() {
            t.push(vec![num(*tv), site.to_string(), num(*v)])?;
        }
    }
    out.table("correlations.csv", &t)?;
    let balance = detailed_balance(p.beta)?;
    let check = correlation_check(&ens, table.hop());
    let summary = json!({
        "beta": p.beta,
        "hop": table.hop(),
        "hopping_symmetry_defect": table.hopping_symmetry_defect(),
        "creation_defect": table.creation_defect(),
        "kills": ens.kills,
        "annihilations": ens.annihilations,
        "detailed_balance": balance,
        "fit": check.as_ref().ok().map(|r| json!({
            "lambda_hat": r.lambda_hat,
            "std_error": r.std_error,
            "rms_z": r.rms_z,
            "max_z": r.max_z,
            "envelope_points": r.envelope_points,
            "derivative_residual": r.derivative_residual,
            "reflection_defect": r.reflection_defect,
            "within_envelope": r.within_envelope,
        })),
    });
    out.json("glauber.json", &summary)?;
    check.map(|_| ())
}

fn cp_check(out: &mut Output, d: usize, moduli: &[f64], kappas: &[i64]) -> Result<()> {
    let r = spectrum_feasibility(moduli, kappas, d)?;
    let mut t = Table::new(&["alpha", "constraint"]);
    for (i, v) in r.constraints.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), num(*v)])?;
    }
    out.table("cp_check.csv", &t)?;
    out.json("cp_check.json", &serde_json::to_value(&r)?)
}
