//! Argument parsing, config files and resolved run configurations.
//!
//! A config file has the manifest layout
//! `{"command": "<name>", "args": {...}, "out": "...", "threads": n}`.
//! Flags given alongside a config file may add keys but never contradict it.
//! `out` and `threads` are runtime options: flags override the file.

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use mpsqp::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::PathBuf;

pub const OUT_ENV: &str = "MPSQP_OUT";
pub const DEFAULT_OUT: &str = "mpsqp-out";

#[derive(Parser, Debug)]
#[command(name = "mpsqp", version, about = "Quasiparticle excitations above matrix product states")]
pub struct Cli {
    /// Config or manifest file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $MPSQP_OUT, else ./mpsqp-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Spectral report of a transfer channel.
    Spectrum(SpectrumArgs),
    /// One-particle energies over a momentum grid.
    Dispersion(DispersionArgs),
    /// Exact diagonalization of the parent Hamiltonian.
    Verify(VerifyArgs),
    /// Bound-state diagnostics over a renormalization sweep.
    BoundState(BoundStateArgs),
    /// Correlation-length curves of a disordered family.
    Localization(LocalizationArgs),
    /// Glauber dynamics trajectories and correlations.
    Glauber(GlauberArgs),
    /// Complete-positivity constraints of a clock spectrum.
    CpCheck(CpCheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Dispersion(_) => "dispersion",
            Command::Verify(_) => "verify",
            Command::BoundState(_) => "bound-state",
            Command::Localization(_) => "localization",
            Command::Glauber(_) => "glauber",
            Command::CpCheck(_) => "cp-check",
        }
    }

    fn to_value(&self) -> Value {
        match self {
            Command::Spectrum(a) => serde_json::to_value(a),
            Command::Dispersion(a) => serde_json::to_value(a),
            Command::Verify(a) => serde_json::to_value(a),
            Command::BoundState(a) => serde_json::to_value(a),
            Command::Localization(a) => serde_json::to_value(a),
            Command::Glauber(a) => serde_json::to_value(a),
            Command::CpCheck(a) => serde_json::to_value(a),
        }
        .expect("arguments serialize")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// `√p_i σ_i`, i = 0..3.
    Pauli,
    /// `(√(1−λ)σ⁺, √(1−λ)σ⁻, √λ σ_z)`.
    Aklt,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct SourceArgs {
    /// MPS tensor file.
    #[arg(long)]
    pub mps: Option<PathBuf>,
    /// Channel superoperator file.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    /// Built-in tensor.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Pauli weights p0,p1,p2,p3 [default: 0.7,0.1,0.1,0.1].
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// AKLT-family parameter [default: 2/3].
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesArg {
    Resummed,
    Truncated,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DispersionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Particle range L [default: 3].
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Number of momenta 2πj/K [default: 64].
    #[arg(long)]
    pub k_points: Option<usize>,
    /// Series for the connected transfer [default: resummed].
    #[arg(long, value_enum)]
    pub series: Option<SeriesArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialOp {
    X,
    Y,
    Z,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Ring length [default: 6].
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Interaction range [default: 2].
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Number of lowest levels [default: 4].
    #[arg(long)]
    pub levels: Option<usize>,
    /// One-particle trial state σ/√2 (bond dimension 2 only).
    #[arg(long, value_enum)]
    pub trial: Option<TrialOp>,
    /// Trial momentum index m, k = 2πm/N [default: 1].
    #[arg(long)]
    pub trial_m: Option<i64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BoundStateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Mode index in the spectral order [default: 1].
    #[arg(long)]
    pub mode: Option<usize>,
    /// Momentum in radians [default: 0].
    #[arg(long)]
    pub k: Option<f64>,
    /// Renormalization exponents [default: 0.3,0.4,0.7].
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Particle ranges [default: 8,16,32,64].
    #[arg(long = "L", value_delimiter = ',')]
    pub ls: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Aklt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleArg {
    Annealed,
    Quenched,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingArg {
    Analytic,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SharingArg {
    Shared,
    PerTensor,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationArgs {
    /// Disorder family [default: aklt].
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Disorder strengths [default: 0,1].
    #[arg(long = "W", value_delimiter = ',')]
    pub w: Option<Vec<f64>>,
    /// Smallest t [default: 1].
    #[arg(long)]
    pub tmin: Option<f64>,
    /// Largest t [default: 1e4].
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Log-spaced grid points [default: 41].
    #[arg(long)]
    pub points: Option<usize>,
    /// Sum truncation [default: 100].
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Seeds for sampled averages [default: 0].
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// [default: annealed]
    #[arg(long, value_enum)]
    pub ensemble: Option<EnsembleArg>,
    /// [default: analytic]
    #[arg(long, value_enum)]
    pub averaging: Option<AveragingArg>,
    /// [default: shared]
    #[arg(long, value_enum)]
    pub sharing: Option<SharingArg>,
    /// Monte Carlo samples per seed [default: 4096].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Quenched realizations per seed [default: 16].
    #[arg(long)]
    pub realizations: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GlauberArgs {
    /// Inverse temperature.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Ring length [default: 32].
    #[arg(long)]
    pub sites: Option<usize>,
    /// Time horizon [default: 4].
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Trajectories [default: 10000].
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Uniform sampling grid points on [0, horizon] [default: 41].
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Trajectories written to the event log [default: 10].
    #[arg(long)]
    pub log_trajectories: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CpCheckArgs {
    /// Bond dimension D.
    #[arg(long = "D")]
    pub d: Option<usize>,
    /// Moduli |λ_g|, g = 0..D−1.
    #[arg(long, value_delimiter = ',')]
    pub moduli: Option<Vec<f64>>,
    /// Phase indices κ_g with λ_g = |λ_g| e^{2πiκ_g/D}.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub kappas: Option<Vec<i64>>,
}

/// Fully resolved inputs, defaults filled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Mps(PathBuf),
    Channel(PathBuf),
    Pauli([f64; 4]),
    Aklt(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Spectrum { source: Source },
    Dispersion { source: Source, l: usize, k_points: usize, series: SeriesArg },
    Verify { source: Source, n: usize, l: usize, levels: usize, trial: Option<TrialOp>, trial_m: i64 },
    BoundState { source: Source, mode: usize, k: f64, gammas: Vec<f64>, ls: Vec<usize> },
    Localization(LocalizationParams),
    Glauber(GlauberParams),
    CpCheck { d: usize, moduli: Vec<f64>, kappas: Vec<i64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationParams {
    pub family: FamilyArg,
    pub w: Vec<f64>,
    pub tmin: f64,
    pub tmax: f64,
    pub points: usize,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub ensemble: EnsembleArg,
    pub averaging: AveragingArg,
    pub sharing: SharingArg,
    pub samples: usize,
    pub realizations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlauberParams {
    pub beta: f64,
    pub sites: usize,
    pub horizon: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub log_trajectories: usize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: String,
    /// Resolved arguments in the `args` layout of a config file.
    pub args: Value,
    pub params: Params,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn manifest(&self) -> Value {
        serde_json::json!({
            "command": self.command,
            "args": self.args,
            "out": self.out,
            "threads": self.threads,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    command: String,
    #[serde(default)]
    args: Map<String, Value>,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default, rename = "version")]
    _version: Option<String>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

/// Numbers compare by value so that `10000` and `1e4` agree.
fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same(p, q)),
        _ => a == b,
    }
}

fn known_keys(command: &str) -> Vec<String> {
    let cmd = Cli::command();
    cmd.find_subcommand(command)
        .map(|s| {
            s.get_arguments()
                .map(|a| a.get_id().as_str().to_string())
                .filter(|id| !matches!(id.as_str(), "config" | "out" | "threads" | "help"))
                .collect()
        })
        .unwrap_or_default()
}

fn merge(command: &str, file: Map<String, Value>, flags: Value) -> Result<Value> {
    let known = known_keys(command);
    if known.is_empty() {
        return Err(invalid(format!("unknown command '{command}'")));
    }
    if let Some(k) = file.keys().find(|k| !known.contains(k)) {
        return Err(invalid(format!("unknown key '{k}' for {command}")));
    }
    let mut out = file;
    if let Value::Object(flags) = flags {
        for (k, v) in flags {
            if v.is_null() {
                continue;
            }
            match out.get(&k) {
                Some(f) if !f.is_null() && !same(f, &v) => {
                    return Err(invalid(format!("flag '{k}' = {v} conflicts with config value {f}")));
                }
                _ => {
                    out.insert(k, v);
                }
            }
        }
    }
    Ok(Value::Object(out))
}

fn parse_args<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
    Ok(serde_json::from_value(v)?)
}

/// Merges flags with an optional config file and fills defaults.
pub fn resolve(cli: Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(p) => Some(serde_json::from_str::<ConfigFile>(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    let (command, flags) = match (&cli.command, &file) {
        (Some(c), Some(f)) if c.name() != f.command => {
            return Err(invalid(format!("command '{}' conflicts with config command '{}'", c.name(), f.command)));
        }
        (Some(c), _) => (c.name().to_string(), c.to_value()),
        (None, Some(f)) => (f.command.clone(), Value::Null),
        (None, None) => return Err(invalid("missing command")),
    };
    let file_args = file.as_ref().map(|f| f.args.clone()).unwrap_or_default();
    let merged = merge(&command, file_args, flags)?;
    let params = match command.as_str() {
        "spectrum" => resolve_spectrum(parse_args(merged)?)?,
        "dispersion" => resolve_dispersion(parse_args(merged)?)?,
        "verify" => resolve_verify(parse_args(merged)?)?,
        "bound-state" => resolve_bound_state(parse_args(merged)?)?,
        "localization" => resolve_localization(parse_args(merged)?)?,
        "glauber" => resolve_glauber(parse_args(merged)?)?,
        "cp-check" => resolve_cp_check(parse_args(merged)?)?,
        other => return Err(invalid(format!("unknown command '{other}'"))),
    };
    let out = cli
        .out
        .or_else(|| file.as_ref().and_then(|f| f.out.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let threads = cli.threads.or_else(|| file.as_ref().and_then(|f| f.threads));
    if threads == Some(0) {
        return Err(invalid("--threads must be positive"));
    }
    Ok(RunConfig { command, args: resolved_args(&params), params, out, threads })
}

fn resolve_source(s: SourceArgs, allow_channel: bool) -> Result<Source> {
    let given = [s.mps.is_some(), s.channel.is_some(), s.builtin.is_some()].iter().filter(|&&b| b).count();
    if given != 1 {
        return Err(invalid("exactly one of --mps, --channel, --builtin is required"));
    }
    if s.channel.is_some() && !allow_channel {
        return Err(invalid("this command needs a tensor (--mps or --builtin)"));
    }
    if s.p.is_some() && s.builtin != Some(Builtin::Pauli) {
        return Err(invalid("--p applies to --builtin pauli only"));
    }
    if s.lambda.is_some() && s.builtin != Some(Builtin::Aklt) {
        return Err(invalid("--lambda applies to --builtin aklt only"));
    }
    Ok(match (s.mps, s.channel, s.builtin) {
        (Some(p), _, _) => Source::Mps(p),
        (_, Some(p), _) => Source::Channel(p),
        (_, _, Some(Builtin::Pauli)) => {
            let p = s.p.unwrap_or(vec![0.7, 0.1, 0.1, 0.1]);
            let p: [f64; 4] = p.try_into().map_err(|_| invalid("--p needs four weights"))?;
            if p.iter().any(|x| !(*x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(invalid("Pauli weights must be nonnegative and sum to one"));
            }
            Source::Pauli(p)
        }
        _ => {
            let l = s.lambda.unwrap_or(2.0 / 3.0);
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::OutOfDomain { value: l, domain: "[0, 1]".into() });
            }
            Source::Aklt(l)
        }
    })
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        return Err(invalid(format!("{name} must be at least 1")));
    }
    Ok(v)
}

fn resolve_spectrum(a: SpectrumArgs) -> Result<Params> {
    Ok(Params::Spectrum { source: resolve_source(a.source, true)? })
}

fn resolve_dispersion(a: DispersionArgs) -> Result<Params> {
    Ok(Params::Dispersion {
        source: resolve_source(a.source, true)?,
        l: positive("L", a.l.unwrap_or(3))?,
        k_points: positive("k-points", a.k_points.unwrap_or(64))?,
        series: a.series.unwrap_or(SeriesArg::Resummed),
    })
}

fn resolve_verify(a: VerifyArgs) -> Result<Params> {
    let n = positive("N", a.n.unwrap_or(6))?;
    let l = positive("L", a.l.unwrap_or(2))?;
    if l > n {
        return Err(invalid("L must not exceed N"));
    }
    Ok(Params::Verify {
        source: resolve_source(a.source, false)?,
        n,
        l,
        levels: positive("levels", a.levels.unwrap_or(4))?,
        trial: a.trial,
        trial_m: a.trial_m.unwrap_or(1),
    })
}

fn resolve_bound_state(a: BoundStateArgs) -> Result<Params> {
    let ls = a.ls.unwrap_or(vec![8, 16, 32, 64]);
    if ls.is_empty() || ls.contains(&0) {
        return Err(invalid("L values must be at least 1"));
    }
    let gammas = a.gammas.unwrap_or(vec![0.3, 0.4, 0.7]);
    if gammas.iter().any(|g| !g.is_finite()) {
        return Err(invalid("gammas must be finite"));
    }
    Ok(Params::BoundState { source: resolve_source(a.source, true)?, mode: a.mode.unwrap_or(1), k: a.k.unwrap_or(0.0), gammas, ls })
}

fn resolve_localization(a: LocalizationArgs) -> Result<Params> {
    let p = LocalizationParams {
        family: a.family.unwrap_or(FamilyArg::Aklt),
        w: a.w.unwrap_or(vec![0.0, 1.0]),
        tmin: a.tmin.unwrap_or(1.0),
        tmax: a.tmax.unwrap_or(1e4),
        points: positive("points", a.points.unwrap_or(41))?,
        n: positive("N", a.n.unwrap_or(mpsqp::localization::DEFAULT_TRUNCATION))?,
        seeds: a.seeds.unwrap_or(vec![0]),
        ensemble: a.ensemble.unwrap_or(EnsembleArg::Annealed),
        averaging: a.averaging.unwrap_or(AveragingArg::Analytic),
        sharing: a.sharing.unwrap_or(SharingArg::Shared),
        samples: positive("samples", a.samples.unwrap_or(4096))?,
        realizations: positive("realizations", a.realizations.unwrap_or(16))?,
    };
    if p.w.is_empty() || p.w.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(invalid("W values must be finite and nonnegative"));
    }
    if !(p.tmin >= 1.0 && p.tmax >= p.tmin && p.tmax.is_finite()) {
        return Err(invalid("need 1 <= tmin <= tmax"));
    }
    Ok(Params::Localization(p))
}

fn resolve_glauber(a: GlauberArgs) -> Result<Params> {
    let beta = a.beta.ok_or_else(|| invalid("--beta is required"))?;
    let p = GlauberParams {
        beta,
        sites: a.sites.unwrap_or(32),
        horizon: a.horizon.unwrap_or(4.0),
        trajectories: positive("trajectories", a.trajectories.unwrap_or(mpsqp::glauber::MIN_TRAJECTORIES))?,
        seed: a.seed.unwrap_or(0),
        grid_points: a.grid_points.unwrap_or(41),
        log_trajectories: a.log_trajectories.unwrap_or(10),
    };
    if !(p.beta >= 0.0 && p.beta.is_finite()) {
        return Err(Error::OutOfDomain { value: p.beta, domain: "beta >= 0".into() });
    }
    if p.sites < 3 {
        return Err(invalid("sites must be at least 3"));
    }
    if !(p.horizon > 0.0 && p.horizon.is_finite()) {
        return Err(Error::OutOfDomain { value: p.horizon, domain: "horizon > 0".into() });
    }
    if p.grid_points < 3 {
        return Err(invalid("grid-points must be at least 3"));
    }
    Ok(Params::Glauber(p))
}

fn resolve_cp_check(a: CpCheckArgs) -> Result<Params> {
    let d = positive("D", a.d.ok_or_else(|| invalid("--D is required"))?)?;
    let moduli = a.moduli.ok_or_else(|| invalid("--moduli is required"))?;
    let kappas = a.kappas.ok_or_else(|| invalid("--kappas is required"))?;
    Ok(Params::CpCheck { d, moduli, kappas })
}

fn source_args(s: &Source) -> SourceArgs {
    match s {
        Source::Mps(p) => SourceArgs { mps: Some(p.clone()), ..Default::default() },
        Source::Channel(p) => SourceArgs { channel: Some(p.clone()), ..Default::default() },
        Source::Pauli(p) => SourceArgs { builtin: Some(Builtin::Pauli), p: Some(p.to_vec()), ..Default::default() },
        Source::Aklt(l) => SourceArgs { builtin: Some(Builtin::Aklt), lambda: Some(*l), ..Default::default() },
    }
}

fn drop_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).collect()),
        other => other,
    }
}

/// Resolved parameters in the `args` layout, so a manifest is a valid config.
fn resolved_args(p: &Params) -> Value {
    let v = match p {
        Params::Spectrum { source } => serde_json::to_value(SpectrumArgs { source: source_args(source) }),
        Params::Dispersion { source, l, k_points, series } => serde_json::to_value(DispersionArgs {
            source: source_args(source),
            l: Some(*l),
            k_points: Some(*k_points),
            series: Some(*series),
        }),
        Params::Verify { source, n, l, levels, trial, trial_m } => serde_json::to_value(VerifyArgs {
            source: source_args(source),
            n: Some(*n),
            l: Some(*l),
            levels: Some(*levels),
            trial: *trial,
            trial_m: Some(*trial_m),
        }),
        Params::BoundState { source, mode, k, gammas, ls } => serde_json::to_value(BoundStateArgs {
            source: source_args(source),
            mode: Some(*mode),
            k: Some(*k),
            gammas: Some(gammas.clone()),
            ls: Some(ls.clone()),
        }),
        Params::Localization(p) => serde_json::to_value(LocalizationArgs {
            family: Some(p.family),
            w: Some(p.w.clone()),
            tmin: Some(p.tmin),
            tmax: Some(p.tmax),
            points: Some(p.points),
            n: Some(p.n),
            seeds: Some(p.seeds.clone()),
            ensemble: Some(p.ensemble),
            averaging: Some(p.averaging),
            sharing: Some(p.sharing),
            samples: Some(p.samples),
            realizations: Some(p.realizations),
        }),
        Params::Glauber(p) => serde_json::to_value(GlauberArgs {
            beta: Some(p.beta),
            sites: Some(p.sites),
            horizon: Some(p.horizon),
            trajectories: Some(p.trajectories),
            seed: Some(p.seed),
            grid_points: Some(p.grid_points),
            log_trajectories: Some(p.log_trajectories),
        }),
        Params::CpCheck { d, moduli, kappas } => {
            serde_json::to_value(CpCheckArgs { d: Some(*d), moduli: Some(moduli.clone()), kappas: Some(kappas.clone()) })
        }
    };
    drop_nulls(v.expect("arguments serialize"))
}
