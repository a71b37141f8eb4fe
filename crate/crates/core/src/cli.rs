//! Command-line front end.
//!
//! Every command reads an optional versioned JSON config, applies flag
//! overrides, writes CSV/JSON outputs into `--out`, and pairs them with a
//! `<command>_manifest.json` holding the fully resolved config. Ranges are
//! given in meters here and converted to km for the library.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::degree::{
    combined_k_max, default_k_max, degree_moments, epidemic_threshold, intra_layer_pmf, poisson_pmf, spreading_rates, DegreeVariable, Layer,
    NetworkParams, ParamBounds, ThreatModel,
};
use crate::designer::{optimize, sweep, DesignSolution, DesignStatus, MissionSpec, SweepRow, SweepVariable};
use crate::error::Error;
use crate::geometry::{empirical_degrees, normalize, sample_graph, Region};
use crate::meanfield::{integrate_single, solve_dual, solve_theta, theta_lower_bound, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::montecarlo::{replication_rng, simulate_dual, simulate_single, SimConfig, TimePoint};
use crate::reconfig::{run_mission, CheckStatus, ReconfigConfig, ReconfigTrace, ScenarioEvent};

pub const CONFIG_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "NETDESIGN_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

/// Library errors raised by bad inputs are config errors; the rest are
/// runtime failures.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) | Error::UnattainableThreshold { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "netdesign", version, about = "Design and evaluate two-layer device-to-device networks")]
pub struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degree pmfs, moments and thresholds.
    Degree {
        #[command(flatten)]
        network: NetworkArgs,
        #[arg(long)]
        k_max: Option<usize>,
        /// Number of sampled graphs for empirical columns.
        #[arg(long)]
        empirical_seeds: Option<usize>,
    },
    /// Mean-field equilibria.
    Equilibrium {
        #[command(flatten)]
        network: NetworkArgs,
        #[arg(long)]
        delta: Option<f64>,
        /// Spreading rate for all three messages.
        #[arg(long)]
        alpha: Option<f64>,
        /// Also integrate the single-message dynamics.
        #[arg(long)]
        trajectory: bool,
    },
    /// Monte Carlo simulation against the mean-field prediction.
    Simulate {
        #[command(flatten)]
        network: NetworkArgs,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        time_step: Option<f64>,
        /// Write per-step fractions of the first replication.
        #[arg(long)]
        timeseries: bool,
    },
    /// Optimal design, optionally swept over a parameter.
    Design {
        #[command(flatten)]
        mission: MissionArgs,
        #[arg(long, value_enum)]
        sweep: Option<SweepArg>,
        /// Comma-separated sweep values, ascending.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Closed-loop reconfiguration mission.
    Reconfig {
        #[command(flatten)]
        mission: MissionArgs,
        /// JSON file with a list of scenario events.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        t_r: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    #[arg(long)]
    pub p: Option<f64>,
    /// Devices per km².
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub r1_m: Option<f64>,
    #[arg(long)]
    pub r2_m: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MissionArgs {
    #[arg(long, value_enum)]
    pub mission: Option<Preset>,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Intelligence,
    Encounter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepArg {
    Delta,
    Tc,
    TIntra,
}

impl From<SweepArg> for SweepVariable {
    fn from(s: SweepArg) -> Self {
        match s {
            SweepArg::Delta => SweepVariable::Delta,
            SweepArg::Tc => SweepVariable::Tc,
            SweepArg::TIntra => SweepVariable::TIntra,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub threat: ThreatModel,
    #[serde(default)]
    pub region: Option<RegionSection>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub mission: MissionSection,
    #[serde(default)]
    pub degree: DegreeSection,
    #[serde(default)]
    pub equilibrium: EquilibriumSection,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default)]
    pub reconfig: ReconfigSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            network: NetworkSection::default(),
            threat: ThreatModel::default(),
            region: None,
            sim: SimConfig::default(),
            mission: MissionSection::default(),
            degree: DegreeSection::default(),
            equilibrium: EquilibriumSection::default(),
            design: DesignSection::default(),
            reconfig: ReconfigSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub p: f64,
    pub lambda: f64,
    pub r1_m: f64,
    pub r2_m: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self { p: 0.4, lambda: 15.0, r1_m: 1000.0, r2_m: 500.0 }
    }
}

impl NetworkSection {
    fn params(&self) -> CliResult<NetworkParams> {
        Ok(NetworkParams::new(self.p, self.lambda, self.r1_m / 1000.0, self.r2_m / 1000.0)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub width_km: f64,
    pub height_km: f64,
    #[serde(default = "yes")]
    pub wrap: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub p_min: f64,
    pub p_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub r1_min_m: f64,
    pub r1_max_m: f64,
    pub r2_min_m: f64,
    pub r2_max_m: f64,
}

impl From<ParamBounds> for BoundsSection {
    fn from(b: ParamBounds) -> Self {
        Self {
            p_min: b.p_min,
            p_max: b.p_max,
            lambda_min: b.lambda_min,
            lambda_max: b.lambda_max,
            r1_min_m: b.r1_min * 1000.0,
            r1_max_m: b.r1_max * 1000.0,
            r2_min_m: b.r2_min * 1000.0,
            r2_max_m: b.r2_max * 1000.0,
        }
    }
}

impl From<BoundsSection> for ParamBounds {
    fn from(b: BoundsSection) -> Self {
        Self {
            p_min: b.p_min,
            p_max: b.p_max,
            lambda_min: b.lambda_min,
            lambda_max: b.lambda_max,
            r1_min: b.r1_min_m / 1000.0,
            r1_max: b.r1_max_m / 1000.0,
            r2_min: b.r2_min_m / 1000.0,
            r2_max: b.r2_max_m / 1000.0,
        }
    }
}

/// Mission thresholds and weights; unset fields come from the preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionSection {
    pub preset: Preset,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub tc: Option<f64>,
    pub bounds: Option<BoundsSection>,
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub c: Option<f64>,
    pub eta: Option<f64>,
    pub anchor_degree: Option<f64>,
}

impl Default for MissionSection {
    fn default() -> Self {
        Self { preset: Preset::Intelligence, t1: None, t2: None, tc: None, bounds: None, w1: None, w2: None, c: None, eta: None, anchor_degree: None }
    }
}

impl MissionSection {
    fn to_mission(&self, threat: ThreatModel) -> MissionSpec {
        let mut m = match self.preset {
            Preset::Intelligence => MissionSpec::intelligence(threat.delta),
            Preset::Encounter => MissionSpec::encounter(threat.delta),
        };
        m.threat = threat;
        m.t1 = self.t1.unwrap_or(m.t1);
        m.t2 = self.t2.unwrap_or(m.t2);
        m.tc = self.tc.unwrap_or(m.tc);
        m.bounds = self.bounds.map_or(m.bounds, Into::into);
        m.w1 = self.w1.unwrap_or(m.w1);
        m.w2 = self.w2.unwrap_or(m.w2);
        m.c = self.c.unwrap_or(m.c);
        m.eta = self.eta.unwrap_or(m.eta);
        m.anchor_degree = self.anchor_degree;
        m
    }

    /// Pin every preset-derived field so the manifest is self-contained.
    fn resolved(&self, m: &MissionSpec) -> Self {
        Self {
            preset: self.preset,
            t1: Some(m.t1),
            t2: Some(m.t2),
            tc: Some(m.tc),
            bounds: Some(m.bounds.into()),
            w1: Some(m.w1),
            w2: Some(m.w2),
            c: Some(m.c),
            eta: Some(m.eta),
            anchor_degree: m.anchor_degree,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DegreeSection {
    pub k_max: Option<usize>,
    pub empirical_seeds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub horizon: f64,
    pub step: f64,
    pub initial_fraction: f64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self { horizon: 30.0, step: 0.01, initial_fraction: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumSection {
    /// Overrides all three spreading rates.
    pub alpha: Option<f64>,
    /// Poisson mean degrees for the exact-versus-bound table.
    pub poisson_means: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub trajectory: Option<TrajectorySection>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EquilibriumSection {
    fn default() -> Self {
        Self { alpha: None, poisson_means: Vec::new(), alpha_grid: Vec::new(), trajectory: None, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSection {
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconfigSection {
    pub t_r: u64,
    pub epsilon: f64,
    pub horizon: u64,
    pub target_nodes: f64,
    pub scenario: Vec<ScenarioEvent>,
}

impl Default for ReconfigSection {
    fn default() -> Self {
        let d = ReconfigConfig::default();
        Self { t_r: d.t_r, epsilon: d.epsilon, horizon: d.horizon, target_nodes: d.target_nodes, scenario: Vec::new() }
    }
}

/// Parse a config, reporting line and column on malformed JSON.
pub fn parse_config(text: &str, origin: &str) -> CliResult<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
    if cfg.version != CONFIG_VERSION {
        return Err(CliError::Config(format!("{origin}: unsupported config version {} (expected {CONFIG_VERSION})", cfg.version)));
    }
    Ok(cfg)
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            parse_config(&text, &p.display().to_string())
        }
    }
}

/// Independent seed for a named use of the master seed.
fn sub_seed(master: u64, purpose: u64) -> u64 {
    replication_rng(master, (1usize << 32) + purpose as usize).next_u64()
}

const SEED_GRAPH: u64 = 0;
const SEED_SIM: u64 = 1;
const SEED_MISSION: u64 = 2;
const SEED_EMPIRICAL: u64 = 3;

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub tool_version: &'a str,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub outputs: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, command: &str, config: &RunConfig) -> CliResult<()> {
        let name = format!("{command}_manifest.json");
        let manifest = RunManifest { command, tool_version: env!("CARGO_PKG_VERSION"), seed: config.seed, config, outputs: self.written.clone() };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
        self.write(&name, &(json + "\n"))
    }
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn apply_network(cfg: &mut RunConfig, a: &NetworkArgs) {
    if let Some(v) = a.p {
        cfg.network.p = v;
    }
    if let Some(v) = a.lambda {
        cfg.network.lambda = v;
    }
    if let Some(v) = a.r1_m {
        cfg.network.r1_m = v;
    }
    if let Some(v) = a.r2_m {
        cfg.network.r2_m = v;
    }
}

fn apply_mission(cfg: &mut RunConfig, a: &MissionArgs) {
    if let Some(p) = a.mission {
        cfg.mission.preset = p;
    }
    if let Some(d) = a.delta {
        cfg.threat.delta = d;
    }
}

fn resolve_region(cfg: &mut RunConfig, params: &NetworkParams) -> CliResult<Region> {
    let region = match cfg.region {
        Some(r) => Region { width: r.width_km, height: r.height_km, wrap: r.wrap },
        None => Region::for_density(params.lambda, 5000.0, 4.0 * params.r1),
    };
    region.validate()?;
    cfg.region = Some(RegionSection { width_km: region.width, height_km: region.height, wrap: region.wrap });
    Ok(region)
}

/// Parse arguments, run the command, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        // Fails only if the pool was already built, e.g. by an earlier run in
        // the same process; the existing pool is then reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let mut out = Outputs::new(&cli.out)?;
    let name = match &cli.command {
        Command::Degree { network, k_max, empirical_seeds } => {
            apply_network(&mut cfg, network);
            if k_max.is_some() {
                cfg.degree.k_max = *k_max;
            }
            if let Some(n) = empirical_seeds {
                cfg.degree.empirical_seeds = *n;
            }
            cmd_degree(&mut cfg, &mut out)?;
            "degree"
        }
        Command::Equilibrium { network, delta, alpha, trajectory } => {
            apply_network(&mut cfg, network);
            if let Some(d) = delta {
                cfg.threat.delta = *d;
            }
            if alpha.is_some() {
                cfg.equilibrium.alpha = *alpha;
            }
            if *trajectory && cfg.equilibrium.trajectory.is_none() {
                cfg.equilibrium.trajectory = Some(TrajectorySection::default());
            }
            cmd_equilibrium(&mut cfg, &mut out)?;
            "equilibrium"
        }
        Command::Simulate { network, delta, replications, time_step, timeseries } => {
            apply_network(&mut cfg, network);
            if let Some(d) = delta {
                cfg.threat.delta = *d;
            }
            if let Some(r) = replications {
                cfg.sim.replications = *r;
            }
            if let Some(h) = time_step {
                cfg.sim.time_step = *h;
            }
            if *timeseries {
                cfg.sim.record_timeseries = true;
            }
            cmd_simulate(&mut cfg, &mut out)?;
            "simulate"
        }
        Command::Design { mission, sweep, grid } => {
            apply_mission(&mut cfg, mission);
            match (sweep, grid) {
                (Some(v), Some(g)) => cfg.design.sweep = Some(SweepSection { variable: (*v).into(), grid: g.clone() }),
                (Some(v), None) => {
                    let grid = cfg.design.sweep.as_ref().map(|s| s.grid.clone()).unwrap_or_default();
                    cfg.design.sweep = Some(SweepSection { variable: (*v).into(), grid });
                }
                (None, Some(_)) => return Err(CliError::Config("--grid requires --sweep".into())),
                (None, None) => {}
            }
            cmd_design(&mut cfg, &mut out)?;
            "design"
        }
        Command::Reconfig { mission, scenario, t_r, epsilon, horizon, replications } => {
            apply_mission(&mut cfg, mission);
            if let Some(path) = scenario {
                let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                cfg.reconfig.scenario = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
            }
            if let Some(v) = t_r {
                cfg.reconfig.t_r = *v;
            }
            if let Some(v) = epsilon {
                cfg.reconfig.epsilon = *v;
            }
            if let Some(v) = horizon {
                cfg.reconfig.horizon = *v;
            }
            if let Some(v) = replications {
                cfg.sim.replications = *v;
            }
            cmd_reconfig(&mut cfg, &mut out)?;
            "reconfig"
        }
    };
    out.finish(name, &cfg)
}

fn cmd_degree(cfg: &mut RunConfig, out: &mut Outputs) -> CliResult<()> {
    let params = cfg.network.params()?;
    let model = degree_moments(&params)?;
    let k_max = cfg.degree.k_max.unwrap_or_else(|| {
        let m = params.layer1_poisson_mean().max(params.layer2_poisson_mean());
        default_k_max(m).max(combined_k_max(&params))
    });
    let pmf1 = intra_layer_pmf(&params, Layer::One, k_max)?;
    let pmf2 = intra_layer_pmf(&params, Layer::Two, k_max)?;
    let pmfc = crate::degree::combined_pmf(&params, k_max)?;

    let mut empirical: Option<[Vec<f64>; 3]> = None;
    let mut empirical_means = [f64::NAN; 3];
    if cfg.degree.empirical_seeds > 0 {
        let region = resolve_region(cfg, &params)?;
        let mut hists: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut sums = [0.0; 3];
        let mut nodes = 0.0;
        for i in 0..cfg.degree.empirical_seeds {
            let g = sample_graph(&params, &region, sub_seed(cfg.seed, SEED_EMPIRICAL + 16 * i as u64))?;
            let Ok(e) = empirical_degrees(&g) else { continue };
            for (acc, h) in hists.iter_mut().zip([&e.hist1, &e.hist2, &e.histc]) {
                if acc.len() < h.len() {
                    acc.resize(h.len(), 0);
                }
                for (a, b) in acc.iter_mut().zip(h) {
                    *a += b;
                }
            }
            let n = e.nodes as f64;
            sums[0] += e.mean1 * n;
            sums[1] += e.mean2 * n;
            sums[2] += e.meanc * n;
            nodes += n;
        }
        if nodes > 0.0 {
            empirical_means = sums.map(|s| s / nodes);
        }
        empirical = Some(hists.map(|h| normalize(&h)));
    }

    let mut csv = String::from("k,pmf_k1,pmf_k2,pmf_kc");
    if empirical.is_some() {
        csv.push_str(",empirical_k1,empirical_k2,empirical_kc");
    }
    csv.push('\n');
    let rows = match &empirical {
        Some(e) => e.iter().map(Vec::len).max().unwrap_or(0).max(k_max + 1),
        None => k_max + 1,
    };
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    for k in 0..rows {
        let _ = write!(csv, "{k},{},{},{}", f(at(&pmf1, k)), f(at(&pmf2, k)), f(at(&pmfc, k)));
        if let Some(e) = &empirical {
            let _ = write!(csv, ",{},{},{}", f(at(&e[0], k)), f(at(&e[1], k)), f(at(&e[2], k)));
        }
        csv.push('\n');
    }
    out.write("degree_pmf.csv", &csv)?;

    let mut m = String::from("variable,mean_closed_form,mean_pmf,second_moment,variance,threshold_exact,threshold_relaxed,empirical_mean\n");
    let closed = [params.mean_k1(), params.mean_k2(), params.mean_kc()];
    for (i, (label, which)) in [("k1", DegreeVariable::Layer1), ("k2", DegreeVariable::Layer2), ("kc", DegreeVariable::Combined)].into_iter().enumerate() {
        let pmf_mean = crate::degree::pmf_moments(model.pmf(which)).0;
        let (_, m2) = model.moments(which);
        let (exact, relaxed) = match epidemic_threshold(&model, which) {
            Ok(t) => (f(t.exact), f(t.relaxed)),
            Err(_) => (String::new(), String::new()),
        };
        let emp = if empirical.is_some() { f(empirical_means[i]) } else { String::new() };
        let _ = writeln!(m, "{label},{},{},{},{},{exact},{relaxed},{emp}", f(closed[i]), f(pmf_mean), f(m2), f(model.variance(which)));
    }
    out.write("degree_moments.csv", &m)?;
    println!("E[K1]={:.6} E[K2]={:.6} E[Kc]={:.6}", closed[0], closed[1], closed[2]);
    Ok(())
}

fn cmd_equilibrium(cfg: &mut RunConfig, out: &mut Outputs) -> CliResult<()> {
    let eq = cfg.equilibrium.clone();
    if !eq.poisson_means.is_empty() {
        let alphas = if eq.alpha_grid.is_empty() { (1..=20).map(|i| i as f64 * 0.05).collect() } else { eq.alpha_grid.clone() };
        let mut csv = String::from("mean_degree,alpha,theta_exact,theta_bound,gap,aggregate\n");
        for &mean in &eq.poisson_means {
            let pmf = poisson_pmf(mean, default_k_max(mean));
            for &alpha in &alphas {
                let s = solve_theta(&pmf, alpha, eq.tol, eq.max_iter)?;
                let bound = theta_lower_bound(alpha, mean);
                let _ = writeln!(csv, "{},{},{},{},{},{}", f(mean), f(alpha), f(s.theta), f(bound), f(s.theta - bound), f(s.aggregate));
            }
        }
        out.write("equilibrium_bound.csv", &csv)?;
        if let Some(tr) = eq.trajectory {
            let alpha = eq.alpha.unwrap_or(0.3);
            let mut series = Vec::new();
            for &mean in &eq.poisson_means {
                let pmf = poisson_pmf(mean, default_k_max(mean));
                series.push(integrate_single(&pmf, alpha, tr.initial_fraction, tr.horizon, tr.step)?);
            }
            let mut csv = String::from("time");
            for &mean in &eq.poisson_means {
                let _ = write!(csv, ",aggregate_mean_{}", f(mean));
            }
            csv.push('\n');
            for (i, t) in series[0].times.iter().enumerate() {
                csv.push_str(&f(*t));
                for s in &series {
                    let _ = write!(csv, ",{}", f(s.aggregate[i]));
                }
                csv.push('\n');
            }
            out.write("equilibrium_trajectory.csv", &csv)?;
        }
        println!("wrote exact-versus-bound table for {} mean degrees", eq.poisson_means.len());
        return Ok(());
    }

    let params = cfg.network.params()?;
    cfg.threat.validate()?;
    let rates = spreading_rates(&cfg.threat);
    let (a1, a2, ac) = match eq.alpha {
        Some(a) => (a, a, a),
        None => (rates.alpha1, rates.alpha2, rates.alphac),
    };
    let model = degree_moments(&params)?;
    let s1 = solve_theta(&model.pmf_k1, a1, eq.tol, eq.max_iter)?;
    let s2 = solve_theta(&model.pmf_k2, a2, eq.tol, eq.max_iter)?;
    let sc = solve_theta(&model.pmf_kc, ac, eq.tol, eq.max_iter)?;
    let dual = solve_dual(&model.pmf_k1, &model.pmf_k2, a1, a2, eq.tol, eq.max_iter)?;

    let mut summary = String::from("message,alpha,mean_degree,theta,theta_bound,aggregate,iterations\n");
    for (label, alpha, mean, s) in [("layer1", a1, model.mean_k1, &s1), ("layer2", a2, model.mean_k2, &s2), ("combined", ac, model.mean_kc, &sc)] {
        let _ = writeln!(summary, "{label},{},{},{},{},{},{}", f(alpha), f(mean), f(s.theta), f(theta_lower_bound(alpha, mean)), f(s.aggregate), s.iterations);
    }
    let _ = writeln!(summary, "both,,,,,{},", f(dual.aggregate_ii));
    out.write("equilibrium_summary.csv", &summary)?;

    let rows = s1.informed_by_k.len().max(s2.informed_by_k.len()).max(sc.informed_by_k.len());
    let mut by_k = String::from("k,informed_k1,informed_k2,informed_kc\n");
    let cell = |v: &[f64], k: usize| v.get(k).map_or_else(String::new, |x| f(*x));
    for k in 0..rows {
        let _ = writeln!(by_k, "{k},{},{},{}", cell(&s1.informed_by_k, k), cell(&s2.informed_by_k, k), cell(&sc.informed_by_k, k));
    }
    out.write("equilibrium_by_degree.csv", &by_k)?;

    let mut ii = String::from("k,l,iu,ui,ii\n");
    for k in 0..dual.ii.len() {
        for l in 0..dual.ii[k].len() {
            let _ = writeln!(ii, "{k},{l},{},{},{}", f(dual.iu[k][l]), f(dual.ui[k][l]), f(dual.ii[k][l]));
        }
    }
    out.write("equilibrium_ii.csv", &ii)?;

    if let Some(tr) = eq.trajectory {
        let traj = integrate_single(&model.pmf_kc, ac, tr.initial_fraction, tr.horizon, tr.step)?;
        let mut csv = String::from("time,aggregate_combined\n");
        for (t, a) in traj.times.iter().zip(&traj.aggregate) {
            let _ = writeln!(csv, "{},{}", f(*t), f(*a));
        }
        out.write("equilibrium_trajectory.csv", &csv)?;
    }
    println!("theta1={:.6} theta2={:.6} thetac={:.6} ii={:.6}", s1.theta, s2.theta, sc.theta, dual.aggregate_ii);
    Ok(())
}

fn merge_series(single: &[TimePoint], dual: &[TimePoint]) -> String {
    let cell = |v: Option<f64>| v.map_or_else(String::new, f);
    let mut csv = String::from("replication,step,frac1,frac2,frac_both,frac_combined\n");
    for (s, d) in single.iter().zip(dual) {
        let _ = writeln!(csv, "0,{},{},{},{},{}", s.step, cell(d.informed_1), cell(d.informed_2), cell(d.informed_both), cell(s.informed_combined));
    }
    csv
}

fn cmd_simulate(cfg: &mut RunConfig, out: &mut Outputs) -> CliResult<()> {
    let params = cfg.network.params()?;
    cfg.threat.validate()?;
    let region = resolve_region(cfg, &params)?;
    cfg.sim.seed = sub_seed(cfg.seed, SEED_SIM);
    let rates = spreading_rates(&cfg.threat);
    let graph = sample_graph(&params, &region, sub_seed(cfg.seed, SEED_GRAPH))?;
    let single = simulate_single(&graph, rates.alphac, &cfg.sim)?;
    let dual = simulate_dual(&graph, rates.alpha1, rates.alpha2, &cfg.sim)?;
    let model = degree_moments(&params)?;
    let mf1 = solve_theta(&model.pmf_k1, rates.alpha1, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let mf2 = solve_theta(&model.pmf_k2, rates.alpha2, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let mfc = solve_theta(&model.pmf_kc, rates.alphac, DEFAULT_TOL, DEFAULT_MAX_ITER)?;

    let mut csv = String::from("measure,mc_mean,mc_std_error,mean_field,gap,extinctions,replications\n");
    let rows = [
        ("layer1", dual.informed_fraction_1, mf1.aggregate, dual.extinctions),
        ("layer2", dual.informed_fraction_2, mf2.aggregate, dual.extinctions),
        ("both", dual.informed_fraction_both, mf1.aggregate * mf2.aggregate, dual.extinctions),
        ("combined", single.informed_fraction_combined, mfc.aggregate, single.extinctions),
    ];
    for (label, est, mf, ext) in rows {
        let est = est.unwrap_or(crate::montecarlo::Estimate::zero());
        let _ = writeln!(csv, "{label},{},{},{},{},{ext},{}", f(est.mean), f(est.std_error), f(mf), f((est.mean - mf).abs()), cfg.sim.replications);
    }
    out.write("simulate.csv", &csv)?;
    if let (Some(s), Some(d)) = (&single.timeseries, &dual.timeseries) {
        out.write("simulate_timeseries.csv", &merge_series(s, d))?;
    }
    println!("nodes={} combined={:.6}", graph.node_count(), single.informed_fraction_combined.map_or(0.0, |e| e.mean));
    Ok(())
}

fn status_str(s: DesignStatus) -> &'static str {
    match s {
        DesignStatus::Optimal => "optimal",
        DesignStatus::Infeasible => "infeasible",
    }
}

pub const SWEEP_HEADER: &str = "value,status,p,lambda,r1_m,r2_m,cost,slack_combined,slack_layer1,slack_layer2";

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut csv = format!("{SWEEP_HEADER}\n");
    for row in rows {
        let s = &row.solution;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            f(row.value),
            status_str(s.status),
            f(s.params.p),
            f(s.params.lambda),
            f(s.params.r1 * 1000.0),
            f(s.params.r2 * 1000.0),
            f(s.cost),
            f(s.slacks.combined),
            f(s.slacks.layer1),
            f(s.slacks.layer2)
        );
    }
    csv
}

#[derive(Serialize)]
struct DesignReport<'a> {
    status: &'static str,
    p: f64,
    lambda: f64,
    r1_m: f64,
    r2_m: f64,
    cost: f64,
    solution: &'a DesignSolution,
}

fn cmd_design(cfg: &mut RunConfig, out: &mut Outputs) -> CliResult<()> {
    let mission = cfg.mission.to_mission(cfg.threat);
    cfg.mission = cfg.mission.resolved(&mission);
    let sol = optimize(&mission)?;
    let report = DesignReport {
        status: status_str(sol.status),
        p: sol.params.p,
        lambda: sol.params.lambda,
        r1_m: sol.params.r1 * 1000.0,
        r2_m: sol.params.r2 * 1000.0,
        cost: sol.cost,
        solution: &sol,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    out.write("design.json", &(json + "\n"))?;
    if let Some(sw) = &cfg.design.sweep {
        let rows = sweep(&mission, sw.variable, &sw.grid)?;
        out.write("design_sweep.csv", &sweep_csv(&rows))?;
    }
    println!("status={} cost={:.6}", status_str(sol.status), sol.cost);
    Ok(())
}

pub const TRACE_HEADER: &str =
    "time,lambda1_hat,lambda2_hat,t1_hat,t2_hat,tc_hat,delta,delta_hat,recomputed,p,lambda,r1_m,r2_m,added_type1,added_type2,cumulative_cost,status";

fn trace_csv(trace: &ReconfigTrace) -> String {
    let mut csv = format!("{TRACE_HEADER}\n");
    for r in &trace.records {
        let status = match r.status {
            CheckStatus::Ok => "ok",
            CheckStatus::Infeasible => "infeasible",
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{status}",
            r.time,
            f(r.lambda1_hat),
            f(r.lambda2_hat),
            f(r.t1_hat),
            f(r.t2_hat),
            f(r.tc_hat),
            f(r.delta),
            f(r.delta_hat),
            r.recomputed,
            f(r.params.p),
            f(r.params.lambda),
            f(r.params.r1 * 1000.0),
            f(r.params.r2 * 1000.0),
            f(r.added_type1),
            f(r.added_type2),
            f(r.cumulative_cost)
        );
    }
    csv
}

fn cmd_reconfig(cfg: &mut RunConfig, out: &mut Outputs) -> CliResult<()> {
    let mission = cfg.mission.to_mission(cfg.threat);
    cfg.mission = cfg.mission.resolved(&mission);
    let rc = ReconfigConfig {
        t_r: cfg.reconfig.t_r,
        epsilon: cfg.reconfig.epsilon,
        horizon: cfg.reconfig.horizon,
        target_nodes: cfg.reconfig.target_nodes,
        sim: cfg.sim,
        seed: sub_seed(cfg.seed, SEED_MISSION),
    };
    let trace = run_mission(&mission, &cfg.reconfig.scenario, &rc)?;
    out.write("reconfig_trace.csv", &trace_csv(&trace))?;
    println!("checks={} recomputes={} halted={}", trace.records.len(), trace.recompute_count(), trace.halted);
    Ok(())
}
