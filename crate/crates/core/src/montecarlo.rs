//! Stochastic SIS dissemination on sampled multiplex graphs.
//!
//! Time advances in synchronous slots of length `h`. During a slot each
//! node's informed-neighbour count is frozen, and its two-state chain (rate
//! `α n` up, rate 1 down) is advanced exactly over `h`:
//!
//! * uninformed to informed with `αn/(αn+1) · (1 - e^{-(αn+1)h})`
//! * informed to uninformed with `1/(αn+1) · (1 - e^{-(αn+1)h})`
//!
//! For small `h` these reduce to `αnh` and `h`.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degree::{spreading_rates, NetworkParams, ThreatModel};
use crate::error::{ensure, Error, Result};
use crate::geometry::{sample_graph, MultiplexGraph, Region};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Slot length `h` in units of the mean informed lifetime.
    pub time_step: f64,
    pub burn_in: usize,
    pub measure_steps: usize,
    pub replications: usize,
    pub seed: u64,
    /// Reseed one random node after global extinction.
    pub quasi_stationary: bool,
    /// Fraction of nodes informed at start, per message.
    pub initial_fraction: f64,
    /// Keep the per-step fractions of the first replication.
    pub record_timeseries: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            time_step: 0.1,
            burn_in: 2000,
            measure_steps: 1000,
            replications: 20,
            seed: 0,
            quasi_stationary: true,
            initial_fraction: 0.1,
            record_timeseries: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.time_step > 0.0 && self.time_step <= 1.0, || format!("time step must lie in (0, 1], got {}", self.time_step))?;
        ensure(self.measure_steps >= 1, || "measure_steps must be at least 1".to_string())?;
        ensure(self.replications >= 1, || "replications must be at least 1".to_string())?;
        ensure((0.0..=1.0).contains(&self.initial_fraction), || format!("initial fraction must lie in [0, 1], got {}", self.initial_fraction))
    }
}

/// Mean over replications with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { mean: 0.0, std_error: 0.0 };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, std_error: 0.0 };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, std_error: (var / n as f64).sqrt() }
    }

    pub fn zero() -> Self {
        Self { mean: 0.0, std_error: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimePoint {
    pub step: usize,
    pub time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub informed_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub informed_2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub informed_both: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub informed_combined: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub informed_fraction_1: Option<Estimate>,
    pub informed_fraction_2: Option<Estimate>,
    pub informed_fraction_both: Option<Estimate>,
    pub informed_fraction_combined: Option<Estimate>,
    /// Replications in which every node was uninformed at some step.
    pub extinctions: usize,
    pub replications: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timeseries: Option<Vec<TimePoint>>,
}

/// Which edges carry a single message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Links {
    Layer1,
    Layer2,
    /// Both layers; a type-I pair within `r2` is linked twice.
    Combined,
}

/// Independent stream per replication derived from the master seed.
pub fn replication_rng(seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

/// Per-slot flip probabilities indexed by informed-neighbour count.
struct FlipTable {
    up: Vec<f64>,
    down: Vec<f64>,
}

impl FlipTable {
    fn new(alpha: f64, h: f64, max_count: usize) -> Self {
        let mut up = Vec::with_capacity(max_count + 1);
        let mut down = Vec::with_capacity(max_count + 1);
        for n in 0..=max_count {
            let a = alpha * n as f64;
            let mix = -(-(a + 1.0) * h).exp_m1();
            up.push(a / (a + 1.0) * mix);
            down.push(mix / (a + 1.0));
        }
        Self { up, down }
    }

    fn flip<R: Rng>(&self, rng: &mut R, informed: bool, count: usize) -> bool {
        if informed {
            rng.random::<f64>() < self.down[count]
        } else {
            count > 0 && rng.random::<f64>() < self.up[count]
        }
    }
}

/// One message spreading over a fixed neighbour multiset.
struct Contagion<'a> {
    layers: Vec<&'a [Vec<u32>]>,
    informed: Vec<bool>,
    counts: Vec<usize>,
    total: usize,
}

impl<'a> Contagion<'a> {
    fn new(graph: &'a MultiplexGraph, links: Links) -> Self {
        let layers: Vec<&[Vec<u32>]> = match links {
            Links::Layer1 => vec![&graph.adj1],
            Links::Layer2 => vec![&graph.adj2],
            Links::Combined => vec![&graph.adj1, &graph.adj2],
        };
        let n = graph.node_count();
        Self { layers, informed: vec![false; n], counts: vec![0; n], total: 0 }
    }

    fn max_count(&self) -> usize {
        (0..self.informed.len()).map(|i| self.layers.iter().map(|adj| adj[i].len()).sum::<usize>()).max().unwrap_or(0)
    }

    fn toggle(&mut self, node: usize) {
        let now = !self.informed[node];
        self.informed[node] = now;
        for adj in &self.layers {
            for &v in &adj[node] {
                if now {
                    self.counts[v as usize] += 1;
                } else {
                    self.counts[v as usize] -= 1;
                }
            }
        }
        if now {
            self.total += 1;
        } else {
            self.total -= 1;
        }
    }

    fn seed_random<R: Rng>(&mut self, rng: &mut R, fraction: f64) {
        let n = self.informed.len();
        let m = ((fraction * n as f64).round() as usize).min(n);
        for i in sample(rng, n, m).into_vec() {
            self.toggle(i);
        }
    }

    fn fraction(&self) -> f64 {
        self.total as f64 / self.informed.len() as f64
    }
}

struct RepOutcome {
    values: [f64; 4],
    extinct: bool,
    series: Vec<TimePoint>,
}

/// Inform one uniformly chosen node of an extinct message.
fn regenerate<R: Rng>(rng: &mut R, c: &mut Contagion<'_>) -> usize {
    let node = rng.random_range(0..c.informed.len());
    c.toggle(node);
    node
}

fn run_single<R: Rng>(graph: &MultiplexGraph, links: Links, alpha: f64, config: &SimConfig, rng: &mut R, record: bool) -> RepOutcome {
    let mut c = Contagion::new(graph, links);
    let table = FlipTable::new(alpha, config.time_step, c.max_count());
    let n = graph.node_count();
    c.seed_random(rng, config.initial_fraction);
    let mut extinct = false;
    let mut flips = Vec::new();
    let mut acc = 0.0;
    let mut series = Vec::new();
    for step in 1..=config.burn_in + config.measure_steps {
        flips.clear();
        for i in 0..n {
            if table.flip(rng, c.informed[i], c.counts[i]) {
                flips.push(i);
            }
        }
        for &i in &flips {
            c.toggle(i);
        }
        if c.total == 0 {
            extinct = true;
            if config.quasi_stationary && alpha > 0.0 {
                regenerate(rng, &mut c);
            }
        }
        if step > config.burn_in {
            acc += c.fraction();
        }
        if record {
            series.push(TimePoint {
                step,
                time: step as f64 * config.time_step,
                informed_1: None,
                informed_2: None,
                informed_both: None,
                informed_combined: Some(c.fraction()),
            });
        }
    }
    let mean = acc / config.measure_steps as f64;
    RepOutcome { values: [0.0, 0.0, 0.0, mean], extinct, series }
}

fn run_dual<R: Rng>(graph: &MultiplexGraph, alpha1: f64, alpha2: f64, config: &SimConfig, rng: &mut R, record: bool) -> RepOutcome {
    let mut m1 = Contagion::new(graph, Links::Layer1);
    let mut m2 = Contagion::new(graph, Links::Layer2);
    let t1 = FlipTable::new(alpha1, config.time_step, m1.max_count());
    let t2 = FlipTable::new(alpha2, config.time_step, m2.max_count());
    let n = graph.node_count();
    m1.seed_random(rng, config.initial_fraction);
    m2.seed_random(rng, config.initial_fraction);
    let mut both = (0..n).filter(|&i| m1.informed[i] && m2.informed[i]).count();
    let mut extinct = false;
    let (mut flips1, mut flips2) = (Vec::new(), Vec::new());
    let mut acc = [0.0; 3];
    let mut series = Vec::new();
    for step in 1..=config.burn_in + config.measure_steps {
        flips1.clear();
        flips2.clear();
        for i in 0..n {
            let f1 = t1.flip(rng, m1.informed[i], m1.counts[i]);
            let f2 = t2.flip(rng, m2.informed[i], m2.counts[i]);
            // At most one status change per node per slot.
            match (f1, f2) {
                (true, true) => {
                    if rng.random::<bool>() {
                        flips1.push(i)
                    } else {
                        flips2.push(i)
                    }
                }
                (true, false) => flips1.push(i),
                (false, true) => flips2.push(i),
                _ => {}
            }
        }
        for &i in &flips1 {
            both = if m1.informed[i] { both - usize::from(m2.informed[i]) } else { both + usize::from(m2.informed[i]) };
            m1.toggle(i);
        }
        for &i in &flips2 {
            both = if m2.informed[i] { both - usize::from(m1.informed[i]) } else { both + usize::from(m1.informed[i]) };
            m2.toggle(i);
        }
        if m1.total == 0 {
            extinct = true;
            if config.quasi_stationary && alpha1 > 0.0 {
                both += usize::from(m2.informed[regenerate(rng, &mut m1)]);
            }
        }
        if m2.total == 0 {
            extinct = true;
            if config.quasi_stationary && alpha2 > 0.0 {
                both += usize::from(m1.informed[regenerate(rng, &mut m2)]);
            }
        }
        debug_assert!(both <= m1.total.min(m2.total));
        let fb = both as f64 / n as f64;
        if step > config.burn_in {
            acc[0] += m1.fraction();
            acc[1] += m2.fraction();
            acc[2] += fb;
        }
        if record {
            series.push(TimePoint {
                step,
                time: step as f64 * config.time_step,
                informed_1: Some(m1.fraction()),
                informed_2: Some(m2.fraction()),
                informed_both: Some(fb),
                informed_combined: None,
            });
        }
    }
    let k = config.measure_steps as f64;
    RepOutcome { values: [acc[0] / k, acc[1] / k, acc[2] / k, 0.0], extinct, series }
}

fn check_graph(graph: &MultiplexGraph) -> Result<()> {
    if graph.is_empty() {
        Err(Error::NoData)
    } else {
        Ok(())
    }
}

fn check_rate(alpha: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&alpha), || format!("spreading rate must lie in [0, 1], got {alpha}"))
}

fn collect(outcomes: Vec<RepOutcome>, slots: [bool; 4], record: bool) -> SimResult {
    let column = |j: usize| {
        if slots[j] {
            let xs: Vec<f64> = outcomes.iter().map(|o| o.values[j]).collect();
            Some(Estimate::from_samples(&xs))
        } else {
            None
        }
    };
    SimResult {
        informed_fraction_1: column(0),
        informed_fraction_2: column(1),
        informed_fraction_both: column(2),
        informed_fraction_combined: column(3),
        extinctions: outcomes.iter().filter(|o| o.extinct).count(),
        replications: outcomes.len(),
        timeseries: if record { outcomes.into_iter().next().map(|o| o.series) } else { None },
    }
}

/// Single message over the chosen links.
pub fn simulate_single_on(graph: &MultiplexGraph, links: Links, alpha: f64, config: &SimConfig) -> Result<SimResult> {
    check_graph(graph)?;
    check_rate(alpha)?;
    config.validate()?;
    let outcomes: Vec<RepOutcome> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(config.seed, r);
            run_single(graph, links, alpha, config, &mut rng, config.record_timeseries && r == 0)
        })
        .collect();
    Ok(collect(outcomes, [false, false, false, true], config.record_timeseries))
}

/// Single message over the combined adjacency.
pub fn simulate_single(graph: &MultiplexGraph, alpha: f64, config: &SimConfig) -> Result<SimResult> {
    simulate_single_on(graph, Links::Combined, alpha, config)
}

/// Message 1 over layer 1 and message 2 over layer 2, run jointly.
pub fn simulate_dual(graph: &MultiplexGraph, alpha1: f64, alpha2: f64, config: &SimConfig) -> Result<SimResult> {
    check_graph(graph)?;
    check_rate(alpha1)?;
    check_rate(alpha2)?;
    config.validate()?;
    let outcomes: Vec<RepOutcome> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(config.seed, r);
            run_dual(graph, alpha1, alpha2, config, &mut rng, config.record_timeseries && r == 0)
        })
        .collect();
    Ok(collect(outcomes, [true, true, true, false], config.record_timeseries))
}

/// Network-wide informed fractions per message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dissemination {
    pub t1: Estimate,
    pub t2: Estimate,
    pub tc: Estimate,
    pub extinctions: usize,
}

/// Sample a fresh graph per replication and measure all three messages.
pub fn estimate_dissemination(params: &NetworkParams, threat: &ThreatModel, region: &Region, config: &SimConfig) -> Result<Dissemination> {
    params.validate()?;
    threat.validate()?;
    region.validate()?;
    config.validate()?;
    let rates = spreading_rates(threat);
    let outcomes: Vec<Result<(RepOutcome, RepOutcome)>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(config.seed, r);
            let graph = sample_graph(params, region, rng.next_u64())?;
            check_graph(&graph)?;
            let single = run_single(&graph, Links::Combined, rates.alphac, config, &mut rng, false);
            let dual = run_dual(&graph, rates.alpha1, rates.alpha2, config, &mut rng, false);
            Ok((single, dual))
        })
        .collect();
    let mut t1 = Vec::with_capacity(outcomes.len());
    let mut t2 = Vec::with_capacity(outcomes.len());
    let mut tc = Vec::with_capacity(outcomes.len());
    let mut extinctions = 0;
    for o in outcomes {
        let (single, dual) = o?;
        t1.push(dual.values[0]);
        t2.push(dual.values[1]);
        tc.push(single.values[3]);
        extinctions += usize::from(single.extinct || dual.extinct);
    }
    Ok(Dissemination {
        t1: Estimate::from_samples(&t1),
        t2: Estimate::from_samples(&t2),
        tc: Estimate::from_samples(&tc),
        extinctions,
    })
}
