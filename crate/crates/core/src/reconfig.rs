//! Closed-loop mission: deploy the optimal design, check the network every
//! `t_r` slots, and re-optimize when dissemination drifts or the threat
//! level changes.
//!
//! The dissemination estimate at a check is read on the threshold scale:
//! `T̂ = T + (A_live - A_design)`, where `A_live` is the simulated aggregate
//! informed fraction of the surviving network and `A_design` that of a fresh
//! deployment of the current design, both simulated with the same seeds.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::degree::NetworkParams;
use crate::designer::{optimize, DesignSolution, MissionSpec};
use crate::error::{ensure, Error, Result};
use crate::geometry::{sample_ppp, DeviceType, Region};
use crate::montecarlo::{estimate_dissemination, replication_rng, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    DeviceLoss { loss_fraction_type1: f64, loss_fraction_type2: f64 },
    ThreatChange { new_delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub time: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl ScenarioEvent {
    pub fn device_loss(time: u64, type1: f64, type2: f64) -> Self {
        Self { time, kind: EventKind::DeviceLoss { loss_fraction_type1: type1, loss_fraction_type2: type2 } }
    }

    pub fn threat_change(time: u64, new_delta: f64) -> Self {
        Self { time, kind: EventKind::ThreatChange { new_delta } }
    }

    fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: f64| ensure((0.0..=1.0).contains(&x), || format!("{name} must lie in [0, 1], got {x}"));
        match self.kind {
            EventKind::DeviceLoss { loss_fraction_type1, loss_fraction_type2 } => {
                unit("loss_fraction_type1", loss_fraction_type1)?;
                unit("loss_fraction_type2", loss_fraction_type2)
            }
            EventKind::ThreatChange { new_delta } => unit("new_delta", new_delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconfigConfig {
    /// Slots between checks.
    pub t_r: u64,
    pub epsilon: f64,
    pub horizon: u64,
    /// Devices per simulated window, used to size the square torus.
    pub target_nodes: f64,
    pub sim: SimConfig,
    pub seed: u64,
}

impl Default for ReconfigConfig {
    fn default() -> Self {
        Self { t_r: 50, epsilon: 0.05, horizon: 150, target_nodes: 2000.0, sim: SimConfig::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Ok,
    /// Re-optimization found no feasible design; the mission halts here.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckRecord {
    pub time: u64,
    /// Estimated type-I density.
    pub lambda1_hat: f64,
    /// Estimated density of all devices.
    pub lambda2_hat: f64,
    pub t1_hat: f64,
    pub t2_hat: f64,
    pub tc_hat: f64,
    /// Threat level the current design was computed for.
    pub delta: f64,
    pub delta_hat: f64,
    pub recomputed: bool,
    /// Design in force after the check.
    pub params: NetworkParams,
    pub added_type1: f64,
    pub added_type2: f64,
    pub cumulative_cost: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconfigTrace {
    pub initial: DesignSolution,
    pub region: Region,
    pub records: Vec<CheckRecord>,
    pub halted: bool,
}

impl ReconfigTrace {
    pub fn recompute_count(&self) -> usize {
        self.records.iter().filter(|r| r.recomputed).count()
    }
}

/// Cost of devices added at the given ranges.
fn deployment_cost(mission: &MissionSpec, added1: f64, added2: f64, r1: f64, r2: f64) -> f64 {
    mission.w1 * added1 + mission.w2 * added2 + mission.c * (added1 * r1.powf(mission.eta) + (added1 + added2) * r2.powf(mission.eta))
}

fn params_from_densities(d1: f64, d2: f64, design: &NetworkParams) -> NetworkParams {
    let lambda = d1 + d2;
    let p = if lambda > 0.0 { d1 / lambda } else { 0.0 };
    NetworkParams { p, lambda, r1: design.r1, r2: design.r2 }
}

/// Run the mission loop to the horizon.
pub fn run_mission(mission: &MissionSpec, scenario: &[ScenarioEvent], config: &ReconfigConfig) -> Result<ReconfigTrace> {
    mission.validate()?;
    config.sim.validate()?;
    ensure(config.t_r >= 1, || "t_r must be at least 1".to_string())?;
    ensure(config.epsilon > 0.0, || format!("epsilon must be positive, got {}", config.epsilon))?;
    ensure(config.target_nodes >= 1.0, || "target_nodes must be at least 1".to_string())?;
    ensure(scenario.windows(2).all(|w| w[0].time <= w[1].time), || "scenario events must be sorted by time".to_string())?;
    for e in scenario {
        e.validate()?;
    }

    let initial = optimize(mission)?;
    if !initial.is_optimal() {
        return Err(Error::Infeasible(format!("initial design violates {:?}", initial.violated)));
    }
    let mut design = initial.params;
    let region = Region::for_density(design.lambda, config.target_nodes, 4.0 * design.r1);
    let area = region.area();
    let mut d1 = design.p * design.lambda;
    let mut d2 = (1.0 - design.p) * design.lambda;
    let mut delta = mission.threat.delta;
    let mut delta_hat = delta;
    let mut cumulative = initial.cost;
    let mut pending = scenario.iter().peekable();
    let mut records = Vec::new();
    let mut halted = false;

    let mut check = 0usize;
    let mut t = config.t_r;
    while t <= config.horizon {
        while let Some(e) = pending.next_if(|e| e.time <= t) {
            match e.kind {
                EventKind::DeviceLoss { loss_fraction_type1, loss_fraction_type2 } => {
                    d1 *= 1.0 - loss_fraction_type1;
                    d2 *= 1.0 - loss_fraction_type2;
                }
                EventKind::ThreatChange { new_delta } => delta_hat = new_delta,
            }
        }

        let mut rng = replication_rng(config.seed, check);
        let live = params_from_densities(d1, d2, &design);
        let census = sample_ppp(&live, &region, rng.next_u64())?;
        let lambda1_hat = census.count(DeviceType::I) as f64 / area;
        let lambda2_hat = census.len() as f64 / area;

        let sim = SimConfig { seed: rng.next_u64(), ..config.sim };
        let threat = mission.threat.with_delta(delta_hat);
        let reference = estimate_dissemination(&design, &threat, &region, &sim)?;
        // A window left without devices disseminates nothing.
        let observed = match estimate_dissemination(&live, &threat, &region, &sim) {
            _ if live.lambda <= 0.0 => None,
            Err(Error::NoData) => None,
            other => Some(other?),
        };
        let shift = |target: f64, reference: f64, observed: Option<f64>| target + (observed.unwrap_or(0.0) - reference);
        let t1_hat = shift(mission.t1, reference.t1.mean, observed.map(|o| o.t1.mean));
        let t2_hat = shift(mission.t2, reference.t2.mean, observed.map(|o| o.t2.mean));
        let tc_hat = shift(mission.tc, reference.tc.mean, observed.map(|o| o.tc.mean));

        let drift = [(mission.t1, t1_hat), (mission.t2, t2_hat), (mission.tc, tc_hat)].iter().any(|(a, b)| (a - b).abs() >= config.epsilon);
        let recomputed = drift || delta_hat != delta;
        let mut record = CheckRecord {
            time: t,
            lambda1_hat,
            lambda2_hat,
            t1_hat,
            t2_hat,
            tc_hat,
            delta,
            delta_hat,
            recomputed,
            params: design,
            added_type1: 0.0,
            added_type2: 0.0,
            cumulative_cost: cumulative,
            status: CheckStatus::Ok,
        };
        if recomputed {
            let solution = optimize(&mission.with_delta(delta_hat))?;
            if !solution.is_optimal() {
                record.status = CheckStatus::Infeasible;
                records.push(record);
                halted = true;
                break;
            }
            let new = solution.params;
            let added1 = (new.p * new.lambda - lambda1_hat).max(0.0);
            let added2 = ((1.0 - new.p) * new.lambda - (lambda2_hat - lambda1_hat)).max(0.0);
            d1 += added1;
            d2 += added2;
            cumulative += deployment_cost(mission, added1, added2, new.r1, new.r2);
            design = new;
            delta = delta_hat;
            record.params = new;
            record.added_type1 = added1;
            record.added_type2 = added2;
            record.cumulative_cost = cumulative;
        }
        records.push(record);
        check += 1;
        t += config.t_r;
    }
    Ok(ReconfigTrace { initial, region, records, halted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast() -> ReconfigConfig {
        ReconfigConfig {
            t_r: 10,
            horizon: 30,
            target_nodes: 400.0,
            sim: SimConfig { burn_in: 200, measure_steps: 100, replications: 3, ..SimConfig::default() },
            seed: 11,
            ..ReconfigConfig::default()
        }
    }

    #[test]
    fn quiet_mission_never_recomputes() {
        let trace = run_mission(&MissionSpec::intelligence(0.0), &[], &fast()).unwrap();
        assert_eq!(trace.records.len(), 3);
        assert_eq!(trace.recompute_count(), 0);
        for r in &trace.records {
            assert_eq!((r.t1_hat, r.t2_hat, r.tc_hat), (0.6, 0.6, 0.8));
        }
    }

    #[test]
    fn same_threat_does_not_trigger() {
        let trace = run_mission(&MissionSpec::intelligence(0.2), &[ScenarioEvent::threat_change(10, 0.2)], &fast()).unwrap();
        assert_eq!(trace.recompute_count(), 0);
    }

    #[test]
    fn threat_change_triggers_once() {
        let trace = run_mission(&MissionSpec::intelligence(0.0), &[ScenarioEvent::threat_change(15, 0.3)], &fast()).unwrap();
        let flags: Vec<bool> = trace.records.iter().map(|r| r.recomputed).collect();
        assert_eq!(flags, vec![false, true, false]);
        let r = &trace.records[1];
        assert_eq!(r.delta, 0.0);
        assert_eq!(trace.records[2].delta, 0.3);
        assert!(r.params.lambda > trace.initial.params.lambda);
        assert!(r.added_type1 > 0.0 && r.added_type2 > 0.0);
    }

    #[test]
    fn infeasible_threat_halts() {
        let trace = run_mission(&MissionSpec::encounter(0.0), &[ScenarioEvent::threat_change(10, 0.9)], &fast()).unwrap();
        assert!(trace.halted);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].status, CheckStatus::Infeasible);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = MissionSpec::intelligence(0.0);
        assert!(run_mission(&m, &[], &ReconfigConfig { t_r: 0, ..fast() }).is_err());
        assert!(run_mission(&m, &[], &ReconfigConfig { epsilon: 0.0, ..fast() }).is_err());
        let unsorted = [ScenarioEvent::threat_change(20, 0.1), ScenarioEvent::threat_change(10, 0.1)];
        assert!(run_mission(&m, &unsorted, &fast()).is_err());
        assert!(run_mission(&MissionSpec::encounter(0.9), &[], &fast()).is_err());
    }

    #[test]
    fn scenario_json_shape() {
        let e = ScenarioEvent::device_loss(50, 0.5, 0.25);
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"time":50,"kind":"device_loss","loss_fraction_type1":0.5,"loss_fraction_type2":0.25}"#);
        let back: ScenarioEvent = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
