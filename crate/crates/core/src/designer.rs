//! Minimum-cost network design under dissemination thresholds.
//!
//! A threshold `T` at spreading rate `α` becomes a required mean degree
//! `𝒯 = 1/(α(1-T))`. The design problem is
//!
//! ```text
//! minimize   w1 p λ + w2 (1-p) λ + c (p λ r1^η + λ r2^η)
//! subject to E[K1] + E[K2] ≥ 𝒯c,  E[K1] ≥ 𝒯1,  E[K2] ≥ 𝒯2,
//!            box bounds,  r2 ≤ r1
//! ```
//!
//! with `E[K1] = p²λπr1²` and `E[K2] = λπr2²`. For fixed `(p, λ)` the problem
//! in `(r1², r2²)` is convex with linear constraints and is solved exactly;
//! the outer two dimensions are covered by a grid and refined by pattern
//! search from the eight best cells.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degree::{spreading_rates, NetworkParams, ParamBounds, ThreatModel};
use crate::error::{ensure, Error, Result};

/// Relative slack below which a mean-degree constraint counts as active.
pub const ACTIVE_TOL: f64 = 1e-6;
/// Slack a reported optimum may show from rounding.
pub const FEASIBILITY_TOL: f64 = 1e-9;

const OUTER_GRID: usize = 161;
const STARTS: usize = 8;
const GOLDEN_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub t1: f64,
    pub t2: f64,
    pub tc: f64,
    pub threat: ThreatModel,
    pub bounds: ParamBounds,
    pub w1: f64,
    pub w2: f64,
    pub c: f64,
    pub eta: f64,
    /// Degree at which the thresholds are imposed. `None` uses the mean
    /// degree itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_degree: Option<f64>,
}

impl MissionSpec {
    fn with_thresholds(t1: f64, t2: f64, tc: f64, delta: f64) -> Self {
        Self {
            t1,
            t2,
            tc,
            threat: ThreatModel::new(delta),
            bounds: ParamBounds::battlefield(),
            w1: 100.0,
            w2: 50.0,
            c: 100.0,
            eta: 4.0,
            anchor_degree: None,
        }
    }

    /// Both intra-layer messages at 0.6, network-wide message at 0.8.
    pub fn intelligence(delta: f64) -> Self {
        Self::with_thresholds(0.6, 0.6, 0.8, delta)
    }

    /// Both intra-layer messages at 0.8, network-wide message at 0.6.
    pub fn encounter(delta: f64) -> Self {
        Self::with_thresholds(0.8, 0.8, 0.6, delta)
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.threat = self.threat.with_delta(delta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t1", self.t1), ("t2", self.t2), ("tc", self.tc)] {
            ensure((0.0..1.0).contains(&t), || format!("{name} must lie in [0, 1), got {t}"))?;
        }
        self.threat.validate()?;
        self.bounds.validate()?;
        ensure(self.w1 >= 0.0 && self.w2 >= 0.0 && self.c >= 0.0, || "cost weights must be nonnegative".to_string())?;
        ensure(self.eta >= 2.0, || format!("path-loss exponent must be at least 2, got {}", self.eta))?;
        if let Some(k) = self.anchor_degree {
            ensure(k > 0.0 && k.is_finite(), || format!("anchor degree must be positive, got {k}"))?;
        }
        Ok(())
    }

    /// Required mean degrees `[𝒯c, 𝒯1, 𝒯2]`; unattainable thresholds map to
    /// infinity.
    pub fn required_degrees(&self) -> [f64; 3] {
        let rates = spreading_rates(&self.threat);
        let map = |t: f64, alpha: f64| {
            let r = match self.anchor_degree {
                Some(k) => threshold_map_anchored(t, alpha, k),
                None => threshold_map(t, alpha),
            };
            r.unwrap_or(f64::INFINITY)
        };
        [map(self.tc, rates.alphac), map(self.t1, rates.alpha1), map(self.t2, rates.alpha2)]
    }
}

/// `𝒯 = 1/(α(1-T))`.
pub fn threshold_map(t: f64, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) || alpha <= 0.0 || alpha.is_nan() {
        return Err(Error::UnattainableThreshold { threshold: t, alpha });
    }
    Ok(1.0 / (alpha * (1.0 - t)))
}

/// Required mean degree when the threshold is imposed on devices of degree
/// `k`: `1/(α - T/(k(1-T)))`.
pub fn threshold_map_anchored(t: f64, alpha: f64, k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) || alpha <= 0.0 || k <= 0.0 {
        return Err(Error::UnattainableThreshold { threshold: t, alpha });
    }
    let denom = alpha - t / (k * (1.0 - t));
    if denom <= 0.0 {
        return Err(Error::UnattainableThreshold { threshold: t, alpha });
    }
    Ok(1.0 / denom)
}

/// Deployment plus power cost per unit area, ranges in km.
pub fn cost(params: &NetworkParams, mission: &MissionSpec) -> f64 {
    let NetworkParams { p, lambda, r1, r2 } = *params;
    mission.w1 * p * lambda + mission.w2 * (1.0 - p) * lambda + mission.c * (p * lambda * r1.powf(mission.eta) + lambda * r2.powf(mission.eta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Combined,
    Layer1,
    Layer2,
    PMin,
    PMax,
    LambdaMin,
    LambdaMax,
    R1Min,
    R1Max,
    R2Min,
    R2Max,
    RangeOrder,
}

/// Residuals of the three mean-degree constraints; negative means violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slacks {
    pub combined: f64,
    pub layer1: f64,
    pub layer2: f64,
    pub required: [f64; 3],
    pub within_bounds: bool,
    pub range_order: bool,
}

impl Slacks {
    pub fn degree_slacks(&self) -> [f64; 3] {
        [self.combined, self.layer1, self.layer2]
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.degree_slacks().iter().all(|&s| s >= -tol) && self.within_bounds && self.range_order
    }

    pub fn violated(&self, tol: f64) -> Vec<Constraint> {
        [Constraint::Combined, Constraint::Layer1, Constraint::Layer2]
            .into_iter()
            .zip(self.degree_slacks())
            .filter(|(_, s)| *s < -tol || s.is_nan())
            .map(|(c, _)| c)
            .collect()
    }
}

pub fn feasible(params: &NetworkParams, mission: &MissionSpec) -> Slacks {
    let required = mission.required_degrees();
    let e1 = params.mean_k1();
    let e2 = params.mean_k2();
    Slacks {
        combined: e1 + e2 - required[0],
        layer1: e1 - required[1],
        layer2: e2 - required[2],
        required,
        within_bounds: mission.bounds.contains(params, FEASIBILITY_TOL),
        range_order: params.r2 <= params.r1 * (1.0 + FEASIBILITY_TOL),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSolution {
    /// The optimum, or the box corner when infeasible.
    pub params: NetworkParams,
    pub cost: f64,
    pub slacks: Slacks,
    pub active_set: Vec<Constraint>,
    pub status: DesignStatus,
    /// Constraints the box corner cannot meet.
    pub violated: Vec<Constraint>,
}

impl DesignSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == DesignStatus::Optimal
    }
}

fn active_set(params: &NetworkParams, slacks: &Slacks, bounds: &ParamBounds) -> Vec<Constraint> {
    let mut out = Vec::new();
    for (c, s, req) in [
        (Constraint::Combined, slacks.combined, slacks.required[0]),
        (Constraint::Layer1, slacks.layer1, slacks.required[1]),
        (Constraint::Layer2, slacks.layer2, slacks.required[2]),
    ] {
        if s < ACTIVE_TOL * req.max(1.0) {
            out.push(c);
        }
    }
    let at = |x: f64, b: f64| (x - b).abs() <= 1e-9 * b.abs().max(1.0);
    let checks = [
        (Constraint::PMin, params.p, bounds.p_min),
        (Constraint::PMax, params.p, bounds.p_max),
        (Constraint::LambdaMin, params.lambda, bounds.lambda_min),
        (Constraint::LambdaMax, params.lambda, bounds.lambda_max),
        (Constraint::R1Min, params.r1, bounds.r1_min),
        (Constraint::R1Max, params.r1, bounds.r1_max),
        (Constraint::R2Min, params.r2, bounds.r2_min),
        (Constraint::R2Max, params.r2, bounds.r2_max),
        (Constraint::RangeOrder, params.r2, params.r1),
    ];
    for (c, x, b) in checks {
        if at(x, b) {
            out.push(c);
        }
    }
    out
}

/// Candidate design with its cost, ordered by cost then by the tie-break
/// preference for smaller `λ`, `r1`, `r2`, `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    params: NetworkParams,
    cost: f64,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        self.compare(other) == Ordering::Less
    }

    fn compare(&self, other: &Candidate) -> Ordering {
        let scale = self.cost.abs().max(other.cost.abs()).max(1e-300);
        if (self.cost - other.cost).abs() > 1e-12 * scale {
            return self.cost.total_cmp(&other.cost);
        }
        let a = &self.params;
        let b = &other.params;
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.r1.total_cmp(&b.r1))
            .then(a.r2.total_cmp(&b.r2))
            .then(a.p.total_cmp(&b.p))
    }
}

fn golden_min(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if b - a <= 1e-15 * b.abs().max(1e-300) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let mut best = 0.5 * (a + b);
    for x in [lo, hi] {
        if f(x) < f(best) {
            best = x;
        }
    }
    best
}

/// Cheapest ranges for fixed `(p, λ)`, or `None` if no range pair meets
/// the constraints.
fn best_ranges(p: f64, lambda: f64, mission: &MissionSpec, req: &[f64; 3]) -> Option<Candidate> {
    let b = &mission.bounds;
    let a1 = p * p * lambda * PI;
    let a2 = lambda * PI;
    let (u_min, u_max) = (b.r1_min * b.r1_min, b.r1_max * b.r1_max);
    let (v_min, v_max) = (b.r2_min * b.r2_min, b.r2_max * b.r2_max);
    if !req.iter().all(|x| x.is_finite()) || a2 <= 0.0 {
        return None;
    }
    let u_lo = if req[1] > 0.0 {
        if a1 <= 0.0 {
            return None;
        }
        u_min.max(req[1] / a1)
    } else {
        u_min
    };
    let v_lo = v_min.max(req[2] / a2);
    if u_lo > u_max || v_lo > v_max {
        return None;
    }
    // Smallest feasible v for a given u.
    let v_of = |u: f64| v_lo.max((req[0] - a1 * u) / a2);
    let mut u_feas = u_lo.max(v_lo).max(req[0] / (a1 + a2));
    if a1 > 0.0 {
        u_feas = u_feas.max((req[0] - a2 * v_max) / a1);
    } else if req[0] - a2 * v_max > 0.0 {
        return None;
    }
    if u_feas > u_max {
        return None;
    }
    let half = mission.eta / 2.0;
    let objective = |u: f64| p * u.powf(half) + v_of(u).powf(half);
    // Past the kink where v reaches its floor the objective only grows.
    let kink = if a1 > 0.0 { (req[0] - a2 * v_lo) / a1 } else { u_feas };
    let u_hi = u_max.min(kink.max(u_feas));
    let u = if u_hi > u_feas { golden_min(u_feas, u_hi, objective) } else { u_feas };
    let v = v_of(u).min(v_max).min(u);
    let params = NetworkParams { p, lambda, r1: u.sqrt(), r2: v.sqrt() };
    Some(Candidate { params, cost: cost(&params, mission) })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![lo];
    }
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

fn refine(start: Candidate, mission: &MissionSpec, req: &[f64; 3]) -> Candidate {
    let b = &mission.bounds;
    let mut best = start;
    let mut dp = (b.p_max - b.p_min) / (OUTER_GRID - 1) as f64;
    let mut dl = (b.lambda_max - b.lambda_min) / (OUTER_GRID - 1) as f64;
    let p_floor = 1e-13 * b.p_max.max(1e-300);
    let l_floor = 1e-13 * b.lambda_max;
    while dp > p_floor || dl > l_floor {
        let mut improved = false;
        for (sp, sl) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let p = (best.params.p + sp * dp).clamp(b.p_min, b.p_max);
            let lambda = (best.params.lambda + sl * dl).clamp(b.lambda_min, b.lambda_max);
            if let Some(c) = best_ranges(p, lambda, mission, req) {
                // Strict cost descent; the tie-break only applies between
                // finished candidates, otherwise a plateau can be walked
                // indefinitely.
                if c.cost < best.cost {
                    best = c;
                    improved = true;
                }
            }
        }
        if !improved {
            dp *= 0.5;
            dl *= 0.5;
        }
    }
    best
}

fn finish(params: NetworkParams, mission: &MissionSpec, status: DesignStatus, violated: Vec<Constraint>) -> DesignSolution {
    let slacks = feasible(&params, mission);
    let active_set = active_set(&params, &slacks, &mission.bounds);
    DesignSolution { params, cost: cost(&params, mission), slacks, active_set, status, violated }
}

/// Minimum-cost feasible design, or an infeasibility certificate from the
/// box corner.
pub fn optimize(mission: &MissionSpec) -> Result<DesignSolution> {
    mission.validate()?;
    let req = mission.required_degrees();
    let corner = mission.bounds.upper_corner();
    let corner_slacks = feasible(&corner, mission);
    let violated = corner_slacks.violated(0.0);
    if !violated.is_empty() {
        return Ok(finish(corner, mission, DesignStatus::Infeasible, violated));
    }

    let b = &mission.bounds;
    let ps = linspace(b.p_min, b.p_max, OUTER_GRID);
    let ls = linspace(b.lambda_min, b.lambda_max, OUTER_GRID);
    let mut cells: Vec<Candidate> = ps
        .par_iter()
        .flat_map_iter(|&p| ls.iter().filter_map(move |&l| best_ranges(p, l, mission, &req)))
        .collect();
    cells.sort_by(|a, b| a.compare(b));

    let corner_candidate = Candidate { params: corner, cost: cost(&corner, mission) };
    let starts: Vec<Candidate> = cells.iter().take(STARTS).copied().collect();
    let refined: Vec<Candidate> = starts.par_iter().map(|&s| refine(s, mission, &req)).collect();
    let best = refined.into_iter().fold(corner_candidate, |acc, c| if c.better_than(&acc) { c } else { acc });
    Ok(finish(best.params, mission, DesignStatus::Optimal, Vec::new()))
}

/// Exhaustive check: `n⁴` grid over the box, then an `n⁴` grid spanning one
/// cell either side of the best point. Returns the best feasible point.
pub fn grid_oracle(mission: &MissionSpec, n: usize) -> Option<(NetworkParams, f64)> {
    let b = &mission.bounds;
    let axes = [
        linspace(b.p_min, b.p_max, n),
        linspace(b.lambda_min, b.lambda_max, n),
        linspace(b.r1_min, b.r1_max, n),
        linspace(b.r2_min, b.r2_max, n),
    ];
    let best = grid_search(mission, &axes)?;
    let local: Vec<Vec<f64>> = (0..4)
        .map(|d| {
            let ax = &axes[d];
            let x = [best.params.p, best.params.lambda, best.params.r1, best.params.r2][d];
            let i = ax.iter().position(|&v| v == x).unwrap_or(0);
            let lo = ax[i.saturating_sub(1)];
            let hi = ax[(i + 1).min(ax.len() - 1)];
            linspace(lo, hi, n)
        })
        .collect();
    let fine = grid_search(mission, &[local[0].clone(), local[1].clone(), local[2].clone(), local[3].clone()]);
    let out = match fine {
        Some(f) if f.better_than(&best) => f,
        _ => best,
    };
    Some((out.params, out.cost))
}

fn grid_search(mission: &MissionSpec, axes: &[Vec<f64>; 4]) -> Option<Candidate> {
    let req = mission.required_degrees();
    axes[0]
        .par_iter()
        .filter_map(|&p| {
            let mut best: Option<Candidate> = None;
            for &lambda in &axes[1] {
                for &r1 in &axes[2] {
                    for &r2 in &axes[3] {
                        if r2 > r1 {
                            continue;
                        }
                        let e1 = p * p * lambda * PI * r1 * r1;
                        let e2 = lambda * PI * r2 * r2;
                        if e1 < req[1] || e2 < req[2] || e1 + e2 < req[0] {
                            continue;
                        }
                        let params = NetworkParams { p, lambda, r1, r2 };
                        let c = Candidate { params, cost: cost(&params, mission) };
                        if best.is_none_or(|b| c.better_than(&b)) {
                            best = Some(c);
                        }
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| if b.better_than(&a) { b } else { a })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Delta,
    Tc,
    /// Both intra-layer thresholds together.
    TIntra,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub solution: DesignSolution,
}

/// One `optimize` per grid value; infeasible points are kept as rows.
pub fn sweep(mission: &MissionSpec, variable: SweepVariable, grid: &[f64]) -> Result<Vec<SweepRow>> {
    ensure(grid.windows(2).all(|w| w[0] <= w[1]), || "sweep grid must be sorted ascending".to_string())?;
    grid.iter()
        .map(|&value| {
            let mut m = *mission;
            match variable {
                SweepVariable::Delta => m.threat.delta = value,
                SweepVariable::Tc => m.tc = value,
                SweepVariable::TIntra => {
                    m.t1 = value;
                    m.t2 = value;
                }
            }
            Ok(SweepRow { value, solution: optimize(&m)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_map_values() {
        assert_eq!(threshold_map(0.8, 1.0).unwrap(), 5.000000000000001);
        assert!((threshold_map(0.6, 0.5).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(threshold_map(0.0, 0.25).unwrap(), 4.0);
        assert!(matches!(threshold_map(1.0, 0.5), Err(Error::UnattainableThreshold { .. })));
        assert!(matches!(threshold_map(0.5, 0.0), Err(Error::UnattainableThreshold { .. })));
    }

    #[test]
    fn anchored_map_at_mean_matches() {
        // With the anchor at the resulting mean degree both forms agree.
        let plain = threshold_map(0.6, 0.5).unwrap();
        let anchored = threshold_map_anchored(0.6, 0.5, plain).unwrap();
        assert!((anchored - plain).abs() < 1e-12);
        assert!(threshold_map_anchored(0.9, 0.1, 2.0).is_err());
    }

    #[test]
    fn cost_example() {
        let m = MissionSpec::intelligence(0.0);
        let params = NetworkParams::new(0.4, 15.0, 1.0, 0.5).unwrap();
        assert!((cost(&params, &m) - 1743.75).abs() < 1e-9);
        let zero = NetworkParams { p: 0.4, lambda: 0.0, r1: 1.0, r2: 0.5 };
        assert_eq!(cost(&zero, &m), 0.0);
    }

    #[test]
    fn layer1_slack_example() {
        let m = MissionSpec::intelligence(0.0);
        let params = NetworkParams::new(0.4, 15.0, 1.0, 0.5).unwrap();
        let s = feasible(&params, &m);
        assert!((s.required[1] - 2.5).abs() < 1e-12);
        assert!((s.layer1 - (0.16 * 15.0 * PI - 2.5)).abs() < 1e-12);
        assert!(s.is_feasible(0.0));
    }

    #[test]
    fn full_threat_is_infeasible() {
        let m = MissionSpec::intelligence(1.0);
        assert!(m.required_degrees().iter().all(|x| x.is_infinite()));
        let sol = optimize(&m).unwrap();
        assert_eq!(sol.status, DesignStatus::Infeasible);
        assert_eq!(sol.violated, vec![Constraint::Combined, Constraint::Layer1, Constraint::Layer2]);
    }

    #[test]
    fn encounter_corner_certificate() {
        let max_e1 = 0.16 * 15.0 * PI * 4.0;
        let critical = 1.0 - 5.0 / max_e1;
        assert!((critical - 0.8342).abs() < 1e-4);
        assert!(optimize(&MissionSpec::encounter(critical - 1e-3)).unwrap().is_optimal());
        let sol = optimize(&MissionSpec::encounter(critical + 1e-3)).unwrap();
        assert_eq!(sol.status, DesignStatus::Infeasible);
        assert!(sol.violated.contains(&Constraint::Layer1));
    }

    #[test]
    fn intelligence_optimum_shape() {
        let sol = optimize(&MissionSpec::intelligence(0.0)).unwrap();
        assert!(sol.is_optimal());
        let p = sol.params;
        assert!(p.r1 >= p.r2);
        assert!((1.0 - p.p) * p.lambda >= p.p * p.lambda);
        assert!(sol.slacks.is_feasible(FEASIBILITY_TOL));
        assert!(!sol.active_set.is_empty());
    }

    #[test]
    fn solver_not_worse_than_oracle() {
        let m = MissionSpec::intelligence(0.2);
        let sol = optimize(&m).unwrap();
        let (_, oracle) = grid_oracle(&m, 20).unwrap();
        assert!(sol.cost <= oracle * 1.01, "{} vs {}", sol.cost, oracle);
    }

    #[test]
    fn tie_break_prefers_smaller_lambda() {
        let a = Candidate { params: NetworkParams { p: 0.2, lambda: 3.0, r1: 1.0, r2: 0.5 }, cost: 10.0 };
        let b = Candidate { params: NetworkParams { p: 0.1, lambda: 4.0, r1: 0.5, r2: 0.5 }, cost: 10.0 };
        assert!(a.better_than(&b));
        let c = Candidate { cost: 9.0, ..b };
        assert!(c.better_than(&a));
    }

    #[test]
    fn empty_sweep() {
        assert!(sweep(&MissionSpec::intelligence(0.0), SweepVariable::Delta, &[]).unwrap().is_empty());
        assert!(sweep(&MissionSpec::intelligence(0.0), SweepVariable::Delta, &[0.2, 0.1]).is_err());
    }

    #[test]
    fn sweep_keeps_infeasible_rows() {
        let rows = sweep(&MissionSpec::encounter(0.0), SweepVariable::Delta, &[0.5, 0.9]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].solution.is_optimal());
        assert_eq!(rows[1].solution.status, DesignStatus::Infeasible);
    }
}
