//! Degree-based mean-field SIS dynamics with unit recovery rate.
//!
//! Single message: `dI_k/dt = -I_k + α k (1 - I_k) Θ` with
//! `Θ = Σ_k k P(k) I_k / E[K]`. At equilibrium `I_k = αkΘ / (1 + αkΘ)` and
//! `Θ` solves `Θ = F(Θ) = (1/E[K]) Σ_k k P(k) αkΘ / (1 + αkΘ)`.
//!
//! Two messages, one per layer: each device of degree class `(k, l)` is in
//! one of `UU`, `IU`, `UI`, `II`, and only one message status changes per
//! transition. The layer fixed points decouple, and the both-informed
//! fraction factorises as `II(k,l) = I1(k) · I2(l)`.

use serde::{Deserialize, Serialize};

use crate::degree::{pmf_moments, pmf_total};
use crate::error::{ensure, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_DAMPING: f64 = 0.5;
pub const DEFAULT_STEP: f64 = 0.01;

/// Damped iterations tried before switching to bracketing. Close to the
/// bifurcation the map's slope at the fixed point approaches 1 and plain
/// iteration crawls.
const DAMPED_BUDGET: usize = 5_000;

/// Tolerance on `Σ P(k)` for pmfs handed to the solvers.
const PMF_NORM_TOL: f64 = 1e-8;

/// Steady state of single-message dissemination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleEquilibrium {
    /// Probability that a neighbour is informed.
    pub theta: f64,
    /// `I_k*` for each degree `k` of the pmf.
    pub informed_by_k: Vec<f64>,
    /// `Σ_k P(k) I_k*`.
    pub aggregate: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `|Θ - F(Θ)|` at the returned value.
    pub residual: f64,
}

impl SingleEquilibrium {
    /// Informed fraction of a device of (possibly fractional) degree `k`.
    pub fn informed_at(&self, alpha: f64, k: f64) -> f64 {
        informed_fraction(alpha, k, self.theta)
    }
}

/// `α k Θ / (1 + α k Θ)`.
pub fn informed_fraction(alpha: f64, k: f64, theta: f64) -> f64 {
    let x = alpha * k * theta;
    x / (1.0 + x)
}

fn check_pmf(pmf: &[f64]) -> Result<()> {
    ensure(!pmf.is_empty(), || "pmf is empty".to_string())?;
    ensure(pmf.iter().all(|&w| w >= 0.0 && w.is_finite()), || "pmf has negative or non-finite mass".to_string())?;
    let total = pmf_total(pmf);
    ensure((total - 1.0).abs() <= PMF_NORM_TOL, || format!("pmf sums to {total}, not 1"))
}

fn check_rate(alpha: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&alpha), || format!("spreading rate must lie in [0, 1], got {alpha}"))
}

/// Right side of the fixed-point equation for `Θ`.
pub fn theta_map(pmf: &[f64], alpha: f64, theta: f64) -> f64 {
    let (mean, _) = pmf_moments(pmf);
    if mean <= 0.0 {
        return 0.0;
    }
    let sum: f64 = pmf
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let k = k as f64;
            k * w * informed_fraction(alpha, k, theta)
        })
        .sum();
    sum / mean
}

/// `h(Θ) = F(Θ)/Θ`, strictly decreasing on `Θ > 0`; the positive fixed
/// point is the root of `h(Θ) = 1`.
fn growth_ratio(pmf: &[f64], mean: f64, alpha: f64, theta: f64) -> f64 {
    pmf.iter()
        .enumerate()
        .map(|(k, &w)| {
            let k = k as f64;
            w * k * k * alpha / (1.0 + alpha * k * theta)
        })
        .sum::<f64>()
        / mean
}

/// Damped fixed-point iteration `Θ ← (1-η)Θ + η F(Θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSolver {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Starting value in `(0, 1]`.
    pub start: f64,
}

impl Default for ThetaSolver {
    fn default() -> Self {
        Self { damping: DEFAULT_DAMPING, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, start: 1.0 }
    }
}

impl ThetaSolver {
    pub fn solve(&self, pmf: &[f64], alpha: f64) -> Result<SingleEquilibrium> {
        check_pmf(pmf)?;
        check_rate(alpha)?;
        ensure(self.start > 0.0 && self.start <= 1.0, || format!("start must lie in (0, 1], got {}", self.start))?;
        ensure(self.damping > 0.0 && self.damping <= 1.0, || format!("damping must lie in (0, 1], got {}", self.damping))?;
        ensure(self.tol > 0.0, || "tolerance must be positive".to_string())?;

        let (mean, m2) = pmf_moments(pmf);
        // Branch on the exact bifurcation criterion α ≥ E[K]/E[K²].
        if mean <= 0.0 || alpha * m2 < mean {
            return Ok(equilibrium(pmf, alpha, 0.0, true, 0, 0.0));
        }

        let mut theta = self.start;
        let mut iterations = 0;
        let budget = self.max_iter.min(DAMPED_BUDGET);
        while iterations < budget {
            let mapped = theta_map(pmf, alpha, theta);
            let residual = (theta - mapped).abs();
            if residual < self.tol {
                let (theta, extra) = polish(pmf, alpha, theta, self.tol);
                let residual = (theta - theta_map(pmf, alpha, theta)).abs();
                return Ok(equilibrium(pmf, alpha, theta, true, iterations + extra, residual));
            }
            theta = (1.0 - self.damping) * theta + self.damping * mapped;
            iterations += 1;
        }

        // Bisection on h(Θ) = 1 over [0, 1]: h(0) ≥ 1 above threshold and
        // h(1) < 1 always.
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while iterations < self.max_iter {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if growth_ratio(pmf, mean, alpha, mid) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
            let candidate = 0.5 * (lo + hi);
            let residual = (candidate - theta_map(pmf, alpha, candidate)).abs();
            if residual < self.tol && hi - lo < self.tol {
                break;
            }
        }
        theta = 0.5 * (lo + hi);
        let residual = (theta - theta_map(pmf, alpha, theta)).abs();
        if residual < self.tol {
            Ok(equilibrium(pmf, alpha, theta, true, iterations, residual))
        } else {
            Err(Error::NonConvergence { iterations, residual })
        }
    }
}

/// Bracket the positive root around `theta` using the sign of `F(Θ) - Θ`
/// and bisect to a tenth of `tol`, so the result does not depend on where
/// the iteration started. Near the bifurcation the damped map contracts
/// slowly and a small residual alone leaves a visible start dependence.
fn polish(pmf: &[f64], alpha: f64, theta: f64, tol: f64) -> (f64, usize) {
    let above = |t: f64| theta_map(pmf, alpha, t) < t;
    let mut iterations = 0;
    let mut step = tol;
    let (mut lo, mut hi) = (theta, theta);
    if above(theta) {
        loop {
            lo = (theta - step).max(0.0);
            iterations += 1;
            if lo == 0.0 || !above(lo) {
                break;
            }
            step *= 2.0;
        }
    } else {
        loop {
            hi = (theta + step).min(1.0);
            iterations += 1;
            if hi == 1.0 || above(hi) {
                break;
            }
            step *= 2.0;
        }
    }
    while hi - lo > 0.1 * tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    (0.5 * (lo + hi), iterations)
}

fn equilibrium(pmf: &[f64], alpha: f64, theta: f64, converged: bool, iterations: usize, residual: f64) -> SingleEquilibrium {
    let informed_by_k: Vec<f64> = (0..pmf.len()).map(|k| informed_fraction(alpha, k as f64, theta)).collect();
    let aggregate = pmf.iter().zip(&informed_by_k).map(|(w, i)| w * i).sum();
    SingleEquilibrium { theta, informed_by_k, aggregate, converged, iterations, residual }
}

/// Solve the single-message equilibrium with the default damping and start.
pub fn solve_theta(pmf: &[f64], alpha: f64, tol: f64, max_iter: usize) -> Result<SingleEquilibrium> {
    ThetaSolver { tol, max_iter, ..ThetaSolver::default() }.solve(pmf, alpha)
}

/// Mean-degree lower bound `max(0, 1 - 1/(α E[K]))`.
pub fn theta_lower_bound(alpha: f64, mean_degree: f64) -> f64 {
    let x = alpha * mean_degree;
    if x <= 1.0 {
        0.0
    } else {
        1.0 - 1.0 / x
    }
}

/// Joint degree law `P(K1 = k, K2 = l)` as a dense table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    /// `probs[k][l]`; every row has the same length.
    pub probs: Vec<Vec<f64>>,
}

impl JointPmf {
    pub fn from_marginals(pmf1: &[f64], pmf2: &[f64]) -> Self {
        Self { probs: pmf1.iter().map(|&a| pmf2.iter().map(|&b| a * b).collect()).collect() }
    }

    /// Empirical joint law from `(k, l)` counts.
    pub fn from_counts<'a>(counts: impl IntoIterator<Item = (&'a (usize, usize), &'a u64)>) -> Result<Self> {
        let entries: Vec<_> = counts.into_iter().map(|(&kl, &c)| (kl, c)).collect();
        let total: u64 = entries.iter().map(|(_, c)| c).sum();
        if total == 0 {
            return Err(Error::NoData);
        }
        let rows = entries.iter().map(|((k, _), _)| k + 1).max().unwrap_or(1);
        let cols = entries.iter().map(|((_, l), _)| l + 1).max().unwrap_or(1);
        let mut probs = vec![vec![0.0; cols]; rows];
        for ((k, l), c) in entries {
            probs[k][l] = c as f64 / total as f64;
        }
        Ok(Self { probs })
    }

    pub fn rows(&self) -> usize {
        self.probs.len()
    }

    pub fn cols(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    pub fn marginal1(&self) -> Vec<f64> {
        self.probs.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn marginal2(&self) -> Vec<f64> {
        (0..self.cols()).map(|l| self.probs.iter().map(|row| row[l]).sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }
}

/// Equilibrium occupation of one degree class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassState {
    pub uu: f64,
    pub iu: f64,
    pub ui: f64,
    pub ii: f64,
}

/// Stationary class fractions given the neighbour fields.
pub fn dual_class_state(alpha1: f64, alpha2: f64, k: f64, l: f64, theta1: f64, theta2: f64) -> ClassState {
    let a = alpha1 * k * theta1;
    let b = alpha2 * l * theta2;
    let denom = (1.0 + a) * (1.0 + b);
    ClassState {
        uu: 1.0 / denom,
        iu: a / denom,
        ui: b / denom,
        ii: (a / (1.0 + a)) * (b / (1.0 + b)),
    }
}

/// Steady state of two-message dissemination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualEquilibrium {
    pub theta1: f64,
    pub theta2: f64,
    pub layer1: SingleEquilibrium,
    pub layer2: SingleEquilibrium,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Indexed `[k][l]`.
    pub iu: Vec<Vec<f64>>,
    pub ui: Vec<Vec<f64>>,
    pub ii: Vec<Vec<f64>>,
    /// `Σ P(K1=k) P(K2=l) II(k,l)`.
    pub aggregate_ii: f64,
}

impl DualEquilibrium {
    /// Both-informed fraction weighted by a supplied joint degree law.
    pub fn aggregate_ii_with(&self, joint: &JointPmf) -> f64 {
        let mut total = 0.0;
        for (k, row) in joint.probs.iter().enumerate() {
            for (l, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    total += w * dual_class_state(self.alpha1, self.alpha2, k as f64, l as f64, self.theta1, self.theta2).ii;
                }
            }
        }
        total
    }

    /// Neighbour fields recomputed with joint weighting:
    /// `Θ1 = (1/E[K1]) Σ P(k,l) k (IU + II)` and likewise for `Θ2`.
    pub fn joint_fields(&self, joint: &JointPmf) -> (f64, f64) {
        let (mut s1, mut s2, mut m1, mut m2) = (0.0, 0.0, 0.0, 0.0);
        for (k, row) in joint.probs.iter().enumerate() {
            for (l, &w) in row.iter().enumerate() {
                let (kf, lf) = (k as f64, l as f64);
                let st = dual_class_state(self.alpha1, self.alpha2, kf, lf, self.theta1, self.theta2);
                s1 += w * kf * (st.iu + st.ii);
                s2 += w * lf * (st.ui + st.ii);
                m1 += w * kf;
                m2 += w * lf;
            }
        }
        let f1 = if m1 > 0.0 { s1 / m1 } else { 0.0 };
        let f2 = if m2 > 0.0 { s2 / m2 } else { 0.0 };
        (f1, f2)
    }
}

/// Solve each layer's fixed point independently and assemble the class
/// fractions.
pub fn solve_dual(pmf1: &[f64], pmf2: &[f64], alpha1: f64, alpha2: f64, tol: f64, max_iter: usize) -> Result<DualEquilibrium> {
    let layer1 = solve_theta(pmf1, alpha1, tol, max_iter)?;
    let layer2 = solve_theta(pmf2, alpha2, tol, max_iter)?;
    let (t1, t2) = (layer1.theta, layer2.theta);
    let mut iu = vec![vec![0.0; pmf2.len()]; pmf1.len()];
    let mut ui = iu.clone();
    let mut ii = iu.clone();
    for k in 0..pmf1.len() {
        for l in 0..pmf2.len() {
            let st = dual_class_state(alpha1, alpha2, k as f64, l as f64, t1, t2);
            iu[k][l] = st.iu;
            ui[k][l] = st.ui;
            ii[k][l] = st.ii;
        }
    }
    let aggregate_ii = layer1.aggregate * layer2.aggregate;
    Ok(DualEquilibrium { theta1: t1, theta2: t2, layer1, layer2, alpha1, alpha2, iu, ui, ii, aggregate_ii })
}

/// Time-sampled single-message trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `states[t][k]` is `I_k` at `times[t]`.
    pub states: Vec<Vec<f64>>,
    /// `Σ_k P(k) I_k` at each recorded time.
    pub aggregate: Vec<f64>,
}

impl Trajectory {
    pub fn final_aggregate(&self) -> f64 {
        self.aggregate.last().copied().unwrap_or(0.0)
    }
}

/// Step count and recording stride: at most ~1000 samples plus the endpoint.
fn schedule(horizon: f64, step: f64) -> Result<(usize, usize)> {
    ensure(step > 0.0 && step.is_finite(), || format!("step must be positive, got {step}"))?;
    ensure(horizon >= 0.0 && horizon.is_finite(), || format!("horizon must be nonnegative, got {horizon}"))?;
    let steps = (horizon / step).round() as usize;
    Ok((steps, (steps / 1000).max(1)))
}

const RANGE_SLACK: f64 = 1e-6;

fn check_fraction(time: f64, value: f64) -> Result<f64> {
    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&value) || value.is_nan() {
        Err(Error::Unstable { time, value })
    } else {
        Ok(value.clamp(0.0, 1.0))
    }
}

/// Explicit Euler integration from a uniform initial informed fraction.
pub fn integrate_single(pmf: &[f64], alpha: f64, initial_fraction: f64, horizon: f64, step: f64) -> Result<Trajectory> {
    check_pmf(pmf)?;
    check_rate(alpha)?;
    ensure((0.0..=1.0).contains(&initial_fraction), || format!("initial fraction must lie in [0, 1], got {initial_fraction}"))?;
    let (steps, stride) = schedule(horizon, step)?;
    let (mean, _) = pmf_moments(pmf);
    let mut state = vec![initial_fraction; pmf.len()];
    let aggregate_of = |s: &[f64]| s.iter().zip(pmf).map(|(i, w)| i * w).sum::<f64>();
    let mut traj = Trajectory { times: vec![0.0], states: vec![state.clone()], aggregate: vec![aggregate_of(&state)] };
    for n in 1..=steps {
        let theta = if mean > 0.0 {
            state.iter().enumerate().map(|(k, &i)| k as f64 * pmf[k] * i).sum::<f64>() / mean
        } else {
            0.0
        };
        let t = n as f64 * step;
        for (k, i) in state.iter_mut().enumerate() {
            let d = -*i + alpha * k as f64 * (1.0 - *i) * theta;
            *i = check_fraction(t, *i + step * d)?;
        }
        if n % stride == 0 || n == steps {
            traj.times.push(t);
            traj.aggregate.push(aggregate_of(&state));
            traj.states.push(state.clone());
        }
    }
    Ok(traj)
}

/// Per-class occupation of the two-message system, flattened `[k * cols + l]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualStates {
    pub rows: usize,
    pub cols: usize,
    pub iu: Vec<f64>,
    pub ui: Vec<f64>,
    pub ii: Vec<f64>,
}

impl DualStates {
    pub fn uu(&self, k: usize, l: usize) -> f64 {
        let idx = k * self.cols + l;
        1.0 - self.iu[idx] - self.ui[idx] - self.ii[idx]
    }

    pub fn get(&self, k: usize, l: usize) -> ClassState {
        let idx = k * self.cols + l;
        ClassState { uu: self.uu(k, l), iu: self.iu[idx], ui: self.ui[idx], ii: self.ii[idx] }
    }
}

/// Initial class occupation, uniform across degree classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualInitial {
    pub iu: f64,
    pub ui: f64,
    pub ii: f64,
}

/// Time-sampled two-message trajectory: population aggregates over time plus
/// the full per-class state at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualTrajectory {
    pub times: Vec<f64>,
    /// `[UU, IU, UI, II]` weighted by the joint degree law.
    pub aggregate: Vec<[f64; 4]>,
    pub final_states: DualStates,
    /// Largest `|UU + IU + UI + II - 1|` seen over all classes and steps.
    pub max_sum_error: f64,
}

/// Explicit Euler on the reduced `(IU, UI, II)` system, `UU` being the
/// complement. Fields follow the joint-weighted definitions of `Θ1`, `Θ2`.
pub fn integrate_dual(joint: &JointPmf, alpha1: f64, alpha2: f64, initial: DualInitial, horizon: f64, step: f64) -> Result<DualTrajectory> {
    check_rate(alpha1)?;
    check_rate(alpha2)?;
    let total = joint.total();
    ensure((total - 1.0).abs() <= PMF_NORM_TOL, || format!("joint pmf sums to {total}, not 1"))?;
    ensure(
        [initial.iu, initial.ui, initial.ii].iter().all(|x| (0.0..=1.0).contains(x)) && initial.iu + initial.ui + initial.ii <= 1.0,
        || "initial occupation must be fractions summing to at most 1".to_string(),
    )?;
    let (steps, stride) = schedule(horizon, step)?;
    let (rows, cols) = (joint.rows(), joint.cols());
    let n = rows * cols;
    let weight: Vec<f64> = joint.probs.iter().flatten().copied().collect();
    let kf: Vec<f64> = (0..n).map(|i| (i / cols) as f64).collect();
    let lf: Vec<f64> = (0..n).map(|i| (i % cols) as f64).collect();
    let mean1: f64 = (0..n).map(|i| weight[i] * kf[i]).sum();
    let mean2: f64 = (0..n).map(|i| weight[i] * lf[i]).sum();

    let mut s = DualStates { rows, cols, iu: vec![initial.iu; n], ui: vec![initial.ui; n], ii: vec![initial.ii; n] };
    let aggregate_of = |s: &DualStates| {
        let mut agg = [0.0; 4];
        for (i, w) in weight.iter().enumerate() {
            let uu = 1.0 - s.iu[i] - s.ui[i] - s.ii[i];
            agg[0] += w * uu;
            agg[1] += w * s.iu[i];
            agg[2] += w * s.ui[i];
            agg[3] += w * s.ii[i];
        }
        agg
    };
    let mut traj = DualTrajectory { times: vec![0.0], aggregate: vec![aggregate_of(&s)], final_states: s.clone(), max_sum_error: 0.0 };

    for step_no in 1..=steps {
        let (mut f1, mut f2) = (0.0, 0.0);
        for i in 0..n {
            f1 += weight[i] * kf[i] * (s.iu[i] + s.ii[i]);
            f2 += weight[i] * lf[i] * (s.ui[i] + s.ii[i]);
        }
        let theta1 = if mean1 > 0.0 { f1 / mean1 } else { 0.0 };
        let theta2 = if mean2 > 0.0 { f2 / mean2 } else { 0.0 };
        let t = step_no as f64 * step;
        for i in 0..n {
            let a = alpha1 * kf[i] * theta1;
            let b = alpha2 * lf[i] * theta2;
            let (iu, ui, ii) = (s.iu[i], s.ui[i], s.ii[i]);
            let uu = 1.0 - iu - ui - ii;
            let d_iu = a * uu - (b + 1.0) * iu + ii;
            let d_ui = b * uu - (a + 1.0) * ui + ii;
            let d_ii = a * ui + b * iu - 2.0 * ii;
            s.iu[i] = check_fraction(t, iu + step * d_iu)?;
            s.ui[i] = check_fraction(t, ui + step * d_ui)?;
            s.ii[i] = check_fraction(t, ii + step * d_ii)?;
            let uu_new = check_fraction(t, 1.0 - s.iu[i] - s.ui[i] - s.ii[i])?;
            let err = (uu_new + s.iu[i] + s.ui[i] + s.ii[i] - 1.0).abs();
            traj.max_sum_error = traj.max_sum_error.max(err);
        }
        if step_no % stride == 0 || step_no == steps {
            traj.times.push(t);
            traj.aggregate.push(aggregate_of(&s));
        }
    }
    traj.final_states = s;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::{default_k_max, poisson_pmf};

    fn point_mass(k: usize) -> Vec<f64> {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        pmf
    }

    #[test]
    fn below_threshold_is_zero() {
        let pmf = poisson_pmf(4.0, default_k_max(4.0));
        let eq = solve_theta(&pmf, 0.19, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(eq.theta, 0.0);
        assert!(eq.informed_by_k.iter().all(|&x| x == 0.0));
        assert_eq!(eq.aggregate, 0.0);
    }

    #[test]
    fn point_mass_closed_form() {
        let eq = solve_theta(&point_mass(4), 0.5, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((eq.theta - 0.5).abs() < 1e-9, "theta = {}", eq.theta);
        assert!(eq.residual < DEFAULT_TOL);
    }

    #[test]
    fn theta_bound_values() {
        assert!((theta_lower_bound(0.3, 12.57) - (1.0 - 1.0 / 3.771)).abs() < 1e-15);
        assert!((theta_lower_bound(0.3, 12.57) - 0.73482).abs() < 1e-5);
        assert_eq!(theta_lower_bound(0.2, 5.0), 0.0);
        assert_eq!(theta_lower_bound(0.1, 3.0), 0.0);
        assert!((theta_lower_bound(1.0, 5.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn poisson_high_degree_above_bound() {
        let mean = 12.57;
        let pmf = poisson_pmf(mean, default_k_max(mean));
        let eq = solve_theta(&pmf, 0.3, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(eq.theta > 0.7348 && eq.theta < 1.0, "theta = {}", eq.theta);
        assert!(eq.theta > theta_lower_bound(0.3, mean));
    }

    #[test]
    fn informed_by_k_increasing_and_concave() {
        let pmf = poisson_pmf(6.0, default_k_max(6.0));
        let eq = solve_theta(&pmf, 0.4, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let i = &eq.informed_by_k;
        for k in 1..i.len() - 1 {
            assert!(i[k] > i[k - 1]);
            assert!(i[k + 1] - i[k] <= i[k] - i[k - 1] + 1e-15);
        }
        assert!(i[i.len() - 1] < 1.0);
    }

    #[test]
    fn near_bifurcation_converges() {
        for mean in [0.5, 1.0, 4.0] {
            let pmf = poisson_pmf(mean, default_k_max(mean));
            let (m1, m2) = pmf_moments(&pmf);
            let thr = m1 / m2;
            let above = solve_theta(&pmf, thr + 1e-4, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            assert!(above.theta > 0.0 && above.residual < DEFAULT_TOL);
            let below = solve_theta(&pmf, thr - 1e-4, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            assert_eq!(below.theta, 0.0);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let pmf = poisson_pmf(4.0, default_k_max(4.0));
        let err = ThetaSolver { max_iter: 3, ..ThetaSolver::default() }.solve(&pmf, 0.5).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(solve_theta(&[0.5, 0.4], 0.5, 1e-10, 10).is_err());
        assert!(solve_theta(&[0.5, 0.5], 1.5, 1e-10, 10).is_err());
        assert!(integrate_single(&[0.0, 1.0], 0.5, 1.2, 1.0, 0.01).is_err());
    }

    #[test]
    fn dual_with_dead_layer() {
        let p1 = poisson_pmf(3.0, default_k_max(3.0));
        let p2 = poisson_pmf(8.0, default_k_max(8.0));
        let eq = solve_dual(&p1, &p2, 0.1, 0.5, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(eq.theta1, 0.0);
        assert!(eq.ii.iter().flatten().all(|&x| x == 0.0));
        assert!(eq.ui[0][8] > 0.0);
        assert_eq!(eq.aggregate_ii, 0.0);
    }

    #[test]
    fn dual_symmetric_layers() {
        let p = poisson_pmf(5.0, default_k_max(5.0));
        let eq = solve_dual(&p, &p, 0.4, 0.4, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(eq.theta1, eq.theta2);
        for k in 0..p.len() {
            for l in 0..p.len() {
                assert_eq!(eq.iu[k][l], eq.ui[l][k]);
                assert!(eq.iu[k][l] + eq.ui[k][l] + eq.ii[k][l] <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn class_state_arithmetic() {
        // α1 k Θ1 = 2.1 and α2 l Θ2 = 1.0.
        let st = dual_class_state(0.7, 0.5, 3.0, 4.0, 1.0, 0.5);
        assert!((st.ii - (2.1 / 3.1) * 0.5).abs() < 1e-15);
        assert!((st.ii - 0.3387).abs() < 5e-5);
        assert!((st.uu + st.iu + st.ui + st.ii - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_initial_stays_zero() {
        let pmf = poisson_pmf(5.0, default_k_max(5.0));
        let traj = integrate_single(&pmf, 0.8, 0.0, 10.0, 0.01).unwrap();
        assert!(traj.states.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn dual_without_spreading_stays_uninformed() {
        let p = poisson_pmf(3.0, default_k_max(3.0));
        let joint = JointPmf::from_marginals(&p, &p);
        let init = DualInitial { iu: 0.0, ui: 0.0, ii: 0.0 };
        let traj = integrate_dual(&joint, 0.0, 0.0, init, 5.0, 0.01).unwrap();
        assert!(traj.aggregate.iter().all(|a| (a[0] - 1.0).abs() < 1e-12 && a[1..].iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn unstable_step_detected() {
        let pmf = poisson_pmf(40.0, default_k_max(40.0));
        let err = integrate_single(&pmf, 1.0, 0.5, 5.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
    }

    #[test]
    fn joint_from_counts() {
        let mut counts = std::collections::BTreeMap::new();
        counts.insert((0usize, 2usize), 3u64);
        counts.insert((1, 0), 1);
        let j = JointPmf::from_counts(&counts).unwrap();
        assert_eq!((j.rows(), j.cols()), (2, 3));
        assert_eq!(j.probs[0][2], 0.75);
        assert_eq!(j.marginal1(), vec![0.75, 0.25]);
    }
}
