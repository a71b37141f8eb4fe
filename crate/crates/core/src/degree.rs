//! Degree laws of the two-layer network.
//!
//! Devices form a homogeneous Poisson point process of intensity `lambda`
//! per km². Each device is independently type-I (dual radio) with
//! probability `p`. Layer 1 links type-I pairs within `r1`; layer 2 links
//! every pair within `r2`. The combined degree of a device is the sum of its
//! two layer degrees, so a type-I neighbour inside `r2` is counted twice.
//!
//! All lengths are kilometres.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Largest probability mass that truncation may discard.
pub const TRUNCATION_TOL: f64 = 1e-10;

/// The four design variables of a deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Fraction of type-I devices.
    pub p: f64,
    /// Total device density, devices per km².
    pub lambda: f64,
    /// Layer-1 range, km.
    pub r1: f64,
    /// Layer-2 range, km.
    pub r2: f64,
}

impl NetworkParams {
    pub fn new(p: f64, lambda: f64, r1: f64, r2: f64) -> Result<Self> {
        let params = Self { p, lambda, r1, r2 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure((0.0..=1.0).contains(&self.p), || {
            format!("p must lie in [0, 1], got {}", self.p)
        })?;
        ensure(self.lambda > 0.0 && self.lambda.is_finite(), || {
            format!("lambda must be positive, got {}", self.lambda)
        })?;
        ensure(self.r1 >= 0.0 && self.r1.is_finite(), || {
            format!("r1 must be nonnegative, got {}", self.r1)
        })?;
        ensure(self.r2 >= 0.0 && self.r2.is_finite(), || {
            format!("r2 must be nonnegative, got {}", self.r2)
        })?;
        ensure(self.r2 <= self.r1, || {
            format!("r2 ({}) must not exceed r1 ({})", self.r2, self.r1)
        })
    }

    /// Density of type-I devices (the layer-1 process).
    pub fn lambda1(&self) -> f64 {
        self.p * self.lambda
    }

    /// Density of devices active in layer 2, i.e. all of them.
    pub fn lambda2(&self) -> f64 {
        self.lambda
    }

    /// Poisson parameter of a type-I device's layer-1 degree.
    pub fn layer1_poisson_mean(&self) -> f64 {
        self.lambda1() * PI * self.r1 * self.r1
    }

    pub fn layer2_poisson_mean(&self) -> f64 {
        self.lambda2() * PI * self.r2 * self.r2
    }

    /// `E[K1] = p² λ π r1²`, averaged over both device types.
    pub fn mean_k1(&self) -> f64 {
        self.p * self.layer1_poisson_mean()
    }

    /// `E[K2] = λ π r2²`.
    pub fn mean_k2(&self) -> f64 {
        self.layer2_poisson_mean()
    }

    /// `E[Kc] = E[K1] + E[K2]`.
    pub fn mean_kc(&self) -> f64 {
        self.mean_k1() + self.mean_k2()
    }
}

/// Box bounds on the design variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub p_min: f64,
    pub p_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub r1_min: f64,
    pub r1_max: f64,
    pub r2_min: f64,
    pub r2_max: f64,
}

impl ParamBounds {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("p", self.p_min, self.p_max),
            ("lambda", self.lambda_min, self.lambda_max),
            ("r1", self.r1_min, self.r1_max),
            ("r2", self.r2_min, self.r2_max),
        ];
        for (name, lo, hi) in pairs {
            ensure(lo >= 0.0 && lo.is_finite() && hi.is_finite(), || {
                format!("{name} bounds must be finite and nonnegative")
            })?;
            ensure(lo <= hi, || format!("{name}_min ({lo}) exceeds {name}_max ({hi})"))?;
        }
        ensure(self.p_max <= 1.0, || format!("p_max must not exceed 1, got {}", self.p_max))?;
        ensure(self.lambda_max > 0.0, || "lambda_max must be positive".to_string())?;
        ensure(self.r2_min <= self.r1_max, || {
            "r2_min exceeds r1_max: no range pair satisfies r2 <= r1".to_string()
        })
    }

    pub fn contains(&self, params: &NetworkParams, tol: f64) -> bool {
        let inside = |x: f64, lo: f64, hi: f64| x >= lo - tol * lo.abs().max(1.0) && x <= hi + tol * hi.abs().max(1.0);
        inside(params.p, self.p_min, self.p_max)
            && inside(params.lambda, self.lambda_min, self.lambda_max)
            && inside(params.r1, self.r1_min, self.r1_max)
            && inside(params.r2, self.r2_min, self.r2_max)
    }

    /// The upper corner of the box, with `r2` capped at `r1` so the corner is
    /// a valid deployment. Every mean degree attains its maximum here.
    pub fn upper_corner(&self) -> NetworkParams {
        NetworkParams {
            p: self.p_max,
            lambda: self.lambda_max,
            r1: self.r1_max,
            r2: self.r2_max.min(self.r1_max),
        }
    }

    /// Battlefield bounds used for the mission studies: densities 1..15 per
    /// km², at most 40% type-I devices, layer-1 range 100 m..2 km and layer-2
    /// range 10 m..800 m.
    pub fn battlefield() -> Self {
        Self {
            p_min: 0.0,
            p_max: 0.4,
            lambda_min: 1.0,
            lambda_max: 15.0,
            r1_min: 0.1,
            r1_max: 2.0,
            r2_min: 0.01,
            r2_max: 0.8,
        }
    }
}

/// Threat and link-quality description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreatModel {
    /// Probability that a transmission is disrupted by an attack.
    pub delta: f64,
    /// Contact rate per slot.
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub ps1: f64,
    #[serde(default = "one")]
    pub ps2: f64,
    #[serde(default = "one")]
    pub psc: f64,
}

fn one() -> f64 {
    1.0
}

impl ThreatModel {
    /// Unit contact rate and perfect link success; only `delta` degrades links.
    pub fn new(delta: f64) -> Self {
        Self { delta, gamma: 1.0, ps1: 1.0, ps2: 1.0, psc: 1.0 }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("ps1", self.ps1), ("ps2", self.ps2), ("psc", self.psc)] {
            ensure((0.0..=1.0).contains(&v), || format!("{name} must lie in [0, 1], got {v}"))?;
        }
        ensure(self.gamma > 0.0 && self.gamma <= 1.0, || {
            format!("gamma must lie in (0, 1], got {}", self.gamma)
        })
    }
}

impl Default for ThreatModel {
    fn default() -> Self {
        Self::new(0.0)
    }
}

/// Effective per-contact spreading probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadingRates {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alphac: f64,
}

/// `alpha_i = gamma * (1 - delta) * Ps_i`.
pub fn spreading_rates(threat: &ThreatModel) -> SpreadingRates {
    let base = threat.gamma * (1.0 - threat.delta);
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    SpreadingRates {
        alpha1: clamp(base * threat.ps1),
        alpha2: clamp(base * threat.ps2),
        alphac: clamp(base * threat.psc),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    One,
    Two,
}

/// Truncation point `ceil(mean + 12 sqrt(mean) + 30)`.
pub fn default_k_max(mean: f64) -> usize {
    (mean + 12.0 * mean.sqrt() + 30.0).ceil() as usize
}

/// Poisson pmf on `0..=k_max`, evaluated in log space so large means do not
/// underflow `exp(-mean)`.
pub fn poisson_pmf(mean: f64, k_max: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; k_max + 1];
    if mean <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    let ln_mean = mean.ln();
    let mut log_term = -mean;
    pmf[0] = log_term.exp();
    for (k, slot) in pmf.iter_mut().enumerate().skip(1) {
        log_term += ln_mean - (k as f64).ln();
        *slot = log_term.exp();
    }
    pmf
}

/// Poisson mass strictly above `k_max`.
pub fn poisson_tail(mean: f64, k_max: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let mut log_term = -mean;
    for k in 1..=k_max {
        log_term += ln_mean - (k as f64).ln();
    }
    let mut tail = 0.0;
    let mut k = k_max + 1;
    loop {
        log_term += ln_mean - (k as f64).ln();
        let term = log_term.exp();
        tail += term;
        if (k as f64) > mean && (term <= tail * 1e-17 || term < 1e-300) {
            break;
        }
        k += 1;
    }
    tail
}

fn check_residual(k_max: usize, residual: f64) -> Result<()> {
    if residual > TRUNCATION_TOL {
        Err(Error::Truncation { k_max, residual })
    } else {
        Ok(())
    }
}

/// Intra-layer degree pmf on `0..=k_max`.
///
/// Layer 1 is a two-point mixture: type-II devices have no layer-1 links,
/// type-I devices see `Poisson(p λ π r1²)` type-I neighbours. Layer 2 is
/// `Poisson(λ π r2²)` for every device.
pub fn intra_layer_pmf(params: &NetworkParams, layer: Layer, k_max: usize) -> Result<Vec<f64>> {
    params.validate()?;
    match layer {
        Layer::One => {
            let m = params.layer1_poisson_mean();
            check_residual(k_max, params.p * poisson_tail(m, k_max))?;
            let mut pmf = poisson_pmf(m, k_max);
            pmf.iter_mut().for_each(|x| *x *= params.p);
            pmf[0] = (1.0 - params.p) + params.p * (-m).exp();
            Ok(pmf)
        }
        Layer::Two => {
            let m = params.layer2_poisson_mean();
            check_residual(k_max, poisson_tail(m, k_max))?;
            Ok(poisson_pmf(m, k_max))
        }
    }
}

/// Discrete convolution truncated to `0..=k_max`.
fn convolve(a: &[f64], b: &[f64], k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    for (i, &x) in a.iter().enumerate().take(k_max + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(k_max + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Mean and variance of a type-I device's combined degree
/// `2 N1A + N2A + N1B`.
fn type1_combined_mean_var(params: &NetworkParams) -> (f64, f64) {
    let area2 = PI * params.r2 * params.r2;
    let ring = PI * (params.r1 * params.r1 - params.r2 * params.r2);
    let n1a = params.p * params.lambda * area2;
    let n2a = (1.0 - params.p) * params.lambda * area2;
    let n1b = params.p * params.lambda * ring;
    (2.0 * n1a + n2a + n1b, 4.0 * n1a + n2a + n1b)
}

/// Truncation point used by [`degree_moments`] for the combined degree.
pub fn combined_k_max(params: &NetworkParams) -> usize {
    let (mean, var) = type1_combined_mean_var(params);
    let spread = mean.max(var).sqrt();
    (mean.max(params.layer2_poisson_mean()) + 12.0 * spread + 30.0).ceil() as usize
}

/// Combined-degree pmf on `0..=k_max`.
///
/// A type-II device sees `Poisson(λ π r2²)`. A type-I device at the origin
/// has degree `2 N1A + N2A + N1B`, with `N1A ~ Poisson(p λ π r2²)` type-I
/// devices inside `r2` (linked in both layers), `N2A ~ Poisson((1-p) λ π r2²)`
/// type-II devices inside `r2`, and `N1B ~ Poisson(p λ π (r1² - r2²))`
/// type-I devices in the annulus. The three counts are independent.
pub fn combined_pmf(params: &NetworkParams, k_max: usize) -> Result<Vec<f64>> {
    params.validate()?;
    let area2 = PI * params.r2 * params.r2;
    let ring = PI * (params.r1 * params.r1 - params.r2 * params.r2);
    let type2 = poisson_pmf(params.layer2_poisson_mean(), k_max);

    let n1a = poisson_pmf(params.p * params.lambda * area2, k_max / 2);
    let mut doubled = vec![0.0; k_max + 1];
    for (n, &mass) in n1a.iter().enumerate() {
        doubled[2 * n] = mass;
    }
    let n2a = poisson_pmf((1.0 - params.p) * params.lambda * area2, k_max);
    let n1b = poisson_pmf(params.p * params.lambda * ring, k_max);
    let type1 = convolve(&convolve(&doubled, &n2a, k_max), &n1b, k_max);

    let pmf: Vec<f64> = type1
        .iter()
        .zip(&type2)
        .map(|(&a, &b)| params.p * a + (1.0 - params.p) * b)
        .collect();
    check_residual(k_max, (1.0 - kahan_sum(&pmf)).max(0.0))?;
    Ok(pmf)
}

fn kahan_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// First and second moments of a pmf indexed by degree.
pub fn pmf_moments(pmf: &[f64]) -> (f64, f64) {
    pmf.iter().enumerate().fold((0.0, 0.0), |(m1, m2), (k, &w)| {
        let k = k as f64;
        (m1 + k * w, m2 + k * k * w)
    })
}

pub fn pmf_total(pmf: &[f64]) -> f64 {
    kahan_sum(pmf)
}

/// Truncated degree laws and their moments for one deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeModel {
    pub pmf_k1: Vec<f64>,
    pub pmf_k2: Vec<f64>,
    pub pmf_kc: Vec<f64>,
    pub mean_k1: f64,
    pub mean_k2: f64,
    pub mean_kc: f64,
    pub m2_k1: f64,
    pub m2_k2: f64,
    pub m2_kc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegreeVariable {
    Layer1,
    Layer2,
    Combined,
}

impl DegreeModel {
    pub fn pmf(&self, which: DegreeVariable) -> &[f64] {
        match which {
            DegreeVariable::Layer1 => &self.pmf_k1,
            DegreeVariable::Layer2 => &self.pmf_k2,
            DegreeVariable::Combined => &self.pmf_kc,
        }
    }

    pub fn moments(&self, which: DegreeVariable) -> (f64, f64) {
        match which {
            DegreeVariable::Layer1 => (self.mean_k1, self.m2_k1),
            DegreeVariable::Layer2 => (self.mean_k2, self.m2_k2),
            DegreeVariable::Combined => (self.mean_kc, self.m2_kc),
        }
    }

    pub fn variance(&self, which: DegreeVariable) -> f64 {
        let (m1, m2) = self.moments(which);
        m2 - m1 * m1
    }
}

/// Closed-form means with second moments taken from the truncated pmfs.
pub fn degree_moments(params: &NetworkParams) -> Result<DegreeModel> {
    let pmf_k1 = intra_layer_pmf(params, Layer::One, default_k_max(params.layer1_poisson_mean()))?;
    let pmf_k2 = intra_layer_pmf(params, Layer::Two, default_k_max(params.layer2_poisson_mean()))?;
    let pmf_kc = combined_pmf(params, combined_k_max(params))?;
    let (_, m2_k1) = pmf_moments(&pmf_k1);
    let (_, m2_k2) = pmf_moments(&pmf_k2);
    let (_, m2_kc) = pmf_moments(&pmf_kc);
    Ok(DegreeModel {
        mean_k1: params.mean_k1(),
        mean_k2: params.mean_k2(),
        mean_kc: params.mean_kc(),
        pmf_k1,
        pmf_k2,
        pmf_kc,
        m2_k1,
        m2_k2,
        m2_kc,
    })
}

/// Critical spreading rates of an SIS process on a degree law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicThreshold {
    /// `E[K] / E[K²]`: below it only the zero equilibrium exists.
    pub exact: f64,
    /// `1 / E[K]`, the threshold implied by the mean-degree lower bound.
    pub relaxed: f64,
}

pub fn threshold_from_moments(mean: f64, second_moment: f64) -> Result<EpidemicThreshold> {
    if mean <= 0.0 || second_moment <= 0.0 {
        return Err(Error::NoSpread);
    }
    Ok(EpidemicThreshold { exact: mean / second_moment, relaxed: 1.0 / mean })
}

pub fn epidemic_threshold(model: &DegreeModel, which: DegreeVariable) -> Result<EpidemicThreshold> {
    let (mean, m2) = model.moments(which);
    threshold_from_moments(mean, m2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rates_follow_threat() {
        let r = spreading_rates(&ThreatModel::new(0.2));
        assert!(close(r.alpha1, 0.8, 1e-15) && close(r.alpha2, 0.8, 1e-15) && close(r.alphac, 0.8, 1e-15));
        let r = spreading_rates(&ThreatModel::new(1.0));
        assert_eq!((r.alpha1, r.alpha2, r.alphac), (0.0, 0.0, 0.0));
        let r = spreading_rates(&ThreatModel::new(0.0));
        assert_eq!((r.alpha1, r.alpha2, r.alphac), (1.0, 1.0, 1.0));
        let t = ThreatModel { delta: 0.5, gamma: 1.0, ps1: 0.5, ps2: 1.0, psc: 0.2 };
        let r = spreading_rates(&t);
        assert!(close(r.alpha1, 0.25, 1e-15) && close(r.alpha2, 0.5, 1e-15) && close(r.alphac, 0.1, 1e-15));
    }

    #[test]
    fn no_type1_devices_means_no_layer1_links() {
        let params = NetworkParams::new(0.0, 10.0, 0.5, 0.3).unwrap();
        let pmf = intra_layer_pmf(&params, Layer::One, 40).unwrap();
        assert_eq!(pmf[0], 1.0);
        assert!(pmf[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn layer1_zero_atom() {
        let params = NetworkParams::new(0.5, 10.0, 0.5, 0.3).unwrap();
        let m = params.layer1_poisson_mean();
        assert!(close(m, 3.926_990_816_987_241_5, 1e-12));
        let pmf = intra_layer_pmf(&params, Layer::One, default_k_max(m)).unwrap();
        assert_eq!(pmf[0], 0.5 + 0.5 * (-m).exp());
        assert!(close(pmf[0], 0.5098, 1e-4));
    }

    #[test]
    fn layer2_poisson_value() {
        let params = NetworkParams::new(0.5, 10.0, 0.5, 0.3).unwrap();
        let m = params.layer2_poisson_mean();
        let pmf = intra_layer_pmf(&params, Layer::Two, default_k_max(m)).unwrap();
        let expected = (-m).exp() * m * m / 2.0;
        assert!(close(pmf[2], expected, 1e-15));
        assert!(close(pmf[2], 0.23649, 1e-5));
    }

    #[test]
    fn short_truncation_is_rejected() {
        let params = NetworkParams::new(0.5, 10.0, 0.5, 0.3).unwrap();
        let err = intra_layer_pmf(&params, Layer::Two, 5).unwrap_err();
        assert!(matches!(err, Error::Truncation { k_max: 5, .. }));
        assert!(combined_pmf(&params, 3).is_err());
    }

    #[test]
    fn combined_reduces_to_layer2_without_type1() {
        let params = NetworkParams::new(0.0, 12.0, 0.7, 0.4).unwrap();
        let k_max = combined_k_max(&params);
        let kc = combined_pmf(&params, k_max).unwrap();
        let k2 = poisson_pmf(params.layer2_poisson_mean(), k_max);
        assert_eq!(kc, k2);
    }

    #[test]
    fn combined_all_type1_equal_ranges_has_even_support() {
        let params = NetworkParams::new(1.0, 20.0, 0.4, 0.4).unwrap();
        let pmf = combined_pmf(&params, combined_k_max(&params)).unwrap();
        for (k, &w) in pmf.iter().enumerate() {
            if k % 2 == 1 {
                assert_eq!(w, 0.0, "odd degree {k} has mass {w}");
            }
        }
    }

    #[test]
    fn combined_mean_matches_closed_form() {
        for &(p, lambda, r1, r2) in &[(0.4, 15.0, 1.0, 0.5), (0.1, 50.0, 0.3, 0.2), (0.9, 5.0, 2.0, 0.1), (1.0, 8.0, 1.0, 1.0)] {
            let params = NetworkParams::new(p, lambda, r1, r2).unwrap();
            let model = degree_moments(&params).unwrap();
            let (mean, _) = pmf_moments(&model.pmf_kc);
            assert!(close(mean, p * p * lambda * PI * r1 * r1 + lambda * PI * r2 * r2, 1e-8));
        }
    }

    #[test]
    fn closed_form_means() {
        let params = NetworkParams::new(0.4, 15.0, 1.0, 0.5).unwrap();
        assert!(close(params.mean_k1(), 0.16 * 15.0 * PI, 1e-12));
        assert!(close(params.mean_k1(), 7.540, 5e-4));
        let params = NetworkParams::new(1.0, 100.0, 0.2, 0.2).unwrap();
        assert!(close(params.mean_k2(), 12.57, 5e-3));
        let params = NetworkParams::new(1.0, 7.0, 1.3, 0.6).unwrap();
        assert!(close(params.mean_kc(), 7.0 * PI * (1.3f64.powi(2) + 0.36), 1e-12));
    }

    #[test]
    fn thresholds() {
        // Poisson(4): E[K²] = 4 + 16.
        let t = threshold_from_moments(4.0, 20.0).unwrap();
        assert!(close(t.exact, 0.2, 1e-15) && close(t.relaxed, 0.25, 1e-15));
        let t = threshold_from_moments(5.0, 25.0).unwrap();
        assert!(close(t.exact, 0.2, 1e-15) && close(t.exact, t.relaxed, 1e-15));
        assert_eq!(threshold_from_moments(0.0, 0.0), Err(Error::NoSpread));
    }

    #[test]
    fn relaxed_gap_shrinks_with_mean() {
        let mut last_gap = f64::INFINITY;
        for mean in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let pmf = poisson_pmf(mean, default_k_max(mean));
            let (m1, m2) = pmf_moments(&pmf);
            let t = threshold_from_moments(m1, m2).unwrap();
            assert!(t.exact <= t.relaxed);
            let gap = t.relaxed - t.exact;
            assert!(gap < last_gap);
            last_gap = gap;
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(NetworkParams::new(1.2, 1.0, 1.0, 0.5).is_err());
        assert!(NetworkParams::new(0.2, 0.0, 1.0, 0.5).is_err());
        assert!(NetworkParams::new(0.2, 1.0, 0.4, 0.5).is_err());
        assert!(NetworkParams::new(0.2, 1.0, -0.4, -0.5).is_err());
        let mut b = ParamBounds::battlefield();
        assert!(b.validate().is_ok());
        b.p_max = 1.5;
        assert!(b.validate().is_err());
    }

    #[test]
    fn poisson_tail_matches_complement() {
        let pmf = poisson_pmf(7.5, 10);
        let tail = poisson_tail(7.5, 10);
        assert!(close(pmf.iter().sum::<f64>() + tail, 1.0, 1e-14));
    }
}
