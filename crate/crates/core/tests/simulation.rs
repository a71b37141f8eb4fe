use netdesign::degree::{degree_moments, spreading_rates, NetworkParams, ThreatModel};
use netdesign::designer::{optimize, MissionSpec};
use netdesign::geometry::{sample_graph, Region};
use netdesign::meanfield::{solve_theta, DEFAULT_MAX_ITER, DEFAULT_TOL};
use netdesign::montecarlo::{estimate_dissemination, simulate_dual, simulate_single, Estimate, SimConfig};

fn pooled(a: Estimate, b: Estimate) -> f64 {
    a.std_error.hypot(b.std_error)
}

/// Moderate graph shared by the step-size and scaling checks.
fn moderate() -> netdesign::geometry::MultiplexGraph {
    let params = NetworkParams::new(0.0, 20.0, 0.5, 0.5).unwrap();
    sample_graph(&params, &Region::square_torus(7.0), 5).unwrap()
}

#[test]
fn symmetric_layers_are_exchangeable() {
    // All devices type-I with equal ranges: both layers are the same graph.
    let params = NetworkParams::new(1.0, 15.0, 0.5, 0.5).unwrap();
    let g = sample_graph(&params, &Region::square_torus(8.0), 2).unwrap();
    assert_eq!(g.adj1, g.adj2);
    let r = simulate_dual(&g, 0.4, 0.4, &SimConfig { burn_in: 500, measure_steps: 500, ..SimConfig::default() }).unwrap();
    let (a, b) = (r.informed_fraction_1.unwrap(), r.informed_fraction_2.unwrap());
    assert!((a.mean - b.mean).abs() < 2.0 * pooled(a, b), "{a:?} vs {b:?}");
}

#[test]
fn full_threat_silences_everything() {
    let params = NetworkParams::new(0.4, 10.0, 0.8, 0.4).unwrap();
    let cfg = SimConfig { burn_in: 100, measure_steps: 50, replications: 3, ..SimConfig::default() };
    let d = estimate_dissemination(&params, &ThreatModel::new(1.0), &Region::square_torus(5.0), &cfg).unwrap();
    assert_eq!((d.t1.mean, d.t2.mean, d.tc.mean), (0.0, 0.0, 0.0));
}

#[test]
fn halving_step_moves_estimate_less_than_pooled_error() {
    let g = moderate();
    let run = |h: f64| {
        let scale = 0.1 / h;
        let cfg = SimConfig { time_step: h, burn_in: (2000.0 * scale) as usize, measure_steps: (1000.0 * scale) as usize, seed: 3, ..SimConfig::default() };
        simulate_single(&g, 0.3, &cfg).unwrap().informed_fraction_combined.unwrap()
    };
    let (a, b) = (run(0.1), run(0.05));
    assert!((a.mean - b.mean).abs() < pooled(a, b), "{a:?} vs {b:?}");
}

#[test]
fn doubling_replications_shrinks_error_by_root_two() {
    let g = moderate();
    let se = |reps: usize| {
        let cfg = SimConfig { replications: reps, seed: 3, ..SimConfig::default() };
        simulate_single(&g, 0.3, &cfg).unwrap().informed_fraction_combined.unwrap().std_error
    };
    let ratio = se(40) / se(20);
    let target = std::f64::consts::FRAC_1_SQRT_2;
    assert!((ratio / target - 1.0).abs() < 0.2, "ratio {ratio}");
}

fn intelligence_check() -> ([f64; 3], [f64; 3]) {
    let sol = optimize(&MissionSpec::intelligence(0.0)).unwrap();
    let threat = ThreatModel::new(0.0);
    let region = Region::for_density(sol.params.lambda, 5000.0, 4.0 * sol.params.r1);
    let cfg = SimConfig { seed: 9, ..SimConfig::default() };
    let d = estimate_dissemination(&sol.params, &threat, &region, &cfg).unwrap();
    let model = degree_moments(&sol.params).unwrap();
    let rates = spreading_rates(&threat);
    let mf = |pmf: &[f64], a: f64| solve_theta(pmf, a, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().aggregate;
    (
        [d.t1.mean, d.t2.mean, d.tc.mean],
        [mf(&model.pmf_k1, rates.alpha1), mf(&model.pmf_k2, rates.alpha2), mf(&model.pmf_kc, rates.alphac)],
    )
}

#[test]
fn intelligence_optimum_layer1_matches_mean_field() {
    let (mc, mf) = intelligence_check();
    assert!((mc[0] - mf[0]).abs() < 0.05, "{mc:?} vs {mf:?}");
}

/// Layer 2 at this optimum has mean degree about 2.5, below the continuum
/// percolation point, so the geometric graph fragments and the degree-based
/// prediction overshoots.
#[test]
#[ignore = "fails: layer-2 graph at the optimum is below percolation"]
fn intelligence_optimum_all_messages_match_mean_field() {
    let (mc, mf) = intelligence_check();
    for i in 0..3 {
        assert!((mc[i] - mf[i]).abs() < 0.05, "{mc:?} vs {mf:?}");
    }
}
