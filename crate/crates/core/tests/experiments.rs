use benchtwin::bench::{Environment, CH_FORCE, CH_POSITION, CH_PRESSURE_A, CH_PRESSURE_B};
use benchtwin::control::{ReferenceSpec, ReferenceUnit};
use benchtwin::experiments::{
    run_blocked_test, run_repeatability, run_stiffness_id, simulate_run, simulate_runs, SeedPolicy,
};
use benchtwin::mechanics::FrictionParams;
use benchtwin::presets;
use benchtwin::{ExperimentError, ExperimentSpec, SimError};
use proptest::prelude::*;

fn frictionless_ideal_stiffness(runs: usize) -> ExperimentSpec {
    let mut spec = presets::stiffness_id();
    spec.runs = runs;
    spec.plant.friction = FrictionParams::none();
    spec.sensors = spec.sensors.ideal();
    spec
}

#[test]
fn fixed_seed_gives_identical_runs_and_zero_std() {
    let mut spec = presets::electric_repeatability();
    spec.seed_policy = SeedPolicy::Fixed;
    spec.runs = 3;
    spec.sim.duration = 0.5;
    let stats = run_repeatability(&spec).unwrap();
    for c in &stats.channels {
        assert!(c.std.iter().all(|&s| s == 0.0), "{}", c.name);
    }
    let runs = simulate_runs(&spec).unwrap();
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn per_run_seeds_spread_the_force() {
    let mut spec = presets::electric_repeatability();
    spec.runs = 3;
    spec.sim.duration = 0.5;
    let stats = run_repeatability(&spec).unwrap();
    assert!(stats.max_force_std() > 0.0);
}

#[test]
fn frictionless_ideal_spring_slope_within_tenth_of_a_percent() {
    let r = run_stiffness_id(&frictionless_ideal_stiffness(1)).unwrap();
    let k = presets::TEST_SPRING_N_PER_M;
    assert!(((r.regression.slope - k) / k).abs() <= 1e-3, "{}", r.regression.slope);
}

#[test]
fn encoder_quantisation_bounds_the_slope_error() {
    let mut spec = frictionless_ideal_stiffness(1);
    spec.sensors.encoder = presets::stiffness_id().sensors.encoder;
    let r = run_stiffness_id(&spec).unwrap();
    let k = presets::TEST_SPRING_N_PER_M;
    let bound = spec.sensors.encoder.resolution / r.displacement_span;
    // Plus the inertial and coupling error of the ideal-encoder case.
    let ideal = run_stiffness_id(&frictionless_ideal_stiffness(1))
        .unwrap()
        .regression
        .slope;
    let err = ((r.regression.slope - k) / k).abs();
    assert!(err <= bound + ((ideal - k) / k).abs(), "{err} vs {bound}");
}

#[test]
fn spring_energy_is_returned_over_a_cycle() {
    let spec = frictionless_ideal_stiffness(1);
    let ts = simulate_run(&spec, 0).unwrap();
    let x = ts.channel(CH_POSITION).unwrap();
    let f = ts.channel(CH_FORCE).unwrap();
    let peak = x.iter().enumerate().fold(0, |b, (i, v)| if *v > x[b] { i } else { b });
    let work =
        |range: std::ops::Range<usize>| -> f64 { range.map(|i| 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i])).sum() };
    let stored = 0.5 * presets::TEST_SPRING_N_PER_M * x[peak] * x[peak];
    let loading = work(0..peak);
    let cycle = work(0..x.len() - 1);
    assert!(((loading - stored) / stored).abs() < 5e-3, "{loading} vs {stored}");
    assert!((cycle / stored).abs() < 5e-3, "net work {cycle}");
}

#[test]
fn stiffness_without_motion_is_insufficient_excitation() {
    let mut spec = presets::stiffness_id();
    spec.runs = 1;
    spec.sim.duration = 1.0;
    spec.reference = ReferenceSpec::triangle(1e-6, 1.0, 1, ReferenceUnit::Metre);
    assert!(matches!(
        run_stiffness_id(&spec),
        Err(ExperimentError::InsufficientExcitation { .. })
    ));
}

#[test]
fn leaving_the_stroke_aborts_the_run() {
    let mut spec = presets::blocked();
    spec.kind = benchtwin::ExperimentKind::Repeatability;
    spec.runs = 2;
    spec.plant.environment = Environment::Free;
    spec.sim.duration = 1.0;
    match simulate_runs(&spec) {
        Err(ExperimentError::RunAborted {
            run: 0,
            source: SimError::StateLimit { .. },
        }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn hydraulic_pressures_stay_within_supply_margin() {
    let mut rep = presets::hydraulic_repeatability();
    rep.sim.duration = 2.0;
    let mut blk = presets::hydraulic_blocked();
    blk.sim.duration = 0.1;
    for mut spec in [rep, blk] {
        spec.sensors = spec.sensors.ideal();
        let ps = match spec.actuator {
            benchtwin::bench::ActuatorConfig::Hydraulic(h) => h.supply.supply_pressure,
            _ => unreachable!(),
        };
        let ts = simulate_run(&spec, 0).unwrap();
        for ch in [CH_PRESSURE_A, CH_PRESSURE_B] {
            for &p in ts.channel(ch).unwrap() {
                assert!((0.0..=1.5 * ps).contains(&p), "{}: {ch} = {p}", spec.name);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn blocked_peak_is_linear_in_step_amplitude(amplitude in 10.0f64..255.0) {
        let mut spec = presets::blocked();
        spec.runs = 2;
        spec.sim.duration = 0.15;
        spec.reference = ReferenceSpec::step(amplitude, 0.05, ReferenceUnit::Newton);
        let r = run_blocked_test(&spec).unwrap();
        let resolution = spec.sensors.encoder.resolution;
        let latch = match spec.plant.environment {
            Environment::Blockage(b) => b.latch_stiffness,
            _ => unreachable!(),
        };
        prop_assert!((r.mean - amplitude / latch).abs() <= resolution, "{} vs {}", r.mean, amplitude / latch);
    }
}
