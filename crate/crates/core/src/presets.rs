//! Built-in experiment presets.

use crate::bench::{
    ActuatorConfig, ControlMode, ControllerConfig, Environment, PlantConfig, PositionDriver, SensorConfig,
};
use crate::control::{ReferenceSpec, ReferenceUnit};
use crate::electric::LinearMotorParams;
use crate::experiments::{ExperimentKind, ExperimentSpec, SeedPolicy};
use crate::hydraulic::{HydraulicActuator, ValvePreset};
use crate::mechanics::{BlockageCoupling, CarBody, FrictionParams, SpringDamper};
use crate::sensing::{EncoderModel, LoadCellModel, PressureSensorModel};
use crate::sim::{SimConfig, DEFAULT_DT_CONTROL, DEFAULT_DT_PHYSICS};

pub const NAMES: [&str; 5] = [
    "hydraulic-repeatability",
    "electric-repeatability",
    "blocked",
    "stiffness-id",
    "hydraulic-blocked",
];

/// Transmission car plus slider mass.
pub const CAR_MASS_KG: f64 = 8.0;
/// Spring used by the electric repeatability and stiffness tests.
pub const TEST_SPRING_N_PER_M: f64 = 6000.0;
/// Damping of the spring coupling in the electric repeatability environment.
pub const TEST_SPRING_DAMPING_N_S_PER_M: f64 = 100.0;
/// Softer spring for the hydraulic force loop; against 6 kN/m the loop
/// crossover lands on the oil-column resonance.
pub const HYDRAULIC_SPRING_N_PER_M: f64 = 2000.0;
pub const BASE_SEED: u64 = 20_240_501;

pub fn by_name(name: &str) -> Option<ExperimentSpec> {
    match name {
        "hydraulic-repeatability" => Some(hydraulic_repeatability()),
        "electric-repeatability" => Some(electric_repeatability()),
        "blocked" => Some(blocked()),
        "stiffness-id" => Some(stiffness_id()),
        "hydraulic-blocked" => Some(hydraulic_blocked()),
        _ => None,
    }
}

pub fn all() -> Vec<ExperimentSpec> {
    NAMES.iter().filter_map(|n| by_name(n)).collect()
}

pub fn description(name: &str) -> &'static str {
    match name {
        "hydraulic-repeatability" => "E024 cylinder at 10 MPa, PI force loop, 50 N / 0.1 Hz sine, 10 runs",
        "electric-repeatability" => "linear motor, PI force loop, 75 N / 2 Hz sine, 10 runs",
        "blocked" => "linear motor stepped to 255 N against the blockage car, 10 runs",
        "stiffness-id" => "manual 20 mm triangular compression of a 6 kN/m spring, 10 runs",
        "hydraulic-blocked" => "E024 cylinder fully opened against the blockage car at 10 MPa",
        _ => "",
    }
}

fn electric_actuator() -> ActuatorConfig {
    ActuatorConfig::Electric(LinearMotorParams::linmot_p01())
}

fn hydraulic_actuator() -> ActuatorConfig {
    ActuatorConfig::Hydraulic(HydraulicActuator::new(ValvePreset::E024, 10e6))
}

fn plant(actuator: &ActuatorConfig, environment: Environment) -> PlantConfig {
    PlantConfig {
        car: CarBody::new(CAR_MASS_KG, actuator.travel_limits()),
        friction: FrictionParams::default(),
        environment,
        end_stops: None,
        driver: PositionDriver::default(),
    }
}

fn electric_sensors() -> SensorConfig {
    SensorConfig {
        encoder: EncoderModel::rls_lm10(),
        load_cell: LoadCellModel::smt1_250(),
        pressure: PressureSensorModel::nat_8251(),
    }
}

fn hydraulic_sensors() -> SensorConfig {
    SensorConfig {
        load_cell: LoadCellModel::burster_8417(),
        ..electric_sensors()
    }
}

fn sim(duration: f64) -> SimConfig {
    SimConfig {
        dt_physics: DEFAULT_DT_PHYSICS,
        dt_control: DEFAULT_DT_CONTROL,
        duration,
        seed: BASE_SEED,
    }
}

fn pi(kp_v_per_n: f64, ki_v_per_n_s: f64) -> ControllerConfig {
    ControllerConfig {
        mode: ControlMode::ForcePi,
        kp_v_per_n,
        ki_v_per_n_s,
        anti_windup: true,
        impedance: None,
    }
}

fn test_spring(damping: f64) -> Environment {
    Environment::Spring(SpringDamper::grounded(TEST_SPRING_N_PER_M, damping))
}

fn hydraulic_spring() -> Environment {
    Environment::Spring(SpringDamper::grounded(HYDRAULIC_SPRING_N_PER_M, 0.0))
}

pub fn hydraulic_repeatability() -> ExperimentSpec {
    let actuator = hydraulic_actuator();
    ExperimentSpec {
        name: "hydraulic-repeatability".into(),
        kind: ExperimentKind::Repeatability,
        runs: 10,
        seed_policy: SeedPolicy::PerRun,
        sim: sim(10.0),
        plant: plant(&actuator, hydraulic_spring()),
        actuator,
        sensors: hydraulic_sensors(),
        controller: pi(1.5, 1.5),
        reference: ReferenceSpec::sine(50.0, 0.1, ReferenceUnit::Newton),
    }
}

pub fn electric_repeatability() -> ExperimentSpec {
    let actuator = electric_actuator();
    ExperimentSpec {
        name: "electric-repeatability".into(),
        kind: ExperimentKind::Repeatability,
        runs: 10,
        seed_policy: SeedPolicy::PerRun,
        sim: sim(5.0),
        plant: plant(&actuator, test_spring(TEST_SPRING_DAMPING_N_S_PER_M)),
        actuator,
        sensors: electric_sensors(),
        controller: pi(0.73, 0.03),
        reference: ReferenceSpec::sine(75.0, 2.0, ReferenceUnit::Newton),
    }
}

pub fn blocked() -> ExperimentSpec {
    let actuator = electric_actuator();
    ExperimentSpec {
        name: "blocked".into(),
        kind: ExperimentKind::Blocked,
        runs: 10,
        seed_policy: SeedPolicy::PerRun,
        sim: sim(0.3),
        plant: plant(&actuator, Environment::Blockage(BlockageCoupling::default())),
        actuator,
        sensors: electric_sensors(),
        controller: ControllerConfig {
            mode: ControlMode::OpenLoop,
            ..pi(0.73, 0.03)
        },
        reference: ReferenceSpec::step(actuator.max_force(), 0.05, ReferenceUnit::Newton),
    }
}

pub fn hydraulic_blocked() -> ExperimentSpec {
    let actuator = hydraulic_actuator();
    ExperimentSpec {
        name: "hydraulic-blocked".into(),
        kind: ExperimentKind::Blocked,
        runs: 1,
        seed_policy: SeedPolicy::PerRun,
        sim: sim(0.2),
        plant: plant(&actuator, Environment::Blockage(BlockageCoupling::default())),
        actuator,
        sensors: hydraulic_sensors(),
        controller: ControllerConfig {
            mode: ControlMode::OpenLoop,
            ..pi(1.5, 1.5)
        },
        reference: ReferenceSpec::step(actuator.max_force(), 0.01, ReferenceUnit::Newton),
    }
}

pub fn stiffness_id() -> ExperimentSpec {
    let actuator = electric_actuator();
    ExperimentSpec {
        name: "stiffness-id".into(),
        kind: ExperimentKind::StiffnessId,
        runs: 10,
        seed_policy: SeedPolicy::PerRun,
        sim: SimConfig {
            dt_physics: 1e-4,
            ..sim(20.0)
        },
        plant: plant(&actuator, test_spring(0.0)),
        actuator,
        sensors: electric_sensors(),
        controller: ControllerConfig {
            mode: ControlMode::Manual,
            ..pi(0.0, 0.0)
        },
        reference: ReferenceSpec::triangle(0.020, 20.0, 1, ReferenceUnit::Metre),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves_and_validates() {
        for name in NAMES {
            let spec = by_name(name).unwrap();
            assert_eq!(spec.name, name);
            spec.validate().unwrap();
            assert!(!description(name).is_empty());
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn electric_gains_in_drive_volts() {
        let g = electric_repeatability().controller.pi_gains();
        assert!((g.kp - 0.073).abs() < 1e-15);
        assert!((g.ki - 0.003).abs() < 1e-15);
    }
}
