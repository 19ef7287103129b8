//! Assembled bench: plant (car, actuator, environment), station (sensors and
//! controller) and the per-tick recorder.
//!
//! The load cell sits between the transmission car and the environment, so
//! its true reading is the force the car applies to the spring, latch or load
//! car. In manual mode an operator drives the car through the load cell
//! instead, and the cell reads the operator's push.

use crate::control::{impedance_outer, pi_step, ImpedanceParams, PiGains, PiState, ReferenceSpec};
use crate::electric::{stroke_guard, LinearMotorParams, StrokeStatus};
use crate::error::SimError;
use crate::hydraulic::{
    chamber_pressure_rate, clamp_spool, cylinder_force, spool_acceleration, supplied_flows, HydraulicActuator,
    SpoolState, SupplyCheck,
};
use crate::mechanics::{
    friction_force, spring_damper_force, BlockageCoupling, CarBody, EndStops, FrictionParams, SpringDamper,
};
use crate::sensing::{
    encoder_read, loadcell_read, pressure_read, EncoderModel, LoadCellModel, PressureSensor, PressureSensorModel,
};
use crate::sim::{Channel, Controller, Plant, Recorder, SimRng, TimeSeries};

pub const CH_REFERENCE: &str = "reference";
pub const CH_FORCE: &str = "force_meas_n";
pub const CH_POSITION: &str = "position_m";
pub const CH_VELOCITY: &str = "velocity_mps";
pub const CH_COMMAND: &str = "command";
pub const CH_PRESSURE_A: &str = "p_a_pa";
pub const CH_PRESSURE_B: &str = "p_b_pa";
pub const CH_FLAGS: &str = "flags";

/// Bits of the `flags` channel.
pub mod flags {
    pub const LOAD_CELL_CLIPPED: u32 = 1;
    pub const COMMAND_SATURATED: u32 = 2;
    pub const SUPPLY_SATURATED: u32 = 4;
    pub const STROKE_LIMIT: u32 = 8;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Environment {
    Free,
    Spring(SpringDamper),
    Blockage(BlockageCoupling),
    /// Load car rigidly bolted to the load cell.
    Mass {
        load_mass: f64,
    },
}

impl Environment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Free => "free",
            Self::Spring(_) => "spring",
            Self::Blockage(_) => "blockage",
            Self::Mass { .. } => "mass",
        }
    }
}

/// Compliant coupling through which an operator imposes a position profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionDriver {
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for PositionDriver {
    fn default() -> Self {
        Self {
            stiffness: 2e5,
            damping: 3000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig {
    pub car: CarBody,
    pub friction: FrictionParams,
    pub environment: Environment,
    pub end_stops: Option<EndStops>,
    pub driver: PositionDriver,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActuatorConfig {
    Hydraulic(HydraulicActuator),
    Electric(LinearMotorParams),
}

impl ActuatorConfig {
    pub fn is_hydraulic(&self) -> bool {
        matches!(self, Self::Hydraulic(_))
    }

    /// Force reached at full positive command.
    pub fn max_force(&self) -> f64 {
        match self {
            Self::Hydraulic(h) => h.max_force(),
            Self::Electric(m) => m.max_force,
        }
    }

    /// Symmetric travel about mid-stroke.
    pub fn travel_limits(&self) -> (f64, f64) {
        let half = match self {
            Self::Hydraulic(h) => h.cylinder.stroke / 2.0,
            Self::Electric(m) => m.max_stroke / 2.0,
        };
        (-half, half)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub encoder: EncoderModel,
    pub load_cell: LoadCellModel,
    pub pressure: PressureSensorModel,
}

impl SensorConfig {
    pub fn ideal(self) -> Self {
        Self {
            encoder: EncoderModel { resolution: 0.0 },
            load_cell: self.load_cell.ideal(),
            pressure: self.pressure.ideal(),
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.load_cell.noise_std = 0.0;
        self.pressure.noise_std = 0.0;
        self.pressure.accuracy_fraction = 0.0;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// PI force loop tracking a force reference.
    ForcePi,
    /// Impedance outer loop on a position reference around the PI force loop.
    Impedance,
    /// Command = force reference / actuator maximum force.
    OpenLoop,
    /// Actuator idle; an operator drives the car along a position reference.
    Manual,
}

impl ControlMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::ForcePi => "pi",
            Self::Impedance => "impedance",
            Self::OpenLoop => "open_loop",
            Self::Manual => "manual",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "pi" => Some(Self::ForcePi),
            "impedance" => Some(Self::Impedance),
            "open_loop" => Some(Self::OpenLoop),
            "manual" => Some(Self::Manual),
            _ => None,
        }
    }
}

/// Controller settings. PI gains are kept in drive volts, as tuned on the
/// bench, and normalised by [`pi_gains`](Self::pi_gains).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub mode: ControlMode,
    pub kp_v_per_n: f64,
    pub ki_v_per_n_s: f64,
    pub anti_windup: bool,
    pub impedance: Option<ImpedanceParams>,
}

impl ControllerConfig {
    pub fn pi_gains(&self) -> PiGains {
        PiGains::from_drive_volts(self.kp_v_per_n, self.ki_v_per_n_s, self.anti_windup)
    }
}

const IX_POS: usize = 0;
const IX_VEL: usize = 1;
const IX_MOTOR_FORCE: usize = 2;
const IX_SPOOL_POS: usize = 2;
const IX_SPOOL_VEL: usize = 3;
const IX_PA: usize = 4;
const IX_PB: usize = 5;

/// True quantities at a controller tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchObservation {
    pub position: f64,
    pub velocity: f64,
    pub load_cell_force: f64,
    pub actuator_force: f64,
    pub pressures: Option<(f64, f64)>,
    pub supply_saturated: bool,
    pub at_stroke_limit: bool,
}

struct Kinetics {
    actuator_force: f64,
    load_cell_force: f64,
    velocity: f64,
    supply: SupplyCheck,
}

/// Continuous plant of one bench configuration.
#[derive(Debug, Clone)]
pub struct BenchPlant {
    pub plant: PlantConfig,
    pub actuator: ActuatorConfig,
    /// Operator position profile; present only in manual mode.
    pub driver_profile: Option<ReferenceSpec>,
}

impl BenchPlant {
    pub fn new(plant: PlantConfig, actuator: ActuatorConfig, driver_profile: Option<ReferenceSpec>) -> Self {
        Self {
            plant,
            actuator,
            driver_profile,
        }
    }

    fn total_mass(&self) -> f64 {
        match self.plant.environment {
            Environment::Mass { load_mass } => self.plant.car.mass + load_mass,
            _ => self.plant.car.mass,
        }
    }

    /// Guide friction plus, for a cylinder, its seal friction.
    pub fn effective_friction(&self) -> FrictionParams {
        let mut f = self.plant.friction;
        if let ActuatorConfig::Hydraulic(h) = &self.actuator {
            f.coulomb_force += h.cylinder.seal_coulomb;
            f.viscous_coeff += h.cylinder.seal_viscous;
        }
        f
    }

    fn evaluate(&self, t: f64, x: &[f64], u: f64, dx: &mut [f64]) -> Kinetics {
        let pos = x[IX_POS];
        let mut supply = SupplyCheck::Ok;
        let mut flows = (0.0, 0.0);

        let actuator_force = match &self.actuator {
            ActuatorConfig::Electric(m) => {
                dx[IX_MOTOR_FORCE] = m.force_rate(u, x[IX_MOTOR_FORCE]);
                x[IX_MOTOR_FORCE]
            }
            ActuatorConfig::Hydraulic(h) => {
                let spool = SpoolState {
                    position: x[IX_SPOOL_POS],
                    velocity: x[IX_SPOOL_VEL],
                };
                dx[IX_SPOOL_POS] = spool.velocity;
                dx[IX_SPOOL_VEL] = spool_acceleration(u, &h.valve, spool);
                match supplied_flows(spool.position, &h.supply, x[IX_PA], x[IX_PB], &h.valve) {
                    Ok((qa, qb, check)) => {
                        flows = (qa, qb);
                        supply = check;
                    }
                    Err(_) => flows = (f64::NAN, f64::NAN),
                }
                cylinder_force(x[IX_PA], x[IX_PB], &h.cylinder)
            }
        };

        let (velocity, load_cell_force) = match self.plant.environment {
            Environment::Blockage(latch) => {
                // Quasi-static: the car deflects the latch path by F / k.
                let k = latch.latch_stiffness;
                let v = match &self.actuator {
                    ActuatorConfig::Electric(_) => dx[IX_MOTOR_FORCE] / k,
                    ActuatorConfig::Hydraulic(h) => {
                        let (va, vb) = h.cylinder.chamber_volumes(pos);
                        let (aa, ab) = (h.cylinder.cap_area(), h.cylinder.rod_side_area());
                        let beta = h.oil.bulk_modulus;
                        beta * (aa * flows.0 / va - ab * flows.1 / vb) / (k + beta * (aa * aa / va + ab * ab / vb))
                    }
                };
                dx[IX_POS] = v;
                dx[IX_VEL] = 0.0;
                (v, k * pos)
            }
            env => {
                let v = x[IX_VEL];
                let mut f_env = 0.0;
                let mut f_cell = 0.0;
                if let Environment::Spring(sd) = env {
                    let (d, r) = sd.deflection(&[pos], &[v]);
                    f_env = spring_damper_force(d, r, &sd);
                    f_cell = -f_env;
                }
                let mut f_driver = 0.0;
                if let Some(profile) = &self.driver_profile {
                    let drv = self.plant.driver;
                    f_driver = drv.stiffness * (profile.value(t) - pos) + drv.damping * (profile.rate(t) - v);
                    f_cell = f_driver;
                }
                let f_stop = self
                    .plant
                    .end_stops
                    .map_or(0.0, |s| s.force(pos, v, self.plant.car.travel_limits));
                let applied = actuator_force + f_env + f_driver + f_stop;
                let a = (applied + friction_force(v, applied, &self.effective_friction())) / self.total_mass();
                if let Environment::Mass { load_mass } = env {
                    if self.driver_profile.is_none() {
                        f_cell = load_mass * a;
                    }
                }
                dx[IX_POS] = v;
                dx[IX_VEL] = a;
                (v, f_cell)
            }
        };

        if let ActuatorConfig::Hydraulic(h) = &self.actuator {
            let (va, vb) = h.cylinder.chamber_volumes(pos);
            let (aa, ab) = (h.cylinder.cap_area(), h.cylinder.rod_side_area());
            dx[IX_PA] = chamber_pressure_rate(x[IX_PA], va, flows.0, aa * velocity, &h.oil).unwrap_or(f64::NAN);
            dx[IX_PB] = chamber_pressure_rate(x[IX_PB], vb, flows.1, -ab * velocity, &h.oil).unwrap_or(f64::NAN);
        }

        Kinetics {
            actuator_force,
            load_cell_force,
            velocity,
            supply,
        }
    }
}

impl Plant for BenchPlant {
    type Command = f64;
    type Observation = BenchObservation;

    fn state_names(&self) -> Vec<String> {
        let mut names = vec!["car_position_m".to_string(), "car_velocity_mps".to_string()];
        match self.actuator {
            ActuatorConfig::Electric(_) => names.push("motor_force_n".into()),
            ActuatorConfig::Hydraulic(_) => names.extend(
                [
                    "spool_position",
                    "spool_velocity_per_s",
                    "pressure_a_pa",
                    "pressure_b_pa",
                ]
                .map(String::from),
            ),
        }
        names
    }

    fn initial_state(&self) -> Vec<f64> {
        let mut x = vec![self.plant.car.position, self.plant.car.velocity];
        match &self.actuator {
            ActuatorConfig::Electric(_) => x.push(0.0),
            ActuatorConfig::Hydraulic(h) => {
                let (pa, pb) = h.start_pressures();
                x.extend([0.0, 0.0, pa, pb]);
            }
        }
        if matches!(self.plant.environment, Environment::Blockage(_)) {
            x[IX_VEL] = 0.0;
            // Start on the latch line for the initial actuator force.
            let f0 = match &self.actuator {
                ActuatorConfig::Electric(_) => 0.0,
                ActuatorConfig::Hydraulic(h) => {
                    let (pa, pb) = h.start_pressures();
                    cylinder_force(pa, pb, &h.cylinder)
                }
            };
            if let Environment::Blockage(latch) = self.plant.environment {
                x[IX_POS] = f0 / latch.latch_stiffness;
            }
        }
        x
    }

    fn derivatives(&self, t: f64, x: &[f64], u: f64, dx: &mut [f64]) {
        self.evaluate(t, x, u, dx);
    }

    fn project(&self, x: &mut [f64]) {
        match &self.actuator {
            ActuatorConfig::Electric(m) => {
                x[IX_MOTOR_FORCE] = x[IX_MOTOR_FORCE].clamp(-m.max_force, m.max_force);
            }
            ActuatorConfig::Hydraulic(_) => {
                let s = clamp_spool(SpoolState {
                    position: x[IX_SPOOL_POS],
                    velocity: x[IX_SPOOL_VEL],
                });
                x[IX_SPOOL_POS] = s.position;
                x[IX_SPOOL_VEL] = s.velocity;
                x[IX_PA] = x[IX_PA].max(0.0);
                x[IX_PB] = x[IX_PB].max(0.0);
            }
        }
    }

    fn check(&self, t: f64, x: &[f64]) -> Result<(), SimError> {
        if self.plant.end_stops.is_some() || matches!(self.plant.environment, Environment::Blockage(_)) {
            return Ok(());
        }
        let pos = x[IX_POS];
        if !self.plant.car.within_travel(pos) {
            let (lo, hi) = self.plant.car.travel_limits;
            return Err(SimError::StateLimit {
                what: format!("car position {pos:.6} m outside travel [{lo}, {hi}] m with end stops disabled"),
                time: t,
            });
        }
        Ok(())
    }

    fn observe(&self, t: f64, x: &[f64], held: f64) -> BenchObservation {
        let mut scratch = vec![0.0; x.len()];
        let k = self.evaluate(t, x, held, &mut scratch);
        let at_stroke_limit = match &self.actuator {
            ActuatorConfig::Electric(m) => stroke_guard(x[IX_POS], 0.0, m) == StrokeStatus::AtLimit,
            ActuatorConfig::Hydraulic(h) => x[IX_POS].abs() > h.cylinder.stroke / 2.0,
        };
        BenchObservation {
            position: x[IX_POS],
            velocity: k.velocity,
            load_cell_force: k.load_cell_force,
            actuator_force: k.actuator_force,
            pressures: self.actuator.is_hydraulic().then(|| (x[IX_PA], x[IX_PB])),
            supply_saturated: matches!(k.supply, SupplyCheck::Saturated { .. }),
            at_stroke_limit,
        }
    }
}

/// One recorded tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSample {
    pub reference: f64,
    pub force: f64,
    pub position: f64,
    pub velocity: f64,
    pub command: f64,
    pub pressures: Option<(f64, f64)>,
    pub flags: u32,
}

/// Sensors plus the discrete controller.
#[derive(Debug, Clone)]
pub struct BenchStation {
    pub mode: ControlMode,
    pub gains: PiGains,
    pub impedance: Option<ImpedanceParams>,
    pub reference: ReferenceSpec,
    pub dt_control: f64,
    pub open_loop_full_scale: f64,
    pub sensors: SensorConfig,
    pub hydraulic: bool,
    pi: PiState,
    prev_position: Option<f64>,
    pressure_sensors: Option<[PressureSensor; 2]>,
}

impl BenchStation {
    pub fn new(
        controller: &ControllerConfig,
        reference: ReferenceSpec,
        sensors: SensorConfig,
        actuator: &ActuatorConfig,
        dt_control: f64,
    ) -> Self {
        Self {
            mode: controller.mode,
            gains: controller.pi_gains(),
            impedance: controller.impedance,
            reference,
            dt_control,
            open_loop_full_scale: actuator.max_force(),
            sensors,
            hydraulic: actuator.is_hydraulic(),
            pi: PiState::default(),
            prev_position: None,
            pressure_sensors: None,
        }
    }
}

impl Controller<BenchObservation> for BenchStation {
    type Command = f64;
    type Sample = BenchSample;

    fn initial_command(&self) -> f64 {
        0.0
    }

    fn update(&mut self, t: f64, obs: &BenchObservation, rng: &mut SimRng) -> (f64, BenchSample) {
        let mut bits = 0;
        let cell = loadcell_read(obs.load_cell_force, &self.sensors.load_cell, rng);
        if cell.clipped {
            bits |= flags::LOAD_CELL_CLIPPED;
        }
        let position = encoder_read(obs.position, &self.sensors.encoder);
        let velocity = self.prev_position.map_or(0.0, |p| (position - p) / self.dt_control);
        self.prev_position = Some(position);

        let pressures = match (self.hydraulic, obs.pressures) {
            (true, Some((pa, pb))) => {
                let model = self.sensors.pressure;
                let sensors = *self
                    .pressure_sensors
                    .get_or_insert_with(|| [PressureSensor::new(model, rng), PressureSensor::new(model, rng)]);
                Some((pressure_read(pa, &sensors[0], rng), pressure_read(pb, &sensors[1], rng)))
            }
            _ => None,
        };

        let reference = self.reference.value(t);
        let command = match self.mode {
            ControlMode::ForcePi => pi_step(reference, cell.force, &mut self.pi, self.dt_control, &self.gains),
            ControlMode::Impedance => {
                let params = self.impedance.unwrap_or(ImpedanceParams {
                    stiffness: 0.0,
                    damping: 0.0,
                });
                let force_ref = impedance_outer(position, velocity, reference, self.reference.rate(t), &params);
                pi_step(force_ref, cell.force, &mut self.pi, self.dt_control, &self.gains)
            }
            ControlMode::OpenLoop => (reference / self.open_loop_full_scale).clamp(-1.0, 1.0),
            ControlMode::Manual => 0.0,
        };
        if command.abs() >= PiGains::OUTPUT_LIMIT {
            bits |= flags::COMMAND_SATURATED;
        }
        if obs.supply_saturated {
            bits |= flags::SUPPLY_SATURATED;
        }
        if obs.at_stroke_limit {
            bits |= flags::STROKE_LIMIT;
        }
        (
            command,
            BenchSample {
                reference,
                force: cell.force,
                position,
                velocity,
                command,
                pressures,
                flags: bits,
            },
        )
    }
}

/// Column-oriented recorder producing the run-record channel layout.
#[derive(Debug, Clone, Default)]
pub struct BenchRecorder {
    hydraulic: bool,
    time: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl BenchRecorder {
    pub fn new(hydraulic: bool, capacity: usize) -> Self {
        let n = channel_names(hydraulic).len();
        Self {
            hydraulic,
            time: Vec::with_capacity(capacity),
            columns: (0..n).map(|_| Vec::with_capacity(capacity)).collect(),
        }
    }
}

/// Channel order of a run record (time excluded).
pub fn channel_names(hydraulic: bool) -> Vec<&'static str> {
    let mut names = vec![CH_REFERENCE, CH_FORCE, CH_POSITION, CH_VELOCITY, CH_COMMAND];
    if hydraulic {
        names.extend([CH_PRESSURE_A, CH_PRESSURE_B]);
    }
    names.push(CH_FLAGS);
    names
}

impl Recorder<BenchSample> for BenchRecorder {
    fn record(&mut self, t: f64, s: &BenchSample) {
        self.time.push(t);
        let mut values = vec![s.reference, s.force, s.position, s.velocity, s.command];
        if self.hydraulic {
            let (pa, pb) = s.pressures.unwrap_or((f64::NAN, f64::NAN));
            values.extend([pa, pb]);
        }
        values.push(f64::from(s.flags));
        for (col, v) in self.columns.iter_mut().zip(values) {
            col.push(v);
        }
    }

    fn finish(self) -> TimeSeries {
        let channels = channel_names(self.hydraulic)
            .into_iter()
            .zip(self.columns)
            .map(|(name, data)| Channel {
                name: name.to_string(),
                data,
            })
            .collect();
        TimeSeries {
            time: self.time,
            channels,
        }
    }
}
