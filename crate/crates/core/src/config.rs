//! Bench configuration documents.
//!
//! A document has the sections `[sim] [plant] [actuator] [sensors]
//! [controller] [reference] [experiment]`. Every physical key carries its SI
//! unit in the name. `experiment.preset` names a built-in experiment whose
//! values fill every key the document leaves out; without a preset all
//! sections and their required keys must be present.
//!
//! Parsing collects every problem instead of stopping at the first.

use std::fmt::Write as _;

use toml::{Table, Value};

use crate::bench::{
    ActuatorConfig, ControlMode, ControllerConfig, Environment, PlantConfig, PositionDriver, SensorConfig,
};
use crate::control::{ImpedanceParams, ReferenceSpec, ReferenceUnit, Waveform};
use crate::electric::LinearMotorParams;
use crate::error::{ConfigError, ConfigIssue};
use crate::experiments::{ExperimentKind, ExperimentSpec, SeedPolicy};
use crate::hydraulic::{HydraulicActuator, ValvePreset, HPU_MAX_FLOW_M3_S, HPU_MAX_PRESSURE_PA};
use crate::mechanics::{BlockageCoupling, CarBody, EndStops, FrictionParams, SpringDamper, MAX_CAR_MASS_KG};
use crate::presets;
use crate::sensing::{EncoderModel, LoadCellModel, PressureSensorModel};
use crate::sim::{SimConfig, DEFAULT_DT_CONTROL, DEFAULT_DT_PHYSICS};

pub const SECTIONS: [&str; 7] = [
    "sim",
    "plant",
    "actuator",
    "sensors",
    "controller",
    "reference",
    "experiment",
];

#[derive(Default)]
struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn check(&mut self, ok: bool, path: String, message: impl Into<String>) {
        if !ok {
            self.push(path, message);
        }
    }
}

/// Key access to one section, remembering which keys were consumed.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: Vec<String>,
}

impl<'a> Section<'a> {
    fn new(doc: &'a Table, name: &'static str) -> Self {
        Self {
            name,
            table: doc.get(name).and_then(Value::as_table),
            used: Vec::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{}", self.name, key)
    }

    fn has(&self, key: &str) -> bool {
        self.table.is_some_and(|t| t.contains_key(key))
    }

    fn get(&mut self, key: &str) -> Option<&'a Value> {
        let v = self.table?.get(key)?;
        self.used.push(key.to_string());
        Some(v)
    }

    fn missing(&self, is: &mut Issues, key: &str) {
        // A missing section is reported once at section level.
        if self.table.is_some() {
            is.push(self.path(key), "missing required key");
        }
    }

    fn f64(&mut self, is: &mut Issues, key: &str) -> Option<f64> {
        let path = self.path(key);
        match self.get(key)? {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            other => {
                is.push(path, format!("expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn f64_or(&mut self, is: &mut Issues, key: &str, default: f64) -> f64 {
        self.f64(is, key).unwrap_or(default)
    }

    /// Value from the document, else from `base`, else reported missing.
    fn f64_req(&mut self, is: &mut Issues, key: &str, base: Option<f64>) -> f64 {
        match (self.has(key), base) {
            (false, Some(b)) => b,
            (false, None) => {
                self.missing(is, key);
                f64::NAN
            }
            (true, b) => self.f64(is, key).or(b).unwrap_or(f64::NAN),
        }
    }

    fn string(&mut self, is: &mut Issues, key: &str) -> Option<String> {
        let path = self.path(key);
        match self.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                is.push(path, format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn bool(&mut self, is: &mut Issues, key: &str) -> Option<bool> {
        let path = self.path(key);
        match self.get(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                is.push(path, format!("expected true or false, found {}", other.type_str()));
                None
            }
        }
    }

    fn u64(&mut self, is: &mut Issues, key: &str) -> Option<u64> {
        let path = self.path(key);
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::String(s) => match s.parse::<u64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    is.push(path, format!("`{s}` is not an unsigned integer"));
                    None
                }
            },
            other => {
                is.push(
                    path,
                    format!("expected a non-negative integer, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn f64_list(&mut self, is: &mut Issues, key: &str) -> Option<Vec<f64>> {
        let path = self.path(key);
        let Value::Array(items) = self.get(key)? else {
            is.push(path, "expected an array of numbers");
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for v in items {
            match v {
                Value::Float(f) => out.push(*f),
                Value::Integer(i) => out.push(*i as f64),
                _ => {
                    is.push(path, "expected an array of numbers");
                    return None;
                }
            }
        }
        Some(out)
    }

    fn finish(self, is: &mut Issues) {
        let Some(t) = self.table else { return };
        for key in t.keys() {
            if !self.used.iter().any(|u| u == key) {
                is.push(self.path(key), "unknown key");
            }
        }
    }
}

fn positive(is: &mut Issues, path: String, v: f64) {
    is.check(
        v.is_nan() || (v.is_finite() && v > 0.0),
        path,
        format!("must be positive, got {v}"),
    );
}

fn non_negative(is: &mut Issues, path: String, v: f64) {
    is.check(
        v.is_nan() || (v.is_finite() && v >= 0.0),
        path,
        format!("must be non-negative, got {v}"),
    );
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    spec_from_table(&parse_document(text)?)
}

/// TOML syntax only.
pub fn parse_document(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>().map_err(|e| {
        let msg = e.to_string();
        let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid document");
        ConfigError::single("", format!("syntax error: {}", first.trim()))
    })
}

/// Sets `section.key` in a parsed document, creating the section if needed.
pub fn set_key(doc: &mut Table, dotted: &str, value: Value) -> Result<(), ConfigError> {
    let Some((section, key)) = dotted.split_once('.') else {
        return Err(ConfigError::single(dotted, "expected `section.key`"));
    };
    if !SECTIONS.contains(&section) {
        return Err(ConfigError::single(section, "unknown section"));
    }
    let entry = doc
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(ConfigError::single(section, "is not a table")),
    }
}

pub fn spec_from_table(doc: &Table) -> Result<ExperimentSpec, ConfigError> {
    let mut is = Issues::default();
    for (key, value) in doc {
        if !SECTIONS.contains(&key.as_str()) {
            is.push(key.clone(), "unknown section");
        } else if !value.is_table() {
            is.push(key.clone(), "must be a table");
        }
    }

    let mut exp = Section::new(doc, "experiment");
    let preset_name = exp.string(&mut is, "preset");
    let base = match &preset_name {
        Some(n) => {
            let found = presets::by_name(n);
            if found.is_none() {
                is.push(
                    "experiment.preset",
                    format!("unknown preset `{n}` (known: {})", presets::NAMES.join(", ")),
                );
            }
            found
        }
        None => {
            for s in SECTIONS {
                if !doc.contains_key(s) {
                    is.push(s, "missing required section");
                }
            }
            None
        }
    };
    let base = base.as_ref();

    let kind = match exp.string(&mut is, "kind") {
        Some(k) => ExperimentKind::from_name(&k).or_else(|| {
            is.push(
                "experiment.kind",
                format!("unknown kind `{k}` (repeatability, blocked, stiffness-id)"),
            );
            None
        }),
        None => {
            if base.is_none() && preset_name.is_none() {
                exp.missing(&mut is, "kind");
            }
            base.map(|b| b.kind)
        }
    };
    let name = exp
        .string(&mut is, "name")
        .or_else(|| base.map(|b| b.name.clone()))
        .or_else(|| kind.map(|k| k.name().to_string()))
        .unwrap_or_default();
    let runs = match exp.u64(&mut is, "runs") {
        Some(r) => Some(r as usize),
        None if exp.has("runs") => None,
        None => {
            if base.is_none() {
                exp.missing(&mut is, "runs");
            }
            base.map(|b| b.runs)
        }
    };
    if runs == Some(0) {
        is.push("experiment.runs", "must be at least 1");
    }
    let seed_policy = match exp.string(&mut is, "seed_policy") {
        Some(s) => SeedPolicy::from_name(&s).unwrap_or_else(|| {
            is.push(
                "experiment.seed_policy",
                format!("unknown policy `{s}` (fixed, per_run)"),
            );
            SeedPolicy::PerRun
        }),
        None => base.map_or(SeedPolicy::PerRun, |b| b.seed_policy),
    };
    exp.finish(&mut is);

    let sim = read_sim(doc, &mut is, base);
    let actuator = read_actuator(doc, &mut is, base);
    let controller = read_controller(doc, &mut is, base);
    let plant = actuator.as_ref().map(|a| read_plant(doc, &mut is, base, a));
    let sensors = read_sensors(doc, &mut is, base);
    let reference = read_reference(doc, &mut is, base, controller.map(|c| c.mode));

    let (Some(kind), Some(runs), Some(actuator), Some(plant), Some(controller), Some(reference)) =
        (kind, runs, actuator, plant.flatten(), controller, reference)
    else {
        return Err(finish(is));
    };
    if !is.0.is_empty() {
        return Err(finish(is));
    }
    let spec = ExperimentSpec {
        name,
        kind,
        runs,
        seed_policy,
        sim,
        plant,
        actuator,
        sensors,
        controller,
        reference,
    };
    if let Err(e) = spec.validate() {
        is.push("experiment", e.to_string());
        return Err(finish(is));
    }
    Ok(spec)
}

fn finish(is: Issues) -> ConfigError {
    let mut issues = is.0;
    if issues.is_empty() {
        issues.push(ConfigIssue {
            path: String::new(),
            message: "incomplete configuration".into(),
        });
    }
    ConfigError { issues }
}

fn read_sim(doc: &Table, is: &mut Issues, base: Option<&ExperimentSpec>) -> SimConfig {
    let mut s = Section::new(doc, "sim");
    let b = base.map(|b| b.sim);
    let dt_physics = s.f64_or(is, "dt_physics_s", b.map_or(DEFAULT_DT_PHYSICS, |b| b.dt_physics));
    let dt_control = s.f64_or(is, "dt_control_s", b.map_or(DEFAULT_DT_CONTROL, |b| b.dt_control));
    let duration = s.f64_req(is, "duration_s", b.map(|b| b.duration));
    let seed = match s.u64(is, "seed") {
        Some(v) => v,
        None => {
            if !s.has("seed") && b.is_none() {
                s.missing(is, "seed");
            }
            b.map_or(0, |b| b.seed)
        }
    };
    s.finish(is);
    let sim = SimConfig {
        dt_physics,
        dt_control,
        duration,
        seed,
    };
    if !duration.is_nan() {
        if let Err(e) = sim.schedule() {
            is.push("sim", e.to_string());
        }
    }
    sim
}

fn read_actuator(doc: &Table, is: &mut Issues, base: Option<&ExperimentSpec>) -> Option<ActuatorConfig> {
    let mut s = Section::new(doc, "actuator");
    let base_act = base.map(|b| b.actuator);
    let kind = match s.string(is, "type") {
        Some(t) if t == "hydraulic" || t == "electric" => Some(t),
        Some(t) => {
            is.push(
                s.path("type"),
                format!("unknown actuator type `{t}` (hydraulic, electric)"),
            );
            None
        }
        None => {
            if base_act.is_none() {
                s.missing(is, "type");
            }
            base_act.map(|a| {
                if a.is_hydraulic() {
                    "hydraulic".into()
                } else {
                    "electric".into()
                }
            })
        }
    };
    let out = match kind.as_deref() {
        Some("hydraulic") => {
            let mut h = match base_act {
                Some(ActuatorConfig::Hydraulic(h)) => h,
                _ => HydraulicActuator::new(ValvePreset::E024, f64::NAN),
            };
            if let Some(v) = s.string(is, "valve") {
                match ValvePreset::from_name(&v) {
                    Some(p) => h.valve = p.params(),
                    None => is.push(s.path("valve"), format!("unknown valve `{v}` (E024, G761)")),
                }
            }
            let base_ps = (!h.supply.supply_pressure.is_nan()).then_some(h.supply.supply_pressure);
            h.supply.supply_pressure = s.f64_req(is, "supply_pressure_pa", base_ps);
            h.supply.max_flow = s.f64_or(is, "supply_max_flow_m3_per_s", h.supply.max_flow);
            h.supply.tank_pressure = s.f64_or(is, "tank_pressure_pa", h.supply.tank_pressure);
            let v = &mut h.valve;
            v.bandwidth_hz = s.f64_or(is, "valve_bandwidth_hz", v.bandwidth_hz);
            v.damping_ratio = s.f64_or(is, "valve_damping_ratio", v.damping_ratio);
            v.rated_flow = s.f64_or(is, "rated_flow_m3_per_s", v.rated_flow);
            v.rated_pressure_drop = s.f64_or(is, "rated_pressure_drop_pa", v.rated_pressure_drop);
            v.leakage_coeff = s.f64_or(is, "leakage_m3_per_s_pa", v.leakage_coeff);
            v.transition_pressure = s.f64_or(is, "transition_pressure_pa", v.transition_pressure);
            let c = &mut h.cylinder;
            c.stroke = s.f64_or(is, "stroke_m", c.stroke);
            c.bore_diameter = s.f64_or(is, "bore_diameter_m", c.bore_diameter);
            c.rod_diameter = s.f64_or(is, "rod_diameter_m", c.rod_diameter);
            c.dead_volume = s.f64_or(is, "dead_volume_m3", c.dead_volume);
            c.line_volume = s.f64_or(is, "line_volume_m3", c.line_volume);
            c.seal_coulomb = s.f64_or(is, "seal_coulomb_n", c.seal_coulomb);
            c.seal_viscous = s.f64_or(is, "seal_viscous_n_s_per_m", c.seal_viscous);
            let o = &mut h.oil;
            o.density = s.f64_or(is, "oil_density_kg_per_m3", o.density);
            o.kinematic_viscosity = s.f64_or(is, "oil_kinematic_viscosity_m2_per_s", o.kinematic_viscosity);
            o.bulk_modulus = s.f64_or(is, "bulk_modulus_pa", o.bulk_modulus);
            let pa = s.f64(is, "initial_pressure_a_pa");
            let pb = s.f64(is, "initial_pressure_b_pa");
            match (pa, pb) {
                (Some(a), Some(b)) => h.initial_pressures = Some((a, b)),
                (None, None) => {}
                _ => is.push(
                    "actuator",
                    "initial_pressure_a_pa and initial_pressure_b_pa must be given together",
                ),
            }
            validate_hydraulic(is, &h);
            Some(ActuatorConfig::Hydraulic(h))
        }
        Some("electric") => {
            let mut m = match base_act {
                Some(ActuatorConfig::Electric(m)) => m,
                _ => LinearMotorParams::linmot_p01(),
            };
            if let Some(name) = s.string(is, "motor") {
                match LinearMotorParams::from_preset(&name) {
                    Some(p) => m = p,
                    None => is.push(s.path("motor"), format!("unknown motor `{name}` (LinMot-P01)")),
                }
            }
            m.max_force = s.f64_or(is, "max_force_n", m.max_force);
            m.max_stroke = s.f64_or(is, "max_stroke_m", m.max_stroke);
            m.force_constant = s.f64_or(is, "force_constant_n", m.force_constant);
            m.drive_time_constant = s.f64_or(is, "drive_time_constant_s", m.drive_time_constant);
            positive(is, s.path("max_force_n"), m.max_force);
            positive(is, s.path("max_stroke_m"), m.max_stroke);
            positive(is, s.path("force_constant_n"), m.force_constant);
            positive(is, s.path("drive_time_constant_s"), m.drive_time_constant);
            Some(ActuatorConfig::Electric(m))
        }
        _ => None,
    };
    s.finish(is);
    out
}

fn validate_hydraulic(is: &mut Issues, h: &HydraulicActuator) {
    let p = |k: &str| format!("actuator.{k}");
    let ps = h.supply.supply_pressure;
    if ps > HPU_MAX_PRESSURE_PA {
        is.push(p("supply_pressure_pa"), format!("{ps} Pa exceeds HPU limit 20.7e6"));
    }
    positive(is, p("supply_pressure_pa"), ps);
    let q = h.supply.max_flow;
    if q > HPU_MAX_FLOW_M3_S {
        is.push(
            p("supply_max_flow_m3_per_s"),
            format!("{q} m3/s exceeds HPU limit 1.67e-4"),
        );
    }
    positive(is, p("supply_max_flow_m3_per_s"), q);
    non_negative(is, p("tank_pressure_pa"), h.supply.tank_pressure);
    if h.supply.tank_pressure >= ps {
        is.push(p("tank_pressure_pa"), "must be below the supply pressure");
    }
    positive(is, p("valve_bandwidth_hz"), h.valve.bandwidth_hz);
    positive(is, p("valve_damping_ratio"), h.valve.damping_ratio);
    positive(is, p("rated_flow_m3_per_s"), h.valve.rated_flow);
    positive(is, p("rated_pressure_drop_pa"), h.valve.rated_pressure_drop);
    non_negative(is, p("leakage_m3_per_s_pa"), h.valve.leakage_coeff);
    positive(is, p("transition_pressure_pa"), h.valve.transition_pressure);
    let c = &h.cylinder;
    positive(is, p("stroke_m"), c.stroke);
    positive(is, p("bore_diameter_m"), c.bore_diameter);
    positive(is, p("rod_diameter_m"), c.rod_diameter);
    if c.rod_diameter >= c.bore_diameter {
        is.push(p("rod_diameter_m"), "must be smaller than the bore");
    }
    non_negative(is, p("dead_volume_m3"), c.dead_volume);
    non_negative(is, p("line_volume_m3"), c.line_volume);
    if c.dead_volume + c.line_volume <= 0.0 {
        is.push(p("dead_volume_m3"), "dead plus line volume must be positive");
    }
    non_negative(is, p("seal_coulomb_n"), c.seal_coulomb);
    non_negative(is, p("seal_viscous_n_s_per_m"), c.seal_viscous);
    positive(is, p("oil_density_kg_per_m3"), h.oil.density);
    positive(is, p("oil_kinematic_viscosity_m2_per_s"), h.oil.kinematic_viscosity);
    positive(is, p("bulk_modulus_pa"), h.oil.bulk_modulus);
    if let Some((a, b)) = h.initial_pressures {
        for (k, v) in [("initial_pressure_a_pa", a), ("initial_pressure_b_pa", b)] {
            is.check(
                (0.0..=ps).contains(&v) || ps.is_nan(),
                p(k),
                format!("must lie within [0, supply pressure], got {v}"),
            );
        }
    }
}

fn env_name(e: &Environment) -> &'static str {
    e.name()
}

fn read_plant(
    doc: &Table,
    is: &mut Issues,
    base: Option<&ExperimentSpec>,
    actuator: &ActuatorConfig,
) -> Option<PlantConfig> {
    let mut s = Section::new(doc, "plant");
    let b = base.map(|b| b.plant);
    let mass = s.f64_req(is, "car_mass_kg", b.map(|b| b.car.mass));
    if mass > MAX_CAR_MASS_KG {
        is.push(s.path("car_mass_kg"), format!("{mass} kg exceeds the 10 kg car limit"));
    }
    positive(is, s.path("car_mass_kg"), mass);
    let (lo, hi) = actuator.travel_limits();
    let mut car = CarBody::new(
        mass,
        (s.f64_or(is, "travel_min_m", lo), s.f64_or(is, "travel_max_m", hi)),
    );
    car.position = s.f64_or(is, "initial_position_m", b.map_or(0.0, |b| b.car.position));
    car.velocity = s.f64_or(is, "initial_velocity_m_per_s", b.map_or(0.0, |b| b.car.velocity));
    if car.travel_limits.0 >= car.travel_limits.1 {
        is.push("plant.travel_min_m", "must be below travel_max_m");
    }

    let bf = b.map_or_else(FrictionParams::default, |b| b.friction);
    let friction = FrictionParams {
        coulomb_force: s.f64_or(is, "coulomb_force_n", bf.coulomb_force),
        viscous_coeff: s.f64_or(is, "viscous_coeff_n_s_per_m", bf.viscous_coeff),
        stiction_velocity_band: s.f64_or(is, "stiction_band_m_per_s", bf.stiction_velocity_band),
    };
    non_negative(is, s.path("coulomb_force_n"), friction.coulomb_force);
    non_negative(is, s.path("viscous_coeff_n_s_per_m"), friction.viscous_coeff);
    positive(is, s.path("stiction_band_m_per_s"), friction.stiction_velocity_band);

    let stops_on = s
        .bool(is, "end_stops")
        .unwrap_or(b.is_some_and(|b| b.end_stops.is_some()));
    let bs = b.and_then(|b| b.end_stops).unwrap_or_default();
    let stops = EndStops {
        stiffness: s.f64_or(is, "end_stop_stiffness_n_per_m", bs.stiffness),
        damping: s.f64_or(is, "end_stop_damping_n_s_per_m", bs.damping),
    };
    positive(is, s.path("end_stop_stiffness_n_per_m"), stops.stiffness);
    non_negative(is, s.path("end_stop_damping_n_s_per_m"), stops.damping);

    let bd = b.map_or_else(PositionDriver::default, |b| b.driver);
    let driver = PositionDriver {
        stiffness: s.f64_or(is, "driver_stiffness_n_per_m", bd.stiffness),
        damping: s.f64_or(is, "driver_damping_n_s_per_m", bd.damping),
    };
    positive(is, s.path("driver_stiffness_n_per_m"), driver.stiffness);
    non_negative(is, s.path("driver_damping_n_s_per_m"), driver.damping);

    let base_env = b.map(|b| b.environment);
    let env_kind = match s.string(is, "environment") {
        Some(e) => Some(e),
        None => {
            if base_env.is_none() {
                s.missing(is, "environment");
            }
            base_env.map(|e| env_name(&e).to_string())
        }
    };
    let environment = match env_kind.as_deref() {
        Some("free") => Some(Environment::Free),
        Some("spring") => {
            let bsd = match base_env {
                Some(Environment::Spring(sd)) => Some(sd),
                _ => None,
            };
            let k = s.f64_req(is, "spring_stiffness_n_per_m", bsd.map(|sd| sd.stiffness));
            let c = s.f64_or(is, "spring_damping_n_s_per_m", bsd.map_or(0.0, |sd| sd.damping));
            non_negative(is, s.path("spring_stiffness_n_per_m"), k);
            non_negative(is, s.path("spring_damping_n_s_per_m"), c);
            let mut sd = SpringDamper::grounded(k, c);
            sd.rest_deflection = s.f64_or(is, "spring_rest_deflection_m", bsd.map_or(0.0, |sd| sd.rest_deflection));
            Some(Environment::Spring(sd))
        }
        Some("blockage") => {
            let bl = match base_env {
                Some(Environment::Blockage(l)) => l,
                _ => BlockageCoupling::default(),
            };
            let k = s.f64_or(is, "latch_stiffness_n_per_m", bl.latch_stiffness);
            positive(is, s.path("latch_stiffness_n_per_m"), k);
            Some(Environment::Blockage(BlockageCoupling { latch_stiffness: k }))
        }
        Some("mass") => {
            let bm = match base_env {
                Some(Environment::Mass { load_mass }) => Some(load_mass),
                _ => None,
            };
            let m = s.f64_req(is, "load_mass_kg", bm);
            positive(is, s.path("load_mass_kg"), m);
            if m > MAX_CAR_MASS_KG {
                is.push(s.path("load_mass_kg"), format!("{m} kg exceeds the 10 kg car limit"));
            }
            Some(Environment::Mass { load_mass: m })
        }
        Some(other) => {
            is.push(
                s.path("environment"),
                format!("unknown environment `{other}` (free, spring, blockage, mass)"),
            );
            None
        }
        None => None,
    };
    s.finish(is);
    Some(PlantConfig {
        car,
        friction,
        environment: environment?,
        end_stops: stops_on.then_some(stops),
        driver,
    })
}

fn read_sensors(doc: &Table, is: &mut Issues, base: Option<&ExperimentSpec>) -> SensorConfig {
    let mut s = Section::new(doc, "sensors");
    let b = base.map(|b| b.sensors);

    let mut encoder = b.map_or_else(EncoderModel::rls_lm10, |b| b.encoder);
    if let Some(n) = s.string(is, "encoder") {
        match EncoderModel::from_preset(&n) {
            Some(e) => encoder = e,
            None => is.push(s.path("encoder"), format!("unknown encoder `{n}` (RLS-LM10)")),
        }
    }
    encoder.resolution = s.f64_or(is, "encoder_resolution_m", encoder.resolution);
    non_negative(is, s.path("encoder_resolution_m"), encoder.resolution);

    let mut cell = b.map(|b| b.load_cell);
    match s.string(is, "load_cell") {
        Some(n) => match LoadCellModel::from_preset(&n) {
            Some(c) => cell = Some(c),
            None => is.push(
                s.path("load_cell"),
                format!("unknown load cell `{n}` (SMT1-250, Burster-8417)"),
            ),
        },
        None if cell.is_none() => s.missing(is, "load_cell"),
        None => {}
    }
    let mut lc = cell.unwrap_or_else(LoadCellModel::smt1_250);
    lc.range = s.f64_or(is, "load_cell_range_n", lc.range);
    lc.sensitivity_mv_per_v = s.f64_or(is, "load_cell_sensitivity_mv_per_v", lc.sensitivity_mv_per_v);
    lc.excitation_v = s.f64_or(is, "load_cell_excitation_v", lc.excitation_v);
    lc.adc_fullscale_v = s.f64_or(is, "load_cell_adc_fullscale_v", lc.adc_fullscale_v);
    lc.amplifier_gain = s.f64_or(
        is,
        "load_cell_amplifier_gain",
        lc.adc_fullscale_v / (lc.sensitivity_mv_per_v * 1e-3 * lc.excitation_v),
    );
    lc.axial_stiffness = s.f64_or(is, "load_cell_stiffness_n_per_m", lc.axial_stiffness);
    lc.noise_std = s.f64_or(is, "load_cell_noise_n", lc.noise_std);
    if let Some(bits) = s.u64(is, "load_cell_adc_bits") {
        if bits > 32 {
            is.push(
                s.path("load_cell_adc_bits"),
                "must be at most 32 (0 disables quantisation)",
            );
        }
        lc.adc_bits = (bits > 0).then_some(bits as u32);
    }
    for (k, v) in [
        ("load_cell_range_n", lc.range),
        ("load_cell_sensitivity_mv_per_v", lc.sensitivity_mv_per_v),
        ("load_cell_excitation_v", lc.excitation_v),
        ("load_cell_adc_fullscale_v", lc.adc_fullscale_v),
        ("load_cell_amplifier_gain", lc.amplifier_gain),
        ("load_cell_stiffness_n_per_m", lc.axial_stiffness),
    ] {
        positive(is, s.path(k), v);
    }
    non_negative(is, s.path("load_cell_noise_n"), lc.noise_std);

    let mut pressure = b.map_or_else(PressureSensorModel::nat_8251, |b| b.pressure);
    if let Some(n) = s.string(is, "pressure_sensor") {
        match PressureSensorModel::from_preset(&n) {
            Some(p) => pressure = p,
            None => is.push(
                s.path("pressure_sensor"),
                format!("unknown pressure sensor `{n}` (NAT-8251)"),
            ),
        }
    }
    pressure.max_pressure = s.f64_or(is, "pressure_max_pa", pressure.max_pressure);
    pressure.accuracy_fraction = s.f64_or(is, "pressure_accuracy_fraction", pressure.accuracy_fraction);
    pressure.noise_std = s.f64_or(is, "pressure_noise_pa", pressure.noise_std);
    positive(is, s.path("pressure_max_pa"), pressure.max_pressure);
    is.check(
        (0.0..1.0).contains(&pressure.accuracy_fraction),
        s.path("pressure_accuracy_fraction"),
        "must lie in [0, 1)",
    );
    non_negative(is, s.path("pressure_noise_pa"), pressure.noise_std);
    s.finish(is);
    SensorConfig {
        encoder,
        load_cell: lc,
        pressure,
    }
}

fn read_controller(doc: &Table, is: &mut Issues, base: Option<&ExperimentSpec>) -> Option<ControllerConfig> {
    let mut s = Section::new(doc, "controller");
    let b = base.map(|b| b.controller);
    let mode = match s.string(is, "mode") {
        Some(m) => ControlMode::from_name(&m).or_else(|| {
            is.push(
                s.path("mode"),
                format!("unknown mode `{m}` (pi, impedance, open_loop, manual)"),
            );
            None
        }),
        None => {
            if b.is_none() {
                s.missing(is, "mode");
            }
            b.map(|b| b.mode)
        }
    };
    let closed_loop = matches!(mode, Some(ControlMode::ForcePi | ControlMode::Impedance));
    let gain = |s: &mut Section, is: &mut Issues, key: &str, bv: Option<f64>| {
        let v = if closed_loop {
            s.f64_req(is, key, bv)
        } else {
            s.f64_or(is, key, bv.unwrap_or(0.0))
        };
        non_negative(is, s.path(key), v);
        v
    };
    let kp = gain(&mut s, is, "kp_v_per_n", b.map(|b| b.kp_v_per_n));
    let ki = gain(&mut s, is, "ki_v_per_n_s", b.map(|b| b.ki_v_per_n_s));
    let anti_windup = s.bool(is, "anti_windup").unwrap_or(b.is_none_or(|b| b.anti_windup));
    let bi = b.and_then(|b| b.impedance);
    let impedance = if mode == Some(ControlMode::Impedance) || s.has("impedance_stiffness_n_per_m") {
        let stiffness = s.f64_req(is, "impedance_stiffness_n_per_m", bi.map(|i| i.stiffness));
        let damping = s.f64_or(is, "impedance_damping_n_s_per_m", bi.map_or(0.0, |i| i.damping));
        non_negative(is, s.path("impedance_stiffness_n_per_m"), stiffness);
        non_negative(is, s.path("impedance_damping_n_s_per_m"), damping);
        Some(ImpedanceParams { stiffness, damping })
    } else {
        bi
    };
    s.finish(is);
    Some(ControllerConfig {
        mode: mode?,
        kp_v_per_n: kp,
        ki_v_per_n_s: ki,
        anti_windup,
        impedance,
    })
}

const WAVEFORMS: &str = "sine, step, chirp, triangle, profile";

fn waveform_name(w: &Waveform) -> &'static str {
    match w {
        Waveform::Sine { .. } => "sine",
        Waveform::Step { .. } => "step",
        Waveform::Chirp { .. } => "chirp",
        Waveform::Profile { .. } => "profile",
    }
}

fn read_reference(
    doc: &Table,
    is: &mut Issues,
    base: Option<&ExperimentSpec>,
    mode: Option<ControlMode>,
) -> Option<ReferenceSpec> {
    let mut s = Section::new(doc, "reference");
    let b = base.map(|b| &b.reference);

    let has_suffix = |suffix: &str| s.table.is_some_and(|t| t.keys().any(|k| k.ends_with(suffix)));
    let unit = match (has_suffix("_n"), has_suffix("_m")) {
        (true, true) => {
            is.push("reference", "mixes newton (_n) and metre (_m) keys");
            None
        }
        (true, false) => Some(ReferenceUnit::Newton),
        (false, true) => Some(ReferenceUnit::Metre),
        (false, false) => b.map(|b| b.unit).or(match mode {
            Some(ControlMode::ForcePi | ControlMode::OpenLoop) => Some(ReferenceUnit::Newton),
            Some(_) => Some(ReferenceUnit::Metre),
            None => None,
        }),
    };
    let Some(unit) = unit else {
        s.finish(is);
        return None;
    };
    if let Some(m) = mode {
        let wanted = match m {
            ControlMode::ForcePi | ControlMode::OpenLoop => ReferenceUnit::Newton,
            ControlMode::Impedance | ControlMode::Manual => ReferenceUnit::Metre,
        };
        if wanted != unit {
            is.push(
                "reference",
                format!(
                    "controller mode `{}` needs a reference in {} (keys ending in _{})",
                    m.name(),
                    if wanted == ReferenceUnit::Newton {
                        "newtons"
                    } else {
                        "metres"
                    },
                    wanted.suffix()
                ),
            );
        }
    }
    let u = unit.suffix();
    let key = |k: &str| format!("{k}_{u}");

    let kind = match s.string(is, "waveform") {
        Some(w) => Some(w),
        None => {
            if b.is_none() {
                s.missing(is, "waveform");
            }
            b.map(|b| waveform_name(&b.waveform).to_string())
        }
    };
    // Base values apply only when the base uses the same waveform.
    let bw = b.map(|b| &b.waveform);
    let waveform = match kind.as_deref() {
        Some("sine") => {
            let (ba, bf, bo) = match bw {
                Some(Waveform::Sine {
                    amplitude,
                    frequency,
                    offset,
                }) => (Some(*amplitude), Some(*frequency), *offset),
                _ => (None, None, 0.0),
            };
            let amplitude = s.f64_req(is, &key("amplitude"), ba);
            let frequency = s.f64_req(is, "frequency_hz", bf);
            let offset = s.f64_or(is, &key("offset"), bo);
            positive(is, s.path("frequency_hz"), frequency);
            Some(Waveform::Sine {
                amplitude,
                frequency,
                offset,
            })
        }
        Some("step") => {
            let (ba, bt, bo) = match bw {
                Some(Waveform::Step {
                    amplitude,
                    step_time,
                    offset,
                }) => (Some(*amplitude), *step_time, *offset),
                _ => (None, 0.0, 0.0),
            };
            let amplitude = s.f64_req(is, &key("amplitude"), ba);
            let step_time = s.f64_or(is, "step_time_s", bt);
            let offset = s.f64_or(is, &key("offset"), bo);
            non_negative(is, s.path("step_time_s"), step_time);
            Some(Waveform::Step {
                amplitude,
                step_time,
                offset,
            })
        }
        Some("chirp") => {
            let bc = match bw {
                Some(Waveform::Chirp {
                    amplitude,
                    start_frequency,
                    end_frequency,
                    sweep_time,
                    offset,
                }) => Some((*amplitude, *start_frequency, *end_frequency, *sweep_time, *offset)),
                _ => None,
            };
            let amplitude = s.f64_req(is, &key("amplitude"), bc.map(|c| c.0));
            let start_frequency = s.f64_req(is, "start_frequency_hz", bc.map(|c| c.1));
            let end_frequency = s.f64_req(is, "end_frequency_hz", bc.map(|c| c.2));
            let sweep_time = s.f64_req(is, "sweep_time_s", bc.map(|c| c.3));
            let offset = s.f64_or(is, &key("offset"), bc.map_or(0.0, |c| c.4));
            positive(is, s.path("start_frequency_hz"), start_frequency);
            positive(is, s.path("end_frequency_hz"), end_frequency);
            positive(is, s.path("sweep_time_s"), sweep_time);
            Some(Waveform::Chirp {
                amplitude,
                start_frequency,
                end_frequency,
                sweep_time,
                offset,
            })
        }
        Some("triangle") => {
            let span = s.f64_req(is, &key("span"), None);
            let period = s.f64_req(is, "period_s", None);
            let cycles = match s.u64(is, "cycles") {
                Some(c) if c >= 1 => c as usize,
                Some(_) => {
                    is.push(s.path("cycles"), "must be at least 1");
                    1
                }
                None => 1,
            };
            positive(is, s.path("period_s"), period);
            Some(ReferenceSpec::triangle(span, period, cycles, unit).waveform)
        }
        Some("profile") => {
            let (bt, bv) = match bw {
                Some(Waveform::Profile { times, values }) => (Some(times.clone()), Some(values.clone())),
                _ => (None, None),
            };
            let times = match s.f64_list(is, "times_s") {
                Some(t) => Some(t),
                None if !s.has("times_s") && bt.is_none() => {
                    s.missing(is, "times_s");
                    None
                }
                None => bt,
            };
            let values = match s.f64_list(is, &key("values")) {
                Some(v) => Some(v),
                None if !s.has(&key("values")) && bv.is_none() => {
                    s.missing(is, &key("values"));
                    None
                }
                None => bv,
            };
            match (times, values) {
                (Some(times), Some(values)) => {
                    if times.len() != values.len() || times.len() < 2 {
                        is.push("reference", "times_s and values need the same length, at least 2");
                    } else if times.windows(2).any(|w| !(w[1] > w[0])) {
                        is.push(s.path("times_s"), "must be strictly increasing");
                    }
                    Some(Waveform::Profile { times, values })
                }
                _ => None,
            }
        }
        Some(other) => {
            is.push(s.path("waveform"), format!("unknown waveform `{other}` ({WAVEFORMS})"));
            None
        }
        None => None,
    };
    s.finish(is);
    Some(ReferenceSpec {
        waveform: waveform?,
        unit,
    })
}

/// TOML float literal that parses back to the same bits.
fn num(v: f64) -> String {
    // Debug formatting is shortest round-trip and always marks floats.
    format!("{v:?}")
}

fn text(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

fn num_list(vs: &[f64]) -> String {
    let parts: Vec<String> = vs.iter().map(|&v| num(v)).collect();
    format!("[{}]", parts.join(", "))
}

/// Complete document for `spec`; `parse_config(&render_config(s)) == s`.
pub fn render_config(spec: &ExperimentSpec) -> String {
    let mut o = String::new();
    let kv = |o: &mut String, k: &str, v: String| {
        let _ = writeln!(o, "{k} = {v}");
    };

    o.push_str("[experiment]\n");
    kv(&mut o, "name", text(&spec.name));
    kv(&mut o, "kind", text(spec.kind.name()));
    kv(&mut o, "runs", spec.runs.to_string());
    kv(&mut o, "seed_policy", text(spec.seed_policy.name()));

    o.push_str("\n[sim]\n");
    kv(&mut o, "dt_physics_s", num(spec.sim.dt_physics));
    kv(&mut o, "dt_control_s", num(spec.sim.dt_control));
    kv(&mut o, "duration_s", num(spec.sim.duration));
    let seed = spec.sim.seed;
    kv(
        &mut o,
        "seed",
        if seed <= i64::MAX as u64 {
            seed.to_string()
        } else {
            text(&seed.to_string())
        },
    );

    o.push_str("\n[actuator]\n");
    match &spec.actuator {
        ActuatorConfig::Hydraulic(h) => {
            kv(&mut o, "type", text("hydraulic"));
            let valve = if h.valve.bandwidth_hz == ValvePreset::G761.params().bandwidth_hz {
                ValvePreset::G761
            } else {
                ValvePreset::E024
            };
            kv(&mut o, "valve", text(valve.name()));
            kv(&mut o, "supply_pressure_pa", num(h.supply.supply_pressure));
            kv(&mut o, "supply_max_flow_m3_per_s", num(h.supply.max_flow));
            kv(&mut o, "tank_pressure_pa", num(h.supply.tank_pressure));
            kv(&mut o, "valve_bandwidth_hz", num(h.valve.bandwidth_hz));
            kv(&mut o, "valve_damping_ratio", num(h.valve.damping_ratio));
            kv(&mut o, "rated_flow_m3_per_s", num(h.valve.rated_flow));
            kv(&mut o, "rated_pressure_drop_pa", num(h.valve.rated_pressure_drop));
            kv(&mut o, "leakage_m3_per_s_pa", num(h.valve.leakage_coeff));
            kv(&mut o, "transition_pressure_pa", num(h.valve.transition_pressure));
            kv(&mut o, "stroke_m", num(h.cylinder.stroke));
            kv(&mut o, "bore_diameter_m", num(h.cylinder.bore_diameter));
            kv(&mut o, "rod_diameter_m", num(h.cylinder.rod_diameter));
            kv(&mut o, "dead_volume_m3", num(h.cylinder.dead_volume));
            kv(&mut o, "line_volume_m3", num(h.cylinder.line_volume));
            kv(&mut o, "seal_coulomb_n", num(h.cylinder.seal_coulomb));
            kv(&mut o, "seal_viscous_n_s_per_m", num(h.cylinder.seal_viscous));
            kv(&mut o, "oil_density_kg_per_m3", num(h.oil.density));
            kv(
                &mut o,
                "oil_kinematic_viscosity_m2_per_s",
                num(h.oil.kinematic_viscosity),
            );
            kv(&mut o, "bulk_modulus_pa", num(h.oil.bulk_modulus));
            if let Some((a, b)) = h.initial_pressures {
                kv(&mut o, "initial_pressure_a_pa", num(a));
                kv(&mut o, "initial_pressure_b_pa", num(b));
            }
        }
        ActuatorConfig::Electric(m) => {
            kv(&mut o, "type", text("electric"));
            kv(&mut o, "motor", text("LinMot-P01"));
            kv(&mut o, "max_force_n", num(m.max_force));
            kv(&mut o, "max_stroke_m", num(m.max_stroke));
            kv(&mut o, "force_constant_n", num(m.force_constant));
            kv(&mut o, "drive_time_constant_s", num(m.drive_time_constant));
        }
    }

    let p = &spec.plant;
    o.push_str("\n[plant]\n");
    kv(&mut o, "car_mass_kg", num(p.car.mass));
    kv(&mut o, "initial_position_m", num(p.car.position));
    kv(&mut o, "initial_velocity_m_per_s", num(p.car.velocity));
    kv(&mut o, "travel_min_m", num(p.car.travel_limits.0));
    kv(&mut o, "travel_max_m", num(p.car.travel_limits.1));
    kv(&mut o, "coulomb_force_n", num(p.friction.coulomb_force));
    kv(&mut o, "viscous_coeff_n_s_per_m", num(p.friction.viscous_coeff));
    kv(&mut o, "stiction_band_m_per_s", num(p.friction.stiction_velocity_band));
    kv(&mut o, "end_stops", p.end_stops.is_some().to_string());
    let stops = p.end_stops.unwrap_or_default();
    kv(&mut o, "end_stop_stiffness_n_per_m", num(stops.stiffness));
    kv(&mut o, "end_stop_damping_n_s_per_m", num(stops.damping));
    kv(&mut o, "driver_stiffness_n_per_m", num(p.driver.stiffness));
    kv(&mut o, "driver_damping_n_s_per_m", num(p.driver.damping));
    kv(&mut o, "environment", text(p.environment.name()));
    match p.environment {
        Environment::Free => {}
        Environment::Spring(sd) => {
            kv(&mut o, "spring_stiffness_n_per_m", num(sd.stiffness));
            kv(&mut o, "spring_damping_n_s_per_m", num(sd.damping));
            kv(&mut o, "spring_rest_deflection_m", num(sd.rest_deflection));
        }
        Environment::Blockage(l) => kv(&mut o, "latch_stiffness_n_per_m", num(l.latch_stiffness)),
        Environment::Mass { load_mass } => kv(&mut o, "load_mass_kg", num(load_mass)),
    }

    let s = &spec.sensors;
    o.push_str("\n[sensors]\n");
    kv(&mut o, "encoder", text("RLS-LM10"));
    kv(&mut o, "encoder_resolution_m", num(s.encoder.resolution));
    let cell_name = if s.load_cell.range > 250.0 {
        "Burster-8417"
    } else {
        "SMT1-250"
    };
    kv(&mut o, "load_cell", text(cell_name));
    kv(&mut o, "load_cell_range_n", num(s.load_cell.range));
    kv(
        &mut o,
        "load_cell_sensitivity_mv_per_v",
        num(s.load_cell.sensitivity_mv_per_v),
    );
    kv(&mut o, "load_cell_excitation_v", num(s.load_cell.excitation_v));
    kv(&mut o, "load_cell_amplifier_gain", num(s.load_cell.amplifier_gain));
    kv(
        &mut o,
        "load_cell_adc_bits",
        s.load_cell.adc_bits.unwrap_or(0).to_string(),
    );
    kv(&mut o, "load_cell_adc_fullscale_v", num(s.load_cell.adc_fullscale_v));
    kv(&mut o, "load_cell_stiffness_n_per_m", num(s.load_cell.axial_stiffness));
    kv(&mut o, "load_cell_noise_n", num(s.load_cell.noise_std));
    kv(&mut o, "pressure_sensor", text("NAT-8251"));
    kv(&mut o, "pressure_max_pa", num(s.pressure.max_pressure));
    kv(&mut o, "pressure_accuracy_fraction", num(s.pressure.accuracy_fraction));
    kv(&mut o, "pressure_noise_pa", num(s.pressure.noise_std));

    let c = &spec.controller;
    o.push_str("\n[controller]\n");
    kv(&mut o, "mode", text(c.mode.name()));
    kv(&mut o, "kp_v_per_n", num(c.kp_v_per_n));
    kv(&mut o, "ki_v_per_n_s", num(c.ki_v_per_n_s));
    kv(&mut o, "anti_windup", c.anti_windup.to_string());
    if let Some(i) = c.impedance {
        kv(&mut o, "impedance_stiffness_n_per_m", num(i.stiffness));
        kv(&mut o, "impedance_damping_n_s_per_m", num(i.damping));
    }

    let r = &spec.reference;
    let u = r.unit.suffix();
    o.push_str("\n[reference]\n");
    kv(&mut o, "waveform", text(waveform_name(&r.waveform)));
    match &r.waveform {
        Waveform::Sine {
            amplitude,
            frequency,
            offset,
        } => {
            kv(&mut o, &format!("amplitude_{u}"), num(*amplitude));
            kv(&mut o, "frequency_hz", num(*frequency));
            kv(&mut o, &format!("offset_{u}"), num(*offset));
        }
        Waveform::Step {
            amplitude,
            step_time,
            offset,
        } => {
            kv(&mut o, &format!("amplitude_{u}"), num(*amplitude));
            kv(&mut o, "step_time_s", num(*step_time));
            kv(&mut o, &format!("offset_{u}"), num(*offset));
        }
        Waveform::Chirp {
            amplitude,
            start_frequency,
            end_frequency,
            sweep_time,
            offset,
        } => {
            kv(&mut o, &format!("amplitude_{u}"), num(*amplitude));
            kv(&mut o, "start_frequency_hz", num(*start_frequency));
            kv(&mut o, "end_frequency_hz", num(*end_frequency));
            kv(&mut o, "sweep_time_s", num(*sweep_time));
            kv(&mut o, &format!("offset_{u}"), num(*offset));
        }
        Waveform::Profile { times, values } => {
            kv(&mut o, "times_s", num_list(times));
            kv(&mut o, &format!("values_{u}"), num_list(values));
        }
    }
    o
}

/// Short document that selects a built-in preset.
pub fn preset_document(name: &str) -> String {
    format!("[experiment]\npreset = {}\n", text(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_document() {
        let spec = parse_config(&preset_document("electric-repeatability")).unwrap();
        assert_eq!(spec, presets::electric_repeatability());
        assert_eq!(spec.runs, 10);
        assert_eq!(spec.controller.kp_v_per_n, 0.73);
        assert_eq!(spec.controller.ki_v_per_n_s, 0.03);
    }

    #[test]
    fn supply_pressure_over_hpu_limit() {
        let doc = "[experiment]\npreset = \"hydraulic-repeatability\"\n[actuator]\nsupply_pressure_pa = 25e6\n";
        let err = parse_config(doc).unwrap_err();
        assert!(err.mentions("exceeds HPU limit 20.7e6"), "{err}");
    }

    #[test]
    fn empty_document_names_every_section() {
        let err = parse_config("").unwrap_err();
        for s in SECTIONS {
            assert!(
                err.issues.iter().any(|i| i.path == s && i.message.contains("missing")),
                "{s}: {err}"
            );
        }
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let doc = "[experiment]\npreset = \"blocked\"\n[plant]\ncar_mass = 3.0\n[extra]\nx = 1\n";
        let err = parse_config(doc).unwrap_err();
        assert!(err.mentions("plant.car_mass"));
        assert!(err.mentions("extra"));
    }

    #[test]
    fn all_errors_are_collected() {
        let doc = "[experiment]\npreset = \"hydraulic-repeatability\"\n\
                   [actuator]\nsupply_pressure_pa = 30e6\n[plant]\ncar_mass_kg = 12.0\n\
                   [controller]\nkp_v_per_n = -1.0\n";
        let err = parse_config(doc).unwrap_err();
        assert!(err.issues.len() >= 3, "{err}");
    }

    #[test]
    fn presets_round_trip_through_render() {
        for spec in presets::all() {
            let text = render_config(&spec);
            assert_eq!(parse_config(&text).unwrap(), spec, "{text}");
        }
    }

    #[test]
    fn parse_is_order_independent() {
        let spec = presets::hydraulic_repeatability();
        let text = render_config(&spec);
        let mut blocks: Vec<&str> = text.split("\n\n").collect();
        blocks.reverse();
        assert_eq!(parse_config(&blocks.join("\n\n")).unwrap(), spec);
    }

    #[test]
    fn wrong_reference_unit_for_mode() {
        let doc = "[experiment]\npreset = \"electric-repeatability\"\n\
                   [reference]\nwaveform = \"sine\"\namplitude_m = 0.01\nfrequency_hz = 1.0\n";
        let err = parse_config(doc).unwrap_err();
        assert!(err.mentions("newtons"), "{err}");
    }

    #[test]
    fn set_key_overrides_value() {
        let mut doc = parse_document(&preset_document("stiffness-id")).unwrap();
        set_key(&mut doc, "plant.coulomb_force_n", Value::Float(3.0)).unwrap();
        let spec = spec_from_table(&doc).unwrap();
        assert_eq!(spec.plant.friction.coulomb_force, 3.0);
        assert!(set_key(&mut doc, "nosuch.key", Value::Float(1.0)).is_err());
    }

    #[test]
    fn syntax_errors_are_one_line() {
        let err = parse_config("[sim\n").unwrap_err();
        assert!(!err.to_string().contains('\n'));
    }
}
