//! Browser bindings: a force-loop trace, a servovalve Bode sweep and the
//! spring stiffness loop.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use benchtwin::bench::{Environment, CH_FORCE, CH_REFERENCE};
use benchtwin::control::{ReferenceSpec, ReferenceUnit};
use benchtwin::experiments::{simulate_run, stiffness_statistics};
use benchtwin::hydraulic::{spool_gain_db, ValvePreset};
use benchtwin::mechanics::SpringDamper;
use benchtwin::presets;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct ForceTrace {
    time: Vec<f64>,
    reference: Vec<f64>,
    force: Vec<f64>,
}

#[wasm_bindgen]
impl ForceTrace {
    #[wasm_bindgen(getter)]
    pub fn time(&self) -> Vec<f64> {
        self.time.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn reference(&self) -> Vec<f64> {
        self.reference.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn force(&self) -> Vec<f64> {
        self.force.clone()
    }
}

/// One PI force-tracking run against the spring. `actuator` is
/// `"electric"` or `"hydraulic"`; gains are in drive volts per newton.
#[wasm_bindgen]
pub fn force_loop(
    actuator: &str,
    kp_v_per_n: f64,
    ki_v_per_n_s: f64,
    amplitude_n: f64,
    frequency_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<ForceTrace, JsError> {
    let mut spec = match actuator {
        "electric" => presets::electric_repeatability(),
        "hydraulic" => presets::hydraulic_repeatability(),
        other => return Err(JsError::new(&format!("unknown actuator `{other}`"))),
    };
    spec.controller.kp_v_per_n = kp_v_per_n;
    spec.controller.ki_v_per_n_s = ki_v_per_n_s;
    spec.reference = ReferenceSpec::sine(amplitude_n, frequency_hz, ReferenceUnit::Newton);
    spec.sim.duration = duration_s;
    spec.sim.seed = seed;
    spec.validate().map_err(err)?;
    let ts = simulate_run(&spec, 0).map_err(err)?;
    let ch = |name| ts.channel(name).map(<[f64]>::to_vec).unwrap_or_default();
    Ok(ForceTrace {
        reference: ch(CH_REFERENCE),
        force: ch(CH_FORCE),
        time: ts.time.clone(),
    })
}

#[wasm_bindgen]
pub struct Bode {
    frequency: Vec<f64>,
    gain_db: Vec<f64>,
    bandwidth_hz: f64,
}

#[wasm_bindgen]
impl Bode {
    #[wasm_bindgen(getter)]
    pub fn frequency(&self) -> Vec<f64> {
        self.frequency.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn gain_db(&self) -> Vec<f64> {
        self.gain_db.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }
}

/// Simulated spool amplitude response on a log grid.
#[wasm_bindgen]
pub fn valve_bode(valve: &str, damping_ratio: f64, f_min: f64, f_max: f64, points: usize) -> Result<Bode, JsError> {
    let preset = ValvePreset::from_name(valve).ok_or_else(|| JsError::new(&format!("unknown valve `{valve}`")))?;
    if !(f_min > 0.0 && f_max > f_min && points >= 2) {
        return Err(JsError::new("need 0 < f_min < f_max and at least 2 points"));
    }
    if !(damping_ratio > 0.0) {
        return Err(JsError::new("damping ratio must be positive"));
    }
    let mut params = preset.params();
    params.damping_ratio = damping_ratio;
    let ratio = (f_max / f_min).powf(1.0 / (points - 1) as f64);
    let frequency: Vec<f64> = (0..points).map(|i| f_min * ratio.powi(i as i32)).collect();
    let gain_db = frequency.iter().map(|&f| spool_gain_db(&params, f, 0.1)).collect();
    Ok(Bode {
        frequency,
        gain_db,
        bandwidth_hz: params.bandwidth_hz,
    })
}

#[wasm_bindgen]
pub struct StiffnessLoop {
    displacement: Vec<f64>,
    force: Vec<f64>,
    slope: f64,
    intercept: f64,
    correlation_r: f64,
}

#[wasm_bindgen]
impl StiffnessLoop {
    #[wasm_bindgen(getter)]
    pub fn displacement(&self) -> Vec<f64> {
        self.displacement.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn force(&self) -> Vec<f64> {
        self.force.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn slope(&self) -> f64 {
        self.slope
    }

    #[wasm_bindgen(getter)]
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    #[wasm_bindgen(getter)]
    pub fn correlation_r(&self) -> f64 {
        self.correlation_r
    }
}

/// One manual compression cycle of the spring with the given car friction.
#[wasm_bindgen]
pub fn stiffness_loop(
    spring_n_per_m: f64,
    coulomb_n: f64,
    viscous_n_s_per_m: f64,
    seed: u64,
) -> Result<StiffnessLoop, JsError> {
    let mut spec = presets::stiffness_id();
    spec.runs = 1;
    spec.sim.seed = seed;
    spec.plant.friction.coulomb_force = coulomb_n;
    spec.plant.friction.viscous_coeff = viscous_n_s_per_m;
    if !(spring_n_per_m > 0.0) || !(coulomb_n >= 0.0) || !(viscous_n_s_per_m >= 0.0) {
        return Err(JsError::new("stiffness must be positive and friction non-negative"));
    }
    spec.plant.environment = Environment::Spring(SpringDamper::grounded(spring_n_per_m, 0.0));
    let run = simulate_run(&spec, 0).map_err(err)?;
    let res = stiffness_statistics(&spec, std::slice::from_ref(&run)).map_err(err)?;
    Ok(StiffnessLoop {
        displacement: res.displacement,
        force: res.force,
        slope: res.regression.slope,
        intercept: res.regression.intercept,
        correlation_r: res.regression.correlation_r,
    })
}
