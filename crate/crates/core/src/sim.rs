//! Fixed-step integration engine.
//!
//! The continuous plant is advanced with classical fourth-order Runge-Kutta
//! at `dt_physics`. The discrete controller runs every `dt_control` and its
//! output is held constant (zero-order hold) across the intermediate physics
//! steps. Samples are recorded on the control grid, `t = k * dt_control`,
//! including `t = 0` and the final instant.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;

/// Random stream owned by one run. Every stochastic draw in a run comes from it.
pub type SimRng = ChaCha8Rng;

/// Default physics step. Chamber dynamics with a 1.34 GPa bulk modulus and
/// cm³-scale volumes put the hydraulic poles in the kHz range.
pub const DEFAULT_DT_PHYSICS: f64 = 1e-5;
/// Default controller period (1 kHz loop).
pub const DEFAULT_DT_CONTROL: f64 = 1e-3;

/// Timing and seeding of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt_physics: f64,
    pub dt_control: f64,
    pub duration: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_physics: DEFAULT_DT_PHYSICS,
            dt_control: DEFAULT_DT_CONTROL,
            duration: 1.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Checks the timing invariants and returns `(physics steps per tick, ticks)`.
    pub fn schedule(&self) -> Result<(usize, usize), SimError> {
        let finite = self.dt_physics.is_finite() && self.dt_control.is_finite() && self.duration.is_finite();
        if !finite || self.dt_physics <= 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "dt_physics must be positive, got {}",
                self.dt_physics
            )));
        }
        if self.dt_control <= 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "dt_control must be positive, got {}",
                self.dt_control
            )));
        }
        let ratio = self.dt_control / self.dt_physics;
        let substeps = ratio.round();
        if substeps < 1.0 || (ratio - substeps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(SimError::InvalidConfig(format!(
                "dt_control ({}) is not an integer multiple of dt_physics ({})",
                self.dt_control, self.dt_physics
            )));
        }
        if self.duration < self.dt_control {
            return Err(SimError::InvalidConfig(format!(
                "duration ({}) is shorter than dt_control ({})",
                self.duration, self.dt_control
            )));
        }
        let ticks = (self.duration / self.dt_control + 1e-9).floor();
        Ok((substeps as usize, ticks as usize))
    }

    /// Number of recorded samples, `t = 0` included.
    pub fn sample_count(&self) -> Result<usize, SimError> {
        self.schedule().map(|(_, ticks)| ticks + 1)
    }
}

/// Named continuous state. Names are unique and fixed for the life of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    names: Arc<[String]>,
    values: Vec<f64>,
}

impl StateVector {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self, SimError> {
        let (names, values): (Vec<String>, Vec<f64>) = entries.into_iter().map(|(n, v)| (n.into(), v)).unzip();
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(SimError::InvalidConfig(format!("duplicate state name `{name}`")));
            }
        }
        Ok(Self {
            names: names.into(),
            values,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Scratch space for allocation-free RK4 steps on a fixed-size state.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }

    /// Advances `x` in place from `t` to `t + dt`.
    ///
    /// `f(t, x, dx)` writes the derivative of `x` into `dx`. A non-finite
    /// derivative at any stage aborts the step; `names` labels the offending
    /// state in the error.
    pub fn step<F>(&mut self, t: f64, x: &mut [f64], dt: f64, names: &[String], mut f: F) -> Result<(), SimError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = x.len();
        debug_assert_eq!(n, self.k1.len());
        let half = 0.5 * dt;

        f(t, x, &mut self.k1);
        check_finite(&self.k1, names, t)?;
        for i in 0..n {
            self.tmp[i] = x[i] + half * self.k1[i];
        }
        f(t + half, &self.tmp, &mut self.k2);
        check_finite(&self.k2, names, t + half)?;
        for i in 0..n {
            self.tmp[i] = x[i] + half * self.k2[i];
        }
        f(t + half, &self.tmp, &mut self.k3);
        check_finite(&self.k3, names, t + half)?;
        for i in 0..n {
            self.tmp[i] = x[i] + dt * self.k3[i];
        }
        f(t + dt, &self.tmp, &mut self.k4);
        check_finite(&self.k4, names, t + dt)?;

        let sixth = dt / 6.0;
        for i in 0..n {
            x[i] += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

fn check_finite(dx: &[f64], names: &[String], t: f64) -> Result<(), SimError> {
    match dx.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(SimError::NonFiniteDerivative {
            state: names.get(i).cloned().unwrap_or_else(|| format!("#{i}")),
            time: t,
        }),
    }
}

/// One classical RK4 step of an autonomous system.
pub fn integrate_step<F>(state: &StateVector, mut derivative: F, dt: f64) -> Result<StateVector, SimError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(SimError::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let mut next = state.clone();
    let mut rk = Rk4::new(state.len());
    rk.step(0.0, &mut next.values, dt, &state.names, |_, x, dx| derivative(x, dx))?;
    Ok(next)
}

/// Continuous-time model advanced by the integrator.
pub trait Plant {
    /// Input held constant between controller ticks.
    type Command: Copy;
    /// True physical quantities handed to the sensors at each tick.
    type Observation;

    fn state_names(&self) -> Vec<String>;
    fn initial_state(&self) -> Vec<f64>;
    fn derivatives(&self, t: f64, x: &[f64], u: Self::Command, dx: &mut [f64]);

    /// Applies hard constraints (saturations, cavitation floor) after a step.
    fn project(&self, _x: &mut [f64]) {}

    /// Rejects states outside the modelled envelope.
    fn check(&self, _t: f64, _x: &[f64]) -> Result<(), SimError> {
        Ok(())
    }

    fn observe(&self, t: f64, x: &[f64], held: Self::Command) -> Self::Observation;
}

/// Discrete-time controller, including whatever sensing it does.
pub trait Controller<O> {
    type Command: Copy;
    type Sample;

    /// Command applied before the first tick.
    fn initial_command(&self) -> Self::Command;

    fn update(&mut self, t: f64, observation: &O, rng: &mut SimRng) -> (Self::Command, Self::Sample);
}

/// Collects one sample per controller tick.
pub trait Recorder<S> {
    fn record(&mut self, t: f64, sample: &S);
    fn finish(self) -> TimeSeries;
}

/// Runs one simulation. Bit-reproducible for equal inputs.
pub fn run_simulation<P, C, R>(
    config: &SimConfig,
    plant: &P,
    controller: &mut C,
    mut recorder: R,
) -> Result<TimeSeries, SimError>
where
    P: Plant,
    C: Controller<P::Observation, Command = P::Command>,
    R: Recorder<C::Sample>,
{
    let (substeps, ticks) = config.schedule()?;
    let names = plant.state_names();
    let mut x = plant.initial_state();
    if names.len() != x.len() {
        return Err(SimError::InvalidConfig(format!(
            "plant declares {} state names but {} initial values",
            names.len(),
            x.len()
        )));
    }
    let mut rng = SimRng::seed_from_u64(config.seed);
    let mut rk = Rk4::new(x.len());
    let mut held = controller.initial_command();

    for k in 0..=ticks {
        let t_tick = k as f64 * config.dt_control;
        let observation = plant.observe(t_tick, &x, held);
        let (command, sample) = controller.update(t_tick, &observation, &mut rng);
        recorder.record(t_tick, &sample);
        held = command;
        if k == ticks {
            break;
        }
        for s in 0..substeps {
            let t = t_tick + s as f64 * config.dt_physics;
            rk.step(t, &mut x, config.dt_physics, &names, |t, x, dx| {
                plant.derivatives(t, x, held, dx)
            })?;
            plant.project(&mut x);
            plant.check(t + config.dt_physics, &x)?;
        }
    }
    Ok(recorder.finish())
}

/// Named channel of a [`TimeSeries`].
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub data: Vec<f64>,
}

/// Uniformly sampled, equal-length channels on a shared time base.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub time: Vec<f64>,
    pub channels: Vec<Channel>,
}

impl TimeSeries {
    pub fn new(time: Vec<f64>, channels: Vec<Channel>) -> Result<Self, SimError> {
        for c in &channels {
            if c.data.len() != time.len() {
                return Err(SimError::InvalidConfig(format!(
                    "channel `{}` has {} samples, time base has {}",
                    c.name,
                    c.data.len(),
                    time.len()
                )));
            }
        }
        if time.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::InvalidConfig("time base is not strictly increasing".into()));
        }
        Ok(Self { time, channels })
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|c| c.name == name).map(|c| c.data.as_slice())
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|c| c.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_matches_exponential() {
        let s = StateVector::new([("x", 1.0)]).unwrap();
        let next = integrate_step(&s, |x, dx| dx[0] = -x[0], 0.001).unwrap();
        assert!((next.values()[0] - (-0.001f64).exp()).abs() <= 1e-12);
        assert!((next.values()[0] - 0.9990005).abs() < 1e-9);
    }

    #[test]
    fn constant_state_is_exact() {
        let s = StateVector::new([("x", 5.0)]).unwrap();
        let next = integrate_step(&s, |_, dx| dx[0] = 0.0, 0.1).unwrap();
        assert_eq!(next.values()[0], 5.0);
    }

    #[test]
    fn non_finite_derivative_names_state() {
        let s = StateVector::new([("position", 0.0), ("pressure_a", 1.0)]).unwrap();
        let err = integrate_step(
            &s,
            |_, dx| {
                dx[0] = 0.0;
                dx[1] = f64::NAN;
            },
            1e-3,
        )
        .unwrap_err();
        match err {
            SimError::NonFiniteDerivative { state, .. } => assert_eq!(state, "pressure_a"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(StateVector::new([("x", 0.0), ("x", 1.0)]).is_err());
    }

    #[test]
    fn schedule_rejects_non_multiple() {
        let cfg = SimConfig {
            dt_physics: 3e-4,
            dt_control: 1e-3,
            duration: 1.0,
            seed: 0,
        };
        assert!(cfg.schedule().is_err());
        let cfg = SimConfig {
            duration: 1e-4,
            ..SimConfig::default()
        };
        assert!(cfg.schedule().is_err());
    }

    #[test]
    fn one_second_at_one_khz_has_1001_samples() {
        let cfg = SimConfig {
            duration: 1.0,
            ..SimConfig::default()
        };
        assert_eq!(cfg.sample_count().unwrap(), 1001);
        assert_eq!(cfg.schedule().unwrap().0, 100);
    }
}
