//! Scripted bench protocols: repeatability, blocked car and spring stiffness
//! identification, each over several seeded runs.

use rayon::prelude::*;

use crate::analysis::{fit_sine, linear_regression, mean_std, pointwise_mean_std, RegressionResult};
use crate::bench::{
    flags, ActuatorConfig, BenchPlant, BenchRecorder, BenchStation, ControlMode, ControllerConfig, Environment,
    PlantConfig, SensorConfig, CH_FLAGS, CH_FORCE, CH_POSITION,
};
use crate::control::{ReferenceSpec, Waveform};
use crate::error::{ExperimentError, SimError};
use crate::mechanics::Attachment;
use crate::sim::{run_simulation, SimConfig, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Repeatability,
    Blocked,
    StiffnessId,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Repeatability => "repeatability",
            Self::Blocked => "blocked",
            Self::StiffnessId => "stiffness-id",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "repeatability" => Some(Self::Repeatability),
            "blocked" => Some(Self::Blocked),
            "stiffness-id" => Some(Self::StiffnessId),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPolicy {
    /// Every run uses the base seed.
    Fixed,
    /// Run `i` uses a seed derived from the base seed and `i`.
    PerRun,
}

impl SeedPolicy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::PerRun => "per_run",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "fixed" => Some(Self::Fixed),
            "per_run" => Some(Self::PerRun),
            _ => None,
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub runs: usize,
    pub seed_policy: SeedPolicy,
    /// `sim.seed` is the base seed.
    pub sim: SimConfig,
    pub plant: PlantConfig,
    pub actuator: ActuatorConfig,
    pub sensors: SensorConfig,
    pub controller: ControllerConfig,
    pub reference: ReferenceSpec,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ExperimentSpec {
    pub fn run_seed(&self, run: usize) -> u64 {
        match self.seed_policy {
            SeedPolicy::Fixed => self.sim.seed,
            SeedPolicy::PerRun => splitmix64(self.sim.seed ^ splitmix64(run as u64)),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.runs < 1 {
            return Err(ExperimentError::Invalid("runs must be at least 1".into()));
        }
        self.sim
            .schedule()
            .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
        match self.kind {
            ExperimentKind::Repeatability if self.runs < 2 => {
                Err(ExperimentError::Invalid("repeatability needs at least 2 runs".into()))
            }
            ExperimentKind::Blocked => {
                if !matches!(self.plant.environment, Environment::Blockage(_)) {
                    return Err(ExperimentError::Invalid(
                        "blocked test needs a blockage environment".into(),
                    ));
                }
                if !matches!(self.reference.waveform, Waveform::Step { .. }) {
                    return Err(ExperimentError::Invalid("blocked test needs a step reference".into()));
                }
                Ok(())
            }
            ExperimentKind::StiffnessId => {
                let grounded = matches!(
                    self.plant.environment,
                    Environment::Spring(sd) if sd.end_b == Attachment::Ground || sd.end_a == Attachment::Ground
                );
                if !grounded {
                    return Err(ExperimentError::Invalid(
                        "stiffness identification needs a spring with one grounded end".into(),
                    ));
                }
                if self.controller.mode != ControlMode::Manual {
                    return Err(ExperimentError::Invalid(
                        "stiffness identification drives the car manually (controller mode `manual`)".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Runs one seeded simulation of the spec.
pub fn simulate_run(spec: &ExperimentSpec, run: usize) -> Result<TimeSeries, SimError> {
    let sim = SimConfig {
        seed: spec.run_seed(run),
        ..spec.sim
    };
    let driver = (spec.controller.mode == ControlMode::Manual).then(|| spec.reference.clone());
    let plant = BenchPlant::new(spec.plant, spec.actuator, driver);
    let mut station = BenchStation::new(
        &spec.controller,
        spec.reference.clone(),
        spec.sensors,
        &spec.actuator,
        sim.dt_control,
    );
    let recorder = BenchRecorder::new(spec.actuator.is_hydraulic(), sim.sample_count().unwrap_or(0));
    run_simulation(&sim, &plant, &mut station, recorder)
}

/// Runs every repetition, concurrently. The first failing run (by index)
/// aborts the experiment.
pub fn simulate_runs(spec: &ExperimentSpec) -> Result<Vec<TimeSeries>, ExperimentError> {
    spec.validate()?;
    let results: Vec<Result<TimeSeries, SimError>> =
        (0..spec.runs).into_par_iter().map(|i| simulate_run(spec, i)).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(run, r)| r.map_err(|source| ExperimentError::RunAborted { run, source }))
        .collect()
}

fn channel<'a>(series: &'a TimeSeries, name: &str) -> Result<&'a [f64], ExperimentError> {
    series
        .channel(name)
        .ok_or_else(|| ExperimentError::MissingChannel(name.to_string()))
}

fn aligned<'a>(runs: &'a [TimeSeries], name: &str) -> Result<Vec<&'a [f64]>, ExperimentError> {
    let first = runs
        .first()
        .ok_or_else(|| ExperimentError::Invalid("no runs to summarise".into()))?;
    runs.iter()
        .map(|r| {
            if r.time != first.time {
                return Err(ExperimentError::Invalid("runs do not share a time base".into()));
            }
            channel(r, name)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStatistics {
    pub name: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Largest |mean| over the run.
    pub peak_abs_mean: f64,
    /// Largest pointwise std over the steady-state window.
    pub max_std_steady: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStatistics {
    pub runs: usize,
    pub time: Vec<f64>,
    /// First sample of the steady-state window (final 80 % of the run).
    pub steady_start: usize,
    pub channels: Vec<ChannelStatistics>,
    pub reference_amplitude: f64,
    /// Sine-fit amplitude of the mean measured force over the steady window.
    pub force_amplitude: Option<f64>,
}

impl RunStatistics {
    pub fn channel(&self, name: &str) -> Option<&ChannelStatistics> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn max_force_std(&self) -> f64 {
        self.channel(CH_FORCE).map_or(f64::NAN, |c| c.max_std_steady)
    }

    pub fn max_position_std(&self) -> f64 {
        self.channel(CH_POSITION).map_or(f64::NAN, |c| c.max_std_steady)
    }
}

/// Index of the first sample at or after 20 % of the run.
pub fn steady_state_start(time: &[f64]) -> usize {
    let (Some(&t0), Some(&t1)) = (time.first(), time.last()) else {
        return 0;
    };
    let cut = t0 + 0.2 * (t1 - t0);
    time.iter().position(|&t| t >= cut - 1e-12).unwrap_or(0)
}

pub fn repeatability_statistics(spec: &ExperimentSpec, runs: &[TimeSeries]) -> Result<RunStatistics, ExperimentError> {
    let first = runs
        .first()
        .ok_or_else(|| ExperimentError::Invalid("no runs to summarise".into()))?;
    let time = first.time.clone();
    let steady_start = steady_state_start(&time);
    let mut channels = Vec::new();
    for name in first.channel_names().filter(|n| *n != CH_FLAGS) {
        let data = aligned(runs, name)?;
        let (mean, std) = pointwise_mean_std(&data);
        let peak_abs_mean = mean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_std_steady = std[steady_start..].iter().fold(0.0f64, |m, &v| m.max(v));
        channels.push(ChannelStatistics {
            name: name.to_string(),
            mean,
            std,
            peak_abs_mean,
            max_std_steady,
        });
    }
    let force_amplitude = spec.reference.sine_frequency().and_then(|f| {
        let mean = &channels.iter().find(|c| c.name == CH_FORCE)?.mean;
        fit_sine(&time[steady_start..], &mean[steady_start..], f).map(|s| s.amplitude)
    });
    Ok(RunStatistics {
        runs: runs.len(),
        time,
        steady_start,
        channels,
        reference_amplitude: spec.reference.amplitude(),
        force_amplitude,
    })
}

pub fn run_repeatability(spec: &ExperimentSpec) -> Result<RunStatistics, ExperimentError> {
    if spec.runs < 2 {
        return Err(ExperimentError::Invalid("repeatability needs at least 2 runs".into()));
    }
    let runs = simulate_runs(spec)?;
    repeatability_statistics(spec, &runs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockedResult {
    /// Peak encoder displacement of each run.
    pub peak_displacements: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Runs in which any saturation flag was raised.
    pub saturated_runs: usize,
}

pub fn blocked_statistics(runs: &[TimeSeries]) -> Result<BlockedResult, ExperimentError> {
    if runs.is_empty() {
        return Err(ExperimentError::Invalid("no runs to summarise".into()));
    }
    let mut peaks = Vec::with_capacity(runs.len());
    let mut saturated_runs = 0;
    let mask = f64::from(flags::LOAD_CELL_CLIPPED | flags::COMMAND_SATURATED | flags::SUPPLY_SATURATED);
    for r in runs {
        let pos = channel(r, CH_POSITION)?;
        let x0 = pos.first().copied().unwrap_or(0.0);
        peaks.push(pos.iter().fold(0.0f64, |m, &x| m.max((x - x0).abs())));
        let bits = channel(r, CH_FLAGS)?;
        if bits.iter().any(|&b| (b as u32) & (mask as u32) != 0) {
            saturated_runs += 1;
        }
    }
    let (mean, std) = mean_std(&peaks);
    Ok(BlockedResult {
        peak_displacements: peaks,
        mean,
        std,
        saturated_runs,
    })
}

pub fn run_blocked_test(spec: &ExperimentSpec) -> Result<BlockedResult, ExperimentError> {
    blocked_statistics(&simulate_runs(spec)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessIdResult {
    pub regression: RegressionResult,
    pub runs: usize,
    /// Mean displacement across runs.
    pub displacement: Vec<f64>,
    /// Mean measured force across runs.
    pub force: Vec<f64>,
    pub displacement_span: f64,
}

pub fn stiffness_statistics(spec: &ExperimentSpec, runs: &[TimeSeries]) -> Result<StiffnessIdResult, ExperimentError> {
    let (displacement, _) = pointwise_mean_std(&aligned(runs, CH_POSITION)?);
    let (force, _) = pointwise_mean_std(&aligned(runs, CH_FORCE)?);
    let lo = displacement.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = displacement.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let min = 10.0 * spec.sensors.encoder.resolution;
    if !(span >= min) || span == 0.0 {
        return Err(ExperimentError::InsufficientExcitation { span, min });
    }
    let regression = linear_regression(&displacement, &force)?;
    Ok(StiffnessIdResult {
        regression,
        runs: runs.len(),
        displacement,
        force,
        displacement_span: span,
    })
}

pub fn run_stiffness_id(spec: &ExperimentSpec) -> Result<StiffnessIdResult, ExperimentError> {
    let runs = simulate_runs(spec)?;
    stiffness_statistics(spec, &runs)
}

/// Result of one coulomb-force candidate in a calibration sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationPoint {
    pub coulomb_force: f64,
    pub regression: RegressionResult,
}

/// Runs the stiffness identification once per coulomb-force candidate.
pub fn coulomb_sweep(spec: &ExperimentSpec, candidates: &[f64]) -> Result<Vec<CalibrationPoint>, ExperimentError> {
    candidates
        .iter()
        .map(|&c| {
            let mut s = spec.clone();
            s.plant.friction.coulomb_force = c;
            Ok(CalibrationPoint {
                coulomb_force: c,
                regression: run_stiffness_id(&s)?.regression,
            })
        })
        .collect()
}

/// Candidate whose identified slope lands closest to `target_slope`, among
/// those keeping `R >= min_r`; falls back to all candidates if none do.
pub fn best_calibration(points: &[CalibrationPoint], target_slope: f64, min_r: f64) -> Option<CalibrationPoint> {
    let score = |p: &&CalibrationPoint| (p.regression.slope - target_slope).abs();
    let ok: Vec<&CalibrationPoint> = points.iter().filter(|p| p.regression.correlation_r >= min_r).collect();
    let pool: Vec<&CalibrationPoint> = if ok.is_empty() { points.iter().collect() } else { ok };
    pool.into_iter().min_by(|a, b| score(a).total_cmp(&score(b))).copied()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSummary {
    Repeatability(RunStatistics),
    Blocked(BlockedResult),
    StiffnessId(StiffnessIdResult),
}

impl ExperimentSummary {
    /// Scalar results as written to `summary.csv`.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        match self {
            Self::Repeatability(s) => {
                let amp = s.force_amplitude.unwrap_or(f64::NAN);
                vec![
                    ("runs", s.runs as f64),
                    ("reference_amplitude", s.reference_amplitude),
                    ("force_amplitude_n", amp),
                    (
                        "amplitude_error_fraction",
                        (amp - s.reference_amplitude).abs() / s.reference_amplitude,
                    ),
                    ("force_std_max_n", s.max_force_std()),
                    ("force_std_max_fraction", s.max_force_std() / s.reference_amplitude),
                    ("position_std_max_m", s.max_position_std()),
                    (
                        "force_peak_abs_mean_n",
                        s.channel(CH_FORCE).map_or(f64::NAN, |c| c.peak_abs_mean),
                    ),
                ]
            }
            Self::Blocked(b) => vec![
                ("runs", b.peak_displacements.len() as f64),
                ("peak_displacement_mean_m", b.mean),
                ("peak_displacement_std_m", b.std),
                (
                    "peak_displacement_min_m",
                    b.peak_displacements.iter().copied().fold(f64::INFINITY, f64::min),
                ),
                (
                    "peak_displacement_max_m",
                    b.peak_displacements.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                ),
                ("saturated_runs", b.saturated_runs as f64),
            ],
            Self::StiffnessId(r) => vec![
                ("runs", r.runs as f64),
                ("slope_n_per_m", r.regression.slope),
                ("intercept_n", r.regression.intercept),
                ("correlation_r", r.regression.correlation_r),
                ("displacement_span_m", r.displacement_span),
            ],
        }
    }
}

/// Statistics of the experiment's kind, computed from finished runs.
pub fn summarize(spec: &ExperimentSpec, runs: &[TimeSeries]) -> Result<ExperimentSummary, ExperimentError> {
    Ok(match spec.kind {
        ExperimentKind::Repeatability => ExperimentSummary::Repeatability(repeatability_statistics(spec, runs)?),
        ExperimentKind::Blocked => ExperimentSummary::Blocked(blocked_statistics(runs)?),
        ExperimentKind::StiffnessId => ExperimentSummary::StiffnessId(stiffness_statistics(spec, runs)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub runs: Vec<TimeSeries>,
    pub summary: ExperimentSummary,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, ExperimentError> {
    let runs = simulate_runs(spec)?;
    let summary = summarize(spec, &runs)?;
    Ok(ExperimentOutcome { runs, summary })
}
