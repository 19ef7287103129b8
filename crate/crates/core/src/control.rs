//! Discrete controllers and reference generators.

use std::f64::consts::PI;

use crate::electric::DRIVE_FULL_SCALE_V;

/// PI gains on the normalised command scale (±1 = ±10 V).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiGains {
    /// Command per newton of force error.
    pub kp: f64,
    /// Command per newton-second of integrated error.
    pub ki: f64,
    pub anti_windup: bool,
}

impl PiGains {
    /// Output saturation, fixed by the ±10 V drive input.
    pub const OUTPUT_LIMIT: f64 = 1.0;

    /// Converts gains given in drive volts per newton (and per newton-second).
    pub fn from_drive_volts(kp_v_per_n: f64, ki_v_per_n_s: f64, anti_windup: bool) -> Self {
        Self {
            kp: kp_v_per_n / DRIVE_FULL_SCALE_V,
            ki: ki_v_per_n_s / DRIVE_FULL_SCALE_V,
            anti_windup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PiState {
    pub integrator: f64,
}

/// One controller tick. Forward-Euler integration with clamping anti-windup:
/// the integrator holds while the output is saturated and the error pushes
/// further into saturation.
pub fn pi_step(force_ref: f64, force_meas: f64, state: &mut PiState, dt: f64, gains: &PiGains) -> f64 {
    let limit = PiGains::OUTPUT_LIMIT;
    let e = force_ref - force_meas;
    let candidate = state.integrator + e * dt;
    let unclamped = gains.kp * e + gains.ki * candidate;
    let winding_up = unclamped.abs() > limit && e * unclamped > 0.0;
    if gains.anti_windup && winding_up {
        (gains.kp * e + gains.ki * state.integrator).clamp(-limit, limit)
    } else {
        state.integrator = candidate;
        unclamped.clamp(-limit, limit)
    }
}

/// Rendered stiffness and damping of the impedance outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceParams {
    pub stiffness: f64,
    pub damping: f64,
}

/// Force reference `K (x_d - x) + B (v_d - v)` for the inner force loop.
pub fn impedance_outer(
    position: f64,
    velocity: f64,
    desired_pos: f64,
    desired_vel: f64,
    params: &ImpedanceParams,
) -> f64 {
    params.stiffness * (desired_pos - position) + params.damping * (desired_vel - velocity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceUnit {
    Newton,
    Metre,
}

impl ReferenceUnit {
    pub fn suffix(self) -> &'static str {
        match self {
            Self::Newton => "n",
            Self::Metre => "m",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    Sine {
        amplitude: f64,
        frequency: f64,
        offset: f64,
    },
    Step {
        amplitude: f64,
        step_time: f64,
        offset: f64,
    },
    /// Linear frequency sweep from `start_frequency` to `end_frequency` over
    /// `sweep_time`, continuing at the end frequency afterwards.
    Chirp {
        amplitude: f64,
        start_frequency: f64,
        end_frequency: f64,
        sweep_time: f64,
        offset: f64,
    },
    /// Piecewise-linear samples; endpoints are held outside the range.
    Profile { times: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpec {
    pub waveform: Waveform,
    pub unit: ReferenceUnit,
}

impl ReferenceSpec {
    pub fn sine(amplitude: f64, frequency: f64, unit: ReferenceUnit) -> Self {
        Self {
            waveform: Waveform::Sine {
                amplitude,
                frequency,
                offset: 0.0,
            },
            unit,
        }
    }

    pub fn step(amplitude: f64, step_time: f64, unit: ReferenceUnit) -> Self {
        Self {
            waveform: Waveform::Step {
                amplitude,
                step_time,
                offset: 0.0,
            },
            unit,
        }
    }

    /// `cycles` triangles from 0 up to `span` and back, one per `period`.
    pub fn triangle(span: f64, period: f64, cycles: usize, unit: ReferenceUnit) -> Self {
        let mut times = vec![0.0];
        let mut values = vec![0.0];
        for c in 0..cycles {
            let t0 = c as f64 * period;
            times.push(t0 + period / 2.0);
            values.push(span);
            times.push(t0 + period);
            values.push(0.0);
        }
        Self {
            waveform: Waveform::Profile { times, values },
            unit,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match &self.waveform {
            Waveform::Sine {
                amplitude,
                frequency,
                offset,
            } => offset + amplitude * (2.0 * PI * frequency * t).sin(),
            Waveform::Step {
                amplitude,
                step_time,
                offset,
            } => {
                if t < *step_time {
                    *offset
                } else {
                    offset + amplitude
                }
            }
            Waveform::Chirp { amplitude, offset, .. } => offset + amplitude * self.chirp_phase(t).sin(),
            Waveform::Profile { times, values } => {
                let Some(i) = segment(times, t) else {
                    return if t <= times[0] {
                        values[0]
                    } else {
                        *values.last().unwrap()
                    };
                };
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    /// Time derivative of [`value`](Self::value), zero across steps.
    pub fn rate(&self, t: f64) -> f64 {
        match &self.waveform {
            Waveform::Sine {
                amplitude, frequency, ..
            } => {
                let w = 2.0 * PI * frequency;
                amplitude * w * (w * t).cos()
            }
            Waveform::Step { .. } => 0.0,
            Waveform::Chirp {
                amplitude,
                start_frequency,
                end_frequency,
                sweep_time,
                ..
            } => {
                let f = if t < *sweep_time {
                    start_frequency + (end_frequency - start_frequency) * t / sweep_time
                } else {
                    *end_frequency
                };
                amplitude * 2.0 * PI * f * self.chirp_phase(t).cos()
            }
            Waveform::Profile { times, values } => match segment(times, t) {
                Some(i) => (values[i + 1] - values[i]) / (times[i + 1] - times[i]),
                None => 0.0,
            },
        }
    }

    fn chirp_phase(&self, t: f64) -> f64 {
        let Waveform::Chirp {
            start_frequency: f0,
            end_frequency: f1,
            sweep_time: tt,
            ..
        } = self.waveform.clone()
        else {
            return 0.0;
        };
        if t < tt {
            2.0 * PI * (f0 * t + (f1 - f0) * t * t / (2.0 * tt))
        } else {
            2.0 * PI * (f0 * tt + (f1 - f0) * tt / 2.0 + f1 * (t - tt))
        }
    }

    /// Frequency of a pure sine reference.
    pub fn sine_frequency(&self) -> Option<f64> {
        match self.waveform {
            Waveform::Sine { frequency, .. } => Some(frequency),
            _ => None,
        }
    }

    /// Peak deviation from the offset (sine, chirp, step) or the profile span.
    pub fn amplitude(&self) -> f64 {
        match &self.waveform {
            Waveform::Sine { amplitude, .. } | Waveform::Chirp { amplitude, .. } | Waveform::Step { amplitude, .. } => {
                amplitude.abs()
            }
            Waveform::Profile { values, .. } => {
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                max - min
            }
        }
    }
}

/// Index of the profile segment containing `t`, if `t` is inside the samples.
fn segment(times: &[f64], t: f64) -> Option<usize> {
    if times.len() < 2 || t < times[0] || t >= *times.last().unwrap() {
        return None;
    }
    // partition_point gives the first sample strictly after t.
    Some(times.partition_point(|&s| s <= t) - 1)
}

pub fn reference_value(t: f64, spec: &ReferenceSpec) -> f64 {
    spec.value(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_error_zero_output() {
        let g = PiGains {
            kp: 1.5,
            ki: 1.5,
            anti_windup: true,
        };
        let mut s = PiState::default();
        assert_eq!(pi_step(10.0, 10.0, &mut s, 1e-3, &g), 0.0);
        assert_eq!(s.integrator, 0.0);
    }

    #[test]
    fn held_error_saturates() {
        let g = PiGains {
            kp: 1.5,
            ki: 1.5,
            anti_windup: false,
        };
        let mut s = PiState::default();
        let mut u = 0.0;
        for _ in 0..1000 {
            u = pi_step(1.0, 0.0, &mut s, 1e-3, &g);
        }
        assert!((s.integrator - 1.0).abs() < 1e-12);
        let unclamped = g.kp * 1.0 + g.ki * s.integrator;
        assert!((unclamped - 3.0).abs() < 1e-12);
        assert_eq!(u, 1.0);
    }

    #[test]
    fn proportional_only() {
        let g = PiGains {
            kp: 0.73,
            ki: 0.0,
            anti_windup: true,
        };
        let mut s = PiState::default();
        assert!((pi_step(0.5, 0.0, &mut s, 1e-3, &g) - 0.365).abs() < 1e-15);
    }

    #[test]
    fn drive_volt_gains_are_normalised() {
        let g = PiGains::from_drive_volts(0.73, 0.03, true);
        assert!((g.kp - 0.073).abs() < 1e-15);
        assert!((g.ki - 0.003).abs() < 1e-15);
    }

    #[test]
    fn anti_windup_bounds_integrator() {
        let g = PiGains {
            kp: 0.15,
            ki: 0.15,
            anti_windup: true,
        };
        let mut s = PiState::default();
        for _ in 0..100_000 {
            let u = pi_step(1000.0, 0.0, &mut s, 1e-3, &g);
            assert_eq!(u, 1.0);
        }
        assert!(s.integrator.abs() <= 1.0 / g.ki);
    }

    #[test]
    fn impedance_examples() {
        let p = ImpedanceParams {
            stiffness: 1000.0,
            damping: 0.0,
        };
        assert_eq!(impedance_outer(0.02, 0.1, 0.02, 0.1, &p), 0.0);
        assert!((impedance_outer(0.0, 0.0, 0.01, 0.0, &p) - 10.0).abs() < 1e-12);
        let p = ImpedanceParams {
            stiffness: 0.0,
            damping: 100.0,
        };
        assert!((impedance_outer(0.0, 0.05, 0.0, 0.0, &p) + 5.0).abs() < 1e-12);
    }

    #[test]
    fn reference_examples() {
        let s = ReferenceSpec::sine(50.0, 0.1, ReferenceUnit::Newton);
        assert!((reference_value(2.5, &s) - 50.0).abs() < 1e-12);
        let s = ReferenceSpec::sine(75.0, 2.0, ReferenceUnit::Newton);
        assert_eq!(reference_value(0.0, &s), 0.0);
        let s = ReferenceSpec::step(255.0, 0.1, ReferenceUnit::Newton);
        assert_eq!(reference_value(0.05, &s), 0.0);
        assert_eq!(reference_value(0.1, &s), 255.0);
    }

    #[test]
    fn profile_interpolates_and_holds() {
        let r = ReferenceSpec::triangle(0.02, 20.0, 1, ReferenceUnit::Metre);
        assert_eq!(r.value(0.0), 0.0);
        assert!((r.value(5.0) - 0.01).abs() < 1e-15);
        assert_eq!(r.value(10.0), 0.02);
        assert!((r.value(15.0) - 0.01).abs() < 1e-15);
        assert_eq!(r.value(25.0), 0.0);
        assert_eq!(r.value(-1.0), 0.0);
        assert!((r.rate(3.0) - 0.002).abs() < 1e-15);
        assert!((r.rate(13.0) + 0.002).abs() < 1e-15);
        assert_eq!(r.rate(30.0), 0.0);
    }

    #[test]
    fn chirp_sweeps_frequency() {
        let r = ReferenceSpec {
            waveform: Waveform::Chirp {
                amplitude: 1.0,
                start_frequency: 1.0,
                end_frequency: 5.0,
                sweep_time: 2.0,
                offset: 0.0,
            },
            unit: ReferenceUnit::Newton,
        };
        assert_eq!(r.value(0.0), 0.0);
        // Finite-difference check of the analytic rate.
        for t in [0.3, 1.1, 1.9, 2.5] {
            let h = 1e-6;
            let fd = (r.value(t + h) - r.value(t - h)) / (2.0 * h);
            assert!((fd - r.rate(t)).abs() < 1e-4, "t={t}");
        }
    }

    proptest! {
        #[test]
        fn output_always_bounded(r in -1e4f64..1e4, m in -1e4f64..1e4, i0 in -100.0f64..100.0,
                                 kp in 0.0f64..5.0, ki in 0.0f64..5.0, aw in any::<bool>()) {
            let g = PiGains { kp, ki, anti_windup: aw };
            let mut s = PiState { integrator: i0 };
            let u = pi_step(r, m, &mut s, 1e-3, &g);
            prop_assert!(u.abs() <= 1.0);
        }

        #[test]
        fn impedance_superposition(a in -0.1f64..0.1, b in -0.1f64..0.1, va in -1.0f64..1.0, vb in -1.0f64..1.0) {
            let p = ImpedanceParams { stiffness: 1234.0, damping: 56.0 };
            let sum = impedance_outer(0.0, 0.0, a + b, va + vb, &p);
            let parts = impedance_outer(0.0, 0.0, a, va, &p) + impedance_outer(0.0, 0.0, b, vb, &p);
            prop_assert!((sum - parts).abs() <= 1e-9 * (1.0 + sum.abs()));
        }
    }
}
