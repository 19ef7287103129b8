//! Linear motor drive: normalised ±10 V command to axial force.

/// Drive input full scale. Normalised commands in [-1, 1] map to ±10 V.
pub const DRIVE_FULL_SCALE_V: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMotorParams {
    pub max_force: f64,
    pub max_stroke: f64,
    /// Newtons per unit normalised command.
    pub force_constant: f64,
    pub drive_time_constant: f64,
}

impl LinearMotorParams {
    /// LinMot P01 stator/slider pair.
    pub fn linmot_p01() -> Self {
        Self {
            max_force: 255.0,
            max_stroke: 0.120,
            force_constant: 255.0,
            drive_time_constant: 2e-3,
        }
    }

    pub fn from_preset(name: &str) -> Option<Self> {
        match name {
            "LinMot-P01" => Some(Self::linmot_p01()),
            _ => None,
        }
    }

    /// Rate of the first-order drive lag.
    pub fn force_rate(&self, command: f64, force: f64) -> f64 {
        let target = (command.clamp(-1.0, 1.0) * self.force_constant).clamp(-self.max_force, self.max_force);
        (target - force) / self.drive_time_constant
    }
}

impl Default for LinearMotorParams {
    fn default() -> Self {
        Self::linmot_p01()
    }
}

/// Motor force after holding `command` for `dt`, starting from `force`.
///
/// Uses the exact solution of the first-order lag.
pub fn motor_force(command: f64, force: f64, dt: f64, params: &LinearMotorParams) -> f64 {
    let target = (command.clamp(-1.0, 1.0) * params.force_constant).clamp(-params.max_force, params.max_force);
    let decay = (-dt / params.drive_time_constant).exp();
    (target + (force - target) * decay).clamp(-params.max_force, params.max_force)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrokeStatus {
    Ok,
    AtLimit,
}

/// Half-stroke check about the stroke centre, boundary inclusive.
pub fn stroke_guard(position: f64, center: f64, params: &LinearMotorParams) -> StrokeStatus {
    if (position - center).abs() <= params.max_stroke / 2.0 {
        StrokeStatus::Ok
    } else {
        StrokeStatus::AtLimit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hold(command: f64, seconds: f64) -> f64 {
        let p = LinearMotorParams::default();
        let mut f = 0.0;
        let dt = 1e-4;
        for _ in 0..(seconds / dt) as usize {
            f = motor_force(command, f, dt, &p);
        }
        f
    }

    #[test]
    fn steady_state_examples() {
        assert_eq!(hold(0.0, 0.1), 0.0);
        assert!((hold(1.0, 0.1) - 255.0).abs() < 1e-9);
        assert!((hold(0.5, 0.1) - 127.5).abs() < 1e-9);
    }

    #[test]
    fn steady_state_is_linear_in_command() {
        let p = LinearMotorParams::default();
        for i in 0..=10 {
            let u = -1.0 + 0.2 * i as f64;
            let f = motor_force(u, 0.0, 1.0, &p);
            let expected = u * p.max_force;
            assert!((f - expected).abs() <= 1e-9 * p.max_force, "u={u} f={f}");
        }
    }

    #[test]
    fn stroke_guard_examples() {
        let p = LinearMotorParams::default();
        assert_eq!(stroke_guard(0.0, 0.0, &p), StrokeStatus::Ok);
        assert_eq!(stroke_guard(0.0601, 0.0, &p), StrokeStatus::AtLimit);
        assert_eq!(stroke_guard(-0.060, 0.0, &p), StrokeStatus::Ok);
        assert_eq!(stroke_guard(0.5601, 0.5, &p), StrokeStatus::AtLimit);
    }

    proptest! {
        #[test]
        fn force_never_exceeds_rating(cmd in -5.0f64..5.0, f0 in -255.0f64..255.0, dt in 0.0f64..0.1) {
            let p = LinearMotorParams::default();
            prop_assert!(motor_force(cmd, f0, dt, &p).abs() <= 255.0);
        }
    }
}
