//! Translational mechanics of the bench cars on the shared guide axis.
//!
//! Sign convention: positive position points from the actuator toward the
//! environment. A positive spring deflection is a compression and pushes the
//! compressing car back (negative force).

use crate::error::ModelError;

/// Upper guidance for a slider's moving mass.
pub const MAX_CAR_MASS_KG: f64 = 10.0;
/// Rated load of the blocked path.
pub const RATED_BLOCKED_LOAD_N: f64 = 5000.0;

/// A car sliding on the guide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarBody {
    pub mass: f64,
    pub position: f64,
    pub velocity: f64,
    /// `(min, max)` travel in metres.
    pub travel_limits: (f64, f64),
}

impl CarBody {
    pub fn new(mass: f64, travel_limits: (f64, f64)) -> Self {
        Self {
            mass,
            position: 0.0,
            velocity: 0.0,
            travel_limits,
        }
    }

    pub fn within_travel(&self, position: f64) -> bool {
        position >= self.travel_limits.0 && position <= self.travel_limits.1
    }
}

/// Coulomb + viscous friction with a Karnopp stiction band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    pub coulomb_force: f64,
    pub viscous_coeff: f64,
    pub stiction_velocity_band: f64,
}

impl FrictionParams {
    pub const DEFAULT_BAND: f64 = 1e-4;

    pub fn new(coulomb_force: f64, viscous_coeff: f64) -> Self {
        Self {
            coulomb_force,
            viscous_coeff,
            stiction_velocity_band: Self::DEFAULT_BAND,
        }
    }

    pub fn none() -> Self {
        Self::new(0.0, 0.0)
    }
}

impl Default for FrictionParams {
    /// Lubricated profile-rail slider.
    fn default() -> Self {
        Self::new(5.0, 40.0)
    }
}

/// Friction force on a car.
///
/// Outside the stiction band the force opposes motion. Inside the band it
/// cancels any applied force up to the Coulomb level, so a stuck car stays
/// stuck; above that level the car breaks away against `coulomb_force`.
pub fn friction_force(velocity: f64, applied_force: f64, params: &FrictionParams) -> f64 {
    if velocity.abs() > params.stiction_velocity_band {
        -velocity.signum() * (params.coulomb_force + params.viscous_coeff * velocity.abs())
    } else if applied_force.abs() <= params.coulomb_force {
        -applied_force
    } else {
        -applied_force.signum() * params.coulomb_force
    }
}

/// Where one end of a spring-damper is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attachment {
    Car(usize),
    Ground,
}

/// Linear spring with a parallel viscous damper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringDamper {
    pub stiffness: f64,
    pub damping: f64,
    /// Deflection at zero car displacement (preload).
    pub rest_deflection: f64,
    pub end_a: Attachment,
    pub end_b: Attachment,
}

impl SpringDamper {
    /// Spring between car 0 and ground.
    pub fn grounded(stiffness: f64, damping: f64) -> Self {
        Self {
            stiffness,
            damping,
            rest_deflection: 0.0,
            end_a: Attachment::Car(0),
            end_b: Attachment::Ground,
        }
    }

    /// `(deflection, deflection rate)` for the given car kinematics.
    pub fn deflection(&self, positions: &[f64], velocities: &[f64]) -> (f64, f64) {
        let at = |end: Attachment, v: &[f64]| match end {
            Attachment::Car(i) => v[i],
            Attachment::Ground => 0.0,
        };
        (
            at(self.end_a, positions) - at(self.end_b, positions) + self.rest_deflection,
            at(self.end_a, velocities) - at(self.end_b, velocities),
        )
    }
}

/// Force a spring-damper exerts on the car at `end_a`.
pub fn spring_damper_force(deflection: f64, deflection_rate: f64, sd: &SpringDamper) -> f64 {
    -(sd.stiffness * deflection + sd.damping * deflection_rate)
}

/// Series compliance of a blocked load path, dominated by the load cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageCoupling {
    pub latch_stiffness: f64,
}

impl Default for BlockageCoupling {
    /// 255 N over 0.15 mm.
    fn default() -> Self {
        Self { latch_stiffness: 1.7e6 }
    }
}

/// Quasi-static deflection of the blocked path under `applied_force`.
pub fn blocked_path_deflection(applied_force: f64, coupling: &BlockageCoupling) -> Result<f64, ModelError> {
    if applied_force.abs() > RATED_BLOCKED_LOAD_N {
        return Err(ModelError::OverRatedBlockage {
            force: applied_force,
            rated: RATED_BLOCKED_LOAD_N,
        });
    }
    Ok(applied_force / coupling.latch_stiffness)
}

pub fn car_acceleration(car: &CarBody, total_force: f64) -> f64 {
    total_force / car.mass
}

/// Unilateral stiff contact at the travel limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndStops {
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for EndStops {
    fn default() -> Self {
        Self {
            stiffness: 1e7,
            damping: 1e4,
        }
    }
}

impl EndStops {
    /// Contact force; zero inside the limits and never pulling the car outward.
    pub fn force(&self, position: f64, velocity: f64, limits: (f64, f64)) -> f64 {
        if position > limits.1 {
            (-(self.stiffness * (position - limits.1) + self.damping * velocity)).min(0.0)
        } else if position < limits.0 {
            (self.stiffness * (limits.0 - position) - self.damping * velocity).max(0.0)
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stuck_car_cancels_applied_force() {
        let p = FrictionParams::new(10.0, 40.0);
        assert_eq!(friction_force(0.0, 4.0, &p), -4.0);
        assert_eq!(4.0 + friction_force(0.0, 4.0, &p), 0.0);
    }

    #[test]
    fn sliding_friction_values() {
        let p = FrictionParams::new(10.0, 40.0);
        assert!((friction_force(0.05, 0.0, &p) + 12.0).abs() < 1e-12);
        assert!((friction_force(-0.05, 0.0, &p) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn breakaway_inside_band() {
        let p = FrictionParams::new(10.0, 40.0);
        assert_eq!(friction_force(0.0, 25.0, &p), -10.0);
        assert_eq!(friction_force(5e-5, -25.0, &p), 10.0);
    }

    #[test]
    fn spring_damper_examples() {
        let sd = SpringDamper::grounded(6000.0, 0.0);
        assert_eq!(spring_damper_force(0.0, 0.0, &sd), 0.0);
        assert!((spring_damper_force(0.010, 0.0, &sd) + 60.0).abs() < 1e-9);
        let sd = SpringDamper::grounded(6000.0, 50.0);
        assert!((spring_damper_force(0.010, 0.1, &sd) + 65.0).abs() < 1e-9);
    }

    #[test]
    fn deflection_between_two_cars() {
        let sd = SpringDamper {
            end_a: Attachment::Car(0),
            end_b: Attachment::Car(1),
            rest_deflection: 0.001,
            ..SpringDamper::grounded(1000.0, 0.0)
        };
        let (d, r) = sd.deflection(&[0.01, 0.004], &[0.2, 0.05]);
        assert!((d - 0.007).abs() < 1e-15);
        assert!((r - 0.15).abs() < 1e-15);
    }

    #[test]
    fn newton_second_law() {
        let car = CarBody::new(10.0, (-0.1, 0.1));
        assert_eq!(car_acceleration(&car, 50.0), 5.0);
        assert_eq!(car_acceleration(&car, 0.0), 0.0);
        let car = CarBody::new(2.5, (-0.1, 0.1));
        assert_eq!(car_acceleration(&car, -12.5), -5.0);
    }

    #[test]
    fn blocked_deflection_examples() {
        let c = BlockageCoupling::default();
        assert!((blocked_path_deflection(255.0, &c).unwrap() - 1.5e-4).abs() < 1e-15);
        assert_eq!(blocked_path_deflection(0.0, &c).unwrap(), 0.0);
        assert!((blocked_path_deflection(85.0, &c).unwrap() - 5.0e-5).abs() < 1e-15);
        assert!(matches!(
            blocked_path_deflection(5001.0, &c),
            Err(ModelError::OverRatedBlockage { .. })
        ));
    }

    #[test]
    fn end_stops_only_push_back() {
        let s = EndStops::default();
        let lim = (-0.04, 0.04);
        assert_eq!(s.force(0.0, 1.0, lim), 0.0);
        assert!(s.force(0.0401, 0.0, lim) < 0.0);
        assert!(s.force(-0.0401, 0.0, lim) > 0.0);
        // Leaving the stop fast: damping would pull, clamp keeps it at zero.
        assert_eq!(s.force(0.04001, -10.0, lim), 0.0);
    }

    proptest! {
        #[test]
        fn sliding_friction_dissipates(v in -1.0f64..1.0, applied in -100.0f64..100.0,
                                       fc in 0.0f64..20.0, cv in 0.0f64..100.0) {
            let p = FrictionParams::new(fc, cv);
            prop_assume!(v.abs() > p.stiction_velocity_band);
            prop_assert!(friction_force(v, applied, &p) * v <= 0.0);
        }

        #[test]
        fn stuck_state_has_zero_net_force(v in -1e-4f64..1e-4, fc in 0.0f64..20.0, frac in -1.0f64..1.0) {
            let p = FrictionParams::new(fc, 40.0);
            let applied = frac * fc;
            let car = CarBody::new(3.0, (-1.0, 1.0));
            prop_assert_eq!(car_acceleration(&car, applied + friction_force(v, applied, &p)), 0.0);
        }

        #[test]
        fn spring_force_is_odd(x in -0.05f64..0.05, k in 0.0f64..1e5) {
            let sd = SpringDamper::grounded(k, 0.0);
            prop_assert_eq!(spring_damper_force(x, 0.0, &sd), -spring_damper_force(-x, 0.0, &sd));
        }
    }
}
