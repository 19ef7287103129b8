//! Sensor chains: incremental encoder, bridge load cell with amplifier and
//! ADC, and chamber pressure transducers.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::sim::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderModel {
    /// Count size in metres; zero means an ideal encoder.
    pub resolution: f64,
}

impl EncoderModel {
    /// RLS LM10 magnetic strip, 1 µm counts.
    pub fn rls_lm10() -> Self {
        Self { resolution: 1e-6 }
    }

    pub fn from_preset(name: &str) -> Option<Self> {
        (name == "RLS-LM10").then(Self::rls_lm10)
    }
}

impl Default for EncoderModel {
    fn default() -> Self {
        Self::rls_lm10()
    }
}

/// Position rounded down to the count grid.
///
/// Positions within 1e-6 counts of a grid line are read as that line so the
/// floor does not drop a count to representation error; this also makes the
/// read idempotent.
pub fn encoder_read(true_position: f64, model: &EncoderModel) -> f64 {
    if model.resolution <= 0.0 {
        return true_position;
    }
    let counts = true_position / model.resolution;
    let nearest = counts.round();
    let n = if (counts - nearest).abs() <= 1e-6 {
        nearest
    } else {
        counts.floor()
    };
    n * model.resolution
}

/// Strain-gauge load cell with amplifier and ADC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCellModel {
    pub range: f64,
    pub sensitivity_mv_per_v: f64,
    pub excitation_v: f64,
    /// Bridge volts to ADC volts; full range maps to `adc_fullscale_v`.
    pub amplifier_gain: f64,
    pub axial_stiffness: f64,
    pub noise_std: f64,
    /// `None` disables quantisation.
    pub adc_bits: Option<u32>,
    /// Half-span of the bipolar ADC input (mid-rail of a 3.3 V converter).
    pub adc_fullscale_v: f64,
}

impl LoadCellModel {
    pub const DEFAULT_EXCITATION_V: f64 = 10.0;
    pub const DEFAULT_FULLSCALE_V: f64 = 1.65;

    /// Builds a model whose amplifier maps the rated range onto the ADC span.
    pub fn matched(
        range: f64,
        sensitivity_mv_per_v: f64,
        excitation_v: f64,
        adc_bits: Option<u32>,
        adc_fullscale_v: f64,
        noise_std: f64,
        axial_stiffness: f64,
    ) -> Self {
        Self {
            range,
            sensitivity_mv_per_v,
            excitation_v,
            amplifier_gain: adc_fullscale_v / (sensitivity_mv_per_v * 1e-3 * excitation_v),
            axial_stiffness,
            noise_std,
            adc_bits,
            adc_fullscale_v,
        }
    }

    /// Interface SMT1-250, used with the electric actuator.
    pub fn smt1_250() -> Self {
        Self::matched(
            250.0,
            2.0,
            Self::DEFAULT_EXCITATION_V,
            Some(12),
            Self::DEFAULT_FULLSCALE_V,
            0.5,
            1.7e6,
        )
    }

    /// Burster 8417-6005 miniature cell, used with the hydraulic actuator.
    /// A 16-bit converter keeps its 5 kN range from swamping 50 N signals.
    pub fn burster_8417() -> Self {
        Self::matched(
            5000.0,
            1.0,
            Self::DEFAULT_EXCITATION_V,
            Some(16),
            Self::DEFAULT_FULLSCALE_V,
            0.25,
            1.7e6,
        )
    }

    pub fn from_preset(name: &str) -> Option<Self> {
        match name {
            "SMT1-250" => Some(Self::smt1_250()),
            "Burster-8417" => Some(Self::burster_8417()),
            _ => None,
        }
    }

    /// Bridge output in millivolts before amplification.
    pub fn bridge_millivolts(&self, force: f64) -> f64 {
        force.clamp(-self.range, self.range) / self.range * self.sensitivity_mv_per_v * self.excitation_v
    }

    /// One ADC count expressed in newtons.
    pub fn quantization_step(&self) -> f64 {
        match self.adc_bits {
            Some(bits) => 2.0 * self.range / 2f64.powi(bits as i32),
            None => 0.0,
        }
    }

    pub fn ideal(mut self) -> Self {
        self.noise_std = 0.0;
        self.adc_bits = None;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCellReading {
    pub force: f64,
    pub clipped: bool,
}

pub fn loadcell_read(true_force: f64, model: &LoadCellModel, rng: &mut SimRng) -> LoadCellReading {
    let clipped = true_force.abs() > model.range;
    let force = true_force.clamp(-model.range, model.range);
    let mut value = match model.adc_bits {
        None => force,
        Some(bits) => {
            let volts_per_newton = model.sensitivity_mv_per_v * 1e-3 * model.excitation_v / model.range;
            let adc_v = force * volts_per_newton * model.amplifier_gain;
            let lsb = 2.0 * model.adc_fullscale_v / 2f64.powi(bits as i32);
            let half = 2f64.powi(bits as i32 - 1);
            let code = (adc_v / lsb).round().clamp(-half, half);
            code * lsb / model.amplifier_gain / volts_per_newton
        }
    };
    if model.noise_std > 0.0 {
        value += model.noise_std * rng.sample::<f64, _>(StandardNormal);
    }
    LoadCellReading { force: value, clipped }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureSensorModel {
    pub max_pressure: f64,
    pub accuracy_fraction: f64,
    pub noise_std: f64,
}

impl PressureSensorModel {
    /// Trafag NAT 8251, 25 MPa, ±0.5 %.
    pub fn nat_8251() -> Self {
        Self {
            max_pressure: 25e6,
            accuracy_fraction: 0.005,
            noise_std: 0.0005 * 25e6,
        }
    }

    pub fn from_preset(name: &str) -> Option<Self> {
        (name == "NAT-8251").then(Self::nat_8251)
    }

    /// Largest systematic offset allowed by the accuracy class.
    pub fn offset_bound(&self) -> f64 {
        self.accuracy_fraction * self.max_pressure
    }

    pub fn ideal(mut self) -> Self {
        self.accuracy_fraction = 0.0;
        self.noise_std = 0.0;
        self
    }
}

impl Default for PressureSensorModel {
    fn default() -> Self {
        Self::nat_8251()
    }
}

/// A pressure transducer instance with its per-run calibration offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureSensor {
    pub model: PressureSensorModel,
    pub offset: f64,
}

impl PressureSensor {
    /// Draws the run's systematic offset uniformly within the accuracy class.
    pub fn new(model: PressureSensorModel, rng: &mut SimRng) -> Self {
        let bound = model.offset_bound();
        let offset = if bound > 0.0 {
            rng.random_range(-bound..=bound)
        } else {
            0.0
        };
        Self { model, offset }
    }
}

pub fn pressure_read(true_pressure: f64, sensor: &PressureSensor, rng: &mut SimRng) -> f64 {
    let mut p = true_pressure.clamp(0.0, sensor.model.max_pressure) + sensor.offset;
    if sensor.model.noise_std > 0.0 {
        p += sensor.model.noise_std * rng.sample::<f64, _>(StandardNormal);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn rng() -> SimRng {
        SimRng::seed_from_u64(7)
    }

    #[test]
    fn encoder_examples() {
        let m = EncoderModel::default();
        assert_eq!(encoder_read(1.4e-6, &m), 1.0e-6);
        assert_eq!(encoder_read(0.0, &m), 0.0);
        assert_eq!(encoder_read(-0.3e-6, &m), -1.0e-6);
        assert_eq!(encoder_read(1.5e-4, &m), 150.0 * 1e-6);
    }

    #[test]
    fn loadcell_examples() {
        let mut r = rng();
        let m = LoadCellModel {
            noise_std: 0.0,
            ..LoadCellModel::smt1_250()
        };
        assert_eq!(loadcell_read(0.0, &m, &mut r).force, 0.0);
        assert!((m.bridge_millivolts(250.0) - 20.0).abs() < 1e-12);
        let clipped = loadcell_read(300.0, &m, &mut r);
        assert!((clipped.force - 250.0).abs() < 1e-9);
        assert!(clipped.clipped);
    }

    #[test]
    fn loadcell_error_bound_statistically() {
        let mut r = rng();
        for m in [LoadCellModel::smt1_250(), LoadCellModel::burster_8417()] {
            let bound = m.quantization_step() + 6.0 * m.noise_std;
            for i in 0..100_000 {
                let f = -0.95 * m.range + 1.9 * m.range * (i as f64 / 99_999.0);
                let e = (loadcell_read(f, &m, &mut r).force - f).abs();
                assert!(e <= bound, "{} N off at {f} N", e);
            }
        }
    }

    #[test]
    fn pressure_examples() {
        let mut r = rng();
        let ideal = PressureSensor::new(PressureSensorModel::nat_8251().ideal(), &mut r);
        assert_eq!(pressure_read(10e6, &ideal, &mut r), 10e6);
        assert_eq!(pressure_read(30e6, &ideal, &mut r), 25e6);
        assert!((PressureSensorModel::nat_8251().offset_bound() - 0.125e6).abs() < 1e-6);
    }

    #[test]
    fn pressure_offset_within_accuracy_class() {
        let mut r = rng();
        for _ in 0..1000 {
            let s = PressureSensor::new(PressureSensorModel::nat_8251(), &mut r);
            assert!(s.offset.abs() <= 0.125e6);
        }
    }

    proptest! {
        #[test]
        fn encoder_is_idempotent(x in -0.1f64..0.1) {
            let m = EncoderModel::default();
            let once = encoder_read(x, &m);
            prop_assert_eq!(encoder_read(once, &m), once);
            prop_assert!(once <= x + 1e-12);
        }

        #[test]
        fn ideal_sensors_are_identity(f in -250.0f64..250.0, p in 0.0f64..25e6, x in -0.1f64..0.1) {
            let mut r = SimRng::seed_from_u64(1);
            let lc = LoadCellModel::smt1_250().ideal();
            prop_assert_eq!(loadcell_read(f, &lc, &mut r).force, f);
            let ps = PressureSensor::new(PressureSensorModel::nat_8251().ideal(), &mut r);
            prop_assert_eq!(pressure_read(p, &ps, &mut r), p);
            prop_assert_eq!(encoder_read(x, &EncoderModel { resolution: 0.0 }), x);
        }
    }
}
