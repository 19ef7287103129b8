//! Hydraulic chain: supply unit, four-way servovalve, asymmetric cylinder.
//!
//! Chamber A is the cap side (full bore), chamber B the rod side. Positive
//! spool opening connects supply to A and B to tank, extending the rod.

use std::f64::consts::PI;

use crate::analysis::fit_sine;
use crate::error::ModelError;

/// Regulated pressure limit of the power unit.
pub const HPU_MAX_PRESSURE_PA: f64 = 20.7e6;
/// Flow limit of the power unit.
pub const HPU_MAX_FLOW_M3_S: f64 = 1.67e-4;

/// ISO VG 68 mineral oil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OilProperties {
    pub density: f64,
    pub kinematic_viscosity: f64,
    pub bulk_modulus: f64,
}

impl Default for OilProperties {
    fn default() -> Self {
        Self {
            density: 875.0,
            kinematic_viscosity: 6.8e-5,
            bulk_modulus: 1.34e9,
        }
    }
}

impl OilProperties {
    /// Fractional volume loss of a fixed oil mass when pressure rises by `dp`,
    /// from `dV/V = -dp/β` at constant bulk modulus.
    pub fn volume_reduction(&self, dp: f64) -> f64 {
        -(-dp / self.bulk_modulus).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyUnit {
    pub supply_pressure: f64,
    pub max_flow: f64,
    pub tank_pressure: f64,
}

impl SupplyUnit {
    pub fn new(supply_pressure: f64) -> Self {
        Self {
            supply_pressure,
            max_flow: HPU_MAX_FLOW_M3_S,
            tank_pressure: 0.0,
        }
    }
}

impl Default for SupplyUnit {
    fn default() -> Self {
        Self::new(10e6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValvePreset {
    E024,
    G761,
}

impl ValvePreset {
    pub fn name(self) -> &'static str {
        match self {
            Self::E024 => "E024",
            Self::G761 => "G761",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "E024" => Some(Self::E024),
            "G761" | "G-761" => Some(Self::G761),
            _ => None,
        }
    }

    pub fn params(self) -> ServovalveParams {
        match self {
            Self::E024 => ServovalveParams::e024(),
            Self::G761 => ServovalveParams::g761(),
        }
    }
}

/// Static servovalve description. The spool state lives in [`SpoolState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServovalveParams {
    /// -3 dB frequency of the spool response.
    pub bandwidth_hz: f64,
    pub damping_ratio: f64,
    /// Load flow at full opening and rated total valve drop.
    pub rated_flow: f64,
    /// Total drop across both metering lands at rated flow.
    pub rated_pressure_drop: f64,
    /// Linear cross-port leakage, m³/(s·Pa).
    pub leakage_coeff: f64,
    /// Below this land drop the orifice law is linearised so flow stays
    /// differentiable at zero drop.
    pub transition_pressure: f64,
}

impl ServovalveParams {
    pub fn e024() -> Self {
        Self {
            bandwidth_hz: 250.0,
            damping_ratio: 0.8,
            rated_flow: 1.25e-4,
            rated_pressure_drop: 7e6,
            leakage_coeff: 1e-12,
            transition_pressure: 1e4,
        }
    }

    pub fn g761() -> Self {
        Self {
            bandwidth_hz: 450.0,
            ..Self::e024()
        }
    }

    /// Natural frequency (rad/s) that places the -3 dB point of the
    /// second-order spool model at `bandwidth_hz` for the configured damping.
    pub fn natural_frequency(&self) -> f64 {
        let z2 = self.damping_ratio * self.damping_ratio;
        let a = 1.0 - 2.0 * z2;
        let ratio = (a + (a * a + 1.0).sqrt()).sqrt();
        2.0 * PI * self.bandwidth_hz / ratio
    }

    /// Per-land flow coefficient, m³/(s·√Pa). The rated drop splits evenly
    /// across the two metering lands.
    pub fn flow_gain(&self) -> f64 {
        self.rated_flow / (self.rated_pressure_drop / 2.0).sqrt()
    }
}

/// Normalised spool position and its rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpoolState {
    pub position: f64,
    pub velocity: f64,
}

/// Spool acceleration of `x'' = wn^2 (u - x) - 2 ζ wn x'`.
pub fn spool_acceleration(command: f64, valve: &ServovalveParams, state: SpoolState) -> f64 {
    let wn = valve.natural_frequency();
    let u = command.clamp(-1.0, 1.0);
    wn * wn * (u - state.position) - 2.0 * valve.damping_ratio * wn * state.velocity
}

/// Clamps the spool to its travel, stopping it at the mechanical limit.
pub fn clamp_spool(state: SpoolState) -> SpoolState {
    if state.position > 1.0 {
        SpoolState {
            position: 1.0,
            velocity: state.velocity.min(0.0),
        }
    } else if state.position < -1.0 {
        SpoolState {
            position: -1.0,
            velocity: state.velocity.max(0.0),
        }
    } else {
        state
    }
}

/// Advances the spool by one RK4 step of length `dt` under a held command.
pub fn spool_dynamics(command: f64, valve: &ServovalveParams, state: SpoolState, dt: f64) -> SpoolState {
    let f = |s: SpoolState| (s.velocity, spool_acceleration(command, valve, s));
    let at = |s: SpoolState, k: (f64, f64), h: f64| SpoolState {
        position: s.position + h * k.0,
        velocity: s.velocity + h * k.1,
    };
    let k1 = f(state);
    let k2 = f(at(state, k1, dt / 2.0));
    let k3 = f(at(state, k2, dt / 2.0));
    let k4 = f(at(state, k3, dt));
    clamp_spool(SpoolState {
        position: state.position + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        velocity: state.velocity + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    })
}

fn land_flow(opening: f64, drop: f64, valve: &ServovalveParams) -> f64 {
    let k = valve.flow_gain() * opening;
    let pt = valve.transition_pressure;
    if drop.abs() >= pt {
        k * drop.signum() * drop.abs().sqrt()
    } else {
        k * drop / pt.sqrt()
    }
}

/// Flows into chambers A and B (m³/s) for a critically centred valve.
pub fn orifice_flows(
    spool: f64,
    supply: &SupplyUnit,
    p_a: f64,
    p_b: f64,
    valve: &ServovalveParams,
) -> Result<(f64, f64), ModelError> {
    for p in [p_a, p_b] {
        if !p.is_finite() {
            return Err(ModelError::NonFinitePressure(p));
        }
    }
    let x = spool.clamp(-1.0, 1.0);
    let (ps, pt) = (supply.supply_pressure, supply.tank_pressure);
    let (mut q_a, mut q_b) = if x >= 0.0 {
        (land_flow(x, ps - p_a, valve), -land_flow(x, p_b - pt, valve))
    } else {
        (-land_flow(-x, p_a - pt, valve), land_flow(-x, ps - p_b, valve))
    };
    let leak = valve.leakage_coeff * (p_a - p_b);
    q_a -= leak;
    q_b += leak;
    Ok((q_a, q_b))
}

/// Load flow through the valve, `(Q_a - Q_b) / 2`.
pub fn metered_flow(q_a: f64, q_b: f64) -> f64 {
    0.5 * (q_a - q_b)
}

/// Pressure rate of a compressible chamber.
///
/// `volume_rate` is dV/dt of the chamber due to piston motion.
pub fn chamber_pressure_rate(
    _pressure: f64,
    volume: f64,
    net_inflow: f64,
    volume_rate: f64,
    oil: &OilProperties,
) -> Result<f64, ModelError> {
    if !(volume > 0.0) {
        return Err(ModelError::NonPositiveVolume(volume));
    }
    Ok(oil.bulk_modulus / volume * (net_inflow - volume_rate))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderParams {
    pub stroke: f64,
    pub bore_diameter: f64,
    pub rod_diameter: f64,
    /// Dead volume at each end of stroke.
    pub dead_volume: f64,
    /// Hose and manifold volume on each side.
    pub line_volume: f64,
    /// Rod and piston seal friction, added to the transmission car's.
    pub seal_coulomb: f64,
    pub seal_viscous: f64,
}

impl Default for CylinderParams {
    fn default() -> Self {
        Self {
            stroke: 0.080,
            bore_diameter: 0.016,
            rod_diameter: 0.010,
            dead_volume: 2e-6,
            line_volume: 5e-6,
            seal_coulomb: 0.0,
            seal_viscous: 2000.0,
        }
    }
}

impl CylinderParams {
    pub fn cap_area(&self) -> f64 {
        PI * (self.bore_diameter / 2.0).powi(2)
    }

    pub fn rod_side_area(&self) -> f64 {
        PI * ((self.bore_diameter / 2.0).powi(2) - (self.rod_diameter / 2.0).powi(2))
    }

    pub fn rod_area(&self) -> f64 {
        PI * (self.rod_diameter / 2.0).powi(2)
    }

    /// `(V_a, V_b)` with the piston at `x` from mid-stroke.
    pub fn chamber_volumes(&self, x: f64) -> (f64, f64) {
        let v0 = self.dead_volume + self.line_volume;
        let half = self.stroke / 2.0;
        (
            v0 + self.cap_area() * (half + x),
            v0 + self.rod_side_area() * (half - x),
        )
    }
}

/// Net rod force, positive extending.
pub fn cylinder_force(p_a: f64, p_b: f64, cyl: &CylinderParams) -> f64 {
    p_a * cyl.cap_area() - p_b * cyl.rod_side_area()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupplyCheck {
    Ok,
    /// Demand exceeds the pump; inlet flow is scaled by `scale`.
    Saturated {
        scale: f64,
    },
}

impl SupplyCheck {
    pub fn scale(self) -> f64 {
        match self {
            Self::Ok => 1.0,
            Self::Saturated { scale } => scale,
        }
    }
}

pub fn supply_flow_check(total_demand: f64, supply: &SupplyUnit) -> SupplyCheck {
    if total_demand <= supply.max_flow {
        SupplyCheck::Ok
    } else {
        SupplyCheck::Saturated {
            scale: supply.max_flow / total_demand,
        }
    }
}

/// Valve flows with the pump limit applied to whichever port draws from supply.
pub fn supplied_flows(
    spool: f64,
    supply: &SupplyUnit,
    p_a: f64,
    p_b: f64,
    valve: &ServovalveParams,
) -> Result<(f64, f64, SupplyCheck), ModelError> {
    let (mut q_a, mut q_b) = orifice_flows(spool, supply, p_a, p_b, valve)?;
    let demand = if spool >= 0.0 { q_a.max(0.0) } else { q_b.max(0.0) };
    let check = supply_flow_check(demand, supply);
    if let SupplyCheck::Saturated { scale } = check {
        if spool >= 0.0 {
            q_a *= scale;
        } else {
            q_b *= scale;
        }
    }
    Ok((q_a, q_b, check))
}

/// Complete hydraulic actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydraulicActuator {
    pub oil: OilProperties,
    pub supply: SupplyUnit,
    pub valve: ServovalveParams,
    pub cylinder: CylinderParams,
    /// Chamber pressures at t = 0; `None` balances the rod force at zero.
    pub initial_pressures: Option<(f64, f64)>,
}

impl HydraulicActuator {
    pub fn new(preset: ValvePreset, supply_pressure: f64) -> Self {
        Self {
            oil: OilProperties::default(),
            supply: SupplyUnit::new(supply_pressure),
            valve: preset.params(),
            cylinder: CylinderParams::default(),
            initial_pressures: None,
        }
    }

    /// Pressures with `p_a A_a = p_b A_b` and both inside `[0, p_s]`.
    pub fn balanced_pressures(&self) -> (f64, f64) {
        let (aa, ab) = (self.cylinder.cap_area(), self.cylinder.rod_side_area());
        let ps = self.supply.supply_pressure;
        (ps * ab / (aa + ab), ps * aa / (aa + ab))
    }

    pub fn start_pressures(&self) -> (f64, f64) {
        self.initial_pressures.unwrap_or_else(|| self.balanced_pressures())
    }

    /// Largest extending force, supply on A and tank on B.
    pub fn max_force(&self) -> f64 {
        cylinder_force(self.supply.supply_pressure, self.supply.tank_pressure, &self.cylinder)
    }
}

/// Measured spool gain (dB) for a small sinusoidal command at `frequency_hz`.
///
/// Simulates `spool_dynamics` from rest, discards the start-up transient and
/// fits a sine to the last ten periods.
pub fn spool_gain_db(valve: &ServovalveParams, frequency_hz: f64, amplitude: f64) -> f64 {
    let period = 1.0 / frequency_hz;
    let dt = (period / 2000.0).min(1e-6);
    let settle = (10.0 * period).max(10.0 / (valve.damping_ratio * valve.natural_frequency()));
    let total = settle + 10.0 * period;
    let steps = (total / dt).ceil() as usize;
    let w = 2.0 * PI * frequency_hz;
    let mut state = SpoolState::default();
    let mut t_rec = Vec::new();
    let mut y_rec = Vec::new();
    for i in 0..steps {
        let t = i as f64 * dt;
        // The command is sampled at the step midpoint so the discrete input
        // carries no half-step phase lag.
        let u = amplitude * (w * (t + dt / 2.0)).sin();
        state = spool_dynamics(u, valve, state, dt);
        let t_next = t + dt;
        if t_next >= settle {
            t_rec.push(t_next);
            y_rec.push(state.position);
        }
    }
    let fit = fit_sine(&t_rec, &y_rec, frequency_hz).expect("sine fit over a full record");
    20.0 * (fit.amplitude / amplitude).log10()
}

/// Finds the -3 dB frequency of the simulated spool by bisection.
pub fn measured_bandwidth_hz(valve: &ServovalveParams) -> f64 {
    let target = -20.0 * 2f64.sqrt().log10();
    let (mut lo, mut hi) = (valve.bandwidth_hz * 0.25, valve.bandwidth_hz * 4.0);
    for _ in 0..30 {
        let mid = (lo * hi).sqrt();
        if spool_gain_db(valve, mid, 0.1) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn supply() -> SupplyUnit {
        SupplyUnit::new(10e6)
    }

    // Orifice law alone.
    fn tight_valve() -> ServovalveParams {
        ServovalveParams {
            leakage_coeff: 0.0,
            ..ServovalveParams::e024()
        }
    }

    #[test]
    fn flow_gain_matches_catalog_convention() {
        let k = ServovalveParams::e024().flow_gain();
        assert!((k - 1.25e-4 / 3.5e6f64.sqrt()).abs() < 1e-20);
        assert!((k - 6.682e-8).abs() < 1e-11);
    }

    #[test]
    fn closed_valve_passes_nothing() {
        let v = tight_valve();
        assert_eq!(orifice_flows(0.0, &supply(), 3e6, 4e6, &v).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn rated_flow_at_rated_drop() {
        let v = tight_valve();
        let s = supply();
        let (qa, qb) = orifice_flows(1.0, &s, s.supply_pressure - 3.5e6, 3.5e6, &v).unwrap();
        assert!((metered_flow(qa, qb) - 1.25e-4).abs() < 1.25e-4 * 1e-12);
    }

    #[test]
    fn quarter_drop_gives_half_flow() {
        let v = tight_valve();
        let s = supply();
        let (qa, qb) = orifice_flows(1.0, &s, s.supply_pressure - 0.875e6, 0.875e6, &v).unwrap();
        assert!((metered_flow(qa, qb) - 0.625e-4).abs() < 1e-16);
    }

    #[test]
    fn non_finite_pressure_rejected() {
        let v = ServovalveParams::e024();
        assert!(orifice_flows(0.5, &supply(), f64::NAN, 0.0, &v).is_err());
    }

    #[test]
    fn leakage_flows_from_high_to_low() {
        let v = ServovalveParams {
            leakage_coeff: 1e-12,
            ..ServovalveParams::e024()
        };
        let (qa, qb) = orifice_flows(0.0, &supply(), 6e6, 2e6, &v).unwrap();
        assert!((qa + 4e-6).abs() < 1e-18);
        assert!((qb - 4e-6).abs() < 1e-18);
    }

    #[test]
    fn chamber_rate_examples() {
        let oil = OilProperties::default();
        assert_eq!(chamber_pressure_rate(1e6, 2e-5, 0.0, 0.0, &oil).unwrap(), 0.0);
        let r = chamber_pressure_rate(1e6, 2.0e-5, 1e-6, 0.0, &oil).unwrap();
        assert!((r - 6.7e7).abs() < 1e-3);
        assert!(chamber_pressure_rate(1e6, 0.0, 1e-6, 0.0, &oil).is_err());
    }

    #[test]
    fn compressibility_near_three_quarters_percent() {
        let oil = OilProperties::default();
        let frac = oil.volume_reduction(10e6);
        assert!((frac - 0.0075).abs() < 0.0001, "{frac}");
        // Linearised form agrees to second order.
        assert!((frac - 1e7 / 1.34e9).abs() < 3e-5);
    }

    #[test]
    fn cylinder_force_examples() {
        let c = CylinderParams::default();
        assert_eq!(cylinder_force(0.0, 0.0, &c), 0.0);
        assert!((cylinder_force(10e6, 0.0, &c) - 2010.619).abs() < 1e-3);
        assert!((cylinder_force(0.0, 10e6, &c) + 1225.221).abs() < 1e-3);
    }

    #[test]
    fn supply_check_examples() {
        let s = supply();
        assert_eq!(supply_flow_check(1.0e-4, &s), SupplyCheck::Ok);
        assert_eq!(supply_flow_check(0.0, &s), SupplyCheck::Ok);
        match supply_flow_check(2.0e-4, &s) {
            SupplyCheck::Saturated { scale } => assert!((scale - 0.835).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spool_settles_to_command() {
        let v = ServovalveParams::e024();
        let (wn, z) = (v.natural_frequency(), v.damping_ratio);
        let dt = 1e-6;
        let settle = 5.0 / (z * wn);
        let mut s = SpoolState::default();
        let mut t = 0.0;
        while t + dt / 2.0 < settle {
            s = spool_dynamics(0.5, &v, s, dt);
            t += dt;
        }
        // Closed-form underdamped step response at the same instant.
        let wd = wn * (1.0 - z * z).sqrt();
        let exact = 0.5 * (1.0 - (-z * wn * t).exp() * ((wd * t).cos() + z * wn / wd * (wd * t).sin()));
        assert!((s.position - exact).abs() < 1e-9, "{} vs {exact}", s.position);
        while t < 2.0 * settle {
            s = spool_dynamics(0.5, &v, s, dt);
            t += dt;
        }
        assert!((s.position - 0.5).abs() < 0.5e-3, "{}", s.position);
    }

    #[test]
    fn spool_at_rest_stays_at_rest() {
        let v = ServovalveParams::e024();
        let mut s = SpoolState::default();
        for _ in 0..1000 {
            s = spool_dynamics(0.0, &v, s, 1e-5);
        }
        assert_eq!(s, SpoolState::default());
    }

    #[test]
    fn spool_never_leaves_travel() {
        let v = ServovalveParams::e024();
        let mut s = SpoolState::default();
        for _ in 0..20000 {
            s = spool_dynamics(5.0, &v, s, 1e-6);
            assert!(s.position.abs() <= 1.0);
        }
    }

    #[test]
    fn natural_frequency_places_half_power_at_bandwidth() {
        for v in [ServovalveParams::e024(), ServovalveParams::g761()] {
            let wn = v.natural_frequency();
            let w = 2.0 * PI * v.bandwidth_hz;
            let r = w / wn;
            let mag = 1.0 / ((1.0 - r * r).powi(2) + (2.0 * v.damping_ratio * r).powi(2)).sqrt();
            assert!((mag - 0.5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn volumes_plus_rod_volume_are_constant() {
        let c = CylinderParams::default();
        let total = |x: f64| {
            let (va, vb) = c.chamber_volumes(x);
            va + vb + c.rod_area() * (c.stroke / 2.0 - x)
        };
        let t0 = total(0.0);
        for x in [-0.04, -0.013, 0.0, 0.021, 0.04] {
            assert!((total(x) - t0).abs() < 1e-18);
        }
    }

    proptest! {
        #[test]
        fn flow_is_odd_under_mirrored_ports(x in 0.0f64..1.0, pa in 0.0f64..10e6, pb in 0.0f64..10e6) {
            let v = ServovalveParams::e024();
            let s = supply();
            let (qa, qb) = orifice_flows(x, &s, pa, pb, &v).unwrap();
            // Mirror: swap the roles of the two ports and reverse the spool.
            let (qa_m, qb_m) = orifice_flows(-x, &s, pb, pa, &v).unwrap();
            prop_assert!((qa - qb_m).abs() <= 1e-18 + 1e-12 * qa.abs());
            prop_assert!((qb - qa_m).abs() <= 1e-18 + 1e-12 * qb.abs());
        }
    }
}
