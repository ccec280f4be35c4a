//! Polytropic thermodynamics on the extended reals.
//!
//! State variables are the density `rho`, the momentum `mom` and the total
//! entropy density `entropy = rho * s`. With the temperature scaled so that
//! `p = rho * theta` and `e = c_v * theta`, the specific entropy is
//! `s = c_v ln(theta) - ln(rho)` and the pressure reads
//! `p = rho^gamma * exp(S / (c_v rho))`.
//!
//! Kinetic energy and pressure are extended to the vacuum boundary as
//! lower semicontinuous functions with values in `[0, +inf]`; the total
//! energy `E(rho, m, S)` is then convex on all of `R^{d+2}` and strictly
//! convex on its domain. The Bregman divergence of `E` measures the
//! distance to the maximal-entropy equilibrium used by the selection
//! criterion.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Default threshold below which a density is treated as exact vacuum.
pub const DEFAULT_RHO_VAC: f64 = 1e-12;

/// Margin subtracted from the observed minimal specific entropy when the
/// entropy floor is derived from data.
pub const ENTROPY_FLOOR_MARGIN: f64 = 1e-9;

/// A real number or `+inf`, used for l.s.c. extensions of energies.
///
/// Arithmetic saturates at `Infinite`; it never traps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub const ZERO: Extended = Extended::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// Finite value or `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Extended {
        match self {
            Extended::Finite(v) => Extended::Finite(f(v)),
            Extended::Infinite => Extended::Infinite,
        }
    }
}

impl Add for Extended {
    type Output = Extended;
    fn add(self, rhs: Extended) -> Extended {
        match (self, rhs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::Infinite,
        }
    }
}

/// Subtracting a finite amount from `+inf` stays `+inf`.
impl Sub<f64> for Extended {
    type Output = Extended;
    fn sub(self, rhs: f64) -> Extended {
        self.map(|v| v - rhs)
    }
}

/// Scaling by a nonnegative factor. `0 * inf` is taken as `inf` so that a
/// single infinite cell always poisons a total.
impl Mul<f64> for Extended {
    type Output = Extended;
    fn mul(self, rhs: f64) -> Extended {
        self.map(|v| v * rhs)
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Extended) -> Option<Ordering> {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
            (Extended::Finite(_), Extended::Infinite) => Some(Ordering::Less),
            (Extended::Infinite, Extended::Finite(_)) => Some(Ordering::Greater),
            (Extended::Infinite, Extended::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v:.16e}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl std::iter::Sum for Extended {
    fn sum<I: Iterator<Item = Extended>>(iter: I) -> Extended {
        iter.fold(Extended::ZERO, |acc, x| acc + x)
    }
}

/// Material constants and phase-space bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoParams {
    gamma: f64,
    c_v: f64,
    /// Lower bound on the specific entropy (`S >= s_floor * rho`).
    pub s_floor: f64,
    /// Lower bound on the total mass.
    pub m_min: f64,
    /// Total energy budget.
    pub e_ref: f64,
    /// Densities below this value are snapped to vacuum.
    pub rho_vac: f64,
}

impl ThermoParams {
    pub fn new(gamma: f64, s_floor: f64, m_min: f64, e_ref: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::domain(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(m_min > 0.0) {
            return Err(Error::domain(format!("m_min must be positive, got {m_min}")));
        }
        if !(e_ref > 0.0) || !e_ref.is_finite() {
            return Err(Error::domain(format!("e_ref must be positive, got {e_ref}")));
        }
        if s_floor.is_nan() {
            return Err(Error::domain("s_floor is NaN"));
        }
        Ok(ThermoParams {
            gamma,
            c_v: 1.0 / (gamma - 1.0),
            s_floor,
            m_min,
            e_ref,
            rho_vac: DEFAULT_RHO_VAC,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Specific heat at constant volume, always `1 / (gamma - 1)`.
    pub fn c_v(&self) -> f64 {
        self.c_v
    }

    pub fn with_e_ref(mut self, e_ref: f64) -> Result<Self> {
        if !(e_ref > 0.0) || !e_ref.is_finite() {
            return Err(Error::domain(format!("e_ref must be positive, got {e_ref}")));
        }
        self.e_ref = e_ref;
        Ok(self)
    }

    pub fn with_s_floor(mut self, s_floor: f64) -> Self {
        self.s_floor = s_floor;
        self
    }

    pub fn with_rho_vac(mut self, rho_vac: f64) -> Self {
        self.rho_vac = rho_vac;
        self
    }

    /// `true` when `rho` is treated as vacuum.
    pub fn is_vacuum(&self, rho: f64) -> bool {
        rho < self.rho_vac
    }
}

/// Pointwise state `(rho, m, S)`. In one dimension `mom[1]` stays zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConservedState {
    pub rho: f64,
    pub mom: [f64; 2],
    /// Total entropy density `rho * s`.
    pub entropy: f64,
}

impl ConservedState {
    pub const VACUUM: ConservedState = ConservedState {
        rho: 0.0,
        mom: [0.0, 0.0],
        entropy: 0.0,
    };

    pub fn new(rho: f64, mom: [f64; 2], entropy: f64) -> Self {
        ConservedState { rho, mom, entropy }
    }

    /// Build a state from density, velocity and temperature.
    pub fn from_temperature(rho: f64, vel: [f64; 2], theta: f64, p: &ThermoParams) -> Self {
        if rho <= 0.0 {
            return ConservedState::VACUUM;
        }
        ConservedState {
            rho,
            mom: [rho * vel[0], rho * vel[1]],
            entropy: rho * specific_entropy(rho, theta, p),
        }
    }

    /// Build a state from density, velocity and pressure.
    pub fn from_primitive(rho: f64, vel: [f64; 2], pressure: f64, p: &ThermoParams) -> Self {
        if rho <= 0.0 {
            return ConservedState::VACUUM;
        }
        ConservedState::from_temperature(rho, vel, pressure / rho, p)
    }

    pub fn mom_sq(&self) -> f64 {
        self.mom[0] * self.mom[0] + self.mom[1] * self.mom[1]
    }

    /// Componentwise affine combination `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &ConservedState, b: f64) -> ConservedState {
        ConservedState {
            rho: a * self.rho + b * other.rho,
            mom: [
                a * self.mom[0] + b * other.mom[0],
                a * self.mom[1] + b * other.mom[1],
            ],
            entropy: a * self.entropy + b * other.entropy,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.rho, self.mom[0], self.mom[1], self.entropy]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        ConservedState {
            rho: v[0],
            mom: [v[1], v[2]],
            entropy: v[3],
        }
    }

    /// Max-norm distance, used for "states coincide" checks.
    pub fn max_abs_diff(&self, other: &ConservedState) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Constant maximal-entropy state at fixed mass and energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumState {
    pub rho_bar: f64,
    pub theta_bar: f64,
    /// `rho_bar * s(rho_bar, theta_bar)`.
    pub entropy_bar: f64,
    pub total_mass: f64,
    pub volume: f64,
}

impl EquilibriumState {
    pub fn state(&self) -> ConservedState {
        ConservedState::new(self.rho_bar, [0.0, 0.0], self.entropy_bar)
    }
}

/// `|m|^2 / (2 rho)` extended by `0` at `(0, 0)` and `+inf` elsewhere on
/// the vacuum boundary.
pub fn kinetic_energy(st: &ConservedState) -> Extended {
    if st.rho > 0.0 {
        Extended::Finite(0.5 * st.mom_sq() / st.rho)
    } else if st.rho == 0.0 && st.mom_sq() == 0.0 {
        Extended::ZERO
    } else {
        Extended::Infinite
    }
}

/// `rho^gamma exp(S / (c_v rho))`, extended by `0` for `rho = 0, S <= 0`.
pub fn pressure(rho: f64, entropy: f64, p: &ThermoParams) -> Extended {
    if rho > 0.0 {
        Extended::Finite(rho.powf(p.gamma) * (entropy / (p.c_v * rho)).exp())
    } else if rho == 0.0 && entropy <= 0.0 {
        Extended::ZERO
    } else {
        Extended::Infinite
    }
}

/// Total energy `|m|^2/(2 rho) + c_v p`.
pub fn total_energy(st: &ConservedState, p: &ThermoParams) -> Extended {
    kinetic_energy(st) + pressure(st.rho, st.entropy, p) * p.c_v
}

/// Specific entropy `c_v ln(theta) - ln(rho)`.
pub fn specific_entropy(rho: f64, theta: f64, p: &ThermoParams) -> f64 {
    p.c_v * theta.ln() - rho.ln()
}

/// Inverts `S = rho (c_v ln(theta) - ln(rho))` for the temperature.
pub fn temperature_from_entropy(rho: f64, entropy: f64, p: &ThermoParams) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::domain(format!(
            "temperature requires positive density, got {rho}"
        )));
    }
    Ok(((entropy / rho + rho.ln()) / p.c_v).exp())
}

/// Partial derivatives of the total energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGradient {
    pub d_rho: f64,
    pub d_mom: [f64; 2],
    pub d_entropy: f64,
}

/// `(dE/drho, dE/dm, dE/dS)` at an interior state.
///
/// `dE/dS` is the temperature and `dE/drho` the Gibbs function
/// `e + p/rho - theta s` minus `|u|^2 / 2`.
pub fn energy_gradient(st: &ConservedState, p: &ThermoParams) -> Result<EnergyGradient> {
    if !(st.rho > 0.0) {
        return Err(Error::domain(
            "energy gradient undefined on the vacuum boundary",
        ));
    }
    let rho = st.rho;
    let theta = temperature_from_entropy(rho, st.entropy, p)?;
    let s = st.entropy / rho;
    let vel = [st.mom[0] / rho, st.mom[1] / rho];
    let gibbs = p.c_v * theta + theta - theta * s;
    Ok(EnergyGradient {
        d_rho: -0.5 * (vel[0] * vel[0] + vel[1] * vel[1]) + gibbs,
        d_mom: vel,
        d_entropy: theta,
    })
}

/// `E(a) - <grad E(b), a - b> - E(b)`.
///
/// `b` must lie in the interior of the domain of `E`.
pub fn bregman_divergence(
    a: &ConservedState,
    b: &ConservedState,
    p: &ThermoParams,
) -> Result<Extended> {
    let grad = energy_gradient(b, p)?;
    let eb = total_energy(b, p)
        .finite()
        .ok_or_else(|| Error::domain("reference state has infinite energy"))?;
    let linear = grad.d_rho * (a.rho - b.rho)
        + grad.d_mom[0] * (a.mom[0] - b.mom[0])
        + grad.d_mom[1] * (a.mom[1] - b.mom[1])
        + grad.d_entropy * (a.entropy - b.entropy);
    Ok(total_energy(a, p) - (linear + eb))
}

/// Maximal-entropy equilibrium for mass `total_mass` and energy `e_ref`
/// in a container of measure `volume`.
pub fn equilibrium(
    total_mass: f64,
    e_ref: f64,
    volume: f64,
    p: &ThermoParams,
) -> Result<EquilibriumState> {
    if !(volume > 0.0) {
        return Err(Error::domain(format!("volume must be positive, got {volume}")));
    }
    if !(total_mass >= p.m_min) {
        return Err(Error::domain(format!(
            "total mass {total_mass} below m_min {}",
            p.m_min
        )));
    }
    if !(e_ref > 0.0) {
        return Err(Error::domain(format!("energy must be positive, got {e_ref}")));
    }
    let rho_bar = total_mass / volume;
    let theta_bar = e_ref / (p.c_v * total_mass);
    Ok(EquilibriumState {
        rho_bar,
        theta_bar,
        entropy_bar: rho_bar * specific_entropy(rho_bar, theta_bar, p),
        total_mass,
        volume,
    })
}

/// Integrand of the cost functional, `E - theta_bar S`.
pub fn cost_density(st: &ConservedState, eq: &EquilibriumState, p: &ThermoParams) -> Extended {
    total_energy(st, p) - eq.theta_bar * st.entropy
}

/// `G(y) = E0 ln(E0 / (E0 - y)) - y`, the guaranteed cost drop of an
/// entropy bump removing a defect `y`.
pub fn jump_function_g(y: f64, e_ref: f64) -> Result<f64> {
    if !(y >= 0.0) || !(y < e_ref) {
        return Err(Error::domain(format!(
            "G requires 0 <= y < E0, got y={y}, E0={e_ref}"
        )));
    }
    Ok(-e_ref * (-y / e_ref).ln_1p() - y)
}
