//! Quantitative checks of the dissipative-solution properties on discrete
//! output: conserved totals, the energy defect, weak-form residuals,
//! one-sided entropy limits and Jensen gaps of atomic Young measures.

pub mod residual;

pub use residual::{
    residual_report, weak_residual_continuity, weak_residual_entropy, weak_residual_momentum,
    Profile, ResidualReport, TestFunction, TEST_LIBRARY_VERSION,
};

use crate::error::{Error, Result};
use crate::solver::{FieldState, SeriesRecord};
use crate::thermo::{self, ConservedState, Extended, ThermoParams};

/// Relative slack, in units of `E0`, before a negative defect counts as an
/// admissibility violation.
pub const DEFECT_VIOLATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Totals {
    pub mass: f64,
    pub energy: Extended,
    pub entropy: f64,
}

/// Midpoint quadrature of `rho`, `E` and `S` over the cells.
///
/// Summation runs in cell order so the result is reproducible bit for bit.
pub fn totals(st: &FieldState, params: &ThermoParams) -> Totals {
    let vol = st.mesh.cell_volume();
    let mut mass = 0.0;
    let mut entropy = 0.0;
    let mut energy = Extended::ZERO;
    for c in &st.cells {
        mass += c.rho;
        entropy += c.entropy;
        energy = energy + thermo::total_energy(c, params);
    }
    Totals {
        mass: mass * vol,
        energy: energy * vol,
        entropy: entropy * vol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDefect {
    /// `max(E0 - integral of E, 0)`.
    pub value: f64,
    /// Unclipped `E0 - integral of E` (`-inf` for infinite energy).
    pub raw: f64,
    /// The raw defect fell below `-1e-10 E0`.
    pub violation: bool,
}

/// `d_E = E0 - integral of E`, clipped at zero.
pub fn energy_defect(st: &FieldState, e_ref: f64, params: &ThermoParams) -> EnergyDefect {
    let raw = e_ref - totals(st, params).energy.to_f64();
    EnergyDefect {
        value: raw.max(0.0),
        raw,
        violation: raw < -DEFECT_VIOLATION_TOL * e_ref,
    }
}

/// Upper bound on the trace of the concentration defect: whatever part of
/// the energy defect is not explained by oscillations (the Jensen gap),
/// divided by the configurable constant in front of the trace.
pub fn defect_trace_bound(defect: f64, jensen: f64, constant: f64) -> Result<f64> {
    if !(constant > 0.0) {
        return Err(Error::input(format!(
            "defect trace constant must be positive, got {constant}"
        )));
    }
    Ok((defect - jensen).max(0.0) / constant)
}

/// `(S(tau-), S(tau+))` of the total entropy from a step series.
///
/// At a recorded time the left limit is the first record at that time and
/// the right limit the last one, so an entropy jump inserted by
/// concatenation shows up as two records with the same time. At `tau = t0`
/// this yields `S(t0-) = S_0`. Between records both limits are the linear
/// interpolant.
pub fn one_sided_entropy(series: &[SeriesRecord], tau: f64) -> Result<(f64, f64)> {
    let (first, last) = match (series.first(), series.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::input("empty series")),
    };
    let close = |t: f64| (t - tau).abs() <= 1e-12 * t.abs().max(tau.abs()).max(1.0);
    if (tau < first.t && !close(first.t)) || (tau > last.t && !close(last.t)) {
        return Err(Error::input(format!(
            "tau={tau} outside series range [{}, {}]",
            first.t, last.t
        )));
    }
    let hits: Vec<&SeriesRecord> = series.iter().filter(|r| close(r.t)).collect();
    if let (Some(l), Some(r)) = (hits.first(), hits.last()) {
        return Ok((l.entropy, r.entropy));
    }
    let k = series
        .windows(2)
        .position(|w| w[0].t < tau && tau < w[1].t)
        .ok_or_else(|| Error::input(format!("tau={tau} not bracketed by the series")))?;
    let (a, b) = (&series[k], &series[k + 1]);
    let s = a.entropy + (b.entropy - a.entropy) * (tau - a.t) / (b.t - a.t);
    Ok((s, s))
}

/// Finite atomic probability measure on the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAtPoint {
    atoms: Vec<(f64, ConservedState)>,
}

impl EnsembleAtPoint {
    pub fn new(atoms: Vec<(f64, ConservedState)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::input("ensemble needs at least one atom"));
        }
        if atoms.iter().any(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::input("ensemble weights must be nonnegative"));
        }
        let total: f64 = atoms.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("ensemble weights sum to {total}, not 1")));
        }
        Ok(EnsembleAtPoint { atoms })
    }

    /// Equal weights on every state.
    pub fn uniform(states: &[ConservedState]) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        Self::new(states.iter().map(|s| (w, *s)).collect())
    }

    pub fn atoms(&self) -> &[(f64, ConservedState)] {
        &self.atoms
    }

    pub fn barycenter(&self) -> ConservedState {
        self.atoms
            .iter()
            .fold(ConservedState::VACUUM, |acc, (w, s)| acc.combine(1.0, s, *w))
    }
}

/// `sum_i w_i E(U_i) - E(sum_i w_i U_i)`, nonnegative by convexity.
pub fn jensen_gap(ens: &EnsembleAtPoint, params: &ThermoParams) -> Extended {
    let mean_energy: Extended = ens
        .atoms
        .iter()
        .map(|(w, s)| thermo::total_energy(s, params) * *w)
        .sum();
    match thermo::total_energy(&ens.barycenter(), params).finite() {
        Some(e) => mean_energy - e,
        // E(barycenter) <= mean energy, so both are infinite here.
        None => Extended::Infinite,
    }
}

/// Integrated Jensen gap of a fine field viewed, block by block, as an
/// atomic Young measure over the cells of the mesh coarsened `factor`
/// times: `integral E(fine) - integral E(restricted)`.
pub fn field_jensen_gap(fine: &FieldState, factor: usize, params: &ThermoParams) -> Result<Extended> {
    let coarse = fine.restrict(factor)?;
    let fine_e = totals(fine, params).energy;
    match totals(&coarse, params).energy.finite() {
        Some(e) => Ok(fine_e - e),
        None => Ok(Extended::Infinite),
    }
}
