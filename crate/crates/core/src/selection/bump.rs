use crate::diagnostics;
use crate::error::{Error, Result};
use crate::solver::{FieldState, Seam, Trajectory};
use crate::thermo::{self, ThermoParams};

/// Field after an entropy bump, with the bookkeeping of the jump.
#[derive(Debug, Clone)]
pub struct BumpOutcome {
    pub state: FieldState,
    pub epsilon: f64,
    /// Energy defect removed by the bump.
    pub defect_before: f64,
    /// `int S` after minus before.
    pub entropy_jump: f64,
    /// `int E` after minus before.
    pub energy_jump: f64,
    /// Change of `int (E - theta_bar S)`, evaluated from its definition.
    pub cost_jump: f64,
}

/// Raises the temperature by the factor `1 + eps` on every cell with
/// positive density, with `eps = d_E / int E_int`, so that the total energy
/// returns to the budget `e_ref`. Density and momentum are untouched; the
/// entropy grows by `c_v rho ln(1 + eps)`.
pub fn entropy_bump(st: &FieldState, e_ref: f64, params: &ThermoParams) -> Result<BumpOutcome> {
    let before = diagnostics::totals(st, params);
    let defect = e_ref - before.energy.to_f64();
    if !(defect > 0.0) {
        return Err(Error::NoDefect { defect });
    }
    let vol = st.mesh.cell_volume();
    let c_v = params.c_v();
    let mut mass = 0.0;
    let mut internal = 0.0;
    for c in st.cells.iter().filter(|c| c.rho > 0.0) {
        mass += c.rho;
        internal += c_v * thermo::pressure(c.rho, c.entropy, params).to_f64();
    }
    mass *= vol;
    internal *= vol;
    if mass == 0.0 {
        return Err(Error::domain("cannot bump a vacuum field"));
    }
    if mass < params.m_min {
        return Err(Error::domain(format!(
            "non-vacuum mass {mass} below m_min {}",
            params.m_min
        )));
    }
    if !(internal > 0.0) {
        return Err(Error::domain("internal energy vanishes, temperature cannot be raised"));
    }
    let epsilon = defect / internal;
    let log_factor = epsilon.ln_1p();
    let mut bumped = st.clone();
    for c in bumped.cells.iter_mut().filter(|c| c.rho > 0.0) {
        c.entropy += c_v * c.rho * log_factor;
    }
    let after = diagnostics::totals(&bumped, params);
    let eq = thermo::equilibrium(before.mass, e_ref, st.mesh.volume(), params)?;
    let entropy_jump = after.entropy - before.entropy;
    let energy_jump = after.energy.to_f64() - before.energy.to_f64();
    Ok(BumpOutcome {
        state: bumped,
        epsilon,
        defect_before: defect,
        entropy_jump,
        energy_jump,
        cost_jump: energy_jump - eq.theta_bar * entropy_jump,
    })
}

/// Joins `traj` up to time `tau` with `continuation`, which must start from
/// the entropy bump of the state of `traj` at `tau` (or from that state
/// itself when it carries no defect). The continuation may be expressed in
/// its own clock starting at zero; it is shifted to start at `tau`.
///
/// The merged series holds two records at `tau` when a bump happened, the
/// first before and the second after the jump.
pub fn concatenate(
    traj: &Trajectory,
    tau: f64,
    continuation: &Trajectory,
    params: &ThermoParams,
) -> Result<Trajectory> {
    let seam_state = traj
        .snapshot_at(tau)
        .ok_or_else(|| Error::input(format!("no snapshot at seam time {tau}")))?;
    let expected = match entropy_bump(seam_state, traj.e_ref, params) {
        Ok(b) => Some(b),
        Err(Error::NoDefect { .. }) => None,
        Err(e) => return Err(e),
    };
    let target = expected.as_ref().map_or(seam_state, |b| &b.state);
    if !continuation.initial().bitwise_eq(target) {
        return Err(Error::input(format!(
            "continuation does not start from the seam state at {tau}"
        )));
    }
    let shift = tau - continuation.start_time();
    let before = |t: f64| t < tau && !crate::solver::run::same_time(t, tau);
    let mut snapshots: Vec<FieldState> = traj
        .snapshots
        .iter()
        .filter(|s| before(s.time))
        .cloned()
        .collect();
    snapshots.extend(
        continuation
            .snapshots
            .iter()
            .map(|s| s.clone().with_time(s.time + shift)),
    );
    let mut series: Vec<_> = traj
        .series
        .iter()
        .filter(|r| before(r.t) || (expected.is_some() && r.t <= tau))
        .copied()
        .collect();
    series.extend(continuation.series.iter().map(|r| {
        let mut r = *r;
        r.t += shift;
        r
    }));
    let mut seams: Vec<Seam> = traj.seams.iter().filter(|s| s.time <= tau).copied().collect();
    if let Some(b) = &expected {
        seams.push(Seam {
            time: tau,
            epsilon: b.epsilon,
            defect_before: b.defect_before,
            entropy_jump: b.entropy_jump,
            energy_jump: b.energy_jump,
            cost_jump: b.cost_jump,
        });
    }
    seams.extend(continuation.seams.iter().map(|s| Seam {
        time: s.time + shift,
        ..*s
    }));
    Ok(Trajectory {
        snapshots,
        series,
        seams,
        theta_bar: traj.theta_bar,
        e_ref: traj.e_ref,
        steps: traj.steps + continuation.steps,
        flagged_cells: traj.flagged_cells + continuation.flagged_cells,
        entropy_violations: traj.entropy_violations + continuation.entropy_violations,
        failure: traj.failure.clone().or_else(|| continuation.failure.clone()),
    })
}
