use crate::diagnostics;
use crate::error::{Error, Result};
use crate::solver::field::FieldState;
use crate::solver::scheme::{self, SchemeConfig};
use crate::thermo::{self, ThermoParams};

/// Maximum number of successive step halvings after a failed update.
pub const MAX_HALVINGS: u32 = 10;

/// Tolerance on the per-step decrease of total entropy before a step is
/// counted as an entropy violation.
pub const ENTROPY_STEP_TOL: f64 = 1e-10;

/// When to stop and what to keep.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub t_end: f64,
    /// Absolute times at which snapshots are kept; each is also a time the
    /// step size is clipped to land on.
    pub snapshot_times: Vec<f64>,
    /// Keep a snapshot after every step (needed for space-time quadrature).
    pub every_step: bool,
}

impl Schedule {
    pub fn until(t_end: f64) -> Self {
        Schedule {
            t_end,
            snapshot_times: vec![t_end],
            every_step: false,
        }
    }

    pub fn with_snapshots(t_end: f64, times: Vec<f64>) -> Self {
        Schedule {
            t_end,
            snapshot_times: times,
            every_step: false,
        }
    }

    pub fn every_step(t_end: f64) -> Self {
        Schedule {
            t_end,
            snapshot_times: vec![t_end],
            every_step: true,
        }
    }
}

/// Totals recorded after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRecord {
    pub t: f64,
    pub mass: f64,
    /// `+inf` if any cell has infinite energy.
    pub energy: f64,
    pub entropy: f64,
    /// Raw energy defect `E0 - energy` (not clipped).
    pub defect: f64,
    /// `energy - theta_bar * entropy`.
    pub cost: f64,
}

impl SeriesRecord {
    pub fn of(st: &FieldState, params: &ThermoParams, theta_bar: f64) -> Self {
        let t = diagnostics::totals(st, params);
        let energy = t.energy.to_f64();
        SeriesRecord {
            t: st.time,
            mass: t.mass,
            energy,
            entropy: t.entropy,
            defect: params.e_ref - energy,
            cost: energy - theta_bar * t.entropy,
        }
    }
}

/// Entropy jump inserted by concatenation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seam {
    pub time: f64,
    pub epsilon: f64,
    pub defect_before: f64,
    pub entropy_jump: f64,
    pub energy_jump: f64,
    pub cost_jump: f64,
}

/// Snapshots and per-step totals of one evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    pub series: Vec<SeriesRecord>,
    pub seams: Vec<Seam>,
    pub theta_bar: f64,
    pub e_ref: f64,
    pub steps: usize,
    /// Cells snapped to vacuum or to the pressure floor, summed over steps.
    pub flagged_cells: usize,
    /// Steps where the total entropy dropped by more than the tolerance.
    pub entropy_violations: usize,
    /// Set when the evolution aborted; the trajectory is then partial.
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn is_valid(&self) -> bool {
        self.failure.is_none()
    }

    pub fn start_time(&self) -> f64 {
        self.series.first().map_or(0.0, |r| r.t)
    }

    pub fn end_time(&self) -> f64 {
        self.series.last().map_or(0.0, |r| r.t)
    }

    pub fn initial(&self) -> &FieldState {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &FieldState {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    /// Snapshot taken at time `t` (to relative precision `1e-12`).
    pub fn snapshot_at(&self, t: f64) -> Option<&FieldState> {
        self.snapshots.iter().find(|s| same_time(s.time, t))
    }

    /// Trajectory built from a list of snapshots (e.g. read back from disk);
    /// the series is recomputed from each snapshot.
    pub fn from_snapshots(snapshots: Vec<FieldState>, params: &ThermoParams) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::input("no snapshots"))?;
        if snapshots.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::input("snapshot times must be strictly increasing"));
        }
        let eq = thermo::equilibrium(first.total_mass(), params.e_ref, first.mesh.volume(), params)?;
        let series = snapshots
            .iter()
            .map(|s| SeriesRecord::of(s, params, eq.theta_bar))
            .collect();
        Ok(Trajectory {
            steps: snapshots.len() - 1,
            snapshots,
            series,
            seams: Vec::new(),
            theta_bar: eq.theta_bar,
            e_ref: params.e_ref,
            flagged_cells: 0,
            entropy_violations: 0,
            failure: None,
        })
    }
}

pub(crate) fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Evolves `init` to `schedule.t_end`.
///
/// The step size is `stable_dt` clipped so that every snapshot time and
/// `t_end` are hit exactly. A failed update is retried with the step halved
/// up to [`MAX_HALVINGS`] times; beyond that the partial trajectory is
/// returned with `failure` set.
pub fn run(
    init: &FieldState,
    cfg: &SchemeConfig,
    params: &ThermoParams,
    schedule: &Schedule,
) -> Result<Trajectory> {
    run_viewed(init, cfg, params, schedule, 1)
}

/// Evolves `init` on the mesh refined `factor` times (piecewise-constant
/// injection of the initial data) and records snapshots and totals of the
/// fine solution averaged back onto the mesh of `init`.
pub fn run_refined(
    init: &FieldState,
    cfg: &SchemeConfig,
    params: &ThermoParams,
    schedule: &Schedule,
    factor: usize,
) -> Result<Trajectory> {
    if factor == 0 {
        return Err(Error::input("refinement factor must be at least 1"));
    }
    let mut traj = run_viewed(&init.prolong(factor), cfg, params, schedule, factor)?;
    // Averaging the injected data may differ from `init` in the last bit.
    traj.series[0] = SeriesRecord::of(init, params, traj.theta_bar);
    traj.snapshots[0] = init.clone();
    Ok(traj)
}

fn run_viewed(
    init: &FieldState,
    cfg: &SchemeConfig,
    params: &ThermoParams,
    schedule: &Schedule,
    factor: usize,
) -> Result<Trajectory> {
    cfg.validate()?;
    let view = |st: &FieldState| st.restrict(factor);
    let t0 = init.time;
    if !(schedule.t_end >= t0) || !schedule.t_end.is_finite() {
        return Err(Error::input(format!(
            "t_end {} precedes the initial time {t0}",
            schedule.t_end
        )));
    }
    if schedule.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::input("snapshot times must be sorted"));
    }
    if let Some(t) = schedule
        .snapshot_times
        .iter()
        .find(|&&t| t < t0 || t > schedule.t_end)
    {
        return Err(Error::input(format!(
            "snapshot time {t} outside [{t0}, {}]",
            schedule.t_end
        )));
    }
    let eq = thermo::equilibrium(init.total_mass(), params.e_ref, init.mesh.volume(), params)?;

    let mut clips: Vec<f64> = schedule
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > t0)
        .collect();
    clips.push(schedule.t_end);
    clips.dedup_by(|a, b| same_time(*a, *b));

    let init_view = view(init)?;
    let mut traj = Trajectory {
        series: vec![SeriesRecord::of(&init_view, params, eq.theta_bar)],
        snapshots: vec![init_view],
        seams: Vec::new(),
        theta_bar: eq.theta_bar,
        e_ref: params.e_ref,
        steps: 0,
        flagged_cells: 0,
        entropy_violations: 0,
        failure: None,
    };

    let mut state = init.clone();
    let mut clip_idx = 0;
    while clip_idx < clips.len() {
        let target = clips[clip_idx];
        if !(state.time < target) {
            clip_idx += 1;
            continue;
        }
        let remaining = target - state.time;
        let dt_cfl = scheme::stable_dt(&state, cfg, params);
        let (mut dt, mut lands) = if dt_cfl >= remaining {
            (remaining, true)
        } else {
            (dt_cfl, false)
        };

        let mut attempt = 0;
        let out = loop {
            match scheme::advance(&state, cfg, params, dt) {
                Ok(out) => break Ok(out),
                Err(e @ Error::StepFailure { .. }) => {
                    if attempt == MAX_HALVINGS {
                        break Err(e);
                    }
                    attempt += 1;
                    dt *= 0.5;
                    lands = false;
                }
                Err(e) => return Err(e),
            }
        };
        let mut out = match out {
            Ok(out) => out,
            Err(e) => {
                traj.failure = Some(e.to_string());
                break;
            }
        };
        if lands {
            out.state.time = target;
        }
        traj.steps += 1;
        traj.flagged_cells += out.flagged;

        let seen = view(&out.state)?;
        let record = SeriesRecord::of(&seen, params, eq.theta_bar);
        let prev = traj.series.last().expect("initial record").entropy;
        if record.entropy < prev - ENTROPY_STEP_TOL {
            traj.entropy_violations += 1;
        }
        traj.series.push(record);

        let is_snapshot = lands
            && schedule
                .snapshot_times
                .iter()
                .any(|&t| same_time(t, out.state.time));
        if schedule.every_step || is_snapshot {
            traj.snapshots.push(seen);
        }
        state = out.state;
        if lands {
            clip_idx += 1;
        }
    }
    Ok(traj)
}
