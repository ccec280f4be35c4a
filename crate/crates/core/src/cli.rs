//! The four commands of the `eulerlab` binary. Each is a pure function of
//! the config and its input files and writes its artifacts under the
//! output directory.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::config::RunConfig;
use crate::diagnostics::{residual_report, TestFunction};
use crate::error::{Error, Result};
use crate::io;
use crate::selection::{select_admissible, CandidateSet, SelectionResult};
use crate::solver::{run_refined, Schedule, Trajectory};
use crate::statistical::{check_semigroup, pushforward, sample_initial, DiscreteMeasure, Pipeline};
use crate::thermo::ThermoParams;

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Set when the numerics failed part way; the files written so far are
    /// still listed.
    pub failure: Option<String>,
}

impl Outcome {
    /// Turns a recorded numeric failure into an error.
    pub fn into_result(self) -> Result<Outcome> {
        match &self.failure {
            Some(msg) => Err(Error::Domain(msg.clone())),
            None => Ok(self),
        }
    }
}

fn write_trajectory(dir: &Path, traj: &Trajectory, params: &ThermoParams, cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    for (i, st) in traj.snapshots.iter().enumerate() {
        let path = dir.join(io::snapshot_file_name(i));
        io::write_snapshot(&path, st, params, &cfg.provenance)?;
        out.files.push(path);
    }
    let path = dir.join("series.csv");
    io::write_series(&path, &traj.series, &cfg.provenance)?;
    out.files.push(path);
    Ok(())
}

/// Runs the configured scheme from the initial profile and writes the
/// snapshots and the per-step totals.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let init = cfg.initial_field()?;
    let params = cfg.params_for(&[&init])?;
    init.validate(&params)?;
    let traj = run_refined(&init, &cfg.scheme.scheme, &params, &cfg.schedule, cfg.scheme.refine)?;
    info!("simulate: {} steps to t={}", traj.steps, traj.end_time());
    let mut out = Outcome::default();
    write_trajectory(out_dir, &traj, &params, cfg, &mut out)?;
    out.failure = traj.failure.clone();
    Ok(out)
}

/// Runs every candidate over the selection horizon and writes the
/// selection table plus each candidate's series.
pub fn cmd_select(cfg: &RunConfig, out_dir: &Path) -> Result<(Outcome, SelectionResult)> {
    let init = cfg.initial_field()?;
    let params = cfg.params_for(&[&init])?;
    init.validate(&params)?;
    let horizon = cfg.selection.horizon;
    let set = CandidateSet::compute(&init, &cfg.candidates, &params, &Schedule::until(horizon))?;
    let res = select_admissible(&set, horizon, cfg.selection.lambda)?;
    info!("select: candidate {} ({})", res.chosen, res.descriptors[res.chosen]);
    if !res.certified {
        warn!("selection not certified by the tail bounds");
    }
    let mut out = Outcome::default();
    let path = out_dir.join("selection.csv");
    io::write_selection(&path, &res, &cfg.provenance)?;
    out.files.push(path);
    for (i, (_, traj)) in set.candidates.iter().enumerate() {
        let path = out_dir.join(format!("series_candidate_{i}.csv"));
        io::write_series(&path, &traj.series, &cfg.provenance)?;
        out.files.push(path);
    }
    Ok((out, res))
}

/// Draws the ensemble, pushes it forward to each requested time, and
/// writes the measure manifests, the expectation series and, when asked,
/// the semigroup report.
pub fn cmd_ensemble(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let ens = cfg
        .ensemble
        .as_ref()
        .ok_or_else(|| Error::config("ensemble", "section missing"))?;
    let budget = cfg.ensemble_budget().expect("ensemble present");
    let loose = cfg.base_params(budget)?;
    let drawn = sample_initial(&ens.sampler, &cfg.mesh, &loose, ens.n, ens.seed)?;
    let states: Vec<_> = drawn.atoms().iter().map(|a| &a.state).collect();
    let mut params = cfg.params_for(&states)?;
    params.e_ref = budget;
    let mut sigma = DiscreteMeasure::new(
        drawn.atoms().iter().map(|a| (a.weight, a.state.clone())).collect(),
        &params,
    )?;
    sigma.provenance = drawn.provenance;

    let pipeline = Pipeline::new(cfg.candidates.clone(), params, ens.sync_interval)
        .and_then(|p| p.with_selection(cfg.selection.horizon.max(ens.sync_interval), cfg.selection.lambda))
        .map_err(|e| Error::config("ensemble", e.to_string()))?
        .with_bump(ens.bump);
    for (i, &t) in ens.times.iter().enumerate() {
        pipeline
            .lattice_steps(t)
            .map_err(|e| Error::config(format!("ensemble.times[{i}]"), e.to_string()))?;
    }

    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut cur = sigma.clone();
    let mut now = 0.0;
    for (k, &t) in ens.times.iter().enumerate() {
        let dt = (pipeline.lattice_steps(t)? - pipeline.lattice_steps(now)?) as f64 * ens.sync_interval;
        cur = pushforward(&cur, dt, &pipeline)?;
        now = t;
        let path = io::write_measure(out_dir, &format!("measure_{k:03}"), &cur, t, &params, &cfg.provenance)?;
        out.files.push(path);
        for (j, obs) in ens.observables.iter().enumerate() {
            rows.push((t, j, crate::statistical::expectation(obs, &cur, &params)));
        }
        if !cur.is_complete() && out.failure.is_none() {
            out.failure = Some(format!("pipeline failed on some atoms by t={t}"));
        }
    }
    let path = out_dir.join("expectations.csv");
    io::write_expectations(&path, &rows, &ens.observables, &cfg.provenance)?;
    out.files.push(path);

    if let Some([t, s]) = ens.semigroup {
        let r = check_semigroup(&sigma, t, s, &pipeline)?;
        let path = out_dir.join("semigroup.csv");
        let text = format!(
            "{}\nt,s,max_discrepancy,weights_equal,bitwise_equal\n{},{},{},{},{}\n",
            cfg.provenance.line(),
            io::fmt_f64(r.t),
            io::fmt_f64(r.s),
            io::fmt_f64(r.max_discrepancy),
            r.weights_equal,
            r.bitwise_equal
        );
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        out.files.push(path);
    }
    Ok(out)
}

/// Snapshot files of a directory, in name order.
pub fn snapshot_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snapshot_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::input(format!("no snapshot files in {}", dir.display())));
    }
    Ok(files)
}

/// Reads a trajectory from snapshot files and writes the weak residuals of
/// the built-in test functions and the recomputed totals.
pub fn cmd_diagnose(cfg: &RunConfig, input: &Path, out_dir: &Path) -> Result<Outcome> {
    let snapshots = snapshot_files(input)?
        .iter()
        .map(|p| io::read_snapshot(p))
        .collect::<Result<Vec<_>>>()?;
    let params = cfg.params_for(&[&snapshots[0]])?;
    let traj = Trajectory::from_snapshots(snapshots, &params)?;
    let duration = traj.end_time() - traj.start_time();
    let mut out = Outcome::default();
    if duration > 0.0 {
        let reports = TestFunction::library(duration)?
            .iter()
            .map(|phi| residual_report(&traj, phi, &params))
            .collect::<Result<Vec<_>>>()?;
        let path = out_dir.join("residuals.csv");
        io::write_residuals(&path, &reports, &cfg.provenance)?;
        out.files.push(path);
    } else {
        warn!("diagnose: a single snapshot carries no time integral, residuals skipped");
    }
    let path = out_dir.join("diagnostics_series.csv");
    io::write_series(&path, &traj.series, &cfg.provenance)?;
    out.files.push(path);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"
[thermo]
gamma = 1.4

[mesh]
cells = [32]
extent = [1.0]

[initial]
profile = "sod"

[[candidates]]
flux = "rusanov"

[[candidates]]
flux = "hll"

[selection]
horizon = 0.5

[schedule]
t_end = 0.1
every_step = true

[ensemble]
n = 3
seed = 4
sync_interval = 0.05
times = [0.0, 0.05, 0.1]
semigroup = [0.05, 0.05]
bump = true

[ensemble.sampler]
kind = "smooth-perturbation"
rho = 1.0
pressure = 1.0
amplitude = 0.1
modes = 2
"#;

    #[test]
    fn commands_are_deterministic() {
        let cfg = RunConfig::parse(CFG).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let sa = cmd_simulate(&cfg, a.path()).unwrap();
        let sb = cmd_simulate(&cfg, b.path()).unwrap();
        assert_eq!(sa.files.len(), sb.files.len());
        for (x, y) in sa.files.iter().zip(&sb.files) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        let d = cmd_diagnose(&cfg, a.path(), a.path()).unwrap();
        assert!(d.files.iter().any(|f| f.ends_with("residuals.csv")));
        let (_, sel) = cmd_select(&cfg, a.path()).unwrap();
        assert_eq!(sel.costs.len(), 2);
        let e = cmd_ensemble(&cfg, a.path()).unwrap();
        assert!(e.failure.is_none());
        let report = fs::read_to_string(a.path().join("semigroup.csv")).unwrap();
        assert!(report.lines().last().unwrap().ends_with("true,true"));
    }
}
