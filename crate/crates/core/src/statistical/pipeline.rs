use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;

use rayon::prelude::*;

use crate::diagnostics::energy_defect;
use crate::error::{Error, Result};
use crate::selection::{entropy_bump, select_admissible, CandidateSet, CandidateSpec, DEFAULT_HORIZON};
use crate::solver::{FieldState, Schedule};
use crate::statistical::measure::{Atom, DiscreteMeasure};
use crate::statistical::observable::{expectation, Observable};
use crate::thermo::ThermoParams;

/// Relative size (in units of `E0`) below which a defect is treated as
/// round-off and not bumped.
pub const BUMP_THRESHOLD: f64 = 1e-12;

/// The selected solution map, realized on a lattice of restart times.
///
/// Every `interval` the current state is (optionally) bumped to zero
/// energy defect, every candidate is run from it over the selection
/// horizon, and the minimizer of the weighted cost is advanced by one
/// interval. Each interval runs in its own clock starting at zero, so the
/// map depends on the state alone and `S[t + s] = S[t] S[s]` holds exactly
/// for lattice times. The state reported at a lattice time is the one
/// before the bump, i.e. with the left limit of the entropy.
#[derive(Debug)]
pub struct Pipeline {
    pub candidates: Vec<CandidateSpec>,
    pub params: ThermoParams,
    pub interval: f64,
    pub horizon: f64,
    pub lambda: f64,
    pub bump: bool,
    cache: Mutex<HashMap<u64, Vec<(FieldState, IntervalOutcome)>>>,
}

#[derive(Debug, Clone)]
pub struct IntervalOutcome {
    /// State after one interval, with time zero.
    pub state: FieldState,
    pub chosen: usize,
    pub bumped: bool,
    pub failure: Option<String>,
}

impl Pipeline {
    pub fn new(candidates: Vec<CandidateSpec>, params: ThermoParams, interval: f64) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::input("pipeline needs at least one candidate"));
        }
        if !(interval > 0.0) || !interval.is_finite() {
            return Err(Error::input(format!("sync interval must be positive, got {interval}")));
        }
        for c in &candidates {
            c.scheme.validate()?;
            if c.refine == 0 {
                return Err(Error::input("refinement factor must be at least 1"));
            }
        }
        Ok(Pipeline {
            candidates,
            params,
            interval,
            horizon: DEFAULT_HORIZON,
            lambda: 1.0,
            bump: false,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_selection(mut self, horizon: f64, lambda: f64) -> Result<Self> {
        if !(horizon >= self.interval) || !horizon.is_finite() {
            return Err(Error::input(format!(
                "horizon {horizon} must be finite and at least the sync interval {}",
                self.interval
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::input(format!("lambda must be positive, got {lambda}")));
        }
        self.horizon = horizon;
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_bump(mut self, bump: bool) -> Self {
        self.bump = bump;
        self
    }

    /// Number of intervals in `t`; fails unless `t` is a lattice time.
    pub fn lattice_steps(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::input(format!("time must be nonnegative, got {t}")));
        }
        let k = (t / self.interval).round();
        if (k * self.interval - t).abs() > 1e-9 * self.interval {
            return Err(Error::input(format!(
                "time {t} is not a multiple of the sync interval {}",
                self.interval
            )));
        }
        Ok(k as usize)
    }

    /// Advances `state` by one interval.
    pub fn advance_interval(&self, state: &FieldState) -> Result<IntervalOutcome> {
        let start = state.clone().with_time(0.0);
        let key = start.content_hash();
        if let Some(hit) = self.lookup(key, &start) {
            return Ok(hit);
        }
        let out = self.compute_interval(&start)?;
        self.cache
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_default()
            .push((start, out.clone()));
        Ok(out)
    }

    fn lookup(&self, key: u64, start: &FieldState) -> Option<IntervalOutcome> {
        let cache = self.cache.lock().expect("cache lock");
        cache
            .get(&key)?
            .iter()
            .find(|(s, _)| s.bitwise_eq(start))
            .map(|(_, o)| o.clone())
    }

    fn compute_interval(&self, start: &FieldState) -> Result<IntervalOutcome> {
        let p = &self.params;
        let defect = energy_defect(start, p.e_ref, p).raw;
        let bumped = self.bump && defect > BUMP_THRESHOLD * p.e_ref;
        let from = if bumped {
            entropy_bump(start, p.e_ref, p)?.state
        } else {
            start.clone()
        };
        let h = self.interval;
        let (chosen, traj) = if self.candidates.len() == 1 {
            (0, self.candidates[0].run(&from, p, &Schedule::until(h))?)
        } else {
            let sched = Schedule::with_snapshots(self.horizon, vec![h]);
            let mut set = CandidateSet::compute(&from, &self.candidates, p, &sched)?;
            let sel = select_admissible(&set, self.horizon, self.lambda)?;
            (sel.chosen, set.candidates.swap_remove(sel.chosen).1)
        };
        let failure = traj.failure.clone();
        let state = match traj.snapshot_at(h) {
            Some(s) => s.clone(),
            None => traj.last().clone(),
        };
        Ok(IntervalOutcome {
            state: state.with_time(0.0),
            chosen,
            bumped,
            failure,
        })
    }

    /// `S[t, state]` for a lattice time `t`. Returns the state reached and
    /// the failure message of the first failed interval, if any.
    pub fn map(&self, state: &FieldState, t: f64) -> Result<(FieldState, Option<String>)> {
        let steps = self.lattice_steps(t)?;
        let t0 = state.time;
        let mut cur = state.clone();
        for k in 0..steps {
            let out = self.advance_interval(&cur)?;
            cur = out.state.with_time(t0 + (k + 1) as f64 * self.interval);
            if out.failure.is_some() {
                return Ok((cur, out.failure));
            }
        }
        Ok((cur, None))
    }

    /// Identifies the pipeline configuration.
    pub fn config_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for c in &self.candidates {
            c.descriptor().hash(&mut h);
        }
        for v in [
            self.interval,
            self.horizon,
            self.lambda,
            self.params.gamma(),
            self.params.e_ref,
            self.params.s_floor,
            self.params.m_min,
            self.params.rho_vac,
        ] {
            v.to_bits().hash(&mut h);
        }
        self.bump.hash(&mut h);
        h.finish()
    }
}

/// `M_t sigma`: every atom mapped by the selected solution map, weights
/// unchanged. Atoms are processed concurrently; the result keeps their
/// order. Failed atoms are kept with their last state and flagged.
pub fn pushforward(sigma: &DiscreteMeasure, t: f64, pipeline: &Pipeline) -> Result<DiscreteMeasure> {
    pipeline.lattice_steps(t)?;
    let mapped: Vec<Result<Atom>> = sigma
        .atoms()
        .par_iter()
        .map(|a| {
            let (state, failure) = pipeline.map(&a.state, t)?;
            Ok(Atom {
                weight: a.weight,
                state,
                failure: a.failure.clone().or(failure),
            })
        })
        .collect();
    let atoms = mapped.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DiscreteMeasure::from_parts(atoms, sigma.provenance))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupReport {
    pub t: f64,
    pub s: f64,
    /// Largest componentwise difference between `M_{t+s} sigma` and
    /// `M_t M_s sigma`, over all atoms.
    pub max_discrepancy: f64,
    pub weights_equal: bool,
    pub bitwise_equal: bool,
}

/// Compares `M_{t+s} sigma` with `M_t (M_s sigma)` atom by atom.
pub fn check_semigroup(
    sigma: &DiscreteMeasure,
    t: f64,
    s: f64,
    pipeline: &Pipeline,
) -> Result<SemigroupReport> {
    pipeline.lattice_steps(t)?;
    pipeline.lattice_steps(s)?;
    let direct = pushforward(sigma, t + s, pipeline)?;
    let composed = pushforward(&pushforward(sigma, s, pipeline)?, t, pipeline)?;
    Ok(SemigroupReport {
        t,
        s,
        max_discrepancy: direct.max_state_diff(&composed),
        weights_equal: direct.weights() == composed.weights(),
        bitwise_equal: direct.bitwise_eq(&composed),
    })
}

/// `(t, E[d_E])` under `M_t sigma` for every time in `times`.
pub fn defect_expectation_series(
    sigma: &DiscreteMeasure,
    times: &[f64],
    pipeline: &Pipeline,
) -> Result<Vec<(f64, f64)>> {
    observable_series(sigma, times, &[Observable::Defect], pipeline).map(|rows| {
        rows.into_iter().map(|(t, _, v)| (t, v)).collect()
    })
}

/// `(t, observable index, E[G])` for every time and observable. Times must
/// be sorted lattice times; the measure is advanced incrementally.
pub fn observable_series(
    sigma: &DiscreteMeasure,
    times: &[f64],
    observables: &[Observable],
    pipeline: &Pipeline,
) -> Result<Vec<(f64, usize, f64)>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::input("times must be sorted"));
    }
    let mut rows = Vec::with_capacity(times.len() * observables.len());
    let mut cur = sigma.clone();
    let mut now = 0.0;
    for &t in times {
        let steps = pipeline.lattice_steps(t)? - pipeline.lattice_steps(now)?;
        cur = pushforward(&cur, steps as f64 * pipeline.interval, pipeline)?;
        now = t;
        for (i, obs) in observables.iter().enumerate() {
            rows.push((t, i, expectation(obs, &cur, &pipeline.params)));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{run, Mesh, SchemeConfig};
    use crate::statistical::sampler::{sample_initial, SamplerSpec};

    fn params() -> ThermoParams {
        ThermoParams::new(1.4, f64::NEG_INFINITY, 1e-6, 3.0).unwrap()
    }

    fn ensemble(n: usize) -> DiscreteMeasure {
        let mesh = Mesh::new_1d(16, 1.0).unwrap();
        sample_initial(&SamplerSpec::smooth(1.0, 1.0, 0.1, 2), &mesh, &params(), n, 3).unwrap()
    }

    fn single() -> Pipeline {
        Pipeline::new(vec![CandidateSpec::new(SchemeConfig::rusanov())], params(), 0.05).unwrap()
    }

    #[test]
    fn time_zero_is_identity() {
        let sigma = ensemble(3);
        let out = pushforward(&sigma, 0.0, &single()).unwrap();
        assert!(out.bitwise_eq(&sigma));
    }

    #[test]
    fn dirac_matches_direct_run() {
        let sigma = ensemble(1);
        let pipe = single();
        let out = pushforward(&sigma, 0.05, &pipe).unwrap();
        let direct = run(&sigma.atoms()[0].state, &SchemeConfig::rusanov(), &params(), &Schedule::until(0.05)).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out.atoms()[0].state.bitwise_eq(direct.last()));
    }

    #[test]
    fn semigroup_with_selection_and_bump() {
        let pipe = Pipeline::new(
            vec![
                CandidateSpec::new(SchemeConfig::rusanov()),
                CandidateSpec::new(SchemeConfig::hll()),
            ],
            params(),
            0.05,
        )
        .unwrap()
        .with_selection(1.0, 1.0)
        .unwrap()
        .with_bump(true);
        let r = check_semigroup(&ensemble(2), 0.05, 0.05, &pipe).unwrap();
        assert!(r.bitwise_equal && r.weights_equal);
        assert_eq!(r.max_discrepancy, 0.0);
    }

    #[test]
    fn misaligned_times_are_rejected() {
        let pipe = single();
        assert!(pushforward(&ensemble(1), 0.07, &pipe).is_err());
        assert!(check_semigroup(&ensemble(1), 0.05, 0.03, &pipe).is_err());
    }

    #[test]
    fn defect_series_with_bump_vanishes_after_first_interval() {
        let pipe = single().with_bump(true);
        let series = defect_expectation_series(&ensemble(3), &[0.0, 0.05, 0.1], &pipe).unwrap();
        assert!(series[0].1 > 0.0);
        assert!(series.iter().all(|&(_, d)| d >= 0.0));
        assert!(series[2].1 <= series[1].1 + 1e-10);
        assert!(series[1].1 < 1e-10);
    }
}
