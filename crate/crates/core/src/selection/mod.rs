//! Selection among a finite family of candidate evolutions by an
//! exponentially weighted cost, plus the entropy bump that removes an
//! energy defect and the concatenation of trajectories across such a seam.

mod bump;

pub use bump::{concatenate, entropy_bump, BumpOutcome};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::solver::{run_refined, FieldState, Schedule, SchemeConfig, SeriesRecord, Trajectory};
use crate::thermo::{Extended, ThermoParams};

/// Default truncation horizon of the weighted cost; `e^{-30}` is below
/// `1e-13`.
pub const DEFAULT_HORIZON: f64 = 30.0;

/// Relative tolerance under which two costs count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// One member of the candidate family: a scheme and the refinement factor
/// it runs at relative to the shared initial mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateSpec {
    pub scheme: SchemeConfig,
    pub refine: usize,
}

impl CandidateSpec {
    pub fn new(scheme: SchemeConfig) -> Self {
        CandidateSpec { scheme, refine: 1 }
    }

    pub fn refined(scheme: SchemeConfig, refine: usize) -> Self {
        CandidateSpec { scheme, refine }
    }

    pub fn descriptor(&self) -> String {
        if self.refine > 1 {
            format!("{}-x{}", self.scheme.descriptor(), self.refine)
        } else {
            self.scheme.descriptor()
        }
    }

    pub fn run(&self, init: &FieldState, params: &ThermoParams, schedule: &Schedule) -> Result<Trajectory> {
        run_refined(init, &self.scheme, params, schedule, self.refine)
    }
}

/// Candidate trajectories sharing one initial field.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub initial: FieldState,
    pub params: ThermoParams,
    pub candidates: Vec<(CandidateSpec, Trajectory)>,
}

impl CandidateSet {
    /// Runs every candidate from `initial` under `schedule`, concurrently.
    /// The order of the result follows `specs`.
    pub fn compute(
        initial: &FieldState,
        specs: &[CandidateSpec],
        params: &ThermoParams,
        schedule: &Schedule,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::input("candidate set is empty"));
        }
        let trajs: Vec<Result<Trajectory>> = specs
            .par_iter()
            .map(|spec| spec.run(initial, params, schedule))
            .collect();
        let candidates = specs
            .iter()
            .copied()
            .zip(trajs)
            .map(|(s, t)| t.map(|t| (s, t)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidateSet {
            initial: initial.clone(),
            params: *params,
            candidates,
        })
    }

    /// Wraps precomputed trajectories; all must start from bitwise the
    /// same field.
    pub fn from_parts(
        initial: FieldState,
        params: ThermoParams,
        candidates: Vec<(CandidateSpec, Trajectory)>,
    ) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::input("candidate set is empty"));
        }
        if let Some(i) = candidates
            .iter()
            .position(|(_, t)| !t.initial().bitwise_eq(&initial))
        {
            return Err(Error::input(format!(
                "candidate {i} does not start from the shared initial data"
            )));
        }
        Ok(CandidateSet {
            initial,
            params,
            candidates,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Truncated weighted integral and the bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedCost {
    pub value: Extended,
    pub tail_bound: f64,
}

/// `int_0^h e^{-l s} ds` and `int_0^h s e^{-l s} ds`.
fn exp_moments(lambda: f64, h: f64) -> (f64, f64) {
    let x = lambda * h;
    let m0 = -(-x).exp_m1() / lambda;
    let m1 = if x < 1e-3 {
        h * h * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0)
    } else {
        (m0 - h * (-x).exp()) / lambda
    };
    (m0, m1)
}

/// `int_0^T e^{-lambda t} F(t) dt` for `F` given at increasing sample times
/// (relative to the first) and linear in between. Repeated times (seams)
/// contribute nothing. Fails if the samples do not reach `T`.
pub fn weighted_integral(samples: &[(f64, f64)], horizon: f64, lambda: f64) -> Result<WeightedCost> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::input(format!("lambda must be positive, got {lambda}")));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::input(format!("horizon must be nonnegative, got {horizon}")));
    }
    let (t0, _) = *samples
        .first()
        .ok_or_else(|| Error::input("no samples to integrate"))?;
    let t_last = samples.last().map_or(t0, |s| s.0) - t0;
    if t_last < horizon * (1.0 - 1e-12) {
        return Err(Error::input(format!(
            "series covers [0, {t_last}] but the horizon is {horizon}"
        )));
    }
    let mut sup = 0.0_f64;
    let mut value = Extended::ZERO;
    for w in samples.windows(2) {
        let (a, fa) = (w[0].0 - t0, w[0].1);
        let (b, fb) = (w[1].0 - t0, w[1].1);
        if a >= horizon {
            break;
        }
        if b < a {
            return Err(Error::input("sample times must be nondecreasing"));
        }
        if b == a {
            continue;
        }
        sup = sup.max(fa.abs());
        if !fa.is_finite() || !fb.is_finite() {
            value = Extended::Infinite;
            continue;
        }
        let slope = (fb - fa) / (b - a);
        let h = b.min(horizon) - a;
        let (m0, m1) = exp_moments(lambda, h);
        value = value + Extended::Finite((-lambda * a).exp() * (fa * m0 + slope * m1));
        if b <= horizon {
            sup = sup.max(fb.abs());
        } else {
            sup = sup.max((fa + slope * h).abs());
        }
    }
    if samples.len() == 1 {
        sup = samples[0].1.abs();
    }
    let tail_bound = if sup.is_finite() {
        (-lambda * horizon).exp() * sup / lambda
    } else {
        f64::INFINITY
    };
    Ok(WeightedCost { value, tail_bound })
}

fn samples(series: &[SeriesRecord], f: impl Fn(&SeriesRecord) -> f64) -> Vec<(f64, f64)> {
    series.iter().map(|r| (r.t, f(r))).collect()
}

/// `int_0^T e^{-lambda t} F(U(t)) dt` with `F = int (E - theta_bar S)`.
///
/// `F` is taken piecewise linear on the step grid and integrated exactly
/// against the exponential weight. Any infinite energy makes the cost
/// infinite.
pub fn weighted_cost(traj: &Trajectory, horizon: f64, lambda: f64) -> Result<WeightedCost> {
    weighted_integral(&samples(&traj.series, |r| r.cost), horizon, lambda)
}

/// `int_0^T e^{-lambda t} int S dt`, reported alongside the cost.
pub fn entropy_functional(traj: &Trajectory, horizon: f64, lambda: f64) -> Result<f64> {
    let w = weighted_integral(&samples(&traj.series, |r| r.entropy), horizon, lambda)?;
    Ok(w.value.to_f64())
}

/// Index of the smallest cost; costs within [`TIE_TOL`] (relative) of the
/// minimum are tied and resolved to the lowest index. Returns the index
/// and whether a tie occurred.
pub fn argmin_costs(costs: &[Extended]) -> Result<(usize, bool)> {
    if costs.is_empty() {
        return Err(Error::input("no costs to minimize"));
    }
    let min = costs
        .iter()
        .copied()
        .fold(Extended::Infinite, |m, c| if c < m { c } else { m });
    let close = |c: Extended| match (c, min) {
        (Extended::Finite(a), Extended::Finite(b)) => {
            (a - b).abs() <= TIE_TOL * a.abs().max(b.abs())
        }
        (Extended::Infinite, Extended::Infinite) => true,
        _ => false,
    };
    let tied: Vec<usize> = (0..costs.len()).filter(|&i| close(costs[i])).collect();
    Ok((tied[0], tied.len() > 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen: usize,
    pub descriptors: Vec<String>,
    pub costs: Vec<Extended>,
    pub tail_bounds: Vec<f64>,
    /// Candidate finished without failure and without entropy decrease.
    pub admissible: Vec<bool>,
    pub entropy_functional: Vec<f64>,
    pub tie: bool,
    /// The gap to the runner-up exceeds both tail bounds combined.
    pub certified: bool,
}

/// Selects the candidate of least weighted cost over `[0, horizon]`.
///
/// Candidates whose run failed or lost entropy are not admissible and are
/// assigned an infinite cost.
pub fn select_admissible(set: &CandidateSet, horizon: f64, lambda: f64) -> Result<SelectionResult> {
    if set.is_empty() {
        return Err(Error::input("candidate set is empty"));
    }
    let n = set.len();
    let mut costs = Vec::with_capacity(n);
    let mut tails = Vec::with_capacity(n);
    let mut admissible = Vec::with_capacity(n);
    let mut entropy = Vec::with_capacity(n);
    for (_, traj) in &set.candidates {
        let ok = traj.is_valid() && traj.entropy_violations == 0;
        let wc = if ok {
            weighted_cost(traj, horizon, lambda)?
        } else {
            WeightedCost {
                value: Extended::Infinite,
                tail_bound: f64::INFINITY,
            }
        };
        costs.push(wc.value);
        tails.push(wc.tail_bound);
        admissible.push(ok);
        entropy.push(if ok {
            entropy_functional(traj, horizon, lambda)?
        } else {
            f64::NAN
        });
    }
    let (chosen, tie) = argmin_costs(&costs)?;
    let certified = (0..n).filter(|&j| j != chosen).all(|j| {
        match (costs[j], costs[chosen]) {
            (Extended::Finite(cj), Extended::Finite(cc)) => cj - cc > tails[j] + tails[chosen],
            (Extended::Infinite, Extended::Finite(_)) => true,
            _ => false,
        }
    });
    Ok(SelectionResult {
        chosen,
        descriptors: set.candidates.iter().map(|(s, _)| s.descriptor()).collect(),
        costs,
        tail_bounds: tails,
        admissible,
        entropy_functional: entropy,
        tie,
        certified: certified && !tie,
    })
}
