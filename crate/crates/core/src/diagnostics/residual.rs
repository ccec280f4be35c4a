//! Discrete weak-form residuals of the continuity, momentum and entropy
//! relations, evaluated against separable test functions
//! `phi(t, x) = chi(t) * prod_a psi(x_a / L_a)`.
//!
//! Time integrals use the snapshots of a trajectory as quadrature nodes.
//! The `d_t phi` terms are summed as `(q^n + q^{n+1}) / 2 * (chi^{n+1} -
//! chi^n)`, which is an exact summation by parts of the discrete update, and
//! flux terms use the trapezoid rule. Space uses the cell-centre rule.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::solver::{FieldState, Trajectory};
use crate::thermo::{self, ThermoParams};

/// Bumped whenever the built-in test-function library changes.
pub const TEST_LIBRARY_VERSION: u32 = 1;

/// One-dimensional spatial profile on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `sum_k c_k xi^k`.
    Poly(Vec<f64>),
    /// `sum_k c_k cos(k pi xi)`.
    Cosine(Vec<f64>),
    /// `sum_k c_k sin(k pi xi)`.
    Sine(Vec<f64>),
    /// `cos^2` bump, nonzero only on `|xi - center| < half_width`.
    Bump { center: f64, half_width: f64 },
}

impl Profile {
    /// Value and derivative at `xi`.
    pub fn eval(&self, xi: f64) -> (f64, f64) {
        match self {
            Profile::Poly(c) => {
                let mut v = 0.0;
                let mut d = 0.0;
                for (k, &ck) in c.iter().enumerate().rev() {
                    v = v * xi + ck;
                    if k > 0 {
                        d = d * xi + k as f64 * ck;
                    }
                }
                (v, d)
            }
            Profile::Cosine(c) => c.iter().enumerate().fold((0.0, 0.0), |(v, d), (k, &ck)| {
                let w = k as f64 * PI;
                (v + ck * (w * xi).cos(), d - ck * w * (w * xi).sin())
            }),
            Profile::Sine(c) => c.iter().enumerate().fold((0.0, 0.0), |(v, d), (k, &ck)| {
                let w = k as f64 * PI;
                (v + ck * (w * xi).sin(), d + ck * w * (w * xi).cos())
            }),
            Profile::Bump { center, half_width } => {
                let r = xi - center;
                if r.abs() >= *half_width {
                    return (0.0, 0.0);
                }
                let w = PI / (2.0 * half_width);
                let a = w * r;
                (a.cos().powi(2), -w * (2.0 * a).sin())
            }
        }
    }

    fn sample(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=1000).map(move |i| self.eval(i as f64 / 1000.0).0)
    }

    fn validate(&self) -> Result<()> {
        if let Profile::Bump { half_width, .. } = self {
            if !(*half_width > 0.0) {
                return Err(Error::input("bump half width must be positive"));
            }
        }
        Ok(())
    }
}

/// `phi(t, x) = chi(t / t_supp) * prod_a psi(x_a / L_a)` with the cutoff
/// `chi(tau) = 1 - 3 tau^2 + 2 tau^3` on `[0, 1]`, zero afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub id: String,
    pub profile: Profile,
    pub t_supp: f64,
}

impl TestFunction {
    pub fn new(id: impl Into<String>, profile: Profile, t_supp: f64) -> Result<Self> {
        profile.validate()?;
        if !(t_supp > 0.0) || !t_supp.is_finite() {
            return Err(Error::input(format!("time support must be positive, got {t_supp}")));
        }
        Ok(TestFunction {
            id: id.into(),
            profile,
            t_supp,
        })
    }

    /// Fixed library of test functions, all with time support `t_supp`.
    pub fn library(t_supp: f64) -> Result<Vec<TestFunction>> {
        let entries = [
            ("linear", Profile::Poly(vec![0.0, 1.0])),
            ("cos1", Profile::Cosine(vec![0.0, 1.0])),
            ("sin1", Profile::Sine(vec![0.0, 1.0])),
            ("sin2", Profile::Sine(vec![0.0, 0.0, 1.0])),
            ("bubble", Profile::Poly(vec![0.0, 4.0, -4.0])),
            ("bump-left", Profile::Bump { center: 0.25, half_width: 0.2 }),
            ("bump-right", Profile::Bump { center: 0.75, half_width: 0.2 }),
        ];
        entries
            .into_iter()
            .map(|(id, p)| TestFunction::new(id, p, t_supp))
            .collect()
    }

    pub fn cutoff(&self, t: f64) -> f64 {
        let tau = t / self.t_supp;
        if tau <= 0.0 {
            1.0
        } else if tau >= 1.0 {
            0.0
        } else {
            1.0 - tau * tau * (3.0 - 2.0 * tau)
        }
    }

    /// Spatial factor and its gradient at `x` on a box of size `extent`.
    pub fn spatial(&self, x: [f64; 2], extent: [f64; 2], dim: usize) -> (f64, [f64; 2]) {
        let mut vals = [1.0; 2];
        let mut ders = [0.0; 2];
        for a in 0..dim {
            let (v, d) = self.profile.eval(x[a] / extent[a]);
            vals[a] = v;
            ders[a] = d / extent[a];
        }
        let value = vals[..dim].iter().product();
        let mut grad = [0.0; 2];
        for a in 0..dim {
            grad[a] = ders[a] * (0..dim).filter(|&b| b != a).map(|b| vals[b]).product::<f64>();
        }
        (value, grad)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.profile.sample().all(|v| v >= -1e-14)
    }

    /// Vanishes at both ends of the unit interval, so every component of a
    /// vector test function built from it is tangent to the walls.
    pub fn vanishes_on_boundary(&self) -> bool {
        self.profile.eval(0.0).0.abs() <= 1e-12 && self.profile.eval(1.0).0.abs() <= 1e-12
    }
}

/// Residuals of one test function; `None` where the function is not
/// admissible for that relation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub test_id: String,
    pub continuity: Option<f64>,
    pub momentum: Option<f64>,
    pub entropy: Option<f64>,
    /// Number of time intervals in the quadrature.
    pub time_steps: usize,
    pub cells: usize,
}

/// Checks the snapshots can carry the quadrature and returns the start time.
fn check_trajectory(traj: &Trajectory, phi: &TestFunction) -> Result<f64> {
    let t0 = traj
        .snapshots
        .first()
        .map(|s| s.time)
        .ok_or_else(|| Error::input("trajectory has no snapshots"))?;
    let t_last = traj.last().time;
    if phi.t_supp > (t_last - t0) * (1.0 + 1e-12) + 1e-14 {
        return Err(Error::input(format!(
            "test function support {} exceeds trajectory duration {}",
            phi.t_supp,
            t_last - t0
        )));
    }
    Ok(t0)
}

/// Space-time sum shared by all three relations. `density` and `flux`
/// receive a cell, the value of the spatial factor and its gradient.
fn weak_sum(
    traj: &Trajectory,
    phi: &TestFunction,
    density: impl Fn(&thermo::ConservedState, f64) -> f64,
    flux: impl Fn(&thermo::ConservedState, f64, [f64; 2]) -> f64,
) -> Result<f64> {
    let t0 = check_trajectory(traj, phi)?;
    let integrals = |st: &FieldState| -> (f64, f64) {
        let mesh = &st.mesh;
        let extent = [mesh.extent()[0], mesh.extent().get(1).copied().unwrap_or(1.0)];
        let mut p = 0.0;
        let mut q = 0.0;
        for (idx, c) in st.cells.iter().enumerate() {
            let (v, g) = phi.spatial(mesh.center(idx), extent, mesh.dim());
            p += density(c, v);
            q += flux(c, v, g);
        }
        let vol = mesh.cell_volume();
        (p * vol, q * vol)
    };
    let first = integrals(&traj.snapshots[0]);
    let mut total = first.0 * phi.cutoff(0.0);
    let mut prev = (first, phi.cutoff(0.0), traj.snapshots[0].time);
    for st in &traj.snapshots[1..] {
        let chi_prev = prev.1;
        if chi_prev == 0.0 {
            break;
        }
        let cur = integrals(st);
        let chi = phi.cutoff(st.time - t0);
        let dt = st.time - prev.2;
        total += 0.5 * (prev.0 .0 + cur.0) * (chi - chi_prev);
        total += 0.5 * (chi_prev * prev.0 .1 + chi * cur.1) * dt;
        prev = (cur, chi, st.time);
    }
    Ok(total)
}

fn velocity(c: &thermo::ConservedState, params: &ThermoParams) -> Option<[f64; 2]> {
    (c.rho > 0.0 && !params.is_vacuum(c.rho)).then(|| [c.mom[0] / c.rho, c.mom[1] / c.rho])
}

/// `int int rho d_t phi + m . grad phi + int rho_0 phi(0)`, zero for a weak
/// solution.
pub fn weak_residual_continuity(traj: &Trajectory, phi: &TestFunction) -> Result<f64> {
    weak_sum(
        traj,
        phi,
        |c, v| c.rho * v,
        |c, _, g| c.mom[0] * g[0] + c.mom[1] * g[1],
    )
}

/// Momentum residual for the vector test function with every component
/// equal to `phi`; it estimates the action of the concentration defect.
pub fn weak_residual_momentum(
    traj: &Trajectory,
    phi: &TestFunction,
    params: &ThermoParams,
) -> Result<f64> {
    if !phi.vanishes_on_boundary() {
        return Err(Error::input(format!(
            "test function '{}' is not tangent to the boundary",
            phi.id
        )));
    }
    let dim = traj.initial().mesh.dim();
    weak_sum(
        traj,
        phi,
        |c, v| (0..dim).map(|a| c.mom[a]).sum::<f64>() * v,
        |c, _, g| {
            let p = thermo::pressure(c.rho, c.entropy, params).to_f64();
            let u = velocity(c, params).unwrap_or([0.0; 2]);
            let mut s = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    let stress = c.mom[a] * u[b] + if a == b { p } else { 0.0 };
                    s += stress * g[b];
                }
            }
            s
        },
    )
}

/// `-(int int S d_t phi + S u . grad phi + int S_0 phi(0))`; nonnegative up
/// to discretization error for an admissible solution.
pub fn weak_residual_entropy(
    traj: &Trajectory,
    phi: &TestFunction,
    params: &ThermoParams,
) -> Result<f64> {
    if !phi.is_nonnegative() {
        return Err(Error::input(format!(
            "entropy test function '{}' takes negative values",
            phi.id
        )));
    }
    let sum = weak_sum(
        traj,
        phi,
        |c, v| c.entropy * v,
        |c, _, g| match velocity(c, params) {
            Some(u) => c.entropy * (u[0] * g[0] + u[1] * g[1]),
            None => 0.0,
        },
    )?;
    Ok(-sum)
}

/// All admissible residuals of `phi`.
pub fn residual_report(
    traj: &Trajectory,
    phi: &TestFunction,
    params: &ThermoParams,
) -> Result<ResidualReport> {
    let continuity = Some(weak_residual_continuity(traj, phi)?);
    let momentum = if phi.vanishes_on_boundary() {
        Some(weak_residual_momentum(traj, phi, params)?)
    } else {
        None
    };
    let entropy = if phi.is_nonnegative() {
        Some(weak_residual_entropy(traj, phi, params)?)
    } else {
        None
    };
    Ok(ResidualReport {
        test_id: phi.id.clone(),
        continuity,
        momentum,
        entropy,
        time_steps: traj.snapshots.len().saturating_sub(1),
        cells: traj.initial().mesh.len(),
    })
}
