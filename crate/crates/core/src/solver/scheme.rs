use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::field::FieldState;
use crate::solver::flux::{self, Cons, FluxKind, Prim};
use crate::thermo::{self, ConservedState, ThermoParams};

/// Pressure floor applied (and flagged) when the recovered pressure is
/// nonnegative but tiny.
pub const PRESSURE_FLOOR: f64 = 1e-14;

/// One member of a family of finite-volume schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub flux: FluxKind,
    /// 1 (piecewise constant) or 2 (MUSCL with minmod, SSP-RK2 in time).
    #[serde(default = "default_order")]
    pub order: u8,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub artificial_viscosity: f64,
    /// When set, the artificial viscosity of every face and step is drawn
    /// uniformly from `[0, 2 nu]` by a generator keyed on this seed and the
    /// current time.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_order() -> u8 {
    1
}

fn default_cfl() -> f64 {
    0.9
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            flux: FluxKind::Rusanov,
            order: 1,
            cfl: 0.9,
            artificial_viscosity: 0.0,
            seed: None,
        }
    }
}

impl SchemeConfig {
    pub fn rusanov() -> Self {
        Self::default()
    }

    pub fn hll() -> Self {
        SchemeConfig {
            flux: FluxKind::Hll,
            ..Self::default()
        }
    }

    pub fn with_order(mut self, order: u8) -> Self {
        self.order = order;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_viscosity(mut self, nu: f64) -> Self {
        self.artificial_viscosity = nu;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::input(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.order == 1 || self.order == 2) {
            return Err(Error::input(format!("order must be 1 or 2, got {}", self.order)));
        }
        if !(self.artificial_viscosity >= 0.0) || !self.artificial_viscosity.is_finite() {
            return Err(Error::input(format!(
                "artificial viscosity must be nonnegative, got {}",
                self.artificial_viscosity
            )));
        }
        Ok(())
    }

    /// Compact human-readable descriptor, e.g. `rusanov-o1-cfl0.9-nu0`.
    pub fn descriptor(&self) -> String {
        let mut s = format!(
            "{}-o{}-cfl{}-nu{}",
            self.flux, self.order, self.cfl, self.artificial_viscosity
        );
        if let Some(seed) = self.seed {
            s.push_str(&format!("-seed{seed}"));
        }
        s
    }

    /// True for the reference dissipative scheme (first-order Rusanov).
    pub fn is_reference(&self) -> bool {
        self.flux == FluxKind::Rusanov && self.order == 1
    }

    /// Upper bound on the effective viscosity multiplier.
    fn viscosity_bound(&self) -> f64 {
        let nu = self.artificial_viscosity;
        if self.seed.is_some() {
            2.0 * nu
        } else {
            nu
        }
    }
}

/// Result of one explicit update.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: FieldState,
    /// Cells snapped to vacuum or lifted to the pressure floor.
    pub flagged: usize,
}

fn primitives(st: &FieldState, params: &ThermoParams) -> Vec<Prim> {
    st.cells
        .iter()
        .map(|c| {
            if c.rho <= 0.0 {
                [0.0; 4]
            } else {
                let p = thermo::pressure(c.rho, c.entropy, params).to_f64();
                [c.rho, c.mom[0] / c.rho, c.mom[1] / c.rho, p]
            }
        })
        .collect()
}

/// `max |u| + sqrt(gamma p / rho)` over non-vacuum cells.
pub fn max_wave_speed(st: &FieldState, params: &ThermoParams) -> f64 {
    primitives(st, params)
        .iter()
        .filter(|w| w[0] > 0.0)
        .map(|w| (w[1] * w[1] + w[2] * w[2]).sqrt() + flux::sound_speed(w, params.gamma()))
        .fold(0.0, f64::max)
}

/// Largest stable time step, `cfl * dx / (a_max * (1 + nu) * d)`.
/// Infinite when nothing moves.
pub fn stable_dt(st: &FieldState, cfg: &SchemeConfig, params: &ThermoParams) -> f64 {
    let a = max_wave_speed(st, params);
    if a <= 0.0 {
        return f64::INFINITY;
    }
    cfg.cfl * st.mesh.min_spacing() / (a * (1.0 + cfg.viscosity_bound()) * st.mesh.dim() as f64)
}

fn face_viscosity_rng(cfg: &SchemeConfig, time: f64) -> Option<ChaCha8Rng> {
    cfg.seed.map(|seed| {
        let key = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .rotate_left(17)
            ^ time.to_bits();
        ChaCha8Rng::seed_from_u64(key)
    })
}

/// Spatial operator `-div F` evaluated with reflective walls, written as
/// increments per unit time. `nus` holds the per-face viscosity sequence.
fn rhs(
    prims: &[Prim],
    st: &FieldState,
    cfg: &SchemeConfig,
    params: &ThermoParams,
    nus: &mut FaceViscosity,
) -> Vec<Cons> {
    let mesh = &st.mesh;
    let mut out = vec![[0.0; 4]; mesh.len()];
    let second = cfg.order == 2;
    for axis in 0..mesh.dim() {
        let inv_h = 1.0 / mesh.spacing(axis);
        let (n_line, n_lines) = (mesh.n(axis), mesh.len() / mesh.n(axis));
        for l in 0..n_lines {
            let idx = |k: usize| {
                if axis == 0 {
                    mesh.index(k, l)
                } else {
                    mesh.index(l, k)
                }
            };
            let line: Vec<Prim> = (0..n_line).map(|k| prims[idx(k)]).collect();
            let f = flux::line_fluxes(cfg.flux, second, &line, axis, params.gamma(), |_| {
                nus.next()
            });
            for k in 0..n_line {
                let o = &mut out[idx(k)];
                for q in 0..4 {
                    o[q] -= inv_h * (f[k + 1][q] - f[k][q]);
                }
            }
        }
    }
    out
}

/// Deterministic sequence of per-face viscosity coefficients.
struct FaceViscosity {
    nu: f64,
    rng: Option<ChaCha8Rng>,
    drawn: Vec<f64>,
    cursor: usize,
}

impl FaceViscosity {
    fn new(cfg: &SchemeConfig, time: f64) -> Self {
        FaceViscosity {
            nu: cfg.artificial_viscosity,
            rng: face_viscosity_rng(cfg, time),
            drawn: Vec::new(),
            cursor: 0,
        }
    }

    /// Replays the same draws for the second Runge-Kutta stage.
    fn rewind(&mut self) {
        self.cursor = 0;
    }

    fn next(&mut self) -> f64 {
        let Some(rng) = self.rng.as_mut() else {
            return self.nu;
        };
        if self.cursor == self.drawn.len() {
            let r: f64 = rng.gen();
            self.drawn.push(2.0 * self.nu * r);
        }
        let v = self.drawn[self.cursor];
        self.cursor += 1;
        v
    }
}

fn to_cons(prims: &[Prim], c_v: f64) -> Vec<Cons> {
    prims.iter().map(|w| flux::prim_to_cons(w, c_v)).collect()
}

/// Recovers `(rho, m, S)` from `(rho, m, E)`, snapping near-vacuum cells
/// and flooring tiny pressures.
fn from_cons(
    u: &[Cons],
    params: &ThermoParams,
    time: f64,
) -> Result<(Vec<ConservedState>, usize)> {
    let c_v = params.c_v();
    let mut flagged = 0;
    let mut cells = Vec::with_capacity(u.len());
    for (i, c) in u.iter().enumerate() {
        let rho = c[0];
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::StepFailure {
                cell: i,
                time,
                reason: format!("density {rho}"),
            });
        }
        if params.is_vacuum(rho) {
            if rho > 0.0 {
                flagged += 1;
            }
            cells.push(ConservedState::VACUUM);
            continue;
        }
        let kin = 0.5 * (c[1] * c[1] + c[2] * c[2]) / rho;
        let mut p = (c[3] - kin) / c_v;
        if !p.is_finite() || p < 0.0 {
            return Err(Error::StepFailure {
                cell: i,
                time,
                reason: format!("pressure {p}"),
            });
        }
        if p < PRESSURE_FLOOR {
            p = PRESSURE_FLOOR;
            flagged += 1;
        }
        let theta = p / rho;
        cells.push(ConservedState::new(
            rho,
            [c[1], c[2]],
            rho * thermo::specific_entropy(rho, theta, params),
        ));
    }
    Ok((cells, flagged))
}

fn prims_from_cons(u: &[Cons], c_v: f64) -> Vec<Prim> {
    u.iter()
        .map(|c| {
            if c[0] <= 0.0 {
                [0.0; 4]
            } else {
                let kin = 0.5 * (c[1] * c[1] + c[2] * c[2]) / c[0];
                [c[0], c[1] / c[0], c[2] / c[0], ((c[3] - kin) / c_v).max(0.0)]
            }
        })
        .collect()
}

/// Advances by exactly `dt`. Conservative in `(rho, m, E)`; the entropy is
/// recomputed pointwise from the updated energy.
pub fn advance(
    st: &FieldState,
    cfg: &SchemeConfig,
    params: &ThermoParams,
    dt: f64,
) -> Result<StepOutput> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::input(format!("time step must be finite and nonnegative, got {dt}")));
    }
    let c_v = params.c_v();
    let w0 = primitives(st, params);
    let u0 = to_cons(&w0, c_v);
    let mut nus = FaceViscosity::new(cfg, st.time);
    let l0 = rhs(&w0, st, cfg, params, &mut nus);
    let mut u1: Vec<Cons> = u0
        .iter()
        .zip(&l0)
        .map(|(u, l)| [0, 1, 2, 3].map(|q| u[q] + dt * l[q]))
        .collect();
    if cfg.order == 2 {
        // Positivity of the intermediate stage is checked like a final one.
        from_cons(&u1, params, st.time + dt)?;
        let w1 = prims_from_cons(&u1, c_v);
        nus.rewind();
        let l1 = rhs(&w1, st, cfg, params, &mut nus);
        u1 = u0
            .iter()
            .zip(u1.iter().zip(&l1))
            .map(|(u, (v, l))| [0, 1, 2, 3].map(|q| 0.5 * u[q] + 0.5 * (v[q] + dt * l[q])))
            .collect();
    }
    if st.mesh.dim() == 1 {
        for u in &mut u1 {
            u[2] = 0.0;
        }
    }
    let (cells, flagged) = from_cons(&u1, params, st.time + dt)?;
    Ok(StepOutput {
        state: FieldState {
            mesh: st.mesh,
            cells,
            time: st.time + dt,
        },
        flagged,
    })
}

/// One step at the CFL-limited time step.
pub fn step(st: &FieldState, cfg: &SchemeConfig, params: &ThermoParams) -> Result<StepOutput> {
    let dt = stable_dt(st, cfg, params);
    if !dt.is_finite() {
        // Nothing moves: the state is steady.
        return Ok(StepOutput {
            state: st.clone(),
            flagged: 0,
        });
    }
    advance(st, cfg, params, dt)
}

/// Numerical fluxes through every wall face, in the order
/// `(axis, line, low wall / high wall)`. Used to audit impermeability.
pub fn wall_fluxes(st: &FieldState, cfg: &SchemeConfig, params: &ThermoParams) -> Vec<Cons> {
    let prims = primitives(st, params);
    let mesh = &st.mesh;
    let mut nus = FaceViscosity::new(cfg, st.time);
    let mut out = Vec::new();
    for axis in 0..mesh.dim() {
        let (n_line, n_lines) = (mesh.n(axis), mesh.len() / mesh.n(axis));
        for l in 0..n_lines {
            let line: Vec<Prim> = (0..n_line)
                .map(|k| prims[if axis == 0 { mesh.index(k, l) } else { mesh.index(l, k) }])
                .collect();
            let f = flux::line_fluxes(cfg.flux, cfg.order == 2, &line, axis, params.gamma(), |_| {
                nus.next()
            });
            out.push(f[0]);
            out.push(f[n_line]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::field::Primitive;
    use crate::solver::mesh::Mesh;

    fn params() -> ThermoParams {
        ThermoParams::new(1.4, f64::NEG_INFINITY, 1e-6, 10.0).unwrap()
    }

    #[test]
    fn wave_speed_cases() {
        let p = params();
        let mesh = Mesh::new_1d(8, 1.0).unwrap();
        let rest = FieldState::uniform(mesh, ConservedState::from_primitive(1.0, [0.0, 0.0], 1.0, &p));
        assert!((max_wave_speed(&rest, &p) - 1.4f64.sqrt()).abs() < 1e-14);
        let moving = FieldState::uniform(mesh, ConservedState::from_primitive(1.0, [2.0, 0.0], 1.0, &p));
        assert!((max_wave_speed(&moving, &p) - (2.0 + 1.4f64.sqrt())).abs() < 1e-14);
        let vac = FieldState::uniform(mesh, ConservedState::VACUUM);
        assert_eq!(max_wave_speed(&vac, &p), 0.0);
    }

    #[test]
    fn uniform_rest_state_is_steady() {
        let p = params();
        for mesh in [Mesh::new_1d(16, 1.0).unwrap(), Mesh::new_2d(6, 5, 1.0, 2.0).unwrap()] {
            let st = FieldState::uniform(mesh, ConservedState::from_primitive(0.7, [0.0, 0.0], 1.3, &p));
            for cfg in [SchemeConfig::rusanov(), SchemeConfig::hll().with_order(2)] {
                let out = step(&st, &cfg, &p).unwrap();
                assert!(out.state.max_abs_diff(&st) < 1e-14);
                assert_eq!(out.flagged, 0);
            }
        }
    }

    #[test]
    fn wall_audit_zero_mass_flux() {
        let p = params();
        let mesh = Mesh::new_2d(6, 6, 1.0, 1.0).unwrap();
        let st = FieldState::from_profile(mesh, &p, |x| {
            Primitive::new(1.0 + 0.3 * x[0], [0.5 - x[1], 0.3 * x[0]], 1.0 + x[1])
        });
        for f in wall_fluxes(&st, &SchemeConfig::rusanov().with_viscosity(0.3).with_seed(4), &p) {
            assert_eq!(f[0], 0.0);
            assert!(f[3].abs() < 1e-15);
        }
    }

    #[test]
    fn seeded_viscosity_is_deterministic() {
        let p = params();
        let mesh = Mesh::new_1d(32, 1.0).unwrap();
        let st = FieldState::from_profile(mesh, &p, |x| {
            Primitive::new(1.0 + 0.2 * (6.0 * x[0]).sin(), [0.0, 0.0], 1.0)
        });
        let cfg = SchemeConfig::rusanov().with_viscosity(0.5).with_seed(11);
        let a = step(&st, &cfg, &p).unwrap().state;
        let b = step(&st, &cfg, &p).unwrap().state;
        assert!(a.bitwise_eq(&b));
        let c = step(&st, &cfg.with_seed(12), &p).unwrap().state;
        assert!(!a.bitwise_eq(&c));
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::rusanov().with_cfl(1.0).validate().is_err());
        assert!(SchemeConfig::rusanov().with_order(3).validate().is_err());
        assert!(SchemeConfig::rusanov().with_viscosity(-1.0).validate().is_err());
        assert!(SchemeConfig::hll().validate().is_ok());
    }

    #[test]
    fn negative_time_step_rejected() {
        let p = params();
        let mesh = Mesh::new_1d(8, 1.0).unwrap();
        let st = FieldState::uniform(mesh, ConservedState::from_primitive(1.0, [0.0, 0.0], 1.0, &p));
        assert!(advance(&st, &SchemeConfig::rusanov(), &p, -1.0).is_err());
    }
}
