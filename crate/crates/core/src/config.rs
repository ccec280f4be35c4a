//! Run configuration: a TOML file parsed into raw sections, then checked
//! field by field so that every rejection names the offending key.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::Provenance;
use crate::selection::{CandidateSpec, DEFAULT_HORIZON};
use crate::solver::{entropy_floor_of, FieldState, FluxKind, Mesh, Primitive, Schedule, SchemeConfig};
use crate::statistical::{sample_initial, Observable, SamplerSpec};
use crate::thermo::{ThermoParams, DEFAULT_RHO_VAC};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    thermo: RawThermo,
    mesh: RawMesh,
    initial: InitialSpec,
    #[serde(default)]
    scheme: Option<RawScheme>,
    #[serde(default)]
    candidates: Vec<RawScheme>,
    #[serde(default)]
    selection: RawSelection,
    #[serde(default)]
    ensemble: Option<RawEnsemble>,
    schedule: RawSchedule,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThermo {
    gamma: f64,
    #[serde(default = "default_m_min")]
    m_min: f64,
    e_ref: Option<f64>,
    s_floor: Option<f64>,
    #[serde(default = "default_rho_vac")]
    rho_vac: f64,
}

fn default_m_min() -> f64 {
    1e-6
}

fn default_rho_vac() -> f64 {
    DEFAULT_RHO_VAC
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    cells: Vec<usize>,
    extent: Vec<f64>,
}

/// Named initial profiles.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Shock tube along x: `(rho, p) = (1, 1)` left of the interface and
    /// `(0.125, 0.1)` right of it, at rest.
    Sod {
        #[serde(default = "default_interface")]
        interface: f64,
    },
    Uniform {
        rho: f64,
        #[serde(default)]
        velocity: [f64; 2],
        pressure: f64,
    },
    /// One draw of the smooth-perturbation sampler.
    Smooth {
        #[serde(default = "one")]
        rho: f64,
        #[serde(default = "one")]
        pressure: f64,
        amplitude: f64,
        #[serde(default = "three")]
        modes: usize,
        seed: u64,
    },
}

fn default_interface() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

fn three() -> usize {
    3
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    #[serde(default = "default_flux")]
    flux: FluxKind,
    #[serde(default = "default_order")]
    order: u8,
    #[serde(default = "default_cfl")]
    cfl: f64,
    #[serde(default)]
    artificial_viscosity: f64,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_refine")]
    refine: usize,
}

fn default_flux() -> FluxKind {
    FluxKind::Rusanov
}

fn default_order() -> u8 {
    1
}

fn default_cfl() -> f64 {
    0.9
}

fn default_refine() -> usize {
    1
}

impl RawScheme {
    fn spec(&self) -> CandidateSpec {
        CandidateSpec::refined(
            SchemeConfig {
                flux: self.flux,
                order: self.order,
                cfl: self.cfl,
                artificial_viscosity: self.artificial_viscosity,
                seed: self.seed,
            },
            self.refine,
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSelection {
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default = "one")]
    lambda: f64,
    #[serde(default = "one")]
    defect_trace_constant: f64,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

impl Default for RawSelection {
    fn default() -> Self {
        RawSelection {
            horizon: DEFAULT_HORIZON,
            lambda: 1.0,
            defect_trace_constant: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    n: usize,
    seed: u64,
    sampler: Option<SamplerSpec>,
    sync_interval: f64,
    #[serde(default)]
    bump: bool,
    times: Vec<f64>,
    #[serde(default)]
    observables: Vec<Observable>,
    /// `[t, s]` at which to check the semigroup property.
    semigroup: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    t_end: f64,
    #[serde(default)]
    snapshots: Vec<f64>,
    #[serde(default)]
    every_step: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_dir")]
    dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RawOutput {
    fn default() -> Self {
        RawOutput { dir: default_dir() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoConfig {
    pub gamma: f64,
    pub m_min: f64,
    /// Energy budget; defaults to the energy of the initial data.
    pub e_ref: Option<f64>,
    /// Entropy floor; defaults to the smallest specific entropy of the
    /// initial data minus a small margin.
    pub s_floor: Option<f64>,
    pub rho_vac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub horizon: f64,
    pub lambda: f64,
    pub defect_trace_constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n: usize,
    pub seed: u64,
    pub sampler: SamplerSpec,
    pub sync_interval: f64,
    pub bump: bool,
    pub times: Vec<f64>,
    pub observables: Vec<Observable>,
    pub semigroup: Option<[f64; 2]>,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub thermo: ThermoConfig,
    pub mesh: Mesh,
    pub initial: InitialSpec,
    /// Scheme of `simulate`.
    pub scheme: CandidateSpec,
    pub candidates: Vec<CandidateSpec>,
    pub selection: SelectionConfig,
    pub ensemble: Option<EnsembleConfig>,
    pub schedule: Schedule,
    pub output_dir: PathBuf,
    pub provenance: Provenance,
}

fn check(ok: bool, path: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message))
    }
}

fn check_scheme(s: &CandidateSpec, path: &str) -> Result<()> {
    s.scheme
        .validate()
        .map_err(|e| Error::config(path, e.to_string()))?;
    check(s.refine >= 1, &format!("{path}.refine"), "must be at least 1")
}

fn sorted_nonneg(v: &[f64]) -> bool {
    v.iter().all(|t| *t >= 0.0 && t.is_finite()) && v.windows(2).all(|w| w[0] <= w[1])
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            Error::config("<document>", msg)
        })?;
        let prov = Provenance::of_config(text);
        Self::validate(raw, prov)
    }

    fn validate(raw: RawConfig, provenance: Provenance) -> Result<Self> {
        let t = &raw.thermo;
        check(t.gamma > 1.0 && t.gamma.is_finite(), "thermo.gamma", format!("must exceed 1, got {}", t.gamma))?;
        check(t.m_min > 0.0, "thermo.m_min", format!("must be positive, got {}", t.m_min))?;
        if let Some(e) = t.e_ref {
            check(e > 0.0 && e.is_finite(), "thermo.e_ref", format!("must be positive, got {e}"))?;
        }
        if let Some(s) = t.s_floor {
            check(!s.is_nan(), "thermo.s_floor", "must be a number")?;
        }
        check(t.rho_vac >= 0.0, "thermo.rho_vac", "must be nonnegative")?;

        let m = &raw.mesh;
        check(
            m.cells.len() == m.extent.len() && (1..=2).contains(&m.cells.len()),
            "mesh",
            "cells and extent must both have 1 or 2 entries",
        )?;
        let mesh = Mesh::new(&m.cells, &m.extent).map_err(|e| Error::config("mesh", e.to_string()))?;

        match raw.initial {
            InitialSpec::Sod { interface } => check(
                interface > 0.0 && interface < 1.0,
                "initial.interface",
                "must lie strictly inside (0, 1)",
            )?,
            InitialSpec::Uniform { rho, pressure, .. } => {
                check(rho > 0.0, "initial.rho", "must be positive")?;
                check(pressure > 0.0, "initial.pressure", "must be positive")?;
            }
            InitialSpec::Smooth {
                rho,
                pressure,
                amplitude,
                modes,
                ..
            } => SamplerSpec::smooth(rho, pressure, amplitude, modes)
                .validate()
                .map_err(|e| Error::config("initial", e.to_string()))?,
        }

        let scheme = raw.scheme.map(|s| s.spec()).unwrap_or(CandidateSpec::new(SchemeConfig::rusanov()));
        check_scheme(&scheme, "scheme")?;
        let candidates = if raw.candidates.is_empty() {
            vec![scheme]
        } else {
            raw.candidates.iter().map(RawScheme::spec).collect()
        };
        for (i, c) in candidates.iter().enumerate() {
            check_scheme(c, &format!("candidates[{i}]"))?;
        }

        let sel = &raw.selection;
        check(sel.horizon > 0.0 && sel.horizon.is_finite(), "selection.horizon", "must be positive")?;
        check(sel.lambda > 0.0 && sel.lambda.is_finite(), "selection.lambda", "must be positive")?;
        check(sel.defect_trace_constant > 0.0, "selection.defect_trace_constant", "must be positive")?;

        let sc = &raw.schedule;
        check(sc.t_end >= 0.0 && sc.t_end.is_finite(), "schedule.t_end", "must be nonnegative")?;
        check(sorted_nonneg(&sc.snapshots), "schedule.snapshots", "must be sorted and nonnegative")?;
        check(
            sc.snapshots.iter().all(|&s| s <= sc.t_end),
            "schedule.snapshots",
            "must not exceed t_end",
        )?;
        let mut snaps: Vec<f64> = sc.snapshots.iter().copied().filter(|&s| s > 0.0).collect();
        if snaps.last().is_none_or(|&l| l < sc.t_end) {
            snaps.push(sc.t_end);
        }
        let schedule = Schedule {
            t_end: sc.t_end,
            snapshot_times: snaps,
            every_step: sc.every_step,
        };

        let ensemble = match raw.ensemble {
            None => None,
            Some(e) => {
                check(e.n >= 1, "ensemble.n", "must be at least 1")?;
                check(
                    e.sync_interval > 0.0 && e.sync_interval.is_finite(),
                    "ensemble.sync_interval",
                    "must be positive",
                )?;
                check(!e.times.is_empty() && sorted_nonneg(&e.times), "ensemble.times", "must be a nonempty sorted list")?;
                let sampler = match (e.sampler, raw.initial) {
                    (Some(s), _) => s,
                    (None, InitialSpec::Smooth { rho, pressure, amplitude, modes, .. }) => {
                        SamplerSpec::smooth(rho, pressure, amplitude, modes)
                    }
                    _ => {
                        return Err(Error::config(
                            "ensemble.sampler",
                            "required unless the initial profile is smooth",
                        ))
                    }
                };
                sampler
                    .validate()
                    .map_err(|err| Error::config("ensemble.sampler", err.to_string()))?;
                for (i, o) in e.observables.iter().enumerate() {
                    o.validate()
                        .map_err(|err| Error::config(format!("ensemble.observables[{i}]"), err.to_string()))?;
                }
                if let Some([t, s]) = e.semigroup {
                    check(t >= 0.0 && s >= 0.0, "ensemble.semigroup", "times must be nonnegative")?;
                }
                Some(EnsembleConfig {
                    n: e.n,
                    seed: e.seed,
                    sampler,
                    sync_interval: e.sync_interval,
                    bump: e.bump,
                    times: e.times,
                    observables: if e.observables.is_empty() {
                        Observable::library()
                    } else {
                        e.observables
                    },
                    semigroup: e.semigroup,
                })
            }
        };

        Ok(RunConfig {
            thermo: ThermoConfig {
                gamma: t.gamma,
                m_min: t.m_min,
                e_ref: t.e_ref,
                s_floor: t.s_floor,
                rho_vac: t.rho_vac,
            },
            mesh,
            initial: raw.initial,
            scheme,
            candidates,
            selection: SelectionConfig {
                horizon: sel.horizon,
                lambda: sel.lambda,
                defect_trace_constant: sel.defect_trace_constant,
            },
            ensemble,
            schedule,
            output_dir: raw.output.dir,
            provenance,
        })
    }

    /// Parameters with an explicit budget and no entropy floor.
    pub fn base_params(&self, e_ref: f64) -> Result<ThermoParams> {
        let p = ThermoParams::new(self.thermo.gamma, f64::NEG_INFINITY, self.thermo.m_min, e_ref)
            .map_err(|e| Error::config("thermo", e.to_string()))?;
        Ok(p.with_rho_vac(self.thermo.rho_vac))
    }

    /// Parameters for a run whose initial data are `fields`: configured
    /// values where given, otherwise the largest initial energy and the
    /// smallest initial specific entropy (less a margin).
    pub fn params_for(&self, fields: &[&FieldState]) -> Result<ThermoParams> {
        let probe = self.base_params(1.0)?;
        let e_ref = match self.thermo.e_ref {
            Some(e) => e,
            None => fields
                .iter()
                .map(|f| crate::diagnostics::totals(f, &probe).energy.to_f64())
                .fold(0.0, f64::max),
        };
        let s_floor = self
            .thermo
            .s_floor
            .or_else(|| entropy_floor_of(fields.iter().copied()))
            .unwrap_or(f64::NEG_INFINITY);
        Ok(self.base_params(e_ref)?.with_s_floor(s_floor))
    }

    /// Initial field of the single-trajectory commands.
    pub fn initial_field(&self) -> Result<FieldState> {
        let probe = self.base_params(1.0)?;
        let mesh = self.mesh;
        let lx = mesh.extent()[0];
        let field = match self.initial {
            InitialSpec::Sod { interface } => FieldState::from_profile(mesh, &probe, |x| {
                if x[0] < interface * lx {
                    Primitive::new(1.0, [0.0, 0.0], 1.0)
                } else {
                    Primitive::new(0.125, [0.0, 0.0], 0.1)
                }
            }),
            InitialSpec::Uniform {
                rho,
                velocity,
                pressure,
            } => {
                let vel = if mesh.dim() == 1 { [velocity[0], 0.0] } else { velocity };
                FieldState::from_profile(mesh, &probe, |_| Primitive::new(rho, vel, pressure))
            }
            InitialSpec::Smooth {
                rho,
                pressure,
                amplitude,
                modes,
                seed,
            } => {
                let spec = SamplerSpec::smooth(rho, pressure, amplitude, modes);
                let loose = self.base_params(f64::MAX)?;
                let sigma = sample_initial(&spec, &mesh, &loose, 1, seed)?;
                sigma.atoms()[0].state.clone()
            }
        };
        Ok(field)
    }

    /// Energy budget used to draw an ensemble when none is configured: the
    /// unperturbed energy raised by the relative amplitude.
    pub fn ensemble_budget(&self) -> Option<f64> {
        let ens = self.ensemble.as_ref()?;
        let probe = self.base_params(1.0).ok()?;
        let SamplerSpec::SmoothPerturbation { amplitude, .. } = ens.sampler;
        Some(
            self.thermo
                .e_ref
                .unwrap_or_else(|| ens.sampler.base_energy(&self.mesh, &probe) * (1.0 + amplitude)),
        )
    }
}
