use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{FieldState, Mesh, Primitive};
use crate::statistical::measure::{Atom, DiscreteMeasure};
use crate::thermo::ThermoParams;

/// Maximum number of draws per requested atom before giving up.
pub const MAX_ATTEMPTS_PER_ATOM: usize = 100;

/// Parametric family of initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplerSpec {
    /// Fluid at rest with density `rho` and pressure `pressure`, perturbed
    /// by `modes` random Fourier modes per axis of relative size
    /// `amplitude`. Velocity modes are sines, so the normal velocity
    /// vanishes on the walls.
    SmoothPerturbation {
        rho: f64,
        pressure: f64,
        amplitude: f64,
        modes: usize,
    },
}

impl SamplerSpec {
    pub fn smooth(rho: f64, pressure: f64, amplitude: f64, modes: usize) -> Self {
        SamplerSpec::SmoothPerturbation {
            rho,
            pressure,
            amplitude,
            modes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let SamplerSpec::SmoothPerturbation {
            rho,
            pressure,
            amplitude,
            modes,
        } = *self;
        if !(rho > 0.0) || !(pressure > 0.0) {
            return Err(Error::input("sampler base density and pressure must be positive"));
        }
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::input(format!("sampler amplitude must be nonnegative, got {amplitude}")));
        }
        if modes == 0 {
            return Err(Error::input("sampler needs at least one mode"));
        }
        Ok(())
    }

    /// Total energy of the unperturbed state on `mesh`.
    pub fn base_energy(&self, mesh: &Mesh, params: &ThermoParams) -> f64 {
        let SamplerSpec::SmoothPerturbation { pressure, .. } = *self;
        params.c_v() * pressure * mesh.volume()
    }

    fn draw(&self, mesh: &Mesh, params: &ThermoParams, rng: &mut ChaCha8Rng) -> FieldState {
        let SamplerSpec::SmoothPerturbation {
            rho,
            pressure,
            amplitude,
            modes,
        } = *self;
        let dim = mesh.dim();
        let sound = (params.gamma() * pressure / rho).sqrt();
        // Coefficients [field][axis][mode], each uniform in (-1, 1) / k.
        let mut coef: [[Vec<f64>; 2]; 3] =
            std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; modes]));
        for field in coef.iter_mut() {
            for axis in field.iter_mut().take(dim) {
                for (k, c) in axis.iter_mut().enumerate() {
                    *c = rng.gen_range(-1.0..1.0) / (k + 1) as f64;
                }
            }
        }
        let extent = [mesh.extent()[0], mesh.extent().get(1).copied().unwrap_or(1.0)];
        FieldState::from_profile(*mesh, params, |x| {
            let mut dr = 0.0;
            let mut dp = 0.0;
            let mut vel = [0.0; 2];
            for a in 0..dim {
                let xi = x[a] / extent[a];
                for k in 0..modes {
                    let w = (k + 1) as f64 * PI * xi;
                    dr += coef[0][a][k] * w.cos();
                    vel[a] += coef[1][a][k] * w.sin();
                    dp += coef[2][a][k] * w.cos();
                }
            }
            let scale = amplitude / dim as f64;
            Primitive::new(
                rho * (1.0 + scale * dr),
                [amplitude * sound * vel[0], amplitude * sound * vel[1]],
                pressure * (1.0 + scale * dp),
            )
        })
    }
}

/// `n` equal-weight atoms drawn from `spec` with a generator seeded by
/// `seed`. Draws outside the phase space are discarded and redrawn, up to
/// [`MAX_ATTEMPTS_PER_ATOM`]` * n` draws in total.
pub fn sample_initial(
    spec: &SamplerSpec,
    mesh: &Mesh,
    params: &ThermoParams,
    n: usize,
    seed: u64,
) -> Result<DiscreteMeasure> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::input("ensemble size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = Vec::with_capacity(n);
    let mut attempts = 0;
    while atoms.len() < n {
        if attempts == MAX_ATTEMPTS_PER_ATOM * n {
            return Err(Error::input(format!(
                "sampler produced only {} admissible atoms in {attempts} draws",
                atoms.len()
            )));
        }
        attempts += 1;
        let st = spec.draw(mesh, params, &mut rng);
        if st.in_phase_space(params) {
            atoms.push(Atom {
                weight: 1.0 / n as f64,
                state: st,
                failure: None,
            });
        }
    }
    Ok(DiscreteMeasure::from_parts(atoms, Some((*spec, seed))))
}
