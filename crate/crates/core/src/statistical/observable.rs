use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{energy_defect, totals};
use crate::error::{Error, Result};
use crate::solver::FieldState;
use crate::statistical::measure::DiscreteMeasure;
use crate::thermo::ThermoParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Total {
    Mass,
    Energy,
    Entropy,
    Defect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    Density,
    MomentumX,
    MomentumY,
    Entropy,
}

/// Scalar functional of a field that an observable clips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Coordinate {
    Total { total: Total },
    /// Pairing of one component with `prod_a cos(k_a pi x_a / L_a)`,
    /// damped by `(1 + |k|^2)^(-damping / 2)`.
    Mode {
        component: Component,
        mode: [usize; 2],
        #[serde(default)]
        damping: f64,
    },
}

impl Coordinate {
    fn evaluate(&self, st: &FieldState, params: &ThermoParams) -> f64 {
        match *self {
            Coordinate::Total { total } => match total {
                Total::Mass => totals(st, params).mass,
                Total::Energy => totals(st, params).energy.to_f64(),
                Total::Entropy => totals(st, params).entropy,
                Total::Defect => energy_defect(st, params.e_ref, params).value,
            },
            Coordinate::Mode {
                component,
                mode,
                damping,
            } => {
                let mesh = &st.mesh;
                let dim = mesh.dim();
                let mut sum = 0.0;
                for (idx, c) in st.cells.iter().enumerate() {
                    let x = mesh.center(idx);
                    let basis: f64 = (0..dim)
                        .map(|a| (mode[a] as f64 * PI * x[a] / mesh.extent()[a]).cos())
                        .product();
                    let q = match component {
                        Component::Density => c.rho,
                        Component::MomentumX => c.mom[0],
                        Component::MomentumY => c.mom[1],
                        Component::Entropy => c.entropy,
                    };
                    sum += q * basis;
                }
                let k2 = (0..dim).map(|a| (mode[a] * mode[a]) as f64).sum::<f64>();
                sum * mesh.cell_volume() * (1.0 + k2).powf(-0.5 * damping)
            }
        }
    }

    fn id(&self) -> String {
        match self {
            Coordinate::Total { total } => format!("{total:?}").to_lowercase(),
            Coordinate::Mode {
                component,
                mode,
                damping,
            } => format!(
                "{}[{},{}]l{damping}",
                format!("{component:?}").to_lowercase(),
                mode[0],
                mode[1]
            ),
        }
    }
}

/// Bounded continuous functional on the phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Observable {
    Constant { value: f64 },
    /// Energy defect; bounded by the energy budget.
    Defect,
    /// `tanh(coordinate / scale)`.
    Clipped { coordinate: Coordinate, scale: f64 },
}

impl Observable {
    pub fn clipped(coordinate: Coordinate, scale: f64) -> Self {
        Observable::Clipped { coordinate, scale }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Observable::Constant { value } if !value.is_finite() => {
                Err(Error::input("constant observable must be finite"))
            }
            Observable::Clipped { scale, .. } if !(*scale > 0.0) => {
                Err(Error::input(format!("observable scale must be positive, got {scale}")))
            }
            _ => Ok(()),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Observable::Constant { value } => format!("const({value})"),
            Observable::Defect => "defect".into(),
            Observable::Clipped { coordinate, scale } => format!("tanh({}/{scale})", coordinate.id()),
        }
    }

    /// Supremum of `|G|` over the phase space.
    pub fn bound(&self, params: &ThermoParams) -> f64 {
        match self {
            Observable::Constant { value } => value.abs(),
            Observable::Defect => params.e_ref,
            Observable::Clipped { .. } => 1.0,
        }
    }

    pub fn evaluate(&self, st: &FieldState, params: &ThermoParams) -> f64 {
        match self {
            Observable::Constant { value } => *value,
            Observable::Defect => Coordinate::Total { total: Total::Defect }.evaluate(st, params),
            Observable::Clipped { coordinate, scale } => (coordinate.evaluate(st, params) / scale).tanh(),
        }
    }

    /// Default library used when a config lists none.
    pub fn library() -> Vec<Observable> {
        let total = |t| Coordinate::Total { total: t };
        let mode = |c, k| Coordinate::Mode {
            component: c,
            mode: [k, 0],
            damping: 2.0,
        };
        vec![
            Observable::Defect,
            Observable::clipped(total(Total::Entropy), 1.0),
            Observable::clipped(mode(Component::Density, 1), 0.1),
            Observable::clipped(mode(Component::MomentumX, 1), 0.1),
            Observable::clipped(mode(Component::Entropy, 2), 0.1),
        ]
    }
}

/// `sum_i w_i G(U_i)`, summed in atom order.
pub fn expectation(obs: &Observable, sigma: &DiscreteMeasure, params: &ThermoParams) -> f64 {
    sigma
        .atoms()
        .iter()
        .map(|a| a.weight * obs.evaluate(&a.state, params))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Mesh, Primitive};

    fn params() -> ThermoParams {
        ThermoParams::new(1.4, f64::NEG_INFINITY, 1e-6, 10.0).unwrap()
    }

    fn wave(shift: f64) -> FieldState {
        FieldState::from_profile(Mesh::new_1d(32, 1.0).unwrap(), &params(), |x| {
            Primitive::new(1.0 + 0.2 * (3.0 * x[0] + shift).cos(), [0.0, 0.0], 1.0)
        })
    }

    #[test]
    fn constant_and_dirac() {
        let p = params();
        let d = DiscreteMeasure::dirac(wave(0.0), &p).unwrap();
        assert_eq!(expectation(&Observable::Constant { value: 2.5 }, &d, &p), 2.5);
        for obs in Observable::library() {
            assert_eq!(expectation(&obs, &d, &p), obs.evaluate(&wave(0.0), &p));
            assert!(obs.evaluate(&wave(0.0), &p).abs() <= obs.bound(&p));
        }
    }

    #[test]
    fn mixture_linearity() {
        let p = params();
        let a = DiscreteMeasure::dirac(wave(0.0), &p).unwrap();
        let b = DiscreteMeasure::new(vec![(0.3, wave(1.0)), (0.7, wave(2.0))], &p).unwrap();
        let m = DiscreteMeasure::mixture(&[(0.25, &a), (0.75, &b)]).unwrap();
        for obs in Observable::library() {
            let lhs = expectation(&obs, &m, &p);
            let rhs = 0.25 * expectation(&obs, &a, &p) + 0.75 * expectation(&obs, &b, &p);
            assert!((lhs - rhs).abs() < 1e-15, "{}", obs.id());
        }
    }

    #[test]
    fn mode_pairing_of_constant_density() {
        let p = params();
        let st = FieldState::from_profile(Mesh::new_1d(16, 2.0).unwrap(), &p, |_| {
            Primitive::new(1.5, [0.0, 0.0], 1.0)
        });
        let c0 = Coordinate::Mode {
            component: Component::Density,
            mode: [0, 0],
            damping: 0.0,
        };
        assert!((c0.evaluate(&st, &p) - 3.0).abs() < 1e-14);
        let c1 = Coordinate::Mode {
            component: Component::Density,
            mode: [1, 0],
            damping: 0.0,
        };
        assert!(c1.evaluate(&st, &p).abs() < 1e-14);
    }
}
