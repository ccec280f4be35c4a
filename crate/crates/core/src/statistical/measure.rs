use crate::error::{Error, Result};
use crate::solver::FieldState;
use crate::statistical::sampler::SamplerSpec;
use crate::thermo::ThermoParams;

/// Tolerance on the total weight of a probability measure.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Atom {
    pub weight: f64,
    pub state: FieldState,
    /// Set when the pipeline failed on this atom; `state` is then the last
    /// state reached.
    pub failure: Option<String>,
}

/// Finite convex combination of Dirac masses on the phase space.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
    /// Sampler and seed the atoms were drawn with, if any.
    pub provenance: Option<(SamplerSpec, u64)>,
}

impl DiscreteMeasure {
    /// Checks the weights and that every atom lies in the phase space.
    pub fn new(atoms: Vec<(f64, FieldState)>, params: &ThermoParams) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::input("measure needs at least one atom"));
        }
        if atoms.iter().any(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::input("atom weights must be nonnegative"));
        }
        let total: f64 = atoms.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::input(format!("atom weights sum to {total}, not 1")));
        }
        for (i, (_, st)) in atoms.iter().enumerate() {
            st.validate(params)
                .map_err(|e| Error::input(format!("atom {i}: {e}")))?;
            if !st.in_phase_space(params) {
                return Err(Error::input(format!(
                    "atom {i}: total energy exceeds the budget {}",
                    params.e_ref
                )));
            }
        }
        Ok(Self::from_atoms_unchecked(atoms))
    }

    pub fn dirac(state: FieldState, params: &ThermoParams) -> Result<Self> {
        Self::new(vec![(1.0, state)], params)
    }

    pub(crate) fn from_atoms_unchecked(atoms: Vec<(f64, FieldState)>) -> Self {
        DiscreteMeasure {
            atoms: atoms
                .into_iter()
                .map(|(weight, state)| Atom {
                    weight,
                    state,
                    failure: None,
                })
                .collect(),
            provenance: None,
        }
    }

    pub(crate) fn from_parts(atoms: Vec<Atom>, provenance: Option<(SamplerSpec, u64)>) -> Self {
        DiscreteMeasure { atoms, provenance }
    }

    /// `sum_i l_i sigma_i` for convex coefficients `l_i`; atoms are kept
    /// separate, in order.
    pub fn mixture(parts: &[(f64, &DiscreteMeasure)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::input("empty mixture"));
        }
        if parts.iter().any(|(l, _)| !(*l >= 0.0)) {
            return Err(Error::input("mixture coefficients must be nonnegative"));
        }
        let total: f64 = parts.iter().map(|(l, _)| l).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::input(format!("mixture coefficients sum to {total}, not 1")));
        }
        let atoms = parts
            .iter()
            .flat_map(|(l, m)| {
                m.atoms.iter().map(move |a| Atom {
                    weight: l * a.weight,
                    ..a.clone()
                })
            })
            .collect();
        Ok(DiscreteMeasure {
            atoms,
            provenance: None,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    /// No atom carries a pipeline failure.
    pub fn is_complete(&self) -> bool {
        self.atoms.iter().all(|a| a.failure.is_none())
    }

    /// Same weights and bitwise identical atom states, in order.
    pub fn bitwise_eq(&self, other: &DiscreteMeasure) -> bool {
        self.atoms.len() == other.atoms.len()
            && self
                .atoms
                .iter()
                .zip(&other.atoms)
                .all(|(a, b)| a.weight.to_bits() == b.weight.to_bits() && a.state.bitwise_eq(&b.state))
    }

    /// Largest state difference between corresponding atoms.
    pub fn max_state_diff(&self, other: &DiscreteMeasure) -> f64 {
        if self.atoms.len() != other.atoms.len() {
            return f64::INFINITY;
        }
        self.atoms
            .iter()
            .zip(&other.atoms)
            .map(|(a, b)| a.state.max_abs_diff(&b.state))
            .fold(0.0, f64::max)
    }
}
