use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::solver::mesh::Mesh;
use crate::thermo::{self, ConservedState, Extended, ThermoParams, ENTROPY_FLOOR_MARGIN};

/// Density, velocity and pressure at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub vel: [f64; 2],
    pub p: f64,
}

impl Primitive {
    pub fn new(rho: f64, vel: [f64; 2], p: f64) -> Self {
        Primitive { rho, vel, p }
    }

    /// Primitive variables of a conserved state; vacuum maps to all zeros.
    pub fn from_conserved(st: &ConservedState, params: &ThermoParams) -> Primitive {
        if st.rho <= 0.0 {
            return Primitive::new(0.0, [0.0, 0.0], 0.0);
        }
        let p = thermo::pressure(st.rho, st.entropy, params).to_f64();
        Primitive::new(st.rho, [st.mom[0] / st.rho, st.mom[1] / st.rho], p)
    }

    pub fn to_conserved(&self, params: &ThermoParams) -> ConservedState {
        ConservedState::from_primitive(self.rho, self.vel, self.p, params)
    }
}

// 4-point Gauss-Legendre rule on [-1, 1].
const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Cell averages of `(rho, m, S)` on a mesh at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub mesh: Mesh,
    pub cells: Vec<ConservedState>,
    pub time: f64,
}

impl FieldState {
    pub fn new(mesh: Mesh, cells: Vec<ConservedState>, time: f64) -> Result<Self> {
        if cells.len() != mesh.len() {
            return Err(Error::input(format!(
                "field has {} cells, mesh has {}",
                cells.len(),
                mesh.len()
            )));
        }
        Ok(FieldState { mesh, cells, time })
    }

    pub fn uniform(mesh: Mesh, st: ConservedState) -> Self {
        FieldState {
            mesh,
            cells: vec![st; mesh.len()],
            time: 0.0,
        }
    }

    /// Cell averages of `(rho, m, S)` of a pointwise primitive profile,
    /// using a tensor 4-point Gauss rule per cell.
    pub fn from_profile(
        mesh: Mesh,
        params: &ThermoParams,
        profile: impl Fn([f64; 2]) -> Primitive,
    ) -> Self {
        let d = mesh.dim();
        let h = [mesh.spacing(0), mesh.spacing(1)];
        let cells = (0..mesh.len())
            .map(|idx| {
                let c = mesh.center(idx);
                let mut acc = [0.0; 4];
                let ny = if d == 2 { 4 } else { 1 };
                for qy in 0..ny {
                    let (y, wy) = if d == 2 {
                        (c[1] + 0.5 * h[1] * GAUSS_NODES[qy], 0.5 * GAUSS_WEIGHTS[qy])
                    } else {
                        (c[1], 1.0)
                    };
                    for qx in 0..4 {
                        let x = c[0] + 0.5 * h[0] * GAUSS_NODES[qx];
                        let w = 0.5 * GAUSS_WEIGHTS[qx] * wy;
                        let st = profile([x, y]).to_conserved(params).as_array();
                        for k in 0..4 {
                            acc[k] += w * st[k];
                        }
                    }
                }
                if d == 1 {
                    acc[2] = 0.0;
                }
                ConservedState::from_array(acc)
            })
            .collect();
        FieldState {
            mesh,
            cells,
            time: 0.0,
        }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.rho).sum::<f64>() * self.mesh.cell_volume()
    }

    /// Checks the pointwise state invariants, the entropy floor and the
    /// mass bound.
    pub fn validate(&self, params: &ThermoParams) -> Result<()> {
        for (i, c) in self.cells.iter().enumerate() {
            let arr = c.as_array();
            if arr.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("cell {i}: non-finite state")));
            }
            if c.rho < 0.0 {
                return Err(Error::domain(format!("cell {i}: negative density")));
            }
            if c.rho == 0.0 && (c.mom_sq() != 0.0 || c.entropy != 0.0) {
                return Err(Error::domain(format!(
                    "cell {i}: vacuum cell carries momentum or entropy"
                )));
            }
            if self.mesh.dim() == 1 && c.mom[1] != 0.0 {
                return Err(Error::domain(format!(
                    "cell {i}: transverse momentum on a 1-D mesh"
                )));
            }
            if c.entropy < params.s_floor * c.rho {
                return Err(Error::domain(format!(
                    "cell {i}: entropy {} below floor {} * rho",
                    c.entropy, params.s_floor
                )));
            }
        }
        let mass = self.total_mass();
        if mass < params.m_min {
            return Err(Error::domain(format!(
                "total mass {mass} below m_min {}",
                params.m_min
            )));
        }
        Ok(())
    }

    /// Phase-space membership: finite energy within the budget, entropy
    /// floor and minimal mass.
    pub fn in_phase_space(&self, params: &ThermoParams) -> bool {
        if self.validate(params).is_err() {
            return false;
        }
        let energy: Extended = self
            .cells
            .iter()
            .map(|c| thermo::total_energy(c, params))
            .sum::<Extended>()
            * self.mesh.cell_volume();
        energy <= Extended::Finite(params.e_ref)
    }

    /// Average of children onto the mesh coarsened `factor` times.
    pub fn restrict(&self, factor: usize) -> Result<FieldState> {
        if factor == 1 {
            return Ok(self.clone());
        }
        let d = self.mesh.dim();
        let mut coarse_cells = [1usize; 2];
        for a in 0..d {
            let n = self.mesh.n(a);
            if !n.is_multiple_of(factor) {
                return Err(Error::input(format!(
                    "axis {a}: {n} cells not divisible by {factor}"
                )));
            }
            coarse_cells[a] = n / factor;
        }
        let coarse = Mesh::new(&coarse_cells[..d], self.mesh.extent())?;
        let per = if d == 2 { factor * factor } else { factor };
        let w = 1.0 / per as f64;
        let mut cells = vec![ConservedState::VACUUM; coarse.len()];
        for (idx, cell) in cells.iter_mut().enumerate() {
            let [ci, cj] = coarse.coords(idx);
            let mut acc = [0.0; 4];
            let fy = if d == 2 { factor } else { 1 };
            for dj in 0..fy {
                for di in 0..factor {
                    let f = self.cells[self.mesh.index(ci * factor + di, cj * fy + dj)];
                    for (a, v) in acc.iter_mut().zip(f.as_array()) {
                        *a += v;
                    }
                }
            }
            *cell = ConservedState::from_array(acc.map(|v| v * w));
        }
        Ok(FieldState {
            mesh: coarse,
            cells,
            time: self.time,
        })
    }

    /// Piecewise-constant injection onto the mesh refined `factor` times.
    pub fn prolong(&self, factor: usize) -> FieldState {
        if factor == 1 {
            return self.clone();
        }
        let fine = self.mesh.refined(factor);
        let fy = if self.mesh.dim() == 2 { factor } else { 1 };
        let cells = (0..fine.len())
            .map(|idx| {
                let [i, j] = fine.coords(idx);
                self.cells[self.mesh.index(i / factor, j / fy)]
            })
            .collect();
        FieldState {
            mesh: fine,
            cells,
            time: self.time,
        }
    }

    /// Largest componentwise difference between two fields on the same mesh.
    pub fn max_abs_diff(&self, other: &FieldState) -> f64 {
        if self.mesh != other.mesh {
            return f64::INFINITY;
        }
        self.cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Bitwise equality of mesh and cell values (time ignored).
    pub fn bitwise_eq(&self, other: &FieldState) -> bool {
        self.mesh == other.mesh
            && self.cells.iter().zip(&other.cells).all(|(a, b)| {
                a.as_array()
                    .iter()
                    .zip(b.as_array().iter())
                    .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    /// Hash of the mesh and the exact bit patterns of the cell values.
    pub fn content_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.mesh.cells_per_axis().hash(&mut h);
        for e in self.mesh.extent() {
            e.to_bits().hash(&mut h);
        }
        for c in &self.cells {
            for v in c.as_array() {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

/// Minimal specific entropy over non-vacuum cells of all fields, minus a
/// small margin. `None` if every cell is vacuum.
pub fn entropy_floor_of<'a>(fields: impl IntoIterator<Item = &'a FieldState>) -> Option<f64> {
    let min = fields
        .into_iter()
        .flat_map(|f| f.cells.iter())
        .filter(|c| c.rho > 0.0)
        .map(|c| c.entropy / c.rho)
        .fold(f64::INFINITY, f64::min);
    min.is_finite().then_some(min - ENTROPY_FLOOR_MARGIN)
}
