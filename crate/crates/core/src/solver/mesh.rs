use crate::error::{Error, Result};

/// Minimum number of cells along each active axis.
pub const MIN_CELLS: usize = 4;

/// Uniform Cartesian mesh on the box `[0, Lx] (x [0, Ly])`.
///
/// Cells are stored row-major with `x` fastest. A one-dimensional mesh has
/// a single, unit-length "row" in `y` so that cell volumes are `dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    dim: usize,
    cells: [usize; 2],
    extent: [f64; 2],
}

impl Mesh {
    pub fn new_1d(nx: usize, lx: f64) -> Result<Self> {
        Self::new(&[nx], &[lx])
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(&[nx, ny], &[lx, ly])
    }

    pub fn new(cells: &[usize], extent: &[f64]) -> Result<Self> {
        let dim = cells.len();
        if !(1..=2).contains(&dim) || extent.len() != dim {
            return Err(Error::input(format!(
                "mesh needs 1 or 2 axes with matching extents, got {} cells / {} extents",
                cells.len(),
                extent.len()
            )));
        }
        let mut c = [1usize; 2];
        let mut e = [1.0f64; 2];
        for a in 0..dim {
            if cells[a] < MIN_CELLS {
                return Err(Error::input(format!(
                    "axis {a}: at least {MIN_CELLS} cells required, got {}",
                    cells[a]
                )));
            }
            if !(extent[a] > 0.0) || !extent[a].is_finite() {
                return Err(Error::input(format!(
                    "axis {a}: extent must be positive, got {}",
                    extent[a]
                )));
            }
            c[a] = cells[a];
            e[a] = extent[a];
        }
        Ok(Mesh {
            dim,
            cells: c,
            extent: e,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cell counts of the active axes.
    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent[..self.dim]
    }

    pub fn n(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.cells[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.extent[..self.dim].iter().product()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }

    pub fn coords(&self, idx: usize) -> [usize; 2] {
        [idx % self.cells[0], idx / self.cells[0]]
    }

    /// Cell-centre coordinates; the unused `y` of a 1-D mesh is `0.5`.
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.coords(idx);
        [
            (i as f64 + 0.5) * self.spacing(0),
            (j as f64 + 0.5) * self.spacing(1),
        ]
    }

    /// Same box with every active axis split `factor` times finer.
    pub fn refined(&self, factor: usize) -> Mesh {
        let mut m = *self;
        for a in 0..self.dim {
            m.cells[a] *= factor;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_1d() {
        let m = Mesh::new_1d(8, 2.0).unwrap();
        assert_eq!(m.len(), 8);
        assert_eq!(m.cell_volume(), 0.25);
        assert_eq!(m.volume(), 2.0);
        assert_eq!(m.center(0), [0.125, 0.5]);
    }

    #[test]
    fn geometry_2d() {
        let m = Mesh::new_2d(4, 5, 1.0, 2.0).unwrap();
        assert_eq!(m.len(), 20);
        assert_eq!(m.coords(m.index(3, 2)), [3, 2]);
        assert!((m.cell_volume() - 0.1).abs() < 1e-15);
        assert_eq!(m.refined(2).cells_per_axis(), &[8, 10]);
    }

    #[test]
    fn rejects_small_or_degenerate() {
        assert!(Mesh::new_1d(3, 1.0).is_err());
        assert!(Mesh::new_1d(10, 0.0).is_err());
        assert!(Mesh::new(&[4, 4, 4], &[1.0, 1.0, 1.0]).is_err());
    }
}
