#![allow(dead_code)]

pub mod riemann;

use eulerlab::solver::{FieldState, Mesh, Primitive};
use eulerlab::thermo::ThermoParams;

pub const GAMMA: f64 = 1.4;

pub fn sod_field(cells: usize) -> (FieldState, ThermoParams) {
    let probe = ThermoParams::new(GAMMA, f64::NEG_INFINITY, 1e-6, 1.0).unwrap();
    let mesh = Mesh::new_1d(cells, 1.0).unwrap();
    let field = FieldState::from_profile(mesh, &probe, |x| {
        if x[0] < 0.5 {
            Primitive::new(1.0, [0.0, 0.0], 1.0)
        } else {
            Primitive::new(0.125, [0.0, 0.0], 0.1)
        }
    });
    let e = eulerlab::diagnostics::totals(&field, &probe).energy.to_f64();
    (field, probe.with_e_ref(e).unwrap())
}

/// L1 distance of the density to the exact Sod solution at time `t`.
pub fn sod_l1_error(st: &FieldState, t: f64) -> f64 {
    let exact = riemann::sod();
    let h = st.mesh.spacing(0);
    st.cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let a = i as f64 * h;
            (c.rho - exact.density_average(a, a + h, 0.5, t, 20)).abs() * h
        })
        .sum()
}
