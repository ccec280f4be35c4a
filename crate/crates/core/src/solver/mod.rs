//! Finite-volume integrator for the Euler system in a closed box with
//! impermeable walls.
//!
//! Cell averages of `(rho, m, E)` are advanced conservatively; the total
//! entropy `S` is recovered pointwise after every update. First-order
//! Rusanov is the reference dissipative scheme; HLL and MUSCL variants
//! exist to populate candidate families.

pub mod field;
pub mod flux;
pub mod mesh;
pub mod run;
pub mod scheme;

pub use field::{entropy_floor_of, FieldState, Primitive};
pub use flux::FluxKind;
pub use mesh::Mesh;
pub use run::{run, run_refined, Schedule, Seam, SeriesRecord, Trajectory};
pub use scheme::{advance, max_wave_speed, stable_dt, step, wall_fluxes, SchemeConfig, StepOutput};
