//! Statistical solutions as push-forwards of finite atomic measures under
//! the selected solution map.

pub mod measure;
pub mod observable;
pub mod pipeline;
pub mod sampler;

pub use measure::{Atom, DiscreteMeasure};
pub use observable::{expectation, Component, Coordinate, Observable, Total};
pub use pipeline::{
    check_semigroup, defect_expectation_series, observable_series, pushforward, IntervalOutcome,
    Pipeline, SemigroupReport,
};
pub use sampler::{sample_initial, SamplerSpec};
