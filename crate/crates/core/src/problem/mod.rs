//! Problem inputs and hypothesis checks: the source `f`, the affine data
//! `(A, b, c)` and exterior Dirichlet data.

mod affine;
mod exterior_spec;
mod source;
mod tabulated;
mod validate;

pub use affine::AffineData;
pub use exterior_spec::{holder_seminorm, BoundaryData, ExteriorSpec};
#[allow(unused_imports)]
pub(crate) use source::radial_tail_integral;
pub use source::{exterior_mass, ScalarFn, SourceField, VectorFn};
pub use tabulated::tabulated_source;
pub use validate::{normalize_source, spherical_average, validate_source, SamplingPlan, ValidationReport, Violation};
