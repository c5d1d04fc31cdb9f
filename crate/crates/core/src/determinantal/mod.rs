//! The `beta = 2` determinantal structure of the elliptic Dyson model:
//! entire functions, martingale functions, the spatio-temporal correlation
//! kernel, correlation functions, Fredholm expansions of generating
//! functions, offset decompositions and the contour-integral kernel for
//! configurations with multiple points.

mod config;
mod conjecture;
mod expectation;
mod fredholm;
mod kernel;
mod martingale;
mod offsets;

pub use config::{PointConfiguration, QuadratureSettings, SpaceTimePoint};
pub use martingale::{
    det_martingale, mart_fn, mart_fn_series, mart_vector, mdr_ratio_check, phi_entire, phi_entire_transformed,
    MdrCheck,
};
pub use kernel::{
    correlation_fn, correlation_kernel, gram_singular_ratio, kernel_grid, kernel_trace, martingale_transport_residual,
    one_point_density, KernelGrid,
};
pub use conjecture::{conjecture_kernel, ContourSettings, GeneralConfiguration};
pub use expectation::{
    check_configuration_observable, dmr_expectation, observable_flags, ConfigurationFn, Observable, ObservableFlags,
    Weight,
};
pub use fredholm::{generating_fn, MultiplicativeObservable, MAX_PARTICLES, MAX_TIMES};
pub use offsets::{offset_decomposition, offset_measure, OffsetDecomposition};
