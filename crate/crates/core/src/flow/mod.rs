//! Contact isotopies generated by time-dependent Hamiltonians.

mod integrator;
mod isotopy;
mod maps;

pub use integrator::{Dopri5, IntegratorStats};
pub use isotopy::{
    flow_between, flow_with_variations, integrate_isotopy, integrate_isotopy_sampled, monodromy,
    monodromy_fd, pullback_pair, pullback_residual_along, reeb_flow, reeb_flow_tol,
    to_frame_covector, to_frame_jacobian, FlowEnd, IsotopyTrace, VariationalEnd, TRACE_INTERVALS,
};
pub use maps::{
    reeb_differential, ComposedMap, ContactMap, FlowMap, IdentityMap, MapDifferential, ReebMap,
};
