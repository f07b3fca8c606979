//! Contact manifolds with global contact forms.

mod contact;
mod manifold;

pub use contact::{
    contact_field, field_residuals, solve_reeb, verify_contact_condition, verify_reeb_period,
    ContactConditionReport, ContactFrame, ReebPeriodCheck, SINGULAR_CONDITION,
};
pub use manifold::{CoordRange, CustomManifoldSpec, ManifoldModel, Point, ReebPeriod, SpatialGrid};
