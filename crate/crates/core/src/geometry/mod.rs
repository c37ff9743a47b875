//! Discrete geometric certificates for sets and value functions on grids.

mod attainable;
mod certificate;
mod formulas;
mod hypo;
mod regularity;
mod sets;

pub use attainable::{
    certify_attainable_inner_ball, AttainableOptions, AttainableReport, InnerBallRecord, TransportCheck, KEY_INEQUALITY_TOL,
};
pub use certificate::{check_realized_by_ball, SphereCertificate};
pub use hypo::{
    backtrack_to_target, certify_hypograph_at, certify_hypograph_exterior_sphere, sample_indices, HypoOptions, HypoRecord,
};
pub use formulas::{curvature_bounds, rho_T_of, CurvatureBounds, R_of_T};
pub use regularity::{
    discretization_slack, local_lipschitz, test_lipschitz_sampling, test_semiconcavity, LipschitzReport,
    SemiconcavityReport,
};
pub use sets::{check_inner_ball, hausdorff_distance, indicator_mask, target_boundary_points, InnerBallReport};
