//! Normal magnetic curves `∇_T T = −qφT` on the S-space form `R^{2n+s}(−3s)`:
//! the model geometry, an RK4 integrator, a numerical Frenet apparatus, exact
//! closed-form solutions and the slant classification.

pub mod classify;
pub mod closed_form;
pub mod dynamics;
pub mod error;
pub mod fd;
pub mod frenet;
pub mod io;
pub mod model_space;
pub mod verify;

pub use classify::{
    check_circle_existence, classify_trajectory, invert_q, order_bound_curvatures, predict_class,
    predict_class_cosines, rho, Classification, CurveClass, InverseCase, InverseResult, Measured, Sign,
};
pub use closed_form::{CaseAParams, CaseBParams, ClosedFormParams};
pub use dynamics::{IntegratorConfig, MagneticSetup, Trajectory};
pub use error::{Error, Result};
pub use frenet::{frenet_apparatus, osculating_order, FrenetSeries};
pub use model_space::{ModelSpace, Point, SpaceSignature, Tangent};
