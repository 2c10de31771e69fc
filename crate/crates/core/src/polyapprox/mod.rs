//! Polynomial spaces `P_{k-1}`, the projectors `P_Q`, and local best
//! approximations in `L^u(S)`.

mod approx;
mod holder;
mod polynomial;
mod projector;

pub use approx::{
    best_approx, weighted_lu, ApproxResult, IRLS_MAX_ITERATIONS, IRLS_RELATIVE_TOLERANCE,
    IRLS_SMOOTHING, L1_TIE_BREAK, L1_WARM_START_ITERATIONS, ROUNDING_FLOOR,
};
pub(crate) use approx::{best_approx_on, check_exponent, fit_points};
pub use holder::reverse_holder_ratio;
pub use polynomial::{basis_size, multi_indices, Frame, Polynomial};
pub use projector::{apply_projector, make_projector, Projector, POINTS_PER_BASIS, RANK_TOLERANCE};
pub(crate) use projector::local_frame;
