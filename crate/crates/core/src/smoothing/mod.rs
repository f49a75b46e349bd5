//! Adaptive label smoothing: pacing schedules, label refinement and the
//! plain / uniform-smoothing / adaptive-smoothing objectives.

mod loss;
mod pacing;
mod refine;

pub use loss::{
    kl_to_uniform, loss_and_grads, normalize_or_uniform, smooth_label, LossBreakdown, LossConfig, LossMode,
    LossOutput, SmoothMode, SoftTarget, LOG_CLAMP,
};
pub use pacing::{PacingKind, PacingSchedule};
pub use refine::{refine_soft_label, softmax, RefinementMatrix, REFINEMENT_INIT_STD};
