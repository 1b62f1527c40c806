//! Learning-rate schedules viewed as gradient weightings.
//!
//! The crate turns three ideas into executable, tested code:
//!
//! 1. **A weight-schedule calculus** ([`schedule`], [`represent`]): any
//!    positive per-step weighting induces a multiplier schedule via
//!    `eta_t = w_t * s_{t+1} / s_1`, uniform weights induce linear decay,
//!    and any nonnegative schedule can be represented by such a weighting
//!    (recovered with extended-precision arithmetic).
//! 2. **Norm-adaptive refinement** ([`refine`]): observed gradient-norm
//!    logs are median-filtered and inverted into weights, producing a
//!    schedule tailored to the optimization trace, together with the
//!    closed-form optimal weights for known norms.
//! 3. **Last-iterate suboptimality bounds** ([`bounds`]) and a small
//!    convex laboratory ([`lab`]) that checks the bounds, the weighted
//!    regret identity, and the schedule equivalences on concrete problems.
//!
//! The [`io`] and [`plot`] modules supply the CSV/JSON interchange formats
//! and deterministic SVG rendering used by the `schedkit` binary.

pub mod bounds;
pub mod error;
pub mod io;
pub mod lab;
pub mod plot;
pub mod refine;
pub mod represent;
pub mod schedule;

pub use error::{Error, Result};
pub use schedule::{
    apply_warmup, fit_poly, make_schedule, weights_to_schedule, PolyFit, Schedule, ScheduleKind,
    WeightSequence,
};
