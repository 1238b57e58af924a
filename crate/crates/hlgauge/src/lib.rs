//! Anisotropic mixed `ℓ_p` norms, summing-exponent schedules, and
//! multilinear operator-norm estimation on `ℓ_p` balls.
//!
//! The crate is layered:
//! - [`exponents`] and [`schedules`]: exact rational exponent arithmetic.
//! - [`scalar`], [`accum`], [`tensor`], [`mixed`]: floating-point data layer
//!   with compensated summation and mixed-norm evaluation.
//! - [`duality`], [`mform`]: Hölder duality, weak norms, and operator-norm
//!   estimation for multilinear forms.
//! - [`experiments`]: reproducible numerical verification runs with
//!   canonical reports.

pub mod accum;
pub mod duality;
pub mod experiments;
pub mod exponents;
pub mod mform;
pub mod mixed;
pub mod numfmt;
pub mod scalar;
pub mod schedules;
pub mod tensor;

pub use duality::{
    dual_align, weak_p_norm, weak_p_norm_basis, AlignedVector, DualityError, ExactPower,
    VectorSequence, WeakNormEstimate, WeakNormOptions,
};
pub use experiments::{
    compare_schedules, hl_verify, inclusion_demo, mix_seed, regularity_probe, ExperimentConfig,
    ExperimentError, ExperimentKind, ExperimentReport, ReportFormat, ScheduleComparison,
    TabulatedKernel, TensorFamily, TrialOutcome, TrialRecord,
};
pub use exponents::{Exponent, ExponentError, ExponentVector};
pub use mform::{
    norm_alternating, norm_sign_enum, norm_svd_bilinear, summing_norm_probe, AscentOptions,
    EstimateMethod, FormData, MformError, MultilinearForm, NormEstimate, SequenceTuple,
    SummingProbeOptions, SummingProbeResult, SvdScalar,
};
pub use mixed::{minkowski_gap, mixed_norm, norm_monotonicity_gap, MixedNormSpec, NormError};
pub use scalar::{Scalar, ScalarField};
pub use tensor::{MultiIndexTensor, TensorData, TensorError, TensorIoError};
pub use schedules::{
    anps_min_schedule, bhhl_admissible, dsp_exponent, schedule_bayart, schedule_hl,
    schedule_inclusion, schedule_pellegrino, BhhlResult, Condition, ScalarScheduleResult,
    ScheduleResult,
};
