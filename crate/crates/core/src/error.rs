use alloc::string::String;
use core::fmt;

/// Errors produced by the core engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Mesh has no triangles.
    EmptyGeometry,
    /// Inside/outside is undefined because the mesh is not watertight.
    SignUndefined,
    /// The two 6D columns are parallel or zero and cannot be orthonormalized.
    DegenerateRotation6d,
    /// An array did not have the expected length; `field` names the offender.
    ShapeMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    /// A grasp reference must mark at least one hand as active.
    NoActiveHand,
    EmptyDataset,
    /// Training aborted on a non-finite loss; carries step diagnostics.
    NonFiniteLoss { step: usize },
    /// The scripted object cannot be reached by the hand.
    InfeasibleScript(String),
    /// Resampling requires at least 2 input frames and `target >= 2`.
    ResampleLength { input: usize, target: usize },
    /// Sample diversity requires at least two samples per condition.
    SingleSamplePerCondition,
    /// A metric was asked to aggregate over an empty class or batch.
    EmptyBatch,
    /// The action classifier has not been fitted.
    UnfittedClassifier,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyGeometry => write!(f, "empty geometry"),
            Error::SignUndefined => write!(f, "sign undefined"),
            Error::DegenerateRotation6d => write!(f, "degenerate 6D rotation"),
            Error::ShapeMismatch {
                field,
                expected,
                got,
            } => write!(f, "shape mismatch in `{field}`: expected {expected}, got {got}"),
            Error::NoActiveHand => write!(f, "grasp reference has no active hand"),
            Error::EmptyDataset => write!(f, "empty dataset"),
            Error::NonFiniteLoss { step } => {
                write!(f, "non-finite training loss at step {step}")
            }
            Error::InfeasibleScript(why) => write!(f, "infeasible script: {why}"),
            Error::ResampleLength { input, target } => write!(
                f,
                "cannot resample {input} frames to {target}: need >= 2 on both sides"
            ),
            Error::SingleSamplePerCondition => {
                write!(f, "sample diversity needs >= 2 samples per condition")
            }
            Error::EmptyBatch => write!(f, "empty batch"),
            Error::UnfittedClassifier => write!(f, "unfitted classifier"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
