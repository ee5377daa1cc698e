//! Cross-task transfer of an EEG movement-intention detector.
//!
//! A detector for the lateralized readiness potential (LRP) is trained on
//! EEG windows recorded during bilateral reaching movements and applied to
//! unilateral movements of the right arm. The crate covers the whole chain:
//!
//! * [`ingest`]: BrainVision triplets, motion-capture CSV, trigger-based
//!   synchronisation and a checksummed cache container.
//! * [`onset`]: physical movement onset from hand trajectories.
//! * [`preprocess`]: onset-aligned sliding windows, standardisation,
//!   decimation and FFT band-pass.
//! * [`model`]: xDAWN spatial filter, time-domain features, L1-regularised
//!   linear SVM with grid search, Platt calibration.
//! * [`eval`]: change-point relabelling, balanced accuracy and the
//!   condition × channel-set study harness.
//! * [`synth`]: seeded synthetic sessions with planted LRPs, used as the
//!   oracle for the test suites.

pub mod channels;
pub mod domain;
pub mod error;
pub mod eval;
pub mod filter;
pub mod ingest;
pub mod model;
pub mod onset;
pub mod preprocess;
pub mod synth;

pub use channels::{make_channel_set, ChannelRegistry, ChannelSet, ChannelSetKind};
pub use domain::{
    validate_trial, ConditionId, Label, Marker, MovementCondition, RawRecording, StudyCondition,
    Trial, TrialRef,
};
pub use error::{Error, Result};
pub use ingest::{MotionTrace, SessionData};
pub use model::{PipelineModel, SvmFormulation};
pub use preprocess::{PreparedTrial, WindowGrid};
