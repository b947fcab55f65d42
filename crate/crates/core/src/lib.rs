//! Classical remote-photoplethysmography toolkit: pulse extraction from
//! facial colour traces, heart-rate estimation, evaluation metrics, a
//! synthetic ground-truth generator, dataset auditing and a benchmark
//! harness.

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod dataset;
pub mod error;
pub mod hr;
pub mod methods;
pub mod metrics;
pub mod preprocess;
pub mod signal;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use hr::{hr_fft, hr_peaks, HrMethod, HrSeries};
pub use methods::{run_method, MethodConfig, MethodId, MethodInput};
pub use metrics::{BlandAltman, MetricKind, MetricSet};
pub use synth::SynthSpec;
pub use trace::{BvpSignal, ChannelSpace, FrameSequence, Roi, RgbTrace, StMap};
