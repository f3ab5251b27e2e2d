//! Self-calibrating intent inference.
//!
//! The engine identifies which digit a user is entering through an interface
//! whose action-to-meaning mapping (which button, map region, sketch or sound
//! means "yellow" and which means "grey") is never told to the machine. Every
//! candidate digit induces its own labeling of the user's actions; the digit
//! whose labeling stays consistent is the one being entered.
//!
//! Module map:
//!
//! - [`model`]: domain types and session construction.
//! - [`inference`]: hypothesis labeling, elimination, decisions, label
//!   propagation, the coloring policy and the per-step engine loop.
//! - [`consistency`]: RBF-kernel SVM, cross-validated consistency scores and
//!   the cluster-first baseline.
//! - [`signals`]: sketch features, 2-D projection and the audio pipeline.
//! - [`explain`]: per-digit dashboard panels.

pub mod consistency;
pub mod error;
pub mod explain;
pub mod inference;
pub mod model;
pub mod signals;

pub use error::{Error, Result};
pub use inference::Decision;
pub use model::{
    ActionSignal, ColoringPattern, EngineConfig, Gamma, HypothesisDataset, InteractionEvent,
    LabeledSignal, Meaning, Mode, Projection, Provenance, SessionState, MAX_BUTTONS, NUM_INTENTS, NUM_MEANINGS,
    PIN_LENGTH,
};
