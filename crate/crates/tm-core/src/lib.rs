//! Thinging Machine (TM) conceptual models as data.
//!
//! A TM model describes a system at three levels: a static graph of
//! thimacs, stages, and arcs; a dynamic model that picks out events as
//! regions of that graph; and a behavioral level, the chronologies of
//! events the static structure permits. Flow arcs order the motion of
//! things through stages; trigger arcs are causal links that start new
//! flows. Both become constraints on when events may happen, so the static
//! description rules some orderings out before any behavior is written
//! down.
//!
//! The crate provides:
//!
//! * [`model`] — static models and structural legality,
//! * [`validate`] — diagnostics over a static model,
//! * [`tmlang`] — the textual notation (dots and `-->`),
//! * [`json`] — canonical JSON interchange,
//! * [`dynamics`] — events over regions and the event graph,
//! * [`behavior`] — chronology constraints, enumeration, trace checking,
//! * [`simulator`] — bounded token-flow execution,
//! * [`dot`] — Graphviz export.

pub mod behavior;
pub mod dot;
pub mod dynamics;
pub mod files;
pub mod json;
pub mod model;
pub mod simulator;
pub mod tmlang;
pub mod validate;

pub use model::{
    Arc, ArcId, ArcKind, Direction, ModelError, Stage, StageId, StageKind, StaticModel, Thimac,
    ThimacId,
};
pub use validate::{validate_model, Diagnostic, DiagnosticCode, Severity};
