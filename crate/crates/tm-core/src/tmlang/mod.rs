//! The textual TM language: dotted paths for flow and containment, `-->`
//! for triggering.
//!
//! ```text
//! Flow.Transfer.input.receive.arrive.release.transfer.output
//! Rooster.sound.create-->Sun.rising.create.
//! ```
//!
//! `parse` turns text into a surface document plus the merged static model;
//! `serialize` emits canonical text that parses back to an isomorphic model.

mod parser;
mod serializer;

use serde::{Deserialize, Serialize};

pub use parser::{parse, ParseError, ParseErrorKind};
pub use serializer::{reparse, serialize, SerializeError};

use crate::model::StaticModel;
use std::collections::BTreeSet;

/// Byte range of a token inside the parsed input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    /// Index of the statement in the document.
    pub statement: usize,
    /// Byte offset of the first byte, within the whole input.
    pub start: usize,
    /// Byte offset one past the last byte.
    pub end: usize,
}

/// One dotted segment of a path, as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmSegment {
    pub text: String,
    pub span: SourceSpan,
}

/// A dotted path; `has_header` records a leading `Flow.`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmPath {
    pub has_header: bool,
    pub segments: Vec<TmSegment>,
}

/// A parsed statement: a plain flow path, or paths chained by `-->`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TmStatement {
    Flow(TmPath),
    Trigger(Vec<TmPath>),
}

/// The surface form of a parsed document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TmDocument {
    pub statements: Vec<TmStatement>,
}

/// Id-independent fingerprint of a model: thimacs keyed by lowercase name
/// path, stages by (owner path, kind, direction), arcs by endpoint keys.
/// Two models with equal canonical forms are isomorphic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub thimacs: BTreeSet<String>,
    pub stages: BTreeSet<String>,
    pub arcs: BTreeSet<(String, String, String)>,
}

/// Computes the id-independent fingerprint used for isomorphism checks.
pub fn canonical_form(model: &StaticModel) -> CanonicalForm {
    let thimacs = model
        .thimacs()
        .map(|t| model.thimac_path(t.id).to_ascii_lowercase())
        .collect();
    let stages = model
        .stages()
        .map(|s| model.stage_path(s.id).to_ascii_lowercase())
        .collect();
    let arcs = model
        .arcs()
        .map(|a| {
            (
                format!("{:?}", a.kind).to_ascii_lowercase(),
                model.stage_path(a.from).to_ascii_lowercase(),
                model.stage_path(a.to).to_ascii_lowercase(),
            )
        })
        .collect();
    CanonicalForm {
        thimacs,
        stages,
        arcs,
    }
}
