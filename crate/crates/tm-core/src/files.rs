//! On-disk companions to a model file: event declarations, traces, source
//! schedules, and behavior sets.
//!
//! Events file: `[{"label": "E1", "stages": [0, 1]}, ...]`, stage ids
//! referencing the model file. Trace file: `{"slots": [["E1","E2"],
//! ["E3"]]}`, events by label. Sources file: `{"sources": [{"stage": 0,
//! "tick": 0}], "max_ticks": 20}`. Behavior sets are lists of the trace
//! shape, canonically ordered.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{Chronology, ChronologyError};
use crate::dynamics::{DynamicModel, DynamicsError, EventId};
use crate::model::{StageId, StaticModel};
use crate::simulator::SpawnPoint;

#[derive(Debug, Clone, Error)]
pub enum FileError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("unknown event label {0:?}")]
    UnknownLabel(String),
    #[error(transparent)]
    Chronology(#[from] ChronologyError),
}

#[derive(Serialize, Deserialize)]
struct EventEntry {
    label: String,
    stages: Vec<u32>,
}

/// Reads an events file and declares its events on the model.
pub fn load_events(text: &str, model: StaticModel) -> Result<DynamicModel, FileError> {
    let entries: Vec<EventEntry> =
        serde_json::from_str(text).map_err(|e| FileError::Malformed(e.to_string()))?;
    let mut dyn_model = DynamicModel::new(model);
    for entry in entries {
        dyn_model.define_event(entry.label, entry.stages.into_iter().map(StageId))?;
    }
    Ok(dyn_model)
}

#[derive(Serialize, Deserialize)]
struct TraceDocument {
    slots: Vec<Vec<String>>,
}

/// Reads a trace file against a dynamic model's labels.
pub fn load_trace(text: &str, dyn_model: &DynamicModel) -> Result<Chronology, FileError> {
    let doc: TraceDocument =
        serde_json::from_str(text).map_err(|e| FileError::Malformed(e.to_string()))?;
    labels_to_chronology(&doc.slots, dyn_model)
}

pub fn labels_to_chronology(
    slots: &[Vec<String>],
    dyn_model: &DynamicModel,
) -> Result<Chronology, FileError> {
    let mut resolved = Vec::new();
    for slot in slots {
        let mut set = std::collections::BTreeSet::new();
        for label in slot {
            let id = dyn_model
                .find_by_label(label)
                .ok_or_else(|| FileError::UnknownLabel(label.clone()))?;
            set.insert(id);
        }
        resolved.push(set);
    }
    Ok(Chronology::new(resolved)?)
}

/// Slot-by-slot labels of a chronology, each slot sorted.
pub fn chronology_labels(chron: &Chronology, dyn_model: &DynamicModel) -> Vec<Vec<String>> {
    chron
        .slots()
        .iter()
        .map(|slot| {
            let mut labels: Vec<String> = slot
                .iter()
                .map(|&e| dyn_model.label(e).to_string())
                .collect();
            labels.sort();
            labels
        })
        .collect()
}

/// Serializes one chronology as a trace document.
pub fn trace_document(chron: &Chronology, dyn_model: &DynamicModel) -> serde_json::Value {
    serde_json::json!({ "slots": chronology_labels(chron, dyn_model) })
}

/// Canonical order for rendered behaviors: slot count, then event count,
/// then slot-wise label comparison.
pub fn sort_behaviors(behaviors: &mut [Vec<Vec<String>>]) {
    behaviors.sort_by(|a, b| {
        let events = |c: &[Vec<String>]| c.iter().map(|s| s.len()).sum::<usize>();
        a.len()
            .cmp(&b.len())
            .then_with(|| events(a).cmp(&events(b)))
            .then_with(|| a.cmp(b))
    });
}

/// Renders a behavior set as its canonical JSON list.
pub fn behaviors_document(
    behaviors: impl IntoIterator<Item = Chronology>,
    dyn_model: &DynamicModel,
) -> serde_json::Value {
    let mut rendered: Vec<Vec<Vec<String>>> = behaviors
        .into_iter()
        .map(|c| chronology_labels(&c, dyn_model))
        .collect();
    sort_behaviors(&mut rendered);
    serde_json::json!(rendered
        .into_iter()
        .map(|slots| serde_json::json!({ "slots": slots }))
        .collect::<Vec<_>>())
}

/// Reads a behavior-set file back into label slots.
pub fn load_behaviors(text: &str) -> Result<Vec<Vec<Vec<String>>>, FileError> {
    let docs: Vec<TraceDocument> =
        serde_json::from_str(text).map_err(|e| FileError::Malformed(e.to_string()))?;
    Ok(docs.into_iter().map(|d| d.slots).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourcesFile {
    pub sources: Vec<SourceEntry>,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SourceEntry {
    pub stage: u32,
    pub tick: usize,
}

fn default_max_ticks() -> usize {
    50
}

pub fn load_sources(text: &str) -> Result<SourcesFile, FileError> {
    serde_json::from_str(text).map_err(|e| FileError::Malformed(e.to_string()))
}

impl SourcesFile {
    pub fn spawn_points(&self) -> Vec<SpawnPoint> {
        self.sources
            .iter()
            .map(|s| SpawnPoint {
                stage: StageId(s.stage),
                tick: s.tick,
            })
            .collect()
    }
}

/// Resolves an event id set from a dynamic model for enumeration.
pub fn all_event_ids(dyn_model: &DynamicModel) -> std::collections::BTreeSet<EventId> {
    dyn_model.event_ids()
}
