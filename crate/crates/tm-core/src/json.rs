//! Canonical JSON interchange for static models.
//!
//! Output is bit-exact: compact, keys in a fixed order (`thimacs`, `stages`,
//! `arcs` at the top; `id`/`name`/`parent`, `id`/`owner`/`kind`/`direction`,
//! `id`/`kind`/`from`/`to` inside), entries sorted by id. Reading back what
//! was written reproduces the model exactly, ids included.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Arc, ArcId, ArcKind, Direction, Stage, StageId, StageKind, StaticModel, Thimac, ThimacId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema error at {path}: {detail}")]
pub struct SchemaError {
    /// JSON-pointer-style path to the offending value.
    pub path: String,
    pub detail: String,
}

impl SchemaError {
    fn new(path: impl Into<String>, detail: impl Into<String>) -> SchemaError {
        SchemaError {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ThimacRecord {
    id: u32,
    name: Option<String>,
    parent: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct StageRecord {
    id: u32,
    owner: u32,
    kind: StageKind,
    direction: Option<Direction>,
}

#[derive(Serialize, Deserialize)]
struct ArcRecord {
    id: u32,
    kind: ArcKind,
    from: u32,
    to: u32,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    thimacs: Vec<ThimacRecord>,
    stages: Vec<StageRecord>,
    arcs: Vec<ArcRecord>,
}

/// Serializes a model to its canonical JSON form.
pub fn to_json(model: &StaticModel) -> String {
    let doc = ModelDocument {
        thimacs: model
            .thimacs()
            .map(|t| ThimacRecord {
                id: t.id.0,
                name: t.name.clone(),
                parent: t.parent.map(|p| p.0),
            })
            .collect(),
        stages: model
            .stages()
            .map(|s| StageRecord {
                id: s.id.0,
                owner: s.owner.0,
                kind: s.kind,
                direction: s.direction,
            })
            .collect(),
        arcs: model
            .arcs()
            .map(|a| ArcRecord {
                id: a.id.0,
                kind: a.kind,
                from: a.from.0,
                to: a.to.0,
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("model document always serializes")
}

/// Reads a model from interchange JSON, checking that ids are unique and
/// every reference resolves.
pub fn from_json(text: &str) -> Result<StaticModel, SchemaError> {
    let doc: ModelDocument = serde_json::from_str(text)
        .map_err(|e| SchemaError::new("/", e.to_string()))?;

    let mut model = StaticModel::new();
    for (i, t) in doc.thimacs.iter().enumerate() {
        if model.thimac(ThimacId(t.id)).is_some() {
            return Err(SchemaError::new(
                format!("/thimacs/{i}/id"),
                format!("duplicate thimac id {}", t.id),
            ));
        }
        model.insert_raw_thimac(Thimac {
            id: ThimacId(t.id),
            name: t.name.clone(),
            parent: t.parent.map(ThimacId),
        });
    }
    for (i, t) in doc.thimacs.iter().enumerate() {
        if let Some(p) = t.parent {
            if model.thimac(ThimacId(p)).is_none() {
                return Err(SchemaError::new(
                    format!("/thimacs/{i}/parent"),
                    format!("unknown thimac id {p}"),
                ));
            }
        }
    }
    for (i, s) in doc.stages.iter().enumerate() {
        if model.stage(StageId(s.id)).is_some() {
            return Err(SchemaError::new(
                format!("/stages/{i}/id"),
                format!("duplicate stage id {}", s.id),
            ));
        }
        if model.thimac(ThimacId(s.owner)).is_none() {
            return Err(SchemaError::new(
                format!("/stages/{i}/owner"),
                format!("unknown thimac id {}", s.owner),
            ));
        }
        if s.direction.is_some() && s.kind != StageKind::Transfer {
            return Err(SchemaError::new(
                format!("/stages/{i}/direction"),
                "direction markers apply only to transfer stages",
            ));
        }
        model.insert_raw_stage(Stage {
            id: StageId(s.id),
            owner: ThimacId(s.owner),
            kind: s.kind,
            direction: s.direction,
        });
    }
    for (i, a) in doc.arcs.iter().enumerate() {
        if model.arc(ArcId(a.id)).is_some() {
            return Err(SchemaError::new(
                format!("/arcs/{i}/id"),
                format!("duplicate arc id {}", a.id),
            ));
        }
        if model.stage(StageId(a.from)).is_none() {
            return Err(SchemaError::new(
                format!("/arcs/{i}/from"),
                format!("unknown stage id {}", a.from),
            ));
        }
        if model.stage(StageId(a.to)).is_none() {
            return Err(SchemaError::new(
                format!("/arcs/{i}/to"),
                format!("unknown stage id {}", a.to),
            ));
        }
        model.insert_raw_arc(Arc {
            id: ArcId(a.id),
            kind: a.kind,
            from: StageId(a.from),
            to: StageId(a.to),
        });
    }
    Ok(model)
}
