//! Static TM models: thimacs, stages, flow and trigger arcs.
//!
//! A thimac is the single modeling unit — simultaneously a thing that flows
//! through machines and a machine that operates on things. Each thimac owns
//! up to seven kinds of stages, and arcs connect stages: solid flow arcs for
//! the motion of things across stages, dashed trigger arcs for causal
//! linkage that starts a new flow of a different thing.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a thimac, assigned in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ThimacId(pub u32);

/// Identifier of a stage, assigned in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StageId(pub u32);

/// Identifier of an arc, assigned in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArcId(pub u32);

impl fmt::Display for ThimacId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// One of the generic machine operations a stage performs.
///
/// `Receive` is the combined form of `Arrive` + `Accept`; a thimac uses
/// either the combined stage or the refined pair, never both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Create,
    Process,
    Release,
    Transfer,
    Receive,
    Arrive,
    Accept,
}

impl StageKind {
    pub fn keyword(self) -> &'static str {
        match self {
            StageKind::Create => "create",
            StageKind::Process => "process",
            StageKind::Release => "release",
            StageKind::Transfer => "transfer",
            StageKind::Receive => "receive",
            StageKind::Arrive => "arrive",
            StageKind::Accept => "accept",
        }
    }

    pub fn from_keyword(word: &str) -> Option<StageKind> {
        match word.to_ascii_lowercase().as_str() {
            "create" => Some(StageKind::Create),
            "process" => Some(StageKind::Process),
            "release" => Some(StageKind::Release),
            "transfer" => Some(StageKind::Transfer),
            "receive" => Some(StageKind::Receive),
            "arrive" => Some(StageKind::Arrive),
            "accept" => Some(StageKind::Accept),
            _ => None,
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Boundary side of a transfer stage. Transfers without a marker act as
/// either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
        }
    }
}

/// Whether an arc carries flow (solid arrow) or triggering (dashed arrow).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    Flow,
    Trigger,
}

/// A thing/machine node. `name` is `None` only for the single unnamed
/// context thimac that headerless `Flow.` statements describe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thimac {
    pub id: ThimacId,
    pub name: Option<String>,
    pub parent: Option<ThimacId>,
}

/// A stage attached to a thimac. `direction` is set only on transfers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub id: StageId,
    pub owner: ThimacId,
    pub kind: StageKind,
    pub direction: Option<Direction>,
}

/// A flow or trigger arc between two stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub id: ArcId,
    pub kind: ArcKind,
    pub from: StageId,
    pub to: StageId,
}

/// Errors from model construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{0:?} is not a usable thimac name")]
    InvalidName(String),
    #[error("a thimac named {name:?} already exists under this parent")]
    DuplicateName { name: String },
    #[error("unknown parent thimac {0}")]
    UnknownParent(ThimacId),
    #[error("unknown thimac {0}")]
    UnknownThimac(ThimacId),
    #[error("unknown stage {0}")]
    UnknownStage(StageId),
    #[error("thimac already has a {kind} stage{}", direction.map(|d| format!(" ({})", d.keyword())).unwrap_or_default())]
    DuplicateStage {
        kind: StageKind,
        direction: Option<Direction>,
    },
    #[error("cannot mix the combined receive stage with arrive/accept on one thimac")]
    MixedReceiveRefinement,
    #[error("direction markers apply only to transfer stages")]
    DirectionOnNonTransfer,
    #[error("illegal flow {from_kind} -> {to_kind} ({rule})")]
    IllegalFlowPair {
        from_kind: StageKind,
        to_kind: StageKind,
        same_thimac: bool,
        rule: &'static str,
    },
}

/// The timeless description of a system: every thimac, stage, and arc,
/// with no notion of events or ordering.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StaticModel {
    thimacs: BTreeMap<ThimacId, Thimac>,
    stages: BTreeMap<StageId, Stage>,
    arcs: BTreeMap<ArcId, Arc>,
}

impl StaticModel {
    pub fn new() -> StaticModel {
        StaticModel::default()
    }

    pub fn thimacs(&self) -> impl Iterator<Item = &Thimac> {
        self.thimacs.values()
    }

    pub fn stages(&self) -> impl Iterator<Item = &Stage> {
        self.stages.values()
    }

    pub fn arcs(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.values()
    }

    pub fn thimac(&self, id: ThimacId) -> Option<&Thimac> {
        self.thimacs.get(&id)
    }

    pub fn stage(&self, id: StageId) -> Option<&Stage> {
        self.stages.get(&id)
    }

    pub fn arc(&self, id: ArcId) -> Option<&Arc> {
        self.arcs.get(&id)
    }

    pub fn thimac_count(&self) -> usize {
        self.thimacs.len()
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thimacs.is_empty() && self.stages.is_empty() && self.arcs.is_empty()
    }

    fn next_thimac_id(&self) -> ThimacId {
        ThimacId(self.thimacs.keys().next_back().map_or(0, |t| t.0 + 1))
    }

    fn next_stage_id(&self) -> StageId {
        StageId(self.stages.keys().next_back().map_or(0, |s| s.0 + 1))
    }

    fn next_arc_id(&self) -> ArcId {
        ArcId(self.arcs.keys().next_back().map_or(0, |a| a.0 + 1))
    }

    /// Adds a named thimac. Names must be usable as notation tokens
    /// (alphanumeric/underscore, not a reserved word) and unique among
    /// siblings, case-insensitive.
    pub fn add_thimac(
        &mut self,
        name: impl Into<String>,
        parent: Option<ThimacId>,
    ) -> Result<ThimacId, ModelError> {
        let name = name.into();
        if !usable_name(&name) {
            return Err(ModelError::InvalidName(name));
        }
        if let Some(p) = parent {
            if !self.thimacs.contains_key(&p) {
                return Err(ModelError::UnknownParent(p));
            }
        }
        if self.find_child(parent, &name).is_some() {
            return Err(ModelError::DuplicateName { name });
        }
        let id = self.next_thimac_id();
        self.thimacs.insert(
            id,
            Thimac {
                id,
                name: Some(name),
                parent,
            },
        );
        Ok(id)
    }

    /// Adds the unnamed context thimac that headerless flow statements
    /// attach their stages to. At most one may exist per parent.
    pub fn add_anonymous_thimac(
        &mut self,
        parent: Option<ThimacId>,
    ) -> Result<ThimacId, ModelError> {
        if let Some(p) = parent {
            if !self.thimacs.contains_key(&p) {
                return Err(ModelError::UnknownParent(p));
            }
        }
        if self
            .thimacs
            .values()
            .any(|t| t.parent == parent && t.name.is_none())
        {
            return Err(ModelError::DuplicateName {
                name: String::new(),
            });
        }
        let id = self.next_thimac_id();
        self.thimacs.insert(
            id,
            Thimac {
                id,
                name: None,
                parent,
            },
        );
        Ok(id)
    }

    /// Finds a child of `parent` by name, case-insensitive.
    pub fn find_child(&self, parent: Option<ThimacId>, name: &str) -> Option<ThimacId> {
        self.thimacs
            .values()
            .find(|t| {
                t.parent == parent
                    && t.name
                        .as_deref()
                        .is_some_and(|n| n.eq_ignore_ascii_case(name))
            })
            .map(|t| t.id)
    }

    /// Finds the anonymous thimac under `parent`, if present.
    pub fn find_anonymous(&self, parent: Option<ThimacId>) -> Option<ThimacId> {
        self.thimacs
            .values()
            .find(|t| t.parent == parent && t.name.is_none())
            .map(|t| t.id)
    }

    /// Attaches a stage to a thimac. Each (kind, direction) pair may appear
    /// at most once per thimac, and the combined receive excludes the
    /// arrive/accept refinement.
    pub fn add_stage(
        &mut self,
        owner: ThimacId,
        kind: StageKind,
        direction: Option<Direction>,
    ) -> Result<StageId, ModelError> {
        if !self.thimacs.contains_key(&owner) {
            return Err(ModelError::UnknownThimac(owner));
        }
        if direction.is_some() && kind != StageKind::Transfer {
            return Err(ModelError::DirectionOnNonTransfer);
        }
        let mut has_receive = false;
        let mut has_refined = false;
        for stage in self.stages.values().filter(|s| s.owner == owner) {
            if stage.kind == kind && stage.direction == direction {
                return Err(ModelError::DuplicateStage { kind, direction });
            }
            has_receive |= stage.kind == StageKind::Receive;
            has_refined |= matches!(stage.kind, StageKind::Arrive | StageKind::Accept);
        }
        match kind {
            StageKind::Receive if has_refined => return Err(ModelError::MixedReceiveRefinement),
            StageKind::Arrive | StageKind::Accept if has_receive => {
                return Err(ModelError::MixedReceiveRefinement)
            }
            _ => {}
        }
        let id = self.next_stage_id();
        self.stages.insert(
            id,
            Stage {
                id,
                owner,
                kind,
                direction,
            },
        );
        Ok(id)
    }

    /// Finds a stage on `owner` by (kind, direction).
    pub fn find_stage(
        &self,
        owner: ThimacId,
        kind: StageKind,
        direction: Option<Direction>,
    ) -> Option<StageId> {
        self.stages
            .values()
            .find(|s| s.owner == owner && s.kind == kind && s.direction == direction)
            .map(|s| s.id)
    }

    /// Stages of `owner`, in id order.
    pub fn stages_of(&self, owner: ThimacId) -> impl Iterator<Item = &Stage> {
        self.stages.values().filter(move |s| s.owner == owner)
    }

    /// Adds a flow arc. The pair must be a legal succession (see
    /// [`legal_flow`]). Re-adding an identical arc returns the existing id.
    pub fn add_flow(&mut self, from: StageId, to: StageId) -> Result<ArcId, ModelError> {
        let from_stage = self
            .stages
            .get(&from)
            .ok_or(ModelError::UnknownStage(from))?;
        let to_stage = self.stages.get(&to).ok_or(ModelError::UnknownStage(to))?;
        legal_flow(from_stage, to_stage)?;
        Ok(self.insert_arc(ArcKind::Flow, from, to))
    }

    /// Adds a trigger arc. Triggers may connect any two stages, including
    /// across unrelated thimacs and back to the same stage.
    pub fn add_trigger(&mut self, from: StageId, to: StageId) -> Result<ArcId, ModelError> {
        if !self.stages.contains_key(&from) {
            return Err(ModelError::UnknownStage(from));
        }
        if !self.stages.contains_key(&to) {
            return Err(ModelError::UnknownStage(to));
        }
        Ok(self.insert_arc(ArcKind::Trigger, from, to))
    }

    fn insert_arc(&mut self, kind: ArcKind, from: StageId, to: StageId) -> ArcId {
        if let Some(existing) = self
            .arcs
            .values()
            .find(|a| a.kind == kind && a.from == from && a.to == to)
        {
            return existing.id;
        }
        let id = self.next_arc_id();
        self.arcs.insert(id, Arc { id, kind, from, to });
        id
    }

    /// Raw insertion used by the JSON reader; honors caller-supplied ids.
    pub(crate) fn insert_raw_thimac(&mut self, thimac: Thimac) {
        self.thimacs.insert(thimac.id, thimac);
    }

    pub(crate) fn insert_raw_stage(&mut self, stage: Stage) {
        self.stages.insert(stage.id, stage);
    }

    pub(crate) fn insert_raw_arc(&mut self, arc: Arc) {
        self.arcs.insert(arc.id, arc);
    }

    /// Ancestor chain of a thimac, nearest first. Stops if a cycle is found.
    pub fn ancestors(&self, id: ThimacId) -> Vec<ThimacId> {
        let mut chain = Vec::new();
        let mut current = self.thimacs.get(&id).and_then(|t| t.parent);
        while let Some(p) = current {
            if chain.contains(&p) || p == id {
                break;
            }
            chain.push(p);
            current = self.thimacs.get(&p).and_then(|t| t.parent);
        }
        chain
    }

    /// Dotted containment path of a thimac, e.g. `Apollo.temple.statue`.
    /// The anonymous context renders as `Flow`.
    pub fn thimac_path(&self, id: ThimacId) -> String {
        let mut parts = Vec::new();
        let mut current = Some(id);
        let mut seen = Vec::new();
        while let Some(c) = current {
            if seen.contains(&c) {
                break;
            }
            seen.push(c);
            match self.thimacs.get(&c) {
                Some(t) => {
                    parts.push(t.name.clone().unwrap_or_else(|| "Flow".to_string()));
                    current = t.parent;
                }
                None => break,
            }
        }
        parts.reverse();
        parts.join(".")
    }

    /// Dotted path of a stage, e.g. `Grass.wet.create` or
    /// `Flow.transfer.input`.
    pub fn stage_path(&self, id: StageId) -> String {
        match self.stages.get(&id) {
            Some(stage) => {
                let mut path = self.thimac_path(stage.owner);
                path.push('.');
                path.push_str(stage.kind.keyword());
                if let Some(d) = stage.direction {
                    path.push('.');
                    path.push_str(d.keyword());
                }
                path
            }
            None => format!("<{}>", id),
        }
    }

    /// Resolves a dotted stage path produced by [`stage_path`].
    pub fn resolve_stage_path(&self, path: &str) -> Option<StageId> {
        let segments: Vec<&str> = path.split('.').collect();
        self.resolve_stage_segments(&segments)
    }

    fn resolve_stage_segments(&self, segments: &[&str]) -> Option<StageId> {
        // Direction marker present?
        let (segments, direction) = match segments.last() {
            Some(&"input") => (&segments[..segments.len() - 1], Some(Direction::Input)),
            Some(&"output") => (&segments[..segments.len() - 1], Some(Direction::Output)),
            _ => (segments, None),
        };
        let (&kw, names) = segments.split_last()?;
        let kind = StageKind::from_keyword(kw)?;
        let mut thimac: Option<ThimacId> = None;
        let mut at_root = true;
        for &name in names {
            let next = if at_root && name.eq_ignore_ascii_case("flow") {
                self.find_anonymous(None)
            } else {
                self.find_child(thimac, name)
            };
            thimac = Some(next?);
            at_root = false;
        }
        let owner = thimac?;
        self.find_stage(owner, kind, direction).or_else(|| {
            // Undirected lookup tolerates a marked stage when exactly one side exists.
            if direction.is_none() && kind == StageKind::Transfer {
                let mut candidates = self
                    .stages
                    .values()
                    .filter(|s| s.owner == owner && s.kind == StageKind::Transfer);
                let first = candidates.next()?;
                if candidates.next().is_none() {
                    return Some(first.id);
                }
            }
            None
        })
    }

    pub fn flow_arcs_from(&self, stage: StageId) -> impl Iterator<Item = &Arc> {
        self.arcs
            .values()
            .filter(move |a| a.kind == ArcKind::Flow && a.from == stage)
    }

    pub fn arcs_into(&self, stage: StageId) -> impl Iterator<Item = &Arc> {
        self.arcs.values().filter(move |a| a.to == stage)
    }
}

/// A name works as a notation token: non-empty, alphanumeric or
/// underscore, and not a reserved word.
pub fn usable_name(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && StageKind::from_keyword(name).is_none()
        && !["input", "output", "flow"]
            .iter()
            .any(|w| name.eq_ignore_ascii_case(w))
}

/// Checks a flow succession against the stage structure.
///
/// Within one thimac the allowed successions are:
///
/// * create -> process | release
/// * transfer (input side) -> receive | arrive
/// * receive -> process | release | transfer (output side)
/// * arrive -> accept | release
/// * accept -> process | release
/// * process -> release
/// * release -> transfer (output side)
///
/// Between thimacs only transfer -> transfer is allowed, output side to
/// input side where markers are present. Unmarked transfers act as either
/// side.
pub fn legal_flow(from: &Stage, to: &Stage) -> Result<(), ModelError> {
    use StageKind::*;
    let same = from.owner == to.owner;
    let err = |rule: &'static str| ModelError::IllegalFlowPair {
        from_kind: from.kind,
        to_kind: to.kind,
        same_thimac: same,
        rule,
    };
    if !same {
        if from.kind != Transfer || to.kind != Transfer {
            return Err(err("inter-thimac flow runs transfer to transfer only"));
        }
        if from.direction == Some(Direction::Input) {
            return Err(err("an input-side transfer cannot feed another thimac"));
        }
        if to.direction == Some(Direction::Output) {
            return Err(err("an output-side transfer cannot be fed from outside"));
        }
        return Ok(());
    }
    let ok = match (from.kind, to.kind) {
        (Create, Process) | (Create, Release) => true,
        (Transfer, Receive) | (Transfer, Arrive) => from.direction != Some(Direction::Output),
        (Receive, Process) | (Receive, Release) => true,
        (Receive, Transfer) => to.direction != Some(Direction::Input),
        (Arrive, Accept) | (Arrive, Release) => true,
        (Accept, Process) | (Accept, Release) => true,
        (Process, Release) => true,
        (Release, Transfer) => to.direction != Some(Direction::Input),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(err("pair is outside the canonical stage succession"))
    }
}
