//! Structural validation of static models.
//!
//! Validation never mutates: it returns a sorted diagnostic list. Errors
//! mark structure the rest of the toolkit refuses to work on (illegal flow
//! pairs, dangling ids, containment cycles); warnings mark suspicious but
//! workable structure (unreachable stages, self-triggers, flow cycles
//! within one machine).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{legal_flow, ArcId, ArcKind, Direction, StageId, StageKind, StaticModel, ThimacId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    IllegalFlowPair,
    DanglingStageOwner,
    DanglingArcEndpoint,
    DanglingParent,
    ContainmentCycle,
    DuplicateSiblingName,
    UnusableName,
    DuplicateStage,
    MixedReceiveRefinement,
    DirectionOnNonTransfer,
    UnreachableStage,
    SelfTrigger,
    IntraThimacFlowCycle,
}

/// Where a diagnostic points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Thimac(ThimacId),
    Stage(StageId),
    Arc(ArcId),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub location: Location,
    pub message: String,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Returns every violation in the model, errors first, in a deterministic
/// order. A model built solely through `add_*` calls that never returned an
/// error yields no error-severity diagnostics.
pub fn validate_model(model: &StaticModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    check_containment(model, &mut diags);
    check_sibling_names(model, &mut diags);
    check_stages(model, &mut diags);
    check_arcs(model, &mut diags);
    check_reachability(model, &mut diags);
    check_intra_flow_cycles(model, &mut diags);

    diags.sort();
    diags
}

/// True when no error-severity diagnostic is present.
pub fn is_valid(model: &StaticModel) -> bool {
    validate_model(model).iter().all(|d| !d.is_error())
}

fn check_containment(model: &StaticModel, diags: &mut Vec<Diagnostic>) {
    for thimac in model.thimacs() {
        let Some(parent) = thimac.parent else { continue };
        if model.thimac(parent).is_none() {
            diags.push(Diagnostic {
                severity: Severity::Error,
                code: DiagnosticCode::DanglingParent,
                location: Location::Thimac(thimac.id),
                message: format!("parent {} of {} does not exist", parent, thimac.id),
            });
            continue;
        }
        // Walk up; a chain longer than the thimac count means a cycle.
        let mut seen = BTreeSet::new();
        let mut current = Some(thimac.id);
        while let Some(c) = current {
            if !seen.insert(c) {
                diags.push(Diagnostic {
                    severity: Severity::Error,
                    code: DiagnosticCode::ContainmentCycle,
                    location: Location::Thimac(thimac.id),
                    message: format!("containment of {} loops back on itself", thimac.id),
                });
                break;
            }
            current = model.thimac(c).and_then(|t| t.parent);
        }
    }
}

fn check_sibling_names(model: &StaticModel, diags: &mut Vec<Diagnostic>) {
    let mut seen: BTreeMap<(Option<ThimacId>, String), ThimacId> = BTreeMap::new();
    for thimac in model.thimacs() {
        if let Some(name) = thimac.name.as_deref() {
            if !crate::model::usable_name(name) {
                diags.push(Diagnostic {
                    severity: Severity::Error,
                    code: DiagnosticCode::UnusableName,
                    location: Location::Thimac(thimac.id),
                    message: format!("{} has a name the notation cannot carry: {name:?}", thimac.id),
                });
            }
        }
        let key = (
            thimac.parent,
            thimac
                .name
                .as_deref()
                .map(|n| n.to_ascii_lowercase())
                .unwrap_or_default(),
        );
        if let Some(&first) = seen.get(&key) {
            diags.push(Diagnostic {
                severity: Severity::Error,
                code: DiagnosticCode::DuplicateSiblingName,
                location: Location::Thimac(thimac.id),
                message: format!(
                    "{} duplicates the name of sibling {}",
                    thimac.id, first
                ),
            });
        } else {
            seen.insert(key, thimac.id);
        }
    }
}

fn check_stages(model: &StaticModel, diags: &mut Vec<Diagnostic>) {
    let mut keys: BTreeSet<(ThimacId, StageKind, Option<Direction>)> = BTreeSet::new();
    let mut receive_kinds: BTreeMap<ThimacId, (bool, bool)> = BTreeMap::new();
    for stage in model.stages() {
        if model.thimac(stage.owner).is_none() {
            diags.push(Diagnostic {
                severity: Severity::Error,
                code: DiagnosticCode::DanglingStageOwner,
                location: Location::Stage(stage.id),
                message: format!("owner {} of {} does not exist", stage.owner, stage.id),
            });
            continue;
        }
        if stage.direction.is_some() && stage.kind != StageKind::Transfer {
            diags.push(Diagnostic {
                severity: Severity::Error,
                code: DiagnosticCode::DirectionOnNonTransfer,
                location: Location::Stage(stage.id),
                message: format!("{} carries a direction but is not a transfer", stage.id),
            });
        }
        if !keys.insert((stage.owner, stage.kind, stage.direction)) {
            diags.push(Diagnostic {
                severity: Severity::Error,
                code: DiagnosticCode::DuplicateStage,
                location: Location::Stage(stage.id),
                message: format!(
                    "{} repeats a ({}, direction) pair on {}",
                    stage.id, stage.kind, stage.owner
                ),
            });
        }
        let entry = receive_kinds.entry(stage.owner).or_insert((false, false));
        entry.0 |= stage.kind == StageKind::Receive;
        entry.1 |= matches!(stage.kind, StageKind::Arrive | StageKind::Accept);
    }
    for (owner, (combined, refined)) in receive_kinds {
        if combined && refined {
            diags.push(Diagnostic {
                severity: Severity::Error,
                code: DiagnosticCode::MixedReceiveRefinement,
                location: Location::Thimac(owner),
                message: format!("{} mixes receive with arrive/accept", owner),
            });
        }
    }
}

fn check_arcs(model: &StaticModel, diags: &mut Vec<Diagnostic>) {
    for arc in model.arcs() {
        let from = model.stage(arc.from);
        let to = model.stage(arc.to);
        if from.is_none() || to.is_none() {
            diags.push(Diagnostic {
                severity: Severity::Error,
                code: DiagnosticCode::DanglingArcEndpoint,
                location: Location::Arc(arc.id),
                message: format!("{} references a missing stage", arc.id),
            });
            continue;
        }
        let (from, to) = (from.unwrap(), to.unwrap());
        match arc.kind {
            ArcKind::Flow => {
                if let Err(err) = legal_flow(from, to) {
                    diags.push(Diagnostic {
                        severity: Severity::Error,
                        code: DiagnosticCode::IllegalFlowPair,
                        location: Location::Arc(arc.id),
                        message: err.to_string(),
                    });
                }
            }
            ArcKind::Trigger => {
                if arc.from == arc.to {
                    diags.push(Diagnostic {
                        severity: Severity::Warning,
                        code: DiagnosticCode::SelfTrigger,
                        location: Location::Arc(arc.id),
                        message: format!("{} triggers its own source stage", arc.id),
                    });
                }
            }
        }
    }
}

/// A stage is reachable when something can put a token there: it originates
/// things (create), sits on the input boundary (transfer not marked
/// output), or has an incoming arc.
fn check_reachability(model: &StaticModel, diags: &mut Vec<Diagnostic>) {
    for stage in model.stages() {
        let source_capable = stage.kind == StageKind::Create
            || (stage.kind == StageKind::Transfer && stage.direction != Some(Direction::Output));
        if source_capable || model.arcs_into(stage.id).next().is_some() {
            continue;
        }
        diags.push(Diagnostic {
            severity: Severity::Warning,
            code: DiagnosticCode::UnreachableStage,
            location: Location::Stage(stage.id),
            message: format!("nothing reaches {} ({})", stage.id, model.stage_path(stage.id)),
        });
    }
}

/// Flow cycles confined to a single thimac's stage set. Cycles that span
/// thimacs are normal (control loops).
fn check_intra_flow_cycles(model: &StaticModel, diags: &mut Vec<Diagnostic>) {
    let mut owners: BTreeSet<ThimacId> = BTreeSet::new();
    for stage in model.stages() {
        owners.insert(stage.owner);
    }
    for owner in owners {
        let stages: Vec<StageId> = model.stages_of(owner).map(|s| s.id).collect();
        let edges: Vec<(StageId, StageId)> = model
            .arcs()
            .filter(|a| a.kind == ArcKind::Flow)
            .filter(|a| {
                stages.contains(&a.from) && stages.contains(&a.to)
            })
            .map(|a| (a.from, a.to))
            .collect();
        if has_cycle(&stages, &edges) {
            diags.push(Diagnostic {
                severity: Severity::Warning,
                code: DiagnosticCode::IntraThimacFlowCycle,
                location: Location::Thimac(owner),
                message: format!("flow within {} loops among its own stages", owner),
            });
        }
    }
}

fn has_cycle(nodes: &[StageId], edges: &[(StageId, StageId)]) -> bool {
    // Kahn's algorithm; leftovers mean a cycle.
    let mut indegree: BTreeMap<StageId, usize> = nodes.iter().map(|&n| (n, 0)).collect();
    for &(_, to) in edges {
        *indegree.get_mut(&to).unwrap() += 1;
    }
    let mut queue: Vec<StageId> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    let mut removed = 0;
    while let Some(n) = queue.pop() {
        removed += 1;
        for &(from, to) in edges {
            if from == n {
                let d = indegree.get_mut(&to).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push(to);
                }
            }
        }
    }
    removed < nodes.len()
}
