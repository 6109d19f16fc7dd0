//! Canonical TM-language emission.
//!
//! A model serializes to one statement per maximal flow path (an
//! edge-disjoint cover of the flow arcs), one statement per trigger arc,
//! one statement per stage no arc touches, and one bare containment path
//! per thimac nothing else mentions. Statements sort lexicographically.
//! The result re-parses to an isomorphic model, and serializing again
//! reproduces the same text.

use std::collections::BTreeSet;

use thiserror::Error;

use super::parser::parse;
use crate::model::{ArcId, ArcKind, StageId, StaticModel, ThimacId};
use crate::validate::{validate_model, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("model has {} validation error(s)", .0.iter().filter(|d| d.is_error()).count())]
    InvalidModel(Vec<Diagnostic>),
    #[error("model is not expressible in TM text: {0}")]
    Unrepresentable(String),
}

/// Emits canonical TM-language text for a model with no validation errors.
pub fn serialize(model: &StaticModel) -> Result<String, SerializeError> {
    let diagnostics = validate_model(model);
    if diagnostics.iter().any(|d| d.is_error()) {
        return Err(SerializeError::InvalidModel(diagnostics));
    }
    for thimac in model.thimacs() {
        if thimac.name.is_none() {
            if thimac.parent.is_some() {
                return Err(SerializeError::Unrepresentable(
                    "anonymous thimacs may only appear at the root".into(),
                ));
            }
            if model.stages_of(thimac.id).next().is_none() {
                return Err(SerializeError::Unrepresentable(
                    "the anonymous context has no stages to write".into(),
                ));
            }
        }
    }

    let mut statements = Vec::new();
    let mut mentioned_stages: BTreeSet<StageId> = BTreeSet::new();

    for path in flow_path_cover(model) {
        mentioned_stages.extend(&path);
        statements.push(render_flow_path(model, &path)?);
    }

    for arc in model.arcs().filter(|a| a.kind == ArcKind::Trigger) {
        mentioned_stages.insert(arc.from);
        mentioned_stages.insert(arc.to);
        statements.push(format!(
            "{}-->{}.",
            render_stage_ref(model, arc.from)?,
            render_stage_ref(model, arc.to)?
        ));
    }

    for stage in model.stages() {
        if !mentioned_stages.contains(&stage.id) {
            statements.push(format!("{}.", render_stage_ref(model, stage.id)?));
            mentioned_stages.insert(stage.id);
        }
    }

    // Thimacs nothing above mentions, deepest first so one path covers the
    // whole chain.
    let mut covered: BTreeSet<ThimacId> = BTreeSet::new();
    for &stage in &mentioned_stages {
        if let Some(s) = model.stage(stage) {
            covered.insert(s.owner);
            covered.extend(model.ancestors(s.owner));
        }
    }
    let mut bare: Vec<ThimacId> = model
        .thimacs()
        .map(|t| t.id)
        .filter(|&t| !covered.contains(&t))
        .collect();
    bare.sort_by(|&a, &b| {
        model
            .ancestors(b)
            .len()
            .cmp(&model.ancestors(a).len())
            .then_with(|| model.thimac_path(a).cmp(&model.thimac_path(b)))
    });
    for t in bare {
        if covered.contains(&t) {
            continue;
        }
        statements.push(format!("{}.", thimac_text(model, t)?));
        covered.insert(t);
        covered.extend(model.ancestors(t));
    }

    statements.sort();
    statements.dedup();
    Ok(statements.join("\n"))
}

/// Covers every flow arc with maximal stage paths. Start points and
/// extensions are chosen by stage-path order so the cover is stable across
/// id renumbering.
fn flow_path_cover(model: &StaticModel) -> Vec<Vec<StageId>> {
    let mut unused: BTreeSet<ArcId> = model
        .arcs()
        .filter(|a| a.kind == ArcKind::Flow)
        .map(|a| a.id)
        .collect();
    let mut paths = Vec::new();

    while !unused.is_empty() {
        let has_unused_inbound = |stage: StageId| {
            model
                .arcs_into(stage)
                .any(|a| a.kind == ArcKind::Flow && unused.contains(&a.id))
        };
        let start = unused
            .iter()
            .copied()
            .filter(|&id| {
                let arc = model.arc(id).expect("arc exists");
                !has_unused_inbound(arc.from)
            })
            .min_by_key(|&id| {
                let arc = model.arc(id).expect("arc exists");
                (model.stage_path(arc.from), model.stage_path(arc.to))
            })
            // Only cycles remain; break one deterministically.
            .unwrap_or_else(|| {
                unused
                    .iter()
                    .copied()
                    .min_by_key(|&id| {
                        let arc = model.arc(id).expect("arc exists");
                        (model.stage_path(arc.from), model.stage_path(arc.to))
                    })
                    .expect("non-empty")
            });

        let first = model.arc(start).expect("arc exists");
        let mut path = vec![first.from, first.to];
        unused.remove(&start);
        let mut current = first.to;
        loop {
            let next = model
                .flow_arcs_from(current)
                .filter(|a| unused.contains(&a.id))
                .min_by_key(|a| model.stage_path(a.to));
            match next {
                Some(arc) => {
                    unused.remove(&arc.id);
                    path.push(arc.to);
                    current = arc.to;
                }
                None => break,
            }
        }
        paths.push(path);
    }
    paths
}

fn render_flow_path(model: &StaticModel, path: &[StageId]) -> Result<String, SerializeError> {
    let mut out = String::new();
    let mut prev_owner: Option<ThimacId> = None;
    for (i, &stage_id) in path.iter().enumerate() {
        let stage = model.stage(stage_id).expect("stage exists");
        if i == 0 {
            out.push_str(&render_stage_ref(model, stage_id)?);
        } else if prev_owner == Some(stage.owner) {
            out.push('.');
            out.push_str(stage.kind.keyword());
            if let Some(d) = stage.direction {
                out.push('.');
                out.push_str(d.keyword());
            }
        } else {
            // Inter-machine hop; spell out the target thimac.
            out.push('.');
            out.push_str(&thimac_text(model, stage.owner)?);
            out.push('.');
            out.push_str(stage.kind.keyword());
            if let Some(d) = stage.direction {
                out.push('.');
                out.push_str(d.keyword());
            }
        }
        prev_owner = Some(stage.owner);
    }
    out.push('.');
    Ok(out)
}

/// Full dotted reference to a stage, headed by `Flow.` with a capitalized
/// keyword when the owner is the anonymous context.
fn render_stage_ref(model: &StaticModel, stage_id: StageId) -> Result<String, SerializeError> {
    let stage = model.stage(stage_id).expect("stage exists");
    let owner = model.thimac(stage.owner).expect("owner exists");
    let mut out = String::new();
    if owner.name.is_none() {
        out.push_str("Flow.");
        out.push_str(&capitalize(stage.kind.keyword()));
    } else {
        out.push_str(&thimac_text(model, stage.owner)?);
        out.push('.');
        out.push_str(stage.kind.keyword());
    }
    if let Some(d) = stage.direction {
        out.push('.');
        out.push_str(d.keyword());
    }
    Ok(out)
}

fn thimac_text(model: &StaticModel, id: ThimacId) -> Result<String, SerializeError> {
    let thimac = model.thimac(id).expect("thimac exists");
    if thimac.name.is_none() {
        return Err(SerializeError::Unrepresentable(
            "flow into the anonymous context cannot be written".into(),
        ));
    }
    // A path through the anonymous root would re-parse as top-level names.
    if model
        .ancestors(id)
        .iter()
        .any(|&a| model.thimac(a).is_some_and(|t| t.name.is_none()))
    {
        return Err(SerializeError::Unrepresentable(
            "thimacs nested in the anonymous context cannot be written".into(),
        ));
    }
    Ok(model.thimac_path(id))
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Convenience used by tests and the round-trip property: serialize, parse
/// back, and return the reparsed model.
pub fn reparse(model: &StaticModel) -> Result<StaticModel, SerializeError> {
    let text = serialize(model)?;
    match parse(&text) {
        Ok((_, m)) => Ok(m),
        Err(e) => Err(SerializeError::Unrepresentable(format!(
            "serialized text failed to re-parse: {e}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StageKind;
    use crate::tmlang::canonical_form;

    #[test]
    fn flame_statement_is_exact() {
        let (_, m) = parse("Flame.create-->Flame.heat.create.").unwrap();
        assert_eq!(serialize(&m).unwrap(), "Flame.create-->Flame.heat.create.");
    }

    #[test]
    fn empty_model_is_empty_text() {
        assert_eq!(serialize(&StaticModel::new()).unwrap(), "");
    }

    #[test]
    fn invalid_model_refused() {
        let mut m = StaticModel::new();
        let t = m.add_thimac("A", None).unwrap();
        let c = m.add_stage(t, StageKind::Create, None).unwrap();
        let p = m.add_stage(t, StageKind::Process, None).unwrap();
        m.insert_raw_arc(crate::model::Arc {
            id: crate::model::ArcId(0),
            kind: ArcKind::Flow,
            from: p,
            to: c,
        });
        assert!(matches!(
            serialize(&m),
            Err(SerializeError::InvalidModel(_))
        ));
    }

    #[test]
    fn round_trip_is_isomorphic() {
        let text = "Rain.create.release.transfer.Grass.transfer.receive.process-->Grass.wet.create.\n\
                    Bottle.create.process-->Grass.wet.process.";
        let (_, m) = parse(text).unwrap();
        let back = reparse(&m).unwrap();
        assert_eq!(canonical_form(&back), canonical_form(&m));
    }

    #[test]
    fn serialization_is_idempotent_under_reparse() {
        let text = "Oxygen.create.release.transfer.Water.transfer.receive.process-->Water.create.\n\
                    Hydrogen.create.release.transfer.Water.transfer.receive.process-->Water.create.";
        let (_, m) = parse(text).unwrap();
        let once = serialize(&m).unwrap();
        let (_, m2) = parse(&once).unwrap();
        let twice = serialize(&m2).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn isolated_stage_and_bare_thimac_survive() {
        let mut m = StaticModel::new();
        let a = m.add_thimac("Altar", None).unwrap();
        m.add_stage(a, StageKind::Create, None).unwrap();
        let temple = m.add_thimac("Temple", None).unwrap();
        m.add_thimac("inner", Some(temple)).unwrap();
        let text = serialize(&m).unwrap();
        assert_eq!(text, "Altar.create.\nTemple.inner.");
        let back = reparse(&m).unwrap();
        assert_eq!(canonical_form(&back), canonical_form(&m));
    }

    #[test]
    fn anonymous_context_round_trips() {
        let (_, m) = parse("Flow.Create.process.release.transfer.output").unwrap();
        let text = serialize(&m).unwrap();
        assert_eq!(text, "Flow.Create.process.release.transfer.output.");
        let back = reparse(&m).unwrap();
        assert_eq!(canonical_form(&back), canonical_form(&m));
    }

    #[test]
    fn cycle_across_thimacs_round_trips() {
        // A loop: A out -> B in, B out -> A in.
        let mut m = StaticModel::new();
        let a = m.add_thimac("A", None).unwrap();
        let b = m.add_thimac("B", None).unwrap();
        let a_in = m
            .add_stage(a, StageKind::Transfer, Some(crate::model::Direction::Input))
            .unwrap();
        let a_out = m
            .add_stage(a, StageKind::Transfer, Some(crate::model::Direction::Output))
            .unwrap();
        let b_in = m
            .add_stage(b, StageKind::Transfer, Some(crate::model::Direction::Input))
            .unwrap();
        let b_out = m
            .add_stage(b, StageKind::Transfer, Some(crate::model::Direction::Output))
            .unwrap();
        let a_rec = m.add_stage(a, StageKind::Receive, None).unwrap();
        let b_rec = m.add_stage(b, StageKind::Receive, None).unwrap();
        m.add_flow(a_in, a_rec).unwrap();
        m.add_flow(a_rec, a_out).unwrap();
        m.add_flow(a_out, b_in).unwrap();
        m.add_flow(b_in, b_rec).unwrap();
        m.add_flow(b_rec, b_out).unwrap();
        m.add_flow(b_out, a_in).unwrap();
        let back = reparse(&m).unwrap();
        assert_eq!(canonical_form(&back), canonical_form(&m));
    }
}
