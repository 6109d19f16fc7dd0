//! Graphviz export: nested clusters per thimac, one node per stage, solid
//! edges for flow, dashed for triggering. With a dynamic model, stages are
//! filled per the first event region containing them.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::dynamics::DynamicModel;
use crate::model::{ArcKind, StageId, StaticModel, ThimacId};
use crate::validate::{validate_model, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DotError {
    #[error("model has {} validation error(s)", .0.iter().filter(|d| d.is_error()).count())]
    InvalidModel(Vec<Diagnostic>),
}

const PALETTE: [&str; 10] = [
    "#a6cee3", "#b2df8a", "#fb9a99", "#fdbf6f", "#cab2d6", "#ffff99", "#1f78b4", "#33a02c",
    "#e31a1c", "#ff7f00",
];

/// Renders the model as a DOT digraph. The empty model is `digraph tm {}`.
pub fn export_dot(
    model: &StaticModel,
    dyn_model: Option<&DynamicModel>,
) -> Result<String, DotError> {
    let diagnostics = validate_model(model);
    if diagnostics.iter().any(|d| d.is_error()) {
        return Err(DotError::InvalidModel(diagnostics));
    }
    if model.is_empty() {
        return Ok("digraph tm {}".to_string());
    }

    // First event region covering each stage decides its fill.
    let mut fills: BTreeMap<StageId, usize> = BTreeMap::new();
    if let Some(d) = dyn_model {
        for (index, event) in d.events().enumerate() {
            for &s in &event.region.stages {
                fills.entry(s).or_insert(index);
            }
        }
    }

    let mut out = String::new();
    out.push_str("digraph tm {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");

    let mut children: BTreeMap<Option<ThimacId>, Vec<ThimacId>> = BTreeMap::new();
    for t in model.thimacs() {
        children.entry(t.parent).or_default().push(t.id);
    }
    for root in children.get(&None).cloned().unwrap_or_default() {
        write_cluster(model, &children, &fills, root, 1, &mut out);
    }

    for arc in model.arcs() {
        let style = match arc.kind {
            ArcKind::Flow => "solid",
            ArcKind::Trigger => "dashed",
        };
        writeln!(
            out,
            "  s{} -> s{} [style={}];",
            arc.from.0, arc.to.0, style
        )
        .expect("string write");
    }
    out.push('}');
    Ok(out)
}

fn write_cluster(
    model: &StaticModel,
    children: &BTreeMap<Option<ThimacId>, Vec<ThimacId>>,
    fills: &BTreeMap<StageId, usize>,
    thimac: ThimacId,
    depth: usize,
    out: &mut String,
) {
    let pad = "  ".repeat(depth);
    let label = model
        .thimac(thimac)
        .and_then(|t| t.name.clone())
        .unwrap_or_default();
    writeln!(out, "{pad}subgraph cluster_t{} {{", thimac.0).expect("string write");
    writeln!(out, "{pad}  label=\"{}\";", escape(&label)).expect("string write");
    for stage in model.stages_of(thimac) {
        let mut text = stage.kind.keyword().to_string();
        if let Some(d) = stage.direction {
            text.push(' ');
            text.push_str(d.keyword());
        }
        match fills.get(&stage.id) {
            Some(&event_index) => {
                let color = PALETTE[event_index % PALETTE.len()];
                writeln!(
                    out,
                    "{pad}  s{} [label=\"{}\", style=filled, fillcolor=\"{}\"];",
                    stage.id.0,
                    escape(&text),
                    color
                )
                .expect("string write");
            }
            None => {
                writeln!(out, "{pad}  s{} [label=\"{}\"];", stage.id.0, escape(&text))
                    .expect("string write");
            }
        }
    }
    for &child in children.get(&Some(thimac)).map(|v| v.as_slice()).unwrap_or(&[]) {
        write_cluster(model, children, fills, child, depth + 1, out);
    }
    writeln!(out, "{pad}}}").expect("string write");
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}
