//! Dynamic models: events declared over regions of a static model.
//!
//! An event is a labeled region — a subdiagram of the static graph — plus
//! an abstract time slot that stays unbound until the event is placed in a
//! chronology. Regions may overlap, and two events may share one region
//! exactly; nothing merges them. Arcs between regions, not overlap, are
//! what order events.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ArcId, ArcKind, StageId, StaticModel};

/// Identifier of an event within one dynamic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventId(pub u32);

impl std::fmt::Display for EventId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// The subdiagram where an event occurs: a stage set plus every host arc
/// internal to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub stages: BTreeSet<StageId>,
    pub arcs: BTreeSet<ArcId>,
}

/// A labeled region; its concrete time is a slot index in a chronology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub label: String,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("an event region must contain at least one stage")]
    EmptyRegion,
    #[error("unknown stage {0}")]
    UnknownStage(StageId),
    #[error("an event labeled {0:?} already exists")]
    DuplicateLabel(String),
}

/// A static model plus the events identified on it.
#[derive(Debug, Clone)]
pub struct DynamicModel {
    host: StaticModel,
    events: BTreeMap<EventId, Event>,
}

impl DynamicModel {
    pub fn new(host: StaticModel) -> DynamicModel {
        DynamicModel {
            host,
            events: BTreeMap::new(),
        }
    }

    pub fn host(&self) -> &StaticModel {
        &self.host
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.events.values()
    }

    pub fn event(&self, id: EventId) -> Option<&Event> {
        self.events.get(&id)
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn event_ids(&self) -> BTreeSet<EventId> {
        self.events.keys().copied().collect()
    }

    pub fn label(&self, id: EventId) -> &str {
        self.events.get(&id).map(|e| e.label.as_str()).unwrap_or("?")
    }

    pub fn find_by_label(&self, label: &str) -> Option<EventId> {
        self.events
            .values()
            .find(|e| e.label == label)
            .map(|e| e.id)
    }

    /// Declares an event over the given stages. The region's arc set is
    /// every host arc with both endpoints inside the stage set.
    pub fn define_event(
        &mut self,
        label: impl Into<String>,
        stages: impl IntoIterator<Item = StageId>,
    ) -> Result<EventId, DynamicsError> {
        let label = label.into();
        let stages: BTreeSet<StageId> = stages.into_iter().collect();
        if stages.is_empty() {
            return Err(DynamicsError::EmptyRegion);
        }
        for &s in &stages {
            if self.host.stage(s).is_none() {
                return Err(DynamicsError::UnknownStage(s));
            }
        }
        if self.events.values().any(|e| e.label == label) {
            return Err(DynamicsError::DuplicateLabel(label));
        }
        let arcs = self
            .host
            .arcs()
            .filter(|a| stages.contains(&a.from) && stages.contains(&a.to))
            .map(|a| a.id)
            .collect();
        let id = EventId(self.events.keys().next_back().map_or(0, |e| e.0 + 1));
        self.events.insert(
            id,
            Event {
                id,
                label,
                region: Region { stages, arcs },
            },
        );
        Ok(id)
    }

    /// All unordered event pairs whose regions intersect, with the shared
    /// stages, sorted by id.
    pub fn events_overlapping(&self) -> Vec<(EventId, EventId, BTreeSet<StageId>)> {
        let mut out = Vec::new();
        let events: Vec<&Event> = self.events.values().collect();
        for (i, a) in events.iter().enumerate() {
            for b in &events[i + 1..] {
                let shared: BTreeSet<StageId> = a
                    .region
                    .stages
                    .intersection(&b.region.stages)
                    .copied()
                    .collect();
                if !shared.is_empty() {
                    out.push((a.id, b.id, shared));
                }
            }
        }
        out
    }

    /// Labels of events whose regions span disconnected pieces of the host
    /// graph. Permitted, but usually a modeling slip worth a look.
    pub fn disconnected_regions(&self) -> Vec<EventId> {
        self.events
            .values()
            .filter(|e| !region_connected(&self.host, &e.region))
            .map(|e| e.id)
            .collect()
    }

    /// Derives the event graph: an edge A -> B of a given kind whenever a
    /// host arc of that kind runs from a stage in region(A) to a stage in
    /// region(B), for distinct events.
    pub fn derive_event_graph(&self) -> EventGraph {
        let mut stage_events: BTreeMap<StageId, BTreeSet<EventId>> = BTreeMap::new();
        for event in self.events.values() {
            for &s in &event.region.stages {
                stage_events.entry(s).or_default().insert(event.id);
            }
        }
        let mut edges = BTreeSet::new();
        for arc in self.host.arcs() {
            let froms = stage_events.get(&arc.from);
            let tos = stage_events.get(&arc.to);
            let (Some(froms), Some(tos)) = (froms, tos) else {
                continue;
            };
            for &a in froms {
                for &b in tos {
                    if a != b {
                        edges.insert(EventEdge {
                            from: a,
                            to: b,
                            kind: arc.kind,
                        });
                    }
                }
            }
        }
        EventGraph {
            events: self.events.keys().copied().collect(),
            edges,
        }
    }
}

/// Treats the region as an undirected subgraph over its stages and arcs.
fn region_connected(host: &StaticModel, region: &Region) -> bool {
    if region.stages.len() <= 1 {
        return true;
    }
    let mut reached = BTreeSet::new();
    let start = *region.stages.iter().next().expect("non-empty");
    let mut queue = vec![start];
    reached.insert(start);
    while let Some(s) = queue.pop() {
        for arc_id in &region.arcs {
            let arc = host.arc(*arc_id).expect("region arcs resolve");
            for (x, y) in [(arc.from, arc.to), (arc.to, arc.from)] {
                if x == s && region.stages.contains(&y) && reached.insert(y) {
                    queue.push(y);
                }
            }
        }
    }
    reached.len() == region.stages.len()
}

/// Directed edge between events, labeled with the inducing arc kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventEdge {
    pub from: EventId,
    pub to: EventId,
    pub kind: ArcKind,
}

/// Events and the flow/trigger edges between them. Parallel flow and
/// trigger edges over one pair are both kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventGraph {
    pub events: BTreeSet<EventId>,
    pub edges: BTreeSet<EventEdge>,
}

impl EventGraph {
    pub fn new(events: impl IntoIterator<Item = EventId>) -> EventGraph {
        EventGraph {
            events: events.into_iter().collect(),
            edges: BTreeSet::new(),
        }
    }

    pub fn add_edge(&mut self, from: EventId, to: EventId, kind: ArcKind) {
        self.events.insert(from);
        self.events.insert(to);
        self.edges.insert(EventEdge { from, to, kind });
    }

    pub fn edges_of_kind(&self, kind: ArcKind) -> impl Iterator<Item = &EventEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn has_edge_between(&self, a: EventId, b: EventId) -> bool {
        self.edges
            .iter()
            .any(|e| (e.from == a && e.to == b) || (e.from == b && e.to == a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tmlang::parse;

    fn grass() -> DynamicModel {
        let (_, model) = parse(
            "Rain.create.release.transfer.Grass.transfer.receive.process-->Grass.wet.create.\n\
             Bottle.create.process-->Grass.wet.process.",
        )
        .unwrap();
        let mut dyn_model = DynamicModel::new(model);
        let rain: Vec<StageId> = [
            "Rain.create",
            "Rain.release",
            "Rain.transfer.output",
            "Grass.transfer.input",
            "Grass.receive",
            "Grass.process",
            "Grass.wet.create",
        ]
        .iter()
        .map(|p| dyn_model.host().resolve_stage_path(p).unwrap())
        .collect();
        let bottle: Vec<StageId> = ["Bottle.create", "Bottle.process", "Grass.wet.process"]
            .iter()
            .map(|p| dyn_model.host().resolve_stage_path(p).unwrap())
            .collect();
        let wet: Vec<StageId> = ["Grass.wet.create", "Grass.wet.process"]
            .iter()
            .map(|p| dyn_model.host().resolve_stage_path(p).unwrap())
            .collect();
        dyn_model.define_event("E1", rain).unwrap();
        dyn_model.define_event("E2", bottle).unwrap();
        dyn_model.define_event("E3", wet).unwrap();
        dyn_model
    }

    #[test]
    fn grass_events_overlap_at_wet_stages_only() {
        let dyn_model = grass();
        let overlaps = dyn_model.events_overlapping();
        let pairs: Vec<(EventId, EventId)> = overlaps.iter().map(|(a, b, _)| (*a, *b)).collect();
        assert_eq!(pairs, vec![(EventId(0), EventId(2)), (EventId(1), EventId(2))]);
        for (_, _, shared) in &overlaps {
            for s in shared {
                assert!(dyn_model
                    .host()
                    .stage_path(*s)
                    .starts_with("Grass.wet."));
            }
        }
    }

    #[test]
    fn grass_event_graph_is_two_triggers() {
        let dyn_model = grass();
        let graph = dyn_model.derive_event_graph();
        let edges: Vec<EventEdge> = graph.edges.iter().copied().collect();
        assert_eq!(
            edges,
            vec![
                EventEdge {
                    from: EventId(0),
                    to: EventId(2),
                    kind: ArcKind::Trigger
                },
                EventEdge {
                    from: EventId(1),
                    to: EventId(2),
                    kind: ArcKind::Trigger
                },
            ]
        );
    }

    #[test]
    fn identical_regions_stay_distinct_events() {
        let (_, model) = parse("Apollo.temple.worship.create.").unwrap();
        let stage = model.resolve_stage_path("Apollo.temple.worship.create").unwrap();
        let mut dyn_model = DynamicModel::new(model);
        let aim = dyn_model.define_event("declare aim", [stage]).unwrap();
        let worship = dyn_model.define_event("worship", [stage]).unwrap();
        assert_ne!(aim, worship);
        let overlaps = dyn_model.events_overlapping();
        assert_eq!(overlaps.len(), 1);
        assert_eq!(overlaps[0].2.len(), 1);
        // Region sharing does not merge events in the graph either.
        let graph = dyn_model.derive_event_graph();
        assert_eq!(graph.events.len(), 2);
        assert!(graph.edges.is_empty());
    }

    #[test]
    fn single_event_has_no_overlaps() {
        let (_, model) = parse("Water.create.").unwrap();
        let stage = model.resolve_stage_path("Water.create").unwrap();
        let mut dyn_model = DynamicModel::new(model);
        dyn_model.define_event("only", [stage]).unwrap();
        assert!(dyn_model.events_overlapping().is_empty());
    }

    #[test]
    fn empty_region_rejected() {
        let (_, model) = parse("Water.create.").unwrap();
        let mut dyn_model = DynamicModel::new(model);
        assert_eq!(
            dyn_model.define_event("none", []).unwrap_err(),
            DynamicsError::EmptyRegion
        );
    }

    #[test]
    fn duplicate_label_rejected() {
        let (_, model) = parse("Water.create.").unwrap();
        let stage = model.resolve_stage_path("Water.create").unwrap();
        let mut dyn_model = DynamicModel::new(model);
        dyn_model.define_event("E", [stage]).unwrap();
        assert_eq!(
            dyn_model.define_event("E", [stage]).unwrap_err(),
            DynamicsError::DuplicateLabel("E".into())
        );
    }

    #[test]
    fn unknown_stage_rejected() {
        let (_, model) = parse("Water.create.").unwrap();
        let mut dyn_model = DynamicModel::new(model);
        assert_eq!(
            dyn_model.define_event("E", [StageId(42)]).unwrap_err(),
            DynamicsError::UnknownStage(StageId(42))
        );
    }

    #[test]
    fn independent_subdiagrams_have_no_edges() {
        let (_, model) = parse("Rooster.sound.create.\nSun.rising.create.").unwrap();
        let sound = model.resolve_stage_path("Rooster.sound.create").unwrap();
        let rising = model.resolve_stage_path("Sun.rising.create").unwrap();
        let mut dyn_model = DynamicModel::new(model);
        dyn_model.define_event("crow", [sound]).unwrap();
        dyn_model.define_event("rise", [rising]).unwrap();
        assert!(dyn_model.derive_event_graph().edges.is_empty());
    }

    #[test]
    fn disconnected_region_is_flagged() {
        let (_, model) = parse("Rooster.sound.create.\nSun.rising.create.").unwrap();
        let sound = model.resolve_stage_path("Rooster.sound.create").unwrap();
        let rising = model.resolve_stage_path("Sun.rising.create").unwrap();
        let mut dyn_model = DynamicModel::new(model);
        let e = dyn_model.define_event("both", [sound, rising]).unwrap();
        assert_eq!(dyn_model.disconnected_regions(), vec![e]);
    }

    #[test]
    fn event_count_preserved_through_graph() {
        let dyn_model = grass();
        assert_eq!(
            dyn_model.derive_event_graph().events.len(),
            dyn_model.event_count()
        );
    }
}
