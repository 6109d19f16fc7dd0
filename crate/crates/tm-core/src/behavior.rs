//! Chronology constraints and acceptable behaviors.
//!
//! The event graph is read as an initial constraint on when events may
//! happen. A flow edge A -> B means B comes after A whenever both occur,
//! and an event fed by flow needs all of its flow sources done first. A
//! trigger edge A -> B is stronger in one way and looser in another: once A
//! occurs, B must occur no later than the next slot (the domino
//! obligation), and a trigger-fed event must have some trigger source in
//! the slot immediately before it — unless flow also feeds it, in which
//! case either discipline is enough. Events in one slot are simultaneous
//! and must be mutually unconstrained. Each event occurs at most once;
//! source events may be present or absent.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{EventGraph, EventId};
use crate::model::ArcKind;

/// An ordered sequence of non-empty, disjoint simultaneity sets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chronology {
    slots: Vec<BTreeSet<EventId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChronologyError {
    #[error("a chronology needs at least one event")]
    Empty,
    #[error("slot {0} is empty")]
    EmptySlot(usize),
    #[error("event {0} appears more than once")]
    RepeatedEvent(EventId),
}

impl Chronology {
    pub fn new(slots: Vec<BTreeSet<EventId>>) -> Result<Chronology, ChronologyError> {
        if slots.is_empty() {
            return Err(ChronologyError::Empty);
        }
        let mut seen = BTreeSet::new();
        for (i, slot) in slots.iter().enumerate() {
            if slot.is_empty() {
                return Err(ChronologyError::EmptySlot(i));
            }
            for &e in slot {
                if !seen.insert(e) {
                    return Err(ChronologyError::RepeatedEvent(e));
                }
            }
        }
        Ok(Chronology { slots })
    }

    /// Builds a strictly sequential chronology, one event per slot.
    pub fn sequence(events: impl IntoIterator<Item = EventId>) -> Result<Chronology, ChronologyError> {
        Chronology::new(
            events
                .into_iter()
                .map(|e| BTreeSet::from([e]))
                .collect(),
        )
    }

    pub fn slots(&self) -> &[BTreeSet<EventId>] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn events(&self) -> BTreeSet<EventId> {
        self.slots.iter().flatten().copied().collect()
    }

    /// Slot index of an event, if present.
    pub fn position(&self, event: EventId) -> Option<usize> {
        self.slots.iter().position(|s| s.contains(&event))
    }

    /// Renders `(E1,E2) → E3` given a labeling function.
    pub fn render(&self, label: impl Fn(EventId) -> String) -> String {
        self.slots
            .iter()
            .map(|slot| {
                let names: Vec<String> = slot.iter().map(|&e| label(e)).collect();
                if names.len() == 1 {
                    names.into_iter().next().expect("non-empty slot")
                } else {
                    format!("({})", names.join(","))
                }
            })
            .collect::<Vec<_>>()
            .join(" → ")
    }
}

/// The chronology constraints one event graph induces.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    /// Every event the source graph mentions.
    pub events: BTreeSet<EventId>,
    /// Flow pairs (A, B): B after A whenever both occur.
    pub precedence: BTreeSet<(EventId, EventId)>,
    /// Trigger pairs (A, B): A occurring obliges B by the next slot.
    pub obligation: BTreeSet<(EventId, EventId)>,
    /// Per event, the flow sources that must all have occurred earlier.
    pub flow_sources: BTreeMap<EventId, BTreeSet<EventId>>,
    /// Per event, the trigger sources, one of which must sit in the
    /// immediately preceding slot.
    pub trigger_sources: BTreeMap<EventId, BTreeSet<EventId>>,
}

impl ConstraintSet {
    /// True when two events may share a slot: no edge connects them.
    pub fn unconstrained_pair(&self, a: EventId, b: EventId) -> bool {
        let linked = |x, y| {
            self.precedence.contains(&(x, y)) || self.obligation.contains(&(x, y))
        };
        !linked(a, b) && !linked(b, a)
    }

    /// Events in a cyclic trigger chain, if any. Enumeration still
    /// terminates on these; the note explains an empty or thin result.
    pub fn cyclic_obligations(&self) -> Vec<EventId> {
        // Iteratively strip events with no outgoing obligation; leftovers
        // form trigger cycles.
        let mut remaining: BTreeSet<EventId> = self.events.clone();
        loop {
            let removable: Vec<EventId> = remaining
                .iter()
                .copied()
                .filter(|&e| {
                    !self
                        .obligation
                        .iter()
                        .any(|&(a, b)| a == e && remaining.contains(&b))
                })
                .collect();
            if removable.is_empty() {
                break;
            }
            for e in removable {
                remaining.remove(&e);
            }
        }
        remaining.into_iter().collect()
    }
}

/// Reads the constraint set off an event graph.
pub fn derive_constraints(graph: &EventGraph) -> ConstraintSet {
    let mut cs = ConstraintSet {
        events: graph.events.clone(),
        ..ConstraintSet::default()
    };
    for edge in &graph.edges {
        match edge.kind {
            ArcKind::Flow => {
                cs.precedence.insert((edge.from, edge.to));
                cs.flow_sources.entry(edge.to).or_default().insert(edge.from);
            }
            ArcKind::Trigger => {
                cs.obligation.insert((edge.from, edge.to));
                cs.trigger_sources
                    .entry(edge.to)
                    .or_default()
                    .insert(edge.from);
            }
        }
    }
    cs
}

/// Which constraint a trace broke.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Violation {
    /// Flow demands A strictly before B; both occurred out of order.
    Precedence { first: EventId, second: EventId },
    /// A occurred at `slot`, so B had to occur by `slot + 1` and did not.
    Obligation {
        source: EventId,
        target: EventId,
        slot: usize,
    },
    /// A flow-fed event occurred without all its sources done earlier.
    FlowEnablement {
        event: EventId,
        missing: Vec<EventId>,
    },
    /// A trigger-fed event occurred with no source in the previous slot.
    TriggerEnablement { event: EventId, slot: usize },
    /// Two linked events shared a slot.
    Simultaneity {
        first: EventId,
        second: EventId,
        slot: usize,
    },
}

/// The outcome of checking a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorError {
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("{count} events exceed the bound of {max}")]
    TooManyEvents { count: usize, max: usize },
    #[error("the trace is not an acceptable behavior")]
    TraceNotAccepted,
}

/// Checks one chronology against a constraint set, reporting every broken
/// constraint. This is the direct reading of the constraint definitions and
/// doubles as the filter inside the brute-force oracle.
pub fn check_trace(cs: &ConstraintSet, trace: &Chronology) -> Result<Verdict, BehaviorError> {
    for e in trace.events() {
        if !cs.events.contains(&e) {
            return Err(BehaviorError::UnknownEvent(e));
        }
    }
    let pos: BTreeMap<EventId, usize> = trace
        .slots()
        .iter()
        .enumerate()
        .flat_map(|(i, slot)| slot.iter().map(move |&e| (e, i)))
        .collect();
    let mut violations = Vec::new();

    for &(a, b) in &cs.precedence {
        if let (Some(&pa), Some(&pb)) = (pos.get(&a), pos.get(&b)) {
            if pa >= pb {
                violations.push(Violation::Precedence { first: a, second: b });
            }
        }
    }

    for &(a, b) in &cs.obligation {
        if let Some(&pa) = pos.get(&a) {
            match pos.get(&b) {
                Some(&pb) if pb <= pa + 1 => {}
                _ => violations.push(Violation::Obligation {
                    source: a,
                    target: b,
                    slot: pa,
                }),
            }
        }
    }

    for (&event, &p) in &pos {
        let flow = cs.flow_sources.get(&event);
        let triggers = cs.trigger_sources.get(&event);
        let flow_ok = flow.map(|sources| {
            sources
                .iter()
                .all(|s| pos.get(s).is_some_and(|&ps| ps < p))
        });
        let trigger_ok = triggers.map(|sources| {
            p >= 1 && sources.iter().any(|s| pos.get(s) == Some(&(p - 1)))
        });
        match (flow_ok, trigger_ok) {
            (Some(false), None) => {
                let missing = flow
                    .expect("flow sources present")
                    .iter()
                    .filter(|s| !pos.get(s).is_some_and(|&ps| ps < p))
                    .copied()
                    .collect();
                violations.push(Violation::FlowEnablement { event, missing });
            }
            (None, Some(false)) => {
                violations.push(Violation::TriggerEnablement { event, slot: p });
            }
            (Some(false), Some(false)) => {
                violations.push(Violation::TriggerEnablement { event, slot: p });
            }
            _ => {}
        }
    }

    for (i, slot) in trace.slots().iter().enumerate() {
        let members: Vec<EventId> = slot.iter().copied().collect();
        for (j, &a) in members.iter().enumerate() {
            for &b in &members[j + 1..] {
                if !cs.unconstrained_pair(a, b) {
                    violations.push(Violation::Simultaneity {
                        first: a,
                        second: b,
                        slot: i,
                    });
                }
            }
        }
    }

    violations.sort();
    violations.dedup();
    Ok(Verdict {
        accepted: violations.is_empty(),
        violations,
    })
}

/// Options for behavior enumeration.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    /// Refuse inputs with more events than this.
    pub max_events: usize,
    /// Permit slots holding several mutually unconstrained events.
    pub allow_simultaneity: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            max_events: 12,
            allow_simultaneity: true,
        }
    }
}

/// Notes attached to an enumeration result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnumerationNote {
    /// These events sit on a trigger cycle; their obligations may be
    /// unsatisfiable in single-occurrence chronologies.
    CyclicObligation(Vec<EventId>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BehaviorSet {
    pub behaviors: BTreeSet<Chronology>,
    pub notes: Vec<EnumerationNote>,
}

/// Enumerates exactly the non-empty chronologies over subsets of `events`
/// that satisfy every constraint, by slot-by-slot extension with pruning.
pub fn enumerate_behaviors(
    cs: &ConstraintSet,
    events: &BTreeSet<EventId>,
    options: EnumerationOptions,
) -> Result<BehaviorSet, BehaviorError> {
    if events.len() > options.max_events {
        return Err(BehaviorError::TooManyEvents {
            count: events.len(),
            max: options.max_events,
        });
    }
    let mut out = BehaviorSet::default();
    let cycle = cs.cyclic_obligations();
    if !cycle.is_empty() {
        out.notes.push(EnumerationNote::CyclicObligation(cycle));
    }

    let mut slots: Vec<BTreeSet<EventId>> = Vec::new();
    let mut used: BTreeSet<EventId> = BTreeSet::new();
    extend(cs, events, options.allow_simultaneity, &mut slots, &mut used, &mut out.behaviors);
    Ok(out)
}

/// Depth-first extension. `slots` is a viable prefix: placement rules held
/// at every step and every obligation whose deadline lies strictly inside
/// the prefix is met.
fn extend(
    cs: &ConstraintSet,
    events: &BTreeSet<EventId>,
    allow_simultaneity: bool,
    slots: &mut Vec<BTreeSet<EventId>>,
    used: &mut BTreeSet<EventId>,
    out: &mut BTreeSet<Chronology>,
) {
    // Emit if complete: obligations from the last slot must be met too.
    if !slots.is_empty() && obligations_met(cs, slots, used, None) {
        out.insert(Chronology {
            slots: slots.clone(),
        });
    }

    let available: Vec<EventId> = events.iter().copied().filter(|e| !used.contains(e)).collect();
    if available.is_empty() {
        return;
    }

    let mut candidate_slots: Vec<BTreeSet<EventId>> = Vec::new();
    let placeable: Vec<EventId> = available
        .iter()
        .copied()
        .filter(|&e| can_place(cs, e, slots, used))
        .collect();
    if allow_simultaneity {
        grow_slots(cs, &placeable, &mut BTreeSet::new(), 0, &mut candidate_slots);
    } else {
        candidate_slots.extend(placeable.iter().map(|&e| BTreeSet::from([e])));
    }

    for slot in candidate_slots {
        // Obligations deadlined at the new slot must land in it.
        if !obligations_met(cs, slots, used, Some(&slot)) {
            continue;
        }
        for &e in &slot {
            used.insert(e);
        }
        slots.push(slot);
        extend(cs, events, allow_simultaneity, slots, used, out);
        let slot = slots.pop().expect("just pushed");
        for e in slot {
            used.remove(&e);
        }
    }
}

/// All non-empty subsets of `placeable` whose members are pairwise
/// unconstrained.
fn grow_slots(
    cs: &ConstraintSet,
    placeable: &[EventId],
    current: &mut BTreeSet<EventId>,
    from: usize,
    out: &mut Vec<BTreeSet<EventId>>,
) {
    for i in from..placeable.len() {
        let e = placeable[i];
        if current.iter().all(|&x| cs.unconstrained_pair(x, e)) {
            current.insert(e);
            out.push(current.clone());
            grow_slots(cs, placeable, current, i + 1, out);
            current.remove(&e);
        }
    }
}

/// Placement rules for one event at the next slot index: enablement against
/// the prefix, and no flow target already placed.
fn can_place(
    cs: &ConstraintSet,
    event: EventId,
    slots: &[BTreeSet<EventId>],
    used: &BTreeSet<EventId>,
) -> bool {
    // A flow successor already placed would violate precedence.
    if cs
        .precedence
        .iter()
        .any(|&(a, b)| a == event && (used.contains(&b) || b == event))
    {
        return false;
    }
    let flow = cs.flow_sources.get(&event);
    let triggers = cs.trigger_sources.get(&event);
    let flow_ok = flow.map(|sources| sources.iter().all(|s| used.contains(s)));
    let trigger_ok = triggers.map(|sources| {
        slots
            .last()
            .is_some_and(|prev| sources.iter().any(|s| prev.contains(s)))
    });
    match (flow_ok, trigger_ok) {
        (None, None) => true,
        (Some(f), None) => f,
        (None, Some(t)) => t,
        (Some(f), Some(t)) => f || t,
    }
}

/// Checks the obligations that fall due at the boundary: for every placed
/// source whose deadline is the next slot, the target is already placed or
/// sits in `next`. With `next` = None this is the emission check.
fn obligations_met(
    cs: &ConstraintSet,
    slots: &[BTreeSet<EventId>],
    used: &BTreeSet<EventId>,
    next: Option<&BTreeSet<EventId>>,
) -> bool {
    let Some(last) = slots.last() else {
        return true;
    };
    for &(a, b) in &cs.obligation {
        if last.contains(&a) && !used.contains(&b) {
            match next {
                Some(slot) if slot.contains(&b) => {}
                _ => return false,
            }
        }
    }
    true
}

/// Reference answer: every ordered partition of every non-empty subset of
/// `events`, filtered by `check_trace`. Exponential, so capped at six
/// events; exists to pin down `enumerate_behaviors`.
pub fn brute_force_oracle(
    cs: &ConstraintSet,
    events: &BTreeSet<EventId>,
) -> Result<BTreeSet<Chronology>, BehaviorError> {
    const ORACLE_MAX: usize = 6;
    if events.len() > ORACLE_MAX {
        return Err(BehaviorError::TooManyEvents {
            count: events.len(),
            max: ORACLE_MAX,
        });
    }
    let items: Vec<EventId> = events.iter().copied().collect();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << items.len()) {
        let subset: Vec<EventId> = items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        for partition in ordered_partitions(&subset) {
            let trace = Chronology::new(partition).expect("generator emits valid slots");
            if check_trace(cs, &trace)?.accepted {
                out.insert(trace);
            }
        }
    }
    Ok(out)
}

/// Every ordered set partition of `items`.
fn ordered_partitions(items: &[EventId]) -> Vec<Vec<BTreeSet<EventId>>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let rest = ordered_partitions(&items[1..]);
    let mut out = Vec::new();
    for partition in rest {
        // Insert `first` into each existing slot ...
        for i in 0..partition.len() {
            let mut next = partition.clone();
            next[i].insert(first);
            out.push(next);
        }
        // ... or as a new singleton slot at each position.
        for i in 0..=partition.len() {
            let mut next = partition.clone();
            next.insert(i, BTreeSet::from([first]));
            out.push(next);
        }
    }
    out
}

/// How one behavioral step is grounded in the static model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkBasis {
    /// A flow arc carries the thing from the first event into the second.
    FlowBased,
    /// A trigger arc makes the first event cause the second.
    TriggerBased,
    /// Nothing in the static model orders the pair; the modeler chose.
    ModelerChoice,
}

/// A classified adjacent pair in an accepted trace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClassifiedLink {
    /// Index of the earlier slot; the pair spans `slot` to `slot + 1`.
    pub slot: usize,
    pub from: EventId,
    pub to: EventId,
    pub basis: LinkBasis,
}

/// Labels every adjacent event pair of an accepted trace: flow-based if a
/// flow edge connects the pair, else trigger-based, else the modeler's
/// choice. Flow wins when both kinds connect the same pair.
pub fn classify_links(
    graph: &EventGraph,
    trace: &Chronology,
) -> Result<Vec<ClassifiedLink>, BehaviorError> {
    let cs = derive_constraints(graph);
    if !check_trace(&cs, trace)?.accepted {
        return Err(BehaviorError::TraceNotAccepted);
    }
    let mut out = Vec::new();
    for (i, window) in trace.slots().windows(2).enumerate() {
        for &from in &window[0] {
            for &to in &window[1] {
                let has = |kind: ArcKind| {
                    graph
                        .edges
                        .iter()
                        .any(|e| e.from == from && e.to == to && e.kind == kind)
                };
                let basis = if has(ArcKind::Flow) {
                    LinkBasis::FlowBased
                } else if has(ArcKind::Trigger) {
                    LinkBasis::TriggerBased
                } else {
                    LinkBasis::ModelerChoice
                };
                out.push(ClassifiedLink {
                    slot: i,
                    from,
                    to,
                    basis,
                });
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(raw: &[u32]) -> BTreeSet<EventId> {
        raw.iter().map(|&i| EventId(i)).collect()
    }

    /// The three-event graph with triggers E1 -> E3 and E2 -> E3.
    fn grass_graph() -> EventGraph {
        let mut g = EventGraph::new([EventId(1), EventId(2), EventId(3)]);
        g.add_edge(EventId(1), EventId(3), ArcKind::Trigger);
        g.add_edge(EventId(2), EventId(3), ArcKind::Trigger);
        g
    }

    fn chron(slots: &[&[u32]]) -> Chronology {
        Chronology::new(slots.iter().map(|s| ids(s)).collect()).unwrap()
    }

    #[test]
    fn grass_constraints() {
        let cs = derive_constraints(&grass_graph());
        assert_eq!(
            cs.obligation,
            BTreeSet::from([(EventId(1), EventId(3)), (EventId(2), EventId(3))])
        );
        assert_eq!(
            cs.trigger_sources.get(&EventId(3)),
            Some(&ids(&[1, 2]))
        );
        assert!(cs.precedence.is_empty());
    }

    #[test]
    fn empty_graph_means_empty_constraints() {
        let g = EventGraph::new([EventId(0)]);
        let cs = derive_constraints(&g);
        assert!(cs.precedence.is_empty());
        assert!(cs.obligation.is_empty());
    }

    #[test]
    fn grass_behaviors_are_exactly_five() {
        let cs = derive_constraints(&grass_graph());
        let set = enumerate_behaviors(&cs, &ids(&[1, 2, 3]), EnumerationOptions::default())
            .unwrap()
            .behaviors;
        let expected: BTreeSet<Chronology> = [
            chron(&[&[1, 2], &[3]]),
            chron(&[&[1], &[3], &[2]]),
            chron(&[&[1], &[3]]),
            chron(&[&[2], &[3], &[1]]),
            chron(&[&[2], &[3]]),
        ]
        .into_iter()
        .collect();
        assert_eq!(set, expected);
    }

    #[test]
    fn forbidden_grass_sequences_rejected_with_obligation() {
        let cs = derive_constraints(&grass_graph());
        let verdict = check_trace(&cs, &chron(&[&[1], &[2], &[3]])).unwrap();
        assert!(!verdict.accepted);
        assert!(verdict.violations.iter().any(|v| matches!(
            v,
            Violation::Obligation {
                source: EventId(1),
                target: EventId(3),
                ..
            }
        )));
        let verdict = check_trace(&cs, &chron(&[&[2], &[1], &[3]])).unwrap();
        assert!(!verdict.accepted);
    }

    #[test]
    fn later_source_is_satisfied_by_an_earlier_target() {
        let cs = derive_constraints(&grass_graph());
        let verdict = check_trace(&cs, &chron(&[&[1], &[3], &[2]])).unwrap();
        assert!(verdict.accepted, "{:?}", verdict.violations);
    }

    #[test]
    fn empty_constraints_accept_any_permutation() {
        let cs = derive_constraints(&EventGraph::new([EventId(1), EventId(2)]));
        for trace in [
            chron(&[&[1], &[2]]),
            chron(&[&[2], &[1]]),
            chron(&[&[1, 2]]),
        ] {
            assert!(check_trace(&cs, &trace).unwrap().accepted);
        }
    }

    #[test]
    fn unknown_event_is_an_error() {
        let cs = derive_constraints(&grass_graph());
        let err = check_trace(&cs, &chron(&[&[9]])).unwrap_err();
        assert_eq!(err, BehaviorError::UnknownEvent(EventId(9)));
    }

    #[test]
    fn single_unconstrained_event() {
        let cs = derive_constraints(&EventGraph::new([EventId(7)]));
        let set = enumerate_behaviors(&cs, &ids(&[7]), EnumerationOptions::default())
            .unwrap()
            .behaviors;
        assert_eq!(set, BTreeSet::from([chron(&[&[7]])]));
    }

    #[test]
    fn three_unconstrained_events_have_25_behaviors() {
        let cs = derive_constraints(&EventGraph::new(ids(&[1, 2, 3])));
        let oracle = brute_force_oracle(&cs, &ids(&[1, 2, 3])).unwrap();
        assert_eq!(oracle.len(), 25);
        let fast = enumerate_behaviors(&cs, &ids(&[1, 2, 3]), EnumerationOptions::default())
            .unwrap()
            .behaviors;
        assert_eq!(fast, oracle);
    }

    #[test]
    fn self_trigger_allows_no_single_occurrence_behavior() {
        let mut g = EventGraph::new([EventId(0)]);
        g.add_edge(EventId(0), EventId(0), ArcKind::Trigger);
        let cs = derive_constraints(&g);
        let oracle = brute_force_oracle(&cs, &ids(&[0])).unwrap();
        assert!(oracle.is_empty());
        let result =
            enumerate_behaviors(&cs, &ids(&[0]), EnumerationOptions::default()).unwrap();
        assert!(result.behaviors.is_empty());
        assert!(matches!(
            result.notes.first(),
            Some(EnumerationNote::CyclicObligation(_))
        ));
    }

    #[test]
    fn linear_flow_chain_yields_prefixes() {
        let mut g = EventGraph::new(ids(&[0, 1, 2]));
        g.add_edge(EventId(0), EventId(1), ArcKind::Flow);
        g.add_edge(EventId(1), EventId(2), ArcKind::Flow);
        let cs = derive_constraints(&g);
        let set = enumerate_behaviors(&cs, &ids(&[0, 1, 2]), EnumerationOptions::default())
            .unwrap()
            .behaviors;
        let expected: BTreeSet<Chronology> = [
            chron(&[&[0]]),
            chron(&[&[0], &[1]]),
            chron(&[&[0], &[1], &[2]]),
        ]
        .into_iter()
        .collect();
        assert_eq!(set, expected);
    }

    #[test]
    fn simultaneity_can_be_disallowed() {
        let cs = derive_constraints(&grass_graph());
        let set = enumerate_behaviors(
            &cs,
            &ids(&[1, 2, 3]),
            EnumerationOptions {
                allow_simultaneity: false,
                ..EnumerationOptions::default()
            },
        )
        .unwrap()
        .behaviors;
        assert!(!set.contains(&chron(&[&[1, 2], &[3]])));
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn too_many_events_rejected() {
        let events: BTreeSet<EventId> = (0..13).map(EventId).collect();
        let cs = derive_constraints(&EventGraph::new(events.clone()));
        assert!(matches!(
            enumerate_behaviors(&cs, &events, EnumerationOptions::default()),
            Err(BehaviorError::TooManyEvents { .. })
        ));
        let seven: BTreeSet<EventId> = (0..7).map(EventId).collect();
        assert!(matches!(
            brute_force_oracle(&derive_constraints(&EventGraph::new(seven.clone())), &seven),
            Err(BehaviorError::TooManyEvents { .. })
        ));
    }

    #[test]
    fn classification_covers_each_pair_once() {
        let mut g = EventGraph::new(ids(&[0, 1, 2]));
        g.add_edge(EventId(0), EventId(1), ArcKind::Flow);
        g.add_edge(EventId(0), EventId(1), ArcKind::Trigger);
        let trace = chron(&[&[0], &[1], &[2]]);
        let links = classify_links(&g, &trace).unwrap();
        assert_eq!(
            links,
            vec![
                ClassifiedLink {
                    slot: 0,
                    from: EventId(0),
                    to: EventId(1),
                    basis: LinkBasis::FlowBased,
                },
                ClassifiedLink {
                    slot: 1,
                    from: EventId(1),
                    to: EventId(2),
                    basis: LinkBasis::ModelerChoice,
                },
            ]
        );
    }

    #[test]
    fn classification_requires_an_accepted_trace() {
        let g = grass_graph();
        let err = classify_links(&g, &chron(&[&[1], &[2], &[3]])).unwrap_err();
        assert_eq!(err, BehaviorError::TraceNotAccepted);
    }

    #[test]
    fn chronology_construction_guards() {
        assert_eq!(Chronology::new(vec![]), Err(ChronologyError::Empty));
        assert_eq!(
            Chronology::new(vec![BTreeSet::new()]),
            Err(ChronologyError::EmptySlot(0))
        );
        assert_eq!(
            Chronology::new(vec![ids(&[1]), ids(&[1])]),
            Err(ChronologyError::RepeatedEvent(EventId(1)))
        );
    }

    #[test]
    fn render_uses_parens_for_simultaneity() {
        let c = chron(&[&[1, 2], &[3]]);
        assert_eq!(c.render(|e| format!("E{}", e.0)), "(E1,E2) → E3");
    }
}
