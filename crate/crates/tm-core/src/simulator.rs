//! Bounded token-flow execution of a static model.
//!
//! Each tick every live token advances along exactly one outgoing flow arc
//! of its stage, chosen deterministically (lowest arc id); tokens with no
//! outgoing flow vanish. A trigger arc fires on the tick after its source
//! stage was occupied and spawns a fresh token at its target — the domino
//! step that starts another flow. Execution halts at quiescence or after
//! `max_ticks`, so cyclic models stay bounded.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{Chronology, ChronologyError};
use crate::dynamics::{DynamicModel, EventId};
use crate::model::{ArcId, Direction, StageId, StageKind, StaticModel};

/// Identifier of a token, assigned in spawn order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenId(pub u32);

/// A thing mid-flow: where it is now and when it appeared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub id: TokenId,
    pub stage: StageId,
    pub birth_tick: usize,
}

/// One tick of a trace: every (token, stage) occupation after movement,
/// plus the trigger arcs that fired this tick.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRecord {
    pub occupations: Vec<(TokenId, StageId)>,
    pub fired: Vec<ArcId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub ticks: Vec<TickRecord>,
}

/// A scheduled token injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpawnPoint {
    pub stage: StageId,
    pub tick: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error("stage {0} cannot spawn tokens: only create and inbound transfer stages may")]
    InvalidSourceStage(StageId),
    #[error("stage {0} does not belong to the host model")]
    ForeignStage(StageId),
    #[error("the trace entered no event region")]
    EmptyChronology,
}

/// What a token does at a stage with several outgoing flow arcs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FanOutPolicy {
    /// Follow the lowest-id arc only.
    #[default]
    LowestArc,
    /// Duplicate the token down every outgoing arc.
    Fork,
}

/// Runs the token walker with the default fan-out policy. Sources must be
/// create stages or transfers not marked output.
pub fn simulate(
    model: &StaticModel,
    sources: &[SpawnPoint],
    max_ticks: usize,
) -> Result<Trace, SimulationError> {
    simulate_with(model, sources, max_ticks, FanOutPolicy::default())
}

/// Runs the token walker under an explicit fan-out policy.
pub fn simulate_with(
    model: &StaticModel,
    sources: &[SpawnPoint],
    max_ticks: usize,
    policy: FanOutPolicy,
) -> Result<Trace, SimulationError> {
    for spawn in sources {
        let stage = model
            .stage(spawn.stage)
            .ok_or(SimulationError::ForeignStage(spawn.stage))?;
        let ok = stage.kind == StageKind::Create
            || (stage.kind == StageKind::Transfer && stage.direction != Some(Direction::Output));
        if !ok {
            return Err(SimulationError::InvalidSourceStage(spawn.stage));
        }
    }

    let mut spawns: BTreeMap<usize, Vec<StageId>> = BTreeMap::new();
    for spawn in sources {
        spawns.entry(spawn.tick).or_default().push(spawn.stage);
    }
    for list in spawns.values_mut() {
        list.sort();
    }

    let mut trace = Trace::default();
    let mut live: Vec<Token> = Vec::new();
    let mut next_token = 0u32;
    // Stages occupied on the previous tick; their outgoing triggers fire now.
    let mut occupied_before: BTreeSet<StageId> = BTreeSet::new();

    for tick in 0..max_ticks {
        // Movement: tokens advance along outgoing flow arcs or vanish.
        let mut moved: Vec<Token> = Vec::new();
        for token in &live {
            match policy {
                FanOutPolicy::LowestArc => {
                    let next = model
                        .flow_arcs_from(token.stage)
                        .min_by_key(|a| a.id)
                        .map(|a| a.to);
                    if let Some(stage) = next {
                        moved.push(Token { stage, ..*token });
                    }
                }
                FanOutPolicy::Fork => {
                    // The original id rides the lowest arc; clones take the rest.
                    let mut arcs: Vec<_> = model.flow_arcs_from(token.stage).collect();
                    arcs.sort_by_key(|a| a.id);
                    for (i, arc) in arcs.iter().enumerate() {
                        if i == 0 {
                            moved.push(Token {
                                stage: arc.to,
                                ..*token
                            });
                        } else {
                            moved.push(Token {
                                id: TokenId(next_token),
                                stage: arc.to,
                                birth_tick: token.birth_tick,
                            });
                            next_token += 1;
                        }
                    }
                }
            }
        }

        // Triggers whose source was occupied last tick fire and spawn.
        let mut fired: Vec<ArcId> = Vec::new();
        for arc in model.arcs() {
            if arc.kind == crate::model::ArcKind::Trigger && occupied_before.contains(&arc.from) {
                fired.push(arc.id);
                moved.push(Token {
                    id: TokenId(next_token),
                    stage: arc.to,
                    birth_tick: tick,
                });
                next_token += 1;
            }
        }

        // Scheduled injections for this tick.
        if let Some(stages) = spawns.remove(&tick) {
            for stage in stages {
                moved.push(Token {
                    id: TokenId(next_token),
                    stage,
                    birth_tick: tick,
                });
                next_token += 1;
            }
        }

        live = moved;
        if live.is_empty() && spawns.is_empty() {
            break;
        }

        occupied_before = live.iter().map(|t| t.stage).collect();
        let mut occupations: Vec<(TokenId, StageId)> =
            live.iter().map(|t| (t.id, t.stage)).collect();
        occupations.sort();
        fired.sort();
        trace.ticks.push(TickRecord { occupations, fired });
    }
    Ok(trace)
}

/// Maps a trace onto a dynamic model's events: an event occurs at the tick
/// its region is first entered; ticks collapse to slots preserving order
/// and simultaneity. Events never entered are absent.
pub fn trace_to_chronology(
    trace: &Trace,
    dyn_model: &DynamicModel,
) -> Result<Chronology, SimulationError> {
    for tick in &trace.ticks {
        for &(_, stage) in &tick.occupations {
            if dyn_model.host().stage(stage).is_none() {
                return Err(SimulationError::ForeignStage(stage));
            }
        }
    }
    let mut first_entry: BTreeMap<EventId, usize> = BTreeMap::new();
    for (tick_index, tick) in trace.ticks.iter().enumerate() {
        let occupied: BTreeSet<StageId> = tick.occupations.iter().map(|&(_, s)| s).collect();
        for event in dyn_model.events() {
            if first_entry.contains_key(&event.id) {
                continue;
            }
            if event.region.stages.iter().any(|s| occupied.contains(s)) {
                first_entry.insert(event.id, tick_index);
            }
        }
    }
    if first_entry.is_empty() {
        return Err(SimulationError::EmptyChronology);
    }
    let mut by_tick: BTreeMap<usize, BTreeSet<EventId>> = BTreeMap::new();
    for (event, tick) in first_entry {
        by_tick.entry(tick).or_default().insert(event);
    }
    Chronology::new(by_tick.into_values().collect()).map_err(|e| match e {
        ChronologyError::Empty => SimulationError::EmptyChronology,
        other => unreachable!("grouped slots are non-empty and disjoint: {other}"),
    })
}
