//! Library-level checks against the bundled fixture corpus.

use std::path::{Path, PathBuf};

use tm_core::behavior::{check_trace, derive_constraints};
use tm_core::dynamics::DynamicModel;
use tm_core::files;
use tm_core::json::{from_json, to_json};
use tm_core::simulator::{simulate, trace_to_chronology};
use tm_core::tmlang::{canonical_form, parse, reparse};
use tm_core::validate_model;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name))
        .unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

fn load(stem: &str) -> DynamicModel {
    let (_, model) = parse(&read(&format!("{stem}.tm"))).expect("fixture parses");
    files::load_events(&read(&format!("{stem}.events.json")), model).expect("events load")
}

#[test]
fn every_fixture_model_validates_without_errors() {
    for stem in [
        "grass",
        "equations-a",
        "equations-b",
        "equations-y0",
        "rooster",
        "flame",
        "water",
        "apollo",
        "elevator",
        "empty",
    ] {
        let (_, model) = parse(&read(&format!("{stem}.tm"))).expect("parses");
        let errors: Vec<_> = validate_model(&model)
            .into_iter()
            .filter(|d| d.is_error())
            .collect();
        assert!(errors.is_empty(), "{stem}: {errors:?}");
    }
}

#[test]
fn every_fixture_round_trips_in_both_formats() {
    for stem in [
        "grass",
        "equations-a",
        "equations-b",
        "equations-y0",
        "rooster",
        "flame",
        "water",
        "apollo",
        "elevator",
    ] {
        let (_, model) = parse(&read(&format!("{stem}.tm"))).expect("parses");
        let back = reparse(&model).expect("serializes and reparses");
        assert_eq!(
            canonical_form(&back),
            canonical_form(&model),
            "{stem} text round trip"
        );
        let json_back = from_json(&to_json(&model)).expect("interchange reads back");
        assert_eq!(json_back, model, "{stem} json round trip");
    }
}

#[test]
fn rain_alone_stays_out_of_the_bottle_subgraph() {
    let dyn_model = load("grass");
    let model = dyn_model.host();
    let rain = model.resolve_stage_path("Rain.create").unwrap();
    let trace = simulate(
        model,
        &[tm_core::simulator::SpawnPoint { stage: rain, tick: 0 }],
        20,
    )
    .unwrap();
    let bottle_stages: Vec<_> = ["Bottle.create", "Bottle.process", "Grass.wet.process"]
        .iter()
        .map(|p| model.resolve_stage_path(p).unwrap())
        .collect();
    for tick in &trace.ticks {
        for &(_, stage) in &tick.occupations {
            assert!(
                !bottle_stages.contains(&stage),
                "rain-only run reached {}",
                model.stage_path(stage)
            );
        }
    }
    // And it does reach the wetting.
    let wet = model.resolve_stage_path("Grass.wet.create").unwrap();
    assert!(trace
        .ticks
        .iter()
        .any(|t| t.occupations.iter().any(|&(_, s)| s == wet)));
}

#[test]
fn grass_simulations_map_to_the_expected_chronologies() {
    let dyn_model = load("grass");
    let cases = [
        ("grass.sources-rain.json", vec![vec!["E1"], vec!["E3"]]),
        ("grass.sources-bottle.json", vec![vec!["E2"], vec!["E3"]]),
        ("grass.sources-both.json", vec![vec!["E1", "E2"], vec!["E3"]]),
    ];
    for (sources_file, expected) in cases {
        let sources = files::load_sources(&read(sources_file)).unwrap();
        let trace = simulate(dyn_model.host(), &sources.spawn_points(), sources.max_ticks).unwrap();
        let chron = trace_to_chronology(&trace, &dyn_model).unwrap();
        let labels = files::chronology_labels(&chron, &dyn_model);
        let expected: Vec<Vec<String>> = expected
            .into_iter()
            .map(|s: Vec<&str>| s.into_iter().map(String::from).collect())
            .collect();
        assert_eq!(labels, expected, "{sources_file}");
        let cs = derive_constraints(&dyn_model.derive_event_graph());
        assert!(check_trace(&cs, &chron).unwrap().accepted);
    }
}

#[test]
fn frozen_behavior_sets_load_and_stay_consistent() {
    for stem in ["grass", "water", "rooster", "flame"] {
        let expected = files::load_behaviors(&read(&format!("{stem}.expected.json"))).unwrap();
        let dyn_model = load(stem);
        for slots in &expected {
            let chron = files::labels_to_chronology(slots, &dyn_model).unwrap();
            let cs = derive_constraints(&dyn_model.derive_event_graph());
            assert!(
                check_trace(&cs, &chron).unwrap().accepted,
                "{stem}: frozen behavior {slots:?} no longer accepted"
            );
        }
    }
}
