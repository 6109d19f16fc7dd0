//! Regenerates a fixture's expected-behaviors document on stdout, checked
//! against the brute-force oracle when small enough.

use std::collections::BTreeSet;

use tm_core::behavior::{
    brute_force_oracle, derive_constraints, enumerate_behaviors, EnumerationOptions,
};
use tm_core::files;

fn main() {
    let mut args = std::env::args().skip(1);
    let model_path = args.next().expect("usage: expected MODEL.tm EVENTS.json");
    let events_path = args.next().expect("usage: expected MODEL.tm EVENTS.json");
    let model_text = std::fs::read_to_string(&model_path).expect("model file");
    let events_text = std::fs::read_to_string(&events_path).expect("events file");

    let (_, model) = tm_core::tmlang::parse(&model_text).expect("model parses");
    let dyn_model = files::load_events(&events_text, model).expect("events load");
    let graph = dyn_model.derive_event_graph();
    let cs = derive_constraints(&graph);
    let events: BTreeSet<_> = dyn_model.event_ids();
    let result = enumerate_behaviors(&cs, &events, EnumerationOptions::default()).expect("bound");

    if events.len() <= 6 {
        let oracle = brute_force_oracle(&cs, &events).expect("oracle bound");
        assert_eq!(
            result.behaviors, oracle,
            "enumeration disagrees with the oracle"
        );
        eprintln!("oracle agreement: {} behaviors", oracle.len());
    } else {
        eprintln!("{} behaviors (too many events for the oracle)", result.behaviors.len());
    }
    let doc = files::behaviors_document(result.behaviors, &dyn_model);
    println!("{}", serde_json::to_string(&doc).expect("render"));
}
