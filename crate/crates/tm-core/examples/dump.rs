fn main() {
    let path = std::env::args().nth(1).expect("usage: dump FILE.tm");
    let text = std::fs::read_to_string(&path).expect("readable file");
    let (_, model) = tm_core::tmlang::parse(&text).expect("parses");
    println!("== thimacs ==");
    for t in model.thimacs() {
        println!("{}  {}", t.id, model.thimac_path(t.id));
    }
    println!("== stages ==");
    for s in model.stages() {
        println!("{}  {}", s.id.0, model.stage_path(s.id));
    }
    println!("== arcs ==");
    for a in model.arcs() {
        println!("{}  {:?}  {} -> {}", a.id.0, a.kind, model.stage_path(a.from), model.stage_path(a.to));
    }
    let diags = tm_core::validate_model(&model);
    println!("== diagnostics: {} ==", diags.len());
    for d in diags {
        println!("{:?} {:?} {}", d.severity, d.code, d.message);
    }
}
