//! The four reference programs parse in source form.

use loopw::parser::parse_program;

fn corpus(name: &str) -> String {
    let path = format!("{}/tests/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

#[test]
fn every_corpus_program_parses() {
    for name in ["add.loop", "ackermann.loop", "negation.loop", "shiftreset.loop"] {
        if let Err(e) = parse_program(&corpus(name), name) {
            panic!("{name}: {e}");
        }
    }
}
