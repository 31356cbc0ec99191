//! Every bundled example parses, and the process names the documentation
//! relies on are present.

use pax_core::SpecFile;

fn load(name: &str) -> SpecFile {
    let path = format!("{}/../../examples/{name}", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    SpecFile::parse(name, &src).unwrap_or_else(|e| panic!("{e}"))
}

#[test]
fn every_bundled_example_parses_with_its_documented_processes() {
    for (file, procs) in [
        ("die.pax", &["Die"][..]),
        ("tau.pax", &["TA", "A", "ATP", "AP", "TEP", "EP"][..]),
        ("geometric.pax", &["Main", "Bare"][..]),
        ("majority.pax", &["Vote"][..]),
        ("interference.pax", &["Two", "Quot", "Sum"][..]),
        ("witness.pax", &["Wit", "Ta"][..]),
        ("handshake.pax", &["Sys", "Free"][..]),
    ] {
        let spec = load(file);
        for p in procs {
            assert!(spec.procs.contains_key(*p), "{file} lacks process {p}");
        }
    }
}

#[test]
fn printed_processes_reparse_to_the_same_term() {
    for file in [
        "die.pax",
        "tau.pax",
        "geometric.pax",
        "majority.pax",
        "interference.pax",
        "witness.pax",
        "handshake.pax",
    ] {
        let spec = load(file);
        for (name, term) in &spec.procs {
            let printed = term.to_string();
            let back = spec
                .parse_term(&printed)
                .unwrap_or_else(|e| panic!("{file}:{name}: `{printed}`: {e}"));
            assert_eq!(&back, term, "{file}:{name} round trip");
        }
    }
}
