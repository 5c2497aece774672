//! Replays the checked-in fuzz corpus through the parsers on stable Rust.

use std::path::Path;

use proxlab::harness::{parse_trace_csv, ExperimentConfig};
use proxlab::zoo::parse_libsvm_str;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.display().to_string(),
                std::fs::read_to_string(&path).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn libsvm_seeds() {
    let results: Vec<bool> = seeds("libsvm_parse")
        .iter()
        .map(|(_, text)| parse_libsvm_str(text, None).is_ok())
        .collect();
    assert!(results.contains(&true) && results.contains(&false));
}

#[test]
fn config_seeds_parse() {
    for (name, text) in seeds("config_parse") {
        let cfg = ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(
            ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap(),
            cfg
        );
    }
}

#[test]
fn trace_seeds_parse() {
    for (name, text) in seeds("trace_csv_parse") {
        let rows = parse_trace_csv(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!rows.is_empty());
    }
}
