//! Replays the checked-in fuzz seeds through the decoders they target.

use std::fs;
use std::path::PathBuf;

use qesprob::cli::RunConfig;
use qesprob::report::{parse_batch_csv, parse_summary_json};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn summary_seeds_parse_and_round_trip() {
    for (name, bytes) in seeds("summary_json") {
        let record = parse_summary_json(std::str::from_utf8(&bytes).unwrap())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = parse_summary_json(&record.to_json()).unwrap();
        assert_eq!(record.to_json(), again.to_json(), "{name}");
    }
}

#[test]
fn csv_seeds_parse() {
    for (name, bytes) in seeds("batch_csv") {
        let rows = parse_batch_csv(std::str::from_utf8(&bytes).unwrap())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(rows.is_empty(), name.starts_with("header_only"), "{name}");
    }
}

#[test]
fn argument_seeds_decode() {
    for (name, bytes) in seeds("run_config_args") {
        let text = String::from_utf8(bytes).unwrap();
        let parsed = RunConfig::from_args(text.split('\0'));
        assert_eq!(
            parsed.is_err(),
            name.starts_with("invalid"),
            "{name}: {parsed:?}"
        );
    }
}
