#![no_main]

use libfuzzer_sys::fuzz_target;
use qesprob::report::parse_summary_json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(record) = parse_summary_json(text) {
        let again = parse_summary_json(&record.to_json()).expect("round trip");
        assert_eq!(record.to_json(), again.to_json());
    }
});
