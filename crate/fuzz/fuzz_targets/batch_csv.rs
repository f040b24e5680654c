#![no_main]

use libfuzzer_sys::fuzz_target;
use qesprob::report::parse_batch_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_batch_csv(text) {
        for row in &rows {
            assert!(row.n_excluded <= row.n_samples);
        }
    }
});
