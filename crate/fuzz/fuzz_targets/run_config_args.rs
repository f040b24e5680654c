#![no_main]

use libfuzzer_sys::fuzz_target;
use qesprob::cli::RunConfig;

// Arguments are NUL-separated.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_args(text.split('\0')) {
        assert!(cfg.validate().is_ok());
        assert!(cfg.batch_size > 0 && cfg.samples > 0);
    }
});
