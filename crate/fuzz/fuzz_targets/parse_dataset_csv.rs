#![no_main]

use libfuzzer_sys::fuzz_target;

// the dataset parser must reject malformed CSV with an error, never panic
fuzz_target!(|data: &[u8]| {
    let _ = monoproj::io::parse_dataset(data);
});
