#![no_main]

use libfuzzer_sys::fuzz_target;

use gcs_tsp_cli::bench::parse_manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_manifest(text);
});
