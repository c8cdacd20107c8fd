#![no_main]

use libfuzzer_sys::fuzz_target;

use gcs_tsp::schema::{parse_instance, serialize_instance};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(instance) = parse_instance(text) {
        // anything we accept must survive a write-read cycle bit for bit
        let written = serialize_instance(&instance);
        let reread = parse_instance(&written).expect("serialized instance parses");
        assert_eq!(written, serialize_instance(&reread));
    }
});
