#![no_main]

use libfuzzer_sys::fuzz_target;

use gcs_tsp::solution::{parse_solution, serialize_solution};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(record) = parse_solution(text) {
        let written = serialize_solution(&record);
        let reread = parse_solution(&written).expect("serialized record parses");
        assert_eq!(written, serialize_solution(&reread));
    }
});
