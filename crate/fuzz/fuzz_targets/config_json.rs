#![no_main]

use hlgauge::experiments::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = ExperimentConfig::from_json_bytes(data) {
        let s = c.to_canonical_json();
        let back = ExperimentConfig::from_json_bytes(s.as_bytes()).expect("canonical parses");
        assert_eq!(back, c, "canonical round trip must be lossless");
    }
});
