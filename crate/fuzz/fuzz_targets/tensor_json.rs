#![no_main]

use hlgauge::tensor::TensorData;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = TensorData::from_json_bytes(data) {
        let s = t.to_json_string();
        let back = TensorData::from_json_bytes(s.as_bytes()).expect("canonical parses");
        assert_eq!(back.to_json_string(), s, "canonical form must be stable");
    }
});
