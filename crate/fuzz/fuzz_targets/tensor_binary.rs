#![no_main]

use hlgauge::tensor::TensorData;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = TensorData::from_binary_bytes(data) {
        let bytes = t.to_binary_bytes();
        let back = TensorData::from_binary_bytes(&bytes).expect("canonical parses");
        assert_eq!(back.to_binary_bytes(), bytes, "canonical form must be stable");
    }
});
