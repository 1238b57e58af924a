#![no_main]

use hlgauge::experiments::TabulatedKernel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(k) = TabulatedKernel::from_json_bytes(data) {
        let s = k.to_json_string();
        let back = TabulatedKernel::from_json_bytes(s.as_bytes()).expect("canonical parses");
        assert_eq!(back.to_json_string(), s, "canonical form must be stable");
    }
});
