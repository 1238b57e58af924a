#![no_main]

use hlgauge::mform::FormData;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = FormData::from_json_bytes(data) {
        let s = f.to_json_string();
        let back = FormData::from_json_bytes(s.as_bytes()).expect("canonical parses");
        assert_eq!(back.to_json_string(), s, "canonical form must be stable");
    }
});
