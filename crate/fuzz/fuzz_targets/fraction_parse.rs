#![no_main]

use hlgauge::exponents::{Exponent, ExponentVector};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = s.parse::<Exponent>() {
        let back: Exponent = e.to_string().parse().expect("display round trip");
        assert_eq!(back, e);
    }
    if let Ok(v) = s.parse::<ExponentVector>() {
        let back: ExponentVector = v.display_list().parse().expect("display round trip");
        assert_eq!(back, v);
    }
});
