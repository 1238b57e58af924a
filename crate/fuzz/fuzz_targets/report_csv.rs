#![no_main]

use hlgauge::experiments::trials_from_csv_bytes;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = trials_from_csv_bytes(data);
});
