#![no_main]

use libfuzzer_sys::fuzz_target;
use selfcal_sim::{parse_pin, parse_seed_range};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = parse_seed_range(text) {
        assert!(r.start() <= r.end());
    }
    if let Ok(pin) = parse_pin(text) {
        assert!(pin.iter().all(|&d| d < 10));
    }
});
