#![no_main]

use libfuzzer_sys::fuzz_target;
use selfcal_sim::SimConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = SimConfig::from_toml(text) {
        cfg.engine.validate().unwrap();
    }
});
