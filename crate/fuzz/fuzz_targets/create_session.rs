#![no_main]

use libfuzzer_sys::fuzz_target;
use selfcal_service::log::session_from_header;
use selfcal_service::CreateSession;

fuzz_target!(|data: &[u8]| {
    let Ok(req) = serde_json::from_slice::<CreateSession>(data) else { return };
    let config = req.config.unwrap_or_default();
    if let Ok(state) = session_from_header(req.mode, req.button_count, req.seed.unwrap_or(0), config) {
        state.validate().unwrap();
    }
});
