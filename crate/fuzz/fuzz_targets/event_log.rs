#![no_main]

use libfuzzer_sys::fuzz_target;
use selfcal_service::log::to_ndjson;
use selfcal_service::{parse_log, replay};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(records) = parse_log(text) else { return };
    // Replays are cheap per record but unbounded in count.
    if records.len() > 64 {
        return;
    }
    assert_eq!(parse_log(&to_ndjson(&records)).unwrap(), records);
    if let Ok((_, _, state)) = replay(&records) {
        state.validate().unwrap();
    }
});
