#![no_main]

use libfuzzer_sys::fuzz_target;
use selfcal_service::ActionBody;

fuzz_target!(|data: &[u8]| {
    let Ok(body) = ActionBody::parse(data) else { return };
    let _ = body.to_signal();
    let again = ActionBody::parse(serde_json::to_string(&body).unwrap().as_bytes()).unwrap();
    assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(&body).unwrap());
});
