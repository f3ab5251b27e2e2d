#![no_main]

use libfuzzer_sys::fuzz_target;
use selfcal_core::{ActionSignal, SessionState};

fuzz_target!(|data: &[u8]| {
    let Ok(state) = serde_json::from_slice::<SessionState>(data) else { return };
    if state.validate().is_err() || state.history.len() + state.shared_prior.len() > 64 {
        return;
    }
    for action in [ActionSignal::button(0), ActionSignal::point(0.5, -0.5)] {
        let mut s = state.clone();
        if s.apply(action).is_ok() {
            s.validate().unwrap();
        } else {
            assert_eq!(s, state);
        }
    }
});
