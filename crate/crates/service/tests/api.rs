use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use selfcal_core::{ActionSignal, EngineConfig, SessionState};
use selfcal_service::log::session_from_header;
use selfcal_service::{parse_log, replay, router, AppState, LogRecord, ServiceConfig, WireMode, WireSession};

fn app() -> Router {
    router(AppState::new(ServiceConfig::default()).unwrap())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call_raw(app, method, uri, body.map(|b| b.to_string().into_bytes())).await;
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

async fn call_raw(app: &Router, method: &str, uri: &str, body: Option<Vec<u8>>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn create(app: &Router, body: Value) -> Value {
    let (status, v) = call(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v
}

async fn act(app: &Router, id: &str, body: Value) -> (StatusCode, Value) {
    call(app, "POST", &format!("/sessions/{id}/actions"), Some(body)).await
}

fn id(v: &Value) -> String {
    v["session_id"].as_str().unwrap().to_string()
}

/// Known-mode user for PIN digit `digit`: left button means yellow.
fn known_click(session: &Value, digit: usize) -> Value {
    let button = if session["coloring"][digit] == "yellow" { 0 } else { 1 };
    json!({"type": "button", "button": button})
}

async fn log_records(app: &Router, id: &str) -> Vec<LogRecord> {
    let (status, bytes) = call_raw(app, "GET", &format!("/sessions/{id}/log"), None).await;
    assert_eq!(status, StatusCode::OK);
    parse_log(std::str::from_utf8(&bytes).unwrap()).unwrap()
}

#[tokio::test]
async fn new_buttons9_session_is_uniform() {
    let app = app();
    let s = create(&app, json!({"mode": "buttons9"})).await;
    assert_eq!(s["posterior"].as_array().unwrap().len(), 10);
    assert!(s["posterior"].as_array().unwrap().iter().all(|p| p.as_f64() == Some(0.1)));
    assert!(s["valid"].as_array().unwrap().iter().all(|v| v == true));
    assert_eq!(s["button_count"], 9);
    assert!(s["button_colors"].as_array().unwrap().iter().all(Value::is_null));
    assert_eq!(s["step_index"], 0);
}

#[tokio::test]
async fn known2_coloring_has_both_colors_and_known_buttons() {
    let app = app();
    let s = create(&app, json!({"mode": "known2"})).await;
    let colors: Vec<&str> = s["coloring"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    assert!(colors.contains(&"yellow") && colors.contains(&"grey"));
    assert_eq!(s["button_colors"], json!(["yellow", "grey"]));
}

#[tokio::test]
async fn same_seed_same_initial_coloring() {
    let app = app();
    let a = create(&app, json!({"mode": "touch", "seed": 42})).await;
    let b = create(&app, json!({"mode": "touch", "seed": 42})).await;
    assert_eq!(a["coloring"], b["coloring"]);
    assert_ne!(a["session_id"], b["session_id"]);
}

#[tokio::test]
async fn invalid_create_requests_are_400() {
    let app = app();
    for body in [
        json!({"mode": "buttons9", "button_count": 1}),
        json!({"mode": "known2", "button_count": 2_500_000_000u64}),
        json!({"mode": "buttons9", "button_count": 1025}),
        json!({"mode": "touch", "config": {"cv_folds": 1}}),
        json!({"mode": "touch", "config": {"decision_margin": 0.0}}),
        json!({"mode": "touch", "button_count": 4}),
        json!({"mode": "laser"}),
        json!({"mode": "touch", "colour": "blue"}),
    ] {
        let (status, v) = call(&app, "POST", "/sessions", Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}: {v}");
        assert_eq!(v["error"], "invalid_config");
    }
    let (status, _) = call_raw(&app, "POST", "/sessions", Some(b"{".to_vec())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn button_click_advances_the_session() {
    let app = app();
    let s = create(&app, json!({"mode": "buttons9", "seed": 3})).await;
    let (status, r) = act(&app, &id(&s), json!({"type": "button", "button": 4})).await;
    assert_eq!(status, StatusCode::OK, "{r}");
    assert_eq!(r["session"]["step_index"], 1);
    assert_ne!(r["session"]["coloring"], s["coloring"]);
    assert!(r["decision"].is_null());

    let mut engine = SessionState::new(selfcal_core::Mode::SelfCalButtons, Some(9), 3, EngineConfig::default()).unwrap();
    engine.apply(ActionSignal::button(4)).unwrap();
    let wire: WireSession = serde_json::from_value(r["session"].clone()).unwrap();
    assert_eq!(wire, WireSession::new(&id(&s), WireMode::Buttons9, &engine));
}

#[tokio::test]
async fn malformed_actions_are_422() {
    let app = app();
    let buttons = id(&create(&app, json!({"mode": "buttons9"})).await);
    let sketch = id(&create(&app, json!({"mode": "sketch"})).await);
    let audio = id(&create(&app, json!({"mode": "audio"})).await);
    let touch = id(&create(&app, json!({"mode": "touch"})).await);
    let cases = [
        (&buttons, json!({"type": "point", "x": 0.1, "y": 0.2})),
        (&buttons, json!({"type": "button", "button": 9})),
        (&buttons, json!({"type": "button"})),
        (&touch, json!({"type": "button", "button": 0})),
        (&touch, json!({"type": "point", "x": "left", "y": 0.2})),
        (&sketch, json!({"type": "sketch", "points": [[0.0, 0.0]]})),
        (&sketch, json!({"type": "sketch", "points": []})),
        (&audio, json!({"type": "audio", "samples": [], "sample_rate": 8000})),
        (&audio, json!({"type": "audio", "samples": [0.1, 0.2], "sample_rate": 0})),
        (&audio, json!({"type": "audio", "samples": [1e39], "sample_rate": 8000})),
        (&audio, json!({"type": "audio", "samples": [0.1], "sample_rate": 4_000_000_000u64})),
    ];
    for (sid, body) in cases {
        let (status, v) = act(&app, sid, body.clone()).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}: {v}");
        assert_eq!(v["error"], "malformed_signal");
    }
    for raw in [&b"not json"[..], b"", b"{\"type\":\"point\",\"x\":1e400,\"y\":0}"] {
        let (status, _) = call_raw(&app, "POST", &format!("/sessions/{touch}/actions"), Some(raw.to_vec())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    }
    // Rejected actions leave no trace.
    let (_, s) = call(&app, "GET", &format!("/sessions/{buttons}"), None).await;
    assert_eq!(s["step_index"], 0);
    assert_eq!(log_records(&app, &buttons).await.len(), 1);
}

#[tokio::test]
async fn unknown_sessions_are_404() {
    let app = app();
    for (method, uri) in [
        ("GET", "/sessions/nope"),
        ("GET", "/sessions/nope/dashboard"),
        ("GET", "/sessions/nope/log"),
    ] {
        let (status, v) = call(&app, method, uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(v["error"], "unknown_session");
    }
    let (status, _) = act(&app, "nope", json!({"type": "button", "button": 0})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn known_mode_identifies_digit_one_quickly() {
    let app = app();
    let mut s = create(&app, json!({"mode": "known2", "seed": 11})).await;
    let sid = id(&s);
    let mut decided = None;
    for _ in 0..5 {
        let (status, r) = act(&app, &sid, known_click(&s, 1)).await;
        assert_eq!(status, StatusCode::OK);
        s = r["session"].clone();
        if !r["decision"].is_null() {
            decided = r["decision"].as_u64();
            break;
        }
    }
    assert_eq!(decided, Some(1));
    assert_eq!(s["pin_slots"], json!([1]));
}

async fn enter_known_pin(app: &Router, seed: u64, pin: [usize; 4]) -> (String, Vec<Value>) {
    let mut s = create(app, json!({"mode": "known2", "seed": seed})).await;
    let sid = id(&s);
    let mut responses = Vec::new();
    for digit in pin {
        loop {
            let (status, r) = act(app, &sid, known_click(&s, digit)).await;
            assert_eq!(status, StatusCode::OK, "{r}");
            s = r["session"].clone();
            responses.push(r.clone());
            if !r["decision"].is_null() {
                assert_eq!(r["decision"].as_u64(), Some(digit as u64));
                break;
            }
        }
    }
    (sid, responses)
}

#[tokio::test]
async fn completed_session_rejects_actions_with_409() {
    let app = app();
    let (sid, responses) = enter_known_pin(&app, 5, [7, 0, 7, 3]).await;
    let last = &responses.last().unwrap()["session"];
    assert_eq!(last["complete"], true);
    assert_eq!(last["pin_slots"], json!([7, 0, 7, 3]));
    let (status, v) = act(&app, &sid, json!({"type": "button", "button": 0})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "session_complete");
    // Even a malformed body gets 409 once the session is closed.
    let (status, _) = act(&app, &sid, json!({"type": "point"})).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn log_has_header_then_one_decision_per_digit() {
    let app = app();
    let fresh = id(&create(&app, json!({"mode": "touch"})).await);
    let records = log_records(&app, &fresh).await;
    assert_eq!(records.len(), 1);
    assert!(matches!(records[0], LogRecord::Header { .. }));

    let (sid, _) = enter_known_pin(&app, 8, [1, 2, 3, 4]).await;
    let records = log_records(&app, &sid).await;
    let decisions: Vec<u8> = records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Decision { digit, .. } => Some(*digit),
            _ => None,
        })
        .collect();
    assert_eq!(decisions, vec![1, 2, 3, 4]);
}

#[tokio::test]
async fn replayed_log_reproduces_the_session() {
    let app = app();
    let (sid, _) = enter_known_pin(&app, 21, [9, 9, 0, 5]).await;
    let records = log_records(&app, &sid).await;
    let (replayed_id, mode, state) = replay(&records).unwrap();
    assert_eq!(replayed_id, sid);
    let (_, live) = call(&app, "GET", &format!("/sessions/{sid}"), None).await;
    let live: WireSession = serde_json::from_value(live).unwrap();
    assert_eq!(WireSession::new(&sid, mode, &state), live);
}

#[tokio::test]
async fn service_responses_match_the_engine_step_for_step() {
    let app = app();
    let s = create(&app, json!({"mode": "touch", "seed": 77})).await;
    let sid = id(&s);
    let mut responses = Vec::new();
    for k in 0..40 {
        let t = k as f64 * 0.37;
        let (status, r) = act(&app, &sid, json!({"type": "point", "x": t.sin(), "y": t.cos()})).await;
        assert_eq!(status, StatusCode::OK);
        responses.push(r);
    }
    let records = log_records(&app, &sid).await;
    let LogRecord::Header { seed, config, .. } = &records[0] else { panic!() };
    let mut engine = session_from_header(WireMode::Touch, None, *seed, config.clone()).unwrap();
    let signals = records.iter().filter_map(|r| match r {
        LogRecord::Action { signal, .. } => Some(signal.clone()),
        _ => None,
    });
    for (signal, response) in signals.zip(&responses) {
        let decision = engine.apply(signal).unwrap();
        let wire: WireSession = serde_json::from_value(response["session"].clone()).unwrap();
        assert_eq!(wire, WireSession::new(&sid, WireMode::Touch, &engine));
        assert_eq!(response["decision"].as_u64(), decision.map(|d| d.digit as u64));
    }
}

#[tokio::test]
async fn dashboard_panels() {
    let app = app();
    let sid = id(&create(&app, json!({"mode": "buttons9", "seed": 2})).await);
    let (status, d) = call(&app, "GET", &format!("/sessions/{sid}/dashboard"), None).await;
    assert_eq!(status, StatusCode::OK);
    let panels = d["panels"].as_array().unwrap();
    assert_eq!(panels.len(), 10);
    assert!(panels.iter().all(|p| p["valid"] == true && p["signals"].as_array().unwrap().is_empty()));

    // Click the same button until some digit sees it in both colors.
    let mut s = Value::Null;
    for _ in 0..3 {
        s = act(&app, &sid, json!({"type": "button", "button": 1})).await.1["session"].clone();
    }
    let (_, d) = call(&app, "GET", &format!("/sessions/{sid}/dashboard"), None).await;
    let mut discarded = 0;
    for p in d["panels"].as_array().unwrap() {
        let colors: std::collections::HashSet<&str> =
            p["signals"].as_array().unwrap().iter().map(|sig| sig["color"].as_str().unwrap()).collect();
        assert_eq!(p["valid"] == true, colors.len() == 1, "{p}");
        if p["valid"] == false {
            discarded += 1;
        }
    }
    assert!(discarded > 0);
    assert_eq!(s["valid"].as_array().unwrap().iter().filter(|v| **v == false).count(), discarded);
}

#[tokio::test]
async fn panels_are_identical_right_after_a_decision() {
    let app = app();
    let mut s = create(&app, json!({"mode": "known2", "seed": 4})).await;
    let sid = id(&s);
    loop {
        let (_, r) = act(&app, &sid, known_click(&s, 6)).await;
        s = r["session"].clone();
        if !r["decision"].is_null() {
            break;
        }
    }
    let (_, d) = call(&app, "GET", &format!("/sessions/{sid}/dashboard"), None).await;
    let panels = d["panels"].as_array().unwrap();
    assert!(!panels[0]["signals"].as_array().unwrap().is_empty());
    for p in panels {
        assert_eq!(p["signals"], panels[0]["signals"]);
    }
}

#[tokio::test]
async fn touch_dashboard_has_color_grids() {
    let app = app();
    let sid = id(&create(&app, json!({"mode": "touch", "seed": 9})).await);
    for (x, y) in [(-0.4, 0.2), (0.5, 0.1), (-0.2, -0.7), (0.8, 0.6)] {
        act(&app, &sid, json!({"type": "point", "x": x, "y": y})).await;
    }
    let (_, d) = call(&app, "GET", &format!("/sessions/{sid}/dashboard"), None).await;
    for p in d["panels"].as_array().unwrap() {
        let grid = &p["grid"];
        assert_eq!(grid["size"], 40);
        assert_eq!(grid["cells"].as_array().unwrap().len(), 40);
        assert_eq!(p["signals"].as_array().unwrap().len(), 4);
    }
    let (_, d) = call(&app, "GET", &format!("/sessions/{sid}/dashboard?grid=5"), None).await;
    assert_eq!(d["panels"][0]["grid"]["size"], 5);
    let (status, _) = call(&app, "GET", &format!("/sessions/{sid}/dashboard?grid=100000"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn sketch_and_audio_actions_are_accepted() {
    let app = app();
    let sid = id(&create(&app, json!({"mode": "sketch"})).await);
    let (status, r) = act(&app, &sid, json!({"type": "sketch", "points": [[0, 0], [3, 4], [6, 0]]})).await;
    assert_eq!(status, StatusCode::OK, "{r}");
    assert_eq!(r["session"]["step_index"], 1);

    let sid = id(&create(&app, json!({"mode": "audio"})).await);
    let samples: Vec<f32> = (0..4000).map(|i| (i as f32 * 0.3).sin()).collect();
    let (status, r) = act(&app, &sid, json!({"type": "audio", "samples": samples, "sample_rate": 4000})).await;
    assert_eq!(status, StatusCode::OK, "{r}");
    let records = log_records(&app, &sid).await;
    let LogRecord::Action { signal, .. } = &records[1] else { panic!() };
    assert_eq!(signal.as_features().unwrap().len(), 21 * 128);
}

#[tokio::test]
async fn sessions_persist_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        data_dir: Some(dir.path().to_path_buf()),
        embedder_url: None,
    };
    let app = router(AppState::new(config.clone()).unwrap());
    let mut s = create(&app, json!({"mode": "known2", "seed": 30})).await;
    let sid = id(&s);
    for _ in 0..2 {
        s = act(&app, &sid, known_click(&s, 4)).await.1["session"].clone();
    }
    std::fs::write(dir.path().join("junk.ndjson"), "{}\n").unwrap();

    let restarted = AppState::new(config).unwrap();
    assert_eq!(restarted.session_count(), 1);
    let app = router(restarted);
    let (status, again) = call(&app, "GET", &format!("/sessions/{sid}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, s);
    let (status, _) = act(&app, &sid, known_click(&s, 4)).await;
    assert_eq!(status, StatusCode::OK);
    let text = std::fs::read_to_string(dir.path().join(format!("{sid}.ndjson"))).unwrap();
    let actions = parse_log(&text).unwrap().iter().filter(|r| matches!(r, LogRecord::Action { .. })).count();
    assert_eq!(actions, 3);
}

#[tokio::test]
async fn post_decision_button_colors_are_revealed() {
    let app = app();
    let mut s = create(&app, json!({"mode": "buttons9", "seed": 12})).await;
    let sid = id(&s);
    // Buttons 0 and 2 mean yellow, 5 means grey; digit 8 is the target.
    let mut k = 0;
    loop {
        let button = if s["coloring"][8] == "yellow" { [0, 2][k % 2] } else { 5 };
        k += 1;
        let (status, r) = act(&app, &sid, json!({"type": "button", "button": button})).await;
        assert_eq!(status, StatusCode::OK);
        s = r["session"].clone();
        if !r["decision"].is_null() {
            assert_eq!(r["decision"], 8);
            break;
        }
        assert!(s["button_colors"].as_array().unwrap().iter().all(Value::is_null));
        assert!(k < 100);
    }
    let colors = s["button_colors"].as_array().unwrap();
    assert_eq!(colors[5], "grey");
    assert!(colors[0] == "yellow" || colors[0].is_null());
    assert!(colors[1].is_null());
}
