mod common;

use std::time::{Duration, Instant};

use common::{background, create_body, drive, inline, store_dir, world, Server};
use hilrank_core::session::Session;
use hilrank_core::Item;
use hilrank_service::store::read_log;
use serde_json::json;

#[test]
fn create_and_next_is_idempotent() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(12, 1);
    let (code, body) = server.post("/v1/sessions", &create_body("s1", &w));
    assert_eq!(code, 201, "{body}");
    assert_eq!(body["session_id"], "s1");
    assert_eq!(body["n"], 12);
    assert_eq!(body["feature_dim"], 8);
    assert_eq!(body["bins"], 5);
    assert_eq!(body["gp_enabled"], true);

    let (c1, first) = server.get("/v1/sessions/s1/next");
    let (c2, second) = server.get("/v1/sessions/s1/next");
    assert_eq!((c1, c2), (200, 200));
    assert_eq!(first["status"], "pair");
    assert_eq!(first["pair"], second["pair"]);
    assert!(first["decision"].is_object());
}

#[test]
fn generated_session_id() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(4, 2);
    let (code, body) = server.post("/v1/sessions", &json!({ "items": w.items }));
    assert_eq!(code, 201, "{body}");
    let id = body["session_id"].as_str().unwrap();
    assert!(!id.is_empty());
    assert!(server.state.store().exists(id));
}

#[test]
fn duplicate_session_conflicts() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(4, 2);
    assert_eq!(server.post("/v1/sessions", &create_body("dup", &w)).0, 201);
    let (code, body) = server.post("/v1/sessions", &create_body("dup", &w));
    assert_eq!(code, 409);
    assert_eq!(body["error"]["code"], "session_exists");
}

#[test]
fn stale_pair_is_rejected_with_expected_pair() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(10, 3);
    server.post("/v1/sessions", &create_body("s", &w));
    let (_, next) = server.get("/v1/sessions/s/next");
    let (i, j) = (next["pair"]["i"].as_str().unwrap(), next["pair"]["j"].as_str().unwrap());
    let other = w.items.iter().map(|it| it.id.as_str()).find(|id| *id != i && *id != j).unwrap();

    let (code, body) = server.post("/v1/sessions/s/judgments", &json!({ "i": i, "j": other, "winner": i }));
    assert_eq!(code, 409, "{body}");
    assert_eq!(body["error"]["code"], "stale_pair");
    assert_eq!(body["expected"], json!({ "i": i, "j": j }));

    // The outstanding pair is still served.
    let (_, again) = server.get("/v1/sessions/s/next");
    assert_eq!(again["pair"], next["pair"]);
}

#[test]
fn judgment_before_next_conflicts() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(6, 3);
    server.post("/v1/sessions", &create_body("s", &w));
    let (code, body) = server.post(
        "/v1/sessions/s/judgments",
        &json!({ "i": "item0000", "j": "item0001", "winner": "item0000" }),
    );
    assert_eq!(code, 409);
    assert_eq!(body["error"]["code"], "no_pair_issued");
}

#[test]
fn malformed_bodies_are_422() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(6, 4);
    server.post("/v1/sessions", &create_body("s", &w));
    let (_, next) = server.get("/v1/sessions/s/next");
    let (i, j) = (next["pair"]["i"].as_str().unwrap(), next["pair"]["j"].as_str().unwrap());

    let (code, body) = server.post_raw("/v1/sessions/s/judgments", "{not json");
    assert_eq!(code, 422);
    assert_eq!(body["error"]["code"], "invalid_body");

    let (code, _) = server.post("/v1/sessions/s/judgments", &json!({ "i": i, "j": j }));
    assert_eq!(code, 422);

    let (code, body) = server.post("/v1/sessions/s/judgments", &json!({ "i": i, "j": j, "winner": "nobody" }));
    assert_eq!(code, 422);
    assert_eq!(body["error"]["code"], "invalid_body");

    let (code, _) = server.post("/v1/sessions", &json!({ "items": w.items, "colour": "red" }));
    assert_eq!(code, 422);
    let (code, _) = server.post("/v1/sessions", &json!({}));
    assert_eq!(code, 422);
    let (code, _) = server.post("/v1/sessions", &json!({ "session_id": "../x", "items": w.items }));
    assert_eq!(code, 422);

    let mut items: Vec<Item> = w.items.clone();
    items[1].features.pop();
    let (code, _) = server.post("/v1/sessions", &json!({ "items": items }));
    assert_eq!(code, 422);

    // Nothing was consumed by the rejected requests.
    let (_, again) = server.get("/v1/sessions/s/next");
    assert_eq!(again["pair"], next["pair"]);
}

#[test]
fn unknown_session_and_route_are_404() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    for path in ["/v1/sessions/nope/next", "/v1/sessions/nope/ranking", "/v1/sessions/nope/stats"] {
        let (code, body) = server.get(path);
        assert_eq!(code, 404, "{path}");
        assert_eq!(body["error"]["code"], "unknown_session");
    }
    let (code, _) = server.post("/v1/sessions/nope/judgments", &json!({ "i": "a", "j": "b", "winner": "a" }));
    assert_eq!(code, 404);
    let (code, body) = server.get("/v2/elsewhere");
    assert_eq!(code, 404);
    assert_eq!(body["error"]["code"], "not_found");
}

#[test]
fn full_session_then_judgment_conflicts() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(16, 5);
    server.post("/v1/sessions", &create_body("s", &w));
    let (ranking, _) = drive(&server, "s", &w, 1000);
    assert_eq!(ranking.len(), 16);

    let (code, body) = server.get("/v1/sessions/s/ranking");
    assert_eq!(code, 200);
    assert_eq!(body["complete"], true);
    assert_eq!(body["order"], json!(ranking));
    assert_eq!(body["scores"].as_array().unwrap().len(), 16);

    let (code, body) = server.post(
        "/v1/sessions/s/judgments",
        &json!({ "i": ranking[0], "j": ranking[1], "winner": ranking[0] }),
    );
    assert_eq!(code, 409);
    assert_eq!(body["error"]["code"], "session_complete");
    assert_eq!(body["status"], "complete");

    let (code, stats) = server.get("/v1/sessions/s/stats");
    assert_eq!(code, 200);
    assert_eq!(stats["phase"], "complete");
    assert_eq!(stats["n"], 16);
    assert!(stats["tau"].as_f64().unwrap() > 0.9, "{stats}");
    assert!(stats["rho"].as_f64().is_some());
}

#[test]
fn stats_without_truth_omit_tau() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(5, 6);
    server.post("/v1/sessions", &json!({ "session_id": "s", "items": w.items }));
    let (code, stats) = server.get("/v1/sessions/s/stats");
    assert_eq!(code, 200);
    assert!(stats.get("tau").is_none());
    assert_eq!(stats["human"], 0);
    assert_eq!(stats["phase"], "sorting");
}

#[test]
fn ground_truth_must_cover_items() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(5, 6);
    let (code, _) = server.post(
        "/v1/sessions",
        &json!({ "items": w.items, "ground_truth": { "item0000": 1.0 } }),
    );
    assert_eq!(code, 422);
}

#[test]
fn large_session_disables_gp_with_note() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(301, 7);
    let (code, body) = server.post("/v1/sessions", &json!({ "session_id": "big", "items": w.items }));
    assert_eq!(code, 201, "{body}");
    assert_eq!(body["gp_enabled"], false);
    let notes = body["notes"].as_array().unwrap();
    assert_eq!(notes.len(), 1);
    assert!(notes[0].as_str().unwrap().contains("gp disabled"), "{notes:?}");
    let (_, stats) = server.get("/v1/sessions/big/stats");
    assert_eq!(stats["gp_enabled"], false);
}

#[test]
fn automation_limit_yields_202() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(60, 8);
    let mut body = create_body("s", &w);
    body["max_auto_per_request"] = json!(1);
    assert_eq!(server.post("/v1/sessions", &body).0, 201);
    let (ranking, accepted) = drive(&server, "s", &w, 5000);
    assert_eq!(ranking.len(), 60);
    let (_, stats) = server.get("/v1/sessions/s/stats");
    let auto = stats["auto"].as_u64().unwrap();
    assert!(auto > 0, "{stats}");
    assert!(accepted > 0);
}

#[test]
fn display_uris_are_served() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(4, 9);
    let items: Vec<Item> = w
        .items
        .iter()
        .cloned()
        .map(|mut it| {
            it.display_uri = Some(format!("https://img.example/{}.png", it.id));
            it
        })
        .collect();
    server.post("/v1/sessions", &json!({ "session_id": "s", "items": items }));
    let (_, next) = server.get("/v1/sessions/s/next");
    let i = next["pair"]["i"].as_str().unwrap();
    assert_eq!(next["pair"]["display_uris"][0], format!("https://img.example/{i}.png"));
}

#[test]
fn features_path_ingestion() {
    let (dir, root) = store_dir();
    let server = Server::start(&root, inline());
    let w = world(5, 10);
    let path = dir.path().join("items.jsonl");
    let lines: Vec<String> = w.items.iter().map(|it| serde_json::to_string(it).unwrap()).collect();
    std::fs::write(&path, lines.join("\n")).unwrap();
    let (code, body) = server.post("/v1/sessions", &json!({ "session_id": "f", "features_path": path }));
    assert_eq!(code, 201, "{body}");
    assert_eq!(body["n"], 5);

    std::fs::write(&path, format!("{}\n{{\"id\":\"x\"}}\n", lines[0])).unwrap();
    let (code, body) = server.post("/v1/sessions", &json!({ "features_path": path }));
    assert_eq!(code, 422);
    assert_eq!(body["error"]["code"], "invalid_items");
    assert!(body["error"]["message"].as_str().unwrap().contains("line 2"));
}

#[test]
fn restart_resumes_from_the_log() {
    let (_dir, root) = store_dir();
    let w = world(24, 11);
    let truth = common::truth_scores(&w);

    // Reference run without interruption.
    let (ref_dir, ref_root) = store_dir();
    let reference = Server::start(&ref_root, inline());
    reference.post("/v1/sessions", &create_body("s", &w));
    let (expected, _) = drive(&reference, "s", &w, 2000);
    drop(reference);
    drop(ref_dir);

    let server = Server::start(&root, inline());
    server.post("/v1/sessions", &create_body("s", &w));
    for _ in 0..10 {
        let (_, next) = server.get("/v1/sessions/s/next");
        if next["status"] != "pair" {
            continue;
        }
        let (i, j) = (next["pair"]["i"].as_str().unwrap(), next["pair"]["j"].as_str().unwrap());
        let winner = if truth[i] > truth[j] { i } else { j };
        server.post("/v1/sessions/s/judgments", &json!({ "i": i, "j": j, "winner": winner }));
    }
    let (_, outstanding) = server.get("/v1/sessions/s/next");
    let (_, before) = server.get("/v1/sessions/s/ranking");
    server.kill();

    let restarted = Server::start(&root, inline());
    let (_, after) = restarted.get("/v1/sessions/s/ranking");
    assert_eq!(after["order"], before["order"]);
    let (_, next) = restarted.get("/v1/sessions/s/next");
    assert_eq!(next["pair"], outstanding["pair"]);

    let (ranking, _) = drive(&restarted, "s", &w, 2000);
    assert_eq!(ranking, expected);

    let events = read_log(root.join("s").join("events.jsonl")).unwrap();
    let mut replayed = Session::replay(&events).unwrap();
    assert_eq!(replayed.current_ranking().order, ranking);
}

#[test]
fn next_is_not_blocked_by_a_slow_retrain() {
    let (_dir, root) = store_dir();
    let server = Server::start(&root, background(Duration::from_secs(2)));
    let w = world(40, 12);
    server.post("/v1/sessions", &create_body("s", &w));
    let truth = common::truth_scores(&w);
    for _ in 0..3 {
        let (_, next) = server.get("/v1/sessions/s/next");
        let (i, j) = (next["pair"]["i"].as_str().unwrap(), next["pair"]["j"].as_str().unwrap());
        let winner = if truth[i] > truth[j] { i } else { j };
        let (code, _) = server.post("/v1/sessions/s/judgments", &json!({ "i": i, "j": j, "winner": winner }));
        assert_eq!(code, 200);

        let (_, stats) = server.get("/v1/sessions/s/stats");
        assert_eq!(stats["retrain_in_flight"], true, "{stats}");
        let start = Instant::now();
        let (code, next) = server.get("/v1/sessions/s/next");
        let elapsed = start.elapsed();
        assert!(code == 200 || code == 202, "{next}");
        assert!(elapsed < Duration::from_millis(100), "{elapsed:?}");
    }
}
