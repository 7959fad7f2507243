#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use hilrank_core::session::{Clock, RetrainMode};
use hilrank_core::sim::{SyntheticWorld, WorldConfig};
use hilrank_service::{AppState, EventStore, ServiceOptions};
use reqwest::blocking::{Client, Response};
use serde_json::{json, Value};
use tokio::runtime::Runtime;

pub struct Server {
    pub base: String,
    pub state: Arc<AppState>,
    pub client: Client,
    runtime: Option<Runtime>,
}

impl Server {
    /// Starts a server on an ephemeral port over the store at `root`,
    /// resuming whatever sessions it already holds.
    pub fn start(root: &Path, options: ServiceOptions) -> Self {
        let state = Arc::new(AppState::new(EventStore::open(root).unwrap(), options));
        state.load_existing().unwrap();
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        let listener = runtime
            .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
            .unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        runtime.spawn(hilrank_service::serve(listener, Arc::clone(&state)));
        let client = Client::builder().timeout(Duration::from_secs(60)).build().unwrap();
        Self {
            base,
            state,
            client,
            runtime: Some(runtime),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        into_parts(self.client.get(self.url(path)).send().unwrap())
    }

    pub fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        into_parts(self.client.post(self.url(path)).json(body).send().unwrap())
    }

    pub fn post_raw(&self, path: &str, body: &str) -> (u16, Value) {
        into_parts(
            self.client
                .post(self.url(path))
                .header("content-type", "application/json")
                .body(body.to_string())
                .send()
                .unwrap(),
        )
    }

    /// Stops accepting requests, as if the process had died.
    pub fn kill(mut self) {
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

fn into_parts(resp: Response) -> (u16, Value) {
    let status = resp.status().as_u16();
    let text = resp.text().unwrap();
    let body = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap() };
    (status, body)
}

pub fn inline() -> ServiceOptions {
    ServiceOptions {
        retrain: RetrainMode::Inline,
        clock: Clock::Logical,
    }
}

pub fn background(delay: Duration) -> ServiceOptions {
    ServiceOptions {
        retrain: RetrainMode::Background { delay },
        clock: Clock::Wall,
    }
}

pub fn world(n: usize, seed: u64) -> SyntheticWorld {
    SyntheticWorld::new(WorldConfig {
        n,
        seed,
        ..WorldConfig::default()
    })
    .unwrap()
}

pub fn truth_scores(w: &SyntheticWorld) -> HashMap<String, f64> {
    w.items.iter().map(|it| it.id.clone()).zip(w.truth.iter().copied()).collect()
}

pub fn create_body(id: &str, w: &SyntheticWorld) -> Value {
    json!({
        "session_id": id,
        "items": w.items,
        "ground_truth": truth_scores(w),
    })
}

/// Answers every pair from ground truth until the session completes.
/// Returns the final ranking and the number of 202 responses seen.
pub fn drive(server: &Server, id: &str, w: &SyntheticWorld, max_steps: usize) -> (Vec<String>, usize) {
    let truth = truth_scores(w);
    let mut accepted = 0;
    for _ in 0..max_steps {
        let (code, body) = server.get(&format!("/v1/sessions/{id}/next"));
        match body["status"].as_str().unwrap() {
            "pair" => {
                assert_eq!(code, 200);
                let i = body["pair"]["i"].as_str().unwrap().to_string();
                let j = body["pair"]["j"].as_str().unwrap().to_string();
                let winner = if truth[&i] > truth[&j] { &i } else { &j };
                let (code, resp) = server.post(
                    &format!("/v1/sessions/{id}/judgments"),
                    &json!({ "i": i, "j": j, "winner": winner }),
                );
                assert_eq!(code, 200, "{resp}");
            }
            "auto-resolving" => {
                assert_eq!(code, 202);
                accepted += 1;
            }
            "complete" => {
                assert_eq!(code, 200);
                let ranking = body["ranking"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
                return (ranking, accepted);
            }
            other => panic!("unexpected status {other}"),
        }
    }
    panic!("session {id} did not complete in {max_steps} steps");
}

pub fn store_dir() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("store");
    (dir, root)
}
