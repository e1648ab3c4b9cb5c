use std::path::PathBuf;
use std::time::Duration;

use futures_util::StreamExt;
use serde_json::Value;
use skyweave_mission::service::{app, ServiceConfig};
use skyweave_simworld::WorldConfig;
use tokio_tungstenite::tungstenite::Message;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(root().join(rel)).unwrap()
}

async fn start(mission: bool, runs: PathBuf) -> String {
    let world = WorldConfig::parse(&read("scenarios/inconsistent-bottom/world.toml")).unwrap();
    let mut cfg = ServiceConfig::new(world);
    cfg.sim_speed = 20.0;
    cfg.runs_dir = runs;
    cfg.home = Some(4);
    if mission {
        cfg.mission = Some((read("specs/inconsistent.fsl"), "Old".into()));
    }
    let router = app(cfg).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router).await.unwrap() });
    format!("127.0.0.1:{}", addr.port())
}

async fn state(c: &reqwest::Client, base: &str) -> Value {
    c.get(format!("http://{base}/state")).send().await.unwrap().json().await.unwrap()
}

/// Polls `/state` until `pred` holds.
async fn wait_for(c: &reqwest::Client, base: &str, pred: impl Fn(&Value) -> bool) -> Value {
    for _ in 0..600 {
        let s = state(c, base).await;
        if pred(&s) {
            return s;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("timed out; last state {}", state(c, base).await);
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("skyweave-service-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[tokio::test(flavor = "multi_thread")]
async fn stream_carries_telemetry_and_events() {
    let base = start(true, tmp("stream")).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{base}/stream")).await.unwrap();
    let (mut telemetry, mut events) = (0, 0);
    let mut last_tick = None;
    while telemetry < 20 || events < 2 {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next()).await.unwrap().unwrap().unwrap();
        let Message::Text(t) = msg else { continue };
        let f: Value = serde_json::from_str(&t).unwrap();
        match f["type"].as_str().unwrap() {
            "telemetry" => {
                let tick = f["payload"]["tick"].as_u64().unwrap();
                if let Some(prev) = last_tick {
                    assert_eq!(tick, prev + 1, "one telemetry frame per tick");
                }
                last_tick = Some(tick);
                telemetry += 1;
            }
            "event" => {
                assert!(f["payload"]["label"].is_string());
                events += 1;
            }
            other => panic!("unexpected frame {other}"),
        }
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn update_lifecycle() {
    let base = start(true, tmp("update")).await;
    let c = reqwest::Client::new();
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{base}/stream")).await.unwrap();
    let spec = read("specs/inconsistent.fsl");
    wait_for(&c, &base, |s| s["telemetry"]["flying"] == true).await;

    // Without a transition requirement there is no solution.
    let r = c.post(format!("http://{base}/update?name=Naive")).body(spec.clone()).send().await.unwrap();
    assert_eq!(r.status(), 202);
    let s = wait_for(&c, &base, |s| s["synthesis"]["status"] != "running").await;
    assert_eq!(s["synthesis"]["status"], "unrealizable");
    assert_eq!(c.post(format!("http://{base}/hotswap")).send().await.unwrap().status(), 409);

    let r = c.post(format!("http://{base}/update?name=ViaBottom")).body(spec.clone()).send().await.unwrap();
    assert_eq!(r.status(), 202);
    let s = wait_for(&c, &base, |s| s["synthesis"]["status"] != "running").await;
    assert_eq!(s["synthesis"]["status"], "ready", "{s}");

    let mut seen = Vec::new();
    while !seen.iter().any(|v: &Value| v["name"] == "ViaBottom" && v.get("status").is_some()) {
        let Message::Text(t) = ws.next().await.unwrap().unwrap() else { continue };
        let f: Value = serde_json::from_str(&t).unwrap();
        match f["type"].as_str().unwrap() {
            "synth-progress" | "verdict" => seen.push(f["payload"].clone()),
            _ => {}
        }
    }
    let kinds: Vec<(&str, &str)> = seen.iter().map(|v| (v["name"].as_str().unwrap(), v.get("status").or(v.get("stage")).unwrap().as_str().unwrap())).collect();
    assert_eq!(kinds, [("Naive", "started"), ("Naive", "unrealizable"), ("ViaBottom", "started"), ("ViaBottom", "ready")]);

    assert_eq!(c.post(format!("http://{base}/hotswap")).send().await.unwrap().status(), 200);
    let s = wait_for(&c, &base, |s| s["version"] == 1).await;
    assert_eq!(s["mode"], "running");
    assert_eq!(c.post(format!("http://{base}/hotswap")).send().await.unwrap().status(), 409);
}

#[tokio::test(flavor = "multi_thread")]
async fn second_update_while_busy_is_refused() {
    let base = start(true, tmp("busy")).await;
    let c = reqwest::Client::new();
    let spec = read("specs/inconsistent.fsl");
    let (a, b) = tokio::join!(
        c.post(format!("http://{base}/update?name=ViaBottom")).body(spec.clone()).send(),
        c.post(format!("http://{base}/update?name=ViaBottom")).body(spec.clone()).send(),
    );
    let mut codes = [a.unwrap().status().as_u16(), b.unwrap().status().as_u16()];
    codes.sort();
    assert_eq!(codes, [202, 409]);
    wait_for(&c, &base, |s| s["synthesis"]["status"] == "ready").await;
    // Ready but not swapped: a new update is allowed and supersedes it.
    let r = c.post(format!("http://{base}/update?name=ViaBottom")).body(spec).send().await.unwrap();
    assert_eq!(r.status(), 202);
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_spec_returns_diagnostics() {
    let base = start(false, tmp("bad")).await;
    let c = reqwest::Client::new();
    let r = c.post(format!("http://{base}/spec")).body("process P = (a -> ).").send().await.unwrap();
    assert_eq!(r.status(), 400);
    let body: Value = r.json().await.unwrap();
    assert!(!body["diagnostics"].as_array().unwrap().is_empty(), "{body}");

    let r = c.post(format!("http://{base}/spec?problem=Nope")).body(read("specs/inconsistent.fsl")).send().await.unwrap();
    assert_eq!(r.status(), 400);
    let r = c.post(format!("http://{base}/update?name=ViaBottom")).body(read("specs/inconsistent.fsl")).send().await.unwrap();
    assert_eq!(r.status(), 409, "no mission yet");
}

#[tokio::test(flavor = "multi_thread")]
async fn spec_endpoint_starts_a_mission() {
    let base = start(false, tmp("spec")).await;
    let c = reqwest::Client::new();
    let r = c.post(format!("http://{base}/spec?problem=Old")).body(read("specs/inconsistent.fsl")).send().await.unwrap();
    assert_eq!(r.status(), 202);
    let body: Value = r.json().await.unwrap();
    assert!(body["problems"].as_array().unwrap().iter().any(|p| p == "ViaBottom"));
    let s = wait_for(&c, &base, |s| s["mode"] == "running" && s["telemetry"]["flying"] == true).await;
    assert_eq!(s["problem"], "Old");
}

#[tokio::test(flavor = "multi_thread")]
async fn modules_and_commands() {
    let base = start(true, tmp("modules")).await;
    let c = reqwest::Client::new();
    let r = c.post(format!("http://{base}/module")).body(r#"{"kind":"spin","id":"spinner"}"#).send().await.unwrap();
    assert_eq!(r.status(), 200);
    let r = c.post(format!("http://{base}/module?bind=true")).body(r#"{"kind":"flight","id":"second"}"#).send().await.unwrap();
    assert_eq!(r.status(), 409, "overlaps the bound flight module");
    let r = c.post(format!("http://{base}/module")).body(r#"{"kind":"warp","id":"x"}"#).send().await.unwrap();
    assert_eq!(r.status(), 400);
    let s = state(&c, &base).await;
    assert!(s["modules"].as_array().unwrap().iter().any(|m| m == "spinner"));
    assert!(!s["bound"].as_array().unwrap().iter().any(|m| m == "spinner"));

    wait_for(&c, &base, |s| s["telemetry"]["flying"] == true).await;
    // A spurious arrival far from the patrol sends the vehicle home.
    let r = c.post(format!("http://{base}/command/at.5")).send().await.unwrap();
    assert_eq!(r.status(), 200);
    let s = wait_for(&c, &base, |s| s["mode"] != "running").await;
    assert!(s["mode"] == "fallback" || s["mode"] == "landed");
    wait_for(&c, &base, |s| s["mode"] == "landed").await;
    let r = c.post(format!("http://{base}/command/bad%20label")).send().await.unwrap();
    assert_eq!(r.status(), 400);
}

#[tokio::test(flavor = "multi_thread")]
async fn runs_are_served_by_id() {
    let dir = tmp("runs");
    std::fs::write(dir.join("demo-7.json"), r#"{"scenario":"demo"}"#).unwrap();
    let base = start(false, dir).await;
    let c = reqwest::Client::new();
    let r = c.get(format!("http://{base}/runs/demo-7")).send().await.unwrap();
    assert_eq!(r.status(), 200);
    assert_eq!(r.json::<Value>().await.unwrap()["scenario"], "demo");
    assert_eq!(c.get(format!("http://{base}/runs/missing")).send().await.unwrap().status(), 404);
    assert_eq!(c.get(format!("http://{base}/runs/..%2Fsecret")).send().await.unwrap().status(), 400);
}
