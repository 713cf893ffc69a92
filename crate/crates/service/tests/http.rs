use std::net::SocketAddr;
use std::path::Path;

use serde_json::{json, Value};
use tagbridge::corpus::TaggedCorpus;
use tagbridge::pipeline;
use tagbridge::project::Project;
use tagbridge::synth::SynthConfig;
use tagbridge_service::{serve, AppState};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

fn setup(dir: &Path) -> TaggedCorpus {
    let mut p = Project::open(dir).unwrap();
    p.config.schedule.iterations = 4;
    p.config.schedule.increment = 0.1;
    let s = pipeline::synth(&mut p, &SynthConfig { verses: 60, ..SynthConfig::default() }).unwrap();
    pipeline::project(&p).unwrap();
    s.gold
}

async fn start(dir: &Path) -> (String, JoinHandle<()>) {
    let app = AppState::open(dir).unwrap();
    let listener = TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let handle = tokio::spawn(async move {
        serve(listener, app).await.unwrap();
    });
    (base, handle)
}

async fn get(client: &reqwest::Client, url: String) -> (u16, Value) {
    let r = client.get(url).send().await.unwrap();
    (r.status().as_u16(), r.json().await.unwrap())
}

async fn post(client: &reqwest::Client, url: String, body: Value) -> (u16, Value) {
    let r = client.post(url).json(&body).send().await.unwrap();
    (r.status().as_u16(), r.json().await.unwrap())
}

/// Corrections turning every token of the verse into its gold tag.
fn gold_batch(verse: &Value, gold: &TaggedCorpus) -> Value {
    let id = verse["id"].as_str().unwrap();
    let g = gold.get(&id.parse().unwrap()).unwrap();
    let corrections: Vec<Value> = verse["tokens"]
        .as_array()
        .unwrap()
        .iter()
        .zip(&g.tokens)
        .filter(|(t, gt)| t["tag"] != gt.tag.as_ref().unwrap().as_str())
        .map(|(t, gt)| json!({"index": t["index"], "tag": gt.tag.as_ref().unwrap().as_str()}))
        .collect();
    json!({"verse_id": id, "corrections": corrections})
}

async fn correct_pending(client: &reqwest::Client, base: &str, gold: &TaggedCorpus) {
    let (code, slice) = get(client, format!("{base}/api/slice")).await;
    assert_eq!(code, 200);
    for v in slice["verses"].as_array().unwrap() {
        let (code, ack) = post(client, format!("{base}/api/corrections"), gold_batch(v, gold)).await;
        assert_eq!(code, 200, "{ack}");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn annotation_session() {
    let dir = tempfile::tempdir().unwrap();
    let gold = setup(dir.path());
    let (base, server) = start(dir.path()).await;
    let client = reqwest::Client::new();

    let (code, st) = get(&client, format!("{base}/api/state")).await;
    assert_eq!(code, 200);
    assert_eq!(st["iteration"], 0);
    assert_eq!(st["metrics"].as_array().unwrap().len(), 1);
    let pending: Vec<String> = st["pending"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    assert_eq!(pending.len(), 6);

    let (code, ts) = get(&client, format!("{base}/api/tagset")).await;
    assert_eq!(code, 200);
    assert!(ts["entries"].as_array().unwrap().iter().any(|e| e["label"] == "NNC"));

    let (code, err) = post(&client, format!("{base}/api/iterate"), json!({})).await;
    assert_eq!(code, 409);
    assert_eq!(err["kind"], "pending");
    assert!(err["message"].as_str().unwrap().contains(&pending[0]));

    let (code, err) = post(
        &client,
        format!("{base}/api/corrections"),
        json!({"verse_id": pending[0], "corrections": [{"index": 0, "tag": "XYZ"}]}),
    )
    .await;
    assert_eq!(code, 422);
    assert_eq!(err["tags"], json!(["XYZ"]));
    assert!(!dir.path().join("gold").join(format!("{}.cols", pending[0])).exists());

    correct_pending(&client, &base, &gold).await;
    let (code, err) = post(&client, format!("{base}/api/corrections"), json!({"verse_id": pending[0]})).await;
    assert_eq!(code, 409);
    assert_eq!(err["kind"], "not_pending");
    let (_, slice) = get(&client, format!("{base}/api/slice?iter=1")).await;
    assert!(slice["verses"].as_array().unwrap().is_empty());

    let (code, record) = post(&client, format!("{base}/api/iterate"), json!({})).await;
    assert_eq!(code, 200, "{record}");
    assert_eq!(record["state"], "IgbTC-1");

    let csv = client.get(format!("{base}/api/metrics.csv")).send().await.unwrap();
    assert_eq!(csv.headers()["content-type"], "text/csv; charset=utf-8");
    let body = csv.bytes().await.unwrap();
    assert_eq!(&body[..], &std::fs::read(dir.path().join("metrics.csv")).unwrap()[..]);
    assert_eq!(String::from_utf8_lossy(&body).lines().count(), 3);

    let (_, slice) = get(&client, format!("{base}/api/slice")).await;
    assert_eq!(slice["iteration"], 2);
    let verses = slice["verses"].as_array().unwrap();
    assert!(!verses.is_empty());
    // changed flags compare IgbTC-1 with IgbTC-0
    let initial = Project::open(dir.path()).unwrap().initial_state().unwrap();
    for v in verses {
        let before = initial.get(&v["id"].as_str().unwrap().parse().unwrap()).unwrap();
        for (t, b) in v["tokens"].as_array().unwrap().iter().zip(&before.tokens) {
            assert_eq!(t["changed"].as_bool().unwrap(), t["tag"] != b.tag.as_ref().unwrap().as_str());
        }
    }

    // restart mid-slice
    let first = &verses[0];
    let (code, _) = post(&client, format!("{base}/api/corrections"), gold_batch(first, &gold)).await;
    assert_eq!(code, 200);
    let (_, state_before) = get(&client, format!("{base}/api/state")).await;
    let (_, slice_before) = get(&client, format!("{base}/api/slice")).await;
    server.abort();
    let _ = server.await;

    let (base, _server) = start(dir.path()).await;
    let (_, state_after) = get(&client, format!("{base}/api/state")).await;
    let (_, slice_after) = get(&client, format!("{base}/api/slice")).await;
    assert_eq!(state_after, state_before);
    assert_eq!(slice_after, slice_before);
    let (code, err) = get(&client, format!("{base}/api/slice?iter=7")).await;
    assert_eq!(code, 404);
    assert_eq!(err["kind"], "not_selected");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_iterate_reports_busy() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Project::open(dir.path()).unwrap();
    p.config.schedule.increment = 0.3;
    p.config.schedule.iterations = 3;
    let s = pipeline::synth(&mut p, &SynthConfig { verses: 400, ..SynthConfig::default() }).unwrap();
    pipeline::project(&p).unwrap();
    let (base, _server) = start(dir.path()).await;
    let client = reqwest::Client::new();
    correct_pending(&client, &base, &s.gold).await;

    let calls: Vec<_> = (0..4)
        .map(|_| {
            let c = client.clone();
            let url = format!("{base}/api/iterate");
            tokio::spawn(async move { post(&c, url, json!({})).await })
        })
        .collect();
    let mut codes = Vec::new();
    for c in calls {
        let (code, body) = c.await.unwrap();
        if code == 409 {
            assert!(body["kind"] == "busy" || body["kind"] == "pending", "{body}");
        }
        codes.push(code);
    }
    assert_eq!(codes.iter().filter(|&&c| c == 200).count(), 1, "{codes:?}");
    let (_, st) = get(&client, format!("{base}/api/state")).await;
    assert_eq!(st["iteration"], 1);
}

#[tokio::test]
async fn missing_project_is_404() {
    let dir = tempfile::tempdir().unwrap();
    let (base, _server) = start(dir.path()).await;
    let client = reqwest::Client::new();
    for path in ["state", "tagset", "slice", "metrics.csv"] {
        let (code, body) = get(&client, format!("{base}/api/{path}")).await;
        assert_eq!(code, 404);
        assert_eq!(body["kind"], "no_project");
    }
    let (code, _) = post(&client, format!("{base}/api/iterate"), json!({})).await;
    assert_eq!(code, 404);

    // projecting afterwards makes the service pick the project up
    setup(dir.path());
    let (code, st) = get(&client, format!("{base}/api/state")).await;
    assert_eq!(code, 200);
    assert_eq!(st["iteration"], 0);
}
