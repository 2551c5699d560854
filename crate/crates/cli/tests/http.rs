use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use treeplan::service::{router, AppState};
use treeplan::settings::load_tree;
use treeplan::store::Store;
use treeplan::{gateway_for, Settings};
use treeplan_core::{parse_task_tree, to_progress_lines};
use treeplan_llm::{demand_key, FixtureBackend};

const CHOCOLATE_MILK: &str = "Make a glass of chocolate milk.";
const GREEK_SALAD: &str = "Make a Greek salad.";

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture_tree(demand: &str, n: usize) -> Value {
    let tree = load_tree(&repo().join("fixtures").join(demand_key(demand)).join(format!("tree_{n}.json"))).unwrap();
    serde_json::to_value(&tree).unwrap()
}

fn state(store: Store, with_backend: bool) -> Arc<AppState> {
    let settings = Settings::builtin();
    let gateway = with_backend.then(|| gateway_for(Box::new(FixtureBackend::new(repo().join("fixtures"))), &settings));
    AppState::new(settings, gateway, store)
}

fn app() -> Router {
    router(state(Store::in_memory(), true))
}

async fn send(app: &Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let mut request = Request::builder().method(method).uri(uri);
    if body.is_some() {
        request = request.header("content-type", "application/json");
    }
    let request = request.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    send(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: &Value) -> (StatusCode, Value) {
    send(app, Method::POST, uri, Some(&body.to_string())).await
}

/// Unit index and container of the first progress entry of `object`.
fn first_entry(lines: &Value, object: &str) -> (usize, Option<String>) {
    let line = lines["lines"].as_array().unwrap().iter().find(|l| l["object"] == object).unwrap();
    let entry = &line["entries"][0];
    let input = entry["inputs"][0]["container"].as_str().map(str::to_string);
    (entry["unit_index"].as_u64().unwrap() as usize, input)
}

fn move_oil(version: u64, unit_index: usize, container: &str) -> Value {
    json!({
        "version": version,
        "correction": {"kind": "patch", "object": "olive oil", "unit_index": unit_index, "side": "input", "container": container}
    })
}

#[tokio::test]
async fn health_reports_plan_count() {
    let app = app();
    assert_eq!(get(&app, "/health").await, (StatusCode::OK, json!({"status": "ok", "plans": 0})));
}

#[tokio::test]
async fn demand_runs_the_whole_pipeline() {
    let app = app();
    let (status, body) = post(&app, "/plans", &json!({"demand": CHOCOLATE_MILK})).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body, json!({"plan_id": "plan-1", "version": 1, "cost": "0.5"}));
    let (status, one) = post(&app, "/plans", &json!({"demand": CHOCOLATE_MILK, "n_trees": 1})).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(one["cost"], "0.7");
    assert_eq!(one["plan_id"], "plan-2");

    let (status, rejections) = get(&app, "/plans/plan-1/network/rejections").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(rejections.as_array().unwrap().len(), 1);
    assert_eq!(rejections[0]["source"], "tree-3");
    assert_eq!(get(&app, "/plans/plan-2/network/rejections").await.1, json!([]));
    assert_eq!(get(&app, "/health").await.1["plans"], 2);
}

#[tokio::test]
async fn lines_match_the_stored_tree() {
    let app = app();
    post(&app, "/plans", &json!({"trees": [fixture_tree(GREEK_SALAD, 1)]})).await;
    let (status, plan) = get(&app, "/plans/plan-1").await;
    assert_eq!(status, StatusCode::OK);
    let tree = parse_task_tree(&plan["tree"].to_string()).unwrap();
    let (status, lines) = get(&app, "/plans/plan-1/lines").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(lines["version"], 1);
    let expected = serde_json::to_value(to_progress_lines(&tree)).unwrap();
    assert_eq!(lines["lines"], expected["lines"]);
    assert_eq!(lines["goal"], expected["goal"]);
    let tracks: Vec<&str> = lines["lines"].as_array().unwrap().iter().map(|l| l["object"].as_str().unwrap()).collect();
    assert!(tracks.contains(&"olive oil") && tracks.contains(&"feta cheese"));
}

#[tokio::test]
async fn corrections_are_versioned() {
    let app = app();
    post(&app, "/plans", &json!({"trees": [fixture_tree(GREEK_SALAD, 1)]})).await;
    let (_, lines) = get(&app, "/plans/plan-1/lines").await;
    let (unit, container) = first_entry(&lines, "olive oil");
    assert_eq!(container.as_deref(), Some("bottle"));

    let (status, body) = post(&app, "/plans/plan-1/corrections", &move_oil(1, unit, "cup")).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body, json!({"plan_id": "plan-1", "version": 2, "changed": true}));
    let (_, lines) = get(&app, "/plans/plan-1/lines").await;
    assert_eq!(lines["version"], 2);
    assert_eq!(first_entry(&lines, "olive oil").1.as_deref(), Some("cup"));
    let (_, plan) = get(&app, "/plans/plan-1").await;
    assert!(!plan["tree"].to_string().contains("bottle"));

    let (status, body) = post(&app, "/plans/plan-1/corrections", &move_oil(1, unit, "jar")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "stale_version");
    assert_eq!(body["current_version"], 2);

    let (status, body) = post(&app, "/plans/plan-1/corrections", &move_oil(2, unit, "cup")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"plan_id": "plan-1", "version": 2, "changed": false}));

    let missing = json!({"version": 2, "correction": {"kind": "patch", "object": "anchovy", "unit_index": 0, "container": "tin"}});
    let (status, body) = post(&app, "/plans/plan-1/corrections", &missing).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "correction_rejected");

    let (_, lines) = get(&app, "/plans/plan-1/lines").await;
    let (cucumber_unit, _) = first_entry(&lines, "cucumber");
    let unsliced = json!({"version": 2, "correction": {
        "kind": "patch", "object": "cucumber", "unit_index": cucumber_unit, "side": "output", "states": ["whole"]}});
    let (status, body) = post(&app, "/plans/plan-1/corrections", &unsliced).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(body["error"], "correction_rejected");
    assert!(body["unit_index"].is_u64(), "{body}");
    assert_eq!(get(&app, "/plans/plan-1").await.1["version"], 2);
}

#[tokio::test]
async fn racing_corrections_yield_one_conflict() {
    let app = app();
    post(&app, "/plans", &json!({"trees": [fixture_tree(GREEK_SALAD, 1)]})).await;
    let (_, lines) = get(&app, "/plans/plan-1/lines").await;
    let (unit, _) = first_entry(&lines, "olive oil");
    let (a, b) = (move_oil(1, unit, "cup"), move_oil(1, unit, "jar"));
    let (first, second) = tokio::join!(
        post(&app, "/plans/plan-1/corrections", &a),
        post(&app, "/plans/plan-1/corrections", &b),
    );
    let mut statuses = [first.0, second.0];
    statuses.sort();
    assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT]);
    assert_eq!(get(&app, "/plans/plan-1").await.1["version"], 2);
}

#[tokio::test]
async fn compile_returns_solved_steps() {
    let app = app();
    post(&app, "/plans", &json!({"demand": "Pour milk into a glass."})).await;
    let (status, body) = post(&app, "/plans/plan-1/compile", &Value::Null).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let steps = body["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0]["motion"], "pour");
    assert_eq!(steps[0]["plan"], json!(["(pick-up bottle)", "(pour milk bottle glass)", "(put-down bottle)"]));
    let domain = treeplan_pddl::parse_domain(steps[0]["domain"].as_str().unwrap()).unwrap();
    let problem = treeplan_pddl::parse_problem(steps[0]["problem"].as_str().unwrap()).unwrap();
    let plan = treeplan_pddl::solve(&domain, &problem, Default::default()).unwrap();
    assert!(treeplan_pddl::validate_plan(&domain, &problem, &plan));
}

#[tokio::test]
async fn uncompilable_plan_names_the_unit() {
    let app = app();
    let tree = json!({
        "goal": {"label": "egg", "states": ["whole", "in [pan]"]},
        "units": [{"inputs": [{"label": "egg", "states": ["whole", "in [bowl]"]}], "motion": "juggle",
                   "outputs": [{"label": "egg", "states": ["whole", "in [pan]"]}]}]
    });
    let (status, _) = post(&app, "/plans", &json!({"trees": [tree]})).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, body) = post(&app, "/plans/plan-1/compile", &Value::Null).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "compile_failed");
    assert_eq!(body["unit_index"], 0);
}

#[tokio::test]
async fn bad_requests_are_json_errors() {
    let app = app();
    let cases = [
        json!({"demand": CHOCOLATE_MILK, "trees": [fixture_tree(CHOCOLATE_MILK, 1)]}),
        json!({"trees": []}),
        json!({}),
        json!({"demand": CHOCOLATE_MILK, "colour": "blue"}),
        json!({"trees": [{"goal": {"label": "x"}}]}),
        json!({"trees": [fixture_tree(CHOCOLATE_MILK, 1)], "n_trees": 2}),
    ];
    for case in cases {
        let (status, body) = post(&app, "/plans", &case).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{case}");
        assert_eq!(body["error"], "invalid_body", "{case}");
    }
    let (status, body) = send(&app, Method::POST, "/plans", Some("{not json")).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_body")));
    let (status, body) = send(&app, Method::POST, "/plans", None).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_body")));

    let (status, body) = post(&app, "/plans", &json!({"trees": [{"goal": {"label": "toast", "states": ["toasted"]},
        "units": [{"inputs": [{"label": "bread", "states": ["toasted"]}], "motion": "heat",
                   "outputs": [{"label": "bread", "states": ["raw"]}]}]}]})).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("no_plan")));

    let (status, body) = get(&app, "/plans/plan-9/lines").await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));
    let (status, body) = get(&app, "/nowhere").await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));
    let (status, body) = send(&app, Method::DELETE, "/plans", None).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::METHOD_NOT_ALLOWED, Some("method_not_allowed")));
    let (status, body) = post(&app, "/plans/plan-1/corrections", &json!({"version": 1})).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_body")));
}

#[tokio::test]
async fn backend_failures_map_to_gateway_statuses() {
    let app = app();
    let (status, body) = post(&app, "/plans", &json!({"demand": "A dish nobody recorded."})).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::BAD_GATEWAY, Some("generation_failed")));
    let offline = router(state(Store::in_memory(), false));
    let (status, body) = post(&offline, "/plans", &json!({"demand": CHOCOLATE_MILK})).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::SERVICE_UNAVAILABLE, Some("no_backend")));
    let (status, _) = post(&offline, "/plans", &json!({"trees": [fixture_tree(CHOCOLATE_MILK, 1)]})).await;
    assert_eq!(status, StatusCode::CREATED);
}

#[tokio::test]
async fn plans_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let table = Settings::builtin().table;
    let first = router(state(Store::open(dir.path(), &table).unwrap(), true));
    post(&first, "/plans", &json!({"demand": GREEK_SALAD})).await;
    let (_, lines) = get(&first, "/plans/plan-1/lines").await;
    let (unit, _) = first_entry(&lines, "olive oil");
    assert_eq!(post(&first, "/plans/plan-1/corrections", &move_oil(1, unit, "cup")).await.0, StatusCode::OK);
    let (_, before) = get(&first, "/plans/plan-1").await;
    let (_, rejections) = get(&first, "/plans/plan-1/network/rejections").await;
    drop(first);

    let second = router(state(Store::open(dir.path(), &table).unwrap(), true));
    let (status, after) = get(&second, "/plans/plan-1").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after, before);
    assert_eq!(after["version"], 2);
    assert_eq!(get(&second, "/plans/plan-1/network/rejections").await.1, rejections);
    let (_, created) = post(&second, "/plans", &json!({"demand": CHOCOLATE_MILK})).await;
    assert_eq!(created["plan_id"], "plan-2");
    assert!(dir.path().join("plans/plan-1/tree_v1.json").is_file());
    assert!(dir.path().join("plans/plan-1/tree_v2.json").is_file());
}

#[test]
fn corrupt_store_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.json"), "{").unwrap();
    assert!(Store::open(dir.path(), &Settings::builtin().table).is_err());
}

#[test]
fn serves_over_a_real_socket() {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    runtime.spawn(async move { axum::serve(listener, app()).await.unwrap() });

    let exchange = |request: String| {
        let mut stream = std::net::TcpStream::connect(addr).unwrap();
        stream.write_all(request.as_bytes()).unwrap();
        let mut response = String::new();
        stream.read_to_string(&mut response).unwrap();
        response
    };
    let health = exchange("GET /health HTTP/1.1\r\nHost: test\r\nConnection: close\r\n\r\n".into());
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.ends_with(r#"{"plans":0,"status":"ok"}"#), "{health}");

    let body = json!({"demand": CHOCOLATE_MILK}).to_string();
    let created = exchange(format!(
        "POST /plans HTTP/1.1\r\nHost: test\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    ));
    assert!(created.starts_with("HTTP/1.1 201"), "{created}");
    assert!(created.contains(r#""cost":"0.5""#));
}

#[tokio::test]
async fn compile_uses_the_corrected_tree() {
    let app = app();
    post(&app, "/plans", &json!({"trees": [fixture_tree(GREEK_SALAD, 1)]})).await;
    let (_, before) = post(&app, "/plans/plan-1/compile", &Value::Null).await;
    let (_, lines) = get(&app, "/plans/plan-1/lines").await;
    let (unit, _) = first_entry(&lines, "olive oil");
    post(&app, "/plans/plan-1/corrections", &move_oil(1, unit, "cup")).await;
    let (status, after) = post(&app, "/plans/plan-1/compile", &Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after["version"], 2);
    let problems = |body: &Value| -> Vec<String> {
        body["steps"].as_array().unwrap().iter().map(|s| s["problem"].as_str().unwrap().to_string()).collect()
    };
    let (old, new) = (problems(&before), problems(&after));
    assert_eq!(old.len(), new.len());
    assert!(old.iter().any(|p| p.contains("bottle")));
    assert!(new.iter().all(|p| !p.contains("bottle")));
    let edited = new.iter().zip(&old).filter(|(n, o)| n != o).count();
    assert!(edited >= 2, "{edited} problems changed");
    let step = after["steps"].as_array().unwrap().iter().find(|s| s["unit_index"] == unit).unwrap();
    assert!(step["problem"].as_str().unwrap().contains("(in olive-oil cup)"), "{step}");
}
