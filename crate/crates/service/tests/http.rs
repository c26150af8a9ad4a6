use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use glossgraph::auth::User;
use glossgraph::http::{router, AppState};
use glossgraph::{Role, Service, Users};
use glossgraph_core::{fixtures, AnnotationStore, Ontology};

const ANNOTATOR: &str = "tok-a1";
const OTHER_ANNOTATOR: &str = "tok-a2";
const CURATOR: &str = "tok-cur";
const QUERIER: &str = "tok-q";

fn users() -> Users {
    let u = |name: &str, token: &str, role| User {
        name: name.into(),
        token: token.into(),
        role,
    };
    Users::new(vec![
        u("a1", ANNOTATOR, Role::Annotator),
        u("a2", OTHER_ANNOTATOR, Role::Annotator),
        u("cur", CURATOR, Role::Curator),
        u("q", QUERIER, Role::Querier),
    ])
    .unwrap()
}

fn app_with(store: AnnotationStore) -> Router {
    router(AppState::new(Service::in_memory(store), users()))
}

fn app() -> Router {
    let mut store = fixtures::store();
    fixtures::annotate_godhuma(&mut store).unwrap();
    app_with(store)
}

struct Reply {
    status: StatusCode,
    version: u64,
    body: Value,
}

async fn call(app: &Router, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let version = res
        .headers()
        .get("x-graph-version")
        .expect("every response carries the graph version")
        .to_str()
        .unwrap()
        .parse()
        .unwrap();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).expect("JSON body")
    };
    Reply { status, version, body }
}

async fn get(app: &Router, uri: &str, token: &str) -> Reply {
    call(app, Method::GET, uri, Some(token), None).await
}

async fn post(app: &Router, uri: &str, token: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(token), Some(body)).await
}

async fn wait_for_job(app: &Router, id: u64) -> Value {
    for _ in 0..500 {
        let r = get(app, &format!("/api/jobs/{id}"), CURATOR).await;
        assert_eq!(r.status, StatusCode::OK);
        if r.body["status"] == "done" || r.body["status"] == "failed" {
            return r.body;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("job {id} did not finish");
}

#[tokio::test]
async fn requests_need_a_known_token() {
    let app = app();
    let r = call(&app, Method::GET, "/api/graph/stats", None, None).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    assert_eq!(r.body["error"]["kind"], "unauthorized");
    let r = call(&app, Method::GET, "/api/graph/stats", Some("forged"), None).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    let r = get(&app, "/api/whoami", QUERIER).await;
    assert_eq!(r.body, json!({"name": "q", "role": "querier"}));
}

#[tokio::test]
async fn queriers_read_but_do_not_write() {
    let app = app();
    let entity = json!({"line_id": fixtures::LINE_SLOKA_31, "lemma": "यव", "entity_type": "Substance"});
    let r = post(&app, "/api/annotate/entity", QUERIER, entity).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    assert_eq!(r.body["error"]["kind"], "forbidden");
    let r = post(&app, "/api/curate", QUERIER, json!({"pass": "conflicts"})).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    let r = post(&app, "/api/curate", ANNOTATOR, json!({"pass": "canonicalize"})).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);

    for uri in ["/api/graph/stats", "/api/templates", "/api/suggest?q=god", "/api/conflicts", "/api/graph/export", "/api/ontology"] {
        assert_eq!(get(&app, uri, QUERIER).await.status, StatusCode::OK, "{uri}");
    }
    let q = json!({"template_id": "tridosha_increased_by", "args": [fixtures::KAPHA]});
    assert_eq!(post(&app, "/api/query", QUERIER, q).await.status, StatusCode::OK);
}

#[tokio::test]
async fn annotating_lines() {
    let app = app();
    let v0 = get(&app, "/api/graph/stats", ANNOTATOR).await.version;
    let r = post(
        &app,
        "/api/annotate/entity",
        ANNOTATOR,
        json!({"line_id": fixtures::LINE_SLOKA_39_A, "unnamed_ordinal": 1, "entity_type": "Substance"}),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.body["lemma"], "X1-256358");
    assert!(r.version > v0);

    let again = post(
        &app,
        "/api/annotate/entity",
        ANNOTATOR,
        json!({"line_id": fixtures::LINE_SLOKA_39_A, "unnamed_ordinal": 1, "entity_type": "Substance"}),
    )
    .await;
    assert_eq!(again.status, StatusCode::CONFLICT);

    let r = post(
        &app,
        "/api/annotate/relation",
        ANNOTATOR,
        json!({"line_id": fixtures::LINE_SLOKA_39_A, "src": "श्याम", "relation_type": "is Property of",
               "dst": "X1-256358", "detail": "varṇa"}),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.body["outcome"]["status"], "pending");
    assert!(r.body["warning"].as_str().unwrap().contains("pending"));

    let lines = get(&app, "/api/corpus/Dh%C4%81nyavarga?from=39&to=39", ANNOTATOR).await;
    assert_eq!(lines.status, StatusCode::OK);
    let lines = lines.body["lines"].as_array().unwrap().clone();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["line_id"], fixtures::LINE_SLOKA_39_A);
    assert_eq!(lines[0]["entities"][0]["lemma"], "X1-256358");
    assert_eq!(lines[0]["relations"][0]["detail"], "varṇa");

    let r = post(
        &app,
        "/api/annotate/entity",
        ANNOTATOR,
        json!({"line_id": 1, "lemma": "यव", "entity_type": "Substance"}),
    )
    .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = post(
        &app,
        "/api/annotate/entity",
        ANNOTATOR,
        json!({"line_id": fixtures::LINE_SLOKA_31, "lemma": "यव", "entity_type": "Substanse"}),
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["error"]["kind"], "unknown_type");
    assert!(r.body["error"]["message"].as_str().unwrap().contains("Substance"));
}

#[tokio::test]
async fn corpus_ranges() {
    let app = app();
    let all = get(&app, "/api/corpus/Dh%C4%81nyavarga", QUERIER).await;
    assert_eq!(all.body["lines"].as_array().unwrap().len(), 27);
    let r = get(&app, "/api/corpus/Dh%C4%81nyavarga?from=9&to=3", QUERIER).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = get(&app, "/api/corpus/Dh%C4%81nyavarga?from=x", QUERIER).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = get(&app, "/api/corpus/Nowhere", QUERIER).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn suggestions_need_three_characters() {
    let app = app();
    let r = post(
        &app,
        "/api/annotate/entity",
        ANNOTATOR,
        json!({"line_id": fixtures::LINE_SLOKA_39_A, "lemma": "माष", "entity_type": "Substance"}),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    for q in ["mas", "maa", "mAS", "m%C4%81%E1%B9%A3"] {
        let r = get(&app, &format!("/api/suggest?q={q}"), QUERIER).await;
        assert_eq!(r.body["suggestions"], json!(["माष"]), "{q}");
    }
    let r = get(&app, "/api/suggest?q=ma", QUERIER).await;
    assert_eq!(r.body, json!({"query": "ma", "suggestions": []}));
}

#[tokio::test]
async fn template_and_raw_queries() {
    let app = app();
    let r = post(
        &app,
        "/api/query",
        QUERIER,
        json!({"template_id": "tridosha_increased_by", "args": [fixtures::KAPHA]}),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["result"]["rows"], json!([[{"kind": "node", "lemma": "गोधूम", "entity_type": "Substance", "node_id": r.body["result"]["rows"][0][0]["node_id"]}]]));
    assert!(r.body["nl_english"].as_str().unwrap().contains("कफ"));
    let nodes = r.body["result"]["subgraph"]["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 1);

    // romanized arguments resolve too
    for arg in ["kapha", "kaPa"] {
        let r = post(&app, "/api/query", QUERIER, json!({"template_id": "tridosha_increased_by", "args": [arg]})).await;
        assert_eq!(r.status, StatusCode::OK, "{arg}");
        assert_eq!(r.body["resolved_args"], json!(["कफ"]));
    }

    let r = post(
        &app,
        "/api/query",
        QUERIER,
        json!({"raw": "MATCH (p)-[r:IS_PROPERTY_OF]->(s) WHERE s.lemma = \"गोधूम\" RETURN p.lemma, r.detail"}),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["result"]["rows"].as_array().unwrap().len(), 3);

    let r = post(&app, "/api/query", QUERIER, json!({"template_id": "tridosha_increased_by", "args": []})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post(&app, "/api/query", QUERIER, json!({"raw": "MATCH (a)-[*4]->(b) RETURN a"})).await;
    assert_eq!((r.status, r.body["error"]["kind"].as_str()), (StatusCode::BAD_REQUEST, Some("query")));
    let r = post(&app, "/api/query", QUERIER, json!({"template_id": "properties_of", "args": ["अज्ञात"]})).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = call(&app, Method::POST, "/api/query", Some(QUERIER), None).await;
    assert_eq!(r.body["error"]["kind"], "bad_request");
}

#[tokio::test]
async fn curation_runs_as_a_job() {
    let ontology = Arc::new(Ontology::shipped());
    let store = AnnotationStore::with_base(fixtures::corpus(), fixtures::rajika_graph(ontology));
    let app = app_with(store);

    let r = post(&app, "/api/curate", CURATOR, json!({"pass": "canonicalize", "dry_run": true})).await;
    assert_eq!(r.status, StatusCode::ACCEPTED);
    assert_eq!(r.body["status"], "queued");
    let v0 = r.version;
    let job = wait_for_job(&app, r.body["job_id"].as_u64().unwrap()).await;
    assert_eq!(job["status"], "done");
    let comps = job["result"]["components"].as_array().unwrap();
    assert_eq!(comps.len(), 1);
    assert_eq!(comps[0]["members"].as_array().unwrap().len(), 10);
    assert_eq!(comps[0]["canonical_lemma"], fixtures::RAJIKA);
    assert_eq!(get(&app, "/api/graph/stats", QUERIER).await.version, v0);

    let r = post(&app, "/api/curate", CURATOR, json!({"pass": "canonicalize", "dry_run": false})).await;
    let job = wait_for_job(&app, r.body["job_id"].as_u64().unwrap()).await;
    assert_eq!(job["status"], "done");
    let after = get(&app, "/api/graph/stats", QUERIER).await;
    assert!(after.version > v0);
    assert_eq!(job["graph_version"], after.version);

    let r = post(&app, "/api/curate", CURATOR, json!({"pass": "sideways"})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/api/jobs/99", CURATOR).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn deleting_annotations() {
    let app = app();
    let r = post(
        &app,
        "/api/annotate/entity",
        ANNOTATOR,
        json!({"line_id": fixtures::LINE_SLOKA_31, "lemma": "यव", "entity_type": "Substance"}),
    )
    .await;
    let id = r.body["annotation_id"].as_u64().unwrap();
    let uri = format!("/api/annotate/{id}");
    let del = |token| call(&app, Method::DELETE, &uri, Some(token), None);
    assert_eq!(del(OTHER_ANNOTATOR).await.status, StatusCode::FORBIDDEN);
    assert_eq!(del(QUERIER).await.status, StatusCode::FORBIDDEN);
    let r = del(ANNOTATOR).await;
    assert_eq!((r.status, r.body.clone()), (StatusCode::OK, json!({"deleted": id})));
    assert_eq!(del(ANNOTATOR).await.status, StatusCode::NOT_FOUND);
    let bad = call(&app, Method::DELETE, "/api/annotate/x", Some(ANNOTATOR), None).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    let r = post(&app, "/api/query", QUERIER, json!({"raw": "MATCH (s) WHERE s.lemma = \"यव\" RETURN s"})).await;
    assert_eq!(r.body["result"]["rows"], json!([]));
}

#[tokio::test]
async fn conflicts_are_listed_and_resolved() {
    let app = app();
    let line = fixtures::LINE_SLOKA_33_A;
    let claim = |token, ty| {
        post(&app, "/api/annotate/entity", token, json!({"line_id": line, "lemma": "ज्वर", "entity_type": ty}))
    };
    assert_eq!(claim(ANNOTATOR, "Symptom").await.status, StatusCode::CREATED);
    assert_eq!(claim(OTHER_ANNOTATOR, "Disease").await.status, StatusCode::CREATED);
    let r = get(&app, "/api/conflicts", CURATOR).await;
    let conflicts = r.body["conflicts"].as_array().unwrap();
    assert_eq!(conflicts.len(), 1);
    assert_eq!(conflicts[0]["lemma"], "ज्वर");
    assert_eq!(conflicts[0]["claimed_types"].as_array().unwrap().len(), 2);

    let uri = "/api/conflicts/%E0%A4%9C%E0%A5%8D%E0%A4%B5%E0%A4%B0/resolve";
    let r = post(&app, uri, ANNOTATOR, json!({"entity_type": "Disease"})).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    let r = post(&app, uri, CURATOR, json!({"entity_type": "Disease"})).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body, json!({"lemma": "ज्वर", "entity_type": "Disease"}));
    let r = get(&app, "/api/conflicts", CURATOR).await;
    assert_eq!(r.body["conflicts"][0]["resolution"], "Disease");
    let r = post(&app, "/api/conflicts/nothing/resolve", CURATOR, json!({"entity_type": "Disease"})).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_writes_all_land() {
    let app = app();
    let v0 = get(&app, "/api/graph/stats", QUERIER).await.version;
    let mut tasks = Vec::new();
    for i in 0..24u32 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let token = if i % 2 == 0 { ANNOTATOR } else { OTHER_ANNOTATOR };
            let body = json!({"line_id": fixtures::LINE_SLOKA_39_B, "unnamed_ordinal": i + 1, "entity_type": "Substance"});
            let w = post(&app, "/api/annotate/entity", token, body).await;
            let r = get(&app, "/api/graph/stats", QUERIER).await;
            (w.status, w.body["annotation_id"].as_u64().unwrap(), r.status)
        }));
    }
    let mut ids = std::collections::BTreeSet::new();
    for t in tasks {
        let (w, id, r) = t.await.unwrap();
        assert_eq!((w, r), (StatusCode::CREATED, StatusCode::OK));
        ids.insert(id);
    }
    assert_eq!(ids.len(), 24);
    let end = get(&app, "/api/graph/stats", QUERIER).await;
    assert_eq!(end.version, v0 + 24);
    assert_eq!(end.body["by_entity_type"]["Substance"], 2 + 24);
}

#[tokio::test]
async fn unknown_routes_are_json_404s() {
    let app = app();
    let r = get(&app, "/api/nothing", QUERIER).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.body["error"]["kind"], "not_found");
}
