use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use prism_core::engine::{payload_digest, AuditLog, EngineDescriptor, EngineRegistry, RemoteConfig};
use prism_core::fixtures;
use prism_core::text::Tagger;
use prism_service::http::router;
use prism_service::Service;
use serde_json::{json, Value};
use tower::ServiceExt;

fn service_in(dir: &Path) -> Arc<Service> {
    let mut registry = EngineRegistry::with_fixture_mock(AuditLog::in_memory());
    let mut unreachable = RemoteConfig::new("http://127.0.0.1:1/translate");
    unreachable.max_retries = 0;
    unreachable.timeout_ms = 2_000;
    registry
        .register(EngineDescriptor::remote("offline", "en", "fr", unreachable))
        .unwrap();
    Arc::new(Service::new(
        registry,
        fixtures::lexicon_dictionaries(),
        Tagger::fixture(),
        0,
        dir.join("sessions"),
    ))
}

struct Api {
    app: Router,
    service: Arc<Service>,
    _dir: tempfile::TempDir,
}

impl Api {
    fn new() -> Api {
        let dir = tempfile::tempdir().unwrap();
        let service = service_in(dir.path());
        Api {
            app: router(service.clone()),
            service,
            _dir: dir,
        }
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let builder = Request::builder().method(method).uri(uri);
        let request = match body {
            Some(body) => builder
                .header("content-type", "application/json")
                .body(Body::from(body.to_string())),
            None => builder.body(Body::empty()),
        }
        .unwrap();
        self.raw(request).await
    }

    async fn raw(&self, request: Request<Body>) -> (StatusCode, Value) {
        let response = self.app.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap()
        };
        (status, value)
    }

    async fn session(&self, text: &str) -> String {
        let (status, body) = self.call("POST", "/v1/sessions", Some(json!({ "text": text }))).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }
}

#[tokio::test]
async fn running_example_chain() {
    let api = Api::new();
    let id = api.session(fixtures::RUNNING_EXAMPLE).await;

    let (status, encoded) = api
        .call(
            "POST",
            &format!("/v1/sessions/{id}/encode"),
            Some(json!({ "method": "prism-r", "ratio": 0.4, "seed": 11 })),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{encoded}");
    assert!(encoded["epsilon"].as_f64().unwrap() > 0.0);
    let subs = encoded["substitutions"].as_array().unwrap();
    for sub in subs {
        assert!(sub["position"].is_u64() && sub["original"].is_string() && sub["substitute"].is_string());
    }

    let (status, sent) = api
        .call(
            "POST",
            &format!("/v1/sessions/{id}/send"),
            Some(json!({ "engine": "mock-en-fr" })),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{sent}");
    assert!(sent["y_pub"].is_string());

    let (status, decoded) = api.call("POST", &format!("/v1/sessions/{id}/decode"), None).await;
    assert_eq!(status, StatusCode::OK, "{decoded}");
    assert_eq!(decoded["y_pri"], fixtures::RUNNING_EXAMPLE_TRANSLATED);
    assert_eq!(decoded["misses"], json!([]));

    let (status, view) = api.call("GET", &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["state"], "decoded");
}

#[tokio::test]
async fn guided_encoding_reports_no_epsilon() {
    let api = Api::new();
    let id = api.session(fixtures::RUNNING_EXAMPLE).await;
    let (status, encoded) = api
        .call(
            "POST",
            &format!("/v1/sessions/{id}/encode"),
            Some(json!({ "method": "prism-star", "ratio": 0.3 })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert!(encoded.get("epsilon").is_none());
    assert_eq!(encoded["branch"], "prism-star");
    assert_eq!(encoded["substitutions"].as_array().unwrap().len(), 2);
    assert!(encoded["substitutions"][0]["tag"].is_string());
}

#[tokio::test]
async fn state_machine_conflicts() {
    let api = Api::new();
    let id = api.session("Alice went home.").await;
    let decode = format!("/v1/sessions/{id}/decode");
    let send = format!("/v1/sessions/{id}/send");
    let encode = format!("/v1/sessions/{id}/encode");

    assert_eq!(api.call("POST", &decode, None).await.0, StatusCode::CONFLICT);
    assert_eq!(
        api.call("POST", &send, Some(json!({ "engine": "mock-en-fr" }))).await.0,
        StatusCode::CONFLICT
    );
    let params = json!({ "method": "prism-r", "ratio": 0.5, "seed": 1 });
    assert_eq!(api.call("POST", &encode, Some(params.clone())).await.0, StatusCode::OK);
    assert_eq!(api.call("POST", &decode, None).await.0, StatusCode::CONFLICT);
    assert_eq!(
        api.call("POST", &send, Some(json!({ "engine": "mock-en-fr" }))).await.0,
        StatusCode::OK
    );
    assert_eq!(api.call("POST", &encode, Some(params)).await.0, StatusCode::CONFLICT);
    assert_eq!(
        api.call("POST", &send, Some(json!({ "engine": "mock-en-fr" }))).await.0,
        StatusCode::CONFLICT
    );
    assert_eq!(api.call("POST", &decode, None).await.0, StatusCode::OK);
    assert_eq!(api.call("POST", &decode, None).await.0, StatusCode::CONFLICT);
}

#[tokio::test]
async fn error_statuses() {
    let api = Api::new();
    assert_eq!(
        api.call("POST", "/v1/sessions/missing/decode", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        api.call("GET", "/v1/sessions/missing", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        api.call("POST", "/v1/sessions", Some(json!({ "text": "" }))).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(
        api.call("POST", "/v1/sessions", Some(json!({ "txt": "hi" }))).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );

    let id = api.session("Alice went home.").await;
    let encode = format!("/v1/sessions/{id}/encode");
    for bad in [
        json!({ "method": "prism-r", "ratio": 1.5 }),
        json!({ "method": "prism-r", "ratio": 0.0 }),
        json!({ "method": "prism-x", "ratio": 0.5 }),
        json!({ "method": "mixed", "ratio": 0.5 }),
        json!({ "method": "mixed", "ratio": 0.5, "beta": 2.0 }),
        json!({ "method": "prism-r" }),
    ] {
        let (status, body) = api.call("POST", &encode, Some(bad.clone())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{bad} -> {body}");
        assert!(body["error"].is_string());
    }
    let garbage = Request::builder()
        .method("POST")
        .uri(&encode)
        .header("content-type", "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    assert_eq!(api.raw(garbage).await.0, StatusCode::UNPROCESSABLE_ENTITY);

    assert_eq!(
        api.call(
            "POST",
            &encode,
            Some(json!({ "method": "mixed", "ratio": 0.5, "beta": 0.5 }))
        )
        .await
        .0,
        StatusCode::OK
    );
    let send = format!("/v1/sessions/{id}/send");
    assert_eq!(
        api.call("POST", &send, Some(json!({ "engine": "nope" }))).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    let (status, body) = api.call("POST", &send, Some(json!({ "engine": "offline" }))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY, "{body}");
    let (_, view) = api.call("GET", &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(view["state"], "encoded");
    assert_eq!(
        api.call("POST", &send, Some(json!({ "engine": "mock-en-fr" }))).await.0,
        StatusCode::OK
    );
}

#[tokio::test]
async fn only_the_last_draft_is_sent() {
    let api = Api::new();
    let text = "Alice saw a red fox near the old barn.";
    let id = api.session(text).await;
    let encode = format!("/v1/sessions/{id}/encode");
    let (_, first) = api
        .call(
            "POST",
            &encode,
            Some(json!({ "method": "prism-r", "ratio": 0.2, "seed": 3 })),
        )
        .await;
    let (_, second) = api
        .call(
            "POST",
            &encode,
            Some(json!({ "method": "prism-r", "ratio": 0.9, "seed": 3 })),
        )
        .await;
    let first = first["x_pub"].as_str().unwrap();
    let second = second["x_pub"].as_str().unwrap();
    assert_ne!(first, second);

    api.call(
        "POST",
        &format!("/v1/sessions/{id}/send"),
        Some(json!({ "engine": "mock-en-fr" })),
    )
    .await;
    let (status, audit) = api.call("GET", "/v1/audit", None).await;
    assert_eq!(status, StatusCode::OK);
    let hashes: Vec<&str> = audit
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["payload_hash"].as_str().unwrap())
        .collect();
    assert_eq!(hashes, vec![payload_digest(second).as_str()]);
    assert_eq!(audit[0]["engine_id"], "mock-en-fr");
    assert_eq!(audit[0]["payload_len"], second.chars().count());
}

#[tokio::test]
async fn outbound_containment_across_sessions() {
    let api = Api::new();
    let texts = fixtures::sentences(12, 21);
    let mut sent = BTreeSet::new();
    let mut private = BTreeSet::new();
    for (i, text) in texts.iter().enumerate() {
        let id = api.session(text).await;
        private.insert(payload_digest(text));
        let method = if i % 2 == 0 { "prism-r" } else { "prism-star" };
        let (_, encoded) = api
            .call(
                "POST",
                &format!("/v1/sessions/{id}/encode"),
                Some(json!({ "method": method, "ratio": 0.6, "seed": i })),
            )
            .await;
        // Every third session is never sent.
        if i % 3 == 2 {
            continue;
        }
        sent.insert(payload_digest(encoded["x_pub"].as_str().unwrap()));
        api.call(
            "POST",
            &format!("/v1/sessions/{id}/send"),
            Some(json!({ "engine": "mock-en-fr" })),
        )
        .await;
    }
    let audited: BTreeSet<String> = api
        .service
        .audit_records()
        .into_iter()
        .map(|r| r.payload_hash)
        .collect();
    assert_eq!(audited, sent);
    assert!(audited.is_disjoint(&private));
}

#[tokio::test]
async fn listing_stats_export_and_delete() {
    let api = Api::new();
    let (status, engines) = api.call("GET", "/v1/engines", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = engines
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, vec!["mock-en-fr", "offline"]);
    assert_eq!(engines[0]["kind"], "mock");

    let (status, stats) = api.call("GET", "/v1/dict/stats", None).await;
    assert_eq!(status, StatusCode::OK);
    let words = prism_core::MockLexicon::fixture().len() as u64;
    assert_eq!(stats["entries"], words);
    assert_eq!(stats["vocab_size"], words);
    assert_eq!(stats["mode"], "plain");
    assert_eq!(stats["pos_keyed"]["mode"], "pos_keyed");

    let id = api.session(fixtures::RUNNING_EXAMPLE).await;
    api.call(
        "POST",
        &format!("/v1/sessions/{id}/encode"),
        Some(json!({ "method": "prism-star", "ratio": 0.3 })),
    )
    .await;
    let (status, exported) = api.call("POST", &format!("/v1/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK);
    let path = Path::new(exported["path"].as_str().unwrap());
    assert!(path.starts_with(api.service.session_dir()));
    let file: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(file["x_pri"], fixtures::RUNNING_EXAMPLE);
    assert_eq!(file["state"], "encoded");
    let records = file["history"]["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    for record in records {
        for field in ["position", "original", "substitute", "tag"] {
            assert!(record.get(field).is_some(), "{record}");
        }
    }

    let (status, _) = api.call("DELETE", &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    assert_eq!(
        api.call("GET", &format!("/v1/sessions/{id}"), None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        api.call("DELETE", &format!("/v1/sessions/{id}"), None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(api.service.session_count(), 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions() {
    let api = Arc::new(Api::new());
    let texts = fixtures::sentences(24, 5);
    let tasks: Vec<_> = texts
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, text)| {
            let api = api.clone();
            tokio::spawn(async move {
                let id = api.session(&text).await;
                let params = json!({ "method": "prism-r", "ratio": 0.5, "seed": i });
                let (s1, _) = api
                    .call("POST", &format!("/v1/sessions/{id}/encode"), Some(params))
                    .await;
                let (s2, _) = api
                    .call(
                        "POST",
                        &format!("/v1/sessions/{id}/send"),
                        Some(json!({ "engine": "mock-en-fr" })),
                    )
                    .await;
                let (s3, decoded) = api.call("POST", &format!("/v1/sessions/{id}/decode"), None).await;
                assert_eq!((s1, s2, s3), (StatusCode::OK, StatusCode::OK, StatusCode::OK));
                (text, decoded["y_pri"].as_str().unwrap().to_string())
            })
        })
        .collect();
    let lexicon = prism_core::MockLexicon::fixture();
    for task in tasks {
        let (text, y_pri) = task.await.unwrap();
        assert_eq!(y_pri, prism_core::Translator::translate(&lexicon, &text).unwrap());
    }
    assert_eq!(api.service.audit_records().len(), texts.len());
}

#[tokio::test]
async fn serves_on_loopback() {
    let dir = tempfile::tempdir().unwrap();
    let service = service_in(dir.path());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let server = tokio::spawn(async move { axum::serve(listener, router(service)).await });

    let response = tokio::task::spawn_blocking(move || {
        use std::io::{Read, Write};
        let mut stream = std::net::TcpStream::connect(addr).unwrap();
        stream
            .write_all(b"GET /v1/engines HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
            .unwrap();
        let mut response = String::new();
        stream.read_to_string(&mut response).unwrap();
        response
    })
    .await
    .unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("mock-en-fr"));
    server.abort();
}
