//! Wire-format and retry tests against a throwaway in-process HTTP server.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use mirage::backends::http::{HttpChat, HttpEmbedding, HttpNli, HttpOptions};
use mirage::backends::{BackendError, ChatBackend, EmbeddingBackend, NliBackend};

#[derive(Clone, Default)]
struct Recorder {
    hits: Arc<AtomicUsize>,
    last_auth: Arc<Mutex<Option<String>>>,
    last_body: Arc<Mutex<Option<Value>>>,
}

impl Recorder {
    fn observe(&self, headers: &HeaderMap, body: &Value) -> usize {
        *self.last_auth.lock().unwrap() = headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        *self.last_body.lock().unwrap() = Some(body.clone());
        self.hits.fetch_add(1, Ordering::SeqCst) + 1
    }
}

async fn serve(router: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router).await.unwrap();
    });
    format!("http://{addr}")
}

fn fast_options() -> HttpOptions {
    HttpOptions {
        timeout: Duration::from_secs(5),
        retry_base: Duration::from_millis(1),
        max_retries: 3,
        concurrency: 4,
    }
}

#[tokio::test]
async fn chat_round_trip_sends_bearer_token_and_model() {
    let recorder = Recorder::default();
    let router = Router::new()
        .route(
            "/v1/chat/completions",
            post(
                |State(rec): State<Recorder>, headers: HeaderMap, Json(body): Json<Value>| async move {
                    rec.observe(&headers, &body);
                    Json(json!({
                        "choices": [{"message": {"role": "assistant", "content": "scripted reply"}}]
                    }))
                },
            ),
        )
        .with_state(recorder.clone());
    let base = serve(router).await;
    let chat = HttpChat::new(
        &format!("{base}/v1/chat/completions"),
        "test-model",
        Some("test-token".into()),
        fast_options(),
    )
    .unwrap();

    let reply = chat.complete("what is the answer?", 0).await.unwrap();
    assert_eq!(reply, "scripted reply");
    assert_eq!(chat.model_name(), "test-model");
    assert_eq!(
        recorder.last_auth.lock().unwrap().as_deref(),
        Some("Bearer test-token")
    );
    let body = recorder.last_body.lock().unwrap().clone().unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "what is the answer?");
}

#[tokio::test]
async fn rate_limited_request_is_retried() {
    let recorder = Recorder::default();
    let router = Router::new()
        .route(
            "/chat",
            post(
                |State(rec): State<Recorder>, headers: HeaderMap, Json(body): Json<Value>| async move {
                    if rec.observe(&headers, &body) == 1 {
                        (StatusCode::TOO_MANY_REQUESTS, Json(json!({"slow": "down"})))
                    } else {
                        (
                            StatusCode::OK,
                            Json(json!({"choices": [{"message": {"content": "eventually"}}]})),
                        )
                    }
                },
            ),
        )
        .with_state(recorder.clone());
    let base = serve(router).await;
    let chat = HttpChat::new(&format!("{base}/chat"), "m", None, fast_options()).unwrap();

    assert_eq!(chat.complete("p", 0).await.unwrap(), "eventually");
    assert_eq!(recorder.hits.load(Ordering::SeqCst), 2);
    // no token configured means no authorization header at all
    assert_eq!(recorder.last_auth.lock().unwrap().as_deref(), None);
}

#[tokio::test]
async fn persistent_server_errors_exhaust_retries() {
    let recorder = Recorder::default();
    let router = Router::new()
        .route(
            "/chat",
            post(
                |State(rec): State<Recorder>, headers: HeaderMap, Json(body): Json<Value>| async move {
                    rec.observe(&headers, &body);
                    (StatusCode::INTERNAL_SERVER_ERROR, "it broke".to_string())
                },
            ),
        )
        .with_state(recorder.clone());
    let base = serve(router).await;
    let chat = HttpChat::new(&format!("{base}/chat"), "m", None, fast_options()).unwrap();

    let err = chat.complete("p", 0).await.unwrap_err();
    match err {
        BackendError::HttpStatus {
            status,
            body_snippet,
        } => {
            assert_eq!(status, 500);
            assert!(body_snippet.contains("it broke"));
        }
        other => panic!("unexpected error {other}"),
    }
    assert_eq!(
        recorder.hits.load(Ordering::SeqCst),
        4,
        "one attempt plus three retries"
    );
}

#[tokio::test]
async fn client_errors_do_not_retry() {
    let recorder = Recorder::default();
    let router = Router::new()
        .route(
            "/chat",
            post(
                |State(rec): State<Recorder>, headers: HeaderMap, Json(body): Json<Value>| async move {
                    rec.observe(&headers, &body);
                    (StatusCode::NOT_FOUND, "no such model".to_string())
                },
            ),
        )
        .with_state(recorder.clone());
    let base = serve(router).await;
    let chat = HttpChat::new(&format!("{base}/chat"), "m", None, fast_options()).unwrap();

    let err = chat.complete("p", 0).await.unwrap_err();
    assert!(
        matches!(err, BackendError::HttpStatus { status: 404, .. }),
        "{err}"
    );
    assert_eq!(recorder.hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn missing_content_is_a_response_shape_error() {
    let router = Router::new().route("/chat", post(|| async { Json(json!({"choices": []})) }));
    let base = serve(router).await;
    let chat = HttpChat::new(&format!("{base}/chat"), "m", None, fast_options()).unwrap();
    let err = chat.complete("p", 0).await.unwrap_err();
    assert!(matches!(err, BackendError::ResponseShape(_)), "{err}");
}

#[tokio::test]
async fn embedding_round_trip_omits_model_when_unset() {
    let recorder = Recorder::default();
    let router = Router::new()
        .route(
            "/embed",
            post(
                |State(rec): State<Recorder>, headers: HeaderMap, Json(body): Json<Value>| async move {
                    rec.observe(&headers, &body);
                    Json(json!({"data": [{"embedding": [0.125, -0.5, 3.0]}]}))
                },
            ),
        )
        .with_state(recorder.clone());
    let base = serve(router).await;
    let backend = HttpEmbedding::new(&format!("{base}/embed"), None, None, fast_options()).unwrap();

    let vector = backend.embed("some text").await.unwrap();
    assert_eq!(vector, vec![0.125, -0.5, 3.0]);
    let body = recorder.last_body.lock().unwrap().clone().unwrap();
    assert_eq!(body["input"], "some text");
    assert!(body.get("model").is_none(), "model key must be absent");
}

#[tokio::test]
async fn embedding_sends_model_when_configured() {
    let recorder = Recorder::default();
    let router = Router::new()
        .route(
            "/embed",
            post(
                |State(rec): State<Recorder>, headers: HeaderMap, Json(body): Json<Value>| async move {
                    rec.observe(&headers, &body);
                    Json(json!({"data": [{"embedding": [1.0]}]}))
                },
            ),
        )
        .with_state(recorder.clone());
    let base = serve(router).await;
    let backend = HttpEmbedding::new(
        &format!("{base}/embed"),
        Some("embedder-v2".into()),
        None,
        fast_options(),
    )
    .unwrap();

    backend.embed("text").await.unwrap();
    let body = recorder.last_body.lock().unwrap().clone().unwrap();
    assert_eq!(body["model"], "embedder-v2");
}

#[tokio::test]
async fn nli_round_trip_renormalizes_drifted_scores() {
    let recorder = Recorder::default();
    let router = Router::new()
        .route(
            "/nli",
            post(
                |State(rec): State<Recorder>, headers: HeaderMap, Json(body): Json<Value>| async move {
                    rec.observe(&headers, &body);
                    Json(json!({
                        "entailment": 0.60,
                        "neutral": 0.30,
                        "contradiction": 0.1004
                    }))
                },
            ),
        )
        .with_state(recorder.clone());
    let base = serve(router).await;
    let backend = HttpNli::new(&format!("{base}/nli"), None, fast_options()).unwrap();

    let triple = backend
        .infer("the premise", "the hypothesis")
        .await
        .unwrap();
    let body = recorder.last_body.lock().unwrap().clone().unwrap();
    assert_eq!(body["premise"], "the premise");
    assert_eq!(body["hypothesis"], "the hypothesis");
    assert!(triple.renormalized());
    assert!((triple.entail() - 0.60 / 1.0004).abs() < 1e-12);
    let sum = triple.entail() + triple.neutral() + triple.contradict();
    assert!((sum - 1.0).abs() < 1e-6);
}

#[tokio::test]
async fn nli_rejects_out_of_range_scores() {
    let router = Router::new().route(
        "/nli",
        post(|| async { Json(json!({"entailment": 1.4, "neutral": -0.2, "contradiction": -0.2})) }),
    );
    let base = serve(router).await;
    let backend = HttpNli::new(&format!("{base}/nli"), None, fast_options()).unwrap();
    let err = backend.infer("p", "h").await.unwrap_err();
    assert!(
        matches!(err, BackendError::InvalidNliDistribution(_)),
        "{err}"
    );
}

#[tokio::test]
async fn connection_refused_is_a_transport_error() {
    let options = HttpOptions {
        timeout: Duration::from_secs(2),
        retry_base: Duration::from_millis(1),
        max_retries: 0,
        concurrency: 1,
    };
    let chat = HttpChat::new("http://127.0.0.1:9/nothing", "m", None, options).unwrap();
    let err = chat.complete("p", 0).await.unwrap_err();
    assert!(matches!(err, BackendError::Transport(_)), "{err}");
}
