mod common;

use std::sync::{Mutex, Once};

use common::{chat_body, serve};
use zeroleak::gateway::{complete, Backend, GatewayError, HttpBackend, HttpSettings};
use zeroleak::generate::generate_driver;
use zeroleak_core::context::{ConversationContext, Message};
use zeroleak_core::ledger::ModelConfig;

static RECORDS: Mutex<Vec<String>> = Mutex::new(Vec::new());

struct Capture;

impl log::Log for Capture {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }
    fn log(&self, r: &log::Record) {
        RECORDS.lock().unwrap().push(format!("{} {}", r.target(), r.args()));
    }
    fn flush(&self) {}
}

fn capture_logs() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        log::set_boxed_logger(Box::new(Capture)).unwrap();
        log::set_max_level(log::LevelFilter::Trace);
    });
}

fn backend(url: &str, var: &str, key: &str) -> HttpBackend {
    std::env::set_var(var, key);
    HttpBackend::new(HttpSettings {
        base_url: url.into(),
        api_key_env: var.into(),
        timeout_secs: 5,
        attempts: 3,
        backoff_ms: 1,
    })
    .unwrap()
}

fn model() -> ModelConfig {
    ModelConfig::preset("gpt-4-0613").unwrap()
}

fn ctx() -> ConversationContext {
    ConversationContext::new(Message::system("sys"), Message::user("fix this"), "", 1000).unwrap()
}

#[test]
fn success_sends_key_and_body() {
    let stub = serve(vec![(200, chat_body("patched", 11, 4))]);
    let b = backend(&stub.url, "ZL_TEST_KEY_OK", "sk-ok-0001");
    let ex = complete(&b, &model(), &ctx(), &|_| 0).unwrap();
    assert_eq!((ex.response_text.as_str(), ex.prompt_tokens, ex.completion_tokens), ("patched", 11, 4));
    let reqs = stub.requests.lock().unwrap();
    assert_eq!(reqs.len(), 1);
    let req = &reqs[0];
    assert!(req.starts_with("POST /v1/chat/completions "), "{req}");
    assert!(req.lines().any(|l| l.eq_ignore_ascii_case("authorization: Bearer sk-ok-0001")), "{req}");
    let body: serde_json::Value = serde_json::from_str(&req[req.find("\r\n\r\n").unwrap() + 4..]).unwrap();
    assert_eq!(body["model"], "gpt-4-0613");
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "fix this");
}

#[test]
fn rate_limit_is_retried() {
    let stub = serve(vec![(429, "{}".into()), (200, chat_body("ok", 1, 1))]);
    let b = backend(&stub.url, "ZL_TEST_KEY_429", "sk-429");
    assert_eq!(b.send(&model(), &ctx().to_vec()).unwrap().choices, ["ok"]);
    assert_eq!(stub.requests.lock().unwrap().len(), 2);

    let stub = serve(vec![(429, "{}".into()); 3]);
    let b = backend(&stub.url, "ZL_TEST_KEY_429B", "sk-429b");
    assert!(matches!(b.send(&model(), &ctx().to_vec()), Err(GatewayError::RateLimited { attempts: 3 })));
}

#[test]
fn server_errors_exhaust_and_redact() {
    capture_logs();
    let key = "sk-secret-5xx-777";
    let echo = format!("upstream rejected key {key}");
    let stub = serve(vec![(502, echo.clone()), (503, echo.clone()), (500, echo)]);
    let b = backend(&stub.url, "ZL_TEST_KEY_5XX", key);
    let err = b.send(&model(), &ctx().to_vec()).unwrap_err();
    assert_eq!(stub.requests.lock().unwrap().len(), 3);
    match &err {
        GatewayError::Http { status: 500, body } => {
            assert!(body.contains("<redacted>"));
            assert!(!body.contains(key));
        }
        e => panic!("unexpected {e:?}"),
    }
    assert!(!err.to_string().contains(key));
    assert!(!format!("{err:?}").contains(key));
    let logs = RECORDS.lock().unwrap();
    assert!(logs.iter().any(|l| l.contains("attempt 1 failed")));
    assert!(logs.iter().all(|l| !l.contains(key)));
}

#[test]
fn auth_failure_is_not_retried() {
    let stub = serve(vec![(401, "bad key".into()), (200, chat_body("never", 1, 1))]);
    let b = backend(&stub.url, "ZL_TEST_KEY_401", "sk-401");
    assert!(matches!(b.send(&model(), &ctx().to_vec()), Err(GatewayError::AuthFailure { status: 401 })));
    assert_eq!(stub.requests.lock().unwrap().len(), 1);
}

#[test]
fn missing_key_variable() {
    let s = HttpSettings { api_key_env: "ZL_TEST_KEY_NEVER_SET".into(), ..HttpSettings::default() };
    match HttpBackend::new(s) {
        Err(GatewayError::MissingApiKey(v)) => assert_eq!(v, "ZL_TEST_KEY_NEVER_SET"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn debug_output_hides_key() {
    let b = backend("http://127.0.0.1:9/v1", "ZL_TEST_KEY_DBG", "sk-debug-4242");
    let d = format!("{b:?}");
    assert!(d.contains("<redacted>") && !d.contains("sk-debug-4242"));
}

#[test]
fn key_stays_out_of_transcripts_and_logs() {
    capture_logs();
    let key = "sk-transcript-9090";
    let stub = serve(vec![(500, "oops".into()), (200, chat_body("```c\nint main(void) { return 0; }\n```", 20, 9))]);
    let b = backend(&stub.url, "ZL_TEST_KEY_GEN", key);
    let t = generate_driver(&b, &model(), "C", "", "int f(int);").unwrap();
    assert_eq!(t.turns.len(), 1);
    assert_eq!(t.code(), "int main(void) { return 0; }\n");
    let json = serde_json::to_string(&t).unwrap();
    assert!(!json.contains(key));
    assert!(RECORDS.lock().unwrap().iter().all(|l| !l.contains(key)));
    // the key did go over the wire
    assert!(stub.requests.lock().unwrap().iter().all(|r| r.contains(key)));
}
