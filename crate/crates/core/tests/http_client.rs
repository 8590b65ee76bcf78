use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use copa::features::find_feature;
use copa::instances::{parse_instance, ProblemKind};
use copa::llmio::{
    build_feature_prompt, query_feature, value_schema_json, FeatureValue, OpenAiClient, Provider,
    ProviderError, QueryLimits, QueryOutcome,
};
use copa::render::{render_standard, Representation};

struct Request {
    path: String,
    auth: Option<String>,
    body: serde_json::Value,
}

/// Serves the scripted `(status, body)` replies in order, one per connection.
fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Request>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let path = line
                .split_whitespace()
                .nth(1)
                .unwrap_or_default()
                .to_owned();
            let (mut len, mut auth) = (0, None);
            loop {
                line.clear();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                let (k, v) = line.split_once(':').unwrap();
                match k.to_ascii_lowercase().as_str() {
                    "content-length" => len = v.trim().parse().unwrap(),
                    "authorization" => auth = Some(v.trim().to_owned()),
                    _ => {}
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            tx.send(Request {
                path,
                auth,
                body: serde_json::from_slice(&buf).unwrap(),
            })
            .unwrap();
            let mut stream = stream;
            write!(stream, "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len())
                .unwrap();
        }
    });
    (url, rx)
}

fn chat_reply(content: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": content }, "finish_reason": "stop" }] }).to_string()
}

#[test]
fn completion_request_and_reply() {
    let (url, rx) = serve(vec![(200, chat_reply(r#"{"value": 3}"#))]);
    let client = OpenAiClient::new(url, "llama", Some("secret".into()), Duration::from_secs(5));
    let inst = parse_instance(ProblemKind::Gcp, "g", "p edge 3 2\ne 1 2\ne 2 3\n").unwrap();
    let spec = find_feature(ProblemKind::Gcp, "feat_nodes").unwrap();
    let prompt = build_feature_prompt(ProblemKind::Gcp, spec, &render_standard(&inst));
    let res = query_feature(
        &client,
        &prompt,
        &value_schema_json(spec.value_type),
        &QueryLimits::default(),
    );
    assert_eq!(res.outcome, QueryOutcome::Value);
    assert_eq!(res.value, Some(FeatureValue::Integer(3)));

    let req = rx.recv().unwrap();
    assert_eq!(req.path, "/v1/chat/completions");
    assert_eq!(req.auth.as_deref(), Some("Bearer secret"));
    assert_eq!(req.body["model"], "llama");
    assert_eq!(req.body["temperature"], 0);
    assert_eq!(req.body["messages"][0]["content"], prompt.text.as_str());
    assert_eq!(
        req.body["response_format"]["json_schema"]["schema"],
        value_schema_json(spec.value_type)
    );
}

#[test]
fn server_errors_are_retried() {
    let (url, rx) = serve(vec![
        (503, "{}".into()),
        (200, chat_reply(r#"{"value": null}"#)),
    ]);
    let client = OpenAiClient::new(url, "m", None, Duration::from_secs(5));
    let inst = parse_instance(ProblemKind::Bpp, "b", "2 10\n3\n4\n").unwrap();
    let spec = find_feature(ProblemKind::Bpp, "feat_capacity").unwrap();
    let prompt = build_feature_prompt(ProblemKind::Bpp, spec, &render_standard(&inst));
    let limits = QueryLimits {
        backoff_initial_ms: 1,
        ..QueryLimits::default()
    };
    let res = query_feature(
        &client,
        &prompt,
        &value_schema_json(spec.value_type),
        &limits,
    );
    assert_eq!((res.outcome, res.attempts), (QueryOutcome::Null, 2));
    assert!(rx.recv().unwrap().auth.is_none());
}

#[test]
fn hidden_states_endpoint() {
    let reply =
        serde_json::json!({ "tokens": 2, "dim": 3, "data": [0.5, 1.0, -1.0, 2.0, 0.0, 0.25] })
            .to_string();
    let (url, rx) = serve(vec![
        (200, reply),
        (200, r#"{"tokens": 2, "dim": 3, "data": [1.0]}"#.into()),
    ]);
    let client = OpenAiClient::new(url, "m", None, Duration::from_secs(5));
    let inst = parse_instance(ProblemKind::Kp, "k", "1 5\n3 2\n").unwrap();
    let rendering = render_standard(&inst);
    let m = client.hidden_states(&rendering).unwrap();
    assert_eq!(
        (m.tokens(), m.dim(), m.representation()),
        (2, 3, Representation::Standard)
    );
    assert_eq!(m.row(1), &[2.0, 0.0, 0.25]);
    let req = rx.recv().unwrap();
    assert_eq!(req.path, "/v1/hidden_states");
    assert_eq!(req.body["prompt"], rendering.text.as_str());
    assert!(matches!(
        client.hidden_states(&rendering),
        Err(ProviderError::BadReply(_))
    ));
}

#[test]
fn unreachable_server_is_a_transport_failure() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let client = OpenAiClient::new(
        format!("http://127.0.0.1:{port}/v1"),
        "m",
        None,
        Duration::from_secs(2),
    );
    let inst = parse_instance(ProblemKind::Kp, "k", "1 5\n3 2\n").unwrap();
    let spec = find_feature(ProblemKind::Kp, "feat_capacity").unwrap();
    let prompt = build_feature_prompt(ProblemKind::Kp, spec, &render_standard(&inst));
    let limits = QueryLimits {
        retries: 1,
        backoff_initial_ms: 1,
        ..QueryLimits::default()
    };
    let res = query_feature(
        &client,
        &prompt,
        &value_schema_json(spec.value_type),
        &limits,
    );
    assert!(
        matches!(res.outcome, QueryOutcome::TransportFailure(_)),
        "{:?}",
        res.outcome
    );
    assert_eq!(res.attempts, 2);
}
