use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::os::unix::net::UnixStream;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use tempo_core::concept::OutputId;
use tempo_core::error::ScorerError;
use tempo_core::scorer::{
    validate_row, LogitFile, MarkovTableScorer, RemoteOptions, RemoteScorer, ScoreRequest,
    ScoreResponse, Scorer, VocabResponse,
};

const VOCAB: usize = 5;

fn backend() -> MarkovTableScorer {
    MarkovTableScorer::random(VOCAB, 2.0, 41)
}

fn answer(backend: &MarkovTableScorer, line: &str) -> String {
    let req: ScoreRequest = serde_json::from_str(line).unwrap();
    let prefixes: Vec<&[OutputId]> = req.prefixes.iter().map(Vec::as_slice).collect();
    let resp = ScoreResponse {
        id: req.id,
        logprobs: backend.score(&prefixes).unwrap(),
    };
    serde_json::to_string(&resp).unwrap()
}

/// Answers every request line from `backend`, recording request sizes.
fn bridge(reader: impl Read, mut writer: impl Write, sizes: Arc<Mutex<Vec<usize>>>) {
    let backend = backend();
    for line in BufReader::new(reader).lines() {
        let Ok(line) = line else { break };
        let req: ScoreRequest = serde_json::from_str(&line).unwrap();
        sizes.lock().unwrap().push(req.prefixes.len());
        let reply = format!("{}\n", answer(&backend, &line));
        if writer.write_all(reply.as_bytes()).is_err() {
            break;
        }
    }
}

fn tcp_scorer(options: RemoteOptions) -> (RemoteScorer, Arc<Mutex<Vec<usize>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let sizes = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&sizes);
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        stream.set_nodelay(true).unwrap();
        bridge(stream.try_clone().unwrap(), stream, seen);
    });
    let scorer = RemoteScorer::connect(&format!("tcp://{addr}"), options).unwrap();
    (scorer, sizes)
}

fn pipe_scorer() -> RemoteScorer {
    let (client, server) = UnixStream::pair().unwrap();
    thread::spawn(move || bridge(server.try_clone().unwrap(), server, Arc::default()));
    RemoteScorer::from_stream(
        client.try_clone().unwrap(),
        client,
        Some(VOCAB),
        RemoteOptions::default(),
    )
    .unwrap()
}

fn http_scorer() -> RemoteScorer {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let addr = server.server_addr().to_ip().unwrap();
    thread::spawn(move || {
        let backend = backend();
        for mut request in server.incoming_requests() {
            let body = match request.url() {
                "/vocab" => serde_json::to_string(&VocabResponse {
                    vocab_size: VOCAB,
                    concept_table: Some(serde_json::json!({"a": [0], "b": [1, 2]})),
                })
                .unwrap(),
                _ => {
                    let mut text = String::new();
                    request.as_reader().read_to_string(&mut text).unwrap();
                    answer(&backend, &text)
                }
            };
            let _ = request.respond(tiny_http::Response::from_string(body));
        }
    });
    RemoteScorer::connect(&format!("http://{addr}"), RemoteOptions::default()).unwrap()
}

fn logit_scorer() -> impl Scorer {
    let chain = backend();
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|t| chain.score(&[&vec![(t % VOCAB) as OutputId]]).unwrap().remove(0))
        .collect();
    LogitFile::new(VOCAB, [("s".to_string(), rows)])
        .unwrap()
        .scorer("s")
        .unwrap()
}

fn probe_prefixes() -> Vec<Vec<OutputId>> {
    let mut out = vec![Vec::new()];
    for len in 1..=4usize {
        for i in 0..VOCAB {
            out.push((0..len).map(|j| ((i + 3 * j) % VOCAB) as OutputId).collect());
        }
    }
    out
}

/// Normalization, determinism and batch/sequential agreement.
fn conformance(name: &str, scorer: &dyn Scorer) {
    assert_eq!(scorer.vocab_size(), VOCAB, "{name}");
    let owned = probe_prefixes();
    let prefixes: Vec<&[OutputId]> = owned.iter().map(Vec::as_slice).collect();
    let batch = scorer.score(&prefixes).unwrap();
    assert_eq!(batch.len(), prefixes.len(), "{name}");
    for (i, row) in batch.iter().enumerate() {
        validate_row(row, i, VOCAB).unwrap();
    }
    assert_eq!(scorer.score(&prefixes).unwrap(), batch, "{name} is not deterministic");
    for (p, row) in prefixes.iter().zip(&batch) {
        assert_eq!(&scorer.score(&[p]).unwrap()[0], row, "{name} batch differs on {p:?}");
    }
    assert!(scorer.score(&[]).unwrap().is_empty(), "{name}");
}

#[test]
fn local_scorers_conform() {
    conformance("markov", &backend());
    conformance("logits", &logit_scorer());
}

#[test]
fn remote_scorers_conform() {
    let (tcp, _) = tcp_scorer(RemoteOptions::default());
    conformance("tcp", &tcp);
    conformance("pipe", &pipe_scorer());
    let http = http_scorer();
    conformance("http", &http);
    let table = http.concept_table().unwrap().unwrap();
    assert_eq!(table.concepts(), ["a", "b"]);
}

#[test]
fn remote_rows_equal_the_backend() {
    let (tcp, _) = tcp_scorer(RemoteOptions::default());
    let owned = probe_prefixes();
    let prefixes: Vec<&[OutputId]> = owned.iter().map(Vec::as_slice).collect();
    assert_eq!(tcp.score(&prefixes).unwrap(), backend().score(&prefixes).unwrap());
    assert!(tcp.is_exclusive());
}

#[test]
fn large_batches_are_chunked() {
    let (tcp, sizes) = tcp_scorer(RemoteOptions::default());
    let owned: Vec<Vec<OutputId>> = (0..150)
        .map(|i| vec![(i % VOCAB) as OutputId, (i / VOCAB % VOCAB) as OutputId])
        .collect();
    let prefixes: Vec<&[OutputId]> = owned.iter().map(Vec::as_slice).collect();
    let rows = tcp.score(&prefixes).unwrap();
    // the first request is the vocabulary probe
    assert_eq!(*sizes.lock().unwrap(), vec![1, 64, 64, 22]);
    for (p, row) in prefixes.iter().zip(&rows) {
        assert_eq!(&tcp.score(&[p]).unwrap()[0], row);
    }
}

/// Client on one end of a socket pair, with `server` scripting the other.
fn scripted(
    options: RemoteOptions,
    server: impl FnOnce(BufReader<UnixStream>, UnixStream) + Send + 'static,
) -> RemoteScorer {
    let (client, peer) = UnixStream::pair().unwrap();
    thread::spawn(move || server(BufReader::new(peer.try_clone().unwrap()), peer));
    RemoteScorer::from_stream(client.try_clone().unwrap(), client, Some(3), options).unwrap()
}

fn read_line(reader: &mut impl BufRead) -> String {
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    line
}

#[test]
fn golden_session_bytes() {
    let session: Vec<String> = include_str!("../fixtures/remote_session.ndjson")
        .lines()
        .map(String::from)
        .collect();
    let script = session.clone();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    let scorer = scripted(RemoteOptions::default(), move |mut reader, mut writer| {
        for pair in script.chunks(2) {
            log.lock().unwrap().push(read_line(&mut reader));
            writeln!(writer, "{}", pair[1]).unwrap();
        }
    });
    let ln2 = -(2f64.ln());
    let ninf = f64::NEG_INFINITY;
    assert_eq!(scorer.score(&[&[]]).unwrap(), vec![vec![ln2, ln2, ninf]]);
    assert_eq!(
        scorer.score(&[&[0], &[2, 1]]).unwrap(),
        vec![vec![0.0, ninf, ninf], vec![ninf, ln2, ln2]]
    );
    let seen = seen.lock().unwrap();
    assert_eq!(*seen, vec![format!("{}\n", session[0]), format!("{}\n", session[2])]);
}

#[test]
fn silent_scorer_times_out_and_late_answers_are_skipped() {
    let options = RemoteOptions {
        timeout: Duration::from_millis(150),
        ..RemoteOptions::default()
    };
    let scorer = scripted(options, |mut reader, mut writer| {
        read_line(&mut reader);
        thread::sleep(Duration::from_millis(400));
        writeln!(writer, r#"{{"id":1,"logprobs":[[0.0,null,null]]}}"#).unwrap();
        read_line(&mut reader);
        writeln!(writer, r#"{{"id":2,"logprobs":[[null,0.0,null]]}}"#).unwrap();
        read_line(&mut reader);
    });
    assert!(matches!(scorer.score(&[&[]]), Err(ScorerError::Timeout)));
    thread::sleep(Duration::from_millis(400));
    let ninf = f64::NEG_INFINITY;
    assert_eq!(scorer.score(&[&[1]]).unwrap(), vec![vec![ninf, 0.0, ninf]]);
}

fn one_reply(reply: &'static str) -> Result<Vec<Vec<f64>>, ScorerError> {
    let scorer = scripted(RemoteOptions::default(), move |mut reader, mut writer| {
        read_line(&mut reader);
        writeln!(writer, "{reply}").unwrap();
        read_line(&mut reader);
    });
    scorer.score(&[&[]])
}

#[test]
fn bad_replies_are_typed_errors() {
    let protocol = [
        "{not json",
        r#"{"id":1,"error":"model crashed"}"#,
        r#"{"id":9,"logprobs":[[0.0,null,null]]}"#,
        r#"{"id":1,"logprobs":[]}"#,
        r#"{"id":1,"logprobs":[[0.0,null]]}"#,
    ];
    for reply in protocol {
        assert!(matches!(one_reply(reply), Err(ScorerError::Protocol(_))), "{reply}");
    }
    assert!(matches!(
        one_reply(r#"{"id":1,"logprobs":[[0.0,0.0,null]]}"#),
        Err(ScorerError::Normalization { row: 0, .. })
    ));
}

#[test]
fn closed_connection_is_a_protocol_error() {
    let scorer = scripted(RemoteOptions::default(), |mut reader, _writer| {
        read_line(&mut reader);
    });
    assert!(matches!(scorer.score(&[&[]]), Err(ScorerError::Protocol(_))));
}

#[test]
fn local_scorers_reject_bad_input() {
    assert!(matches!(
        backend().score(&[&[VOCAB as OutputId]]),
        Err(ScorerError::OutOfRange { .. })
    ));
    let logits = logit_scorer();
    assert!(matches!(
        logits.score(&[&[0; 6]]),
        Err(ScorerError::StepOverflow { step: 6, available: 6 })
    ));
    assert!(matches!(
        MarkovTableScorer::new(vec![0.5, 0.6], vec![vec![0.5, 0.5]; 2]),
        Err(ScorerError::Invalid(_) | ScorerError::Normalization { .. })
    ));
}

#[test]
fn file_formats_round_trip() {
    let chain = backend();
    let back = MarkovTableScorer::from_json_str(&chain.to_json_string()).unwrap();
    assert_eq!(back.initial(), chain.initial());
    assert_eq!(back.transition(), chain.transition());
    let ninf = f64::NEG_INFINITY;
    let file = LogitFile::new(2, [("x".to_string(), vec![vec![0.0, ninf], vec![ninf, 0.0]])]).unwrap();
    let text = file.to_json_string();
    assert_eq!(text, r#"{"vocab":2,"sequences":{"x":[[0.0,null],[null,0.0]]}}"#);
    assert_eq!(LogitFile::from_json_str(&text).unwrap(), file);
}
