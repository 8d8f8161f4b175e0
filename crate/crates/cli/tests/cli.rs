use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn morai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morai")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = morai(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus() -> String {
    root().join("corpus/toy").to_string_lossy().into_owned()
}

fn train_markov(dir: &Path) -> PathBuf {
    let out = dir.join("markov");
    ok(&["train", "--corpus", &corpus(), "--agent", "markov", "--cap", "5", "--out", path(&out)]);
    out
}

fn train_cnn(dir: &Path) -> PathBuf {
    let out = dir.join("cnn");
    let stdout = ok(&[
        "train",
        "--corpus",
        &corpus(),
        "--epochs",
        "2",
        "--steps-per-epoch",
        "2",
        "--cap",
        "4",
        "--out",
        path(&out),
    ]);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("epoch ")).count(), 2);
    out
}

#[test]
fn train_then_propose() {
    let dir = tempfile::tempdir().unwrap();
    let level = root().join("corpus/toy/toy_1.txt");

    let markov = train_markov(dir.path());
    assert!(markov.join("agent.json").exists());
    let text = ok(&["propose", "--checkpoint", path(&markov), "--level", path(&level), "--focus", "20"]);
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty() && lines.len() <= 5, "{text}");

    let cnn = train_cnn(dir.path());
    let text = ok(&["propose", "--checkpoint", path(&cnn), "--level", path(&level), "--focus", "20", "--json"]);
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["x"].is_u64() && v["activation"].as_f64().unwrap() > 0.5);
    }

    let missing =
        morai(&["propose", "--checkpoint", path(&dir.path().join("nope")), "--level", path(&level), "--focus", "0"]);
    assert!(!missing.status.success());
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let markov = train_markov(dir.path());
    let cnn = train_cnn(dir.path());
    let reports = dir.path().join("reports");
    let persona = root().join("personas/flat-ground-builder.json");
    for seed in ["0", "1"] {
        for (name, ckpt) in [("markov", &markov), ("cnn", &cnn)] {
            let out = reports.join(format!("{name}-{seed}.json"));
            ok(&[
                "simulate",
                "--persona",
                path(&persona),
                "--turns",
                "3",
                "--seed",
                seed,
                "--agent-checkpoint",
                path(ckpt),
                "--out",
                path(&out),
            ]);
            let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
            assert_eq!(report["agent"], name);
            assert_eq!(report["report"]["turns"].as_array().unwrap().len(), 3);
            let log = std::fs::read_to_string(out.with_extension("jsonl")).unwrap();
            assert!(log.lines().next().unwrap().contains("session_created"));
            assert!(log.lines().last().unwrap().contains("session_closed"));
        }
    }

    let tables = dir.path().join("tables.json");
    let text = ok(&["analyze", "--logs", path(&reports), "--out", path(&tables)]);
    assert!(text.contains("fewer_deletions") && text.contains("would_reuse"), "{text}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&tables).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row["first_a"].as_u64().unwrap() + row["first_b"].as_u64().unwrap(), 2);
    }

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert!(!morai(&["analyze", "--logs", path(&empty), "--out", path(&tables)]).status.success());
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn request(addr: &str, method: &str, uri: &str, body: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "{method} {uri} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    let status = response.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = response.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

#[test]
fn serve_uses_the_sessions_dir_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let sessions = dir.path().join("sessions");
    let child = Command::new(env!("CARGO_BIN_EXE_morai"))
        .args(["serve", "--port", "0", "--agent", "markov", "--corpus", &corpus(), "--cap", "4"])
        .env("MORAI_SESSIONS_DIR", &sessions)
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut server = Server(child);
    let mut line = String::new();
    BufReader::new(server.0.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap().to_string();

    let (status, body) = request(&addr, "GET", "/version", "");
    assert_eq!(status, 200);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["protocol_version"], 1);

    let (status, body) = request(&addr, "POST", "/session", r#"{"config":{"seed":1},"session_id":"cli-test"}"#);
    assert_eq!(status, 201, "{body}");
    let (status, body) = request(&addr, "POST", "/session/cli-test/end-turn", r#"{"focus_x":30}"#);
    assert_eq!(status, 200, "{body}");
    let additions = serde_json::from_str::<Value>(&body).unwrap()["additions"].as_array().unwrap().len();
    assert!((1..=4).contains(&additions));
    let (status, _) = request(&addr, "POST", "/session/cli-test/close", r#"{"reuse_ranking":-1}"#);
    assert_eq!(status, 200);
    let log = std::fs::read_to_string(sessions.join("cli-test.jsonl")).unwrap();
    assert!(log.contains("episode_reward"));
}

#[test]
fn markov_service_needs_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = morai(&["serve", "--port", "0", "--agent", "markov", "--sessions-dir", path(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Markov"));
}
