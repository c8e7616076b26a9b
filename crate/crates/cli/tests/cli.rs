use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use normcase_core::fixtures::QUITTANCE;
use normcase_core::version_id;

fn normcase() -> Command {
    Command::new(env!("CARGO_BIN_EXE_normcase"))
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn check_prints_version() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(&dir, "q.norm", QUITTANCE);
    let out = normcase().arg("check").arg(&model).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), version_id(QUITTANCE.as_bytes()));
}

#[test]
fn check_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(&dir, "bad.norm", "Fact a.\nAct go Creates nothing-declared.\n");
    let out = normcase().arg("check").arg(&model).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.norm:"), "{err}");
    assert!(err.contains("nothing-declared"), "{err}");
}

#[test]
fn fmt_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(&dir, "q.norm", QUITTANCE);
    let out = normcase().arg("fmt").arg(&model).output().unwrap();
    assert!(out.status.success());
    let pretty = String::from_utf8(out.stdout).unwrap();
    let formatted = write(&dir, "p.norm", &pretty);
    let again = normcase().arg("fmt").arg(&formatted).output().unwrap();
    assert_eq!(String::from_utf8(again.stdout).unwrap(), pretty);
    assert!(normcase().args(["fmt", "--check"]).arg(&formatted).status().unwrap().success());
}

#[test]
fn run_replays_events() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(&dir, "q.norm", QUITTANCE);
    let events = concat!(
        r#"{"kind":"FactSet","instance":{"type":"applicant-income","arg":1000},"value":"true"}"#,
        "\n\n",
        r#"{"kind":"ActExecuted","act":"submit-application","actor":"alice","recipient":"c1","confirmed":false}"#,
        "\n",
    );
    let events = write(&dir, "events.jsonl", events);
    let out = normcase().arg("run").arg(&model).arg(&events).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let snapshot: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(snapshot["duties"][0]["holder"], "alice");

    let out = normcase()
        .args(["run", "--explain", "--statuses"])
        .arg(&model)
        .arg("-")
        .stdin(Stdio::from(std::fs::File::open(&events).unwrap()))
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("alice performed submit-application"), "{text}");
    assert!(text.contains("approve-quittance"), "{text}");

    let bad = write(&dir, "bad.jsonl", "{\"kind\":\"FactSet\"}\n");
    let out = normcase().arg("run").arg(&model).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

fn get(addr: &str, path: &str, token: &str) -> Option<String> {
    let mut stream = TcpStream::connect(addr).ok()?;
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: x\r\nAuthorization: Bearer {token}\r\nConnection: close\r\n\r\n"
    )
    .ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

#[test]
fn serve_bootstraps_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(&dir, "q.norm", QUITTANCE);
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = normcase()
        .arg("serve")
        .env("NORMCASE_STORE_DIR", dir.path().join("store"))
        .env("NORMCASE_LISTEN", &addr)
        .env("NORMCASE_MODEL", &model)
        .env("NORMCASE_ADMIN_TOKEN", "root")
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let response = loop {
        if let Some(r) = get(&addr, "/models", "root") {
            break r;
        }
        assert!(Instant::now() < deadline, "service did not start");
        std::thread::sleep(Duration::from_millis(100));
    };
    let unauthorized = get(&addr, "/models", "wrong").unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains(&version_id(QUITTANCE.as_bytes())));
    assert!(response.contains("\"active\":true"));
    assert!(unauthorized.starts_with("HTTP/1.1 401"));
}
