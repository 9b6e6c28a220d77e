mod common;

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use common::*;
use lola_core::engine::{Engine, EngineOptions};
use lola_core::io::{read_event_line, row_to_json, to_json};
use tempfile::TempDir;

const ONCE: &str = "input bool s\noutput bool once_s = once_s[-1, false] || s\n";
const ALARM: &str = "input bool alarm\ninput bool allclear\ninput bool shutdown\n\
                     output bool prop = alarm -> (eventually(0, 10, allclear) || eventually(10, 10, shutdown))\n";

fn lola() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lola"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = lola()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn events_jsonl(trace: &[Vec<lola_core::value::Value>], names: &[&str]) -> String {
    let mut out = String::new();
    for ev in trace {
        let obj: serde_json::Map<_, _> = names
            .iter()
            .zip(ev)
            .map(|(n, v)| (n.to_string(), to_json(v)))
            .collect();
        out.push_str(&serde_json::Value::Object(obj).to_string());
        out.push('\n');
    }
    out
}

#[test]
fn run_reproduces_the_once_table() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "once.lola", ONCE);
    // The last line has no newline.
    let o = run(
        &["run", s(&spec)],
        "{\"s\": false}\n{\"s\": true}\n{\"s\": false}",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "{\"instant\":0,\"once_s\":false}\n{\"instant\":1,\"once_s\":true}\n{\"instant\":2,\"once_s\":true}\n"
    );
}

#[test]
fn input_and_output_files() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "once.lola", ONCE);
    let input = write(&dir, "trace.jsonl", "{\"s\": true}\n\n{\"s\": false}\n");
    let out = dir.path().join("rows.jsonl");
    let o = run(
        &["run", s(&spec), "--input", s(&input), "--output", s(&out)],
        "",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2);
}

#[test]
fn analyze_reports_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let once = write(&dir, "once.lola", ONCE);
    let o = run(&["analyze", s(&once)], "");
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for needle in [
        "once_s -[-1]-> once_s",
        "once_s -[0]-> s",
        "minBackRef: -1",
        "maxLatency: 0",
        "efficiently monitorable: true",
    ] {
        assert!(text.contains(needle), "{needle} in {text}");
    }
    let o = run(&["analyze", "--dot", s(&once)], "");
    assert!(stdout(&o).starts_with("digraph"));

    let zero = write(
        &dir,
        "zero.lola",
        "input int x\noutput int a = b[1, 0] + x\noutput int b = a[-1, 0]\n",
    );
    let o = run(&["analyze", s(&zero)], "");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("a -[1]-> b"), "{}", stderr(&o));
    assert_eq!(run(&["run", s(&zero)], "").status.code(), Some(2));

    let pos = write(
        &dir,
        "pos.lola",
        "input int x\noutput int a = a[1, 0] + x\n",
    );
    let o = run(&["analyze", s(&pos)], "");
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("positive cycle: a -[1]-> a"));
    assert_eq!(run(&["run", s(&pos)], "").status.code(), Some(3));
    // The reference evaluator has no such restriction.
    let o = run(&["oracle-run", s(&pos)], "{\"x\": 1}\n{\"x\": 2}\n");
    assert_eq!(
        stdout(&o),
        "{\"instant\":0,\"a\":3}\n{\"instant\":1,\"a\":2}\n"
    );
}

#[test]
fn errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let once = write(&dir, "once.lola", ONCE);
    let o = run(&["run", s(&once)], "{\"s\": true}\n{\"s\": 1}\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    // Rows resolved before the bad line were already written.
    assert_eq!(stdout(&o), "{\"instant\":0,\"once_s\":true}\n");

    let bad = write(
        &dir,
        "bad.lola",
        "input bool s\noutput bool o = s[-1, false\n",
    );
    let o = run(&["analyze", s(&bad)], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.lola:"), "{}", stderr(&o));

    let ill = write(&dir, "ill.lola", "input bool s\noutput int o = s + 1\n");
    assert_eq!(run(&["expand", s(&ill)], "").status.code(), Some(1));
    assert_eq!(
        run(&["--lib", "nope", "expand", s(&once)], "")
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["expand", s(&dir.path().join("missing.lola"))], "")
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["frobnicate"], "").status.code(), Some(1));
}

#[test]
fn libraries_and_expansion() {
    let dir = TempDir::new().unwrap();
    let alarm = write(&dir, "alarm.lola", ALARM);
    assert_eq!(run(&["expand", s(&alarm)], "").status.code(), Some(1));
    let o = run(&["--lib", "mtl", "expand", s(&alarm)], "");
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("shutdown[10, false]"));
    // The flat output is a valid specification with the same meaning.
    let flat = write(&dir, "flat.lola", &stdout(&o));
    assert_eq!(stdout(&run(&["expand", s(&flat)], "")), stdout(&o));

    let lib = write(
        &dir,
        "mine.lola",
        "define bool twice(stream bool p) = p && p[-1, true]\n",
    );
    let user = write(
        &dir,
        "user.lola",
        "input bool s\noutput bool o = twice(s)\n",
    );
    let o = run(
        &["run", "--lib", s(&lib), s(&user)],
        "{\"s\": true}\n{\"s\": false}\n",
    );
    assert!(
        stdout(&o).contains("\"o\":true") && stdout(&o).contains("\"o\":false"),
        "{}",
        stderr(&o)
    );

    let deep = write(
        &dir,
        "deep.lola",
        "input bool p\noutput bool o = mt_eventually(30, p)\n",
    );
    assert!(run(&["--lib", "mtltl", "expand", s(&deep)], "")
        .status
        .success());
    let o = run(
        &["--lib", "mtltl", "--max-depth", "5", "expand", s(&deep)],
        "",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("while expanding"), "{}", stderr(&o));
}

#[test]
fn run_and_oracle_run_agree_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    for seed in 0..40 {
        let (_, src) = random_monitorable(seed);
        let spec = write(&dir, "r.lola", &src);
        let input = events_jsonl(&random_trace(&mut rng(seed), 32), &["x", "b"]);
        let online = run(&["run", s(&spec)], &input);
        let plain = run(&["run", "--no-simplify", s(&spec)], &input);
        let offline = run(&["oracle-run", s(&spec)], &input);
        assert!(online.status.success(), "{}", stderr(&online));
        assert_eq!(online.stdout, offline.stdout, "{src}");
        assert_eq!(plain.stdout, offline.stdout, "{src}");
    }
}

#[test]
fn bench_writes_stats_json() {
    let dir = TempDir::new().unwrap();
    let once = write(&dir, "once.lola", ONCE);
    let stats = dir.path().join("stats.json");
    let input = "{\"s\": false}\n".repeat(100);
    let o = run(&["bench", s(&once), "--stats-json", s(&stats)], &input);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(
        v,
        serde_json::json!({"events": 100, "rows": 100, "max_retained": 2, "max_lookahead": 0})
    );

    let o = run(&["run", "--stats", s(&once)], &input);
    assert!(stderr(&o).contains("\"max_retained\":2"));
}

#[test]
fn anticipation_is_visible_on_the_command_line() {
    let dir = TempDir::new().unwrap();
    let alarm = write(&dir, "alarm.lola", ALARM);
    let input = "{\"alarm\":true,\"allclear\":true,\"shutdown\":false}\n".repeat(20);
    let lookahead = |extra: &[&str]| {
        let mut args = vec!["--lib", "mtl", "bench", s(&alarm), "--stats-json", "-"];
        args.extend(extra);
        let v: serde_json::Value = serde_json::from_str(&stdout(&run(&args, &input))).unwrap();
        v["max_lookahead"].as_u64().unwrap()
    };
    assert_eq!(lookahead(&[]), 0);
    assert_eq!(lookahead(&["--no-simplify"]), 10);
}

/// Feeds events one at a time through a pipe and checks that each row
/// appears as soon as the engine can resolve it.
#[test]
fn rows_are_flushed_as_they_resolve() {
    let dir = TempDir::new().unwrap();
    let src = "input bool s\noutput bool o = s[2, false] || s\n";
    let path = write(&dir, "ahead.lola", src);
    let spec = lola_core::compile_with_bundles::<&str>(src, &[]).unwrap();
    let mut engine = Engine::new(spec.clone(), EngineOptions { simplify: false }).unwrap();

    let mut child = lola()
        .args(["run", "--no-simplify", s(&path)])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut input = child.stdin.take().unwrap();
    let mut output = BufReader::new(child.stdout.take().unwrap());
    for (k, ev) in [false, true, false, false, true].iter().enumerate() {
        let line = format!("{{\"s\": {ev}}}\n");
        input.write_all(line.as_bytes()).unwrap();
        input.flush().unwrap();
        let event = read_event_line(&line, k + 1, &spec).unwrap().unwrap();
        for row in engine.push_values(event).unwrap() {
            let mut got = String::new();
            output.read_line(&mut got).unwrap();
            assert_eq!(got.trim_end(), row_to_json(&row).to_string());
        }
    }
    drop(input);
    let rest: Vec<String> = output.lines().map(Result::unwrap).collect();
    let expected: Vec<String> = engine
        .finish()
        .unwrap()
        .iter()
        .map(|r| row_to_json(r).to_string())
        .collect();
    assert_eq!(rest, expected);
    assert!(child.wait().unwrap().success());
}

#[test]
fn enum_inputs_and_outputs() {
    let dir = TempDir::new().unwrap();
    let src = "data SndrState = Get | Send | WaitForAck\ninput SndrState senderState\n\
               output SndrState last = senderState[-1, Get]\n\
               output bool idle = senderState /= WaitForAck\n\
               output bool prop = senderState == WaitForAck -> yesterday(historically(idle))\n";
    let spec = write(&dir, "sender.lola", src);
    let o = run(
        &["--lib", "ltl_past", "run", s(&spec)],
        "{\"senderState\":\"Send\"}\n{\"senderState\":\"WaitForAck\"}\n{\"senderState\":\"WaitForAck\"}\n",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows[1]["last"], "Send");
    assert_eq!(rows[1]["prop"], true);
    assert_eq!(rows[2]["prop"], false);
    let o = run(
        &["--lib", "ltl_past", "run", s(&spec)],
        "{\"senderState\":\"Idle\"}\n",
    );
    assert_eq!(o.status.code(), Some(1));
}
