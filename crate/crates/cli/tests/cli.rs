use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use babyworld::lang::parse;
use babyworld::levels::{LevelId, Mission, make_mission};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_babyworld"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn outputs_match_golden_files() {
    for (args, file) in [
        (vec!["mission", "--level", "GoToObj", "--seed", "1"], "mission_GoToObj_1.txt"),
        (vec!["mission", "--level", "BossLevel", "--seed", "7"], "mission_BossLevel_7.txt"),
        (vec!["count-language", "--exact"], "count_language.txt"),
        (vec!["bot", "--level", "GoToLocal", "--seed", "2"], "bot_GoToLocal_2.txt"),
    ] {
        let a = run(&args);
        assert!(a.status.success());
        assert_eq!(stdout(&a), golden(file), "{args:?}");
        assert_eq!(stdout(&run(&args)), stdout(&a));
    }
}

#[test]
fn count_language_line() {
    let o = run(&["count-language"]);
    assert_eq!(stdout(&o), "2.4832e19 instructions\n");
}

#[test]
fn boss_mission_text_parses() {
    for seed in 0..5 {
        let o = run(&["mission", "--level", "BossLevel", "--seed", &seed.to_string()]);
        let text = stdout(&o);
        let line = text.lines().find_map(|l| l.strip_prefix("mission: ")).unwrap();
        assert!(parse(line).is_ok(), "{line}");
    }
}

#[test]
fn mission_json_round_trips() {
    let o = run(&["mission", "--level", "PutNextLocal", "--seed", "4", "--json"]);
    let m: Mission = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m, make_mission(LevelId::PutNextLocal, 4).unwrap());
}

#[test]
fn unknown_level_is_a_usage_error() {
    let o = run(&["mission", "--level", "GoToNowhere"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn scripted_play() {
    let m = make_mission(LevelId::GoToRedBall, 3).unwrap();
    let keys: String = m.witness.iter().map(|a| char::from(b'0' + a.code())).collect();
    let n = m.witness.len() as f64;
    let expect = format!("success reward {} steps {}\n", 1.0 - 0.9 * n / m.max_steps as f64, m.witness.len());

    let o = with_stdin(&["play", "--level", "GoToRedBall", "--seed", "3", "--quiet"], &keys);
    assert!(o.status.success());
    assert_eq!(stdout(&o), expect);

    let noisy = format!("zz?{keys}");
    let o = with_stdin(&["play", "--level", "GoToRedBall", "--seed", "3", "--quiet"], &noisy);
    assert_eq!(stdout(&o), expect, "unknown keys leave the state unchanged");

    let o = with_stdin(&["play", "--level", "GoToRedBall", "--seed", "3", "--quiet"], "q");
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "failure reward 0 steps 0\n");

    let o = with_stdin(&["play", "--level", "GoToRedBall", "--seed", "3"], "a");
    assert!(stdout(&o).contains("view:"));
}

#[test]
fn demos_are_deterministic_and_verify() {
    let (a, b) = (tmp("a.demos"), tmp("b.demos"));
    for p in [&a, &b] {
        let o = run(&["gen-demos", "--level", "GoToObj", "--n", "100", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let o = run(&["verify", a.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "all 100 episodes verified\n");

    let text = std::fs::read_to_string(&a).unwrap().replacen("\t1\t", "\t0\t", 1);
    std::fs::write(&b, text).unwrap();
    assert_eq!(run(&["verify", b.to_str().unwrap()]).status.code(), Some(1));
    std::fs::write(&b, "not a demo file\n").unwrap();
    assert_eq!(run(&["verify", b.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn evaluate_bot_agent() {
    let agent = format!("{} agent-bot", env!("CARGO_BIN_EXE_babyworld"));
    let o = run(&["evaluate", "--agent-cmd", &agent, "--level", "PickupLoc", "--n", "25"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "success_rate 1.000\n");

    let o = run(&["gen-demos", "--level", "GoToLocal", "--n", "5", "--agent-cmd", &agent]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().skip(4).all(|l| l.split('\t').nth(3) == Some("agent")));
}

#[test]
fn evaluate_protocol_errors() {
    let o = run(&["evaluate", "--agent-cmd", "sleep 5", "--level", "GoToObj", "--n", "1", "--timeout-ms", "200"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("timed out"));
    let o = run(&["evaluate", "--agent-cmd", "yes 9", "--level", "GoToObj", "--n", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid action code 9"));
}

#[test]
fn estimate_from_csv() {
    let path = tmp("results.csv");
    let mut csv = String::from("k,s,level,run_id\n");
    for i in 0..30 {
        let x = 8.0 + 0.25 * i as f64;
        let s = 100.0 - 2f64.powf(11.0 - x);
        csv.push_str(&format!("{},{s},GoToObj,r{i}\n", 2f64.powf(x)));
    }
    csv.push_str("100,90,Open,a\n");
    std::fs::write(&path, csv).unwrap();
    let args = ["estimate", path.to_str().unwrap(), "--draws", "5000", "--grid", "64"];
    let o = run(&args);
    let text = stdout(&o);
    assert!(text.contains("GoToObj: 30 records"), "{text}");
    assert!(text.contains("credible interval ["));
    assert!(text.contains("Open: 1 records, error: 0 points left after filtering"));
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&run(&args)), text);

    std::fs::write(&path, "k,s\nfoo,bar\n").unwrap();
    assert_eq!(run(&["estimate", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn rl_interval() {
    let o = run(&["rl-ci", "10", "20"]);
    assert_eq!(stdout(&o), "mean 15.0000 interval [-303.2837, 333.2837] half_width 318.2837\n");
    assert_eq!(run(&["rl-ci", "10"]).status.code(), Some(2));
}

#[test]
fn bench_reports_rate() {
    let o = run(&["bench", "--steps", "2000"]);
    assert!(stdout(&o).contains("steps/s"));
}
