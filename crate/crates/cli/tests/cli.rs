use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use caresim::{Policy, QTable, TrainingLog};

fn caresim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caresim"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CARESIM_API_KEY")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = caresim(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMOKE: &[&str] = &["train", "--epochs", "50", "--episodes", "30", "--seed", "7"];

fn train_smoke(dir: &Path, out: &str, extra: &[&str]) {
    let mut args = SMOKE.to_vec();
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", out]);
    let stdout = ok(&args, dir);
    assert!(stdout.contains("final snapshot mean return"));
}

#[test]
fn smoke_train_artifacts_parse() {
    let dir = tempfile::tempdir().unwrap();
    train_smoke(dir.path(), "run", &["--schedule", "decay"]);
    let run = dir.path().join("run");

    QTable::load(&run.join("qtable.txt")).unwrap();
    Policy::load(&run.join("policy.txt")).unwrap();
    let log = TrainingLog::load(&run.join("train_log.csv")).unwrap();
    assert_eq!(log.epochs.len(), 50);
    assert_eq!(log.final_policies.len(), 100);

    let curve = fs::read_to_string(run.join("learning_curve.csv")).unwrap();
    assert_eq!(curve.lines().filter(|l| l.contains(",decaying-epsilon,")).count(), 50);
    assert_eq!(curve.lines().filter(|l| l.contains(",random,")).count(), 50);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["job"]["command"], "train");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["job"]["config"]["schedule"]["kind"], "exponential_decay");
}

#[test]
fn train_and_simulate_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a", "b"] {
        train_smoke(d, name, &[]);
        ok(
            &[
                "simulate",
                "--policy",
                &format!("{name}/policy.txt"),
                "--seed",
                "11",
                "--noise",
                "0.2",
                "--use-perceived",
                "--out",
                &format!("{name}/sim"),
            ],
            d,
        );
    }
    let read = |p: &str| fs::read(d.join(p)).unwrap();
    assert_eq!(read("a/qtable.txt"), read("b/qtable.txt"));
    assert_eq!(read("a/train_log.csv"), read("b/train_log.csv"));
    assert_eq!(read("a/sim/transcript.txt"), read("b/sim/transcript.txt"));

    let transcript = String::from_utf8(read("a/sim/transcript.txt")).unwrap();
    assert!(transcript.contains("TrueState: ") && transcript.contains("Perceived: "));
}

#[test]
fn replaying_a_manifest_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    train_smoke(d, "t", &[]);
    ok(&["simulate", "--policy", "t/policy.txt", "--seed", "3", "--out", "s"], d);

    ok(&["replay", "--manifest", "t/manifest.json", "--out", "t2"], d);
    ok(&["replay", "--manifest", "s/manifest.json", "--out", "s2"], d);
    let read = |p: &str| fs::read(d.join(p)).unwrap();
    assert_eq!(read("t/qtable.txt"), read("t2/qtable.txt"));
    assert_eq!(read("s/transcript.txt"), read("s2/transcript.txt"));
}

#[test]
fn evaluate_modes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    train_smoke(d, "t", &[]);

    let out = ok(&["evaluate", "--policy", "t/policy.txt", "--rollouts", "40", "--out", "e1"], d);
    assert!(out.contains("over 40 rollouts"));
    let out = ok(&["evaluate", "--baseline", "random", "--rollouts", "40", "--out", "e2"], d);
    assert!(out.starts_with("baseline random"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("e2/report.json")).unwrap()).unwrap();
    assert_eq!(report["num_rollouts"], 40);

    let out = ok(
        &["evaluate", "--select-final", "--log", "t/train_log.csv", "--rollouts", "200", "--out", "e3"],
        d,
    );
    let chosen = out.lines().last().unwrap().strip_prefix("final policy: ").unwrap();
    let policy = Policy::load(&d.join("e3/final_policy.txt")).unwrap();
    assert_eq!(policy.id(), chosen);
}

#[test]
fn http_backend_without_credential_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("p.txt"), Policy::uniform(caresim::AssistAction::VerbalSupportive).to_text()).unwrap();
    let out = caresim(&["simulate", "--policy", "p.txt", "--backend", "http", "--out", "h"], d);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("CARESIM_API_KEY"), "{err}");
    assert!(!err.contains("panicked"));
    assert!(!d.join("h").exists());
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(!caresim(&["evaluate", "--policy", "missing.txt"], d).status.success());
    fs::write(d.join("corrupt.txt"), "0 [0,0,0,0] a9 Nonsense\n").unwrap();
    assert!(!caresim(&["evaluate", "--policy", "corrupt.txt"], d).status.success());
    assert!(!caresim(&["train", "--epsilon", "1.5", "--epochs", "1"], d).status.success());
    fs::write(d.join("scenario.json"), "{\"name\": \"x\"}").unwrap();
    assert!(!caresim(&["train", "--scenario", "scenario.json", "--epochs", "1"], d).status.success());
}

#[test]
fn defaults_round_trip_through_train() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["defaults", "--out", "cfg"], d);
    train_smoke(
        d,
        "with_files",
        &["--scenario", "cfg/scenario.json", "--model", "cfg/model.json", "--weights", "cfg/weights.json"],
    );
    train_smoke(d, "builtin", &[]);
    let read = |p: &str| fs::read(d.join(p)).unwrap();
    assert_eq!(read("with_files/qtable.txt"), read("builtin/qtable.txt"));
    let http: caresim::text::HttpConfig =
        serde_json::from_str(&fs::read_to_string(d.join("cfg/http.json")).unwrap()).unwrap();
    assert_eq!(http.api_key_env, "CARESIM_API_KEY");
}
