//! End-to-end tests of the `riga` binary: exit codes, output files,
//! determinism, and seed precedence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn riga() -> Command {
    Command::new(env!("CARGO_BIN_EXE_riga"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    riga()
        .args(args)
        .current_dir(dir)
        .env_remove("RIGA_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("cmd1.bin"), b"update beacon").unwrap();
        fs::write(dir.path().join("cmd2.bin"), b"rotate keys").unwrap();
        let gateways: Vec<serde_json::Value> = (0..13)
            .map(|i| {
                serde_json::json!({
                    "name": format!("gw{i:02}"),
                    "model": {"type": "fixed", "ms": 90.0 + 20.0 * i as f64},
                    "availability": 1.0
                })
            })
            .collect();
        fs::write(
            dir.path().join("gateways.json"),
            serde_json::to_string_pretty(&gateways).unwrap(),
        )
        .unwrap();
        Self { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn plan_demo_campaign(&self) -> Output {
        run_in(
            self.path(),
            &[
                "plan",
                "--payload", "cmd1.bin", "--counter", "100",
                "--payload", "cmd2.bin", "--counter", "250",
                "--domain-upper", "300",
                "--envelope-seed", "7",
                "--out", "campaign.json",
            ],
        )
    }

    fn write_sim_config(&self, name: &str, extra: serde_json::Value) {
        let mut config = serde_json::json!({
            "master_seed": 42,
            "bots": {"count": 20},
            "campaign": "campaign.json",
            "commands": ["cmd1.bin", "cmd2.bin"],
            "envelope_seed": 7,
            "gateways": "gateways.json",
            "duration_ms": 600000,
            "timeout_ms": 3000,
            "require_all_anchors": true
        });
        for (k, v) in extra.as_object().unwrap() {
            config[k] = v.clone();
        }
        write(self.path(), name, &serde_json::to_string_pretty(&config).unwrap());
    }
}

#[test]
fn plan_writes_campaign_and_prints_anchors() {
    let fx = Fixture::new();
    let out = fx.plan_demo_campaign();
    assert!(out.status.success());
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("100\tQm"));
    assert!(lines[1].starts_with("250\tQm"));

    let first = fs::read(fx.path().join("campaign.json")).unwrap();
    let out2 = fx.plan_demo_campaign();
    assert!(out2.status.success());
    let second = fs::read(fx.path().join("campaign.json")).unwrap();
    assert_eq!(first, second, "replanning is byte-identical");
}

#[test]
fn plan_with_duplicate_counters_writes_nothing() {
    let fx = Fixture::new();
    let out = run_in(
        fx.path(),
        &[
            "plan",
            "--payload", "cmd1.bin", "--counter", "5",
            "--payload", "cmd2.bin", "--counter", "5",
            "--out", "campaign.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!fx.path().join("campaign.json").exists());
}

#[test]
fn planned_raw_payload_matches_independent_hash() {
    let fx = Fixture::new();
    fs::write(fx.path().join("noop.bin"), b"noop").unwrap();
    let out = run_in(
        fx.path(),
        &["plan", "--payload", "noop.bin", "--counter", "10", "--out", "c.json"],
    );
    assert!(out.status.success());
    // sha256("noop") framed as a CIDv0, computed with an external tool
    assert_eq!(
        stdout(&out).trim(),
        "10\tQmepSSEQTFLCpMdqiYFBMy1W7h5ZVs65ypN4tU6Cj1Gmz5"
    );
}

#[test]
fn gen_is_stable_and_shows_the_anchor() {
    let fx = Fixture::new();
    fx.plan_demo_campaign();
    let campaign: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.path().join("campaign.json")).unwrap())
            .unwrap();
    let anchor_cid = campaign["anchors"][0]["cid"].as_str().unwrap().to_string();

    let args = ["gen", "--campaign", "campaign.json", "--from", "98", "--to", "102"];
    let out = run_in(fx.path(), &args);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains(&format!("100\t{anchor_cid}")));
    assert_eq!(stdout(&run_in(fx.path(), &args)), text);
}

#[test]
fn gen_rejects_bad_ranges() {
    let fx = Fixture::new();
    fx.plan_demo_campaign();
    let out = run_in(
        fx.path(),
        &["gen", "--campaign", "campaign.json", "--from", "10", "--to", "5"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(
        fx.path(),
        &["gen", "--campaign", "campaign.json", "--from", "0", "--to", "9999"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sim_reaches_all_anchors_and_is_deterministic() {
    let fx = Fixture::new();
    fx.plan_demo_campaign();
    fx.write_sim_config("sim.json", serde_json::json!({}));

    let out = run_in(
        fx.path(),
        &["sim", "--config", "sim.json", "--out", "r1.json", "--trace", "t.jsonl"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("all_anchors_reached=true"));

    let out2 = run_in(fx.path(), &["sim", "--config", "sim.json", "--out", "r2.json"]);
    assert!(out2.status.success());
    assert_eq!(
        fs::read(fx.path().join("r1.json")).unwrap(),
        fs::read(fx.path().join("r2.json")).unwrap()
    );

    let trace = fs::read_to_string(fx.path().join("t.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    let obj = first.as_object().unwrap();
    for field in ["sim_time_ms", "bot_id", "counter", "gateway", "outcome", "latency_ms"] {
        assert!(obj.contains_key(field), "trace line missing {field}");
    }
    assert_eq!(obj.len(), 6);
}

#[test]
fn sim_late_publication_fails_the_anchor_demand() {
    let fx = Fixture::new();
    fx.plan_demo_campaign();
    fx.write_sim_config(
        "late.json",
        serde_json::json!({
            "publications": [
                {"anchor": 0, "at_ms": 220000},
                {"anchor": 1, "at_ms": 0}
            ]
        }),
    );
    let out = run_in(fx.path(), &["sim", "--config", "late.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("all_anchors_reached=false"));
}

#[test]
fn malformed_config_exits_2_with_line_info() {
    let fx = Fixture::new();
    write(fx.path(), "bad.json", "{\n  \"master_seed\": oops\n}");
    let out = run_in(fx.path(), &["sim", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn seed_precedence_flag_beats_env_beats_config() {
    let fx = Fixture::new();
    fx.plan_demo_campaign();
    fx.write_sim_config("sim.json", serde_json::json!({"require_all_anchors": false}));

    let base = run_in(fx.path(), &["sim", "--config", "sim.json", "--out", "base.json"]);
    assert!(base.status.success());

    // env overrides the config seed
    let env_out = riga()
        .args(["sim", "--config", "sim.json", "--out", "env.json"])
        .current_dir(fx.path())
        .env("RIGA_SEED", "43")
        .output()
        .unwrap();
    assert!(env_out.status.success());
    let base_bytes = fs::read(fx.path().join("base.json")).unwrap();
    assert_ne!(base_bytes, fs::read(fx.path().join("env.json")).unwrap());

    // the flag wins over the env
    let flag_out = riga()
        .args(["sim", "--config", "sim.json", "--seed", "42", "--out", "flag.json"])
        .current_dir(fx.path())
        .env("RIGA_SEED", "43")
        .output()
        .unwrap();
    assert!(flag_out.status.success());
    assert_eq!(base_bytes, fs::read(fx.path().join("flag.json")).unwrap());

    let bad_env = riga()
        .args(["sim", "--config", "sim.json"])
        .current_dir(fx.path())
        .env("RIGA_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn availability_with_zero_files_succeeds_with_empty_stats() {
    let fx = Fixture::new();
    write(
        fx.path(),
        "exp.json",
        &serde_json::json!({
            "master_seed": 9,
            "bots": {"count": 1},
            "duration_ms": 1000,
            "experiment": "availability",
            "gateways": "gateways.json",
            "experiment_params": {"files": 0}
        })
        .to_string(),
    );
    let out = run_in(fx.path(), &["experiment", "--config", "exp.json", "--out", "rep.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("0\t0.000\t0.000"));
}

#[test]
fn matrix_emits_a_table_and_report() {
    let fx = Fixture::new();
    write(
        fx.path(),
        "exp.json",
        &serde_json::json!({
            "master_seed": 3,
            "bots": {"count": 1},
            "duration_ms": 1000,
            "experiment": "gateway_matrix",
            "gateways": "gateways.json",
            "experiment_params": {"matrix_cids": 3, "matrix_repeats": 5, "matrix_timeouts_ms": [5000, 3000]}
        })
        .to_string(),
    );
    let out = run_in(fx.path(), &["experiment", "--config", "exp.json", "--out", "m.json"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("gateway\ttime_ms@5000\tdropped@5000\ttime_ms@3000\tdropped@3000"));
    assert_eq!(text.lines().count(), 14);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 13);
}

#[test]
fn experiment_without_a_kind_is_a_config_error() {
    let fx = Fixture::new();
    write(
        fx.path(),
        "exp.json",
        &serde_json::json!({
            "master_seed": 1, "bots": {"count": 1}, "duration_ms": 1000
        })
        .to_string(),
    );
    let out = run_in(fx.path(), &["experiment", "--config", "exp.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn probe_shim_runs_are_identical_and_bad_cids_fail_fast() {
    let fx = Fixture::new();
    write(
        fx.path(),
        "plan.json",
        &serde_json::json!({
            "gateways": ["https://a.example", "https://b.example"],
            "cids": ["Qmc8N5wtMkvMySqxu4Agy2SGvL2zxYGf4rWmHvMASoUQv6"],
            "repeats": 5
        })
        .to_string(),
    );
    let a = run_in(fx.path(), &["probe", "run", "--plan", "plan.json", "--out", "p1.json", "--shim"]);
    assert!(a.status.success());
    let b = run_in(fx.path(), &["probe", "run", "--plan", "plan.json", "--out", "p2.json", "--shim"]);
    assert!(b.status.success());
    assert_eq!(
        fs::read(fx.path().join("p1.json")).unwrap(),
        fs::read(fx.path().join("p2.json")).unwrap()
    );

    write(
        fx.path(),
        "bad.json",
        &serde_json::json!({
            "gateways": ["https://a.example"],
            "cids": ["Qm0bad"],
            "repeats": 1
        })
        .to_string(),
    );
    let out = run_in(fx.path(), &["probe", "run", "--plan", "bad.json", "--out", "x.json", "--shim"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!fx.path().join("x.json").exists());
}

#[test]
fn probe_rate_floor_requires_override_flag() {
    let fx = Fixture::new();
    write(
        fx.path(),
        "fast.json",
        &serde_json::json!({
            "gateways": ["https://a.example"],
            "cids": ["Qmc8N5wtMkvMySqxu4Agy2SGvL2zxYGf4rWmHvMASoUQv6"],
            "repeats": 2,
            "rate_limit_s": 0.5
        })
        .to_string(),
    );
    let out = run_in(fx.path(), &["probe", "run", "--plan", "fast.json", "--out", "p.json", "--shim"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(
        fx.path(),
        &["probe", "run", "--plan", "fast.json", "--out", "p.json", "--shim", "--allow-fast-rate"],
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn dump_writes_the_store_snapshot() {
    let fx = Fixture::new();
    fx.plan_demo_campaign();
    fx.write_sim_config("sim.json", serde_json::json!({"bots": {"count": 2}}));
    let out = run_in(fx.path(), &["dump", "--config", "sim.json", "--out", "snap.json"]);
    assert!(out.status.success());
    let snap: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.path().join("snap.json")).unwrap()).unwrap();
    // the two published command envelopes
    assert_eq!(snap["objects"].as_array().unwrap().len(), 2);
    assert!(snap["providers"].as_array().is_some());
    assert!(snap["names"].as_array().is_some());
}

#[test]
fn shipped_configs_match_the_bundled_defaults() {
    let repo_root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let text = fs::read_to_string(repo_root.join("configs/gateways_table2.json")).unwrap();
    let parsed: Vec<riga::gatewaysim::GatewaySpec> = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, riga::gatewaysim::table2_default_specs());

    let campaign_text = fs::read_to_string(repo_root.join("configs/demo_campaign.json")).unwrap();
    let campaign: riga::rigacore::Campaign = serde_json::from_str(&campaign_text).unwrap();
    assert_eq!(campaign.anchors.len(), 2);
    campaign.build_prng().unwrap();
}

#[test]
fn shipped_demo_sim_runs_green_from_the_repo_root() {
    let repo_root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let out = riga()
        .args(["sim", "--config", "configs/sim_demo.json"])
        .current_dir(&repo_root)
        .env_remove("RIGA_SEED")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("all_anchors_reached=true"));
}
