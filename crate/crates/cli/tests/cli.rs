use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use czgp_cli::experiment::Summary;
use czgp_cli::report::Report;
use czgp_core::game::{ContextSpace, GameDefinition, GameMetadata, Payoff};

fn czgp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_czgp")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
  "game": {"generate": {"K": 3, "Z": 2, "noise": 0.1}},
  "T": 60,
  "seeds": [1, 2, 3],
  "players": [
    {"algorithm": "cz_ada_normal_gp"},
    {"algorithm": "gpmw"},
    {"algorithm": "random"}
  ]
}"#;

fn infeasible_game() -> GameDefinition {
    let k = 2;
    GameDefinition {
        num_players: 2,
        num_actions: vec![k, k],
        num_constraints: 1,
        context_space: ContextSpace::Finite { count: 2 },
        rewards: (0..2)
            .map(|_| Payoff::Table {
                num_contexts: 1,
                values: vec![0.2, 0.4, 0.6, 0.8],
            })
            .collect(),
        constraints: (0..2)
            .map(|_| {
                vec![Payoff::Table {
                    num_contexts: 1,
                    values: vec![0.5, 0.7],
                }]
            })
            .collect(),
        reward_noise: vec![0.0; 2],
        constraint_noise: vec![vec![0.0]; 2],
        metadata: GameMetadata::default(),
    }
}

#[test]
fn run_succeeds_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SMALL);
    let out = dir.path().join("out");
    let o = czgp(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["seed_1.csv", "seed_2.csv", "seed_3.csv", "summary.json", "metadata.json"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let header = fs::read_to_string(out.join("seed_1.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert_eq!(
        header,
        "t,z,a_1,a_2,a_3,regret_1,regret_2,regret_3,violation_1_1,violation_2_1,violation_3_1"
    );
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing_t = write(dir.path(), "a.json", r#"{"game": {"generate": {"K": 3, "Z": 2}}, "seeds": [0]}"#);
    let o = czgp(&["run", &missing_t]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("T"));

    let unknown = write(
        dir.path(),
        "b.json",
        r#"{"game": {"generate": {"K": 3, "Z": 2, "colour": 1}}, "T": 5, "seeds": [0]}"#,
    );
    let o = czgp(&["run", &unknown]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("game.generate"));

    let o = czgp(&["run", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"game": {"file": "no_such_game.json"}, "T": 5, "seeds": [0]}"#,
    );
    let o = czgp(&["run", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn infeasible_game_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("game.json"), serde_json::to_string(&infeasible_game()).unwrap()).unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"game": {"file": "game.json"}, "T": 200, "seeds": [0, 1],
            "players": [{"algorithm": "c_ada_normal_gp"}, {"algorithm": "random"}]}"#,
    );
    let out = dir.path().join("out");
    let o = czgp(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("infeasibility declared by player 1"));
    let summary: Summary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let text = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(text.contains("infeasibility_declared"));
    for s in &summary.per_seed {
        assert!(s.rounds < 200);
        let rows = fs::read_to_string(out.join(format!("seed_{}.csv", s.seed))).unwrap().lines().count();
        assert_eq!(rows, s.rounds + 1);
    }
}

#[test]
fn report_matches_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SMALL);
    let out = dir.path().join("out");
    assert_eq!(czgp(&["run", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let o = czgp(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let summary: Summary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let rep: Report = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep.seeds, summary.seeds);
    assert_eq!(rep.horizon, summary.horizon);
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + y.abs()));
    for (a, b) in rep.aggregate.regret_mean.iter().zip(&summary.aggregate.regret_mean) {
        assert!(close(a, b));
    }
    for (a, b) in rep.aggregate.violations_mean.iter().zip(&summary.aggregate.violations_mean) {
        for (x, y) in a.iter().zip(b) {
            assert!(close(x, y));
        }
    }
    assert_eq!(rep.aggregate.count, summary.aggregate.count);
}

#[test]
fn generated_game_round_trips_through_a_file_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SMALL);
    let game_path = dir.path().join("game.json");
    let o = czgp(&["generate-game", &cfg, "--out", game_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let game: GameDefinition = serde_json::from_str(&fs::read_to_string(&game_path).unwrap()).unwrap();
    game.validate().unwrap();
    game.check_feasible().unwrap();
    assert_eq!(game.num_actions, vec![3, 3, 3]);

    let file_cfg = write(
        dir.path(),
        "file_cfg.json",
        &SMALL.replace(r#""game": {"generate": {"K": 3, "Z": 2, "noise": 0.1}}"#, r#""game": {"file": "game.json"}"#),
    );
    let out = dir.path().join("file_out");
    let o = czgp(&["run", &file_cfg, "--out", out.to_str().unwrap(), "--seed-override", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("seed_1.csv").exists());
    assert!(!out.join("seed_2.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(czgp(&["run", &cfg, "--out", a.to_str().unwrap(), "--parallel", "3"]).status.code(), Some(0));
    assert_eq!(czgp(&["run", &cfg, "--out", b.to_str().unwrap(), "--parallel", "3"]).status.code(), Some(0));
    for name in ["seed_1.csv", "seed_2.csv", "seed_3.csv", "summary.json", "metadata.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}
