use std::path::{Path, PathBuf};
use std::process::Command;

use esl_cli::format::{parse_env, parse_game, parse_qbf, render_env};
use esl_cli::record::Record;
use esl_core::formula::{classify_fragment, desugar, parse_formula_for, Fragment};
use esl_core::testkit::random_env;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn esl<I, S>(args: I) -> Run
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = Command::new(env!("CARGO_BIN_EXE_esl")).args(args).output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn record(run: &Run) -> Record {
    serde_json::from_str(&run.stdout).expect("record parses")
}

#[test]
fn check_exit_codes() {
    let e1 = data("e1.env");
    let ok = esl(["check", "--env", p(&e1), "--class", "all", "--formula", "¬D[]¬ A G p"]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    assert!(ok.stdout.starts_with("holds"));
    assert_eq!(esl(["check", "--env", p(&e1), "--formula", "A G p"]).code, 1);
    let bad = esl(["check", "--env", p(&e1), "--formula", "A G (p &"]);
    assert_eq!(bad.code, 2);
    assert!(bad.stderr.contains("formula:1:"), "{}", bad.stderr);
    let unknown = esl(["check", "--env", p(&e1), "--formula", "A G r"]);
    assert_eq!(unknown.code, 2);
    assert!(unknown.stderr.contains("`r`"));
    assert_eq!(esl(["check", "--env", p(&e1), "--formula", "p", "--class", "weird"]).code, 2);
    assert_eq!(esl(["check", "--env", p(&e1)]).code, 2);
    assert_eq!(esl(["check", "--env", "/nonexistent.env", "--formula", "p"]).code, 2);
}

#[test]
fn environment_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let env = dir.path().join("broken.env");
    std::fs::write(&env, "agents:\n  1: a\nstates: s0\ntrans:\n  s0 z -> s0\n").unwrap();
    let run = esl(["check", "--env", p(&env), "--formula", "true"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("broken.env:5:"), "{}", run.stderr);
    std::fs::write(&env, "agents:\n  1: a\nstates: s0\ninit: s0\n").unwrap();
    let run = esl(["check", "--env", p(&env), "--formula", "true"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("no successor"), "{}", run.stderr);
}

#[test]
fn reduction_over_budget_exits_three() {
    let e1 = data("e1.env");
    let run = esl([
        "check", "--env", p(&e1), "--formula", "A G p", "--engine", "reduction", "--ets-budget", "5",
    ]);
    assert_eq!(run.code, 3, "{}", run.stderr);
    assert!(run.stderr.contains("ETS states budget"));
    let within = esl(["check", "--env", p(&e1), "--formula", "A G p", "--engine", "reduction"]);
    assert_eq!(within.code, 1);
    assert_eq!(esl(["check", "--env", p(&e1), "--formula", "p", "--ets-budget", "0"]).code, 2);
}

#[test]
fn machine_record_fields() {
    let e1 = data("e1.env");
    let run = esl(["--json", "check", "--env", p(&e1), "--formula", "!D[]! A G p", "--witness"]);
    assert_eq!(run.code, 0);
    let value: serde_json::Value = serde_json::from_str(&run.stdout).unwrap();
    let keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
    for k in [
        "command", "env_digest", "formula", "class", "engine", "fragment", "bindings", "holds", "exit_code",
        "witness", "stats", "error", "details",
    ] {
        assert!(keys.contains(&k), "missing {k}");
    }
    let r = record(&run);
    assert_eq!(r.exit_code, 0);
    assert_eq!(r.holds, Some(true));
    assert_eq!(r.class.as_deref(), Some("all"));
    let w = r.witness.unwrap();
    assert_eq!(w.state, "s0");
    assert_eq!(w.profile["1"]["s0"], vec!["a"]);
    // the digest ignores comments and layout
    let env = parse_env(&std::fs::read_to_string(&e1).unwrap()).unwrap();
    assert_eq!(r.env_digest.unwrap(), esl_cli::record::env_digest(&env));
    let failed = record(&esl(["--json", "check", "--env", p(&e1), "--formula", "q &"]));
    assert_eq!(failed.exit_code, 2);
    assert!(failed.error.is_some());
}

#[test]
fn record_is_enough_to_rerun() {
    let e1 = data("e1.env");
    let first = record(&esl(["--json", "check", "--env", p(&e1), "--formula", "A F q", "--class", "unif-det"]));
    let again = record(&esl([
        "--json",
        "check",
        "--env",
        p(&e1),
        "--formula",
        first.formula.as_deref().unwrap(),
        "--class",
        first.class.as_deref().unwrap(),
        "--engine",
        first.engine.as_deref().unwrap(),
    ]));
    assert_eq!(first.holds, again.holds);
    assert_eq!(first.env_digest, again.env_digest);
}

#[test]
fn bindings_name_global_states_by_table_files() {
    let e1 = data("e1.env");
    let stay = data("stay.prof");
    let bind = format!("x=s0:{}", p(&stay));
    let f = "!D[]!(loc(e, x) & loc(sig(1), x))";
    let run = esl(["check", "--env", p(&e1), "--formula", f, "--bind", &bind]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    // with `a` always enabled, s1 is never reached
    let unreachable = format!("x=s1:{}", p(&stay));
    assert_eq!(esl(["check", "--env", p(&e1), "--formula", f, "--bind", &unreachable]).code, 2);
    assert_eq!(esl(["check", "--env", p(&e1), "--formula", f]).code, 2);
    assert_eq!(esl(["check", "--env", p(&e1), "--formula", f, "--bind", "x=s0"]).code, 2);
}

#[test]
fn worker_count_does_not_change_output() {
    let e1 = data("e1.env");
    let args = |w: &'static str| {
        ["--workers", w, "check", "--env", p(&e1), "--formula", "!D[]! E G p", "--witness"].map(String::from)
    };
    let strip = |s: String| s.lines().filter(|l| !l.contains("time:")).collect::<Vec<_>>().join("\n");
    let one = esl(args("1"));
    let four = esl(args("4"));
    assert_eq!(one.code, four.code);
    assert_eq!(strip(one.stdout), strip(four.stdout));
}

#[test]
fn atel_modes() {
    let t = esl(["atel", "translate", "--formula", "<<1>> X p"]);
    assert_eq!(t.code, 0);
    assert_eq!(t.stdout.trim(), "!K[e]!D[e,sig(1)] X p");
    let e1 = data("e1.env");
    let eval = esl(["atel", "eval", "--env", p(&e1), "--formula", "<<1>> G p", "--state", "s0"]);
    assert_eq!(eval.code, 0);
    let eval = esl(["atel", "eval", "--env", p(&e1), "--formula", "<<>> G p", "--state", "s0"]);
    assert_eq!(eval.code, 1);
    let missing = esl(["atel", "eval", "--env", p(&e1), "--formula", "<<1>> G p", "--state", "s9"]);
    assert_eq!(missing.code, 2);
    assert!(missing.stderr.contains("s9"));
}

#[test]
fn atel_verify_on_random_environments() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..5 {
        let env = random_env(&mut rng, 3);
        let path = dir.path().join(format!("r{k}.env"));
        std::fs::write(&path, render_env(&env)).unwrap();
        for kind in ["det", "unif-det"] {
            for f in ["<<1>> X p", "<<1,2>> G q", "K[1] <<2>> (p U q)"] {
                let run = esl(["atel", "verify", "--env", p(&path), "--formula", f, "--kind", kind]);
                assert_eq!(run.code, 0, "{f} on r{k}: {}{}", run.stdout, run.stderr);
                assert!(run.stdout.contains("agree at all states"));
            }
        }
    }
}

#[test]
fn generated_qbf_instances_check_like_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    for (text, expected) in [("exists x1 forall x2 . (x1 | x2)", 0), ("exists x1 forall x2 . (x1 & x2)", 1)] {
        let out = dir.path().join(if expected == 0 { "yes" } else { "no" });
        let gen = esl(["generate", "qbf", "--qbf", text, "--out", p(&out)]);
        assert_eq!(gen.code, 0, "{}", gen.stderr);
        let run = esl([
            "check",
            "--env",
            p(&out.join("qbf.env")),
            "--formula-file",
            p(&out.join("qbf.esl")),
            "--class",
            "unif-det",
        ]);
        assert_eq!(run.code, expected, "{text}: {}", run.stderr);
        let back = parse_qbf(&std::fs::read_to_string(out.join("instance.qbf")).unwrap()).unwrap();
        assert!(back.is_normalized());
    }
    assert_eq!(esl(["generate", "qbf", "--qbf", "exists x . y", "--out", p(dir.path())]).code, 2);
}

#[test]
fn generated_games_check_like_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    for (game, ne) in [("pd.game", 0), ("pennies.game", 1)] {
        let out = dir.path().join(game);
        assert_eq!(esl(["generate", "game", "--game", p(&data(game)), "--out", p(&out)]).code, 0);
        let run = esl([
            "--json",
            "check",
            "--env",
            p(&out.join("game.env")),
            "--formula-file",
            p(&out.join("ne.esl")),
            "--class",
            "unif-det",
            "--witness",
        ]);
        assert_eq!(run.code, ne, "{game}");
        if ne == 0 {
            let w = record(&run).witness.unwrap();
            assert_eq!(w.profile["0"]["init"], vec!["defect"]);
            assert_eq!(w.profile["1"]["init"], vec!["defect"]);
        }
        let pce = esl([
            "check",
            "--env",
            p(&out.join("game.env")),
            "--formula-file",
            p(&out.join("pce.esl")),
            "--class",
            "unif-det",
        ]);
        let g = parse_game(&std::fs::read_to_string(data(game)).unwrap()).unwrap();
        assert_eq!(pce.code == 0, esl_core::game::brute_force_pce(&g), "{game}");
    }
}

#[test]
fn erasure_demo_files_parse_and_classify() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    let gen = esl(["--json", "generate", "erasure-demo", "--out", p(&out)]);
    assert_eq!(gen.code, 0);
    let env = parse_env(&std::fs::read_to_string(out.join("demo.env")).unwrap()).unwrap();
    assert!(env.validate().is_empty());
    for a in ["C", "M", "P", "A"] {
        assert!(env.agent_id(a).is_some());
    }
    let mut verdicts = Vec::new();
    for (name, _) in esl_cli::erasure::erasure_formulas() {
        let file = out.join(format!("{name}.esl"));
        let f = parse_formula_for(std::fs::read_to_string(&file).unwrap().trim(), &env).unwrap();
        assert!(classify_fragment(&desugar(&f)).within(Fragment::FullEsl));
        let run = esl(["check", "--env", p(&out.join("demo.env")), "--formula-file", p(&file), "--class", "unif"]);
        verdicts.push((name, run.code));
    }
    // stored data is randomized on acknowledgement, so only knowledge of
    // the merchant's strategy exposes the card number
    assert_eq!(
        verdicts,
        vec![("residue", 1), ("residue-known-merchant", 0), ("attack", 1), ("collusion", 0)]
    );
}

#[test]
fn kbp_modes() {
    let env = data("switch.env");
    let program = data("self_fulfilling.kbp");
    let exists = esl(["kbp", "exists", "--env", p(&env), "--program", p(&program)]);
    assert_eq!(exists.code, 0, "{}", exists.stderr);
    assert!(exists.stdout.contains("agent 1: * -> {"));
    let find = esl(["--json", "kbp", "find", "--env", p(&env), "--program", p(&program)]);
    assert_eq!(find.code, 0);
    let details = record(&find).details.unwrap();
    assert_eq!(details["implementations"].as_array().unwrap().len(), 2);
    let verify = esl(["kbp", "verify", "--env", p(&env), "--program", p(&program), "--formula", "A F q"]);
    assert_eq!(verify.code, 1);
    assert!(verify.stdout.contains("agent 1: * -> {b}"), "{}", verify.stdout);
    let knows = esl([
        "kbp", "verify", "--env", p(&env), "--program", p(&program), "--formula", "K[1] A F q | K[1] !q",
    ]);
    assert_eq!(knows.code, 0);
    let bad = esl(["kbp", "exists", "--env", p(&env), "--program", p(&data("unknown_action.kbp"))]);
    assert_eq!(bad.code, 2);
    assert!(bad.stderr.contains("`c`"));
}

#[test]
fn uncovered_programs_get_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("uncovered.kbp");
    std::fs::write(&program, "agent 1: do K[1] p -> a od\n").unwrap();
    let run = esl(["kbp", "exists", "--env", p(&data("switch.env")), "--program", p(&program)]);
    assert_eq!(run.code, 1);
    assert!(run.stdout.contains("no clause of agent `1` is enabled"), "{}", run.stdout);
}
