use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use reflex_sm_cli::Cli;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reflex-sm"))
        .args(args)
        .current_dir(dir)
        .env_remove("REFLEX_SM_SEED")
        .output()
        .expect("binary runs")
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A value the parser accepts for each flag.
fn sample(flag: &str) -> Option<&'static str> {
    Some(match flag {
        "fixture" => "person",
        "scenario" | "out" | "out-csv" | "trace" => "x.json",
        "threshold-lo" | "threshold-hi" | "cutoff" => "0.5",
        "measures" => "levenshtein,jaro-winkler",
        "sims-values" => "3,10",
        "measures-per-tick" | "convergence-streak" | "patience" | "max-ticks" | "seed" | "sims" | "workers"
        | "repetitions" | "stream" => "2",
        _ => return None,
    })
}

#[test]
fn help_and_parser_agree() {
    let mut root = Cli::command();
    root.build();
    for sub in root.get_subcommands() {
        let mut sub = sub.clone();
        let help = sub.render_long_help().to_string();
        let documented: BTreeSet<String> = help
            .split(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
            .filter_map(|w| w.strip_prefix("--"))
            .filter(|w| !w.is_empty())
            .map(str::to_owned)
            .collect();
        let declared: BTreeSet<String> = sub.get_arguments().filter_map(|a| a.get_long()).map(str::to_owned).collect();
        assert_eq!(documented, declared, "subcommand {}", sub.get_name());

        for flag in declared.iter().filter(|f| *f != "help") {
            let value = sample(flag).unwrap_or_else(|| panic!("no sample value for --{flag}"));
            let mut argv = vec!["reflex-sm".to_owned(), sub.get_name().to_owned()];
            if sub.get_name() == "eval" {
                argv.push("r.json".into());
            }
            argv.push(format!("--{flag}"));
            argv.push(value.into());
            if let Err(e) = Cli::try_parse_from(&argv) {
                assert!(
                    !matches!(
                        e.kind(),
                        ErrorKind::UnknownArgument | ErrorKind::InvalidValue | ErrorKind::ValueValidation
                    ),
                    "{argv:?}: {e}"
                );
            }
        }
    }
}

#[test]
fn meta_then_eval_prints_the_person_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["meta", "--fixture", "person", "--sims", "10", "--seed", "7", "--out", "r.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin(dir.path(), &["eval", "r.json"]);
    assert!(out.status.success());
    let text = squash(&String::from_utf8(out.stdout).unwrap());
    assert!(text.contains("Person 1 6 6 100%"), "{text}");
}

#[test]
fn repeated_meta_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = bin(dir.path(), &["meta", "--fixture", "person", "--sims", "10", "--seed", "7", "--out", name]);
        assert!(out.status.success());
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn seed_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let flag = bin(dir.path(), &["meta", "--fixture", "order", "--seed", "11", "--out", "flag.json"]);
    let env = Command::new(env!("CARGO_BIN_EXE_reflex-sm"))
        .args(["meta", "--fixture", "order", "--out", "env.json"])
        .current_dir(dir.path())
        .env("REFLEX_SM_SEED", "11")
        .output()
        .unwrap();
    assert!(flag.status.success() && env.status.success());
    assert_eq!(fs::read(dir.path().join("flag.json")).unwrap(), fs::read(dir.path().join("env.json")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bin(dir.path(), args).status.code();
    assert_eq!(code(&["run", "--fixture", "order", "--sims", "0"]), Some(1));
    assert_eq!(code(&["meta", "--fixture", "order", "--cutoff", "1.5"]), Some(1));
    assert_eq!(code(&["run", "--fixture", "order", "--threshold-lo", "0.9", "--threshold-hi", "0.1"]), Some(1));
    assert_eq!(code(&["run", "--fixture", "order", "--measures", "soundex"]), Some(1));
    assert_eq!(code(&["run", "--fixture", "nowhere"]), Some(1));
    assert_eq!(code(&["run", "--fixture", "order", "--no-such-flag"]), Some(1));
    assert_eq!(code(&["run"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["meta", "--help"]), Some(0));
    assert_eq!(code(&["run", "--scenario", "missing.json"]), Some(2));
    assert_eq!(code(&["eval", "missing.json"]), Some(2));
    fs::write(dir.path().join("bad.json"), "{\"name\": \"x\"}").unwrap();
    assert_eq!(code(&["run", "--scenario", "bad.json"]), Some(2));
    assert_eq!(code(&["eval", "bad.json"]), Some(2));
    assert_eq!(code(&["fixtures"]), Some(0));
}

#[test]
fn commands_only_write_where_told() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("out");
    fs::create_dir(&outdir).unwrap();
    let o = |name: &str| outdir.join(name).to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["fixtures".into()],
        vec!["run".into(), "--fixture".into(), "person".into()],
        vec!["meta".into(), "--fixture".into(), "person".into()],
        vec!["sweep".into(), "--fixture".into(), "person".into(), "--repetitions".into(), "2".into()],
        vec!["reproduce".into(), "--repetitions".into(), "1".into(), "--sims".into(), "3".into()],
        vec![
            "run".into(),
            "--fixture".into(),
            "order".into(),
            "--out".into(),
            o("run.json"),
            "--trace".into(),
            o("trace.jsonl"),
        ],
        vec![
            "meta".into(),
            "--fixture".into(),
            "order".into(),
            "--out".into(),
            o("meta.json"),
            "--out-csv".into(),
            o("freq.csv"),
        ],
        vec!["eval".into(), o("meta.json"), "--out-csv".into(), o("eval.csv")],
        vec![
            "sweep".into(),
            "--fixture".into(),
            "person".into(),
            "--repetitions".into(),
            "2".into(),
            "--out-csv".into(),
            o("sweep.csv"),
        ],
        vec!["reproduce".into(), "--repetitions".into(), "1".into(), "--out-csv".into(), o("table.csv")],
    ];
    for args in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = bin(dir.path(), &args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let listing = |p: &Path| -> BTreeSet<String> {
        fs::read_dir(p).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect()
    };
    assert_eq!(listing(dir.path()), BTreeSet::from(["out".to_owned()]));
    let expected = ["eval.csv", "freq.csv", "meta.json", "run.json", "sweep.csv", "table.csv", "trace.jsonl"];
    assert_eq!(listing(&outdir), expected.iter().map(|s| s.to_string()).collect());
}

#[test]
fn reproduce_prints_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["reproduce", "--seed", "1"]);
    assert!(out.status.success());
    let text = squash(&String::from_utf8(out.stdout).unwrap());
    for row in ["Person 3 6 6 100%", "Order 3 8 8 100%", "Travel 3 15 15 100%", "Order 8 8 100% 6 75%"] {
        assert!(text.contains(row), "missing {row:?} in {text}");
    }
}
