use psg::experiment::{self, ExperimentRow, InstanceRecord, InstanceStatus, RunManifest};
use psg_core::fixtures::{self, Fixture};
use psg_core::games;
use psg_core::pabulib::{self, Partitioned, PartitionConfig};
use psg_core::{Election, Mode, RuleSpec};
use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

fn psg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_pb(dir: &Path, name: &str, e: &Election) {
    std::fs::write(dir.join(name), pabulib::election_to_pb(e, name)).unwrap();
}

fn cell_sets(cells: &[Vec<psg_core::ProjectId>]) -> BTreeSet<BTreeSet<String>> {
    cells.iter().map(|c| c.iter().map(ToString::to_string).collect()).collect()
}

/// A run seed under which the intro election splits into its trees and bikes.
fn intro_seed(f: &Fixture) -> u64 {
    let want = cell_sets(f.game.proposers());
    (0..10_000)
        .find(|&s| {
            let cfg = PartitionConfig {
                proposers: 2,
                seed: experiment::instance_seed(s, "intro.pb", 2),
                max_projects: 10,
            };
            match pabulib::partition_into_game(f.game.election(), &cfg, Mode::Psg).unwrap() {
                Partitioned::Game(g) => cell_sets(g.proposers()) == want,
                Partitioned::Skipped(_) => false,
            }
        })
        .expect("some seed reproduces the intro cells")
}

fn read_records(dir: &Path) -> Vec<InstanceRecord> {
    std::fs::read_to_string(dir.join("instances.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn unit_election(m: usize) -> Election {
    let mut cfg = fixtures::RandomGameConfig::new(m, 1, 5);
    cfg.voters = 6;
    fixtures::random_game(&cfg).unwrap().election().clone()
}

#[test]
fn intro_directory_gives_one_converging_game() {
    let f = fixtures::intro_example();
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    write_pb(input.path(), "intro.pb", f.game.election());
    let seed = intro_seed(&f).to_string();
    let o = psg(&[
        "run",
        "--rules",
        "basicav",
        "--proposers",
        "2",
        "--seed",
        &seed,
        "--in",
        input.path().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.path().join("results.csv")).unwrap();
    assert_eq!(
        csv,
        "rule,mode,l,all,full_ne,br_ne,bf_ne,no_ne,undecided\nbasicav,psg,2,1,0,1,0,0,0\n"
    );
    let records = read_records(out.path());
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].iterations, Some(2));
    assert_eq!(records[0].witness_verified, Some(true));
    for name in ["manifest.json", "summary.json"] {
        assert!(out.path().join(name).is_file(), "{name}");
    }
}

#[test]
fn oversized_and_broken_files_are_reported_not_classified() {
    let input = tempfile::tempdir().unwrap();
    write_pb(input.path(), "big.pb", &unit_election(12));
    write_pb(input.path(), "small.pb", &unit_election(4));
    std::fs::write(input.path().join("broken.pb"), "META\nkey;value\n").unwrap();
    let mut m = RunManifest::new(input.path(), &[RuleSpec::BasicAv, RuleSpec::Phragmen], Mode::Psg);
    m.proposers = vec![2, 3];
    let run = experiment::run_experiments(&m).unwrap();
    assert_eq!(run.summary.files, 3);
    assert_eq!(run.summary.parse_errors.len(), 1);
    assert_eq!(run.summary.parse_errors[0].file, "broken.pb");
    let big: Vec<_> = run.records.iter().filter(|r| r.file == "big.pb").collect();
    assert_eq!(big.len(), 4);
    assert!(big.iter().all(|r| r.status == InstanceStatus::Skipped));
    assert_eq!(run.summary.classified, 4);
    assert_eq!(run.rows.iter().map(|r| r.all).sum::<usize>(), 4);
    assert!(experiment::verify_run(&run).unwrap().is_empty());
}

#[test]
fn rows_aggregate_the_records() {
    let input = tempfile::tempdir().unwrap();
    for (k, m) in [3, 4, 5, 6].into_iter().enumerate() {
        write_pb(input.path(), &format!("e{k}.pb"), &unit_election(m));
    }
    let rules = [RuleSpec::BasicAv, RuleSpec::Phragmen, RuleSpec::mes()];
    for mode in [Mode::Psg, Mode::Psg1] {
        let mut m = RunManifest::new(input.path(), &rules, mode);
        m.proposers = vec![2, 3];
        let run = experiment::run_experiments(&m).unwrap();
        for row in &run.rows {
            assert!(row.is_consistent());
            let mut tally = ExperimentRow {
                rule: row.rule.clone(),
                mode: row.mode.clone(),
                l: row.l,
                ..ExperimentRow::default()
            };
            for rec in run.records.iter().filter(|r| {
                r.rule == row.rule && r.proposers == row.l && r.status == InstanceStatus::Classified
            }) {
                tally.all += 1;
                match rec.class.unwrap() {
                    games::NeClass::FullNe => tally.full_ne += 1,
                    games::NeClass::BrNe => tally.br_ne += 1,
                    games::NeClass::BfNe => tally.bf_ne += 1,
                    games::NeClass::NoNe => tally.no_ne += 1,
                    games::NeClass::Undecided => tally.undecided += 1,
                }
            }
            assert_eq!(&tally, row);
        }
        assert!(experiment::verify_run(&run).unwrap().is_empty());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let input = tempfile::tempdir().unwrap();
    for (k, m) in [4, 5, 7].into_iter().enumerate() {
        write_pb(input.path(), &format!("e{k}.pb"), &unit_election(m));
    }
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let out = tempfile::tempdir().unwrap();
            let o = psg(&[
                "run",
                "--mode",
                "psg1",
                "--seed",
                "7",
                "--in",
                input.path().to_str().unwrap(),
                "--out",
                out.path().to_str().unwrap(),
            ]);
            assert!(o.status.success());
            out
        })
        .collect();
    for name in ["results.csv", "instances.jsonl", "manifest.json", "summary.json"] {
        let a = std::fs::read(runs[0].path().join(name)).unwrap();
        let b = std::fs::read(runs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn empty_directory_runs_with_a_warning() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = psg(&["run", "--in", input.path().to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("no .pb files"));
    let csv = std::fs::read_to_string(out.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",0,0,0,0,0,0")));
}

#[test]
fn exported_fixtures_pass_their_own_checks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = psg(&["fixtures", "--all", "--pb", "--out", d]);
    assert!(o.status.success());
    for f in fixtures::all() {
        let game = dir.path().join(format!("{}.game.json", f.name));
        let expected = dir.path().join(format!("{}.expected.json", f.name));
        assert!(dir.path().join(format!("{}.pb", f.name)).is_file());
        for rule in &f.rules {
            let o = psg(&[
                "analyze",
                game.to_str().unwrap(),
                "--rule",
                &rule.to_string(),
                "--expected",
                expected.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{} {rule}:\n{}", f.name, stdout(&o));
        }
    }
}

#[test]
fn analyze_reports_the_no_equilibrium_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(psg(&["fixtures", "no-ne-single-voter", "--out", d]).status.success());
    let game = dir.path().join("no-ne-single-voter.game.json");
    let o = psg(&["analyze", game.to_str().unwrap(), "--rule", "basicav"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("no NE; best-response cycle of length 4"), "{}", stdout(&o));
}

#[test]
fn analyze_flags_a_wrong_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(psg(&["fixtures", "intro", "--out", d]).status.success());
    let expected = dir.path().join("intro.expected.json");
    let text = std::fs::read_to_string(&expected).unwrap().replace("60000", "60001");
    std::fs::write(&expected, text).unwrap();
    let game = dir.path().join("intro.game.json");
    let o = psg(&[
        "analyze",
        game.to_str().unwrap(),
        "--rule",
        "basicav",
        "--expected",
        expected.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("MISMATCH"));
}

#[test]
fn unknown_fixture_and_bad_rule_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = psg(&["fixtures", "nope", "--out", d]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("intro"));
    let o = psg(&["run", "--rules", "borda", "--in", d, "--out", d]);
    assert_eq!(o.status.code(), Some(2));
}
