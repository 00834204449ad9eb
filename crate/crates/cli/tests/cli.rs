//! End-to-end tests of the `osp` binary: exit codes and the round-trip
//! guarantee that everything printed on stdout parses with the library's
//! own loaders.

use std::path::Path;
use std::process::{Command, Output};

use osp_core::bench::BenchReport;
use osp_core::mechanism::MechanismTree;
use osp_core::oracle::OdagDump;
use osp_core::sp::SpViolation;
use osp_core::sweep::SweepReport;
use osp_core::{ChoiceInstance, NonOspCertificate};

fn osp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn dictatorship_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = osp(
        &["gen", "dict", "--sizes", "2,2", "-o", "dict2.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let bytes = std::fs::read(dir.path().join("dict2.json")).unwrap();
    ChoiceInstance::load(&bytes).unwrap();

    let out = osp(
        &["decide", "dict2.json", "--mechanism", "mech.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    MechanismTree::load(stdout(&out).as_bytes()).unwrap();

    let out = osp(&["verify-mechanism", "dict2.json", "mech.json"], dir.path());
    assert_eq!(code(&out), 0);

    // early-stopping trees must also verify
    let out = osp(
        &["decide", "dict2.json", "--stop-when-constant", "--mechanism", "flat.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let out = osp(&["verify-mechanism", "dict2.json", "flat.json"], dir.path());
    assert_eq!(code(&out), 0);

    let out = osp(&["check-sp", "dict2.json"], dir.path());
    assert_eq!(code(&out), 0);

    let out = osp(&["oracle", "decide", "dict2.json"], dir.path());
    assert_eq!(code(&out), 0);
}

#[test]
fn satisfiable_reduction_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = osp(
        &["gen", "sat", "--formula", "x0", "-o", "sat.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);

    let out = osp(
        &["decide", "sat.json", "--certificate", "cert.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    NonOspCertificate::load(stdout(&out).as_bytes()).unwrap();

    let out = osp(&["verify-certificate", "sat.json", "cert.json"], dir.path());
    assert_eq!(code(&out), 0);

    let out = osp(&["check-sp", "sat.json"], dir.path());
    assert_eq!(code(&out), 3);
    serde_json::from_str::<SpViolation>(&stdout(&out)).unwrap();

    for mode in ["reach", "childless"] {
        let out = osp(
            &["oracle", "decide", "sat.json", "--mode", mode],
            dir.path(),
        );
        assert_eq!(code(&out), 3);
    }
}

#[test]
fn certificates_do_not_transfer_between_instances() {
    let dir = tempfile::tempdir().unwrap();
    osp(
        &["gen", "dict", "--sizes", "2,2", "-o", "dict2.json"],
        dir.path(),
    );
    osp(
        &["gen", "sat", "--formula", "x0", "-o", "sat.json"],
        dir.path(),
    );
    osp(
        &["decide", "sat.json", "--certificate", "cert.json"],
        dir.path(),
    );

    // no valid certificate exists for an implementable rule
    let out = osp(
        &["verify-certificate", "dict2.json", "cert.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn parallel_decide_matches_sequential_output() {
    let dir = tempfile::tempdir().unwrap();
    osp(
        &[
            "gen",
            "random",
            "--seed",
            "11",
            "--sizes",
            "3,3",
            "--outcomes",
            "3",
            "-o",
            "r.json",
        ],
        dir.path(),
    );
    let seq = osp(&["decide", "r.json"], dir.path());
    let par = osp(&["decide", "r.json", "--parallel"], dir.path());
    assert_eq!(code(&seq), code(&par));
    assert_eq!(stdout(&seq), stdout(&par));
}

#[test]
fn oracle_dump_parses() {
    let dir = tempfile::tempdir().unwrap();
    osp(
        &["gen", "dict", "--sizes", "2,2", "-o", "dict2.json"],
        dir.path(),
    );
    let out = osp(&["oracle", "dump-odag", "dict2.json"], dir.path());
    assert_eq!(code(&out), 0);
    let dump = OdagDump::load(stdout(&out).as_bytes()).unwrap();
    assert_eq!(dump.vertices.len(), 9);
}

#[test]
fn bench_reports_and_declines_small_fits() {
    let dir = tempfile::tempdir().unwrap();
    let out = osp(
        &[
            "bench", "--family", "constant", "--sizes", "4", "--reps", "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let report = BenchReport::load(stdout(&out).as_bytes()).unwrap();
    assert!(report.slope.is_none());
    assert_eq!(report.points.len(), 1);

    let out = osp(
        &[
            "bench",
            "--family",
            "dictatorship",
            "--sizes",
            "2,4,8",
            "--reps",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let report = BenchReport::load(stdout(&out).as_bytes()).unwrap();
    assert!(report.slope.is_some());
}

#[test]
fn sweep_reports_a_clean_tally() {
    let dir = tempfile::tempdir().unwrap();
    let out = osp(
        &[
            "sweep",
            "--random",
            "25",
            "--assignments",
            "2",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let report = SweepReport::load(stdout(&out).as_bytes()).unwrap();
    assert!(report.all_passed);
    assert_eq!(report.instances, 16 * 2 + 25);
}

#[test]
fn exit_codes_distinguish_usage_and_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    // unknown subcommand: usage error
    let out = osp(&["frobnicate"], dir.path());
    assert_eq!(code(&out), 1);
    // missing option value: usage error
    let out = osp(&["gen", "dict"], dir.path());
    assert_eq!(code(&out), 1);
    // missing file: input error
    let out = osp(&["decide", "no_such_file.json"], dir.path());
    assert_eq!(code(&out), 2);
    // malformed document: input error
    std::fs::write(dir.path().join("bad.json"), "{\"agents\": 1").unwrap();
    let out = osp(&["decide", "bad.json"], dir.path());
    assert_eq!(code(&out), 2);
    // validation failure names the field
    std::fs::write(
        dir.path().join("wrong_len.json"),
        r#"{"agents": 2, "type_sizes": [2, 2], "num_outcomes": 2, "choice": [0, 1, 1], "utilities": [[[0,0],[0,0]],[[0,0],[0,0]]]}"#,
    )
    .unwrap();
    let out = osp(&["decide", "wrong_len.json"], dir.path());
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("choice"), "stderr was: {stderr}");
    // --help is not an error
    let out = osp(&["--help"], dir.path());
    assert_eq!(code(&out), 0);
}

#[test]
fn gen_variants_produce_loadable_instances() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["gen", "sat", "--formula", "(and (or x0 (not x1)) x2)"],
        vec!["gen", "dict", "--sizes", "3,2", "--map", "2,0,1"],
        vec![
            "gen",
            "random",
            "--seed",
            "5",
            "--sizes",
            "2,2,2",
            "--outcomes",
            "3",
        ],
    ] {
        let out = osp(&args, dir.path());
        assert_eq!(code(&out), 0, "args: {args:?}");
        ChoiceInstance::load(stdout(&out).as_bytes()).unwrap();
    }
}
