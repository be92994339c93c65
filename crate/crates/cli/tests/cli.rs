//! End-to-end checks of the binary: artifact layout, stream round-trips,
//! and the exit-code contract (0 ok, 1 usage, 2 parse, 3 divergence).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use retrace_core::replayer::AnnotatedEvent;
use retrace_core::text::{parse_annotated_stream, parse_task_stream};

fn retrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retrace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn retrace_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retrace"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn generate_is_deterministic_and_well_formed() {
    let first = retrace(&["generate", "--kind", "jacobi", "--iterations", "4"]);
    let second = retrace(&["generate", "--kind", "jacobi", "--iterations", "4"]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    let text = stdout(&first);
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("task dot "));
    let tasks = parse_task_stream(&text).expect("generator output parses back");
    assert_eq!(tasks.len(), 12);
}

#[test]
fn run_writes_artifacts_and_annotations_erase_to_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.txt");
    let gen = retrace(&[
        "generate", "--kind", "periodic", "--period", "5", "--iterations", "60",
        "--out", stream.to_str().unwrap(),
    ]);
    assert_eq!(code(&gen), 0);

    let out_dir = dir.path().join("out");
    let run = retrace(&[
        "run", stream.to_str().unwrap(),
        "--out-dir", out_dir.to_str().unwrap(),
        "--min-trace-length", "5",
        "--batchsize", "60",
        "--multi-scale-factor", "15",
    ]);
    assert_eq!(code(&run), 0, "stderr: {}", stderr(&run));
    let text = stdout(&run);
    assert!(text.contains("speedup"));
    assert!(text.contains("traces registered"));

    for name in ["annotated.txt", "decisions.log", "cost.csv", "fraction.csv"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    assert!(fs::read_to_string(out_dir.join("cost.csv"))
        .unwrap()
        .starts_with("index,kind,seconds\n"));
    assert!(fs::read_to_string(out_dir.join("fraction.csv"))
        .unwrap()
        .starts_with("index,fraction\n"));

    let input = parse_task_stream(&fs::read_to_string(&stream).unwrap()).unwrap();
    let annotated =
        parse_annotated_stream(&fs::read_to_string(out_dir.join("annotated.txt")).unwrap())
            .unwrap();
    let erased: Vec<_> = annotated
        .iter()
        .filter_map(|e| match e {
            AnnotatedEvent::Task(t) => Some(t.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(erased, input);
    assert!(annotated
        .iter()
        .any(|e| matches!(e, AnnotatedEvent::TraceBegin { .. })));
}

#[test]
fn run_defaults_write_into_the_working_directory() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.txt");
    retrace(&[
        "generate", "--kind", "periodic", "--period", "4", "--iterations", "10",
        "--out", stream.to_str().unwrap(),
    ]);
    let run = retrace_in(dir.path(), &["run", "stream.txt", "--min-trace-length", "4"]);
    assert_eq!(code(&run), 0, "stderr: {}", stderr(&run));
    assert!(dir.path().join("annotated.txt").exists());
    assert!(dir.path().join("decisions.log").exists());
}

#[test]
fn empty_input_yields_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("empty.txt");
    fs::write(&stream, "").unwrap();
    let out_dir = dir.path().join("out");
    let run = retrace(&[
        "run", stream.to_str().unwrap(),
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "stderr: {}", stderr(&run));
    assert_eq!(fs::read_to_string(out_dir.join("annotated.txt")).unwrap(), "");
    assert_eq!(
        fs::read_to_string(out_dir.join("cost.csv")).unwrap(),
        "index,kind,seconds\n"
    );
    assert!(stdout(&run).contains("tasks: 0"));
}

#[test]
fn short_stream_stays_fully_untraced() {
    // Ten distinct tasks cannot contain a repeat of the default minimum
    // length, so the annotated stream is the input stream.
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("short.txt");
    retrace(&[
        "generate", "--kind", "periodic", "--period", "10", "--iterations", "1",
        "--out", stream.to_str().unwrap(),
    ]);
    let out_dir = dir.path().join("out");
    let run = retrace(&[
        "run", stream.to_str().unwrap(),
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0);
    assert_eq!(
        fs::read_to_string(out_dir.join("annotated.txt")).unwrap(),
        fs::read_to_string(&stream).unwrap()
    );
}

#[test]
fn high_entropy_stream_is_never_traced() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("random.txt");
    retrace(&[
        "generate", "--kind", "random", "--alphabet", "50", "--length", "1000",
        "--out", stream.to_str().unwrap(),
    ]);
    let out_dir = dir.path().join("out");
    let run = retrace(&[
        "run", stream.to_str().unwrap(),
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0);
    let annotated = fs::read_to_string(out_dir.join("annotated.txt")).unwrap();
    assert!(!annotated.contains("tbegin"));
    assert!(stdout(&run).contains("traces registered: 0"));
}

#[test]
fn replicate_agrees_and_can_dump_the_consensus_stream() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.txt");
    retrace(&[
        "generate", "--kind", "periodic", "--period", "6", "--iterations", "50",
        "--out", stream.to_str().unwrap(),
    ]);
    let out = dir.path().join("consensus.txt");
    let rep = retrace(&[
        "replicate", stream.to_str().unwrap(),
        "--nodes", "3",
        "--min-trace-length", "6",
        "--batchsize", "60",
        "--multi-scale-factor", "15",
        "--max-latency", "40",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&rep), 0, "stderr: {}", stderr(&rep));
    assert!(stdout(&rep).contains("outputs identical"));
    let events = parse_annotated_stream(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(events
        .iter()
        .any(|e| matches!(e, AnnotatedEvent::TraceBegin { .. })));
}

#[test]
fn mine_dumps_the_selected_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.txt");
    retrace(&[
        "generate", "--kind", "periodic", "--period", "3", "--iterations", "4",
        "--out", stream.to_str().unwrap(),
    ]);
    let mine = retrace(&[
        "mine", stream.to_str().unwrap(),
        "--min-trace-length", "3",
    ]);
    assert_eq!(code(&mine), 0);
    let text = stdout(&mine);
    assert!(text.contains("coverage: 12 of 12"), "got: {text}");
    assert!(text.contains("len 6 at [0, 6]"), "got: {text}");
    assert!(text.contains("step0 step1 step2"), "got: {text}");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.txt");
    retrace(&[
        "generate", "--kind", "periodic", "--period", "5", "--iterations", "20",
        "--out", good.to_str().unwrap(),
    ]);
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "task ok a:read:f\nbogus line here\n").unwrap();

    let missing = retrace(&["run", dir.path().join("absent.txt").to_str().unwrap()]);
    assert_eq!(code(&missing), 1);

    let malformed = retrace(&["run", bad.to_str().unwrap()]);
    assert_eq!(code(&malformed), 2);
    assert!(stderr(&malformed).contains("line 2"));

    let config = retrace(&[
        "run", good.to_str().unwrap(),
        "--batchsize", "1000",
        "--multi-scale-factor", "300",
    ]);
    assert_eq!(code(&config), 1);

    let one_node = retrace(&["replicate", good.to_str().unwrap(), "--nodes", "1"]);
    assert_eq!(code(&one_node), 1);

    let unknown = retrace(&["--bogus"]);
    assert_eq!(code(&unknown), 1);

    let help = retrace(&["--help"]);
    assert_eq!(code(&help), 0);
    let version = retrace(&["--version"]);
    assert_eq!(code(&version), 0);
}
