//! Runs the `hashseg` binary end to end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const CORPUS: &str = "aamir\t120\nkhan\t150\nfangtasy\t90\nisland\t110\nbeam\t40\nsearch\t55\n\
vamos\t30\nequipo\t25\na\t30\nis\t40\nland\t35\nfan\t25\n";

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        ws.write("corpus.tsv", CORPUS);
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str], stdin: &str) -> Output {
        let corpus = self.path("corpus.tsv");
        let mut full = vec!["--corpus", corpus.to_str().unwrap()];
        full.extend_from_slice(args);
        self.run_bare(&full, stdin)
    }

    fn run_bare(&self, args: &[&str], stdin: &str) -> Output {
        let mut child = Command::new(env!("CARGO_BIN_EXE_hashseg"))
            .args(args)
            .current_dir(self.dir.path())
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
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(text: &str, i: usize) -> Vec<String> {
    text.lines()
        .map(|l| l.split('\t').nth(i).unwrap_or_default().to_string())
        .collect()
}

#[test]
fn segment_from_stdin_is_deterministic() {
    let ws = Workspace::new();
    let input = "aamirkhan\n#FangtasyIsland\n\nbeamsearch\n";
    let a = ws.run(&["segment"], input);
    let b = ws.run(&["segment"], input);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert_eq!(
        column(&out, 0),
        ["aamirkhan", "#FangtasyIsland", "beamsearch"]
    );
    assert_eq!(
        column(&out, 1),
        ["aamir khan", "Fangtasy Island", "beam search"]
    );
    for s in column(&out, 2).iter().chain(&column(&out, 3)) {
        assert!(s.parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn segment_file_with_topk_rows() {
    let ws = Workspace::new();
    let input = ws.write("tags.txt", "aamirkhan\nbeamsearch\n");
    let o = ws.run(&["--topk", "3", "segment", input.to_str().unwrap()], "");
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 6);
    assert_eq!(column(&out, 1)[0], "aamir khan");
}

#[test]
fn bad_lines_are_skipped_unless_strict() {
    let ws = Workspace::new();
    let input = "aamirkhan\nx\nbeamsearch\n";
    let lenient = ws.run(&["segment"], input);
    assert_eq!(lenient.status.code(), Some(0));
    assert_eq!(stdout(&lenient).lines().count(), 2);
    let strict = ws.run(&["--strict", "segment"], input);
    assert_eq!(strict.status.code(), Some(1));
    assert_eq!(stdout(&strict).lines().count(), 2);
    assert!(String::from_utf8_lossy(&strict.stderr).contains("line 2"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let ws = Workspace::new();
    let o = ws.run(&["--alpha", "1.5", "segment"], "beamsearch\n");
    assert_eq!(o.status.code(), Some(2));
    let o = ws.run_bare(&["--corpus", "missing.tsv", "segment"], "beamsearch\n");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("reading corpus missing.tsv: No such file"),
        "{err}"
    );
    let o = ws.run_bare(&["segment"], "beamsearch\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no segmenter configured"));
}

#[test]
fn tune_writes_a_loadable_config() {
    let ws = Workspace::new();
    let dev = ws.write(
        "dev.tsv",
        "aamirkhan\taamir khan\nbeamsearch\tbeam search\nfangtasyisland\tfangtasy island\n",
    );
    let conf = ws.path("tuned.conf");
    let report = ws.path("report.json");
    let o = ws.run(
        &[
            "--alpha-grid",
            "0,0.5,1",
            "--beta-grid",
            "0,1",
            "tune",
            dev.to_str().unwrap(),
            "--write-config",
            conf.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ],
        "",
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1 + 6 + 1);
    assert!(out.lines().last().unwrap().starts_with("selected alpha="));
    let fragment = std::fs::read_to_string(&conf).unwrap();
    assert!(fragment.contains("alpha = ") && fragment.contains("beta = "));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["points"].as_array().unwrap().len(), 6);
    assert_eq!(json["f1"], 1.0);

    let again = ws.run(
        &["--config", conf.to_str().unwrap(), "segment"],
        "aamirkhan\n",
    );
    assert!(again.status.success());
}

#[test]
fn evaluate_prints_metrics_table() {
    let ws = Workspace::new();
    let gold = ws.write(
        "gold.tsv",
        "AamirKhan\tAamir Khan\nbeamsearch\tbeam search\nbroken line\nfangtasyisland\tfangtasy island\n",
    );
    let json = ws.path("eval.json");
    let o = ws.run(
        &[
            "--oracle-n",
            "1,2",
            "evaluate",
            gold.to_str().unwrap(),
            "--report",
            json.to_str().unwrap(),
        ],
        "",
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("final@1") && rows[1].contains("100.00"));
    assert!(rows[3].starts_with("segmenter@2"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["skipped_lines"].as_array().unwrap().len(), 1);

    let strict = ws.run(&["--strict", "evaluate", gold.to_str().unwrap()], "");
    assert_eq!(strict.status.code(), Some(2));
}

fn pipeline(ws: &Workspace, method: &str, tweets: &Path, log: Option<&Path>) -> Output {
    let table = ws.write(
        "table.tsv",
        "vamos equipo\tlet's go team\nya\tnow\ngol!\tgoal!\n",
    );
    let mut args = vec![
        "--method".to_string(),
        method.to_string(),
        "--phrase-table".to_string(),
        table.display().to_string(),
        "pipeline".to_string(),
        tweets.display().to_string(),
    ];
    if let Some(l) = log {
        args.push("--log".into());
        args.push(l.display().to_string());
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ws.run(&refs, "")
}

#[test]
fn pipeline_methods_and_log() {
    let ws = Workspace::new();
    let tweets = ws.write("tweets.txt", "gol! #vamosequipo ya\nsin nada\n");
    let t = pipeline(&ws, "t", &tweets, None);
    assert_eq!(stdout(&t), "goal! #vamosequipo now\nsin nada\n");
    let cmt = pipeline(&ws, "cmt", &tweets, None);
    assert_eq!(stdout(&cmt), "goal! #let'sgoteam now\nsin nada\n");
    let log = ws.path("log.jsonl");
    let cmts = pipeline(&ws, "cmts", &tweets, Some(&log));
    assert!(cmts.status.success());
    assert_eq!(stdout(&cmts), "goal! #let's go team now\nsin nada\n");

    let entries: Vec<serde_json::Value> = std::fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["method"], "cmts");
    assert_eq!(entries[0]["code_mixed"], "gol! #let'sgoteam ya");
    assert_eq!(entries[0]["hashtags"][0]["segmented"], "vamos equipo");
    assert_eq!(entries[0]["hashtags"][0]["spaced"], "#let's go team");
    assert!(entries[1]["hashtags"].as_array().unwrap().is_empty());
}

#[test]
fn external_segmenter_through_reference_server() {
    let ws = Workspace::new();
    let endpoint = format!(
        "stdio:{} score --corpus {}",
        env!("CARGO_BIN_EXE_hashseg-refserver"),
        ws.path("corpus.tsv").display()
    );
    let local = ws.run(&["segment"], "aamirkhan\nbeamsearch\n");
    let remote = ws.run(
        &[
            "--segmenter-endpoint",
            &endpoint,
            "--reranker-endpoint",
            &endpoint,
            "segment",
        ],
        "aamirkhan\nbeamsearch\n",
    );
    assert!(
        remote.status.success(),
        "{}",
        String::from_utf8_lossy(&remote.stderr)
    );
    assert_eq!(local.stdout, remote.stdout);
}
