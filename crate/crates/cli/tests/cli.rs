use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use lmgec::eval::{evaluate_corpus, EvalConfig};
use lmgec::m2::{parse_m2_str, write_m2_string};
use lmgec::synthetic::{inflection_table, Corrupter, Grammar};
use lmgec::Sentence;
use tempfile::TempDir;

fn lmgec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmgec"))
        .args(args)
        .output()
        .expect("running lmgec")
}

fn lmgec_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lmgec"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("running lmgec");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}, stderr:\n{}",
        o.status.code(),
        stderr(o)
    );
}

fn python3() -> bool {
    Command::new("python3")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

fn stub_scorer() -> String {
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/stub_scorer.py");
    format!("external:cmd:python3 {}", script.display())
}

/// A synthetic corpus, the resources built from it by the CLI, and a
/// corrupted development set.
struct Fixture {
    dir: TempDir,
    clean: Vec<Sentence>,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let clean = Grammar::new(11).corpus(10_000);
        let corpus: String = clean.iter().map(|s| format!("{s}\n")).collect();
        fs::write(dir.path().join("corpus.txt"), corpus).unwrap();
        fs::write(dir.path().join("infl.txt"), inflection_table()).unwrap();

        let mut corrupter = Corrupter::new(5, 0.1);
        let dev: Vec<_> = Grammar::new(12)
            .corpus(1500)
            .iter()
            .map(|s| corrupter.corrupt(s).to_m2())
            .collect();
        fs::write(dir.path().join("dev.m2"), write_m2_string(&dev)).unwrap();

        let f = Fixture { dir, clean };
        assert_ok(&lmgec(&[
            "build-vocab",
            "--corpus",
            &f.path("corpus.txt"),
            "--out",
            &f.path("vocab.txt"),
        ]));
        assert_ok(&lmgec(&[
            "train-lm",
            "--corpus",
            &f.path("corpus.txt"),
            "--out",
            &f.path("lm.bin"),
        ]));
        f
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_owned()
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn scorer(&self) -> String {
        format!("ngram:{}", self.path("lm.bin"))
    }

    /// Resource and scorer flags for `correct` and `sweep-tau`.
    fn resources(&self) -> Vec<String> {
        vec![
            "--vocab".into(),
            self.path("vocab.txt"),
            "--inflections".into(),
            self.path("infl.txt"),
            "--scorer".into(),
            self.scorer(),
        ]
    }

    fn run(&self, head: &[&str], tail: &[&str]) -> Output {
        let res = self.resources();
        let mut args: Vec<&str> = head.to_vec();
        args.extend(res.iter().map(String::as_str));
        args.extend(tail);
        lmgec(&args)
    }
}

/// Parses the TSV data rows (header skipped) into column maps.
fn tsv_rows(text: &str) -> Vec<HashMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header").split('\t').collect();
    lines
        .map(|l| {
            header
                .iter()
                .zip(l.split('\t'))
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

#[test]
fn version_flag() {
    let o = lmgec(&["--version"]);
    assert_ok(&o);
    assert!(stdout(&o).starts_with("lmgec "));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(lmgec(&[]).status.code(), Some(2));
    assert_eq!(lmgec(&["correct", "--tau", "-1"]).status.code(), Some(2));
    assert_eq!(lmgec(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn build_vocab_is_deterministic_and_counts_types() {
    let f = Fixture::new();
    let a = lmgec(&["build-vocab", "--corpus", &f.path("corpus.txt")]);
    let b = lmgec(&["build-vocab", "--corpus", &f.path("corpus.txt")]);
    assert_ok(&a);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, fs::read(f.path("vocab.txt")).unwrap());

    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in &f.clean {
        for w in s.words() {
            *counts.entry(w).or_default() += 1;
        }
    }
    let tokens: u64 = counts.values().sum();
    assert!(tokens >= 10_000);
    assert_eq!(stdout(&a).lines().count(), counts.len());
    let listed: u64 = stdout(&a)
        .lines()
        .map(|l| l.split(' ').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(listed, tokens);

    let c = lmgec(&[
        "build-vocab",
        "--corpus",
        &f.path("corpus.txt"),
        "--min-count",
        "20",
    ]);
    assert_ok(&c);
    assert_eq!(
        stdout(&c).lines().count(),
        counts.values().filter(|&&n| n >= 20).count()
    );
}

#[test]
fn build_vocab_empty_input_warns() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let o = lmgec(&["build-vocab", "--corpus", empty.to_str().unwrap()]);
    assert_ok(&o);
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("empty vocabulary"));
}

#[test]
fn unreadable_inputs_exit_2() {
    let f = Fixture::new();
    let missing = f.path("missing.txt");
    assert_eq!(
        lmgec(&["build-vocab", "--corpus", &missing]).status.code(),
        Some(2)
    );
    assert_eq!(
        lmgec(&["train-lm", "--corpus", &missing, "--out", &f.path("x.bin")])
            .status
            .code(),
        Some(2)
    );
    let input = f.write("in.txt", "a b c\n");
    let o = lmgec(&[
        "correct",
        "--input",
        &input,
        "--vocab",
        &missing,
        "--scorer",
        &f.scorer(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.txt"));
    let o = lmgec(&[
        "correct",
        "--input",
        &input,
        "--vocab",
        &f.path("vocab.txt"),
        "--scorer",
        "ngram:/no/model",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = lmgec(&[
        "correct",
        "--input",
        &input,
        "--vocab",
        &f.path("vocab.txt"),
    ]);
    assert_eq!(o.status.code(), Some(2), "no scorer configured");
    let o = lmgec(&["evaluate", "--hyp", &input, "--gold", &missing]);
    assert_eq!(o.status.code(), Some(2));
    let o = lmgec(&[
        "correct",
        "--input",
        &input,
        "--vocab",
        &f.path("vocab.txt"),
        "--scorer",
        &f.scorer(),
        "--output",
        "/no/such/dir/out.txt",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupt_model_exits_3() {
    let f = Fixture::new();
    let bad = f.write("bad.bin", "not a model");
    let input = f.write("in.txt", "a b c\n");
    let o = lmgec(&[
        "correct",
        "--input",
        &input,
        "--vocab",
        &f.path("vocab.txt"),
        "--scorer",
        &format!("ngram:{bad}"),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn scorer_spawn_failure_exits_3() {
    let f = Fixture::new();
    let input = f.write("in.txt", "a b c\n");
    let o = lmgec(&[
        "correct",
        "--input",
        &input,
        "--vocab",
        &f.path("vocab.txt"),
        "--scorer",
        "external:cmd:/no/such/scorer",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = lmgec(&[
        "score",
        "--input",
        &input,
        "--scorer",
        "external:tcp:127.0.0.1:1",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn tau_off_echoes_input() {
    let f = Fixture::new();
    // Irregular spacing is kept verbatim.
    let mut text: String = f.clean[..99].iter().map(|s| format!("{s}\n")).collect();
    text.push_str("  the  cat   sat \n");
    let input = f.write("in.txt", &text);
    let o = f.run(&["correct", "--input", &input, "--tau", "off"], &[]);
    assert_ok(&o);
    assert_eq!(stdout(&o), text);
}

#[test]
fn correct_is_line_aligned_deterministic_and_parallel_safe() {
    let f = Fixture::new();
    let m2 = parse_m2_str(&fs::read_to_string(f.path("dev.m2")).unwrap()).unwrap();
    let text: String = m2
        .iter()
        .take(100)
        .map(|e| format!("{}\n", e.source))
        .collect();
    assert_eq!(text.lines().count(), 100);
    let input = f.write("in.txt", &text);
    let one = f.run(&["correct", "--input", &input, "--tau", "2"], &[]);
    let again = f.run(&["correct", "--input", &input, "--tau", "2"], &[]);
    let four = f.run(
        &["correct", "--input", &input, "--tau", "2", "--jobs", "4"],
        &[],
    );
    assert_ok(&one);
    assert_eq!(stdout(&one).lines().count(), 100);
    assert_eq!(one.stdout, again.stdout);
    assert_eq!(one.stdout, four.stdout);
    assert_ne!(stdout(&one), text, "tau 2 should change something");
}

#[test]
fn edit_log_margins_hold() {
    let f = Fixture::new();
    let dev = f.path("dev.m2");
    let log = f.path("edits.jsonl");
    let out = f.path("out.txt");
    let o = f.run(
        &[
            "correct",
            "--input",
            &dev,
            "--tau",
            "1.5",
            "--edit-log",
            &log,
            "--output",
            &out,
        ],
        &[],
    );
    assert_ok(&o);
    let corrected: Vec<String> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect();
    let records: Vec<serde_json::Value> = fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), corrected.len());
    let mut edits = 0;
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r["index"], i);
        assert_eq!(r["corrected"], corrected[i].as_str());
        let mut current = r["source_score"].as_f64().unwrap();
        for e in r["edits"].as_array().unwrap() {
            let before = e["score_before"].as_f64().unwrap();
            let after = e["score_after"].as_f64().unwrap();
            assert_eq!(before, current);
            assert!(after > before + 1.5, "{after} vs {before}");
            current = after;
            edits += 1;
        }
    }
    assert!(edits > 0);
}

#[test]
fn stub_scorer_prefers_know() {
    if !python3() {
        eprintln!("python3 not found; skipping");
        return;
    }
    let dir = TempDir::new().unwrap();
    let vocab = dir.path().join("vocab.txt");
    fs::write(
        &vocab,
        "They 1\nall 1\nknow 1\nknows 1\nknew 1\nwhere 1\nthe 1\nconference 1\nis 1\nand 1\nwhen 1\n. 1\n",
    )
    .unwrap();
    let infl = dir.path().join("infl.txt");
    fs::write(&infl, "know V: knew, known, knowing, knows\n").unwrap();
    let o = lmgec_stdin(
        &[
            "correct",
            "--vocab",
            vocab.to_str().unwrap(),
            "--inflections",
            infl.to_str().unwrap(),
            "--scorer",
            &stub_scorer(),
            "--tau",
            "2",
        ],
        "They all knows where the conference is and when .\n",
    );
    assert_ok(&o);
    assert_eq!(
        stdout(&o),
        "They all know where the conference is and when .\n"
    );
}

#[test]
fn per_sentence_scorer_errors_pass_through() {
    if !python3() {
        eprintln!("python3 not found; skipping");
        return;
    }
    let dir = TempDir::new().unwrap();
    let vocab = dir.path().join("vocab.txt");
    fs::write(&vocab, "know 1\nknows 1\n").unwrap();
    let infl = dir.path().join("infl.txt");
    fs::write(&infl, "know V: knew, known, knowing, knows\n").unwrap();
    let input = "we knows it\nthe broken knows\nthey knows\n";
    let o = lmgec_stdin(
        &[
            "correct",
            "--vocab",
            vocab.to_str().unwrap(),
            "--inflections",
            infl.to_str().unwrap(),
            "--scorer",
            &stub_scorer(),
        ],
        input,
    );
    assert_ok(&o);
    assert_eq!(stdout(&o), "we know it\nthe broken knows\nthey know\n");
    assert!(
        stderr(&o).contains("1 of 3 sentences passed through"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn evaluate_trivial_cases() {
    let f = Fixture::new();
    let m2_text = fs::read_to_string(f.path("dev.m2")).unwrap();
    let m2 = parse_m2_str(&m2_text).unwrap();
    let sources: String = m2.iter().map(|e| format!("{}\n", e.source)).collect();
    let src = f.write("src.txt", &sources);
    let o = lmgec(&["evaluate", "--hyp", &src, "--gold", &f.path("dev.m2")]);
    assert_ok(&o);
    let row = &tsv_rows(&stdout(&o))[0];
    assert_eq!(row["tp"], "0");
    assert_eq!(row["fp"], "0");
    assert_eq!(row["P"], "1.0000");
    assert_eq!(row["R"], "0.0000");

    // Adjacent gold edits fall inside one atomic hypothesis edit, so only
    // entries whose gold edits are separated are expressible.
    let expressible: Vec<_> = m2
        .into_iter()
        .filter(|e| {
            e.annotations[0]
                .edits
                .windows(2)
                .all(|w| w[0].end < w[1].start)
        })
        .collect();
    let gold = f.write("expressible.m2", &write_m2_string(&expressible));
    let clean: String = expressible
        .iter()
        .map(|e| {
            let edits = &e.annotations[0].edits;
            format!("{}\n", lmgec::apply_edits(&e.source, edits).unwrap())
        })
        .collect();
    let gold_hyp = f.write("clean.txt", &clean);
    let o = lmgec(&["evaluate", "--hyp", &gold_hyp, "--gold", &gold]);
    assert_ok(&o);
    let row = &tsv_rows(&stdout(&o))[0];
    assert_eq!(row["R"], "1.0000");
    assert_eq!(row["fn"], "0");
}

#[test]
fn evaluate_matches_library_and_rejects_mismatch() {
    let f = Fixture::new();
    let dev = f.path("dev.m2");
    let hyp = f.path("hyp.txt");
    assert_ok(&f.run(
        &["correct", "--input", &dev, "--tau", "0", "--output", &hyp],
        &[],
    ));
    let per = f.path("per.jsonl");
    let o = lmgec(&[
        "evaluate",
        "--hyp",
        &hyp,
        "--gold",
        &dev,
        "--per-sentence",
        &per,
        "--beta",
        "1",
    ]);
    assert_ok(&o);
    let row = &tsv_rows(&stdout(&o))[0];

    let m2 = parse_m2_str(&fs::read_to_string(&dev).unwrap()).unwrap();
    let sources: Vec<Sentence> = m2.iter().map(|e| e.source.clone()).collect();
    let golds: Vec<_> = m2.iter().map(|e| e.annotations.clone()).collect();
    let hyps: Vec<Sentence> = fs::read_to_string(&hyp)
        .unwrap()
        .lines()
        .map(Sentence::from_tokenized)
        .collect();
    let config = EvalConfig {
        beta: 1.0,
        ..EvalConfig::default()
    };
    let report = evaluate_corpus(&sources, &hyps, &golds, &config).unwrap();
    assert_eq!(row["tp"], report.counts.tp.to_string());
    assert_eq!(row["fp"], report.counts.fp.to_string());
    assert_eq!(row["fn"], report.counts.fn_.to_string());
    assert_eq!(row["F1"], format!("{:.4}", report.f_score));
    assert!(report.counts.tp > 0 && report.counts.fp > 0);
    assert_eq!(
        fs::read_to_string(&per).unwrap().lines().count(),
        sources.len()
    );

    let short = f.write("short.txt", "one line\n");
    assert_eq!(
        lmgec(&["evaluate", "--hyp", &short, "--gold", &dev])
            .status
            .code(),
        Some(2)
    );
}

/// Columns of one sweep row that identify it.
fn sweep_key(row: &HashMap<String, String>) -> (String, String, String, String, String) {
    (
        row["tau"].clone(),
        row["tp"].clone(),
        row["fp"].clone(),
        row["fn"].clone(),
        row["edits"].clone(),
    )
}

#[test]
fn sweep_default_grid_and_regression() {
    let f = Fixture::new();
    let o = f.run(
        &["sweep-tau", "--dev", &f.path("dev.m2"), "--jobs", "2"],
        &[],
    );
    assert_ok(&o);
    let rows = tsv_rows(&stdout(&o));
    assert_eq!(rows.len(), 5);
    let taus: HashSet<&str> = rows.iter().map(|r| r["tau"].as_str()).collect();
    assert_eq!(taus, HashSet::from(["0", "2", "4", "6", "8"]));
    let best = rows.last().unwrap();
    let f_of = |r: &HashMap<String, String>| r["F0.5"].parse::<f64>().unwrap();
    assert!(rows.iter().all(|r| f_of(r) <= f_of(best)));

    let mut keys: Vec<_> = rows.iter().map(sweep_key).collect();
    keys.sort_by(|a, b| {
        a.0.parse::<f64>()
            .unwrap()
            .total_cmp(&b.0.parse::<f64>().unwrap())
    });
    let pinned: Vec<(&str, &str, &str, &str, &str)> = PINNED_SWEEP.to_vec();
    let keys: Vec<(&str, &str, &str, &str, &str)> = keys
        .iter()
        .map(|k| {
            (
                k.0.as_str(),
                k.1.as_str(),
                k.2.as_str(),
                k.3.as_str(),
                k.4.as_str(),
            )
        })
        .collect();
    assert_eq!(keys, pinned);
}

/// (tau, tp, fp, fn, edits) for the fixture development set.
const PINNED_SWEEP: [(&str, &str, &str, &str, &str); 5] = [
    ("0", "23", "215", "112", "467"),
    ("2", "26", "127", "109", "204"),
    ("4", "34", "52", "101", "96"),
    ("6", "31", "23", "104", "56"),
    ("8", "27", "5", "108", "33"),
];

#[test]
fn single_tau_sweep_equals_correct_then_evaluate() {
    let f = Fixture::new();
    let dev = f.path("dev.m2");
    let o = f.run(&["sweep-tau", "--dev", &dev, "--taus", "3"], &[]);
    assert_ok(&o);
    let rows = tsv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);

    let hyp = f.path("hyp.txt");
    assert_ok(&f.run(
        &["correct", "--input", &dev, "--tau", "3", "--output", &hyp],
        &[],
    ));
    let e = lmgec(&["evaluate", "--hyp", &hyp, "--gold", &dev]);
    assert_ok(&e);
    let eval_row = &tsv_rows(&stdout(&e))[0];
    for col in ["tp", "fp", "fn", "P", "R", "F0.5"] {
        assert_eq!(rows[0][col], eval_row[col], "{col}");
    }
}

#[test]
fn config_dump_round_trips_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[search]\ntau = 6.0\nmax_passes = 2\n[eval]\nbeta = 1.0\n[run]\njobs = 3\n[resources]\nvocab = \"v.txt\"\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = lmgec(&["--config", cfg, "correct", "--config-dump"]);
    assert_ok(&o);
    let dumped = stdout(&o);
    assert!(dumped.contains("tau = 6.0"));
    assert!(dumped.contains("max_passes = 2"));
    assert!(dumped.contains("jobs = 3"));

    let o = lmgec(&[
        "--config",
        cfg,
        "correct",
        "--tau",
        "off",
        "--jobs",
        "1",
        "--config-dump",
    ]);
    assert_ok(&o);
    let overridden = stdout(&o);
    assert!(overridden.contains("tau = \"off\""));
    assert!(overridden.contains("jobs = 1"));
    assert!(overridden.contains("max_passes = 2"));

    // Feeding a dump back in reproduces it.
    let again = dir.path().join("again.toml");
    fs::write(&again, &overridden).unwrap();
    let o = lmgec(&[
        "--config",
        again.to_str().unwrap(),
        "correct",
        "--config-dump",
    ]);
    assert_ok(&o);
    assert_eq!(stdout(&o), overridden);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[search]\ntau = -2.0\n").unwrap();
    assert_eq!(
        lmgec(&["--config", bad.to_str().unwrap(), "correct"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn score_and_serve_agree() {
    let f = Fixture::new();
    let text: String = f.clean[..5].iter().map(|s| format!("{s}\n")).collect();
    let input = f.write("in.txt", &text);
    let o = lmgec(&["score", "--input", &input, "--scorer", &f.scorer()]);
    assert_ok(&o);
    let scores: Vec<f64> = stdout(&o)
        .lines()
        .map(|l| l.split('\t').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(scores.len(), 5);
    assert!(scores.iter().all(|s| *s < 0.0));

    let mut requests = String::from("{\"id\":0,\"tokens\":[]}\nnot json\n");
    for (i, s) in f.clean[..5].iter().enumerate() {
        requests.push_str(&format!(
            "{}\n",
            serde_json::json!({"id": i + 1, "tokens": s.to_words()})
        ));
    }
    let o = lmgec_stdin(&["serve-ngram", "--model", &f.path("lm.bin")], &requests);
    assert_ok(&o);
    let responses: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(responses.len(), 7);
    assert_eq!(responses[0]["id"], 0);
    assert_eq!(responses[0]["logprob"], 0.0);
    assert_eq!(responses[1]["id"], -1);
    for (i, s) in scores.iter().enumerate() {
        assert_eq!(responses[i + 2]["id"], i + 1);
        assert_eq!(responses[i + 2]["logprob"].as_f64().unwrap(), *s);
    }
}

#[test]
fn correct_through_served_model_matches_in_process() {
    let f = Fixture::new();
    let text: String = f.clean[..20].iter().map(|s| format!("{s}\n")).collect();
    let input = f.write("in.txt", &text);
    let bin = env!("CARGO_BIN_EXE_lmgec");
    let external = format!(
        "external:cmd:{bin} serve-ngram --model {}",
        f.path("lm.bin")
    );
    let direct = f.run(&["correct", "--input", &input, "--tau", "0"], &[]);
    let res = f.resources();
    let mut args: Vec<&str> = vec!["correct", "--input", &input, "--tau", "0"];
    args.extend(res[..4].iter().map(String::as_str));
    args.extend(["--scorer", &external]);
    let served = lmgec(&args);
    assert_ok(&direct);
    assert_ok(&served);
    assert_eq!(direct.stdout, served.stdout);
}
