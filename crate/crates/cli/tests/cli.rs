use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use reviewlens_core::synth::{self, SynthParams};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reviewlens"))
}

fn reviewlens(args: &[&str]) -> Output {
    bin().args(args).env_remove("RUST_LOG").output().unwrap()
}

fn stdout_lines(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn stderr_error(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap()
}

fn small_corpus(dir: &Path) -> (synth::SynthCorpus, PathBuf) {
    let corpus = synth::generate(SynthParams {
        n_reviews: 600,
        n_entities: 8,
        seed: 5,
    });
    let files = synth::write_corpus(dir, &corpus, 5).unwrap();
    (corpus, files.config)
}

fn preprocessed(dir: &Path) -> (synth::SynthCorpus, String) {
    let (corpus, config) = small_corpus(dir);
    let config = config.display().to_string();
    let o = reviewlens(&["--config", &config, "preprocess"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (corpus, config)
}

fn script(dir: &Path, text: &str) -> String {
    let p = dir.join("script.txt");
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn ids(o: &Output) -> Vec<String> {
    stdout_lines(o)
        .iter()
        .map(|v| v["id"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn synth_preprocess_and_grep() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, config) = preprocessed(dir.path());
    assert!(dir.path().join("index/v1/manifest.json").is_file());

    let s = script(dir.path(), "tGrep(/portion size/i)\n");
    let o = reviewlens(&["--config", &config, "run", "--script", &s]);
    assert!(o.status.success());
    let expected: Vec<String> = corpus
        .reviews
        .iter()
        .filter(|r| r.text.to_lowercase().contains("portion size"))
        .map(|r| r.id.clone())
        .collect();
    assert!(!expected.is_empty());
    assert_eq!(ids(&o), expected);
}

#[test]
fn empty_script_prints_scope() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, config) = preprocessed(dir.path());
    let s = script(dir.path(), "\n# nothing here\n");
    let o = reviewlens(&["--config", &config, "run", "--script", &s]);
    let all: Vec<String> = corpus.reviews.iter().map(|r| r.id.clone()).collect();
    assert_eq!(ids(&o), all);

    let o = reviewlens(&[
        "--config", &config, "run", "--script", &s, "--entity", "h002",
    ]);
    let h2: Vec<String> = corpus
        .reviews
        .iter()
        .filter(|r| r.entity_id == "h002")
        .map(|r| r.id.clone())
        .collect();
    assert_eq!(ids(&o), h2);

    let o = reviewlens(&["--config", &config, "run", "--script", &s, "--path", "9.9"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sort_then_filter_script() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, config) = preprocessed(dir.path());
    let s = script(dir.path(), "tFilter(food, < 0)\ntSort(food, asc)\n");
    let o = reviewlens(&["--config", &config, "run", "--script", &s]);
    let got = ids(&o);
    let mut expected: Vec<(f64, usize, String)> = corpus
        .extractions
        .iter()
        .filter(|x| x.attribute == "food" && x.score < 0.0)
        .map(|x| {
            let pos = corpus
                .reviews
                .iter()
                .position(|r| r.id == x.review_id)
                .unwrap();
            (x.score, pos, x.review_id.clone())
        })
        .collect();
    expected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let expected: Vec<String> = expected.into_iter().map(|e| e.2).collect();
    assert_eq!(got, expected);
}

#[test]
fn parse_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let (_, config) = preprocessed(dir.path());
    let s = script(dir.path(), "tGrep(\"room\")\ntSort(food, sideways)\n");
    let o = reviewlens(&["--config", &config, "run", "--script", &s]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_error(&o);
    assert_eq!(err["error"]["line"], 2);
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .starts_with("line 2:"));
    assert!(o.stdout.is_empty());
}

#[test]
fn missing_index_asks_for_preprocess() {
    let dir = tempfile::tempdir().unwrap();
    let (_, config) = small_corpus(dir.path());
    let config = config.display().to_string();
    let s = script(dir.path(), "");
    let o = reviewlens(&["--config", &config, "run", "--script", &s]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_error(&o);
    assert_eq!(err["error"]["kind"], "runtime");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("run preprocess"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (_, config) = small_corpus(dir.path());
    let config = config.display().to_string();

    let o = reviewlens(&["--config", &config, "validate"]);
    assert!(o.status.success());
    assert_eq!(stdout_lines(&o)[0]["n_reviews"], 600);

    let o = reviewlens(&[
        "--config",
        &config,
        "--set",
        "extractions=none",
        "preprocess",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error(&o)["error"]["stage"], "config");

    let o = reviewlens(&["--config", &config, "--set", "k1=0", "validate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = reviewlens(&["--config", &config, "--set", "colour=red", "validate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = reviewlens(&["validate"]);
    assert_eq!(o.status.code(), Some(1));

    let o = reviewlens(&[
        "--config",
        &config,
        "--set",
        "reviews=absent.jsonl",
        "validate",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_schema(dir: &Path, name: &str, attrs: &[&str]) -> String {
    let p = dir.join(name);
    fs::write(&p, attrs.join("\n") + "\n").unwrap();
    p.display().to_string()
}

fn write_extractions(
    dir: &Path,
    name: &str,
    corpus: &synth::SynthCorpus,
    attrs: &[&str],
) -> String {
    let p = dir.join(name);
    let mut text = String::new();
    for x in corpus
        .extractions
        .iter()
        .filter(|x| attrs.contains(&x.attribute.as_str()))
    {
        text.push_str(&serde_json::to_string(x).unwrap());
        text.push('\n');
    }
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn iterate_keeps_versions_side_by_side() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (corpus, config) = preprocessed(d);
    let v1 = fs::read(d.join("index/v1/manifest.json")).unwrap();

    let three = ["cleanliness", "location", "staff"];
    let seven = [
        "cleanliness",
        "location",
        "staff",
        "food",
        "service",
        "room",
        "price",
    ];
    let ten = [
        "cleanliness",
        "location",
        "staff",
        "food",
        "service",
        "room",
        "price",
        "facility",
        "public-transit",
        "noise",
    ];
    let steps: [(&[&str], &str); 3] = [(&three, "three"), (&seven, "seven"), (&ten, "ten")];
    for (i, (attrs, name)) in steps.iter().enumerate() {
        let schema = write_schema(d, &format!("{name}.txt"), attrs);
        let ex = write_extractions(d, &format!("{name}.jsonl"), &corpus, attrs);
        let o = reviewlens(&[
            "--config",
            &config,
            "--set",
            &format!("extractions={ex}"),
            "iterate",
            "--schema",
            &schema,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let out = &stdout_lines(&o)[0];
        assert_eq!(out["dims"], attrs.len());
        assert!(out["index_dir"]
            .as_str()
            .unwrap()
            .ends_with(&format!("v{}", i + 2)));
        if *name == "ten" {
            assert_eq!(
                out["missing_attributes"],
                serde_json::json!(["public-transit", "noise"])
            );
        }
    }
    for v in 1..=4 {
        assert!(d.join(format!("index/v{v}/manifest.json")).is_file());
    }
    assert_eq!(fs::read(d.join("index/v1/manifest.json")).unwrap(), v1);

    // Extractions for attributes outside the new schema are rejected.
    let schema = write_schema(d, "three.txt", &three);
    let o = reviewlens(&["--config", &config, "iterate", "--schema", &schema]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!d.join("index/v5").exists());
}
