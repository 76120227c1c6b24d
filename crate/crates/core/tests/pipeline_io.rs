use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use reasonsynth_core::pipeline::{
    generate_corpus, read_corpus, split_corpus, AmbiguityPolicy, CorpusConfig, CurriculumStage, GeneratorConfig,
    OutputFormat, SplitFractions,
};
use reasonsynth_core::{TaskKind, Token};
use sha2::{Digest, Sha256};

type Pairs = Vec<(Vec<Token>, Vec<Token>)>;

fn stages() -> Vec<CurriculumStage> {
    let mut mix = CurriculumStage::new("mix", GeneratorConfig::default(), TaskKind::Mix, 600);
    mix.task_weights.insert(TaskKind::InductV2, 1.0 / 3.0);
    vec![
        mix,
        CurriculumStage::new("rw", GeneratorConfig::default(), TaskKind::RewriteMultistep, 200),
        CurriculumStage::new("rw1", GeneratorConfig::with_vocab_size(1000), TaskKind::Rewrite, 200),
    ]
}

fn pairs(path: &Path) -> Pairs {
    read_corpus(path)
        .unwrap()
        .examples
        .into_iter()
        .map(|e| (e.source, e.target))
        .collect()
}

fn config(format: OutputFormat) -> CorpusConfig {
    CorpusConfig {
        seed: 11,
        stages: stages(),
        format,
        ..Default::default()
    }
}

#[test]
fn text_and_jsonl_hold_the_same_examples() {
    let (t, j) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mt = generate_corpus(&config(OutputFormat::Text), t.path(), None).unwrap();
    let mj = generate_corpus(&config(OutputFormat::Jsonl), j.path(), None).unwrap();
    assert_eq!(mt.n_examples(), 1000);
    assert_eq!(mj.n_examples(), 1000);

    let text = read_corpus(t.path()).unwrap();
    let json = read_corpus(j.path()).unwrap();
    assert!(text.json.is_none() && json.json.is_some());
    let key = |e: &reasonsynth_core::pipeline::LoadedExample| {
        (e.position, e.task, e.stage.clone(), e.source.clone(), e.target.clone())
    };
    let a: Vec<_> = text.examples.iter().map(key).collect();
    let b: Vec<_> = json.examples.iter().map(key).collect();
    assert_eq!(a, b);
    let positions: Vec<u64> = a.iter().map(|k| k.0).collect();
    assert_eq!(positions, (0..1000).collect::<Vec<_>>());
}

#[test]
fn manifest_digests_match_files() {
    let d = tempfile::tempdir().unwrap();
    let manifest = generate_corpus(&config(OutputFormat::Text), d.path(), None).unwrap();
    let mut n = 0;
    for stage in &manifest.stages {
        for f in &stage.files {
            let bytes = std::fs::read(d.path().join(&f.path)).unwrap();
            assert_eq!(bytes.len() as u64, f.bytes);
            assert_eq!(hex::encode(Sha256::digest(&bytes)), f.sha256, "{}", f.path);
            n += 1;
        }
    }
    assert_eq!(n, 6);
}

#[test]
fn stage_counts_add_up() {
    let d = tempfile::tempdir().unwrap();
    let manifest = generate_corpus(&config(OutputFormat::Jsonl), d.path(), None).unwrap();
    let corpus = read_corpus(d.path()).unwrap();
    for s in &manifest.stages {
        let mine: Vec<_> = corpus
            .examples
            .iter()
            .filter(|e| e.stage.as_deref() == Some(s.stage.stage_name.as_str()))
            .collect();
        assert_eq!(mine.len() as u64, s.n_examples);
        let src: u64 = mine.iter().map(|e| e.source.len() as u64).sum();
        let tgt: u64 = mine.iter().map(|e| e.target.len() as u64).sum();
        assert_eq!((src, tgt), (s.source_tokens, s.target_tokens));
        let mut counts = BTreeMap::new();
        for e in &mine {
            *counts.entry(e.task).or_insert(0u64) += 1;
        }
        assert_eq!(counts, s.task_counts);
        let unique: HashSet<_> = mine.iter().map(|e| (&e.source, &e.target)).collect();
        assert_eq!(
            unique.len(),
            mine.len(),
            "duplicates survived in {}",
            s.stage.stage_name
        );
    }
}

#[test]
fn split_has_no_leakage() {
    let d = tempfile::tempdir().unwrap();
    let corpus = d.path().join("corpus");
    let parts = d.path().join("parts");
    generate_corpus(&config(OutputFormat::Text), &corpus, None).unwrap();
    let fractions = SplitFractions::new(0.8, 0.1, 0.1).unwrap();
    let report = split_corpus(&corpus, &parts, &fractions, 3).unwrap();
    assert_eq!(report.counts.values().sum::<u64>(), 1000);

    let all: Vec<Pairs> = ["train", "valid", "test"]
        .iter()
        .map(|p| pairs(&parts.join(format!("{p}.src"))))
        .collect();
    assert!(all.iter().all(|p| !p.is_empty()));
    let mut seen = HashSet::new();
    for part in &all {
        for pair in part {
            assert!(seen.insert(pair.clone()), "example in two partitions");
        }
    }
    let original: HashSet<_> = pairs(&corpus).into_iter().collect();
    assert_eq!(seen, original);

    let again = d.path().join("again");
    split_corpus(&corpus, &again, &fractions, 3).unwrap();
    for p in ["train", "valid", "test"] {
        let f = format!("{p}.tgt");
        assert_eq!(
            std::fs::read(parts.join(&f)).unwrap(),
            std::fs::read(again.join(&f)).unwrap()
        );
    }
}

#[test]
fn token_budget_lands_within_two_percent() {
    for (task, budget) in [(TaskKind::Mix, 400_000u64), (TaskKind::Rewrite, 150_000)] {
        let mut stage = CurriculumStage::new(task.name(), GeneratorConfig::default(), task, 0);
        stage.n_examples = None;
        stage.token_budget = Some(budget);
        let cfg = CorpusConfig {
            seed: 4,
            stages: vec![stage],
            ..Default::default()
        };
        let d = tempfile::tempdir().unwrap();
        let m = generate_corpus(&cfg, d.path(), None).unwrap();
        let s = &m.stages[0];
        let got = (s.source_tokens + s.target_tokens) as f64;
        let err = (got - budget as f64).abs() / budget as f64;
        assert!(err <= 0.02, "{task}: {got} tokens for a budget of {budget}");
    }
}

#[test]
fn unique_only_keeps_single_solution_examples() {
    let stage = CurriculumStage::new("abd", GeneratorConfig::default(), TaskKind::Abduct, 300);
    let cfg = CorpusConfig {
        seed: 9,
        stages: vec![stage],
        format: OutputFormat::Jsonl,
        ambiguity: AmbiguityPolicy::UniqueOnly,
        ..Default::default()
    };
    let d = tempfile::tempdir().unwrap();
    generate_corpus(&cfg, d.path(), None).unwrap();
    let corpus = read_corpus(d.path()).unwrap();
    assert_eq!(corpus.examples.len(), 300);
    assert!(corpus
        .examples
        .iter()
        .all(|e| e.n_solutions == Some(1) && e.truncated == Some(false)));
}

#[test]
fn corrupt_line_is_a_parse_error() {
    let d = tempfile::tempdir().unwrap();
    generate_corpus(&config(OutputFormat::Text), d.path(), None).unwrap();
    let m = read_corpus(d.path()).unwrap().manifest.unwrap();
    let file = m.stages[0].files.iter().find(|f| f.path.ends_with(".src")).unwrap();
    let src = d.path().join(&file.path);
    let mut text = std::fs::read_to_string(&src).unwrap();
    text.insert_str(0, "x ");
    std::fs::write(&src, text).unwrap();
    let err = read_corpus(d.path()).err().expect("corrupt corpus must not load");
    assert!(matches!(err, reasonsynth_core::Error::Parse { .. }), "{err}");
}
