// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use multiview::corpus::{build_vocabulary, flatten_corpus};
use multiview::eval::{
    evaluate_run, hits_at_k, load_qrels, load_queries, load_run, mrr_at_k, recall_at_k, run_eval, write_run, Metric,
    Qrels, Retrieve, Run,
};
use multiview::pipeline::{sweep, RetrievalConfig};
use multiview::ranker::RankedList;
use multiview::scorer::{build_training_samples, NgramConfig, NgramScorer, SampleConfig};
use multiview::synthetic::{generate, SyntheticConfig};
use multiview::{Error, FmIndex, Result, WordTokenizer};
use proptest::prelude::*;

fn list(ids: &[String]) -> RankedList {
    RankedList::from_scores(ids.iter().enumerate().map(|(i, id)| (id.clone(), -(i as f64))))
}

proptest! {
    #[test]
    fn metrics_grow_with_k(
        ranking in prop::collection::btree_set(0u8..30, 0..20),
        relevant in prop::collection::btree_set(0u8..30, 1..6),
        shuffle in any::<u64>(),
    ) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut ids: Vec<String> = ranking.iter().map(|i| format!("p{i}")).collect();
        ids.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle));
        let ranked = list(&ids);
        let rel: BTreeSet<String> = relevant.iter().map(|i| format!("p{i}")).collect();
        let mut prev = (0.0, 0.0, 0.0);
        for k in 1..25 {
            let h = hits_at_k(&ranked, &rel, k);
            let r = recall_at_k(&ranked, &rel, k).unwrap();
            let m = mrr_at_k(&ranked, &rel, k);
            prop_assert!(h >= prev.0 && r >= prev.1 && m >= prev.2);
            prop_assert!((0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&m));
            if r == 1.0 {
                prop_assert_eq!(h, 1.0);
            }
            prev = (h, r, m);
        }
    }
}

struct Oracle(BTreeMap<String, Vec<String>>);

impl Retrieve for Oracle {
    fn retrieve(&self, query: &str) -> Result<RankedList> {
        match self.0.get(query) {
            Some(ids) => Ok(list(ids)),
            None => Err(Error::InvalidArgument("no such query".into())),
        }
    }
}

fn qrels(pairs: &[(&str, &str)]) -> Qrels {
    let mut q = Qrels::new();
    for (a, b) in pairs {
        q.entry(a.to_string()).or_default().insert(b.to_string());
    }
    q
}

#[test]
fn perfect_and_half_runs() {
    let engine = Oracle(BTreeMap::from([
        ("find a".to_string(), vec!["a".to_string()]),
        ("find b".to_string(), vec!["x".to_string()]),
    ]));
    let queries = vec![("q1".to_string(), "find a".to_string())];
    let (_, report) = run_eval(&queries, &qrels(&[("q1", "a")]), &engine, &Metric::defaults(), 2).unwrap();
    assert!(report.means.values().all(|&v| v == 1.0));

    let queries = vec![
        ("q1".to_string(), "find a".to_string()),
        ("q2".to_string(), "find b".to_string()),
        ("q3".to_string(), "unjudged".to_string()),
        ("q4".to_string(), "unknown query".to_string()),
    ];
    let judged = qrels(&[("q1", "a"), ("q2", "b"), ("q4", "a")]);
    let (run, report) = run_eval(&queries, &judged, &engine, &[Metric::Hits(5)], 3).unwrap();
    assert_eq!(report.evaluated, 3);
    assert_eq!(report.skipped_no_qrels, ["q3"]);
    assert!((report.mean(Metric::Hits(5)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!(run["q4"].is_empty());
    assert!(!run.contains_key("q3"));

    let two = vec![
        ("q1".to_string(), "find a".to_string()),
        ("q2".to_string(), "find b".to_string()),
    ];
    let (_, report) = run_eval(&two, &judged, &engine, &[Metric::Hits(5)], 1).unwrap();
    assert_eq!(report.mean(Metric::Hits(5)), Some(0.5));
    assert!(report.to_table().contains("hits@5"));
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["means"]["hits@5"], 0.5);
}

#[test]
fn worker_count_does_not_change_results() {
    let engine = Oracle(
        (0..40)
            .map(|i| (format!("query {i}"), vec![format!("p{}", i % 7), format!("p{}", i % 5)]))
            .collect(),
    );
    let queries: Vec<(String, String)> = (0..40).map(|i| (format!("q{i:02}"), format!("query {i}"))).collect();
    let judged: Qrels = (0..40)
        .map(|i| (format!("q{i:02}"), BTreeSet::from([format!("p{}", i % 5)])))
        .collect();
    let (a, ra) = run_eval(&queries, &judged, &engine, &Metric::defaults(), 1).unwrap();
    let (b, rb) = run_eval(&queries, &judged, &engine, &Metric::defaults(), 8).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
}

#[test]
fn tsv_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut run = Run::new();
    run.insert(
        "q1".into(),
        RankedList::from_scores([("p2".to_string(), 0.5), ("p1".to_string(), 0.75)]),
    );
    run.insert("q2".into(), RankedList::from_scores([("p3".to_string(), 1.0)]));
    let path = dir.path().join("run.tsv");
    write_run(&path, &run).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text,
        "q1\tp1\t1\t0.750000\nq1\tp2\t2\t0.500000\nq2\tp3\t1\t1.000000\n"
    );
    assert_eq!(load_run(&path).unwrap(), run);

    let qpath = dir.path().join("queries.tsv");
    std::fs::write(&qpath, "q1\twho sings it\nq2\tlinda davis\n").unwrap();
    assert_eq!(load_queries(&qpath).unwrap()[1], ("q2".to_string(), "linda davis".to_string()));
    std::fs::write(&qpath, "q1\ta\nq1\tb\n").unwrap();
    assert!(matches!(load_queries(&qpath), Err(Error::Parse { line: 2, .. })));

    let rpath = dir.path().join("qrels.tsv");
    std::fs::write(&rpath, "q1\tp1\nq1\tp2\nq2\tp3\n").unwrap();
    let q = load_qrels(&rpath).unwrap();
    assert_eq!(q["q1"].len(), 2);
    std::fs::write(&rpath, "q1 p1\n").unwrap();
    assert!(matches!(load_qrels(&rpath), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn empty_run_scores_zero() {
    let report = evaluate_run(&Run::new(), &qrels(&[("q1", "a"), ("q2", "b")]), &Metric::defaults());
    assert_eq!(report.evaluated, 2);
    assert_eq!(report.missing_from_run.len(), 2);
    assert!(report.means.values().all(|&v| v == 0.0));
}

#[test]
fn beam_sweep_rows() {
    let bench = generate(&SyntheticConfig {
        entities: 3,
        attributes: 2,
        topics: 2,
        test_queries: 6,
        seed: 3,
    });
    let vocab = build_vocabulary(&bench.corpus, &WordTokenizer);
    let index = FmIndex::build(&flatten_corpus(&bench.corpus, &vocab), vocab.clone()).unwrap();
    let samples = build_training_samples(&bench.train_pairs, &bench.corpus, &vocab, &SampleConfig::default(), 3).unwrap();
    let scorer = NgramScorer::train(&samples, &vocab, NgramConfig::default()).unwrap();
    let rows = sweep(
        &index,
        &scorer,
        &RetrievalConfig::default(),
        &[5, 10, 15, 20],
        &bench.queries,
        &bench.qrels,
        &Metric::defaults(),
        2,
    )
    .unwrap();
    assert_eq!(rows.iter().map(|r| r.beam_size).collect::<Vec<_>>(), [5, 10, 15, 20]);
    assert!(rows.iter().all(|r| r.report.evaluated == 6));
}

#[test]
fn metric_spec_parsing() {
    assert_eq!(
        Metric::parse_list("hits@5, recall@20,mrr@10").unwrap(),
        [Metric::Hits(5), Metric::Recall(20), Metric::Mrr(10)]
    );
    assert!(Metric::parse_list("hits@x").is_err());
}
