// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use multiview::corpus::{build_vocabulary, Corpus, Passage};
use multiview::scorer::{
    build_training_samples, build_unsupervised_samples, char_trigram_overlap, load_pairs, NgramConfig, NgramScorer,
    SampleConfig, Scorer, ScoringContext, TrainingSample, ViewPrefix, ViewRatio,
};
use multiview::text::{TokenId, Tokenizer, Vocabulary};
use multiview::{Error, WordTokenizer};
use proptest::prelude::*;

fn corpus() -> Corpus {
    Corpus::new(vec![
        Passage::new(
            "p1",
            "Does He Love You",
            "Does He Love You is a song written by Sandy Knox and Billy Stritch, and recorded as a duet by American country music artists Reba McEntire and Linda Davis.",
        )
        .with_queries(["who sings does he love you", "does he love you song writers"]),
        Passage::new("p2", "Linda Davis", "Linda Kaye Davis is an American country music singer from Texas.")
            .with_queries(["linda davis singer"]),
        Passage::new("p3", "", "An untitled passage about rivers and the mountains they drain."),
    ])
    .unwrap()
}

fn is_member(s: &TrainingSample, corpus: &Corpus, vocab: &Vocabulary) -> bool {
    let p = corpus.get(&s.passage_id).unwrap();
    let tok = WordTokenizer;
    match s.prefix {
        ViewPrefix::Title => s.target_tokens == vocab.encode(&tok, &p.title),
        ViewPrefix::Substring => {
            let body = vocab.encode(&tok, &p.body);
            !s.target_tokens.is_empty() && body.windows(s.target_tokens.len()).any(|w| w == s.target_tokens)
        }
        ViewPrefix::PseudoQuery => p.pseudo_queries.iter().any(|q| vocab.encode(&tok, q) == s.target_tokens),
    }
}

const QUERIES: &[&str] = &[
    "who sings does he love you",
    "linda davis country singer",
    "rivers in the mountains",
    "reba duet",
    "",
];

proptest! {
    #[test]
    fn samples_are_members_and_follow_the_ratio(
        ratio in (0u32..5, 0u32..5, 0u32..5),
        picks in prop::collection::vec((0usize..QUERIES.len(), 0usize..3), 1..25),
        seed in any::<u64>(),
    ) {
        let c = corpus();
        let v = build_vocabulary(&c, &WordTokenizer);
        let pairs: Vec<(String, String)> = picks
            .iter()
            .map(|&(q, p)| (QUERIES[q].to_string(), format!("p{}", p + 1)))
            .collect();
        let config = SampleConfig {
            ratio: ViewRatio { title: ratio.0, substring: ratio.1, pseudo_query: ratio.2 },
            ..Default::default()
        };
        let samples = build_training_samples(&pairs, &c, &v, &config, seed).unwrap();
        let mut counts: BTreeMap<ViewPrefix, u32> = BTreeMap::new();
        for s in &samples {
            prop_assert!(is_member(s, &c, &v), "{s:?}");
            *counts.entry(s.prefix).or_default() += 1;
        }
        let with_title = pairs.iter().filter(|(_, p)| p != "p3").count() as u32;
        let with_queries = with_title;
        let expect = [
            (ViewPrefix::Title, ratio.0 * with_title),
            (ViewPrefix::Substring, ratio.1 * pairs.len() as u32),
            (ViewPrefix::PseudoQuery, ratio.2 * with_queries),
        ];
        for (view, n) in expect {
            prop_assert_eq!(counts.get(&view).copied().unwrap_or(0), n);
        }
    }

    #[test]
    fn substring_targets_clear_the_threshold_or_are_best(q in 0usize..QUERIES.len(), seed in any::<u64>()) {
        let c = corpus();
        let v = build_vocabulary(&c, &WordTokenizer);
        let tok = WordTokenizer;
        let config = SampleConfig { ratio: ViewRatio { title: 0, substring: 4, pseudo_query: 0 }, ..Default::default() };
        let pairs = vec![(QUERIES[q].to_string(), "p1".to_string())];
        let query = tok.normalize(QUERIES[q]);
        let body = v.encode(&tok, &c.get("p1").unwrap().body);
        for s in build_training_samples(&pairs, &c, &v, &config, seed).unwrap() {
            let len = s.target_tokens.len();
            prop_assert!((config.min_substring_len..=config.max_substring_len).contains(&len));
            let overlap = char_trigram_overlap(&query, &v.decode(&s.target_tokens));
            let best = body
                .windows(len)
                .map(|w| char_trigram_overlap(&query, &v.decode(w)))
                .fold(0.0, f64::max);
            prop_assert!(overlap > config.overlap_threshold || overlap == best);
        }
    }

    #[test]
    fn more_evidence_raises_a_continuation(extra in 1usize..6) {
        let v = Vocabulary::from_words(["a", "b", "c", "d"]);
        let ids: Vec<TokenId> = ["a", "b", "c"].iter().map(|w| v.id(w).unwrap()).collect();
        let sample = |t: TokenId| TrainingSample {
            prefix: ViewPrefix::Title,
            query_tokens: vec!["q".into()],
            target_tokens: vec![ids[0], t],
            passage_id: "p".into(),
        };
        let base = vec![sample(ids[1]), sample(ids[2])];
        let mut boosted = base.clone();
        boosted.extend(std::iter::repeat_n(sample(ids[1]), extra));
        let query = vec!["q".to_string()];
        let ctx = ScoringContext { view: ViewPrefix::Title, query: &query, output: &ids[..1] };
        let unseen = v.id("d").unwrap();
        let gap = |samples: &[TrainingSample]| {
            let m = NgramScorer::train(samples, &v, NgramConfig::default()).unwrap();
            let lp = m.log_probs(&ctx, &[ids[1], unseen]);
            lp[0] - lp[1]
        };
        prop_assert!(gap(&boosted) > gap(&base));
    }
}

#[test]
fn figure_query_substring_has_best_overlap_when_nothing_clears_the_bar() {
    let c = Corpus::new(vec![Passage::new(
        "p",
        "Does He Love You",
        "The track was recorded as a duet by two artists in a studio in Nashville.",
    )])
    .unwrap();
    let v = build_vocabulary(&c, &WordTokenizer);
    let config = SampleConfig {
        ratio: ViewRatio { title: 0, substring: 1, pseudo_query: 0 },
        min_substring_len: 4,
        max_substring_len: 4,
        overlap_threshold: 0.99,
    };
    let query = "who sings does he love you";
    let pairs = vec![(query.to_string(), "p".to_string())];
    let s = &build_training_samples(&pairs, &c, &v, &config, 1).unwrap()[0];
    let body = v.encode(&WordTokenizer, &c.get("p").unwrap().body);
    let best = body
        .windows(4)
        .map(|w| char_trigram_overlap(query, &v.decode(w)))
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(char_trigram_overlap(query, &v.decode(&s.target_tokens)), best);
}

#[test]
fn unsupervised_sample_contract() {
    let c = corpus();
    let v = build_vocabulary(&c, &WordTokenizer);
    let cfg = SampleConfig::default();
    assert!(build_unsupervised_samples(&c, &v, 0, &cfg, 3).is_empty());
    let one = build_unsupervised_samples(&c, &v, 1, &cfg, 3);
    assert_eq!(one.len(), 2);
    let p1 = one.iter().find(|s| s.passage_id == "p1").unwrap();
    let input = p1.query_tokens.join(" ");
    assert!(c.get("p1").unwrap().pseudo_queries.contains(&input));
    let many = build_unsupervised_samples(&c, &v, 4, &cfg, 8);
    assert_eq!(many.len(), 8);
    assert!(many.iter().all(|s| is_member(s, &c, &v)));
}

#[test]
fn unknown_passage_in_pairs() {
    let c = corpus();
    let v = build_vocabulary(&c, &WordTokenizer);
    let pairs = vec![("q".to_string(), "missing".to_string())];
    let err = build_training_samples(&pairs, &c, &v, &SampleConfig::default(), 0).unwrap_err();
    assert!(matches!(err, Error::UnknownPassage(ref id) if id == "missing"));
}

#[test]
fn scorer_file_round_trip_and_vocabulary_guard() {
    let c = corpus();
    let v = build_vocabulary(&c, &WordTokenizer);
    let pairs = vec![("who sings does he love you".to_string(), "p1".to_string())];
    let samples = build_training_samples(&pairs, &c, &v, &SampleConfig::default(), 4).unwrap();
    let model = NgramScorer::train(&samples, &v, NgramConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scorer.bin");
    model.save(&path).unwrap();
    assert_eq!(NgramScorer::load(&path, &v).unwrap(), model);
    let other = Vocabulary::from_words(["unrelated"]);
    assert!(matches!(NgramScorer::load(&path, &other), Err(Error::VocabularyMismatch { .. })));

    let again = NgramScorer::train(&samples, &v, NgramConfig::default()).unwrap();
    assert_eq!(again.to_bytes(), model.to_bytes());
}

#[test]
fn empty_training_is_uniform_and_finite() {
    let v = Vocabulary::from_words(["a", "b"]);
    let m = NgramScorer::train(&[], &v, NgramConfig::default()).unwrap();
    let query = vec!["anything".to_string()];
    for view in ViewPrefix::ALL {
        let ctx = ScoringContext { view, query: &query, output: &[] };
        let lp = m.log_probs(&ctx, &[7, 8, 263, 264]);
        assert!(lp.iter().all(|x| x.is_finite() && *x == lp[0]));
    }
    assert!(NgramScorer::train(&[], &v, NgramConfig { order: 0, ..Default::default() }).is_err());
    assert!(NgramScorer::train(&[], &v, NgramConfig { smoothing: 0.0, ..Default::default() }).is_err());
}

#[test]
fn pairs_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.tsv");
    std::fs::write(&path, "who sings it\tp1\nlinda\tp2\n").unwrap();
    assert_eq!(
        load_pairs(&path).unwrap(),
        [("who sings it".to_string(), "p1".to_string()), ("linda".to_string(), "p2".to_string())]
    );
    std::fs::write(&path, "no tab here\n").unwrap();
    assert!(matches!(load_pairs(&path), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn ratio_and_view_strings() {
    assert_eq!("3:10:5".parse::<ViewRatio>().unwrap(), ViewRatio::default());
    assert!("3:10".parse::<ViewRatio>().is_err());
    assert_eq!(
        ViewPrefix::parse_list("title,substring,pseudo-query").unwrap(),
        ViewPrefix::ALL.to_vec()
    );
    assert!(ViewPrefix::parse_list("title,body").is_err());
}
