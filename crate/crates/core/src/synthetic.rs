// SPDX-License-Identifier: Apache-2.0

//! Deterministic templated benchmark.
//!
//! Every passage is one combination of an entity (its title), an attribute
//! (a sentence in its body) and a topic (its pseudo-queries). Queries name
//! all three, so each identifier view on its own narrows the candidates to a
//! group of passages and only their combination pins down one passage.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Passage};
use crate::eval::Qrels;

const SYLLABLES: &[&str] = &[
    "zor", "bla", "fen", "wick", "kra", "dul", "mip", "tes", "vor", "nax", "quil", "bre", "sto", "lun", "gar", "phi",
    "zen", "dro", "kel", "mur", "tav", "yss", "ob", "rin",
];
const KINDS: &[&str] = &["valley", "tower", "river", "guild", "harbor", "forest", "citadel"];
const FILLER: &[&str] = &[
    "local guides describe the area in some detail",
    "visitors often arrive during the warmer months",
    "the surrounding land is mostly quiet farmland",
    "several old maps show the same layout",
    "records from that time are incomplete",
    "a small museum keeps a few artifacts",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub entities: usize,
    pub attributes: usize,
    pub topics: usize,
    pub test_queries: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            entities: 10,
            attributes: 5,
            topics: 4,
            test_queries: 100,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub corpus: Corpus,
    /// `(query, passage id)` training pairs.
    pub train_pairs: Vec<(String, String)>,
    /// `(query id, query)` held-out queries.
    pub queries: Vec<(String, String)>,
    pub qrels: Qrels,
}

struct Names {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl Names {
    fn fresh(&mut self) -> String {
        loop {
            let n = self.rng.gen_range(2..=3);
            let w: String = (0..n).map(|_| *SYLLABLES.choose(&mut self.rng).unwrap()).collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

struct Attribute {
    verb: String,
    object: String,
    place: String,
}

pub fn generate(config: &SyntheticConfig) -> Benchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut names = Names {
        rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x6e61_6d65),
        used: HashSet::new(),
    };
    let entities: Vec<(String, &str)> = (0..config.entities)
        .map(|i| (names.fresh(), KINDS[i % KINDS.len()]))
        .collect();
    let attributes: Vec<Attribute> = (0..config.attributes)
        .map(|_| Attribute {
            verb: names.fresh(),
            object: names.fresh(),
            place: names.fresh(),
        })
        .collect();
    let topics: Vec<String> = (0..config.topics).map(|_| names.fresh()).collect();

    let total = config.entities * config.attributes * config.topics;
    let mut ids: Vec<usize> = (0..total).collect();
    ids.shuffle(&mut rng);

    let mut passages = Vec::with_capacity(total);
    let mut train_pairs = Vec::with_capacity(2 * total);
    let mut test_pool = Vec::with_capacity(total);
    let mut n = 0;
    for (name, kind) in &entities {
        for a in &attributes {
            for topic in &topics {
                let id = format!("p{:04}", ids[n]);
                n += 1;
                let title = format!("{} {kind}", capitalize(name));
                let body = format!(
                    "it is said to {} the {} near the {} every season . {} .",
                    a.verb,
                    a.object,
                    a.place,
                    FILLER.choose(&mut rng).unwrap()
                );
                let pqs = [
                    format!("which {topic} archive lists this"),
                    format!("{topic} records of this place"),
                ];
                passages.push(Passage::new(&id, &title, &body).with_queries(pqs));
                train_pairs.push((
                    format!("which {kind} named {name} would {} the {} per {topic} notes", a.verb, a.object),
                    id.clone(),
                ));
                train_pairs.push((
                    format!("{topic} entry : where does {name} {kind} {} {}", a.verb, a.place),
                    id.clone(),
                ));
                test_pool.push((
                    format!("does the {name} {kind} {} a {} by the {} according to {topic} sources", a.verb, a.object, a.place),
                    id,
                ));
            }
        }
    }
    train_pairs.shuffle(&mut rng);
    test_pool.shuffle(&mut rng);
    test_pool.truncate(config.test_queries);

    let mut queries = Vec::with_capacity(test_pool.len());
    let mut qrels = Qrels::new();
    for (i, (q, pid)) in test_pool.into_iter().enumerate() {
        let qid = format!("q{i:03}");
        qrels.insert(qid.clone(), BTreeSet::from([pid]));
        queries.push((qid, q));
    }
    passages.sort_by(|a, b| a.id.cmp(&b.id));
    Benchmark {
        corpus: Corpus::new(passages).expect("generated ids are unique"),
        train_pairs,
        queries,
        qrels,
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}
