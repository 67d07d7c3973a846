// SPDX-License-Identifier: Apache-2.0

//! Passage ingestion, pseudo-query attachment and flattening of each
//! passage's identifiers into one delimiter-tagged token stream:
//!
//! ```text
//! <TS> title <TE> <BS> body <BE> (<QS> query <QE>)* <EOD>
//! ```

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{self, stable_hash, TokenId, Tokenizer, Vocabulary, WordTokenizer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "text")]
    pub body: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pseudo_queries: Vec<String>,
}

impl Passage {
    pub fn new(id: impl Into<String>, title: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: normalize_ws(&title.into()),
            body: normalize_ws(&body.into()),
            pseudo_queries: Vec::new(),
        }
    }

    pub fn with_queries<I, S>(mut self, queries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.pseudo_queries = queries.into_iter().map(Into::into).collect();
        self
    }
}

/// Ordered passages with pairwise distinct ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    passages: Vec<Passage>,
}

impl Corpus {
    pub fn new(passages: Vec<Passage>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: p.id.clone(),
                    line: i + 1,
                });
            }
            if p.body.trim().is_empty() {
                return Err(Error::InvalidArgument(format!("passage {:?} has an empty body", p.id)));
            }
        }
        Ok(Self { passages })
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn doc_count(&self) -> usize {
        self.passages.len()
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.passages.iter().find(|p| p.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.passages.iter().position(|p| p.id == id)
    }

    /// Writes the corpus as JSON Lines (the same format `load_corpus` reads).
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        for p in &self.passages {
            let line = serde_json::to_string(p).expect("passage serializes");
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension; defaults to JSON Lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::InvalidArgument(format!("unknown corpus format {other:?}"))),
        }
    }
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    #[serde(default)]
    title: String,
    text: String,
    #[serde(default)]
    pseudo_queries: Vec<String>,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), format, path)
}

/// Parses a corpus from any reader; `origin` only labels error messages.
pub fn read_corpus<R: BufRead>(reader: R, format: CorpusFormat, origin: &Path) -> Result<Corpus> {
    let mut passages = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: line_no,
            message,
        };
        let passage = match format {
            CorpusFormat::Jsonl => {
                let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
                Passage::new(rec.id, rec.title, rec.text).with_queries(
                    rec.pseudo_queries
                        .iter()
                        .map(|q| normalize_ws(q))
                        .filter(|q| !q.is_empty()),
                )
            }
            CorpusFormat::Tsv => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 3 {
                    return Err(parse_err(format!("expected 3 tab-separated fields, found {}", fields.len())));
                }
                Passage::new(fields[0], fields[1], fields[2])
            }
        };
        if passage.id.is_empty() {
            return Err(parse_err("empty passage id".into()));
        }
        if passage.body.is_empty() {
            return Err(parse_err("empty passage text".into()));
        }
        if !seen.insert(passage.id.clone()) {
            return Err(Error::DuplicateId {
                id: passage.id,
                line: line_no,
            });
        }
        passages.push(passage);
    }
    Ok(Corpus { passages })
}

/// Produces pseudo-queries for a passage. Implementations must be
/// deterministic for a given `(passage, seed)`.
pub trait PseudoQueryGenerator: Sync {
    fn generate(&self, passage: &Passage, k: usize, seed: u64) -> std::result::Result<Vec<String>, String>;
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct AttachReport {
    /// Passages that received new queries.
    pub attached: usize,
    /// Passages that already held queries and were left as they were.
    pub reused: usize,
    /// `(passage id, message)` for generator failures.
    pub failures: Vec<(String, String)>,
}

/// Attaches up to `k` generated queries to every passage without any.
pub fn attach_pseudo_queries(
    mut corpus: Corpus,
    generator: &dyn PseudoQueryGenerator,
    k: usize,
    seed: u64,
) -> (Corpus, AttachReport) {
    let mut report = AttachReport::default();
    if k == 0 {
        return (corpus, report);
    }
    let outcomes: Vec<Option<std::result::Result<(), String>>> = corpus
        .passages
        .par_iter_mut()
        .map(|p| {
            if !p.pseudo_queries.is_empty() {
                return None;
            }
            Some(generator.generate(p, k, seed).map(|mut qs| {
                qs.truncate(k);
                p.pseudo_queries = qs;
            }))
        })
        .collect();
    for (p, outcome) in corpus.passages.iter().zip(outcomes) {
        match outcome {
            None => report.reused += 1,
            Some(Ok(())) => report.attached += 1,
            Some(Err(msg)) => {
                log::warn!("pseudo-query generation failed for {}: {msg}", p.id);
                report.failures.push((p.id.clone(), msg));
            }
        }
    }
    (corpus, report)
}

const TITLE_TEMPLATES: [&str; 4] = [
    "what is {} about",
    "who or what is {}",
    "tell me about {}",
    "what is known about {}",
];

const SPAN_TEMPLATES: [&str; 5] = [
    "{} refers to what",
    "what does {} mean",
    "where is {} mentioned",
    "which passage says {}",
    "what is {}",
];

/// Template-based stand-in for a neural query generator.
#[derive(Debug, Clone)]
pub struct TemplateGenerator {
    pub min_span: usize,
    pub max_span: usize,
}

impl Default for TemplateGenerator {
    fn default() -> Self {
        Self { min_span: 3, max_span: 6 }
    }
}

impl PseudoQueryGenerator for TemplateGenerator {
    fn generate(&self, passage: &Passage, k: usize, seed: u64) -> std::result::Result<Vec<String>, String> {
        template_pseudo_queries(passage, k, seed, self)
    }
}

pub fn template_pseudo_queries(
    passage: &Passage,
    k: usize,
    seed: u64,
    config: &TemplateGenerator,
) -> std::result::Result<Vec<String>, String> {
    let tok = WordTokenizer;
    let title = tok.normalize(&passage.title);
    let words: Vec<String> = tok
        .tokenize(&passage.body)
        .into_iter()
        .filter(|w| w.chars().all(char::is_alphanumeric))
        .collect();
    let spans_ok = words.len() >= config.min_span;
    if title.is_empty() && !spans_ok {
        return Err(format!(
            "passage {:?} has no title and fewer than {} body words",
            passage.id, config.min_span
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stable_hash(passage.id.as_bytes()));
    let mut out: Vec<String> = Vec::with_capacity(k);
    let mut title_order: Vec<usize> = (1..TITLE_TEMPLATES.len()).collect();
    title_order.shuffle(&mut rng);
    if !title.is_empty() && k > 0 {
        out.push(TITLE_TEMPLATES[0].replace("{}", &title));
    }
    let mut attempts = 0;
    while out.len() < k && attempts < 32 * k.max(1) {
        attempts += 1;
        let use_title = !title.is_empty() && (!spans_ok || rng.gen_bool(0.25));
        let query = if use_title {
            match title_order.pop() {
                Some(t) => TITLE_TEMPLATES[t].replace("{}", &title),
                None if spans_ok => continue,
                None => break,
            }
        } else {
            let max_len = config.max_span.min(words.len()).max(config.min_span);
            let len = rng.gen_range(config.min_span..=max_len);
            let start = rng.gen_range(0..=words.len() - len);
            let span = words[start..start + len].join(" ");
            SPAN_TEMPLATES[rng.gen_range(0..SPAN_TEMPLATES.len())].replace("{}", &span)
        };
        if !out.contains(&query) {
            out.push(query);
        }
    }
    Ok(out)
}

/// Collects every word of every identifier into a vocabulary.
pub fn build_vocabulary(corpus: &Corpus, tokenizer: &dyn Tokenizer) -> Vocabulary {
    let mut words = HashSet::new();
    for p in corpus.passages() {
        let texts = std::iter::once(&p.title)
            .chain(std::iter::once(&p.body))
            .chain(p.pseudo_queries.iter());
        for t in texts {
            words.extend(tokenizer.tokenize(t));
        }
    }
    Vocabulary::from_words(words)
}

/// A passage's identifiers as one token stream, terminated by the sentinel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatStream {
    pub doc_id: String,
    pub tokens: Vec<TokenId>,
}

/// Identifier lists recovered from a [`FlatStream`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Segments {
    pub title: Vec<TokenId>,
    pub body: Vec<TokenId>,
    pub queries: Vec<Vec<TokenId>>,
}

impl FlatStream {
    /// Parses the stream grammar. Returns `None` for malformed streams.
    pub fn segments(&self) -> Option<Segments> {
        let toks = &self.tokens;
        let mut pos = 0;
        let take = |pos: &mut usize, open: TokenId, close: TokenId| -> Option<Vec<TokenId>> {
            if toks.get(*pos) != Some(&open) {
                return None;
            }
            let rest = &toks[*pos + 1..];
            let end = rest.iter().position(|&t| text::is_structural(t))?;
            if rest[end] != close {
                return None;
            }
            *pos += end + 2;
            Some(rest[..end].to_vec())
        };
        let title = take(&mut pos, text::TITLE_START, text::TITLE_END)?;
        let body = take(&mut pos, text::BODY_START, text::BODY_END)?;
        let mut queries = Vec::new();
        while toks.get(pos) == Some(&text::QUERY_START) {
            queries.push(take(&mut pos, text::QUERY_START, text::QUERY_END)?);
        }
        (pos + 1 == toks.len() && toks[pos] == text::EOD).then_some(Segments { title, body, queries })
    }
}

pub fn flatten(passage: &Passage, vocab: &Vocabulary) -> FlatStream {
    flatten_with(passage, vocab, &WordTokenizer)
}

pub fn flatten_with(passage: &Passage, vocab: &Vocabulary, tokenizer: &dyn Tokenizer) -> FlatStream {
    let mut tokens = vec![text::TITLE_START];
    tokens.extend(vocab.encode(tokenizer, &passage.title));
    tokens.extend([text::TITLE_END, text::BODY_START]);
    tokens.extend(vocab.encode(tokenizer, &passage.body));
    tokens.push(text::BODY_END);
    for q in &passage.pseudo_queries {
        tokens.push(text::QUERY_START);
        tokens.extend(vocab.encode(tokenizer, q));
        tokens.push(text::QUERY_END);
    }
    tokens.push(text::EOD);
    FlatStream {
        doc_id: passage.id.clone(),
        tokens,
    }
}

/// Flattens every passage (in corpus order).
pub fn flatten_corpus(corpus: &Corpus, vocab: &Vocabulary) -> Vec<FlatStream> {
    corpus.passages().par_iter().map(|p| flatten(p, vocab)).collect()
}

impl fmt::Display for Passage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.id, self.title)
    }
}
