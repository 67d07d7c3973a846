// SPDX-License-Identifier: Apache-2.0

//! Retrieval metrics, TSV run/qrels/query files, and batch evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ranker::RankedList;

/// Relevant passage ids per query id.
pub type Qrels = BTreeMap<String, BTreeSet<String>>;

/// Ranked lists per query id.
pub type Run = BTreeMap<String, RankedList>;

/// 1.0 if any of the top `k` passages is relevant.
pub fn hits_at_k(ranked: &RankedList, relevant: &BTreeSet<String>, k: usize) -> f64 {
    let hit = ranked.ids().take(k).any(|id| relevant.contains(id));
    if hit {
        1.0
    } else {
        0.0
    }
}

/// Fraction of the relevant passages found in the top `k`.
pub fn recall_at_k(ranked: &RankedList, relevant: &BTreeSet<String>, k: usize) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::InvalidArgument("recall is undefined without relevant passages".into()));
    }
    let found = ranked
        .ids()
        .take(k)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|id| relevant.contains(*id))
        .count();
    Ok(found as f64 / relevant.len() as f64)
}

/// Reciprocal rank of the first relevant passage within the top `k`, else 0.
pub fn mrr_at_k(ranked: &RankedList, relevant: &BTreeSet<String>, k: usize) -> f64 {
    ranked
        .ids()
        .take(k)
        .position(|id| relevant.contains(id))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Hits(usize),
    Recall(usize),
    Mrr(usize),
}

impl Metric {
    pub fn compute(self, ranked: &RankedList, relevant: &BTreeSet<String>) -> Result<f64> {
        match self {
            Metric::Hits(k) => Ok(hits_at_k(ranked, relevant, k)),
            Metric::Recall(k) => recall_at_k(ranked, relevant, k),
            Metric::Mrr(k) => Ok(mrr_at_k(ranked, relevant, k)),
        }
    }

    /// hits@{5,20,100}, recall@{5,20,100}, mrr@10.
    pub fn defaults() -> Vec<Metric> {
        vec![
            Metric::Hits(5),
            Metric::Hits(20),
            Metric::Hits(100),
            Metric::Recall(5),
            Metric::Recall(20),
            Metric::Recall(100),
            Metric::Mrr(10),
        ]
    }

    pub fn parse_list(s: &str) -> Result<Vec<Metric>> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Hits(k) => write!(f, "hits@{k}"),
            Metric::Recall(k) => write!(f, "recall@{k}"),
            Metric::Mrr(k) => write!(f, "mrr@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("metric must look like hits@5, recall@20 or mrr@10, got {s:?}"));
        let (name, k) = s.split_once('@').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match name {
            "hits" => Ok(Metric::Hits(k)),
            "recall" => Ok(Metric::Recall(k)),
            "mrr" => Ok(Metric::Mrr(k)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryMetrics {
    pub query_id: String,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub metrics: Vec<String>,
    pub evaluated: usize,
    /// Queries without relevance judgements, not evaluated.
    pub skipped_no_qrels: Vec<String>,
    /// Judged queries with no ranking; they score 0 on every metric.
    pub missing_from_run: Vec<String>,
    pub means: BTreeMap<String, f64>,
    pub per_query: Vec<QueryMetrics>,
}

impl Report {
    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.means.get(&metric.to_string()).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for m in &self.metrics {
            let _ = writeln!(s, "{m:<12} {:.4}", self.means.get(m).copied().unwrap_or(0.0));
        }
        let _ = writeln!(s, "{:<12} {}", "queries", self.evaluated);
        if !self.skipped_no_qrels.is_empty() {
            let _ = writeln!(s, "{:<12} {}", "no-qrels", self.skipped_no_qrels.len());
        }
        if !self.missing_from_run.is_empty() {
            let _ = writeln!(s, "{:<12} {}", "not-in-run", self.missing_from_run.len());
        }
        s
    }
}

/// Scores a run against judgements. Every judged query is evaluated (an
/// absent ranking scores 0); run queries without judgements are skipped.
pub fn evaluate_run(run: &Run, qrels: &Qrels, metrics: &[Metric]) -> Report {
    let empty = RankedList::default();
    let skipped_no_qrels: Vec<String> = run.keys().filter(|q| !qrels.contains_key(*q)).cloned().collect();
    let mut missing_from_run = Vec::new();
    let mut per_query = Vec::new();
    for (qid, relevant) in qrels {
        if relevant.is_empty() {
            continue;
        }
        let ranked = run.get(qid).unwrap_or_else(|| {
            missing_from_run.push(qid.clone());
            &empty
        });
        let values = metrics
            .iter()
            .map(|m| (m.to_string(), m.compute(ranked, relevant).expect("relevant set is non-empty")))
            .collect();
        per_query.push(QueryMetrics {
            query_id: qid.clone(),
            values,
        });
    }
    if !skipped_no_qrels.is_empty() {
        log::warn!("{} run queries have no relevance judgements", skipped_no_qrels.len());
    }
    if !missing_from_run.is_empty() {
        log::warn!("{} judged queries are missing from the run", missing_from_run.len());
    }
    let evaluated = per_query.len();
    let means = metrics
        .iter()
        .map(|m| {
            let key = m.to_string();
            let total: f64 = per_query.iter().map(|q| q.values[&key]).sum();
            let mean = if evaluated == 0 { 0.0 } else { total / evaluated as f64 };
            (key, mean)
        })
        .collect();
    Report {
        metrics: metrics.iter().map(Metric::to_string).collect(),
        evaluated,
        skipped_no_qrels,
        missing_from_run,
        means,
        per_query,
    }
}

/// Anything that can turn a query into a ranking.
pub trait Retrieve: Sync {
    fn retrieve(&self, query: &str) -> Result<RankedList>;
}

/// Retrieves every judged query with `workers` threads (results merged in
/// query order) and evaluates. Queries without judgements are skipped; a
/// failed retrieval counts as an empty ranking.
pub fn run_eval(
    queries: &[(String, String)],
    qrels: &Qrels,
    engine: &dyn Retrieve,
    metrics: &[Metric],
    workers: usize,
) -> Result<(Run, Report)> {
    let judged: Vec<&(String, String)> = queries.iter().filter(|(q, _)| qrels.contains_key(q)).collect();
    let skipped: Vec<String> = queries
        .iter()
        .filter(|(q, _)| !qrels.contains_key(q))
        .map(|(q, _)| q.clone())
        .collect();
    for q in &skipped {
        log::warn!("query {q} has no relevance judgements; skipped");
    }
    let run = retrieve_all(&judged, engine, workers)?;
    let restricted: Qrels = judged
        .iter()
        .filter_map(|(q, _)| qrels.get(q).map(|r| (q.clone(), r.clone())))
        .collect();
    let mut report = evaluate_run(&run, &restricted, metrics);
    report.skipped_no_qrels = skipped;
    Ok((run, report))
}

/// Runs `engine` over `(query id, text)` pairs in parallel.
pub fn retrieve_all(queries: &[&(String, String)], engine: &dyn Retrieve, workers: usize) -> Result<Run> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let ranked: Vec<RankedList> = pool.install(|| {
        queries
            .par_iter()
            .map(|(qid, text)| {
                engine.retrieve(text).unwrap_or_else(|e| {
                    log::warn!("query {qid}: retrieval failed ({e}); empty ranking");
                    RankedList::default()
                })
            })
            .collect()
    });
    Ok(queries.iter().map(|(q, _)| q.clone()).zip(ranked).collect())
}

fn tsv_lines(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, line.split('\t').map(str::to_string).collect()));
    }
    Ok(out)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// `query_id \t text`
pub fn load_queries(path: &Path) -> Result<Vec<(String, String)>> {
    let mut seen = BTreeSet::new();
    tsv_lines(path)?
        .into_iter()
        .map(|(line, f)| {
            if f.len() != 2 {
                return Err(parse_err(path, line, "expected `query_id<TAB>text`"));
            }
            if !seen.insert(f[0].clone()) {
                return Err(parse_err(path, line, format!("duplicate query id {:?}", f[0])));
            }
            Ok((f[0].clone(), f[1].clone()))
        })
        .collect()
}

/// `query_id \t passage_id`
pub fn load_qrels(path: &Path) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (line, f) in tsv_lines(path)? {
        if f.len() != 2 {
            return Err(parse_err(path, line, "expected `query_id<TAB>passage_id`"));
        }
        qrels.entry(f[0].clone()).or_default().insert(f[1].clone());
    }
    Ok(qrels)
}

/// `query_id \t passage_id \t rank \t score`, ranks starting at 1.
pub fn write_run(path: &Path, run: &Run) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_run_to(&mut w, run).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_run_to<W: Write>(w: &mut W, run: &Run) -> std::io::Result<()> {
    for (qid, ranked) in run {
        for (i, e) in ranked.entries.iter().enumerate() {
            writeln!(w, "{qid}\t{}\t{}\t{:.6}", e.passage_id, i + 1, e.score)?;
        }
    }
    Ok(())
}

pub fn load_run(path: &Path) -> Result<Run> {
    let mut rows: BTreeMap<String, Vec<(usize, String, f64)>> = BTreeMap::new();
    for (line, f) in tsv_lines(path)? {
        if f.len() != 4 {
            return Err(parse_err(path, line, "expected `query_id<TAB>passage_id<TAB>rank<TAB>score`"));
        }
        let rank: usize = f[2].parse().map_err(|_| parse_err(path, line, "rank is not an integer"))?;
        let score: f64 = f[3].parse().map_err(|_| parse_err(path, line, "score is not a number"))?;
        rows.entry(f[0].clone()).or_default().push((rank, f[1].clone(), score));
    }
    Ok(rows
        .into_iter()
        .map(|(q, mut r)| {
            r.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            let entries = r
                .into_iter()
                .map(|(_, passage_id, score)| crate::ranker::RankedEntry { passage_id, score })
                .collect();
            (q, RankedList { entries })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(ids: &[&str]) -> RankedList {
        RankedList::from_scores(ids.iter().enumerate().map(|(i, id)| (id.to_string(), -(i as f64))))
    }

    fn rel(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hits_boundaries() {
        let r = ranked(&["a", "b", "c", "d", "e", "f"]);
        assert_eq!(hits_at_k(&r, &rel(&["a"]), 5), 1.0);
        assert_eq!(hits_at_k(&r, &rel(&["f"]), 5), 0.0);
        assert_eq!(hits_at_k(&r, &rel(&["e"]), 5), 1.0);
        assert_eq!(hits_at_k(&RankedList::default(), &rel(&["a"]), 5), 0.0);
    }

    #[test]
    fn recall_values() {
        let r = ranked(&["a", "x", "b", "y"]);
        assert_eq!(recall_at_k(&r, &rel(&["a", "b", "c", "d"]), 4).unwrap(), 0.5);
        assert_eq!(recall_at_k(&r, &rel(&["a", "b"]), 4).unwrap(), 1.0);
        assert_eq!(recall_at_k(&r, &rel(&["z"]), 4).unwrap(), 0.0);
        assert!(recall_at_k(&r, &rel(&[]), 4).is_err());
    }

    #[test]
    fn mrr_values() {
        let mut ids: Vec<String> = (0..12).map(|i| format!("n{i:02}")).collect();
        ids[1] = "hit".into();
        let r = RankedList::from_scores(ids.iter().enumerate().map(|(i, s)| (s.clone(), -(i as f64))));
        assert_eq!(mrr_at_k(&r, &rel(&["hit"]), 10), 0.5);
        assert_eq!(mrr_at_k(&r, &rel(&["n10"]), 10), 0.0);
        assert_eq!(mrr_at_k(&r, &rel(&["n00"]), 10), 1.0);
    }

    #[test]
    fn metric_names() {
        for m in Metric::defaults() {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
        }
        assert!("hits@0".parse::<Metric>().is_err());
        assert!("ndcg@10".parse::<Metric>().is_err());
    }

    #[test]
    fn report_means_and_mismatch_counts() {
        let mut qrels = Qrels::new();
        qrels.insert("q1".into(), rel(&["a"]));
        qrels.insert("q2".into(), rel(&["b"]));
        qrels.insert("q3".into(), rel(&["c"]));
        let mut run = Run::new();
        run.insert("q1".into(), ranked(&["a"]));
        run.insert("q2".into(), ranked(&["z"]));
        run.insert("q9".into(), ranked(&["a"]));
        let r = evaluate_run(&run, &qrels, &[Metric::Hits(5)]);
        assert_eq!(r.evaluated, 3);
        assert!((r.mean(Metric::Hits(5)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.skipped_no_qrels, ["q9"]);
        assert_eq!(r.missing_from_run, ["q3"]);
        let empty = evaluate_run(&Run::new(), &qrels, &Metric::defaults());
        assert!(empty.means.values().all(|&v| v == 0.0));
    }
}
