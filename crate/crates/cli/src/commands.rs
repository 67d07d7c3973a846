// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use multiview::corpus::{
    attach_pseudo_queries, build_vocabulary, flatten_corpus, load_corpus, CorpusFormat, TemplateGenerator,
};
use multiview::eval::{evaluate_run, load_qrels, load_queries, load_run, retrieve_all, write_run_to};
use multiview::pipeline::{restore_pseudo_queries, sweep as sweep_beams};
use multiview::ranker::TransformMode;
use multiview::scorer::{
    build_training_samples, build_unsupervised_samples, load_pairs, mix_samples, NgramConfig, SampleConfig,
};
use multiview::{
    BeamConfig, Corpus, Error, FmIndex, Metric, NgramScorer, RetrievalConfig, Retriever, ScoreTransform, ViewPrefix,
    ViewRatio, WordTokenizer,
};

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::{BuildIndexArgs, DecodeArgs, EvaluateArgs, RetrieveArgs, SweepArgs, TrainScorerArgs};

fn input(path: PathBuf) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::MissingInput(path))
    }
}

fn output(path: PathBuf, force: bool) -> Result<PathBuf, CliError> {
    if path.exists() && !force {
        return Err(CliError::OutputExists(path));
    }
    Ok(path)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn read_corpus(path: &Path, format: Option<String>) -> Result<Corpus, CliError> {
    let format = match format {
        Some(f) => f.parse::<CorpusFormat>()?,
        None => CorpusFormat::from_path(path),
    };
    Ok(load_corpus(path, format)?)
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn build_index(a: BuildIndexArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let corpus_path = input(cfg.require_path(a.corpus, "corpus")?)?;
    let out = match cfg.pick_opt(a.output, "output")? {
        Some(p) => p,
        None => cfg.require_path(a.index, "index")?,
    };
    let out = output(out, a.force)?;
    let k = cfg.pick(a.pseudo_queries, "pseudo-queries", 5usize)?;
    let seed = cfg.pick(a.seed, "seed", 0u64)?;
    let format = cfg.pick_opt(a.format, "format")?;

    let corpus = read_corpus(&corpus_path, format)?;
    let (corpus, report) = attach_pseudo_queries(corpus, &TemplateGenerator::default(), k, seed);
    if !report.failures.is_empty() {
        log::warn!("{} passages got no pseudo-queries", report.failures.len());
    }
    let vocab = build_vocabulary(&corpus, &WordTokenizer);
    let index = FmIndex::build(&flatten_corpus(&corpus, &vocab), vocab)?;
    index.save(&out)?;
    println!("documents\t{}", index.doc_count());
    println!("tokens\t{}", index.len());
    println!("vocabulary\t{}", index.vocab().len());
    println!("pseudo-queries attached\t{}", report.attached);
    println!("index\t{}", out.display());
    Ok(())
}

pub fn train_scorer(a: TrainScorerArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let corpus_path = input(cfg.require_path(a.corpus, "corpus")?)?;
    let index_path = input(cfg.require_path(a.index, "index")?)?;
    let pairs_path = input(cfg.require_path(a.pairs, "pairs")?)?;
    let out = match cfg.pick_opt(a.output, "output")? {
        Some(p) => p,
        None => cfg.require_path(a.scorer, "scorer")?,
    };
    let out = output(out, a.force)?;
    let defaults = SampleConfig::default();
    let sample_config = SampleConfig {
        ratio: cfg.pick::<ViewRatio>(a.ratio.map(|r| r.parse()).transpose()?, "ratio", defaults.ratio)?,
        min_substring_len: cfg.pick(a.min_substring_len, "min-substring-len", defaults.min_substring_len)?,
        max_substring_len: cfg.pick(a.max_substring_len, "max-substring-len", defaults.max_substring_len)?,
        overlap_threshold: cfg.pick(a.overlap_threshold, "overlap-threshold", defaults.overlap_threshold)?,
    };
    let ngram_defaults = NgramConfig::default();
    let ngram = NgramConfig {
        order: cfg.pick(a.order, "order", ngram_defaults.order)?,
        smoothing: cfg.pick(a.smoothing, "smoothing", ngram_defaults.smoothing)?,
        ..ngram_defaults
    };
    let per_passage = cfg.pick(a.unsupervised, "unsupervised", 0usize)?;
    let seed = cfg.pick(a.seed, "seed", 0u64)?;
    let format = cfg.pick_opt(a.format, "format")?;

    let index = FmIndex::load(&index_path)?;
    let corpus = restore_pseudo_queries(&read_corpus(&corpus_path, format)?, &index)?;
    let vocab = index.vocab();
    let rebuilt = build_vocabulary(&corpus, &WordTokenizer);
    if rebuilt.fingerprint() != vocab.fingerprint() {
        return Err(Error::VocabularyMismatch {
            expected: vocab.fingerprint(),
            found: rebuilt.fingerprint(),
        }
        .into());
    }
    let pairs = load_pairs(&pairs_path)?;
    let supervised = build_training_samples(&pairs, &corpus, vocab, &sample_config, seed)?;
    let unsupervised = build_unsupervised_samples(&corpus, vocab, per_passage, &sample_config, seed);
    let unsupervised_count = unsupervised.len();
    let samples = mix_samples(supervised, unsupervised, seed);
    let mut per_view: BTreeMap<&str, usize> = ViewPrefix::ALL.iter().map(|v| (v.as_str(), 0)).collect();
    for s in &samples {
        *per_view.entry(s.prefix.as_str()).or_default() += 1;
    }
    let scorer = NgramScorer::train(&samples, vocab, ngram)?;
    scorer.save(&out)?;
    println!("pairs\t{}", pairs.len());
    for view in ViewPrefix::ALL {
        log::info!("{} samples: {}", view.as_str(), per_view[view.as_str()]);
        println!("samples {}\t{}", view.as_str(), per_view[view.as_str()]);
    }
    println!("samples unsupervised\t{unsupervised_count}");
    println!("scorer\t{}", out.display());
    Ok(())
}

struct Engine {
    index: FmIndex,
    scorer: NgramScorer,
    config: RetrievalConfig,
    workers: usize,
}

fn parse_weights(s: &str) -> Result<[f64; 3], CliError> {
    let bad = || CliError::Usage(format!("--view-weights expects three comma-separated numbers, got {s:?}"));
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    parts.try_into().map_err(|_| bad())
}

fn load_engine(a: DecodeArgs, cfg: &ConfigFile) -> Result<Engine, CliError> {
    let index_path = input(cfg.require_path(a.index, "index")?)?;
    let scorer_path = input(cfg.require_path(a.scorer, "scorer")?)?;
    let defaults = BeamConfig::default();
    let beam_size = cfg.pick(a.beam_size, "beam-size", defaults.beam_size)?;
    let beam = BeamConfig {
        query_length_bias: cfg.pick(a.query_length_bias, "query-length-bias", defaults.query_length_bias)?,
        candidate_factor: cfg.pick(a.candidate_factor, "candidate-factor", defaults.candidate_factor)?,
        ..defaults.with_beam(beam_size)
    };
    let views = match cfg.pick_opt(a.views, "views")? {
        Some(v) => ViewPrefix::parse_list(&v)?,
        None => ViewPrefix::ALL.to_vec(),
    };
    let mode: TransformMode = match cfg.pick_opt(a.transform, "transform")? {
        Some(t) => t.parse()?,
        None => TransformMode::LengthNormalizedExp,
    };
    let view_weights = match cfg.pick_opt(a.view_weights, "view-weights")? {
        Some(w) => parse_weights(&w)?,
        None => [1.0; 3],
    };
    let transform = ScoreTransform {
        mode,
        length_exponent: cfg.pick(a.length_exponent, "length-exponent", 1.0)?,
        view_weights,
    };
    let config = RetrievalConfig {
        beam,
        views,
        transform,
        top_k: cfg.pick(a.top_k, "top-k", 100usize)?,
    };
    let workers = cfg.pick(a.workers, "workers", default_workers())?;
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let _seed = cfg.pick(a.seed, "seed", 0u64)?;

    let index = FmIndex::load(&index_path)?;
    let scorer = NgramScorer::load(&scorer_path, index.vocab())?;
    Ok(Engine {
        index,
        scorer,
        config,
        workers,
    })
}

pub fn retrieve(a: RetrieveArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let queries = match (a.query, cfg.pick_opt(a.queries, "queries")?) {
        (Some(text), _) => vec![("q".to_string(), text)],
        (None, Some(path)) => load_queries(&input(path)?)?,
        (None, None) => return Err(CliError::Usage("--queries or --query is required".into())),
    };
    let out = cfg.pick_opt(a.output, "output")?.map(|p| output(p, a.force)).transpose()?;
    let engine = load_engine(a.decode, cfg)?;
    let retriever = Retriever::new(&engine.index, &engine.scorer, engine.config.clone())?;
    let refs: Vec<&(String, String)> = queries.iter().collect();
    let run = retrieve_all(&refs, &retriever, engine.workers)?;
    let mut bytes = Vec::new();
    write_run_to(&mut bytes, &run).expect("writing to memory");
    match out {
        Some(path) => {
            write_file(&path, &bytes)?;
            let rows: usize = run.values().map(|r| r.len()).sum();
            eprintln!("wrote {rows} rows for {} queries to {}", run.len(), path.display());
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            })?,
    }
    Ok(())
}

fn metrics(flag: Option<String>, cfg: &ConfigFile) -> Result<Vec<Metric>, CliError> {
    Ok(match cfg.pick_opt(flag, "metrics")? {
        Some(m) => Metric::parse_list(&m)?,
        None => Metric::defaults(),
    })
}

pub fn evaluate(a: EvaluateArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let run_path = input(cfg.require_path(a.run, "run")?)?;
    let qrels_path = input(cfg.require_path(a.qrels, "qrels")?)?;
    let out = cfg.pick_opt(a.output, "output")?.map(|p| output(p, a.force)).transpose()?;
    let metrics = metrics(a.metrics, cfg)?;
    let run = load_run(&run_path)?;
    let qrels = load_qrels(&qrels_path)?;
    if run.is_empty() {
        log::warn!("run file {} is empty", run_path.display());
    }
    let report = evaluate_run(&run, &qrels, &metrics);
    let json = report.to_json();
    if let Some(path) = out {
        write_file(&path, format!("{json}\n").as_bytes())?;
    }
    if a.json {
        println!("{json}");
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

pub fn sweep(a: SweepArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let queries_path = input(cfg.require_path(a.queries, "queries")?)?;
    let qrels_path = input(cfg.require_path(a.qrels, "qrels")?)?;
    let out = cfg.pick_opt(a.output, "output")?.map(|p| output(p, a.force)).transpose()?;
    let beam_sizes: Vec<usize> = match cfg.pick_opt(a.beam_sizes, "beam-sizes")? {
        Some(s) => s
            .split(',')
            .map(|b| b.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("--beam-sizes expects comma-separated integers, got {s:?}")))?,
        None => vec![5, 10, 15, 20],
    };
    let metrics = metrics(a.metrics, cfg)?;
    let engine = load_engine(a.decode, cfg)?;
    let queries = load_queries(&queries_path)?;
    let qrels = load_qrels(&qrels_path)?;
    let rows = sweep_beams(
        &engine.index,
        &engine.scorer,
        &engine.config,
        &beam_sizes,
        &queries,
        &qrels,
        &metrics,
        engine.workers,
    )?;
    let mut header = format!("{:<6}", "beam");
    for m in &metrics {
        header.push_str(&format!(" {:>10}", m.to_string()));
    }
    println!("{header}");
    for row in &rows {
        let mut line = format!("{:<6}", row.beam_size);
        for m in &metrics {
            line.push_str(&format!(" {:>10.4}", row.report.mean(*m).unwrap_or(0.0)));
        }
        println!("{line}");
    }
    if let Some(path) = out {
        let value: Vec<serde_json::Value> = rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "beam_size": r.beam_size,
                    "evaluated": r.report.evaluated,
                    "means": r.report.means,
                })
            })
            .collect();
        let text = serde_json::to_string_pretty(&value).expect("sweep serializes");
        write_file(&path, format!("{text}\n").as_bytes())?;
    }
    Ok(())
}
