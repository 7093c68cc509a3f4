//! Configuration and subcommand bodies for the `hashseg` binary.
//!
//! Configuration is layered: built-in defaults, then a `key = value` file,
//! then command-line flags. Keys use the long flag names (`topk-beam`,
//! `segmenter-endpoint`, ...); underscores are accepted for dashes.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use log::{error, warn};
use serde::Serialize;

use crate::beam::{BeamParams, DEFAULT_EXPANSIONS, DEFAULT_TOP_K};
use crate::codemix::{
    describe, method_cmt, method_cmts, method_t, FailurePolicy, HashtagRecord, Method,
    PipelineSegmenter, Tweet,
};
use crate::evaluation::{
    load_gold, oracle_topn, span_f1, EvaluationReport, LoadOptions, OracleRow, DEFAULT_ORACLE_N,
};
use crate::pipeline::SegmentationPipeline;
use crate::rerank::{
    default_grid, EnsembleWeights, TuningReport, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_GRID_STEP,
};
use crate::scoring::protocol::DEFAULT_TIMEOUT;
use crate::scoring::{
    CorpusModel, CorpusScorer, ExternalScorer, LengthNormalized, ScorerHandle, ScorerKind,
    DEFAULT_DELTA,
};
use crate::segmentation::Hashtag;
use crate::translate::{ExternalTranslator, IdentityTranslator, PhraseTableTranslator, Translator};

const KEYS: &[&str] = &[
    "segmenter-endpoint",
    "reranker-endpoint",
    "corpus",
    "delta",
    "normalize-length",
    "e",
    "topk-beam",
    "alpha",
    "beta",
    "alpha-grid",
    "beta-grid",
    "grid-step",
    "topk",
    "strict",
    "lowercase",
    "oracle-n",
    "method",
    "src",
    "tgt",
    "translator-endpoint",
    "phrase-table",
    "timeout",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub segmenter_endpoint: Option<String>,
    pub reranker_endpoint: Option<String>,
    pub corpus: Option<PathBuf>,
    pub delta: f64,
    pub normalize_length: bool,
    pub expansions: usize,
    pub topk_beam: usize,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_grid: Option<Vec<f64>>,
    pub beta_grid: Option<Vec<f64>>,
    pub grid_step: f64,
    /// Ranked rows emitted per hashtag by `segment`.
    pub topk: usize,
    pub strict: bool,
    pub lowercase: bool,
    pub oracle_n: Vec<usize>,
    pub method: Method,
    pub src: String,
    pub tgt: String,
    pub translator_endpoint: Option<String>,
    pub phrase_table: Option<PathBuf>,
    pub timeout: Duration,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            segmenter_endpoint: None,
            reranker_endpoint: None,
            corpus: None,
            delta: DEFAULT_DELTA,
            normalize_length: false,
            expansions: DEFAULT_EXPANSIONS,
            topk_beam: DEFAULT_TOP_K,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            alpha_grid: None,
            beta_grid: None,
            grid_step: DEFAULT_GRID_STEP,
            topk: 1,
            strict: false,
            lowercase: true,
            oracle_n: DEFAULT_ORACLE_N.to_vec(),
            method: Method::T,
            src: "src".into(),
            tgt: "en".into(),
            translator_endpoint: None,
            phrase_table: None,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key = value", i + 1))?;
        map.insert(normalize_key(k), v.trim().to_string());
    }
    Ok(map)
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('_', "-")
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => bail!("{key}: expected a boolean, got {v:?}"),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|x| x.trim())
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse()
                .map_err(|_| anyhow!("{key}: invalid list item {x:?}"))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow!("{key}: invalid value {v:?}"))
}

impl Config {
    /// Applies `layers` in order; later layers override earlier ones.
    pub fn from_layers<'a>(
        layers: impl IntoIterator<Item = &'a BTreeMap<String, String>>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<String, String> = BTreeMap::new();
        for layer in layers {
            for (k, v) in layer {
                merged.insert(normalize_key(k), v.clone());
            }
        }
        let mut c = Config::default();
        for (k, v) in &merged {
            let v = v.as_str();
            match k.as_str() {
                "segmenter-endpoint" => c.segmenter_endpoint = Some(v.to_string()),
                "reranker-endpoint" => c.reranker_endpoint = Some(v.to_string()),
                "corpus" => c.corpus = Some(PathBuf::from(v)),
                "delta" => c.delta = parse_num(k, v)?,
                "normalize-length" => c.normalize_length = parse_bool(k, v)?,
                "e" => c.expansions = parse_num(k, v)?,
                "topk-beam" => c.topk_beam = parse_num(k, v)?,
                "alpha" => c.alpha = parse_num(k, v)?,
                "beta" => c.beta = parse_num(k, v)?,
                "alpha-grid" => c.alpha_grid = Some(parse_list(k, v)?),
                "beta-grid" => c.beta_grid = Some(parse_list(k, v)?),
                "grid-step" => c.grid_step = parse_num(k, v)?,
                "topk" => c.topk = parse_num(k, v)?,
                "strict" => c.strict = parse_bool(k, v)?,
                "lowercase" => c.lowercase = parse_bool(k, v)?,
                "oracle-n" => c.oracle_n = parse_list(k, v)?,
                "method" => c.method = v.parse().map_err(|e: String| anyhow!(e))?,
                "src" => c.src = v.to_string(),
                "tgt" => c.tgt = v.to_string(),
                "translator-endpoint" => c.translator_endpoint = Some(v.to_string()),
                "phrase-table" => c.phrase_table = Some(PathBuf::from(v)),
                "timeout" => c.timeout = Duration::from_secs_f64(parse_num(k, v)?),
                other => bail!("unknown config key {other:?} (known: {})", KEYS.join(", ")),
            }
        }
        if c.topk == 0 {
            bail!("topk must be >= 1");
        }
        if c.oracle_n.contains(&0) {
            bail!("oracle-n values must be >= 1");
        }
        Ok(c)
    }

    pub fn load(path: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let file = match path {
            Some(p) => parse_config_file(
                &fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?,
            )?,
            None => BTreeMap::new(),
        };
        Self::from_layers([&file, overrides])
    }

    pub fn weights(&self) -> Result<EnsembleWeights> {
        Ok(EnsembleWeights::new(self.alpha, self.beta)?)
    }

    pub fn beam(&self) -> Result<BeamParams> {
        Ok(BeamParams::new(self.expansions, self.topk_beam)?)
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            lowercase: self.lowercase,
            strict: self.strict,
        }
    }

    fn corpus_scorer(&self) -> Result<Option<ScorerHandle>> {
        let Some(path) = &self.corpus else {
            return Ok(None);
        };
        let model = CorpusModel::load(path, self.delta)?;
        let scorer = CorpusScorer::new(model, format!("corpus:{}", path.display()));
        Ok(Some(self.maybe_normalized(scorer)))
    }

    fn maybe_normalized<S: crate::scoring::Scorer + 'static>(&self, s: S) -> ScorerHandle {
        if self.normalize_length {
            Arc::new(LengthNormalized::new(s))
        } else {
            Arc::new(s)
        }
    }

    pub fn pipeline(&self) -> Result<SegmentationPipeline> {
        let corpus = self.corpus_scorer()?;
        let segmenter = match &self.segmenter_endpoint {
            Some(ep) => self.maybe_normalized(ExternalScorer::connect(
                ep,
                ScorerKind::ExternalAutoregressive,
                self.timeout,
            )?),
            None => corpus.clone().ok_or_else(|| {
                anyhow!("no segmenter configured: pass --corpus or --segmenter-endpoint")
            })?,
        };
        let reranker = match &self.reranker_endpoint {
            Some(ep) => self.maybe_normalized(ExternalScorer::connect(
                ep,
                ScorerKind::ExternalMasked,
                self.timeout,
            )?),
            None => corpus.unwrap_or_else(|| segmenter.clone()),
        };
        Ok(SegmentationPipeline::new(
            segmenter,
            reranker,
            self.beam()?,
            self.weights()?,
        ))
    }

    pub fn translator(&self) -> Result<Box<dyn Translator>> {
        if let Some(ep) = &self.translator_endpoint {
            return Ok(Box::new(ExternalTranslator::new(
                ep.parse()?,
                &self.src,
                &self.tgt,
                self.timeout,
            )));
        }
        if let Some(path) = &self.phrase_table {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading phrase table {}", path.display()))?;
            return Ok(Box::new(PhraseTableTranslator::parse(&text)));
        }
        Ok(Box::new(IdentityTranslator))
    }

    fn grids(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let default = default_grid(self.grid_step)?;
        Ok((
            self.alpha_grid.clone().unwrap_or_else(|| default.clone()),
            self.beta_grid.clone().unwrap_or(default),
        ))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub processed: usize,
    pub failed: usize,
}

impl RunSummary {
    /// Process exit code: nonzero only for strict-mode failures.
    pub fn exit_code(&self, strict: bool) -> i32 {
        i32::from(strict && self.failed > 0)
    }
}

/// One hashtag per input line; writes
/// `hashtag<TAB>segmentation<TAB>s<TAB>s'` rows, `topk` per hashtag.
pub fn cmd_segment(
    pipeline: &SegmentationPipeline,
    config: &Config,
    input: impl BufRead,
    mut out: impl Write,
) -> Result<RunSummary> {
    let mut summary = RunSummary::default();
    for (i, line) in input.lines().enumerate() {
        let line = line.context("reading input")?;
        let raw = line.trim();
        if raw.is_empty() {
            continue;
        }
        summary.processed += 1;
        match segment_line(pipeline, config, raw) {
            Ok(rows) => {
                for row in rows {
                    writeln!(out, "{row}")?;
                }
            }
            Err(e) => {
                summary.failed += 1;
                error!("line {}: {raw:?}: {e:#}", i + 1);
            }
        }
    }
    out.flush()?;
    Ok(summary)
}

fn segment_line(
    pipeline: &SegmentationPipeline,
    config: &Config,
    raw: &str,
) -> Result<Vec<String>> {
    let original = Hashtag::new(raw)?;
    let scored = if config.lowercase {
        Hashtag::new(&raw.to_lowercase())?
    } else {
        original.clone()
    };
    let output = pipeline.run(&scored)?;
    Ok(output
        .ranking
        .iter()
        .take(config.topk)
        .map(|d| {
            let shown = d
                .segmentation
                .transfer_to(&original)
                .map(|s| s.render())
                .unwrap_or_else(|| d.text.clone());
            format!("{raw}\t{shown}\t{}\t{}", d.segmenter, d.reranker)
        })
        .collect())
}

pub fn cmd_tune(
    pipeline: &SegmentationPipeline,
    config: &Config,
    dev: &Path,
    mut out: impl Write,
) -> Result<TuningReport> {
    let set = load_gold(dev, config.load_options())?;
    for s in &set.skipped {
        warn!("{}:{}: skipped: {}", dev.display(), s.line, s.reason);
    }
    let (alphas, betas) = config.grids()?;
    let report = pipeline.tune(&set.pairs, &alphas, &betas)?;
    writeln!(out, "alpha\tbeta\tf1\taccuracy")?;
    for p in &report.points {
        writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}",
            p.alpha, p.beta, p.f1, p.accuracy
        )?;
    }
    writeln!(
        out,
        "selected alpha={} beta={} f1={:.6} accuracy={:.6}",
        report.selected.alpha(),
        report.selected.beta(),
        report.f1,
        report.accuracy
    )?;
    Ok(report)
}

pub fn cmd_evaluate(
    pipeline: &SegmentationPipeline,
    config: &Config,
    gold_path: &Path,
    mut out: impl Write,
) -> Result<EvaluationReport> {
    let set = load_gold(gold_path, config.load_options())?;
    for s in &set.skipped {
        warn!("{}:{}: skipped: {}", gold_path.display(), s.line, s.reason);
    }
    let mut segmenter_rankings = Vec::with_capacity(set.pairs.len());
    let mut finals = Vec::with_capacity(set.pairs.len());
    let mut gold = Vec::with_capacity(set.pairs.len());
    for pair in &set.pairs {
        let output = pipeline.run(&pair.hashtag)?;
        segmenter_rankings.push(
            output
                .candidates
                .entries
                .iter()
                .map(|d| d.segmentation.clone())
                .collect::<Vec<_>>(),
        );
        finals.push(output.best().segmentation.clone());
        gold.push(pair.gold.clone());
    }
    let overall = span_f1(&finals, &gold)?;
    let oracle = config
        .oracle_n
        .iter()
        .map(|&n| {
            Ok(OracleRow {
                n,
                metrics: oracle_topn(&segmenter_rankings, &gold, n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = EvaluationReport {
        overall,
        oracle,
        skipped_lines: set.skipped,
    };
    write!(out, "{}", report.to_table())?;
    Ok(report)
}

#[derive(Debug, Serialize)]
struct TweetLog<'a> {
    line: usize,
    method: Method,
    input: &'a str,
    output: &'a str,
    code_mixed: Option<&'a str>,
    hashtags: &'a [HashtagRecord],
    unmatched: &'a [String],
    error: Option<String>,
}

/// One tweet per line in, one translated tweet per line out. Failed tweets
/// are echoed untranslated so output lines stay aligned with input lines.
pub fn cmd_pipeline(
    pipeline: &SegmentationPipeline,
    config: &Config,
    translator: &dyn Translator,
    input: impl BufRead,
    mut out: impl Write,
    mut log: Option<&mut dyn Write>,
) -> Result<RunSummary> {
    let policy = if config.strict {
        FailurePolicy::Strict
    } else {
        FailurePolicy::Lenient
    };
    let segmenter = PipelineSegmenter {
        pipeline: pipeline.clone(),
        lowercase: config.lowercase,
    };
    let mut summary = RunSummary::default();
    for (i, line) in input.lines().enumerate() {
        let line = line.context("reading tweets")?;
        let tweet = Tweet::new(line.trim_end_matches('\r'));
        summary.processed += 1;
        let result = match config.method {
            Method::T => method_t(&tweet, translator).map(|t| (t, None, Vec::new(), Vec::new())),
            Method::Cmt => method_cmt(&tweet, &segmenter, translator, policy)
                .map(|o| (o.text, Some(o.code_mixed), o.hashtags, Vec::new())),
            Method::Cmts => method_cmts(&tweet, &segmenter, translator, policy)
                .map(|o| (o.text, Some(o.code_mixed), o.hashtags, o.unmatched)),
        };
        let (text, code_mixed, hashtags, unmatched, err) = match result {
            Ok((t, c, h, u)) => (t, c, h, u, None),
            Err(e) => {
                summary.failed += 1;
                let reason = describe(&e);
                error!("tweet {}: {reason}", i + 1);
                (
                    tweet.text.clone(),
                    None,
                    Vec::new(),
                    Vec::new(),
                    Some(reason),
                )
            }
        };
        writeln!(out, "{text}")?;
        if let Some(log) = log.as_deref_mut() {
            let entry = TweetLog {
                line: i + 1,
                method: config.method,
                input: &tweet.text,
                output: &text,
                code_mixed: code_mixed.as_deref(),
                hashtags: &hashtags,
                unmatched: &unmatched,
                error: err,
            };
            writeln!(log, "{}", serde_json::to_string(&entry)?)?;
        }
    }
    out.flush()?;
    Ok(summary)
}

pub fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )),
        None => Box::new(BufReader::new(std::io::stdin())),
    })
}

pub fn create_output(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn defaults_match_operating_point() {
        let c = Config::default();
        assert_eq!((c.expansions, c.topk_beam), (13, 20));
        assert_eq!((c.alpha, c.beta), (0.2, 0.1));
        assert!(c.lowercase);
        assert_eq!(c.oracle_n, vec![1, 2, 5, 10]);
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_file("# tuned\nalpha = 0.35\nbeta=0.4\ntopk_beam = 8\n").unwrap();
        let flags = layer(&[("alpha", "0.5")]);
        let c = Config::from_layers([&file, &flags]).unwrap();
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.beta, 0.4);
        assert_eq!(c.topk_beam, 8);
    }

    #[test]
    fn bad_config_is_rejected() {
        assert!(parse_config_file("alpha 0.2").is_err());
        assert!(Config::from_layers([&layer(&[("nope", "1")])]).is_err());
        assert!(Config::from_layers([&layer(&[("e", "x")])]).is_err());
        assert!(Config::from_layers([&layer(&[("oracle-n", "1,0")])]).is_err());
        let c = Config::from_layers([&layer(&[("alpha", "2")])]).unwrap();
        assert!(c.weights().is_err());
    }

    #[test]
    fn lists_and_methods_parse() {
        let c = Config::from_layers([&layer(&[
            ("oracle-n", "1, 3"),
            ("alpha-grid", "0.2"),
            ("method", "CMTS"),
            ("strict", "true"),
        ])])
        .unwrap();
        assert_eq!(c.oracle_n, vec![1, 3]);
        assert_eq!(c.alpha_grid, Some(vec![0.2]));
        assert_eq!(c.method, Method::Cmts);
        assert!(c.strict);
    }

    #[test]
    fn missing_segmenter_is_an_error() {
        assert!(Config::default().pipeline().is_err());
    }

    #[test]
    fn exit_codes() {
        let s = RunSummary {
            processed: 2,
            failed: 1,
        };
        assert_eq!(s.exit_code(true), 1);
        assert_eq!(s.exit_code(false), 0);
    }
}
