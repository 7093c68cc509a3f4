//! Reference backend for the line protocol, used by integration tests.
//!
//! `hashseg-refserver score --corpus FILE [--delta D] [--fault KIND]` answers
//! scorer requests with smoothed unigram log-probabilities.
//! `hashseg-refserver translate [--table FILE]` answers translator requests
//! from a phrase table (identity without one).
//!
//! Fault kinds for exercising client error paths: `wrong-id`,
//! `wrong-count`, `non-finite`, `garbage`, `silent`, `exit`.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hashseg::scoring::protocol::{ScoreRequest, TranslateRequest};
use hashseg::scoring::{CorpusModel, DEFAULT_DELTA};
use hashseg::translate::PhraseTableTranslator;

#[derive(Parser)]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
    #[arg(long, global = true, value_enum)]
    fault: Option<Fault>,
}

#[derive(Subcommand)]
enum Mode {
    Score {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    Translate {
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    WrongId,
    WrongCount,
    NonFinite,
    Garbage,
    Silent,
    Exit,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let stdin = io::stdin();
    let mut out = io::stdout().lock();

    enum Backend {
        Score(CorpusModel),
        Translate(PhraseTableTranslator),
    }
    let backend = match &cli.mode {
        Mode::Score { corpus, delta } => Backend::Score(CorpusModel::load(corpus, *delta)?),
        Mode::Translate { table } => Backend::Translate(match table {
            Some(p) => PhraseTableTranslator::parse(
                &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            ),
            None => PhraseTableTranslator::new(),
        }),
    };

    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match cli.fault {
            Some(Fault::Exit) => return Ok(()),
            Some(Fault::Silent) => continue,
            Some(Fault::Garbage) => {
                writeln!(out, "this is not json")?;
                out.flush()?;
                continue;
            }
            _ => {}
        }
        let response = match &backend {
            Backend::Score(model) => {
                let req: ScoreRequest = serde_json::from_str(&line).context("bad request")?;
                let mut scores: Vec<serde_json::Value> =
                    req.texts.iter().map(|t| json!(model.score(t))).collect();
                let mut id = req.id;
                match cli.fault {
                    Some(Fault::WrongId) => id += 1,
                    Some(Fault::WrongCount) => {
                        scores.pop();
                    }
                    Some(Fault::NonFinite) => scores[0] = serde_json::Value::Null,
                    _ => {}
                }
                json!({ "id": id, "scores": scores })
            }
            Backend::Translate(table) => {
                let req: TranslateRequest = serde_json::from_str(&line).context("bad request")?;
                if req.src.is_empty() || req.tgt.is_empty() {
                    bail!("request without language pair");
                }
                let texts: Vec<String> =
                    req.texts.iter().map(|t| table.translate_text(t)).collect();
                json!({ "id": req.id, "texts": texts })
            }
        };
        writeln!(out, "{}", serde_json::to_string(&response)?)?;
        out.flush()?;
    }
    Ok(())
}
