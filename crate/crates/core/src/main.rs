use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use hashseg::cli::{self, Config};

#[derive(Parser)]
#[command(
    name = "hashseg",
    version,
    about = "Hashtag segmentation, evaluation and code-mixed translation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one hashtag per line (stdin or FILE).
    Segment { input: Option<PathBuf> },
    /// Grid-search the ensembler weights on a gold development file.
    Tune {
        dev: PathBuf,
        /// Write the selected weights as a config fragment.
        #[arg(long)]
        write_config: Option<PathBuf>,
        /// Write the full tuning report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Report top-1 and oracle top-N metrics on a gold file.
    Evaluate {
        gold: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Translate tweets with method T, CMT or CMTS.
    Pipeline {
        tweets: PathBuf,
        /// Sidecar JSON-lines log of per-hashtag decisions.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    segmenter_endpoint: Option<String>,
    #[arg(long, global = true)]
    reranker_endpoint: Option<String>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long = "e", global = true, value_name = "INT")]
    expansions: Option<usize>,
    #[arg(long, global = true, value_name = "INT")]
    topk_beam: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true, value_name = "LIST")]
    alpha_grid: Option<String>,
    #[arg(long, global = true, value_name = "LIST")]
    beta_grid: Option<String>,
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// Ranked rows per hashtag in `segment` output.
    #[arg(long, global = true, value_name = "INT")]
    topk: Option<usize>,
    #[arg(long, global = true)]
    strict: bool,
    /// Compare and score hashtags with their original case.
    #[arg(long, global = true)]
    no_lowercase: bool,
    #[arg(long, global = true)]
    normalize_length: bool,
    #[arg(long, global = true, value_name = "LIST")]
    oracle_n: Option<String>,
    #[arg(long, global = true, value_parser = ["t", "cmt", "cmts"])]
    method: Option<String>,
    #[arg(long, global = true, value_name = "LANG")]
    src: Option<String>,
    #[arg(long, global = true, value_name = "LANG")]
    tgt: Option<String>,
    #[arg(long, global = true)]
    translator_endpoint: Option<String>,
    #[arg(long, global = true)]
    phrase_table: Option<PathBuf>,
    /// Seconds to wait for an external backend response.
    #[arg(long, global = true)]
    timeout: Option<f64>,
}

impl Opts {
    fn overrides(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("segmenter-endpoint", self.segmenter_endpoint.clone());
        put("reranker-endpoint", self.reranker_endpoint.clone());
        put(
            "corpus",
            self.corpus.as_ref().map(|p| p.display().to_string()),
        );
        put("delta", self.delta.map(|v| v.to_string()));
        put("e", self.expansions.map(|v| v.to_string()));
        put("topk-beam", self.topk_beam.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("alpha-grid", self.alpha_grid.clone());
        put("beta-grid", self.beta_grid.clone());
        put("grid-step", self.grid_step.map(|v| v.to_string()));
        put("topk", self.topk.map(|v| v.to_string()));
        put("strict", self.strict.then(|| "true".to_string()));
        put("lowercase", self.no_lowercase.then(|| "false".to_string()));
        put(
            "normalize-length",
            self.normalize_length.then(|| "true".to_string()),
        );
        put("oracle-n", self.oracle_n.clone());
        put("method", self.method.clone());
        put("src", self.src.clone());
        put("tgt", self.tgt.clone());
        put("translator-endpoint", self.translator_endpoint.clone());
        put(
            "phrase-table",
            self.phrase_table.as_ref().map(|p| p.display().to_string()),
        );
        put("timeout", self.timeout.map(|v| v.to_string()));
        m
    }
}

fn run(cli: Cli) -> Result<i32> {
    let config = Config::load(cli.opts.config.as_deref(), &cli.opts.overrides())?;
    let pipeline = config.pipeline()?;
    let stdout = io::stdout();
    match cli.command {
        Command::Segment { input } => {
            let input = cli::open_input(input.as_deref())?;
            let summary = cli::cmd_segment(&pipeline, &config, input, stdout.lock())?;
            Ok(summary.exit_code(config.strict))
        }
        Command::Tune {
            dev,
            write_config,
            report,
        } => {
            let tuned = cli::cmd_tune(&pipeline, &config, &dev, stdout.lock())?;
            if let Some(path) = write_config {
                std::fs::write(&path, tuned.config_fragment())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = report {
                let mut w = cli::create_output(&path)?;
                serde_json::to_writer_pretty(&mut w, &tuned)?;
                writeln!(w)?;
            }
            Ok(0)
        }
        Command::Evaluate { gold, report } => {
            let evaluated = cli::cmd_evaluate(&pipeline, &config, &gold, stdout.lock())?;
            if let Some(path) = report {
                let mut w = cli::create_output(&path)?;
                serde_json::to_writer_pretty(&mut w, &evaluated)?;
                writeln!(w)?;
            }
            Ok(0)
        }
        Command::Pipeline { tweets, log } => {
            let translator = config.translator()?;
            let input = cli::open_input(Some(&tweets))?;
            let mut log_file = log.as_deref().map(cli::create_output).transpose()?;
            let summary = cli::cmd_pipeline(
                &pipeline,
                &config,
                translator.as_ref(),
                input,
                stdout.lock(),
                log_file.as_mut().map(|w| w as &mut dyn Write),
            )?;
            if let Some(mut w) = log_file {
                w.flush()?;
            }
            Ok(summary.exit_code(config.strict))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
