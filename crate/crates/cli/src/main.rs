use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use persona_core::analyzer::{
    default_prompt, AnalyzerBackend, Lexicon, LexiconBackend, PromptVariant, RemoteAnalyzer,
    ReplayBackend,
};
use persona_core::eval::{icc, load_dataset, read_ratings_csv, render_table, run_eval, DEFAULT_CONCURRENCY};
use persona_core::llm::{HttpTransport, LlmSettings};
use persona_core::orchestrator::{
    run_scripted_session, trajectory_rows, write_trajectory_csv, Backends, EchoGenerator, Scenario,
};

#[derive(Parser)]
#[command(name = "eval", version, about = "Analyzer evaluation, scripted sessions and rater agreement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Agency,
    Communion,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Agency => "agency",
            Axis::Communion => "communion",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Remote,
    Lexicon,
    Replay,
}

#[derive(Clone, Copy, ValueEnum)]
enum Prompt {
    Short,
    Long,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimAnalyzer {
    Lexicon,
    Replay,
}

#[derive(Subcommand)]
enum Command {
    /// Score a labeled dataset and report agreement with the labels.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_enum)]
        backend: Backend,
        #[arg(long, value_enum, default_value = "long")]
        prompt: Prompt,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Recorded predictions (JSON lines) for the replay backend.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Lexicon file for the lexicon backend.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Model name for the remote backend; defaults to PERSONA_LLM_MODEL.
        #[arg(long)]
        model: Option<String>,
        /// Let the remote model continue a prefilled answer.
        #[arg(long)]
        prefix: Option<String>,
        #[arg(long, default_value_t = DEFAULT_CONCURRENCY)]
        concurrency: usize,
    },
    /// Run a scripted conversation offline and export the state trajectory.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// One user message per line; blank lines are skipped.
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trajectory CSV destination; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "lexicon")]
        analyzer: SimAnalyzer,
        /// Recorded predictions for the replay analyzer.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Also write every turn trace as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// ICC(2,1) of a messages x raters CSV matrix.
    Icc {
        #[arg(long)]
        ratings: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            dataset,
            axis,
            backend,
            prompt,
            out,
            predictions,
            lexicon,
            model,
            prefix,
            concurrency,
        } => {
            let variant = match prompt {
                Prompt::Short => PromptVariant::Short,
                Prompt::Long => PromptVariant::Long,
            };
            let mut score_prompt = default_prompt(axis.name(), variant).expect("built-in axis");
            score_prompt.answer_prefix = prefix.clone();
            let analyzer = analyzer(backend, predictions.as_deref(), lexicon.as_deref(), model, prefix.is_some())?;
            let records = load_dataset(&dataset)
                .with_context(|| format!("loading {}", dataset.display()))?;
            let (_, report) = run_eval(&records, analyzer.as_ref(), &score_prompt, concurrency)?;
            print!("{}", render_table(std::slice::from_ref(&report)));
            if let Some(out) = out {
                let json = serde_json::to_string_pretty(&report)? + "\n";
                std::fs::write(&out, json).with_context(|| format!("writing {}", out.display()))?;
            }
        }
        Command::Simulate {
            scenario,
            script,
            seed,
            out,
            analyzer,
            predictions,
            transcript,
        } => {
            let scenario = Arc::new(
                Scenario::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?,
            );
            let messages: Vec<String> = std::fs::read_to_string(&script)
                .with_context(|| format!("reading {}", script.display()))?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string)
                .collect();
            let analyzer: Arc<dyn AnalyzerBackend> = match analyzer {
                SimAnalyzer::Lexicon => Arc::new(LexiconBackend::builtin()),
                SimAnalyzer::Replay => {
                    let Some(path) = predictions else {
                        bail!("--analyzer replay needs --predictions");
                    };
                    Arc::new(ReplayBackend::load(path)?)
                }
            };
            let backends = Backends {
                analyzer,
                generator: Arc::new(EchoGenerator),
            };
            let turns = run_scripted_session(scenario.clone(), &messages, seed, &backends)?;
            let rows = trajectory_rows(&scenario, &turns)?;
            match out {
                Some(path) => write_trajectory_csv(&rows, create(&path)?)?,
                None => write_trajectory_csv(&rows, std::io::stdout().lock())?,
            }
            if let Some(path) = transcript {
                let mut w = create(&path)?;
                for turn in &turns {
                    serde_json::to_writer(&mut w, turn)?;
                    w.write_all(b"\n")?;
                }
                w.flush()?;
            }
        }
        Command::Icc { ratings } => {
            let file = File::open(&ratings).with_context(|| format!("opening {}", ratings.display()))?;
            let matrix = read_ratings_csv(file)?;
            println!("{:.6}", icc(&matrix)?);
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn analyzer(
    backend: Backend,
    predictions: Option<&Path>,
    lexicon: Option<&Path>,
    model: Option<String>,
    prefix: bool,
) -> Result<Arc<dyn AnalyzerBackend>> {
    Ok(match backend {
        Backend::Lexicon => match lexicon {
            Some(path) => Arc::new(LexiconBackend::new(Lexicon::load(path)?)),
            None => Arc::new(LexiconBackend::builtin()),
        },
        Backend::Replay => {
            let Some(path) = predictions else {
                bail!("--backend replay needs --predictions");
            };
            Arc::new(ReplayBackend::load(path)?)
        }
        Backend::Remote => {
            let settings = LlmSettings::from_env().overlay(&LlmSettings {
                model,
                ..Default::default()
            });
            let Some(model) = settings.model.clone() else {
                bail!("--backend remote needs --model or PERSONA_LLM_MODEL");
            };
            Arc::new(
                RemoteAnalyzer::new(Arc::new(HttpTransport::new(&settings)), model)
                    .with_prefix_support(prefix),
            )
        }
    })
}
