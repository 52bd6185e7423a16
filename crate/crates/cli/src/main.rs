use std::io::Write;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use esl_cli::run::{
    cmd_atel, cmd_check, cmd_generate, cmd_kbp, run, AtelJob, AtelMode, CheckJob, FormulaSource, GenerateJob,
    KbpJob, KbpMode, Outcome,
};

/// Model checking for epistemic strategy logic.
///
/// Exit codes: 0 the property holds, 1 it fails, 2 usage or input error,
/// 3 a resource budget was exceeded.
#[derive(Parser)]
#[command(name = "esl", version)]
struct Cli {
    /// Print the machine record (JSON) instead of the report.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the checker (default: one per core).
    #[arg(long, global = true)]
    workers: Option<NonZeroUsize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct FormulaArg {
    /// Formula text.
    #[arg(long)]
    formula: Option<String>,
    /// File holding the formula.
    #[arg(long)]
    formula_file: Option<PathBuf>,
}

impl FormulaArg {
    fn source(&self) -> FormulaSource {
        match (&self.formula, &self.formula_file) {
            (Some(t), _) => FormulaSource::Text(t.clone()),
            (None, Some(p)) => FormulaSource::File(p.clone()),
            (None, None) => unreachable!("clap requires one of the two"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a formula holds at every initial point.
    Check {
        /// Environment file.
        #[arg(long)]
        env: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
        /// all, det, unif or unif-det.
        #[arg(long, default_value = "all")]
        class: String,
        /// auto, eslminus, ctlstark, full or reduction.
        #[arg(long, default_value = "auto")]
        engine: String,
        /// Bind a free variable: x=STATE:PROFILE_FILE.
        #[arg(long = "bind")]
        bindings: Vec<String>,
        /// Report a witness global state when one is available.
        #[arg(long)]
        witness: bool,
        /// Reduction engine: most extended-system states to build.
        #[arg(long, default_value = "200000")]
        ets_budget: NonZeroUsize,
        /// Reduction engine: most formula nodes in the rewritten formula.
        #[arg(long, default_value = "1000000")]
        node_budget: NonZeroUsize,
    },
    /// Alternating-time epistemic logic: direct semantics and translation.
    Atel {
        #[command(subcommand)]
        mode: AtelCommand,
    },
    /// Write environment and formula files for a construction.
    Generate {
        #[command(subcommand)]
        kind: GenerateCommand,
    },
    /// Knowledge-based programs.
    Kbp {
        #[command(subcommand)]
        mode: KbpCommand,
    },
}

#[derive(Args)]
struct AtelCommon {
    /// Environment file.
    #[arg(long)]
    env: PathBuf,
    #[command(flatten)]
    formula: FormulaArg,
    /// det or unif-det.
    #[arg(long, default_value = "det")]
    kind: String,
}

#[derive(Subcommand)]
enum AtelCommand {
    /// Evaluate at one state under the direct semantics.
    Eval {
        #[command(flatten)]
        common: AtelCommon,
        /// State name.
        #[arg(long)]
        state: String,
    },
    /// Print the translated formula.
    Translate {
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Compare the direct semantics with the translation at every state.
    Verify {
        #[command(flatten)]
        common: AtelCommon,
        #[arg(long, default_value = "auto")]
        engine: String,
    },
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// QBF reduction instance.
    Qbf {
        /// QBF text, e.g. "exists x1 forall x2 . (x1 | x2)".
        #[arg(long, conflicts_with = "qbf_file", required_unless_present = "qbf_file")]
        qbf: Option<String>,
        #[arg(long)]
        qbf_file: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Game environment with equilibrium formulas.
    Game {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Payment scenario with erasure properties.
    ErasureDemo {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct KbpCommon {
    /// Environment file.
    #[arg(long)]
    env: PathBuf,
    /// Program file.
    #[arg(long)]
    program: PathBuf,
}

#[derive(Subcommand)]
enum KbpCommand {
    /// Does some locally uniform profile implement the program?
    Exists {
        #[command(flatten)]
        common: KbpCommon,
    },
    /// Does every implementation satisfy the formula?
    Verify {
        #[command(flatten)]
        common: KbpCommon,
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// List every implementation.
    Find {
        #[command(flatten)]
        common: KbpCommon,
    },
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Check {
            env,
            formula,
            class,
            engine,
            bindings,
            witness,
            ets_budget,
            node_budget,
        } => {
            let job = CheckJob {
                env,
                formula: formula.source(),
                class,
                engine,
                bindings,
                witness,
                ets_budget,
                node_budget,
            };
            run("check", || cmd_check(&job))
        }
        Command::Atel { mode } => {
            let job = match mode {
                AtelCommand::Eval { common, state } => AtelJob {
                    mode: AtelMode::Eval { state },
                    env: Some(common.env),
                    formula: common.formula.source(),
                    kind: common.kind,
                    engine: "auto".into(),
                },
                AtelCommand::Translate { formula } => AtelJob {
                    mode: AtelMode::Translate,
                    env: None,
                    formula: formula.source(),
                    kind: "det".into(),
                    engine: "auto".into(),
                },
                AtelCommand::Verify { common, engine } => AtelJob {
                    mode: AtelMode::Verify,
                    env: Some(common.env),
                    formula: common.formula.source(),
                    kind: common.kind,
                    engine,
                },
            };
            run("atel", || cmd_atel(&job))
        }
        Command::Generate { kind } => {
            let job = match kind {
                GenerateCommand::Qbf { qbf, qbf_file, out } => {
                    let qbf = match (qbf, qbf_file) {
                        (Some(t), _) => FormulaSource::Text(t),
                        (None, Some(p)) => FormulaSource::File(p),
                        (None, None) => unreachable!("clap requires one of the two"),
                    };
                    GenerateJob::Qbf { qbf, out }
                }
                GenerateCommand::Game { game, out } => GenerateJob::Game { game, out },
                GenerateCommand::ErasureDemo { out } => GenerateJob::ErasureDemo { out },
            };
            run("generate", || cmd_generate(&job))
        }
        Command::Kbp { mode } => {
            let (mode, common) = match mode {
                KbpCommand::Exists { common } => (KbpMode::Exists, common),
                KbpCommand::Verify { common, formula } => (KbpMode::Verify(formula.source()), common),
                KbpCommand::Find { common } => (KbpMode::Find, common),
            };
            let job = KbpJob {
                mode,
                env: common.env,
                program: common.program,
            };
            run("kbp", || cmd_kbp(&job))
        }
    }
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        pool = pool.num_threads(n.get());
    }
    let pool = pool.build().context("starting worker threads")?;
    let outcome = pool.install(|| dispatch(cli.command));
    let mut stdout = std::io::stdout().lock();
    if cli.json {
        serde_json::to_writer_pretty(&mut stdout, &outcome.record).context("writing record")?;
        writeln!(stdout)?;
    } else if outcome.record.error.is_some() {
        eprintln!("{}", outcome.report);
    } else {
        write!(stdout, "{}", outcome.report)?;
    }
    Ok(ExitCode::from(outcome.code as u8))
}
