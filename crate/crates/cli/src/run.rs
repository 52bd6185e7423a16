//! Command implementations. Each returns an [`Outcome`]: the exit code,
//! a human-readable report and the machine record.

use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::time::Instant;

use esl_core::atel::{atel_labels, eval_atel, translate_atel, translated_at_states, AtelError, AtelKind};
use esl_core::check::{check, CheckError, CheckOptions, Context, Engine, Instance};
use esl_core::formula::{classify_fragment, desugar, parse_atel, parse_formula_for, render_formula, ParseError};
use esl_core::game::{game_to_env, ne_formula, pce_formula, GameError};
use esl_core::kbp::{check_kbp, find_implementations, is_implementation_direct, KbpError, KbpQuery, Program};
use esl_core::qbf::{qbf_to_instance, QbfError};
use esl_core::strategy::enumerate_profiles;
use esl_core::{Environment, Formula, GlobalState, StrategyClass, StrategyProfile};
use serde_json::json;

use crate::erasure::{erasure_env, erasure_formulas};
use crate::format::{
    parse_env, parse_game, parse_profile, parse_program, parse_qbf, render_env, render_profile, FormatError,
};
use crate::record::{env_digest, global_state_record, profile_record, stats_record, Record};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{}: {}", .source.line, .source.msg)]
    Format { path: String, source: FormatError },
    #[error("{origin}: {source}")]
    Formula { origin: String, source: ParseError },
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Atel(#[from] AtelError),
    #[error(transparent)]
    Kbp(#[from] KbpError),
    #[error(transparent)]
    Qbf(#[from] QbfError),
    #[error(transparent)]
    Game(#[from] GameError),
}

impl CliError {
    /// Budget overruns exit with 3, everything else with 2.
    pub fn exit_code(&self) -> i32 {
        let budget = |e: &CheckError| matches!(e, CheckError::BudgetExceeded { .. });
        match self {
            CliError::Check(e) | CliError::Atel(AtelError::Check(e)) | CliError::Kbp(KbpError::Check(e))
                if budget(e) =>
            {
                EXIT_BUDGET
            }
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
    pub record: Record,
}

impl Outcome {
    fn verdict(holds: bool, report: String, mut record: Record) -> Self {
        let code = if holds { EXIT_HOLDS } else { EXIT_FAILS };
        record.holds = Some(holds);
        record.exit_code = code;
        Outcome { code, report, record }
    }

    fn done(report: String, mut record: Record) -> Self {
        record.exit_code = EXIT_HOLDS;
        Outcome {
            code: EXIT_HOLDS,
            report,
            record,
        }
    }

    pub fn from_error(command: &str, err: &CliError) -> Self {
        let code = err.exit_code();
        let mut record = Record::new(command);
        record.exit_code = code;
        record.error = Some(err.to_string());
        Outcome {
            code,
            report: format!("error: {err}"),
            record,
        }
    }
}

/// Runs a command body, turning its error into an outcome.
pub fn run(command: &str, body: impl FnOnce() -> Result<Outcome, CliError>) -> Outcome {
    body().unwrap_or_else(|e| Outcome::from_error(command, &e))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn in_file<T>(path: &Path, r: Result<T, FormatError>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Format {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_env(path: &Path) -> Result<Environment, CliError> {
    let env = in_file(path, parse_env(&read(path)?))?;
    let violations = env.validate();
    if !violations.is_empty() {
        return Err(CheckError::Env(violations).into());
    }
    Ok(env)
}

fn load_program(path: &Path) -> Result<Program, CliError> {
    in_file(path, parse_program(&read(path)?))
}

/// `line:column` of a byte offset, both from 1.
fn line_col(text: &str, pos: usize) -> (usize, usize) {
    let before = &text[..pos.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, col)
}

fn locate(origin: &str, text: &str, err: ParseError) -> CliError {
    let origin = match &err {
        ParseError::Syntax { pos, .. } => {
            let (line, col) = line_col(text, *pos);
            format!("{origin}:{line}:{col}")
        }
        ParseError::Invalid(_) => origin.to_string(),
    };
    CliError::Formula { origin, source: err }
}

#[derive(Debug, Clone)]
pub enum FormulaSource {
    Text(String),
    File(PathBuf),
}

impl FormulaSource {
    fn load(&self) -> Result<(String, String), CliError> {
        match self {
            FormulaSource::Text(t) => Ok(("formula".into(), t.clone())),
            FormulaSource::File(p) => Ok((p.display().to_string(), read(p)?)),
        }
    }
}

fn formula_for(source: &FormulaSource, env: &Environment) -> Result<Formula, CliError> {
    let (origin, text) = source.load()?;
    parse_formula_for(text.trim(), env).map_err(|e| locate(&origin, text.trim(), e))
}

pub fn class_from_name(name: &str) -> Result<StrategyClass, CliError> {
    Ok(match name {
        "all" => StrategyClass::All,
        "det" => StrategyClass::Deterministic,
        "unif" => StrategyClass::LocallyUniform,
        "unif-det" => StrategyClass::LocallyUniformDeterministic,
        _ => return Err(CliError::Usage(format!("unknown class `{name}` (all, det, unif, unif-det)"))),
    })
}

pub fn atel_kind_from_name(name: &str) -> Result<AtelKind, CliError> {
    match name {
        "det" => Ok(AtelKind::Deterministic),
        "unif-det" => Ok(AtelKind::UniformDeterministic),
        _ => Err(CliError::Usage(format!("unknown ATEL strategy kind `{name}` (det, unif-det)"))),
    }
}

fn state_of(env: &Environment, name: &str) -> Result<u32, CliError> {
    env.state_id(name)
        .ok_or_else(|| CliError::Usage(format!("unknown state `{name}`")))
}

fn witness_text(env: &Environment, g: &GlobalState) -> String {
    format!("witness state: {}\n{}", env.state_name(g.state), render_profile(env, &g.profile))
}

#[derive(Debug, Clone)]
pub struct CheckJob {
    pub env: PathBuf,
    pub formula: FormulaSource,
    pub class: String,
    pub engine: String,
    /// `x=STATE:PROFILE_FILE`
    pub bindings: Vec<String>,
    pub witness: bool,
    pub ets_budget: NonZeroUsize,
    pub node_budget: NonZeroUsize,
}

impl CheckJob {
    pub fn new(env: impl Into<PathBuf>, formula: FormulaSource) -> Self {
        let defaults = CheckOptions::default();
        CheckJob {
            env: env.into(),
            formula,
            class: "all".into(),
            engine: "auto".into(),
            bindings: Vec::new(),
            witness: false,
            ets_budget: NonZeroUsize::new(defaults.ets_budget).expect("positive default"),
            node_budget: NonZeroUsize::new(defaults.node_budget).expect("positive default"),
        }
    }
}

fn parse_binding(env: &Environment, spec: &str) -> Result<(String, GlobalState), CliError> {
    let bad = || CliError::Usage(format!("binding `{spec}` is not `x=STATE:PROFILE_FILE`"));
    let (var, rest) = spec.split_once('=').ok_or_else(bad)?;
    let (state, file) = rest.split_once(':').ok_or_else(bad)?;
    let state = state_of(env, state)?;
    let path = Path::new(file);
    let profile = in_file(path, parse_profile(&read(path)?, env))?;
    Ok((var.to_string(), GlobalState { state, profile }))
}

pub fn cmd_check(job: &CheckJob) -> Result<Outcome, CliError> {
    let env = load_env(&job.env)?;
    let formula = formula_for(&job.formula, &env)?;
    let class = class_from_name(&job.class)?;
    let engine = Engine::from_name(&job.engine)?;
    let mut context = Context::new();
    for spec in &job.bindings {
        let (var, g) = parse_binding(&env, spec)?;
        context.insert(var, g);
    }
    let options = CheckOptions {
        engine,
        ets_budget: job.ets_budget.get(),
        node_budget: job.node_budget.get(),
    };
    let mut record = Record::new("check");
    record.env_digest = Some(env_digest(&env));
    record.formula = Some(render_formula(&formula));
    record.class = Some(class.name());
    record.bindings = (!context.is_empty())
        .then(|| context.iter().map(|(x, g)| (x.clone(), global_state_record(&env, g))).collect());
    let started = Instant::now();
    let instance = Instance::new(env, class, formula).with_context(context);
    let verdict = check(&instance, &options)?;
    let elapsed = started.elapsed().as_millis() as u64;
    let env = &instance.env;
    record.engine = Some(verdict.engine.name().into());
    record.fragment = Some(verdict.fragment.name().into());
    record.stats = Some(stats_record(&verdict.stats, elapsed));
    let mut report = format!(
        "{}\nfragment: {}  engine: {}  class: {}\nglobal states: {}  profiles: {}  time: {elapsed} ms\n",
        if verdict.holds { "holds" } else { "fails" },
        verdict.fragment.name(),
        verdict.engine.name(),
        instance.class.name(),
        verdict.stats.states_explored,
        verdict.stats.profiles_enumerated,
    );
    if job.witness {
        match &verdict.witness {
            Some(g) => {
                report.push_str(&witness_text(env, g));
                record.witness = Some(global_state_record(env, g));
            }
            None => report.push_str("no witness for this formula and verdict\n"),
        }
    }
    Ok(Outcome::verdict(verdict.holds, report, record))
}

#[derive(Debug, Clone)]
pub enum AtelMode {
    Eval { state: String },
    Translate,
    Verify,
}

#[derive(Debug, Clone)]
pub struct AtelJob {
    pub mode: AtelMode,
    pub env: Option<PathBuf>,
    pub formula: FormulaSource,
    pub kind: String,
    pub engine: String,
}

pub fn cmd_atel(job: &AtelJob) -> Result<Outcome, CliError> {
    let (origin, text) = job.formula.load()?;
    let f = parse_atel(text.trim()).map_err(|e| locate(&origin, text.trim(), e))?;
    let translated = translate_atel(&f);
    let mut record = Record::new("atel");
    record.formula = Some(f.to_string());
    if let AtelMode::Translate = job.mode {
        let text = render_formula(&translated);
        record.details = Some(json!({ "translation": text }));
        record.fragment = Some(classify_fragment(&desugar(&translated)).name().into());
        return Ok(Outcome::done(format!("{text}\n"), record));
    }
    let path = job
        .env
        .as_ref()
        .ok_or_else(|| CliError::Usage("this mode needs --env".into()))?;
    let env = load_env(path)?;
    let kind = atel_kind_from_name(&job.kind)?;
    record.env_digest = Some(env_digest(&env));
    record.class = Some(kind.name().into());
    match &job.mode {
        AtelMode::Eval { state } => {
            let s = state_of(&env, state)?;
            let holds = eval_atel(&env, kind, s, &f)?;
            record.details = Some(json!({ "state": state }));
            let report = format!("{} at {state}\n", if holds { "holds" } else { "fails" });
            Ok(Outcome::verdict(holds, report, record))
        }
        AtelMode::Verify => {
            let engine = Engine::from_name(&job.engine)?;
            record.engine = Some(engine.name().into());
            let direct = atel_labels(&env, kind, &f)?;
            let translated = translated_at_states(&env, kind, &f, engine)?;
            let mut rows = Vec::new();
            let mut report = String::new();
            let mut disagree = Vec::new();
            for (s, (&d, &(all, some))) in direct.iter().zip(&translated).enumerate() {
                let name = env.state_name(s as u32);
                if d != all || d != some {
                    disagree.push(name.to_string());
                }
                rows.push(json!({ "state": name, "direct": d, "all_points": all, "some_points": some }));
                report.push_str(&format!("{name}: direct {d}, translated all {all}, some {some}\n"));
            }
            report.push_str(&if disagree.is_empty() {
                "agree at all states\n".to_string()
            } else {
                format!("disagree at {}\n", disagree.join(", "))
            });
            record.details = Some(json!({ "states": rows }));
            Ok(Outcome::verdict(disagree.is_empty(), report, record))
        }
        AtelMode::Translate => unreachable!("handled above"),
    }
}

#[derive(Debug, Clone)]
pub enum GenerateJob {
    Qbf { qbf: FormulaSource, out: PathBuf },
    Game { game: PathBuf, out: PathBuf },
    ErasureDemo { out: PathBuf },
}

/// Files written by a generator, in order, with the class to check them in.
struct Bundle {
    files: Vec<(String, String)>,
    class: &'static str,
    formulas: Vec<String>,
}

fn write_bundle(out: &Path, bundle: Bundle, mut record: Record) -> Result<Outcome, CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    for (name, text) in &bundle.files {
        let path = out.join(name);
        write(&path, text)?;
        written.push(path.display().to_string());
    }
    let env = out.join(&bundle.files[0].0);
    let mut report = String::new();
    for f in &bundle.formulas {
        report.push_str(&format!(
            "esl check --env {} --formula-file {} --class {}\n",
            env.display(),
            out.join(f).display(),
            bundle.class
        ));
    }
    record.class = Some(bundle.class.into());
    record.details = Some(json!({ "files": written }));
    Ok(Outcome::done(report, record))
}

fn formula_file(f: &Formula) -> String {
    format!("{}\n", render_formula(f))
}

pub fn cmd_generate(job: &GenerateJob) -> Result<Outcome, CliError> {
    let mut record = Record::new("generate");
    let (out, bundle) = match job {
        GenerateJob::Qbf { qbf, out } => {
            let (origin, text) = qbf.load()?;
            let q = parse_qbf(&text).map_err(|source| CliError::Format { path: origin, source })?;
            let q = q.normalize();
            let (env, f, _) = qbf_to_instance(&q)?;
            record.env_digest = Some(env_digest(&env));
            record.formula = Some(render_formula(&f));
            let files = vec![
                ("qbf.env".into(), render_env(&env)),
                ("qbf.esl".into(), formula_file(&f)),
                ("instance.qbf".into(), format!("{q}\n")),
            ];
            (out, Bundle { files, class: "unif-det", formulas: vec!["qbf.esl".into()] })
        }
        GenerateJob::Game { game, out } => {
            let g = in_file(game, parse_game(&read(game)?))?;
            let enc = game_to_env(&g);
            record.env_digest = Some(env_digest(&enc.env));
            let files = vec![
                ("game.env".into(), render_env(&enc.env)),
                ("ne.esl".into(), formula_file(&ne_formula(&g))),
                ("pce.esl".into(), formula_file(&pce_formula(&g))),
            ];
            let formulas = vec!["ne.esl".into(), "pce.esl".into()];
            (out, Bundle { files, class: "unif-det", formulas })
        }
        GenerateJob::ErasureDemo { out } => {
            let env = erasure_env();
            record.env_digest = Some(env_digest(&env));
            let mut files = vec![("demo.env".to_string(), render_env(&env))];
            let mut formulas = Vec::new();
            for (name, f) in erasure_formulas() {
                let file = format!("{name}.esl");
                files.push((file.clone(), formula_file(&f)));
                formulas.push(file);
            }
            (out, Bundle { files, class: "unif", formulas })
        }
    };
    write_bundle(out, bundle, record)
}

#[derive(Debug, Clone)]
pub enum KbpMode {
    Exists,
    Verify(FormulaSource),
    Find,
}

#[derive(Debug, Clone)]
pub struct KbpJob {
    pub mode: KbpMode,
    pub env: PathBuf,
    pub program: PathBuf,
}

/// Why a program may have no implementation: some profile leaves an agent
/// without an enabled clause at a reachable state.
fn coverage_note(env: &Environment, program: &Program) -> Option<String> {
    let profiles = enumerate_profiles(env, &StrategyClass::LocallyUniform).ok()?;
    profiles.iter().find_map(|p| match is_implementation_direct(env, p, program) {
        Err(e @ KbpError::Coverage { .. }) => Some(format!("note: {e} under some profiles\n")),
        _ => None,
    })
}

/// An implementation at whose points `phi` fails somewhere.
fn violating_implementation(
    env: &Environment,
    program: &Program,
    phi: &Formula,
) -> Result<Option<StrategyProfile>, CliError> {
    for p in find_implementations(env, program, &StrategyClass::LocallyUniform)? {
        let everywhere = Formula::Dist(Default::default(), Box::new(phi.clone()));
        let instance = Instance::new(env.clone(), StrategyClass::Explicit(vec![p.clone()]), everywhere);
        if !check(&instance, &CheckOptions::default())?.holds {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

pub fn cmd_kbp(job: &KbpJob) -> Result<Outcome, CliError> {
    let env = load_env(&job.env)?;
    let program = load_program(&job.program)?;
    program.validate(&env)?;
    let mut record = Record::new("kbp");
    record.env_digest = Some(env_digest(&env));
    record.class = Some(StrategyClass::LocallyUniform.name());
    match &job.mode {
        KbpMode::Exists => {
            let v = check_kbp(&env, &program, &KbpQuery::Exists, CheckOptions::default())?;
            record.formula = Some(render_formula(&v.formula));
            record.fragment = Some(v.verdict.fragment.name().into());
            let mut report = String::new();
            if let Some(w) = &v.witness {
                report.push_str("implementation exists\n");
                report.push_str(&render_profile(&env, w));
                record.details = Some(json!({ "implementation": profile_record(&env, w) }));
            } else {
                report.push_str("no implementation\n");
                report.push_str(&coverage_note(&env, &program).unwrap_or_default());
            }
            Ok(Outcome::verdict(v.holds, report, record))
        }
        KbpMode::Verify(source) => {
            let phi = formula_for(source, &env)?;
            let v = check_kbp(&env, &program, &KbpQuery::AllSatisfy(phi.clone()), CheckOptions::default())?;
            record.formula = Some(render_formula(&v.formula));
            record.fragment = Some(v.verdict.fragment.name().into());
            if v.holds {
                return Ok(Outcome::verdict(true, "every implementation satisfies the formula\n".into(), record));
            }
            let mut report = String::from("some implementation violates the formula\n");
            if let Some(p) = violating_implementation(&env, &program, &phi)? {
                report.push_str(&render_profile(&env, &p));
                record.details = Some(json!({ "violating_implementation": profile_record(&env, &p) }));
            }
            Ok(Outcome::verdict(false, report, record))
        }
        KbpMode::Find => {
            let found = find_implementations(&env, &program, &StrategyClass::LocallyUniform)?;
            let mut report = format!("{} implementation(s)\n", found.len());
            for (k, p) in found.iter().enumerate() {
                report.push_str(&format!("# implementation {}\n{}", k + 1, render_profile(&env, p)));
            }
            if found.is_empty() {
                report.push_str(&coverage_note(&env, &program).unwrap_or_default());
            }
            let list: Vec<_> = found.iter().map(|p| profile_record(&env, p)).collect();
            record.details = Some(json!({ "implementations": list }));
            Ok(Outcome::verdict(!found.is_empty(), report, record))
        }
    }
}
