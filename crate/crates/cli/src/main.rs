//! `interact`: command-line front end for the harness pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use interact_core::dialogue::{Scenario, SummaryMode};
use interact_core::pipeline::{BorrowSpec, Pipeline, PipelineError, RunManifest};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "interact", version, about = "Student-teacher concept-learning harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the corpus and lint any authored quizzes.
    Validate,
    /// Generate lessons and adversarially filtered quizzes.
    Author,
    /// Run the scenario matrix and write records.csv.
    Run,
    /// Delta, recovery and per-round curve tables from records.csv.
    Report,
    /// Per-round feature matrix from the finished transcripts.
    Features,
    /// Fit the learning-gain regressor on features.csv.
    Gainfit,
}

/// Every flag overrides the matching manifest field.
#[derive(Debug, Args)]
struct Shared {
    /// Run manifest (TOML or JSON). A corpus manifest also works.
    #[arg(long, visible_alias = "config", global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    corpus: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    run_set: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    parallel: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',', value_name = "0,1,2")]
    seed_list: Option<Vec<u64>>,
    #[arg(long, global = true)]
    rounds: Option<u32>,
    /// Repeat or comma-separate to run several scenarios.
    #[arg(long, global = true, value_delimiter = ',')]
    scenario: Option<Vec<Scenario>>,
    #[arg(long, global = true, value_delimiter = ',')]
    student_model: Option<Vec<String>>,
    #[arg(long, global = true)]
    teacher_model: Option<String>,
    #[arg(long, global = true)]
    lesson_model: Option<String>,
    #[arg(long, global = true)]
    quiz_model: Option<String>,
    #[arg(long, global = true)]
    weak_model: Option<String>,
    #[arg(long, global = true, value_name = "concat|summarize")]
    summary_mode: Option<SummaryMode>,
    /// Student whose transcripts borrowed runs replay.
    #[arg(long, global = true, value_name = "STUDENT")]
    borrow_from: Option<String>,
    #[arg(long, global = true, requires = "borrow_from")]
    borrow_scenario: Option<Scenario>,
    /// Also run the teacher on each quiz with the context in view.
    #[arg(long, global = true)]
    teacher_reference: bool,
    #[arg(long, global = true)]
    final_round_only: bool,
    /// Do not send the run seed to the provider.
    #[arg(long, global = true)]
    no_forward_seed: bool,
    /// Scripted provider fixture used in place of every network provider.
    #[arg(long, global = true, value_name = "PATH")]
    scripted: Option<PathBuf>,
    /// Regenerate artifacts that already exist.
    #[arg(long, global = true)]
    force: bool,
}

impl Shared {
    fn manifest(&self) -> Result<RunManifest, PipelineError> {
        let mut m = match (&self.manifest, &self.corpus) {
            (Some(p), _) => RunManifest::load(p)?,
            (None, Some(c)) => RunManifest::new(c),
            (None, None) => return Err(PipelineError::Config("pass --manifest or --corpus".into())),
        };
        if let Some(c) = &self.corpus {
            m.corpus = c.clone();
        }
        if let Some(v) = &self.out {
            m.out = v.clone();
        }
        if let Some(v) = &self.run_set {
            m.run_set = v.clone();
        }
        if let Some(v) = self.parallel {
            m.parallel = v;
        }
        if let Some(v) = &self.seed_list {
            m.seeds = v.clone();
        }
        if let Some(v) = self.rounds {
            m.rounds = v;
        }
        if let Some(v) = &self.scenario {
            m.scenarios = v.clone();
        }
        if let Some(v) = &self.student_model {
            m.student_models = v.clone();
        }
        if let Some(v) = &self.teacher_model {
            m.teacher_model = v.clone();
        }
        if let Some(v) = &self.lesson_model {
            m.lesson_model = Some(v.clone());
        }
        if let Some(v) = &self.quiz_model {
            m.quiz_model = Some(v.clone());
        }
        if let Some(v) = &self.weak_model {
            m.weak_model = v.clone();
        }
        if let Some(v) = self.summary_mode {
            m.summary_mode = v;
        }
        if let Some(student) = &self.borrow_from {
            m.borrow = Some(BorrowSpec {
                from_student: student.clone(),
                from_scenario: self.borrow_scenario.unwrap_or(Scenario::DynamicWithLesson),
            });
        }
        m.teacher_reference |= self.teacher_reference;
        m.final_round_only |= self.final_round_only;
        m.forward_seed &= !self.no_forward_seed;
        if let Some(v) = &self.scripted {
            m.scripted = Some(v.clone());
        }
        Ok(m)
    }
}

async fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let pipeline = Pipeline::new(cli.shared.manifest()?)?;
    match cli.command {
        Command::Validate => {
            let report = pipeline.cmd_validate()?;
            print!("{report}");
            if !report.ok() {
                return Err(PipelineError::Validation(format!("{} error(s)", report.errors.len())));
            }
        }
        Command::Author => {
            let s = pipeline.cmd_author(cli.shared.force).await?;
            println!(
                "lessons written: {}, quizzes written: {}, skipped: {}, lint warnings: {}",
                s.lessons_written, s.quizzes_written, s.skipped, s.lint_warnings
            );
        }
        Command::Run => {
            let s = pipeline.cmd_run().await?;
            println!(
                "transcripts: {} ({} already done), records: {} -> {}",
                s.transcripts,
                s.already_done,
                s.records,
                pipeline.records_path().display()
            );
        }
        Command::Report => {
            for p in pipeline.cmd_report()? {
                println!("{}", p.display());
            }
        }
        Command::Features => {
            let m = pipeline.cmd_features()?;
            println!("{} rows -> {}", m.len(), pipeline.run_dir().join("features.csv").display());
        }
        Command::Gainfit => {
            let s = pipeline.cmd_gainfit()?;
            println!(
                "rows: {}, held-out R2: {:.4} ({} train / {} test)",
                s.rows, s.held_out.r2, s.held_out.train_rows, s.held_out.test_rows
            );
            for (domain, r2) in &s.per_domain_r2 {
                println!("  {domain}: {r2:.4}");
            }
            for (name, v) in &s.top_features {
                println!("  {name}\t{v:.4}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; help and version succeed.
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let result = tokio::runtime::Runtime::new()
        .context("starting the async runtime")
        .map_err(|e| PipelineError::Config(format!("{e:#}")))
        .and_then(|rt| rt.block_on(execute(&cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
