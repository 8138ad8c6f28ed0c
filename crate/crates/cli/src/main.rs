use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use solvform::error::Error;
use solvform::report::{analyze, verify_report, AnalysisOptions, AnalysisReport, Stage};
use solvform::spectral::{parse_spec, AlmostAbelianSpec};
use solvform::symplectic::{parse_candidate, SearchOptions};

/// Minimal models, formality and symplectic forms of almost abelian solvmanifolds.
#[derive(Parser, Debug)]
#[command(name = "solvform", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Unipotent subalgebra of the fiber cohomology.
    Unipotent(StageArgs),
    /// Betti numbers and representatives of the modified Lie algebra.
    Cohomology(StageArgs),
    /// Minimal model of the unipotent subalgebra.
    Model(StageArgs),
    /// Twisted model and the formality verdict.
    Formality(StageArgs),
    /// Search for a symplectic form of the form F + η∧α^n.
    Symplectic(SymplecticArgs),
    /// Every stage at once.
    Analyze(SymplecticArgs),
    /// Re-derive the claims of a JSON report from its spec.
    Verify {
        report: PathBuf,
        spec: PathBuf,
    },
}

#[derive(Args, Debug)]
struct StageArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    max_degree: usize,
    /// Also write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct SymplecticArgs {
    #[command(flatten)]
    common: StageArgs,
    /// JSON file with a candidate pair {"f": {...}, "eta": {...}} to check instead of searching.
    #[arg(long)]
    candidate: Option<PathBuf>,
    /// Maximum number of grid points to evaluate.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

enum Failure {
    Input(String),
    Internal(String),
    Rejected,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<AlmostAbelianSpec, Failure> {
    let text = read(path)?;
    parse_spec(&text).map_err(|e| match e {
        Error::Schema { .. } => Failure::Input(format!("{}: {e}", path.display())),
        other => Failure::Input(format!("{}: schema violation: {other}", path.display())),
    })
}

fn run_stage(stage: Stage, args: &StageArgs, search: SearchOptions) -> Result<(), Failure> {
    let spec = load_spec(&args.input)?;
    run_on(&spec, stage, args, search)
}

fn run_on(spec: &AlmostAbelianSpec, stage: Stage, args: &StageArgs, search: SearchOptions) -> Result<(), Failure> {
    if stage == Stage::Symplectic && spec.total_dim() % 2 == 1 {
        return Err(Error::SymplecticUndefined(spec.total_dim()).into());
    }
    let options = AnalysisOptions {
        degree_bound: args.max_degree,
        stage,
        search,
    };
    let report = analyze(spec, &options)?;
    let json = report.to_json();
    if let Some(path) = &args.report {
        fs::write(path, &json)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    match args.format {
        Format::Text => print!("{}", report.render_text()),
        Format::Json => print!("{json}"),
    }
    Ok(())
}

fn search_options(args: &SymplecticArgs, n: usize) -> Result<SearchOptions, Failure> {
    let mut search = SearchOptions::default();
    if let Some(budget) = args.budget {
        search.budget = budget;
    }
    if let Some(path) = &args.candidate {
        search.candidate = Some(parse_candidate(&read(path)?, n)?);
    }
    Ok(search)
}

fn run_search_stage(stage: Stage, args: &SymplecticArgs) -> Result<(), Failure> {
    let spec = load_spec(&args.common.input)?;
    let search = search_options(args, spec.n)?;
    run_on(&spec, stage, &args.common, search)
}

fn run_verify(report_path: &Path, spec_path: &Path) -> Result<(), Failure> {
    let report = AnalysisReport::from_json(&read(report_path)?)?;
    let spec = load_spec(spec_path)?;
    let outcome = verify_report(&report, &spec)?;
    for check in &outcome.checks {
        if check.passed {
            println!("ok   {}", check.claim);
        } else {
            println!("FAIL {}: {}", check.claim, check.detail);
        }
    }
    if outcome.passed() {
        println!("verified {} claims", outcome.checks.len());
        Ok(())
    } else {
        let first = outcome.failures().next().map(|c| c.claim.clone()).unwrap_or_default();
        eprintln!("verification failed at {first}");
        Err(Failure::Rejected)
    }
}

fn main() -> ExitCode {
    // Usage errors count as input errors; exit code 2 is reserved for internal failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Unipotent(a) => run_stage(Stage::Unipotent, a, SearchOptions::default()),
        Command::Cohomology(a) => run_stage(Stage::Cohomology, a, SearchOptions::default()),
        Command::Model(a) => run_stage(Stage::Model, a, SearchOptions::default()),
        Command::Formality(a) => run_stage(Stage::Formality, a, SearchOptions::default()),
        Command::Symplectic(a) => run_search_stage(Stage::Symplectic, a),
        Command::Analyze(a) => run_search_stage(Stage::All, a),
        Command::Verify { report, spec } => run_verify(report, spec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Rejected) => ExitCode::from(1),
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
