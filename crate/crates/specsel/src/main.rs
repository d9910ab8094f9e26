use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use specsel::data::load_csv;
use specsel::formats::{export_model, read_json, write_json, write_trace, SplitManifest};
use specsel::study::{aggregation_sweep, build_report, run_study, write_study, write_sweep_table, StudyConfig};
use specsel::{CliError, Result};
use specsel_core::{aggregate, merge_classes, run, score_outcome, stratified_split, CandidateOrder, Dataset, SearchConfig, Strategy};

#[derive(Parser, Debug)]
#[command(name = "specsel", version, about = "Discriminant analysis with stepwise BIC variable selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select variables and fit on a single split; writes the model, trace and manifest.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 0.5)]
        train_frac: f64,
        /// Seed of the split.
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        /// Reuse the split recorded in a manifest instead of drawing one.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated random-split study.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeats the study after averaging blocks of adjacent variables.
    AggregateSweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        study: StudyArgs,
        /// Comma-separated block widths, e.g. 1,10,30,70.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "class")]
    label_col: String,
    /// Class merges as from=to pairs, e.g. chicken=poultry,turkey=poultry.
    #[arg(long, value_delimiter = ',')]
    merge_classes: Vec<String>,
    /// Average blocks of this many adjacent variables before fitting.
    #[arg(long, default_value_t = 1)]
    aggregate: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value = "headlong")]
    strategy: Strategy,
    /// BIC difference a move must exceed; accepts "inf".
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    min_evidence: f64,
    #[arg(long, value_enum, default_value = "on")]
    updating: OnOff,
    #[arg(long)]
    max_selected: Option<usize>,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long, default_value = "bic-rank")]
    ordering: CandidateOrder,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long, default_value_t = 0.5)]
    train_frac: f64,
    #[arg(long, default_value_t = 50)]
    splits: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            strategy: self.strategy,
            min_evidence: self.min_evidence,
            updating: matches!(self.updating, OnOff::On),
            max_selected: self.max_selected,
            max_iterations: self.max_iterations,
            ordering: self.ordering,
        }
    }
}

impl StudyArgs {
    fn config(&self, search: SearchConfig) -> StudyConfig {
        StudyConfig {
            train_frac: self.train_frac,
            splits: self.splits,
            master_seed: self.master_seed,
            search,
            workers: self.workers,
        }
    }
}

fn parse_merges(pairs: &[String]) -> Result<Vec<(String, String)>> {
    pairs
        .iter()
        .map(|p| match p.split_once('=') {
            Some((from, to)) if !from.is_empty() && !to.is_empty() => Ok((from.to_string(), to.to_string())),
            _ => Err(CliError::Config(format!("bad class merge '{p}', expected from=to"))),
        })
        .collect()
}

/// Loads the CSV and applies class merging; aggregation is left to the caller.
fn load(args: &DataArgs) -> Result<Dataset> {
    let merges = parse_merges(&args.merge_classes)?;
    let d = load_csv(&args.data, &args.label_col)?;
    info!("loaded {} rows, {} variables, {} classes", d.n_rows(), d.n_vars(), d.n_classes());
    if merges.is_empty() {
        Ok(d)
    } else {
        Ok(merge_classes(&d, &merges)?)
    }
}

fn load_aggregated(args: &DataArgs) -> Result<Dataset> {
    let d = load(args)?;
    Ok(aggregate(&d, args.aggregate)?)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn cmd_fit(
    data: &DataArgs,
    search: &SearchArgs,
    train_frac: f64,
    seed: u64,
    manifest: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let d = load_aggregated(data)?;
    let config = search.config();
    let split = match manifest {
        Some(path) => read_json::<SplitManifest>(path)?.apply(&d)?,
        None => stratified_split(&d, train_frac, seed)?,
    };
    config.validate()?;
    let outcome = run(&split, &config).map_err(|e| CliError::SplitFailed(e.to_string()))?;
    let record = score_outcome(&split, &outcome);
    create_dir(out)?;
    write_json(&out.join("manifest.json"), &SplitManifest::from_split(&split, train_frac))?;
    write_json(&out.join("record.json"), &record)?;
    let trace_file = out.join("trace.jsonl");
    let file = fs::File::create(&trace_file).map_err(|source| CliError::Write { path: trace_file.clone(), source })?;
    write_trace(std::io::BufWriter::new(file), &record.trace).map_err(|source| CliError::Write { path: trace_file, source })?;
    if let Some(model) = &outcome.model {
        export_model(model, &d, &out.join("model.json"))?;
    }
    println!(
        "selected {:?} ({}), misclassification {:.4}",
        record.selected_var_ids,
        record.structure.map_or("none".to_string(), |s| s.to_string()),
        record.misclassification
    );
    Ok(())
}

fn cmd_evaluate(data: &DataArgs, search: &SearchArgs, study_args: &StudyArgs, out: &Path) -> Result<()> {
    let d = load_aggregated(data)?;
    let cfg = study_args.config(search.config());
    let study = run_study(&d, &cfg)?;
    let report = build_report(&d, &cfg, data.aggregate, &study);
    write_study(out, &d, &study, &report)?;
    let s = &report.summary;
    println!(
        "{} splits ({} failed): misclassification {:.4} (sd {:.4}), {:.1} variables selected",
        s.successful + s.failed,
        s.failed,
        s.mean_misclassification,
        s.sd_misclassification,
        s.mean_selected
    );
    if study.records.is_empty() {
        return Err(CliError::AllSplitsFailed(study.failures.len()));
    }
    Ok(())
}

fn cmd_sweep(data: &DataArgs, search: &SearchArgs, study_args: &StudyArgs, levels: &[usize], out: &Path) -> Result<()> {
    if data.aggregate != 1 {
        return Err(CliError::Config("--aggregate cannot be combined with --levels".into()));
    }
    let d = load(data)?;
    let cfg = study_args.config(search.config());
    let results = aggregation_sweep(&d, levels, &cfg)?;
    create_dir(out)?;
    for (row, agg, study) in &results {
        let report = build_report(agg, &cfg, row.level, study);
        write_study(&out.join(format!("level_{}", row.level)), agg, study, &report)?;
        println!("level {:>4}: {:>5} variables, misclassification {:.4} (sd {:.4})", row.level, row.variables, row.mean_misclassification, row.sd_misclassification);
    }
    let rows: Vec<_> = results.iter().map(|(r, _, _)| r.clone()).collect();
    write_sweep_table(&out.join("sweep.csv"), &rows)?;
    if rows.iter().all(|r| r.successful == 0) {
        return Err(CliError::AllSplitsFailed(rows.iter().map(|r| r.failed).sum()));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPECSEL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Fit { data, search, train_frac, master_seed, manifest, out } => {
            cmd_fit(data, search, *train_frac, *master_seed, manifest.as_deref(), out)
        }
        Command::Evaluate { data, search, study, out } => cmd_evaluate(data, search, study, out),
        Command::AggregateSweep { data, search, study, levels, out } => cmd_sweep(data, search, study, levels, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("specsel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
