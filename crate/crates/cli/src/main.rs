//! `rar`: find regions with distinct exposure associations on an areal map.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use rar_core::glm::{Family, GlmOptions};
use rar_core::inference::{run_pipeline, PipelineOptions};
use rar_core::io::{
    load_adjacency, load_dataset, read_labels, write_labels, write_report, write_text, ReportDocument, RunMetadata,
    SimulationReport,
};
use rar_core::segmentation::SegmentOptions;
use rar_core::simulation::{evaluate, KPolicy, SimConfig};
use rar_core::RarError;

#[derive(Parser)]
#[command(name = "rar", version, about = "Region-wise automatic regression for areal data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment the map into regions and estimate region-wise associations.
    Segment(SegmentArgs),
    /// Run the planted-region simulation study.
    Simulate(SimulateArgs),
    /// Estimate region-wise associations on a supplied partition.
    Fit(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Poisson,
    Gaussian,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Poisson => Family::Poisson,
            FamilyArg::Gaussian => Family::Gaussian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KPolicyArg {
    Fixed3,
    Bic,
}

#[derive(Args)]
struct InputArgs {
    /// Data file: unit_id, y, [offset,] exposure, covariates...
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Field delimiter: a single character, or `tab`.
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct SegmentArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Edge list: unit_id_a, unit_id_b.
    #[arg(long)]
    adjacency: PathBuf,
    /// Fixed number of regions.
    #[arg(long, conflicts_with_all = ["k_min", "k_max"])]
    k: Option<usize>,
    /// Smallest K tried when selecting by BIC.
    #[arg(long, requires = "k_max")]
    k_min: Option<usize>,
    /// Largest K tried when selecting by BIC.
    #[arg(long, requires = "k_min")]
    k_max: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Report file (JSON); printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Region label file: unit_id, region.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Record the creation time in the report.
    #[arg(long)]
    timestamp: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 30)]
    rows: usize,
    #[arg(long, default_value_t = 30)]
    cols: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Smoothing kernel standard deviation, in cells.
    #[arg(long, default_value_t = 1.5)]
    bandwidth: f64,
    #[arg(long, value_enum, default_value = "fixed3")]
    k_policy: KPolicyArg,
    /// Largest K considered by the `bic` policy.
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Summary file (JSON); printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timestamp: bool,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Region label file: unit_id, region.
    #[arg(long)]
    labels: PathBuf,
    /// Optional edge list, enabling within-region Moran's I.
    #[arg(long)]
    adjacency: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timestamp: bool,
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("delimiter must be one ASCII character or `tab`, got `{s}`")),
    }
}

fn now(enabled: bool) -> Option<u64> {
    enabled.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), RarError> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn glm_options(input: &InputArgs) -> GlmOptions {
    GlmOptions {
        max_iter: input.max_iter,
        tol: input.tol,
    }
}

fn run_segment(args: SegmentArgs) -> Result<(), RarError> {
    let family = Family::from(args.input.family);
    let data = load_dataset(&args.input.data, family, args.input.delimiter)?;
    let w = load_adjacency(&args.adjacency, data.unit_ids(), args.input.delimiter)?;
    for warning in w.warnings() {
        eprintln!("warning: {warning}");
    }
    let k_range = match (args.k, args.k_min, args.k_max) {
        (Some(k), _, _) => (k, k),
        (None, Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(RarError::validation("give either --k or both --k-min and --k-max")),
    };
    let opts = PipelineOptions {
        glm: glm_options(&args.input),
        segment: SegmentOptions {
            seed: args.seed,
            restarts: args.restarts,
            ..SegmentOptions::default()
        },
    };
    let analysis = run_pipeline(&data, &w, family, k_range, &opts)?;
    let mut metadata = RunMetadata::new("segment");
    metadata.seed = Some(args.seed);
    metadata.restarts = Some(args.restarts);
    metadata.k_range = Some(k_range);
    metadata.created_unix = now(args.timestamp);
    let doc = ReportDocument::from_analysis(&analysis, &data, metadata, w.warnings().to_vec());
    if let Some(path) = &args.labels_out {
        write_labels(&analysis.segmentation.partition, data.unit_ids(), path, args.input.delimiter)?;
    }
    match &args.out {
        Some(path) => {
            write_report(&doc, path)?;
            eprintln!(
                "chose K = {} ({} regions, ncut {:.6}); report written to {}",
                doc.chosen_k,
                doc.realized_k,
                analysis.segmentation.ncut,
                path.display()
            );
        }
        None => emit(&doc.render()?, None)?,
    }
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), RarError> {
    let config = SimConfig {
        rows: args.rows,
        cols: args.cols,
        sigma2: args.sigma2,
        bandwidth: args.bandwidth,
        seed: args.seed,
        ..SimConfig::default()
    };
    let policy = match args.k_policy {
        KPolicyArg::Fixed3 => KPolicy::Fixed3,
        KPolicyArg::Bic => KPolicy::Bic { k_max: args.k_max },
    };
    let opts = PipelineOptions {
        segment: SegmentOptions {
            seed: args.seed,
            restarts: args.restarts,
            ..SegmentOptions::default()
        },
        ..PipelineOptions::default()
    };
    let result = evaluate(args.replicates, &config, policy, &opts)?;
    let mut metadata = RunMetadata::new("simulate");
    metadata.seed = Some(args.seed);
    metadata.restarts = Some(args.restarts);
    metadata.created_unix = now(args.timestamp);
    let report = SimulationReport::new(metadata, result);
    emit(&report.render()?, args.out.as_ref())
}

fn run_fit(args: FitArgs) -> Result<(), RarError> {
    let family = Family::from(args.input.family);
    let data = load_dataset(&args.input.data, family, args.input.delimiter)?;
    let partition = read_labels(&args.labels, data.unit_ids(), args.input.delimiter)?;
    let w = args
        .adjacency
        .as_ref()
        .map(|p| load_adjacency(p, data.unit_ids(), args.input.delimiter))
        .transpose()?;
    let mut metadata = RunMetadata::new("fit");
    metadata.created_unix = now(args.timestamp);
    let doc = ReportDocument::for_partition(&data, &partition, family, w.as_ref(), &glm_options(&args.input), metadata)?;
    for warning in &doc.warnings {
        eprintln!("warning: {warning}");
    }
    emit(&doc.render()?, args.out.as_ref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Segment(a) => run_segment(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Fit(a) => run_fit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
