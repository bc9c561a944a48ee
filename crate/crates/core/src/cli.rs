//! Command-line front end: scenario-driven simulation, clustering,
//! one-shot barycenters, the discount-rate pipelines, and config validation.
//!
//! Exit codes: 0 success, 1 no consensus within max_steps, 2 config or
//! runtime error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::clustering::{kmeans, two_stage_consensus};
use crate::config::{parse_config, parse_json_file, write_json_file, ScenarioConfig};
use crate::engine::run_consensus;
use crate::error::{Error, Result};
use crate::metric::{frechet_barycenter, frechet_variance, WeightVector};
use crate::sdr::{
    run_gev_consensus, run_sdr_consensus, value_contingency, ContingencyModel, GevScenario,
    SDRScenario, Scheme,
};
use crate::trace::format_float;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_CONSENSUS: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "consensus",
    about = "Consensus formation in metric opinion spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    One,
    Two,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for traces and summaries.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Consensus scheme.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Cluster count for the two-stage scheme.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the evolutionary consensus scheme on a Euclidean scenario.
    Simulate(CommonArgs),
    /// Cluster the scenario anchors with metric k-means.
    Cluster(CommonArgs),
    /// Compute the uniform barycenter of the scenario anchors.
    Barycenter(CommonArgs),
    /// Run the social-discount-rate consensus pipeline.
    Sdr(CommonArgs),
    /// Run the GEV contingency consensus and valuation pipeline.
    Gev(CommonArgs),
    /// Validate a scenario file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses `argv` and runs the selected subcommand, mapping outcomes to the
/// exit-code contract.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success exits
            let code = if e.use_stderr() {
                EXIT_CONFIG_ERROR
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG_ERROR
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Cluster(args) => cluster(args),
        Command::Barycenter(args) => barycenter(args),
        Command::Sdr(args) => sdr(args),
        Command::Gev(args) => gev(args),
        Command::Validate { config } => {
            parse_config(&config)?;
            println!("ok");
            Ok(EXIT_OK)
        }
    }
}

fn load_scenario(args: &CommonArgs) -> Result<ScenarioConfig> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = parse_config(path)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(scheme) = args.scheme {
        config.scheme.two_stage = scheme == SchemeArg::Two;
    }
    if let Some(k) = args.k {
        config.scheme.k = Some(k);
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(args: &CommonArgs) -> PathBuf {
    args.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn simulate(args: CommonArgs) -> Result<i32> {
    let config = load_scenario(&args)?;
    let (space, anchors, profiles, _) = config.sample()?;
    let engine_config = config.engine_config();
    let dir = out_dir(&args);

    let accepted = if config.scheme.two_stage {
        let result = two_stage_consensus(
            &space,
            &anchors,
            &profiles,
            config.cluster_count(),
            &engine_config,
        )?;
        for (c, trace) in result.local_traces.iter().enumerate() {
            trace.emit(&dir, &format!("local_{c}"))?;
        }
        result.global_trace.emit(&dir, "global")?;
        !result.partial
    } else {
        let graph = config.build_graph(&space, &anchors)?;
        let trace = run_consensus(&space, anchors, profiles, graph, &engine_config, None)?;
        trace.emit(&dir, "trace")?;
        trace.accepted()
    };
    Ok(if accepted { EXIT_OK } else { EXIT_NO_CONSENSUS })
}

fn cluster(args: CommonArgs) -> Result<i32> {
    let config = load_scenario(&args)?;
    let (space, anchors, _, _) = config.sample()?;
    let k = args.k.unwrap_or_else(|| config.cluster_count());
    let assignment = kmeans(&space, &anchors, k, config.seed)?;
    let dir = out_dir(&args);
    std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_json_file(
        &dir.join("clusters.json"),
        &serde_json::json!({
            "k": k,
            "labels": assignment.labels,
            "centers": assignment.centers,
            "within_variances": assignment.within_variances,
            "objective_log": assignment.objective_log,
        }),
    )?;
    println!("objective: {}", format_float(assignment.objective()));
    Ok(EXIT_OK)
}

fn barycenter(args: CommonArgs) -> Result<i32> {
    let config = load_scenario(&args)?;
    let (space, anchors, _, _) = config.sample()?;
    let weights = WeightVector::uniform(anchors.len());
    let point = frechet_barycenter(&space, &anchors, &weights)?;
    let variance = frechet_variance(&space, &anchors, &weights)?;
    let dir = out_dir(&args);
    std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_json_file(
        &dir.join("barycenter.json"),
        &serde_json::json!({ "point": point, "frechet_variance": variance }),
    )?;
    println!("frechet_variance: {}", format_float(variance));
    Ok(EXIT_OK)
}

fn scheme_override(arg: SchemeArg) -> Scheme {
    match arg {
        SchemeArg::One => Scheme::OneStage,
        SchemeArg::Two => Scheme::TwoStage,
    }
}

fn sdr(args: CommonArgs) -> Result<i32> {
    let mut scenario: SDRScenario = match &args.config {
        Some(path) => parse_json_file(path)?,
        None => SDRScenario::default_scenario(args.seed.unwrap_or(0)),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
        scenario.engine.seed = seed;
    }
    if let Some(scheme) = args.scheme {
        scenario.scheme = scheme_override(scheme);
    }
    scenario.validate()?;
    let result = run_sdr_consensus(&scenario)?;
    let dir = out_dir(&args);
    result.traces.final_trace().emit(&dir, "sdr")?;
    write_json_file(
        &dir.join("sdr_consensus.json"),
        &serde_json::json!({
            "consensus": result.consensus,
            "partial": result.partial,
            "labels": result.labels,
        }),
    )?;
    Ok(if result.partial {
        EXIT_NO_CONSENSUS
    } else {
        EXIT_OK
    })
}

fn gev(args: CommonArgs) -> Result<i32> {
    let mut scenario: GevScenario = match &args.config {
        Some(path) => parse_json_file(path)?,
        None => GevScenario::default_scenario(args.seed.unwrap_or(0)),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
        scenario.engine.seed = seed;
    }
    if let Some(scheme) = args.scheme {
        scenario.scheme = scheme_override(scheme);
    }
    scenario.validate()?;
    let result = run_gev_consensus(&scenario)?;

    // value the consensus contingency under the default-scenario consensus
    // discount curve at a 50-period horizon
    let sdr_scenario = SDRScenario::default_scenario(scenario.seed);
    let curve = run_sdr_consensus(&sdr_scenario)?.consensus;
    let report = value_contingency(
        &curve,
        &ContingencyModel::Gev(result.fitted),
        50,
        100_000,
        scenario.seed,
    )?;

    let dir = out_dir(&args);
    result.traces.final_trace().emit(&dir, "gev")?;
    write_json_file(
        &dir.join("gev_consensus.json"),
        &serde_json::json!({
            "fitted": result.fitted,
            "partial": result.partial,
            "valuation": report,
            "discount_curve": curve,
        }),
    )?;
    Ok(if result.partial {
        EXIT_NO_CONSENSUS
    } else {
        EXIT_OK
    })
}
