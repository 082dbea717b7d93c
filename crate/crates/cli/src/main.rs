//! Command-line front end: schema validation, the detection pipeline, the
//! synthetic generator, and report re-rendering.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use washtrade_core::detect::ZeroRiskEpsilon;
use washtrade_core::ingest;
use washtrade_core::money::Money;
use washtrade_core::pipeline::{run_pipeline, PipelineError, RunConfig};
use washtrade_core::report::{render_text, Report};
use washtrade_core::synth::{generate, ScenarioMix};

#[derive(Parser)]
#[command(
    name = "washtrade",
    about = "Batch forensics for NFT wash trading on ERC-721 transfer exports",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the input files against the expected schemas.
    IngestCheck(InputArgs),
    /// Run the full pipeline: ingest, clean, confirm, characterize, price.
    Detect(DetectArgs),
    /// Generate a deterministic synthetic dataset with ground truth.
    Synth(SynthArgs),
    /// Re-render a JSON report as the human text summary.
    Report(ReportArgs),
}

/// Input paths. Every flag can also come from the config file under the
/// same name; a flag wins over the file.
#[derive(Args, Default, Clone)]
struct InputArgs {
    /// Key-value config file mirroring the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    transfers: Option<PathBuf>,
    #[arg(long)]
    transactions: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long = "marketplace-totals")]
    marketplace_totals: Option<PathBuf>,
    /// Recorded supportsInterface answers, used when no node is configured.
    #[arg(long)]
    compliance: Option<PathBuf>,
    /// Known bytecode-bearing addresses, one per line.
    #[arg(long)]
    contracts: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// Drop collections that do not prove ERC-721 support.
    #[arg(long = "require-compliance")]
    require_compliance: bool,
    /// Absolute zero-risk tolerance, in native units.
    #[arg(long = "epsilon-abs")]
    epsilon_abs: Option<String>,
    /// Relative zero-risk tolerance, as a fraction of member turnover.
    #[arg(long = "epsilon-rel")]
    epsilon_rel: Option<String>,
    /// Where to write the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the per-NFT fan-out (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario overrides on the default mix, e.g. `round_trip=10,noise_legit=100`.
    #[arg(long)]
    mix: Option<String>,
    /// Directory the dataset files are written into.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A report JSON file produced by `detect`.
    report: PathBuf,
}

/// Plain `key = value` lines; `#` comments and blank lines ignored.
fn load_config_file(path: &PathBuf) -> anyhow::Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut values = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), idx + 1))?;
        values.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(values)
}

struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(config: &Option<PathBuf>) -> anyhow::Result<Self> {
        let file = match config {
            Some(path) => load_config_file(path)?,
            None => BTreeMap::new(),
        };
        Ok(Settings { file })
    }

    fn path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone().or_else(|| self.file.get(key).map(PathBuf::from))
    }

    fn string(&self, flag: &Option<String>, key: &str) -> Option<String> {
        flag.clone().or_else(|| self.file.get(key).cloned())
    }

    fn flag(&self, flag: bool, key: &str) -> bool {
        flag || self.file.get(key).is_some_and(|v| v == "true" || v == "1")
    }
}

fn parse_money(value: &str, what: &str) -> anyhow::Result<Money> {
    value.parse::<Money>().map_err(|e| anyhow!("invalid {what} `{value}`: {e}"))
}

fn build_run_config(args: &DetectArgs) -> anyhow::Result<RunConfig> {
    let settings = Settings::load(&args.inputs.config)?;
    let transfers = settings
        .path(&args.inputs.transfers, "transfers")
        .ok_or_else(|| anyhow!("--transfers is required (flag or config file)"))?;
    let transactions = settings
        .path(&args.inputs.transactions, "transactions")
        .ok_or_else(|| anyhow!("--transactions is required (flag or config file)"))?;

    let mut epsilon = ZeroRiskEpsilon::default();
    if let Some(abs) = settings.string(&args.epsilon_abs, "epsilon-abs") {
        epsilon.abs = parse_money(&abs, "epsilon-abs")?;
        if epsilon.abs.is_negative() {
            return Err(anyhow!("epsilon-abs must be non-negative"));
        }
    }
    if let Some(rel) = settings.string(&args.epsilon_rel, "epsilon-rel") {
        epsilon.rel = parse_money(&rel, "epsilon-rel")?;
        if epsilon.rel.is_negative() {
            return Err(anyhow!("epsilon-rel must be non-negative"));
        }
    }

    let jobs = match settings.string(&None, "jobs") {
        Some(v) if args.jobs.is_none() => {
            Some(v.parse::<usize>().map_err(|_| anyhow!("invalid jobs `{v}`"))?)
        }
        _ => args.jobs,
    };

    Ok(RunConfig {
        transfers,
        transactions,
        labels: settings.path(&args.inputs.labels, "labels"),
        prices: settings.path(&args.inputs.prices, "prices"),
        marketplace_totals: settings.path(&args.inputs.marketplace_totals, "marketplace-totals"),
        compliance: settings.path(&args.inputs.compliance, "compliance"),
        contracts: settings.path(&args.inputs.contracts, "contracts"),
        require_compliance: settings.flag(args.require_compliance, "require-compliance"),
        epsilon,
        jobs,
        out: settings.path(&args.out, "out"),
    })
}

fn ingest_check(args: &InputArgs) -> anyhow::Result<()> {
    let settings = Settings::load(&args.config)?;
    let mut checked = 0usize;

    if let Some(path) = settings.path(&args.transfers, "transfers") {
        let events = ingest::load_transfers(&path)?;
        println!("transfers: {} records ({})", events.len(), path.display());
        checked += 1;
    }
    if let Some(path) = settings.path(&args.transactions, "transactions") {
        let records = ingest::load_transactions(&path)?;
        println!("transactions: {} records ({})", records.len(), path.display());
        checked += 1;
    }
    if let Some(path) = settings.path(&args.labels, "labels") {
        let registry = ingest::load_labels(&path)?;
        println!(
            "labels: {} service, {} marketplace, {} distributor, {} treasury ({})",
            registry.service_accounts.len(),
            registry.marketplaces.len(),
            registry.reward_distributors.len(),
            registry.treasuries.len(),
            path.display()
        );
        checked += 1;
    }
    if let Some(path) = settings.path(&args.prices, "prices") {
        let table = ingest::load_prices(&path)?;
        println!("prices: {} entries ({})", table.len(), path.display());
        checked += 1;
    }
    if let Some(path) = settings.path(&args.marketplace_totals, "marketplace-totals") {
        let totals = ingest::load_marketplace_totals(&path)?;
        println!("marketplace totals: {} rows ({})", totals.len(), path.display());
        checked += 1;
    }
    if let Some(path) = settings.path(&args.compliance, "compliance") {
        ingest::FixtureComplianceClient::from_path(&path)?;
        println!("compliance fixture: ok ({})", path.display());
        checked += 1;
    }
    if let Some(path) = settings.path(&args.contracts, "contracts") {
        ingest::CodePresenceOracle::from_path(&path)?;
        println!("contracts: ok ({})", path.display());
        checked += 1;
    }

    if checked == 0 {
        return Err(anyhow!("no input files given; pass --transfers and friends"));
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let settings = Settings::load(&args.config)?;
    let seed = match settings.string(&None, "seed") {
        Some(v) if args.seed.is_none() => {
            v.parse::<u64>().map_err(|_| anyhow!("invalid seed `{v}`"))?
        }
        _ => args.seed.unwrap_or(1),
    };
    let mix = match settings.string(&args.mix, "mix") {
        Some(spec) => ScenarioMix::parse(&spec).map_err(|e| anyhow!(e))?,
        None => ScenarioMix::default(),
    };
    let out = settings
        .path(&args.out, "out")
        .unwrap_or_else(|| PathBuf::from("synth-data"));

    let dataset = generate(seed, &mix);
    let paths = dataset.write_to_dir(&out)?;
    println!(
        "wrote {} transfers, {} transactions, {} planted activities, {} noise nfts",
        dataset.transfers.len(),
        dataset.transactions.len(),
        dataset.ground_truth.planted.len(),
        dataset.ground_truth.noise.len()
    );
    println!("dataset in {}", out.display());
    println!("ground truth: {}", paths.ground_truth.display());
    Ok(())
}

fn rerender(args: &ReportArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&args.report)
        .with_context(|| format!("cannot read report {}", args.report.display()))?;
    let report = Report::from_json(&text)
        .with_context(|| format!("{} is not a pipeline report", args.report.display()))?;
    print!("{}", render_text(&report));
    Ok(())
}

fn detect(args: &DetectArgs) -> Result<(), MainError> {
    let config = build_run_config(args).map_err(MainError::Input)?;
    let report = run_pipeline(&config).map_err(|e| match e {
        PipelineError::Internal(_) => MainError::Internal(anyhow!(e)),
        other => MainError::Input(anyhow!(other)),
    })?;
    print!("{}", render_text(&report));
    if let Some(out) = &config.out {
        eprintln!("report written to {}", out.display());
    }
    Ok(())
}

enum MainError {
    /// Bad inputs or configuration: exit code 1.
    Input(anyhow::Error),
    /// A violated internal invariant: exit code 2.
    Internal(anyhow::Error),
}

fn run(cli: Cli) -> Result<(), MainError> {
    match cli.command {
        Command::IngestCheck(args) => ingest_check(&args).map_err(MainError::Input),
        Command::Detect(args) => detect(&args),
        Command::Synth(args) => synth(&args).map_err(MainError::Input),
        Command::Report(args) => rerender(&args).map_err(MainError::Input),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(MainError::Input(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
        Err(MainError::Internal(err)) => {
            eprintln!("internal error: {err:#}");
            ExitCode::from(2)
        }
    }
}
