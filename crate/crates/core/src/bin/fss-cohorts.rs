use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fss_cohorts::config::{parse_periods, RunConfig, StaffPresence, SurvivalConstraint};
use fss_cohorts::error::{Error, Result};
use fss_cohorts::ingest::{load_dataset, validate_dataset};
use fss_cohorts::pipeline::analyze;
use fss_cohorts::report::{build_bundle, Stage};
use fss_cohorts::synth::{independence_baseline, write_synthetic, SynthParams};

#[derive(Parser)]
#[command(
    name = "fss-cohorts",
    version,
    about = "Productivity scoring and cohort longevity analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and cross-check the three input tables.
    IngestCheck(RunArgs),
    /// Write per-researcher scores and percentiles.
    Score(RunArgs),
    /// Scores plus TS / UN / TS_mu2 membership per period.
    Cohorts(RunArgs),
    /// Cohort tables plus longevity, concentration and Euler outputs.
    Longevity(RunArgs),
    /// Aggregate tables only: longevity, career, mobility, report.json.
    Report(RunArgs),
    /// Everything.
    Run(RunArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SurvivalArg {
    AllPeriodsOnStaff,
    PairwiseOnStaff,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresenceArg {
    Eligible,
    Roster,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    roster: Option<PathBuf>,
    #[arg(long)]
    publications: Option<PathBuf>,
    #[arg(long)]
    authorships: Option<PathBuf>,
    /// Input directory holding roster.csv, publications.csv, authorships.csv.
    #[arg(long)]
    data: Option<PathBuf>,
    /// e.g. A=2001-2004,B=2005-2008,C=2009-2012
    #[arg(long)]
    periods: Option<String>,
    #[arg(long)]
    top_share: Option<f64>,
    /// Skip the CSS second-mean cohort.
    #[arg(long)]
    no_css: bool,
    /// Use score >= mu2 instead of score > mu2.
    #[arg(long)]
    css_mu2_inclusive: bool,
    #[arg(long, value_enum)]
    survival: Option<SurvivalArg>,
    #[arg(long, value_enum)]
    staff_presence: Option<PresenceArg>,
    /// SDS codes scored with positional byline weights (comma separated).
    #[arg(long, value_delimiter = ',')]
    positional_sds: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.data {
            cfg.inputs.roster = Some(dir.join("roster.csv"));
            cfg.inputs.publications = Some(dir.join("publications.csv"));
            cfg.inputs.authorships = Some(dir.join("authorships.csv"));
        }
        if let Some(p) = &self.roster {
            cfg.inputs.roster = Some(p.clone());
        }
        if let Some(p) = &self.publications {
            cfg.inputs.publications = Some(p.clone());
        }
        if let Some(p) = &self.authorships {
            cfg.inputs.authorships = Some(p.clone());
        }
        if let Some(p) = &self.out {
            cfg.inputs.output_dir = Some(p.clone());
        }
        if let Some(spec) = &self.periods {
            cfg.periods = parse_periods(spec)?;
        }
        if let Some(t) = self.top_share {
            cfg.top_share = t;
        }
        if self.no_css {
            cfg.css = false;
        }
        if self.css_mu2_inclusive {
            cfg.css_mu2_inclusive = true;
        }
        if let Some(s) = self.survival {
            cfg.survival = match s {
                SurvivalArg::AllPeriodsOnStaff => SurvivalConstraint::AllPeriodsOnStaff,
                SurvivalArg::PairwiseOnStaff => SurvivalConstraint::PairwiseOnStaff,
            };
        }
        if let Some(s) = self.staff_presence {
            cfg.staff_presence = match s {
                PresenceArg::Eligible => StaffPresence::Eligible,
                PresenceArg::Roster => StaffPresence::Roster,
            };
        }
        if !self.positional_sds.is_empty() {
            cfg.weights.positional_sds = self.positional_sds.clone();
        }
        if let Some(n) = self.threads {
            cfg.threads = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// JSON parameter file (same shape as the emitted params.json).
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_researchers: Option<usize>,
    #[arg(long)]
    n_sds: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    attrition: Option<f64>,
    #[arg(long)]
    pub_rate: Option<f64>,
    /// Replace random draws by their rounded expectations.
    #[arg(long)]
    no_noise: bool,
    #[arg(long, default_value = "synthetic")]
    out: PathBuf,
}

impl SynthArgs {
    fn params(&self) -> Result<SynthParams> {
        let mut p = match &self.params {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&text).map_err(|e| Error::SynthParams(e.to_string()))?
            }
            None => SynthParams::default(),
        };
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = self.n_researchers {
            p.n_researchers = v;
        }
        if let Some(v) = self.n_sds {
            p.n_sds = v;
        }
        if let Some(v) = self.rho {
            p.rho = v;
        }
        if let Some(v) = self.attrition {
            p.attrition = v;
        }
        if let Some(v) = self.pub_rate {
            p.pub_rate = v;
        }
        if self.no_noise {
            p.observation_noise = false;
        }
        Ok(p)
    }
}

fn output_dir(cfg: &RunConfig) -> &Path {
    cfg.inputs.output_dir.as_deref().unwrap_or(Path::new("out"))
}

fn run_stage(args: &RunArgs, stage: Stage) -> Result<()> {
    let cfg = args.config()?;
    let (r, p, a) = cfg.require_inputs()?;
    let dataset = load_dataset(r, p, a)?;
    let validation = validate_dataset(&dataset);
    let analysis = analyze(&dataset, &cfg)?;
    let bundle = build_bundle(&analysis, stage, Some(&validation))?;
    let dir = output_dir(&cfg);
    bundle.write_to(dir)?;
    eprintln!("wrote {} file(s) to {}", bundle.files.len(), dir.display());
    Ok(())
}

fn ingest_check(args: &RunArgs) -> Result<()> {
    let cfg = args.config()?;
    let (r, p, a) = cfg.require_inputs()?;
    let dataset = load_dataset(r, p, a)?;
    let report = validate_dataset(&dataset);
    println!(
        "{} roster rows, {} publications, {} authorships",
        dataset.roster().records().len(),
        dataset.publications().len(),
        dataset.authorships().len()
    );
    print!("{report}");
    if let Some(dir) = &cfg.inputs.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("validation.json");
        let json =
            serde_json::to_string_pretty(&report).map_err(|e| Error::Serialize(e.to_string()))?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let params = args.params()?;
    let data = write_synthetic(&args.out, &params)?;
    let baseline = independence_baseline(&params, 0.10);
    eprintln!(
        "wrote {} roster rows, {} publications to {} (independence baseline {:.4} +/- {:.4})",
        data.roster.len(),
        data.publications.len(),
        args.out.display(),
        baseline.expected_share,
        baseline.half_width
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::IngestCheck(a) => ingest_check(a),
        Command::Score(a) => run_stage(a, Stage::Score),
        Command::Cohorts(a) => run_stage(a, Stage::Cohorts),
        Command::Longevity(a) => run_stage(a, Stage::Longevity),
        Command::Report(a) => run_stage(a, Stage::Report),
        Command::Run(a) => run_stage(a, Stage::Run),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
