use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use catfair::encoders::NoiseScope;
use catfair::models::ModelKind;
use catfair::sweep::{emit_report, render_report, run_sweep, DataSource, EncoderFamily, ReportFormat, SweepConfig};
use catfair::synth::ScenarioKind;
use catfair::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;

/// Sweep encoders and regularization strengths on a categorical protected
/// attribute and report the AUC / fairness trade-off.
#[derive(Debug, Parser)]
#[command(name = "catfair", version)]
struct Cli {
    /// CSV file to load (header row, comma-delimited).
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    data: Option<PathBuf>,

    /// Built-in synthetic scenario: irreducible, reducible or intersectional.
    #[arg(long)]
    scenario: Option<String>,

    /// Protected attribute column.
    #[arg(long)]
    protected: Option<String>,

    /// Reference group label within the protected column.
    #[arg(long)]
    reference: Option<String>,

    /// Group compared against the reference (default: largest other group).
    #[arg(long)]
    protected_group: Option<String>,

    /// Build the protected column by concatenating two columns, as `A,B`.
    #[arg(long)]
    concat: Option<String>,

    #[arg(long, default_value = "target")]
    target_col: String,

    #[arg(long, default_value = "1")]
    positive_label: String,

    /// Comma-separated encoder families: one-hot, target-m, target-sigma.
    #[arg(long, default_value = "one-hot,target-m,target-sigma")]
    encoder: String,

    #[arg(long, default_value = "0,1,10,100,1000,10000")]
    m_grid: String,

    #[arg(long, default_value = "0,0.05,0.1,0.2,0.3,0.5,0.7,1.0")]
    sigma_grid: String,

    /// Where Gaussian noise is applied: row (training rows) or category.
    #[arg(long, default_value = "row")]
    noise_scope: String,

    /// Comma-separated models: logistic, tree, gbdt.
    #[arg(long, default_value = "logistic,tree,gbdt")]
    models: String,

    /// Seeds as a list (`0,3,7`) or a half-open range (`0..20`).
    #[arg(long, default_value = "0..20")]
    seeds: String,

    #[arg(long, default_value_t = 0.5)]
    split: f64,

    #[arg(long, default_value_t = 0.5)]
    threshold: f64,

    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// csv or markdown.
    #[arg(long, default_value = "csv")]
    format: String,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &'static str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::InvalidParameter { name: what, reason: format!("cannot parse `{t}`") }))
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, Error> {
    if let Some((a, b)) = s.split_once("..") {
        let bad = || Error::InvalidParameter {
            name: "seeds",
            reason: format!("bad range `{s}`"),
        };
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        Ok((a..b).collect())
    } else {
        parse_list(s, "seeds")
    }
}

fn build_config(cli: &Cli) -> Result<SweepConfig, Error> {
    let mut config = match (&cli.scenario, &cli.data) {
        (Some(kind), _) => SweepConfig::for_scenario(kind.parse::<ScenarioKind>()?),
        (None, Some(path)) => {
            let (Some(protected), Some(reference)) = (&cli.protected, &cli.reference) else {
                return Err(Error::InvalidParameter {
                    name: "protected",
                    reason: "--data requires --protected and --reference".into(),
                });
            };
            let mut c = SweepConfig::for_scenario(ScenarioKind::Irreducible);
            c.source = DataSource::Csv {
                path: path.clone(),
                target_column: cli.target_col.clone(),
                positive_label: cli.positive_label.clone(),
            };
            c.protected_column = protected.clone();
            c.reference_group = reference.clone();
            c.protected_group = None;
            c
        }
        (None, None) => unreachable!("clap requires one of --data / --scenario"),
    };
    if let Some(p) = &cli.protected {
        config.protected_column = p.clone();
    }
    if let Some(r) = &cli.reference {
        config.reference_group = r.clone();
    }
    if let Some(g) = &cli.protected_group {
        config.protected_group = Some(g.clone());
    }
    if let Some(pair) = &cli.concat {
        let (a, b) = pair.split_once(',').ok_or(Error::InvalidParameter {
            name: "concat",
            reason: "expected `A,B`".into(),
        })?;
        config.concat = Some((a.trim().to_string(), b.trim().to_string()));
    }
    config.encoders = parse_list::<EncoderFamily>(&cli.encoder, "encoder")?;
    config.m_grid = parse_list(&cli.m_grid, "m_grid")?;
    config.sigma_grid = parse_list(&cli.sigma_grid, "sigma_grid")?;
    config.noise_scope = cli.noise_scope.parse::<NoiseScope>()?;
    config.models = parse_list::<ModelKind>(&cli.models, "models")?;
    config.seeds = parse_seeds(&cli.seeds)?;
    config.split = cli.split;
    config.threshold = cli.threshold;
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format: ReportFormat = match cli.format.parse() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let records = match run_sweep(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_data_error() { EXIT_DATA } else { EXIT_CONFIG };
            return ExitCode::from(code);
        }
    };
    for r in records.iter().filter(|r| !r.warnings.is_empty()) {
        eprintln!(
            "warning: {} {} {} seed {}: {}",
            r.encoder.as_str(),
            r.reg_param,
            r.model,
            r.seed,
            r.warnings.join(", ")
        );
    }
    let written = match &cli.out {
        Some(path) => emit_report(&records, path, format),
        None => render_report(&records, format).map(|text| print!("{text}")),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
