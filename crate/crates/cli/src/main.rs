use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use charwave::apriori::{FittedConstants, DEFAULT_QUAD_N, DEFAULT_SAMPLES};
use charwave::data::{make_profile, ProfileKind};
use charwave::harness::{property_suite, report_emit, sweep, Results, SuiteId, SweepConfig};
use charwave::theory::{case_for, classify, find_certificate, predict, Certificate, Prediction};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "charwave",
    version,
    about = "Lifespan laboratory for u_tt - u_xx = F(x,t)|u|^p"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure lifespans over an ε sweep and fit the scaling exponent.
    Sweep(CommonArgs),
    /// Run property suites.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated suite names; all suites when absent.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
    },
    /// Print the predicted lifespan law and its values over the ε list.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        /// Constant of the law.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Search for blow-up certificates over the ε list.
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1e12)]
        search_cap: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Nonzero,
    Zero,
    Posf,
}

impl From<ProfileArg> for ProfileKind {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Nonzero => ProfileKind::NonzeroMoment,
            ProfileArg::Zero => ProfileKind::ZeroMoment,
            ProfileArg::Posf => ProfileKind::PositiveFZeroG,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON file mirroring the sweep configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    eps_ratio: Option<f64>,
    #[arg(long)]
    eps_count: Option<usize>,
    #[arg(long)]
    grid_h: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    blowup_factor: Option<f64>,
    #[arg(long, value_enum)]
    refine: Option<Toggle>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn config(&self) -> Result<SweepConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let bad = |e: &dyn std::fmt::Display| {
                    Usage(charwave::Error::InvalidParams(format!("{}: {e}", path.display())))
                };
                let text = fs::read_to_string(path).map_err(|e| bad(&e))?;
                serde_json::from_str(&text).map_err(|e| bad(&e))?
            }
            None => SweepConfig::default(),
        };
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag {
                    $field = v;
                }
            };
        }
        set!(self.a, c.params.a);
        set!(self.b, c.params.b);
        set!(self.p, c.params.p);
        set!(self.r, c.params.r);
        set!(self.profile.map(ProfileKind::from), c.profile);
        set!(self.eps_max, c.eps_max);
        set!(self.eps_ratio, c.eps_ratio);
        set!(self.eps_count, c.eps_count);
        set!(self.t_max, c.t_max);
        set!(self.blowup_factor, c.blowup_factor);
        set!(self.refine.map(|t| matches!(t, Toggle::On)), c.refine);
        set!(self.seed, c.seed);
        set!(self.out.clone(), c.out_dir);
        if self.grid_h.is_some() {
            c.grid_h = self.grid_h;
        }
        c.validate().map_err(Usage)?;
        Ok(c)
    }
}

/// Errors caused by the invocation rather than by a failed check.
#[derive(Debug)]
struct Usage(charwave::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for Usage {}

fn write_json(out: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_sweep(args: &CommonArgs) -> Result<bool> {
    let config = args.config()?;
    let result = sweep(&config)?;
    let profile = make_profile(config.profile, config.params.r)?;
    let t_fit = config.t_max.min(16.0 * config.params.r);
    let apriori = FittedConstants::cached(&config.params, &profile, t_fit, DEFAULT_SAMPLES, DEFAULT_QUAD_N)?;
    let files = report_emit(
        &Results {
            sweep: Some(&result),
            apriori: Some(apriori),
            properties: None,
        },
        &config.out_dir,
    )?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    println!("cell {:?} ({:?} moment)", result.case.cell, result.case.moment);
    for r in &result.records {
        let mark = if r.censored { " (censored)" } else { "" };
        println!("eps {:.6e}  t_num {:.6e}{mark}", r.eps, r.t_num);
    }
    if let Some(f) = &result.fit {
        let verdict = match f.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "no verdict",
        };
        println!(
            "fitted exponent {:.4} (predicted {:?}), r^2 {:.4}: {verdict}",
            f.fitted_exponent, f.predicted_exponent, f.r_squared
        );
    }
    if let Some(q) = &result.qualitative {
        println!("local slopes {:?}, convex {}", q.local_slopes, q.convex);
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(result.passed())
}

fn run_verify(args: &CommonArgs, names: &[String]) -> Result<bool> {
    let config = args.config()?;
    let selection = if names.is_empty() {
        SuiteId::ALL.to_vec()
    } else {
        names
            .iter()
            .map(|n| {
                SuiteId::parse(n.trim()).ok_or_else(|| {
                    let known: Vec<_> = SuiteId::ALL.iter().map(|s| s.name()).collect();
                    Usage(charwave::Error::InvalidParams(format!(
                        "unknown suite {n:?}; known: {}",
                        known.join(", ")
                    )))
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    let report = property_suite(&selection, config.seed)?;
    for s in &report.suites {
        let verdict = if s.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {} ({} checks, max violation {:.3e}): {}",
            s.id.name(),
            s.checks,
            s.max_violation,
            s.detail
        );
    }
    let files = report_emit(
        &Results {
            properties: Some(&report),
            ..Default::default()
        },
        &config.out_dir,
    )?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(report.passed)
}

#[derive(Serialize)]
struct PredictionRow {
    eps: f64,
    lifespan: f64,
}

#[derive(Serialize)]
struct PredictionDoc {
    prediction: Prediction,
    c: f64,
    values: Vec<PredictionRow>,
}

fn run_predict(args: &CommonArgs, c: f64) -> Result<bool> {
    let config = args.config()?;
    if c.is_nan() || c <= 0.0 {
        return Err(Usage(charwave::Error::InvalidParams(format!("c must be positive, got {c}"))).into());
    }
    let case = classify(&config.params, config.moment());
    let values = config
        .eps_list()
        .into_iter()
        .map(|eps| {
            Ok(PredictionRow {
                eps,
                lifespan: predict(&case, eps, c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let doc = PredictionDoc {
        prediction: case.prediction(),
        c,
        values,
    };
    println!("{}", serde_json::to_string_pretty(&doc)?);
    if args.out.is_some() {
        write_json(&config.out_dir, "prediction.json", &doc)?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct CertificateRow {
    eps: f64,
    certificate: Option<Certificate>,
}

fn run_certify(args: &CommonArgs, search_cap: f64) -> Result<bool> {
    let config = args.config()?;
    let Some(case) = case_for(&config.params, config.moment()) else {
        println!("global cell: no blow-up certificate exists");
        return Ok(true);
    };
    let profile = make_profile(config.profile, config.params.r)?;
    let rows = config
        .eps_list()
        .into_iter()
        .map(|eps| {
            let certificate = find_certificate(case, eps, &profile, &config.params, search_cap).map_err(Usage)?;
            Ok(CertificateRow { eps, certificate })
        })
        .collect::<Result<Vec<_>>>()?;
    println!("{}", serde_json::to_string_pretty(&rows)?);
    if args.out.is_some() {
        write_json(&config.out_dir, "certificates.json", &rows)?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Sweep(args) => run_sweep(args),
        Command::Verify { common, suite } => run_verify(common, suite),
        Command::Predict { common, c } => run_predict(common, *c),
        Command::Certify { common, search_cap } => run_certify(common, *search_cap),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<Usage>().is_some()
                || matches!(
                    e.downcast_ref::<charwave::Error>(),
                    Some(charwave::Error::InvalidParams(_))
                );
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
