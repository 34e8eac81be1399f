use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::properties::PropertyReport;
use super::sweep::{SweepConfig, SweepRecord, SweepResult};
use crate::apriori::FittedConstants;
use crate::error::{Error, Result};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const FIT_JSON: &str = "fit.json";
pub const PROPERTIES_JSON: &str = "properties.json";
pub const LOGLOG_CSV: &str = "loglog.csv";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Writes eps, t_num, h_used, refined_ok, censored.
pub fn write_sweep_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    write_csv(
        path,
        &["eps", "t_num", "h_used", "refined_ok", "censored"],
        records.iter().map(|r| {
            vec![
                num(r.eps),
                num(r.t_num),
                num(r.h_used),
                r.refined_ok.to_string(),
                r.censored.to_string(),
            ]
        }),
    )
}

/// Plot data: log(1/ε), log t_num and the fitted line.
pub fn write_loglog_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let line = result.fit.as_ref().map(|f| (f.intercept, f.fitted_exponent));
    write_csv(
        path,
        &["log_inv_eps", "log_t_num", "log_t_fit", "censored"],
        result.records.iter().map(|r| {
            let x = -r.eps.ln();
            let fit = line.map_or(String::new(), |(c, s)| num(c + s * x));
            vec![num(x), num(r.t_num.ln()), fit, r.censored.to_string()]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FitDocument {
    pub config: SweepConfig,
    pub case: crate::theory::RegionCase,
    pub fit: Option<super::sweep::FitResult>,
    pub qualitative: Option<super::sweep::QualitativeReport>,
    pub apriori: Option<FittedConstants>,
    pub records: Vec<SweepRecord>,
    pub warnings: Vec<String>,
}

impl FitDocument {
    pub fn new(result: &SweepResult, apriori: Option<FittedConstants>) -> Self {
        FitDocument {
            config: result.config.clone(),
            case: result.case,
            fit: result.fit.clone(),
            qualitative: result.qualitative.clone(),
            apriori,
            records: result.records.clone(),
            warnings: result.warnings.clone(),
        }
    }
}

/// Everything a run can report; absent parts are not written.
#[derive(Debug, Default)]
pub struct Results<'a> {
    pub sweep: Option<&'a SweepResult>,
    pub apriori: Option<FittedConstants>,
    pub properties: Option<&'a PropertyReport>,
}

/// Writes the report files into `out_dir` (created if missing) and returns
/// their paths. A sweep with no records still yields header-only CSVs.
pub fn report_emit(results: &Results, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    if let Some(sweep) = results.sweep {
        let p = out_dir.join(SWEEP_CSV);
        write_sweep_csv(&p, &sweep.records)?;
        written.push(p);
        let p = out_dir.join(LOGLOG_CSV);
        write_loglog_csv(&p, sweep)?;
        written.push(p);
        let p = out_dir.join(FIT_JSON);
        write_json(&p, &FitDocument::new(sweep, results.apriori))?;
        written.push(p);
    }
    if let Some(props) = results.properties {
        let p = out_dir.join(PROPERTIES_JSON);
        write_json(&p, props)?;
        written.push(p);
    }
    Ok(written)
}

pub fn read_fit_json(path: &Path) -> Result<FitDocument> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
