use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_profile, ProfileKind};
use crate::error::{Error, Result};
use crate::math::WeightParams;
use crate::solver::{run_lifespan_refined, LifespanStatus, DEFAULT_BLOWUP_FACTOR};
use crate::theory::{case_for, classify, find_certificate, Moment, PredictionKind, RegionCase};

/// Relative tolerance on the fitted exponent in power-law cells.
pub const EXPONENT_TOL: f64 = 0.2;
/// Largest time searched for blow-up certificates.
pub const CERT_SEARCH_CAP: f64 = 1e12;
/// Relative slack allowed between a measured lifespan and a certificate.
pub const CERT_SLACK: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub params: WeightParams,
    pub profile: ProfileKind,
    pub eps_max: f64,
    pub eps_ratio: f64,
    pub eps_count: usize,
    /// Lattice spacing; R/64 when absent.
    pub grid_h: Option<f64>,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    pub blowup_factor: f64,
    pub refine: bool,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Drop the largest-ε point from the fit.
    pub drop_first: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            params: WeightParams {
                a: -1.0,
                b: 1.0,
                p: 2.0,
                r: 2.0,
            },
            profile: ProfileKind::NonzeroMoment,
            eps_max: 0.4,
            eps_ratio: 0.125f64.powf(1.0 / 7.0),
            eps_count: 8,
            grid_h: None,
            t_max: 200.0,
            blowup_factor: DEFAULT_BLOWUP_FACTOR,
            refine: true,
            out_dir: PathBuf::from("out"),
            seed: 0,
            drop_first: false,
        }
    }
}

impl SweepConfig {
    pub fn h(&self) -> f64 {
        self.grid_h.unwrap_or(self.params.r / 64.0)
    }

    pub fn eps_list(&self) -> Vec<f64> {
        (0..self.eps_count)
            .map(|i| self.eps_max * self.eps_ratio.powi(i as i32))
            .collect()
    }

    pub fn moment(&self) -> Moment {
        if self.profile.has_zero_moment() {
            Moment::Zero
        } else {
            Moment::Nonzero
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.eps_max > 0.0 && self.eps_max.is_finite()) {
            return Err(Error::params(format!("eps_max must be positive, got {}", self.eps_max)));
        }
        if !(self.eps_ratio > 0.0 && self.eps_ratio < 1.0) {
            return Err(Error::params(format!(
                "eps_ratio must lie in (0, 1), got {}",
                self.eps_ratio
            )));
        }
        if self.eps_count < 4 {
            return Err(Error::params(format!(
                "need at least 4 eps values, got {}",
                self.eps_count
            )));
        }
        if !(self.h() > 0.0) {
            return Err(Error::params(format!(
                "grid spacing must be positive, got {}",
                self.h()
            )));
        }
        if !(self.t_max >= 4.0 * self.params.r) {
            return Err(Error::params(format!("T_max = {} is below 4R", self.t_max)));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::params(format!(
                "blowup factor must exceed 1, got {}",
                self.blowup_factor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    /// Blow-up time, or the time reached when no blow-up was seen.
    pub t_num: f64,
    pub h_used: f64,
    pub refined_ok: bool,
    pub censored: bool,
    pub status: LifespanStatus,
    pub certified_time: Option<f64>,
}

impl SweepRecord {
    /// None when no certificate applies or the point is censored.
    pub fn certificate_consistent(&self) -> Option<bool> {
        let cert = self.certified_time?;
        if self.censored {
            return None;
        }
        Some(self.t_num <= cert * (1.0 + CERT_SLACK))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExpectedExponent {
    Power(f64),
    Tag(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub fitted_exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub predicted_exponent: ExpectedExponent,
    pub cell: RegionCase,
    pub points: usize,
    /// None outside power-law cells.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y = intercept + slope·x.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::params("x and y lengths differ"));
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateDesign(format!(
            "{} point(s), need at least 2",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 1e-14 * (1.0 + mx * mx) * n) {
        return Err(Error::DegenerateDesign("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Fits log t against log(1/ε).
pub fn fit_loglog(eps: &[f64], t: &[f64]) -> Result<LineFit> {
    let xs: Vec<f64> = eps.iter().map(|e| -e.ln()).collect();
    let ys: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    least_squares(&xs, &ys)
}

fn fit_result(case: &RegionCase, eps: &[f64], t: &[f64]) -> Result<FitResult> {
    let line = fit_loglog(eps, t)?;
    let (predicted, pass) = match case.prediction().kind {
        PredictionKind::PowerLaw { exponent } => (
            ExpectedExponent::Power(exponent),
            Some((line.slope - exponent).abs() / exponent <= EXPONENT_TOL),
        ),
        PredictionKind::GlobalExistence => (ExpectedExponent::Tag("global".into()), None),
        PredictionKind::ExpPower { .. } => (ExpectedExponent::Tag("exponential".into()), None),
        PredictionKind::InverseFn { function, .. } => (
            ExpectedExponent::Tag(format!("inverse_{:?}", function.kind).to_lowercase()),
            None,
        ),
    };
    Ok(FitResult {
        fitted_exponent: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        predicted_exponent: predicted,
        cell: *case,
        points: eps.len(),
        pass,
    })
}

/// Shape check for cells whose law is faster than any power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeReport {
    /// Slopes of log t against log(1/ε) between consecutive points.
    pub local_slopes: Vec<f64>,
    /// Every local slope exceeds the previous one.
    pub convex: bool,
}

pub fn qualitative_check(eps: &[f64], t: &[f64]) -> QualitativeReport {
    let local_slopes: Vec<f64> = eps
        .windows(2)
        .zip(t.windows(2))
        .map(|(e, v)| (v[1] / v[0]).ln() / (e[0] / e[1]).ln())
        .collect();
    let convex = local_slopes.len() >= 2 && local_slopes.windows(2).all(|w| w[1] > w[0]);
    QualitativeReport { local_slopes, convex }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub case: RegionCase,
    pub records: Vec<SweepRecord>,
    pub fit: Option<FitResult>,
    pub qualitative: Option<QualitativeReport>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    /// false if the fit failed its tolerance or a certificate was undercut.
    pub fn passed(&self) -> bool {
        let fit_ok = self.fit.as_ref().and_then(|f| f.pass).unwrap_or(true);
        fit_ok && self.records.iter().all(|r| r.certificate_consistent().unwrap_or(true))
    }
}

/// Runs one lifespan per ε (concurrently, collected in ε order) and fits
/// the scaling exponent over the points that blew up.
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let params = config.params;
    let profile = make_profile(config.profile, params.r)?;
    let case = classify(&params, config.moment());
    let cert_case = case_for(&params, config.moment());
    let h = config.h();

    let records = config
        .eps_list()
        .par_iter()
        .map(|&eps| -> Result<SweepRecord> {
            let run = run_lifespan_refined(
                &profile,
                eps,
                &params,
                h,
                config.t_max,
                config.blowup_factor,
                config.refine,
            )?;
            let outcome = run.fine.as_ref().unwrap_or(&run.coarse);
            let (t_num, censored) = match outcome.status {
                LifespanStatus::BlowupAt { t_num } => (t_num, false),
                LifespanStatus::SurvivedTo { t_max } => (t_max, true),
                LifespanStatus::NumericFailure { t } => (t, true),
            };
            // Certificates only exist for the data classes the blow-up proofs cover.
            let certified_time = match cert_case {
                Some(c) => match find_certificate(c, eps, &profile, &params, CERT_SEARCH_CAP) {
                    Ok(cert) => cert.map(|c| c.certified_time),
                    Err(Error::Precondition(_)) => None,
                    Err(e) => return Err(e),
                },
                None => None,
            };
            Ok(SweepRecord {
                eps,
                t_num,
                h_used: run.h_used,
                refined_ok: run.refined_ok,
                censored,
                status: outcome.status,
                certified_time,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    for r in &records {
        if r.censored && !case.is_global() {
            warnings.push(format!("eps = {}: no blow-up by T = {}; censored", r.eps, r.t_num));
        }
        if !r.censored && config.refine && !r.refined_ok {
            warnings.push(format!("eps = {}: lifespan moved by more than 5% under h/2", r.eps));
        }
        if r.certificate_consistent() == Some(false) {
            warnings.push(format!(
                "eps = {}: measured lifespan {} exceeds certified time {:?}",
                r.eps, r.t_num, r.certified_time
            ));
        }
    }

    let skip = usize::from(config.drop_first);
    let (eps, t): (Vec<f64>, Vec<f64>) = records
        .iter()
        .skip(skip)
        .filter(|r| !r.censored)
        .map(|r| (r.eps, r.t_num))
        .unzip();
    let mut fit = None;
    let mut qualitative = None;
    if !case.is_global() {
        if eps.len() < 4 {
            warnings.push(format!("only {} uncensored points in the fit", eps.len()));
        }
        match fit_result(&case, &eps, &t) {
            Ok(f) => fit = Some(f),
            Err(Error::DegenerateDesign(msg)) => warnings.push(format!("no fit: {msg}")),
            Err(e) => return Err(e),
        }
        if case.power_exponent().is_none() {
            qualitative = Some(qualitative_check(&eps, &t));
        }
    }
    Ok(SweepResult {
        config: config.clone(),
        case,
        records,
        fit,
        qualitative,
        warnings,
    })
}
