use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::{diamond_step, first_row, last_row, norms, CharGrid};
use crate::data::DataProfile;
use crate::error::{Error, Result};
use crate::math::{weight_f, WeightParams};

pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e4;

/// Relative disagreement allowed between the lifespans measured at h and h/2.
pub const REFINE_TOL: f64 = 0.05;

/// A non-finite row counts as genuine blow-up only when the source term that
/// produced it was already beyond this in log scale.
const OVERFLOW_LOG: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LifespanStatus {
    BlowupAt { t_num: f64 },
    SurvivedTo { t_max: f64 },
    NumericFailure { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    pub status: LifespanStatus,
    /// (t, sup |u|) for every row computed.
    pub sup_history: Vec<(f64, f64)>,
    /// (t, sup w|u|) for every row computed.
    pub norm2_history: Vec<(f64, f64)>,
    pub h: f64,
}

impl SolverOutcome {
    pub fn t_num(&self) -> Option<f64> {
        match self.status {
            LifespanStatus::BlowupAt { t_num } => Some(t_num),
            _ => None,
        }
    }

    pub fn max_sup(&self) -> f64 {
        self.sup_history.iter().fold(0.0f64, |m, &(_, s)| m.max(s))
    }

    /// Writes t, sup_norm, weighted_sup_norm as CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let wrap = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(wrap)?;
        w.write_record(["t", "sup_norm", "weighted_sup_norm"]).map_err(wrap)?;
        for (&(t, s), &(_, s2)) in self.sup_history.iter().zip(&self.norm2_history) {
            w.write_record([format!("{t:.16e}"), format!("{s:.16e}"), format!("{s2:.16e}")])
                .map_err(wrap)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Runs the diamond scheme until sup |u| reaches `blowup_factor·eps·c0_data`
/// or T_max is reached. The crossing time is interpolated linearly in log sup
/// between the two rows that bracket the threshold.
pub fn run_lifespan(
    profile: &DataProfile,
    eps: f64,
    params: &WeightParams,
    h: f64,
    t_max: f64,
    blowup_factor: f64,
) -> Result<SolverOutcome> {
    params.validate()?;
    if !(blowup_factor > 1.0) {
        return Err(Error::params(format!(
            "blowup factor must exceed 1 (got {blowup_factor})"
        )));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::params(format!("eps must be nonnegative (got {eps})")));
    }
    let mut grid = CharGrid::new(h, t_max, profile.r)?;
    if h > t_max {
        return Err(Error::params("grid spacing exceeds T_max"));
    }
    let threshold = blowup_factor * eps * profile.c0_data;
    first_row(profile, eps, &mut grid, params)?;

    let mut sup_history = Vec::new();
    let mut norm2_history = Vec::new();
    let (s0, w0) = crate::solver::row_norms((0..grid.len()).map(|j| grid.x(j)), grid.previous(), 0.0, params);
    sup_history.push((0.0, s0));
    norm2_history.push((0.0, w0));
    let (s1, w1) = norms(&grid, params);
    sup_history.push((h, s1));
    norm2_history.push((h, w1));

    let crossed = |s: f64| s > 0.0 && s >= threshold;
    let outcome = |status, sup_history, norm2_history| SolverOutcome {
        status,
        sup_history,
        norm2_history,
        h,
    };

    if crossed(s0) {
        return Ok(outcome(
            LifespanStatus::BlowupAt { t_num: 0.0 },
            sup_history,
            norm2_history,
        ));
    }
    if crossed(s1) {
        let t_num = interpolate(0.0, s0, h, s1, threshold);
        return Ok(outcome(LifespanStatus::BlowupAt { t_num }, sup_history, norm2_history));
    }

    let n_last = last_row(h, t_max);
    while grid.row_index() < n_last {
        let t_prev = grid.t_now();
        let sup_prev = sup_history.last().map_or(0.0, |&(_, s)| s);
        let finite = diamond_step(&mut grid, params, true)?;
        let t = grid.t_now();
        if !finite {
            let status = if source_log_magnitude(&grid, params) > OVERFLOW_LOG {
                LifespanStatus::BlowupAt { t_num: t }
            } else {
                LifespanStatus::NumericFailure { t }
            };
            return Ok(outcome(status, sup_history, norm2_history));
        }
        let (s, w) = norms(&grid, params);
        sup_history.push((t, s));
        norm2_history.push((t, w));
        if crossed(s) {
            let t_num = interpolate(t_prev, sup_prev, t, s, threshold);
            return Ok(outcome(LifespanStatus::BlowupAt { t_num }, sup_history, norm2_history));
        }
    }
    let t_end = grid.t_now();
    Ok(outcome(
        LifespanStatus::SurvivedTo { t_max: t_end },
        sup_history,
        norm2_history,
    ))
}

fn interpolate(t0: f64, s0: f64, t1: f64, s1: f64, threshold: f64) -> f64 {
    if !(s0 > 0.0) || s1 <= s0 {
        return t1;
    }
    let frac = (threshold.ln() - s0.ln()) / (s1.ln() - s0.ln());
    t0 + frac.clamp(0.0, 1.0) * (t1 - t0)
}

/// max over the source row of log(F h² |u|^p).
fn source_log_magnitude(grid: &CharGrid, params: &WeightParams) -> f64 {
    let t = grid.t_now() - grid.h;
    let log_h2 = 2.0 * grid.h.ln();
    grid.previous()
        .iter()
        .enumerate()
        .filter(|(_, u)| **u != 0.0)
        .map(|(j, u)| {
            let u = u.abs();
            if !u.is_finite() {
                return f64::INFINITY;
            }
            weight_f(grid.x(j), t, params).ln() + params.p * u.ln() + log_h2
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A lifespan measured at h and checked against h/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedLifespan {
    pub coarse: SolverOutcome,
    pub fine: Option<SolverOutcome>,
    /// Lifespan at the finest spacing run, if that run blew up.
    pub t_num: Option<f64>,
    pub h_used: f64,
    /// true when both runs blew up and agree within REFINE_TOL, or when no
    /// refinement was requested and the run blew up.
    pub refined_ok: bool,
}

pub fn run_lifespan_refined(
    profile: &DataProfile,
    eps: f64,
    params: &WeightParams,
    h: f64,
    t_max: f64,
    blowup_factor: f64,
    refine: bool,
) -> Result<RefinedLifespan> {
    let coarse = run_lifespan(profile, eps, params, h, t_max, blowup_factor)?;
    if !refine {
        let t_num = coarse.t_num();
        return Ok(RefinedLifespan {
            coarse,
            fine: None,
            t_num,
            h_used: h,
            refined_ok: t_num.is_some(),
        });
    }
    let fine = run_lifespan(profile, eps, params, 0.5 * h, t_max, blowup_factor)?;
    let refined_ok = match (coarse.t_num(), fine.t_num()) {
        (Some(tc), Some(tf)) => (tc - tf).abs() <= REFINE_TOL * tf,
        _ => false,
    };
    let t_num = fine.t_num();
    Ok(RefinedLifespan {
        coarse,
        fine: Some(fine),
        t_num,
        h_used: 0.5 * h,
        refined_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_profile, ProfileKind};

    #[test]
    fn zero_data_survives() {
        let p = make_profile(ProfileKind::NonzeroMoment, 2.0).unwrap();
        let params = WeightParams::new(-1.0, 1.0, 2.0, 2.0).unwrap();
        let out = run_lifespan(&p, 0.0, &params, 0.25, 10.0, 1e4).unwrap();
        assert_eq!(out.status, LifespanStatus::SurvivedTo { t_max: 10.0 });
        assert_eq!(out.max_sup(), 0.0);
        assert_eq!(out.sup_history.len(), 41);
    }

    #[test]
    fn blowup_is_detected_and_interpolated() {
        let p = make_profile(ProfileKind::NonzeroMoment, 2.0).unwrap();
        let params = WeightParams::new(-1.0, -1.0, 2.0, 2.0).unwrap();
        let out = run_lifespan(&p, 1.0, &params, 2.0 / 32.0, 50.0, 1e4).unwrap();
        let t = out.t_num().expect("F ≡ 1 with unit data blows up quickly");
        let (t_last, s_last) = *out.sup_history.last().unwrap();
        assert!(s_last >= 1e4 * p.c0_data);
        assert!(t <= t_last && t > t_last - out.h);
    }

    #[test]
    fn runs_are_deterministic() {
        let p = make_profile(ProfileKind::ZeroMoment, 2.0).unwrap();
        let params = WeightParams::new(-1.0, -1.0, 2.0, 2.0).unwrap();
        let a = run_lifespan(&p, 0.5, &params, 0.125, 30.0, 1e4).unwrap();
        let b = run_lifespan(&p, 0.5, &params, 0.125, 30.0, 1e4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_arguments_are_rejected() {
        let p = make_profile(ProfileKind::ZeroMoment, 2.0).unwrap();
        let params = WeightParams::new(-1.0, -1.0, 2.0, 2.0).unwrap();
        assert!(run_lifespan(&p, 0.5, &params, 0.0, 30.0, 1e4).is_err());
        assert!(run_lifespan(&p, 0.5, &params, 0.1, 30.0, 1.0).is_err());
        assert!(run_lifespan(&p, 0.5, &params, 0.1, -1.0, 1e4).is_err());
    }

    #[test]
    fn interpolation_in_log_sup() {
        let t = interpolate(1.0, 10.0, 2.0, 1000.0, 100.0);
        assert!((t - 1.5).abs() < 1e-14);
        assert_eq!(interpolate(1.0, 0.0, 2.0, 5.0, 1.0), 2.0);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let p = make_profile(ProfileKind::NonzeroMoment, 2.0).unwrap();
        let params = WeightParams::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let out = run_lifespan(&p, 0.01, &params, 0.5, 2.0, 1e4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        out.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,sup_norm,weighted_sup_norm"));
        assert_eq!(lines.count(), out.sup_history.len());
    }
}
