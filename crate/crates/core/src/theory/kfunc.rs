use std::f64::consts::{LN_2, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{Cell, Moment};
use crate::data::{DataProfile, ProfileKind};
use crate::error::{Error, Result};
use crate::math::{s_p, Sign, WeightParams};
use crate::quadrature::simpson;

const GRID_RATIO: f64 = 1.05;
const BISECT_ITERS: usize = 200;
const CF_PANELS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    K1,
    /// K1 form for a ≤ 0, b < 0 with the exponents merged.
    K1Merged,
    K2,
    K3,
    K4,
    K5,
    K6,
    K7,
    K8,
    K9,
    K10,
    K11,
    K12,
}

/// How the case's ray is parametrised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ray {
    /// x₀ = t₀/2
    Half,
    /// x₀ = t₀ - R - 1
    Shift,
}

impl CaseId {
    pub const ALL: [CaseId; 13] = [
        CaseId::K1,
        CaseId::K1Merged,
        CaseId::K2,
        CaseId::K3,
        CaseId::K4,
        CaseId::K5,
        CaseId::K6,
        CaseId::K7,
        CaseId::K8,
        CaseId::K9,
        CaseId::K10,
        CaseId::K11,
        CaseId::K12,
    ];

    /// Cases proved with the velocity moment; the rest need g ≡ 0, f ≥ 0.
    pub fn uses_moment(self) -> bool {
        matches!(
            self,
            CaseId::K1 | CaseId::K1Merged | CaseId::K2 | CaseId::K3 | CaseId::K4 | CaseId::K5 | CaseId::K6
        )
    }

    /// Domain t - x > 2R instead of t - x > R.
    pub fn sliced(self) -> bool {
        matches!(self, CaseId::K6 | CaseId::K7)
    }

    fn ray(self) -> Ray {
        match self {
            CaseId::K3 | CaseId::K4 | CaseId::K10 | CaseId::K11 => Ray::Shift,
            _ => Ray::Half,
        }
    }

    pub fn point(self, t0: f64, r: f64) -> (f64, f64) {
        match self.ray() {
            Ray::Half => (t0 / 2.0, t0),
            Ray::Shift => (t0 - r - 1.0, t0),
        }
    }

    fn signs_ok(self, params: &WeightParams) -> bool {
        use Sign::*;
        let (a, b, s) = (params.sign_a(), params.sign_b(), params.sign_sum());
        match self {
            CaseId::K1 => a == Pos && s == Neg,
            CaseId::K1Merged => a != Pos && b == Neg,
            CaseId::K2 | CaseId::K9 => a == Neg && b == Zero,
            CaseId::K3 | CaseId::K10 => a == Neg && b == Pos,
            CaseId::K4 | CaseId::K11 => a == Zero && b == Pos,
            CaseId::K5 | CaseId::K12 => a == Zero && b == Zero,
            CaseId::K6 => a == Pos && s == Zero,
            CaseId::K7 => a == Zero && b == Neg,
            CaseId::K8 => a == Neg && b == Neg,
        }
    }

    /// Smallest admissible t₀ on the ray (exclusive when `strict`).
    fn side_min(self, r: f64) -> (f64, bool) {
        match self {
            CaseId::K1 | CaseId::K1Merged => (6.0 * r, true),
            CaseId::K2 => (16.0 * r * r - 2.0, false),
            CaseId::K3 => (2.0 * r, true),
            CaseId::K4 => ((r + 2.0).powi(2), true),
            CaseId::K5 => (4.0 * (1.0 + r).powi(2), true),
            CaseId::K6 => (4.0 * (1.0 + 2.0 * r).powi(2), true),
            CaseId::K7 | CaseId::K9 => (16.0 * r * r, false),
            CaseId::K8 | CaseId::K10 => (4.0 * r, false),
            CaseId::K11 => ((2.0 + r).powi(2), false),
            CaseId::K12 => (4.0 * (1.0 + r).powi(2), false),
        }
    }

    fn side_ok(self, t0: f64, r: f64) -> bool {
        let (m, strict) = self.side_min(r);
        let (x, t) = self.point(t0, r);
        let on_side = if strict { t0 > m } else { t0 >= m };
        on_side && in_domain(self, x, t, r)
    }
}

/// Blow-up case for a (params, moment) pair; None in the global cell.
pub fn case_for(params: &WeightParams, moment: Moment) -> Option<CaseId> {
    let cell = super::classify::classify(params, moment).cell;
    let pos_a = params.sign_a() == Sign::Pos;
    Some(match (moment, cell) {
        (_, Cell::Global) => return None,
        (Moment::Nonzero, Cell::ExpP1) if pos_a => CaseId::K6,
        (Moment::Nonzero, Cell::ExpP1) => CaseId::K4,
        (Moment::Nonzero, Cell::ExpHalf) => CaseId::K5,
        (Moment::Nonzero, Cell::PowA) => CaseId::K3,
        (Moment::Nonzero, Cell::Phi1Inv) => CaseId::K2,
        (Moment::Nonzero, Cell::PowAB) if pos_a => CaseId::K1,
        (Moment::Nonzero, Cell::PowAB) => CaseId::K1Merged,
        (Moment::Zero, Cell::ExpP1) => CaseId::K11,
        (Moment::Zero, Cell::ExpP) => CaseId::K6,
        (Moment::Zero, Cell::ExpFujita) => CaseId::K12,
        (Moment::Zero, Cell::PowA) => CaseId::K10,
        (Moment::Zero, Cell::Psi1Inv) => CaseId::K9,
        (Moment::Zero, Cell::PowPAB) => CaseId::K8,
        (Moment::Zero, Cell::Psi2Inv) => CaseId::K7,
        (Moment::Zero, Cell::PowABp) => CaseId::K1,
        (m, c) => unreachable!("cell {c:?} does not occur for {m:?}"),
    })
}

fn in_domain(case: CaseId, x: f64, t: f64, r: f64) -> bool {
    let gap = if case.sliced() { 2.0 * r } else { r };
    x > 0.0 && t - x > gap
}

/// C₀ = 3^{-|a|} 2^{-|b|} / (8√2).
pub fn frame_constant(params: &WeightParams) -> f64 {
    3f64.powf(-params.a.abs()) * 2f64.powf(-params.b.abs()) / (8.0 * SQRT_2)
}

pub fn case_constant(case: CaseId, params: &WeightParams) -> f64 {
    let WeightParams { a, b, p, .. } = *params;
    let c0 = frame_constant(params);
    let q2 = (p - 1.0).powi(2);
    match case {
        CaseId::K1 => c0 * q2 / (2.0 - b).powi(2),
        CaseId::K1Merged => c0 * q2 / (2.0 - b - a).powi(2),
        CaseId::K2 | CaseId::K3 => c0 * q2 / (1.0 - a),
        CaseId::K4 => c0 * q2,
        CaseId::K5 => c0 * q2 / 4.0,
        CaseId::K6 => c0 * (p - 1.0) / 2.0 * 3f64.powf(1.0 - b),
        CaseId::K7 => c0 / 72.0,
        CaseId::K8 => c0 * ((p - 1.0) / ((2.0 - a - b) * p)).powi(2),
        CaseId::K9 | CaseId::K10 => c0 * q2 / ((1.0 - a) * p * p),
        CaseId::K11 => c0 * q2 / (p * p),
        CaseId::K12 => c0 * q2 / (p + 1.0).powi(2),
    }
}

/// Data constants C_{f,k}, k = 1..=5, for a profile with f ≥ 0.
pub fn data_constant_f(k: u8, profile: &DataProfile, params: &WeightParams) -> Result<f64> {
    let WeightParams { a, b, p, r } = *params;
    let c0 = frame_constant(params);
    let fp = |beta: f64| profile.f(-beta).max(0.0).powf(p);
    let int_b = || simpson(|be| fp(be) / (1.0 + be).powf(1.0 + b), 0.0, r, CF_PANELS);
    let int_0 = || simpson(|be| fp(be) / (1.0 + be), 0.0, r, CF_PANELS);
    let two_p = 2f64.powf(p);
    Ok(match k {
        1 => {
            c0 / (two_p * (1.0 + r).powf(1.0 + a))
                * simpson(|be| (r - be) * fp(be) / (1.0 + be).powf(1.0 + b), 0.0, r, CF_PANELS)
        }
        2 => c0 / two_p * int_b(),
        3 => c0 / (two_p * (1.0 - a)) * int_b(),
        4 => c0 / (two_p * (1.0 - a)) * int_0(),
        5 => c0 / two_p * int_0(),
        _ => return Err(Error::params(format!("no data constant C_f,{k}"))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "value")]
pub enum DataConstant {
    Cg(f64),
    Cf1(f64),
    Cf2(f64),
    Cf3(f64),
    Cf4(f64),
    Cf5(f64),
}

impl DataConstant {
    pub fn value(self) -> f64 {
        match self {
            DataConstant::Cg(v)
            | DataConstant::Cf1(v)
            | DataConstant::Cf2(v)
            | DataConstant::Cf3(v)
            | DataConstant::Cf4(v)
            | DataConstant::Cf5(v) => v,
        }
    }

    /// Power of ε in M₁.
    pub fn eps_power(self, p: f64) -> f64 {
        match self {
            DataConstant::Cg(_) => 1.0,
            _ => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseConstants {
    pub frame_c0: f64,
    pub case_c: f64,
    pub data: DataConstant,
}

fn check_params(case: CaseId, params: &WeightParams, profile: &DataProfile) -> Result<()> {
    params.validate()?;
    if !case.signs_ok(params) {
        return Err(Error::pre(format!(
            "{case:?} does not apply at a={}, b={}",
            params.a, params.b
        )));
    }
    if (profile.r - params.r).abs() > 1e-12 * params.r {
        return Err(Error::pre(format!(
            "profile R={} differs from weight R={}",
            profile.r, params.r
        )));
    }
    Ok(())
}

/// Frame, case and data constants for a case, checking its hypotheses.
pub fn case_constants(case: CaseId, profile: &DataProfile, params: &WeightParams) -> Result<CaseConstants> {
    check_params(case, params, profile)?;
    let data = match (profile.kind, case) {
        (ProfileKind::NonzeroMoment, c) if c.uses_moment() => {
            if !(profile.c_g > 0.0) {
                return Err(Error::pre(format!("{case:?} needs C_g > 0, got {}", profile.c_g)));
            }
            DataConstant::Cg(profile.c_g)
        }
        (ProfileKind::PositiveFZeroG, CaseId::K1 | CaseId::K6) => {
            DataConstant::Cf1(data_constant_f(1, profile, params)?)
        }
        (ProfileKind::PositiveFZeroG, CaseId::K7 | CaseId::K11) => {
            DataConstant::Cf2(data_constant_f(2, profile, params)?)
        }
        (ProfileKind::PositiveFZeroG, CaseId::K8 | CaseId::K10) => {
            DataConstant::Cf3(data_constant_f(3, profile, params)?)
        }
        (ProfileKind::PositiveFZeroG, CaseId::K9) => DataConstant::Cf4(data_constant_f(4, profile, params)?),
        (ProfileKind::PositiveFZeroG, CaseId::K12) => DataConstant::Cf5(data_constant_f(5, profile, params)?),
        (kind, _) => {
            return Err(Error::pre(format!("{case:?} does not apply to a {kind:?} profile")));
        }
    };
    Ok(CaseConstants {
        frame_c0: frame_constant(params),
        case_c: case_constant(case, params),
        data,
    })
}

/// The S_p term subtracted in the tail of K.
fn tail_penalty(case: CaseId, p: f64) -> f64 {
    let sp = s_p(p);
    match case {
        CaseId::K6 => sp * (2.0 * p).ln(),
        CaseId::K7 => 2.0 * sp * LN_2,
        _ => 2.0 * sp * p.ln(),
    }
}

fn log_m1(consts: &CaseConstants, eps: f64, p: f64) -> f64 {
    consts.data.value().ln() + consts.data.eps_power(p) * eps.ln()
}

/// log of the case's shape function at (x, t).
fn log_shape(case: CaseId, x: f64, t: f64, params: &WeightParams) -> f64 {
    let WeightParams { a, b, p, r } = *params;
    let d = t - x;
    let lead = || (1.0 - a) * (2.0 * x).ln() - (1.0 + t + x).ln();
    let bump = || (d - r).ln() - (1.0 + b) * (1.0 + d).ln();
    let log_ratio = |c: f64| ((1.0 + d) / (1.0 + c)).ln();
    match case {
        CaseId::K1 => (2.0 - b) * (d - r).ln() - (2.0 + a) * (1.0 + d).ln(),
        CaseId::K1Merged => (2.0 - b - a) * (d - r).ln() - 2.0 * (1.0 + d).ln(),
        CaseId::K2 => lead() + log_ratio(r).ln(),
        CaseId::K3 => lead() + bump(),
        CaseId::K4 => ((1.0 + t + x) / (1.0 + d)).ln().ln() + bump(),
        CaseId::K5 => 2.0 * log_ratio(r).ln(),
        CaseId::K6 => log_ratio(2.0 * r).ln(),
        CaseId::K7 => -b * log_ratio(2.0 * r) + (p - 1.0) * log_ratio(2.0 * r).ln(),
        CaseId::K8 => (1.0 - b) * (d - r).ln() - (1.0 + d).ln() + p * ((1.0 - a) * (d - r).ln() - (1.0 + d).ln()),
        CaseId::K9 => p * lead() + log_ratio(r).ln(),
        CaseId::K10 => p * lead() + bump(),
        CaseId::K11 => p * ((1.0 + t + x) / (1.0 + d)).ln().ln() + bump(),
        CaseId::K12 => (p + 1.0) * log_ratio(r).ln(),
    }
}

fn eval_with(case: CaseId, x: f64, t: f64, eps: f64, consts: &CaseConstants, params: &WeightParams) -> f64 {
    let p = params.p;
    (log_shape(case, x, t, params) + consts.case_c.ln()) / (p - 1.0) - tail_penalty(case, p) + log_m1(consts, eps, p)
}

/// K_i(x, t) with explicit constants.
pub fn eval_k(case: CaseId, x: f64, t: f64, eps: f64, profile: &DataProfile, params: &WeightParams) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::params(format!("eps must be positive, got {eps}")));
    }
    let consts = case_constants(case, profile, params)?;
    if !in_domain(case, x, t, params.r) {
        return Err(Error::pre(format!("({x}, {t}) is outside the domain of {case:?}")));
    }
    Ok(eval_with(case, x, t, eps, &consts, params))
}

/// Margin of the case's sufficient condition for K > 0 at t₀, in log form.
/// Positive means the condition holds.
pub fn threshold_margin(case: CaseId, t0: f64, eps: f64, consts: &CaseConstants, params: &WeightParams) -> f64 {
    let WeightParams { a, b, p, r } = *params;
    let gain = consts.case_c.ln() - (p - 1.0) * tail_penalty(case, p) + (p - 1.0) * log_m1(consts, eps, p);
    let lt = t0.ln();
    let llt = lt.ln();
    match case {
        CaseId::K1 => (-2.0 - a) * LN_2 + (-a - b) * (t0 / 2.0 - r).ln() + gain,
        CaseId::K1Merged => -2.0 * LN_2 + (-a - b) * (t0 / 2.0 - r).ln() + gain,
        CaseId::K2 => -a * lt + (2.0 + t0).ln().ln() - 6f64.ln() + gain,
        CaseId::K3 => {
            let rhs = (a - 1.0) * LN_2 + (3.0 * r).ln() + (1.0 + b) * (2.0 + r).ln() - (r - 1.0).ln();
            -a * (t0 - r - 1.0).ln() - rhs + gain
        }
        CaseId::K4 => llt - LN_2 - (1.0 + b) * (1.0 + r).ln() + gain,
        CaseId::K5 => llt - LN_2 + gain / 2.0,
        CaseId::K6 => llt - LN_2 + gain,
        CaseId::K7 => {
            let rhs = -b * (1.0 + 2.0 * r).ln() + (p - 1.0 - b) * LN_2;
            -b * lt + (p - 1.0) * (2.0 + t0).ln().ln() - rhs + gain
        }
        CaseId::K8 => (-b - a * p) * lt - ((1.0 - b) + p * (1.0 - a)) * 4f64.ln() + gain,
        CaseId::K9 => -a * p * lt + (2.0 + t0).ln().ln() - (p + 1.0) * LN_2 + gain,
        CaseId::K10 => -a * p * lt - LN_2 - (1.0 + b) * (2.0 + r).ln() + gain,
        CaseId::K11 => p * llt - p * LN_2 - (1.0 + b) * (2.0 + r).ln() + gain,
        CaseId::K12 => (p + 1.0) * llt - (p + 1.0) * LN_2 + gain,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub case_id: CaseId,
    pub point: (f64, f64),
    pub k_value: f64,
    pub constants: CaseConstants,
    pub certified_time: f64,
}

/// Smallest t₀ ≤ search_cap on the case's ray where the side conditions,
/// the threshold inequality and K > 0 all hold.
pub fn find_certificate(
    case: CaseId,
    eps: f64,
    profile: &DataProfile,
    params: &WeightParams,
    search_cap: f64,
) -> Result<Option<Certificate>> {
    if !(eps > 0.0) {
        return Err(Error::params(format!("eps must be positive, got {eps}")));
    }
    let consts = case_constants(case, profile, params)?;
    let r = params.r;
    let holds = |t0: f64| {
        if !case.side_ok(t0, r) || threshold_margin(case, t0, eps, &consts, params) <= 0.0 {
            return false;
        }
        let (x, t) = case.point(t0, r);
        eval_with(case, x, t, eps, &consts, params) > 0.0
    };

    let (m, strict) = case.side_min(r);
    // Shift-ray cases also need x₀ > 0.
    let floor = if case.ray() == Ray::Shift { m.max(r + 1.0) } else { m };
    let start = if strict || floor > m {
        floor * (1.0 + 1e-12) + 1e-12
    } else {
        floor
    };
    if !(start <= search_cap) {
        return Ok(None);
    }
    let mut grid = vec![start];
    while *grid.last().unwrap() < search_cap {
        let next = grid.last().unwrap() * GRID_RATIO;
        grid.push(next.min(search_cap));
    }
    let Some(i) = grid.par_iter().position_first(|&t0| holds(t0)) else {
        return Ok(None);
    };
    let mut hi = grid[i];
    if i > 0 {
        let mut lo = grid[i - 1];
        for _ in 0..BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let (x0, t0) = case.point(hi, r);
    let k_value = eval_with(case, x0, t0, eps, &consts, params);
    Ok(Some(Certificate {
        case_id: case,
        point: (x0, t0),
        k_value,
        constants: consts,
        certified_time: t0,
    }))
}
