//! Closed-form growth bounds E₁, D, E₂, quadrature of the backward-cone
//! integrals they control, empirical fits of the implied constants, and the
//! small-data conditions that certify an existence horizon.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataProfile;
use crate::error::{Error, Result};
use crate::math::{weight_w, Sign, WeightParams};
use crate::quadrature::trapezoid;

/// Fitted constants are this multiple of the largest sampled ratio.
pub const FIT_SAFETY: f64 = 1.1;

/// Default sample count per region per time level.
pub const DEFAULT_SAMPLES: usize = 24;

/// Number of log-spaced time levels sampled below T.
pub const TIME_LEVELS: usize = 6;

/// Default number of trapezoid panels per smooth piece.
pub const DEFAULT_QUAD_N: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// t ± |x| ≥ R
    Int,
    /// t + |x| ≥ R, |t - |x|| ≤ R
    Ext,
    /// t + |x| ≤ R, |t - |x|| ≤ R
    Ori,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Int, Region::Ext, Region::Ori];

    pub fn contains(self, x: f64, t: f64, r: f64) -> bool {
        let ax = x.abs();
        match self {
            Region::Int => t + ax >= r && t - ax >= r,
            Region::Ext => t + ax >= r && (t - ax).abs() <= r,
            Region::Ori => t + ax <= r && (t - ax).abs() <= r,
        }
    }

    /// The interval of x ≥ 0 covered by the region at time t.
    pub fn x_range(self, t: f64, r: f64) -> Option<(f64, f64)> {
        let (lo, hi) = match self {
            Region::Int => (0.0, t - r),
            Region::Ext => ((t - r).max(r - t).max(0.0), t + r),
            Region::Ori => (0.0, r - t),
        };
        (hi >= lo).then_some((lo, hi))
    }
}

fn log3r(t: f64, r: f64) -> f64 {
    (t + 3.0 * r).ln()
}

/// Growth of ‖L(|u|^p)‖₁ / ‖u‖₁^p on [0, T].
pub fn e1(t_cap: f64, params: &WeightParams) -> f64 {
    let (a, b, r) = (params.a, params.b, params.r);
    let l = log3r(t_cap, r);
    match (params.sign_a(), params.sign_b(), params.sign_sum()) {
        (Sign::Pos, _, Sign::Pos) => 1.0,
        (Sign::Pos, _, Sign::Zero) | (Sign::Zero, Sign::Pos, _) => l,
        (Sign::Zero, Sign::Zero, _) => l * l,
        (Sign::Neg, Sign::Pos, _) => (t_cap + 2.0 * r).powf(-a),
        (Sign::Neg, Sign::Zero, _) => (t_cap + r).powf(-a) * l,
        // Every remaining sign pattern has a + b < 0 and b < 0.
        _ => (t_cap + 2.0 * r).powf(-(a + b)),
    }
}

/// Growth factor in the weighted estimate of the terms linear in U.
pub fn d_bound(t_cap: f64, params: &WeightParams) -> f64 {
    match params.sign_a() {
        Sign::Pos => 1.0,
        Sign::Zero => log3r(t_cap, params.r),
        Sign::Neg => (t_cap + 2.0 * params.r).powf(-params.a),
    }
}

/// Growth of the weighted norm of L(|U|^p) / ‖U‖₂^p on [0, T].
pub fn e2(t_cap: f64, params: &WeightParams) -> f64 {
    let (a, b, p, r) = (params.a, params.b, params.p, params.r);
    let l = log3r(t_cap, r);
    match (params.sign_a(), params.sign_b(), params.sign_sum()) {
        (Sign::Pos, _, Sign::Pos) => 1.0,
        (Sign::Pos, _, Sign::Zero) => l,
        (Sign::Pos, _, Sign::Neg) => (t_cap + 2.0 * r).powf(-(a + b)),
        (Sign::Zero, Sign::Pos, _) => l.powf(p),
        (Sign::Zero, Sign::Zero, _) => l.powf(p + 1.0),
        (Sign::Zero, Sign::Neg, _) => l.powf(p - 1.0) * (t_cap + r).powf(-b),
        (Sign::Neg, Sign::Pos, _) => (t_cap + 2.0 * r).powf(-p * a),
        (Sign::Neg, Sign::Zero, _) => (t_cap + 2.0 * r).powf(-p * a) * l,
        (Sign::Neg, Sign::Neg, _) => (t_cap + 2.0 * r).powf(-(p * a + b)),
    }
}

/// Which support indicator and weight power enter a cone integral.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ConeKind {
    /// Restrict to the annulus (s - R)₊ ≤ |y| ≤ s + R instead of |y| ≤ s + R.
    annulus: bool,
    /// Power of 1/w(|y|, s) in the integrand.
    w_power: f64,
}

/// Trapezoid rule in ξ = log(1 + |v|) on a piece that does not straddle 0,
/// so that the algebraic decay away from the origin is resolved at every scale.
fn graded<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo < 0.0 && hi > 0.0 {
        return graded_one_sided(&f, lo, 0.0, n) + graded_one_sided(&f, 0.0, hi, n);
    }
    graded_one_sided(&f, lo, hi, n)
}

fn graded_one_sided<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    if lo >= 0.0 {
        trapezoid(
            |xi: f64| {
                let e = xi.exp();
                f(e - 1.0) * e
            },
            lo.ln_1p(),
            hi.ln_1p(),
            n,
        )
    } else {
        trapezoid(
            |xi: f64| {
                let e = xi.exp();
                f(1.0 - e) * e
            },
            (-hi).ln_1p(),
            (-lo).ln_1p(),
            n,
        )
    }
}

fn pieces<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64], n: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(lo);
    cuts.extend(breaks.iter().copied().filter(|&c| c > lo && c < hi));
    cuts.push(hi);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    cuts.windows(2).map(|w| graded(&f, w[0], w[1], n)).sum()
}

/// ∫₀ᵗ ∫_{x-t+s}^{x+t-s} χ(y,s) w(|y|,s)^{-k} (1+|s+|y||)^{-(1+a)} (1+|s-|y||)^{-(1+b)} dy ds
/// computed in α = s + y, β = s - y (Jacobian ½).
fn cone_integral(x: f64, t: f64, params: &WeightParams, kind: ConeKind, quad_n: usize) -> f64 {
    let r = params.r;
    let a_top = t + x;
    let b_top = t - x;
    let b_lo = (-r).max(-a_top);
    if t <= 0.0 || b_top <= b_lo {
        return 0.0;
    }
    let (ea, eb) = (-(1.0 + params.a), -(1.0 + params.b));
    let kernel = |al: f64, be: f64| {
        let (hi, lo) = if al >= be { (al, be) } else { (be, al) };
        let mut v = (1.0 + hi).powf(ea) * (1.0 + lo.abs()).powf(eb);
        if kind.w_power != 0.0 {
            // w(|y|, s) depends on s + |y| = max(α, β).
            v *= weight_w(0.0, hi, params).powf(-kind.w_power);
        }
        v
    };
    let inner = |be: f64| {
        let lo = (-be).max(-r);
        let mut hi = a_top;
        if kind.annulus && be > r {
            hi = hi.min(r);
        }
        pieces(|al| kernel(al, be), lo, hi, &[be, 0.0, r, -r], quad_n)
    };
    0.5 * pieces(inner, b_lo, b_top, &[0.0, r, -r, a_top, -a_top], quad_n)
}

/// Cone integral with the cone indicator |y| ≤ s + R.
pub fn cone_integral_i(x: f64, t: f64, params: &WeightParams, quad_n: usize) -> f64 {
    cone_integral(
        x,
        t,
        params,
        ConeKind {
            annulus: false,
            w_power: 0.0,
        },
        quad_n,
    )
}

/// Annulus-restricted cone integral with weight w^{-j}.
pub fn cone_integral_j(x: f64, t: f64, j: u32, params: &WeightParams, quad_n: usize) -> f64 {
    cone_integral(
        x,
        t,
        params,
        ConeKind {
            annulus: true,
            w_power: j as f64,
        },
        quad_n,
    )
}

/// Cone integral with weight w^{-p}.
pub fn cone_integral_jt(x: f64, t: f64, params: &WeightParams, quad_n: usize) -> f64 {
    cone_integral(
        x,
        t,
        params,
        ConeKind {
            annulus: false,
            w_power: params.p,
        },
        quad_n,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lemma {
    /// I ≤ C₁E₁(T)
    L31,
    /// w J ≤ C₂ with j = 0
    L41J0,
    /// w J ≤ C₂ D(T) with j = 1
    L41J1,
    /// w J̃ ≤ C₃E₂(T)
    L42,
}

impl Lemma {
    pub const ALL: [Lemma; 4] = [Lemma::L31, Lemma::L41J0, Lemma::L41J1, Lemma::L42];

    fn bound(self, t_cap: f64, params: &WeightParams) -> f64 {
        match self {
            Lemma::L31 => e1(t_cap, params),
            Lemma::L41J0 => 1.0,
            Lemma::L41J1 => d_bound(t_cap, params),
            Lemma::L42 => e2(t_cap, params),
        }
    }

    fn value(self, x: f64, t: f64, params: &WeightParams, quad_n: usize) -> f64 {
        match self {
            Lemma::L31 => cone_integral_i(x, t, params, quad_n),
            Lemma::L41J0 => weight_w(x.abs(), t, params) * cone_integral_j(x, t, 0, params, quad_n),
            Lemma::L41J1 => weight_w(x.abs(), t, params) * cone_integral_j(x, t, 1, params, quad_n),
            Lemma::L42 => weight_w(x.abs(), t, params) * cone_integral_jt(x, t, params, quad_n),
        }
    }
}

/// Constant bounding the characteristic weight by the (1 + |s ± |y||) form:
/// F ≤ K (1+|s+|y||)^{-(1+a)} (1+|s-|y||)^{-(1+b)}.
pub fn weight_comparison_constant(params: &WeightParams) -> f64 {
    let ea = 1.0 + params.a;
    let eb = 1.0 + params.b;
    let plus = if ea >= 0.0 { 2f64 } else { std::f64::consts::SQRT_2 };
    let minus = if eb >= 0.0 { 3f64 } else { std::f64::consts::SQRT_2 };
    plus.powf(ea.abs()) * minus.powf(eb.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub lemma: Lemma,
    pub params: WeightParams,
    #[serde(rename = "T")]
    pub t_cap: f64,
    /// Points evaluated.
    pub samples: usize,
    pub sampled_max_ratio: f64,
    /// Sample point attaining the maximum.
    pub argmax: (f64, f64),
    /// Empirical: FIT_SAFETY × sampled_max_ratio.
    pub fitted_c: f64,
}

impl AprioriReport {
    /// Constant of the operator inequality implied by the fitted integral
    /// constant: includes the ½ of the Duhamel formula, the weight comparison,
    /// and for the linear-in-U terms the data constant c0^{p-j}.
    pub fn operator_constant(&self, c0_data: f64) -> f64 {
        let base = 0.5 * weight_comparison_constant(&self.params) * self.fitted_c;
        match self.lemma {
            Lemma::L41J0 => base * c0_data.powf(self.params.p),
            Lemma::L41J1 => base * c0_data.powf(self.params.p - 1.0),
            _ => base,
        }
    }
}

/// Deterministic sample points: `TIME_LEVELS` log-spaced times in (0, T],
/// and at each time `per_region` evenly spaced x ≥ 0 inside each region.
pub fn sample_points(t_cap: f64, r: f64, per_region: usize) -> Vec<(Region, f64, f64)> {
    let t_min = (r / 8.0).min(t_cap);
    let mut out = Vec::new();
    for k in 0..TIME_LEVELS {
        let frac = if TIME_LEVELS == 1 {
            1.0
        } else {
            k as f64 / (TIME_LEVELS - 1) as f64
        };
        let t = t_min * (t_cap / t_min).powf(frac);
        for region in Region::ALL {
            let Some((lo, hi)) = region.x_range(t, r) else { continue };
            for i in 0..per_region {
                let x = if per_region == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (per_region - 1) as f64
                };
                out.push((region, x, t));
            }
        }
    }
    out
}

/// Samples the cone integral of `lemma` over all three regions up to time T
/// and reports the largest ratio to the closed-form bound.
pub fn verify_apriori(
    lemma: Lemma,
    params: &WeightParams,
    t_cap: f64,
    samples: usize,
    quad_n: usize,
) -> Result<AprioriReport> {
    params.validate()?;
    if !(t_cap > 0.0) {
        return Err(Error::params(format!("T must be positive (got {t_cap})")));
    }
    if samples == 0 || quad_n < 16 {
        return Err(Error::params("need samples ≥ 1 and quad_n ≥ 16"));
    }
    let bound = lemma.bound(t_cap, params);
    let points = sample_points(t_cap, params.r, samples);
    let ratios: Vec<f64> = points
        .par_iter()
        .map(|&(_, x, t)| lemma.value(x, t, params, quad_n) / bound)
        .collect();
    let (idx, max) = ratios.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
    );
    if !max.is_finite() {
        return Err(Error::Numeric(format!("non-finite cone integral ratio for {lemma:?}")));
    }
    Ok(AprioriReport {
        lemma,
        params: *params,
        t_cap,
        samples: points.len(),
        sampled_max_ratio: max,
        argmax: (points[idx].1, points[idx].2),
        fitted_c: FIT_SAFETY * max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub lemma: Lemma,
    pub t_grid: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest ratio between consecutive T levels.
    pub max_growth: f64,
    pub bounded: bool,
}

/// Max ratios along a T-grid; a growth above 2× between consecutive levels
/// is reported as a violation of the bound.
pub fn ratio_trend(
    lemma: Lemma,
    params: &WeightParams,
    t_grid: &[f64],
    samples: usize,
    quad_n: usize,
) -> Result<TrendReport> {
    let ratios = t_grid
        .iter()
        .map(|&t| verify_apriori(lemma, params, t, samples, quad_n).map(|r| r.sampled_max_ratio))
        .collect::<Result<Vec<_>>>()?;
    let max_growth = ratios.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    Ok(TrendReport {
        lemma,
        t_grid: t_grid.to_vec(),
        ratios,
        max_growth,
        bounded: max_growth <= 2.0,
    })
}

/// Operator-level constants of the three a priori estimates. Empirical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub empirical: bool,
}

impl FittedConstants {
    /// Fits all three constants at horizon T for the given data.
    pub fn fit(
        params: &WeightParams,
        profile: &DataProfile,
        t_cap: f64,
        samples: usize,
        quad_n: usize,
    ) -> Result<Self> {
        let c0 = profile.c0_data;
        let rep = |l| verify_apriori(l, params, t_cap, samples, quad_n);
        let c1 = rep(Lemma::L31)?.operator_constant(c0);
        let c2 = rep(Lemma::L41J0)?
            .operator_constant(c0)
            .max(rep(Lemma::L41J1)?.operator_constant(c0));
        let c3 = rep(Lemma::L42)?.operator_constant(c0);
        Ok(FittedConstants {
            c1,
            c2,
            c3,
            empirical: true,
        })
    }

    /// `fit`, memoised per process on the exact inputs.
    pub fn cached(
        params: &WeightParams,
        profile: &DataProfile,
        t_cap: f64,
        samples: usize,
        quad_n: usize,
    ) -> Result<Self> {
        type Key = ([u64; 6], usize, usize);
        static CACHE: OnceLock<Mutex<HashMap<Key, FittedConstants>>> = OnceLock::new();
        let bits = [params.a, params.b, params.p, params.r, profile.c0_data, t_cap].map(f64::to_bits);
        let key = (bits, samples, quad_n);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(*hit);
        }
        let fitted = Self::fit(params, profile, t_cap, samples, quad_n)?;
        cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, fitted);
        Ok(fitted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    /// Iterates stay in the ball ‖u‖₁ ≤ 2C₀ε.
    Sec3Exist,
    /// Iterates contract in ‖·‖₁.
    Sec3Cauchy,
    /// Iterates stay in the weighted ball.
    Sec4Exist,
    /// Iterates contract in ‖·‖₂.
    Sec4Cauchy,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Sec3Exist, Stage::Sec3Cauchy, Stage::Sec4Exist, Stage::Sec4Cauchy];
}

/// Left side of the small-data condition of `stage`; the condition is lhs ≤ 1.
pub fn contraction_lhs(
    stage: Stage,
    eps: f64,
    t_cap: f64,
    profile: &DataProfile,
    consts: &FittedConstants,
    params: &WeightParams,
) -> f64 {
    if eps == 0.0 {
        return 0.0;
    }
    let p = params.p;
    let c0 = profile.c0_data;
    match stage {
        Stage::Sec3Exist => 2f64.powf(p) * c0.powf(p - 1.0) * consts.c1 * e1(t_cap, params) * eps.powf(p - 1.0),
        Stage::Sec3Cauchy => {
            2f64.powf(p + 1.0) * p * c0.powf(p - 1.0) * consts.c1 * e1(t_cap, params) * eps.powf(p - 1.0)
        }
        Stage::Sec4Exist => {
            2f64.powf(p * p + p) * consts.c3 * consts.c2.powf(p - 1.0) * e2(t_cap, params) * eps.powf(p * (p - 1.0))
        }
        Stage::Sec4Cauchy => {
            let three = 3f64.powf(p - 1.0);
            three
                * p
                * consts.c3
                * 2f64.powf(p * p + 1.0)
                * consts.c2.powf(p - 1.0)
                * e2(t_cap, params)
                * eps.powf(p * (p - 1.0))
                + three * 2.0 * p * consts.c2 * d_bound(t_cap, params) * eps.powf(p - 1.0)
        }
    }
}

pub fn contraction_ok(
    stage: Stage,
    eps: f64,
    t_cap: f64,
    profile: &DataProfile,
    consts: &FittedConstants,
    params: &WeightParams,
) -> bool {
    contraction_lhs(stage, eps, t_cap, profile, consts, params) <= 1.0
}

/// Largest T ≤ t_search at which the stage condition holds, by bisection on
/// the monotone left side. None if it fails already at T = 0; Some(t_search)
/// if it never fails below the cap.
pub fn certified_horizon(
    stage: Stage,
    eps: f64,
    profile: &DataProfile,
    consts: &FittedConstants,
    params: &WeightParams,
    t_search: f64,
) -> Option<f64> {
    let ok = |t| contraction_ok(stage, eps, t, profile, consts, params);
    if !ok(0.0) {
        return None;
    }
    if ok(t_search) {
        return Some(t_search);
    }
    let (mut lo, mut hi) = (0.0, t_search);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Some(lo)
}

/// Constants combining C₂ and C₃ into explicit horizon bounds for the
/// weighted iteration, one per sign pattern of (a, b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxConstants {
    /// log(T+3R) ≤ c̃₁ ε^{-(p-1)} for a = 0, b > 0.
    pub ct1: f64,
    /// log(T+3R) ≤ c̃₂ ε^{-p(p-1)/(p+1)} for a = b = 0.
    pub ct2: f64,
    /// T ≤ ψ₂⁻¹(c̃₃ ε^{-p(p-1)}) for a = 0, b < 0.
    pub ct3: f64,
    /// T + 2R ≤ c̃₄ ε^{-(p-1)/(-a)} for a < 0, b > 0.
    pub ct4: f64,
    /// T ≤ ψ₁⁻¹(c̃₅ ε^{-p(p-1)}) for a < 0, b = 0.
    pub ct5: f64,
    /// T + 2R ≤ c̃₆ ε^{-p(p-1)/(-pa-b)} for a < 0, b < 0.
    pub ct6: f64,
    pub empirical: bool,
}

pub fn aux_constants(consts: &FittedConstants, params: &WeightParams) -> AuxConstants {
    let (a, b, p) = (params.a, params.b, params.p);
    let (c2, c3) = (consts.c2, consts.c3);
    let k1 = 2f64.powf(p * p + p) * c3 * c2.powf(p - 1.0);
    let k2 = 2.0 * 3f64.powf(p - 1.0) * p * c3 * 2f64.powf(p * p + 1.0) * c2.powf(p - 1.0);
    let k3 = 4.0 * 3f64.powf(p - 1.0) * p * c2;
    AuxConstants {
        ct1: k1.powf(-1.0 / p).min(k2.powf(-1.0 / p)).min(1.0 / k3),
        ct2: k1.powf(-1.0 / (p + 1.0)).min(k2.powf(-1.0 / (p + 1.0))).min(1.0 / k3),
        ct3: 1.0 / (p * 2f64.powf(p * p + p - b + 1.0) * 3f64.powf(p - 1.0) * c3 * c2.powf(p - 1.0)),
        ct4: k1.powf(1.0 / (p * a)).min(k2.powf(1.0 / (p * a))).min(k3.powf(1.0 / a)),
        ct5: 1.0 / (2f64.powf(p * p + 3.0) * 3f64.powf(p - 1.0 - p * a) * p * c3 * c2.powf(p - 1.0)),
        ct6: {
            let e = 1.0 / (p * a + b);
            k1.powf(e).min(k2.powf(e)).min(k3.powf(e))
        },
        empirical: consts.empirical,
    }
}

/// Slacks (rhs - lhs) of log(t+x+3R) ≤ 2 log(T+3R) and
/// (t+x+R)^{-q} ≤ 2^{-q} (T+R)^{-q}, for q < 0, 0 ≤ x ≤ t + R, t ≤ T.
pub fn lemma24_slacks(x: f64, t: f64, t_cap: f64, q: f64, r: f64) -> [f64; 2] {
    [
        2.0 * (t_cap + 3.0 * r).ln() - (t + x + 3.0 * r).ln(),
        2f64.powf(-q) * (t_cap + r).powf(-q) - (t + x + r).powf(-q),
    ]
}
