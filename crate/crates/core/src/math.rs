//! Scalar building blocks: the Japanese bracket, the characteristic weight,
//! the weighted-norm weight, the special functions whose inverses appear in
//! the critical lifespan cells, and a few closed-form sums and integrals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equalities between exponents (a = 0, a + b = 0, ...) are decided with this
/// absolute tolerance.
pub const SIGN_TOL: f64 = 1e-12;

/// Three-way sign of a real number with a tolerance band around zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v > SIGN_TOL {
            Sign::Pos
        } else if v < -SIGN_TOL {
            Sign::Neg
        } else {
            Sign::Zero
        }
    }
}

/// Problem parameters: characteristic exponents `a`, `b`, the power `p` and
/// the support radius `r` of the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

impl WeightParams {
    pub fn new(a: f64, b: f64, p: f64, r: f64) -> Result<Self> {
        let params = WeightParams { a, b, p, r };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::params(format!(
                "exponents must be finite (a = {}, b = {})",
                self.a, self.b
            )));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::params(format!("p must exceed 1 (got {})", self.p)));
        }
        if !(self.r > 1.0) || !self.r.is_finite() {
            return Err(Error::params(format!("R must exceed 1 (got {})", self.r)));
        }
        Ok(())
    }

    pub fn sign_a(&self) -> Sign {
        Sign::of(self.a)
    }

    pub fn sign_b(&self) -> Sign {
        Sign::of(self.b)
    }

    pub fn sign_sum(&self) -> Sign {
        Sign::of(self.a + self.b)
    }
}

/// ⟨x⟩ = (1 + x²)^{1/2}
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// The characteristic weight ⟨t + ⟨x⟩⟩^{-(1+a)} ⟨t - ⟨x⟩⟩^{-(1+b)}.
#[inline]
pub fn weight_f(x: f64, t: f64, params: &WeightParams) -> f64 {
    let bx = bracket(x);
    let plus = bracket(t + bx);
    let minus = bracket(t - bx);
    pow_or_one(plus, -(1.0 + params.a)) * pow_or_one(minus, -(1.0 + params.b))
}

#[inline]
fn pow_or_one(base: f64, exponent: f64) -> f64 {
    // The solver evaluates this at every node of every row; small integer
    // exponents are common and much cheaper than powf.
    match exponent {
        0.0 => 1.0,
        -1.0 => 1.0 / base,
        -2.0 => 1.0 / (base * base),
        1.0 => base,
        -3.0 => 1.0 / (base * base * base),
        e => base.powf(e),
    }
}

/// |u|^p, with the common integer powers done by multiplication.
#[inline]
pub fn abs_pow(u: f64, p: f64) -> f64 {
    let v = u.abs();
    if p == 2.0 {
        v * v
    } else if p == 3.0 {
        v * v * v
    } else {
        v.powf(p)
    }
}

/// Weight of the weighted sup-norm: 1 for a > 0, 1/log(t+|x|+3R) for a = 0,
/// (t+|x|+3R)^a for a < 0.
pub fn weight_w(absx: f64, t: f64, params: &WeightParams) -> f64 {
    let arg = t + absx + 3.0 * params.r;
    match params.sign_a() {
        Sign::Pos => 1.0,
        Sign::Zero => 1.0 / arg.ln(),
        Sign::Neg => arg.powf(params.a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpecialKind {
    /// s^{-a} log(2+s)
    Phi1,
    /// s^{-pa} log(2+s)
    Psi1,
    /// s^{-b} log^{p-1}(2+s)
    Psi2,
}

/// One of the three monotone special functions, bound to its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialFn {
    pub kind: SpecialKind,
    pub params: WeightParams,
}

const INVERSE_MAX_ITER: usize = 200;
const BRACKET_MAX_GROWTH: usize = 2100;

impl SpecialFn {
    /// Phi1 and Psi1 need a < 0, Psi2 needs b < 0: only there is the
    /// function strictly increasing from 0 on [0, ∞).
    pub fn new(kind: SpecialKind, params: WeightParams) -> Result<Self> {
        params.validate()?;
        let ok = match kind {
            SpecialKind::Phi1 | SpecialKind::Psi1 => params.sign_a() == Sign::Neg,
            SpecialKind::Psi2 => params.sign_b() == Sign::Neg,
        };
        if !ok {
            return Err(Error::params(format!(
                "{kind:?} requires a strictly negative exponent (a = {}, b = {})",
                params.a, params.b
            )));
        }
        Ok(SpecialFn { kind, params })
    }

    pub fn eval(&self, s: f64) -> f64 {
        let WeightParams { a, b, p, .. } = self.params;
        let log2s = (2.0 + s).ln();
        match self.kind {
            SpecialKind::Phi1 => s.powf(-a) * log2s,
            SpecialKind::Psi1 => s.powf(-p * a) * log2s,
            SpecialKind::Psi2 => s.powf(-b) * log2s.powf(p - 1.0),
        }
    }

    /// Inverse by bracketing bisection. The bracket `[0, hi]` is grown
    /// geometrically until `eval(hi) >= y`, then halved until it collapses to
    /// adjacent floats. The result must satisfy
    /// `|eval(s) - y| <= rel_tol * max(y, 1)`.
    pub fn inverse(&self, y: f64, rel_tol: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(Error::pre(format!("inverse target must be finite and >= 0 (got {y})")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut grown = 0;
        while self.eval(hi) < y {
            lo = hi;
            hi *= 2.0;
            grown += 1;
            if grown > BRACKET_MAX_GROWTH || !hi.is_finite() {
                return Err(Error::NoConvergence {
                    iterations: grown,
                    lo,
                    hi,
                    target: y,
                });
            }
        }
        let mut iterations = 0;
        while iterations < INVERSE_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = self.eval(mid);
            if v == y {
                lo = mid;
                hi = mid;
                break;
            }
            if v < y {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        // pick whichever bracket end has the smaller residual
        let (rl, rh) = ((self.eval(lo) - y).abs(), (self.eval(hi) - y).abs());
        let (s, resid) = if rl <= rh { (lo, rl) } else { (hi, rh) };
        if resid <= rel_tol * y.max(1.0) {
            Ok(s)
        } else {
            Err(Error::NoConvergence {
                iterations,
                lo,
                hi,
                target: y,
            })
        }
    }
}

/// Σ_{j≥1} j p^{-j} = p / (p-1)².
pub fn s_p(p: f64) -> f64 {
    p / ((p - 1.0) * (p - 1.0))
}

/// Partial sum Σ_{j=1}^{n} j p^{-j}.
pub fn s_p_partial(p: f64, n: usize) -> f64 {
    let mut acc = 0.0;
    let mut pw = 1.0;
    for j in 1..=n {
        pw /= p;
        acc += j as f64 * pw;
    }
    acc
}

/// Right-hand side shape of the elementary integral bound:
/// (1+μ)^{-q} for q > 0, log(ν+1) for q = 0, (ν+1)^{-q} for q < 0.
pub fn lemma23_bound(q: f64, mu: f64, nu: f64) -> f64 {
    match Sign::of(q) {
        Sign::Pos => (1.0 + mu).powf(-q),
        Sign::Zero => (nu + 1.0).ln(),
        Sign::Neg => (nu + 1.0).powf(-q),
    }
}

/// ∫_μ^ν (1+ξ)^{-(1+q)} dξ in closed form. `nu` may be `f64::INFINITY` when q > 0.
pub fn lemma23_exact(q: f64, mu: f64, nu: f64) -> f64 {
    if mu == nu {
        return 0.0;
    }
    match Sign::of(q) {
        Sign::Zero => ((1.0 + nu) / (1.0 + mu)).ln(),
        _ => ((1.0 + mu).powf(-q) - (1.0 + nu).powf(-q)) / q,
    }
}

/// Slack of the four two-sided bracket inequalities at (x, t); every entry is
/// `rhs - lhs` and must be >= 0 (up to rounding).
pub fn lemma22_slacks(x: f64, t: f64) -> [f64; 4] {
    let ax = x.abs();
    let d = (t - ax).abs();
    let minus = bracket(t - bracket(x));
    let plus = bracket(t + bracket(x));
    let sqrt2 = std::f64::consts::SQRT_2;
    [
        minus - (1.0 + d) / 3.0,
        sqrt2 * (1.0 + d) - minus,
        plus - 0.5 * (1.0 + t + ax),
        sqrt2 * (1.0 + t + ax) - plus,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(a: f64, b: f64, p: f64, r: f64) -> WeightParams {
        WeightParams::new(a, b, p, r).unwrap()
    }

    #[test]
    fn bracket_values() {
        assert_eq!(bracket(0.0), 1.0);
        assert_relative_eq!(bracket(-1.0), std::f64::consts::SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(bracket(3f64.sqrt()), 2.0, epsilon = 1e-15);
        assert_eq!(bracket(-7.5), bracket(7.5));
    }

    #[test]
    fn weight_f_values() {
        assert_relative_eq!(weight_f(0.0, 0.0, &params(0.0, 0.0, 2.0, 2.0)), 0.5, epsilon = 1e-15);
        let flat = params(-1.0, -1.0, 2.0, 2.0);
        for &(x, t) in &[(0.0, 0.0), (3.0, 1.0), (-40.0, 17.5)] {
            assert_eq!(weight_f(x, t, &flat), 1.0);
        }
        assert_relative_eq!(
            weight_f(0.0, 0.0, &params(1.0, 0.0, 2.0, 2.0)),
            0.3535533906,
            epsilon = 1e-10
        );
        let pr = params(0.3, -0.7, 2.0, 2.0);
        assert_eq!(weight_f(2.5, 4.0, &pr), weight_f(-2.5, 4.0, &pr));
    }

    #[test]
    fn weight_w_values() {
        assert_eq!(weight_w(7.0, 3.0, &params(0.5, 0.0, 2.0, 2.0)), 1.0);
        assert_relative_eq!(
            weight_w(0.0, 0.0, &params(0.0, 0.0, 2.0, 1.0 + 1e-15)),
            0.9102392,
            epsilon = 1e-7
        );
        assert_relative_eq!(
            weight_w(0.0, 0.0, &params(-1.0, 0.0, 2.0, 1.0 + 1e-15)),
            1.0 / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn special_eval_values() {
        let phi = SpecialFn::new(SpecialKind::Phi1, params(-1.0, 0.0, 2.0, 2.0)).unwrap();
        assert_eq!(phi.eval(0.0), 0.0);
        assert_relative_eq!(phi.eval(1.0), 3f64.ln(), epsilon = 1e-15);
        let psi2 = SpecialFn::new(SpecialKind::Psi2, params(0.0, -1.0, 2.0, 2.0)).unwrap();
        assert_relative_eq!(psi2.eval(1.0), 3f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn special_fn_rejects_nonnegative_exponent() {
        assert!(SpecialFn::new(SpecialKind::Phi1, params(0.0, 0.0, 2.0, 2.0)).is_err());
        assert!(SpecialFn::new(SpecialKind::Psi1, params(0.5, 0.0, 2.0, 2.0)).is_err());
        assert!(SpecialFn::new(SpecialKind::Psi2, params(-1.0, 0.0, 2.0, 2.0)).is_err());
    }

    #[test]
    fn special_inverse_values() {
        let phi = SpecialFn::new(SpecialKind::Phi1, params(-1.0, 0.0, 2.0, 2.0)).unwrap();
        assert_eq!(phi.inverse(0.0, 1e-14).unwrap(), 0.0);
        assert_relative_eq!(phi.inverse(3f64.ln(), 1e-14).unwrap(), 1.0, epsilon = 1e-13);
        let psi1 = SpecialFn::new(SpecialKind::Psi1, params(-1.0, 0.0, 2.0, 2.0)).unwrap();
        let target = psi1.eval(2.0);
        assert_relative_eq!(target, 4.0 * 4f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(psi1.inverse(target, 1e-14).unwrap(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn special_inverse_rejects_bad_target() {
        let phi = SpecialFn::new(SpecialKind::Phi1, params(-1.0, 0.0, 2.0, 2.0)).unwrap();
        assert!(phi.inverse(-1.0, 1e-12).is_err());
        assert!(phi.inverse(f64::INFINITY, 1e-12).is_err());
    }

    #[test]
    fn s_p_values() {
        assert_relative_eq!(s_p(2.0), 2.0);
        assert_relative_eq!(s_p(3.0), 0.75);
        assert_relative_eq!(s_p(1.5), 6.0);
        for &p in &[2.0, 3.0] {
            assert!((s_p(p) - s_p_partial(p, 50)).abs() < 1e-10);
        }
        // tail Σ_{j>n} j x^j = x^{n+1}((n+1) - n x) / (1-x)² with x = 1/p
        let (p, n) = (1.5_f64, 50);
        let x = 1.0 / p;
        let tail = x.powi(n as i32 + 1) * ((n + 1) as f64 - n as f64 * x) / ((1.0 - x) * (1.0 - x));
        assert_relative_eq!(s_p(p) - s_p_partial(p, n), tail, max_relative = 1e-6);
    }

    #[test]
    fn lemma23_values() {
        assert_relative_eq!(lemma23_exact(1.0, 0.0, f64::INFINITY), 1.0);
        assert_relative_eq!(lemma23_bound(1.0, 0.0, f64::INFINITY), 1.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(lemma23_exact(0.0, 0.0, e - 1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(lemma23_bound(0.0, 0.0, e - 1.0), 1.0, epsilon = 1e-15);
        for &q in &[-1.0, -0.5, 0.0, 0.5, 1.0] {
            assert_eq!(lemma23_exact(q, 3.0, 3.0), 0.0);
        }
    }

    #[test]
    fn lemma22_origin_is_tight() {
        let s = lemma22_slacks(0.0, 0.0);
        assert!(s.iter().all(|v| *v >= -1e-15));
        assert!(s[3].abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(WeightParams::new(0.0, 0.0, 1.0, 2.0).is_err());
        assert!(WeightParams::new(0.0, 0.0, 2.0, 1.0).is_err());
        assert!(WeightParams::new(f64::NAN, 0.0, 2.0, 2.0).is_err());
    }
}
