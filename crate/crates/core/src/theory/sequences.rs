use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::s_p;

/// a_n = (p^{n-1} - 1)/(p - 1), n ≥ 1.
pub fn a_n(p: f64, n: u32) -> f64 {
    assert!(n >= 1, "a_n is indexed from 1");
    (p.powi(n as i32 - 1) - 1.0) / (p - 1.0)
}

/// a_n by a_{k+1} = p a_k + 1 from a_1 = 0.
pub fn a_n_recursive(p: f64, n: u32) -> f64 {
    assert!(n >= 1, "a_n is indexed from 1");
    (1..n).fold(0.0, |a, _| p * a + 1.0)
}

/// Slicing partial sum Σ_{i=0}^{n} 2^{-i}.
pub fn l_n(n: u32) -> f64 {
    2.0 - 0.5f64.powi(n as i32)
}

/// Cut-off l_n R of the n-th slice.
pub fn slice_threshold(n: u32, r: f64) -> f64 {
    l_n(n) * r
}

/// Companion exponent sequence used by some blow-up cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BSequence {
    None,
    /// b_n = p^{n-1}
    Geometric,
    /// b_n = a_{n+1}
    Shifted,
}

impl BSequence {
    pub fn value(self, p: f64, n: u32) -> Option<f64> {
        match self {
            BSequence::None => None,
            BSequence::Geometric => Some(p.powi(n as i32 - 1)),
            BSequence::Shifted => Some(a_n(p, n + 1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub p: f64,
    pub n: u32,
    pub a_n: f64,
    pub b_n: Option<f64>,
    pub log_m_n: f64,
    pub m_n: f64,
    pub eta: f64,
    pub mu: f64,
    pub c: f64,
    pub s_p: f64,
    pub l_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnSequence {
    pub states: Vec<IterationState>,
    /// Lower bound on log M_n from the closed estimate, aligned with `states`.
    pub log_bound: Vec<f64>,
}

impl MnSequence {
    pub fn slack(&self) -> Vec<f64> {
        self.states
            .iter()
            .zip(&self.log_bound)
            .map(|(s, b)| s.log_m_n - b)
            .collect()
    }
}

/// Closed lower bound on log M_{n+1}.
pub fn lemma51_log_bound(c: f64, eta: f64, mu: f64, m1: f64, p: f64, n: u32) -> f64 {
    let lc = c.ln() / (p - 1.0);
    -lc + p.powi(n as i32) * (lc - s_p(p) * (eta * mu).ln() + m1.ln())
}

/// M_{n+1} = C η^{-n} μ^{-n} M_n^p, carried in log space.
pub fn mn_sequence(c: f64, eta: f64, mu: f64, m1: f64, p: f64, n_max: u32, b: BSequence) -> Result<MnSequence> {
    for (name, v) in [("C", c), ("eta", eta), ("mu", mu), ("M1", m1)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::params(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if !(p > 1.0) {
        return Err(Error::params(format!("p must exceed 1, got {p}")));
    }
    let sp = s_p(p);
    let log_em = (eta * mu).ln();
    let mut states = Vec::with_capacity(n_max as usize);
    let mut log_bound = Vec::with_capacity(n_max as usize);
    let mut log_m = m1.ln();
    for n in 1..=n_max {
        states.push(IterationState {
            p,
            n,
            a_n: a_n(p, n),
            b_n: b.value(p, n),
            log_m_n: log_m,
            m_n: log_m.exp(),
            eta,
            mu,
            c,
            s_p: sp,
            l_n: l_n(n),
        });
        log_bound.push(lemma51_log_bound(c, eta, mu, m1, p, n - 1));
        log_m = c.ln() - n as f64 * log_em + p * log_m;
    }
    Ok(MnSequence { states, log_bound })
}
