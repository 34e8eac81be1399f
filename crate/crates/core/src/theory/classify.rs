use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::math::{Sign, SpecialFn, SpecialKind, WeightParams};

/// Whether the initial velocity has nonzero total mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Nonzero,
    Zero,
}

/// Piecewise cell of the (a, b) plane. The first six occur for nonzero
/// moment, all but ExpHalf, Phi1Inv and PowAB occur for zero moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    /// a + b > 0, a > 0
    Global,
    /// exp(c ε^{-(p-1)})
    ExpP1,
    /// exp(c ε^{-(p-1)/2}), a = b = 0 with nonzero moment
    ExpHalf,
    /// ε^{-(p-1)/(-a)}, a < 0 < b
    PowA,
    /// φ₁⁻¹(c ε^{-(p-1)}), a < 0 = b with nonzero moment
    Phi1Inv,
    /// ε^{-(p-1)/(-a-b)}, a + b < 0 and b < 0 with nonzero moment
    PowAB,
    /// exp(c ε^{-p(p-1)}), a + b = 0 < a with zero moment
    ExpP,
    /// exp(c ε^{-p(p-1)/(p+1)}), a = b = 0 with zero moment
    ExpFujita,
    /// ψ₁⁻¹(c ε^{-p(p-1)}), a < 0 = b with zero moment
    Psi1Inv,
    /// ε^{-p(p-1)/(-pa-b)}, a, b < 0 with zero moment
    PowPAB,
    /// ψ₂⁻¹(c ε^{-p(p-1)}), a = 0 > b with zero moment
    Psi2Inv,
    /// ε^{-p(p-1)/(-a-b)}, a + b < 0 < a with zero moment
    PowABp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCase {
    pub moment: Moment,
    pub cell: Cell,
    pub params: WeightParams,
}

pub fn classify(params: &WeightParams, moment: Moment) -> RegionCase {
    use Sign::*;
    let (sa, sb, ss) = (params.sign_a(), params.sign_b(), params.sign_sum());
    let cell = match moment {
        Moment::Nonzero => match (sa, sb, ss) {
            (Pos, _, Pos) => Cell::Global,
            (Pos, _, Zero) | (Zero, Pos, _) => Cell::ExpP1,
            (Zero, Zero, _) => Cell::ExpHalf,
            (Neg, Pos, _) => Cell::PowA,
            (Neg, Zero, _) => Cell::Phi1Inv,
            _ => Cell::PowAB,
        },
        Moment::Zero => match (sa, sb, ss) {
            (Pos, _, Pos) => Cell::Global,
            (Pos, _, Zero) => Cell::ExpP,
            (Pos, _, Neg) => Cell::PowABp,
            (Zero, Pos, _) => Cell::ExpP1,
            (Zero, Zero, _) => Cell::ExpFujita,
            (Zero, Neg, _) => Cell::Psi2Inv,
            (Neg, Pos, _) => Cell::PowA,
            (Neg, Zero, _) => Cell::Psi1Inv,
            (Neg, Neg, _) => Cell::PowPAB,
        },
    };
    RegionCase {
        moment,
        cell,
        params: *params,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictionKind {
    GlobalExistence,
    /// T = c ε^{-exponent}
    PowerLaw {
        exponent: f64,
    },
    /// T = exp(c ε^{-rate_exponent})
    ExpPower {
        rate_exponent: f64,
    },
    /// T = fn⁻¹(c ε^{-power})
    InverseFn {
        function: SpecialFn,
        power: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub kind: PredictionKind,
    pub case: RegionCase,
}

impl RegionCase {
    pub fn prediction(&self) -> Prediction {
        let WeightParams { a, b, p, .. } = self.params;
        let q = p * (p - 1.0);
        let inverse = |kind| PredictionKind::InverseFn {
            // The cell guarantees the sign condition of the special function.
            function: SpecialFn {
                kind,
                params: self.params,
            },
            power: if kind == SpecialKind::Phi1 { p - 1.0 } else { q },
        };
        let kind = match self.cell {
            Cell::Global => PredictionKind::GlobalExistence,
            Cell::ExpP1 => PredictionKind::ExpPower { rate_exponent: p - 1.0 },
            Cell::ExpHalf => PredictionKind::ExpPower {
                rate_exponent: (p - 1.0) / 2.0,
            },
            Cell::ExpP => PredictionKind::ExpPower { rate_exponent: q },
            Cell::ExpFujita => PredictionKind::ExpPower {
                rate_exponent: q / (p + 1.0),
            },
            Cell::PowA => PredictionKind::PowerLaw {
                exponent: (p - 1.0) / -a,
            },
            Cell::PowAB => PredictionKind::PowerLaw {
                exponent: (p - 1.0) / (-a - b),
            },
            Cell::PowPAB => PredictionKind::PowerLaw {
                exponent: q / (-p * a - b),
            },
            Cell::PowABp => PredictionKind::PowerLaw { exponent: q / (-a - b) },
            Cell::Phi1Inv => inverse(SpecialKind::Phi1),
            Cell::Psi1Inv => inverse(SpecialKind::Psi1),
            Cell::Psi2Inv => inverse(SpecialKind::Psi2),
        };
        Prediction { kind, case: *self }
    }

    /// Exponent of the power-law cells, None otherwise.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.prediction().kind {
            PredictionKind::PowerLaw { exponent } => Some(exponent),
            _ => None,
        }
    }

    pub fn is_global(&self) -> bool {
        self.cell == Cell::Global
    }
}

/// Lifespan predicted by the cell's law with the caller's constant c.
pub fn predict(case: &RegionCase, eps: f64, c: f64) -> Result<f64> {
    Ok(match case.prediction().kind {
        PredictionKind::GlobalExistence => f64::INFINITY,
        PredictionKind::PowerLaw { exponent } => c * eps.powf(-exponent),
        PredictionKind::ExpPower { rate_exponent } => (c * eps.powf(-rate_exponent)).exp(),
        PredictionKind::InverseFn { function, power } => function.inverse(c * eps.powf(-power), 1e-12)?,
    })
}
