//! Compactly supported initial data built from the polynomial bump
//! (1 - (x/R)²)³, and the free wave evolution it generates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the Huygens check and for the zero-moment invariant.
pub const HUYGENS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// g = f, so the velocity has positive total mass.
    NonzeroMoment,
    /// g odd, total mass exactly zero.
    ZeroMoment,
    /// f ≥ 0, g ≡ 0.
    PositiveFZeroG,
}

impl ProfileKind {
    pub fn has_zero_moment(self) -> bool {
        !matches!(self, ProfileKind::NonzeroMoment)
    }
}

/// Initial data (f, g) with their derived constants. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataProfile {
    pub kind: ProfileKind,
    #[serde(rename = "R")]
    pub r: f64,
    /// ∫ g
    pub g_moment: f64,
    /// ∫ |g|
    pub g_l1: f64,
    /// ‖f‖_∞ + ½‖g‖_{L¹}
    pub c0_data: f64,
    /// ½ ∫ g
    pub c_g: f64,
}

pub fn make_profile(kind: ProfileKind, r: f64) -> Result<DataProfile> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::params(format!("R must exceed 1 (got {r})")));
    }
    let (g_moment, g_l1) = match kind {
        ProfileKind::NonzeroMoment => (32.0 * r / 35.0, 32.0 * r / 35.0),
        ProfileKind::ZeroMoment => (0.0, r / 4.0),
        ProfileKind::PositiveFZeroG => (0.0, 0.0),
    };
    Ok(DataProfile {
        kind,
        r,
        g_moment,
        g_l1,
        c0_data: 1.0 + 0.5 * g_l1,
        c_g: 0.5 * g_moment,
    })
}

impl DataProfile {
    #[inline]
    fn scaled(&self, x: f64) -> Option<f64> {
        let u = x / self.r;
        (u.abs() < 1.0).then_some(u)
    }

    pub fn f(&self, x: f64) -> f64 {
        match self.scaled(x) {
            Some(u) => {
                let s = 1.0 - u * u;
                s * s * s
            }
            None => 0.0,
        }
    }

    /// f″ in closed form.
    pub fn f_dd(&self, x: f64) -> f64 {
        match self.scaled(x) {
            Some(u) => {
                let u2 = u * u;
                -6.0 * (1.0 - u2) * (1.0 - 5.0 * u2) / (self.r * self.r)
            }
            None => 0.0,
        }
    }

    pub fn g(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::NonzeroMoment => self.f(x),
            ProfileKind::ZeroMoment => match self.scaled(x) {
                Some(u) => {
                    let s = 1.0 - u * u;
                    u * s * s * s
                }
                None => 0.0,
            },
            ProfileKind::PositiveFZeroG => 0.0,
        }
    }

    /// Antiderivative of g, normalised to vanish at x = -R.
    pub fn g_antiderivative(&self, x: f64) -> f64 {
        let u = (x / self.r).clamp(-1.0, 1.0);
        match self.kind {
            ProfileKind::NonzeroMoment => {
                let u2 = u * u;
                let poly = u * (1.0 - u2 + 0.6 * u2 * u2 - u2 * u2 * u2 / 7.0);
                self.r * (poly + 16.0 / 35.0)
            }
            ProfileKind::ZeroMoment => {
                let s = 1.0 - u * u;
                -self.r * s * s * s * s / 8.0
            }
            ProfileKind::PositiveFZeroG => 0.0,
        }
    }

    pub fn f_sup(&self) -> f64 {
        1.0
    }
}

/// d'Alembert solution of the free wave equation with data (f, g).
pub fn free_solution(profile: &DataProfile, x: f64, t: f64) -> f64 {
    let travelling = 0.5 * (profile.f(x + t) + profile.f(x - t));
    if t == 0.0 || profile.kind == ProfileKind::PositiveFZeroG {
        return travelling;
    }
    travelling + 0.5 * (profile.g_antiderivative(x + t) - profile.g_antiderivative(x - t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuygensReport {
    pub samples: usize,
    pub max_violation: f64,
    /// Point attaining the largest |u⁰|, if any sample was taken.
    pub worst_point: Option<(f64, f64)>,
    pub passed: bool,
}

/// Samples points strictly inside the lacuna |x| < t - R and strictly outside
/// the cone |x| > t + R, half each, and records the largest |u⁰| there.
pub fn huygens_check(profile: &DataProfile, samples: usize, seed: u64) -> Result<HuygensReport> {
    if !profile.kind.has_zero_moment() {
        return Err(Error::pre(
            "the lacuna of the free solution requires zero velocity moment",
        ));
    }
    let r = profile.r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_violation = 0.0f64;
    let mut worst_point = None;
    for i in 0..samples {
        let (x, t) = if i % 2 == 0 {
            let t = r + rng.gen::<f64>() * 50.0 * r;
            let half = t - r;
            (rng.gen_range(-1.0..1.0) * half, t)
        } else {
            let t = rng.gen::<f64>() * 50.0 * r;
            let dist = t + r + rng.gen::<f64>() * 50.0 * r;
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            (sign * dist, t)
        };
        let v = free_solution(profile, x, t).abs();
        if v > max_violation || worst_point.is_none() {
            max_violation = max_violation.max(v);
            worst_point = Some((x, t));
        }
    }
    Ok(HuygensReport {
        samples,
        max_violation,
        worst_point,
        passed: max_violation <= HUYGENS_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson;

    #[test]
    fn moments_match_quadrature() {
        for kind in [
            ProfileKind::NonzeroMoment,
            ProfileKind::ZeroMoment,
            ProfileKind::PositiveFZeroG,
        ] {
            let p = make_profile(kind, 2.0).unwrap();
            let m = simpson(|x| p.g(x), -2.0, 2.0, 2000);
            let l1 = simpson(|x| p.g(x).abs(), -2.0, 2.0, 2000);
            assert!((m - p.g_moment).abs() < 1e-10, "{kind:?} {m}");
            assert!((l1 - p.g_l1).abs() < 1e-8, "{kind:?} {l1}");
            assert!((p.c_g - 0.5 * p.g_moment).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_radius_moment() {
        // R must exceed 1, so approach the R = 1 value from above.
        let p = make_profile(ProfileKind::NonzeroMoment, 1.0 + 1e-12).unwrap();
        assert!((p.g_moment - 32.0 / 35.0).abs() < 1e-10);
        assert!(make_profile(ProfileKind::NonzeroMoment, 1.0).is_err());
    }

    #[test]
    fn antiderivative_differentiates_to_g() {
        for kind in [ProfileKind::NonzeroMoment, ProfileKind::ZeroMoment] {
            let p = make_profile(kind, 2.0).unwrap();
            assert_eq!(p.g_antiderivative(-2.0), 0.0);
            assert!((p.g_antiderivative(5.0) - p.g_moment).abs() < 1e-14);
            for &x in &[-1.7, -0.3, 0.0, 0.9, 1.99] {
                let h = 1e-5;
                let d = (p.g_antiderivative(x + h) - p.g_antiderivative(x - h)) / (2.0 * h);
                assert!((d - p.g(x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn second_derivative_matches_differences() {
        let p = make_profile(ProfileKind::PositiveFZeroG, 2.0).unwrap();
        let h = 1e-4;
        for &x in &[-1.5, -0.2, 0.0, 0.7, 1.9, 2.5] {
            let fd = (p.f(x + h) - 2.0 * p.f(x) + p.f(x - h)) / (h * h);
            assert!((fd - p.f_dd(x)).abs() < 1e-5, "x = {x}");
        }
        assert!((p.f_dd(0.0) + 6.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn free_solution_examples() {
        let p = make_profile(ProfileKind::NonzeroMoment, 2.0).unwrap();
        assert_eq!(free_solution(&p, 0.3, 0.0), p.f(0.3));
        let q = make_profile(ProfileKind::PositiveFZeroG, 2.0).unwrap();
        assert_eq!(free_solution(&q, 0.0, 10.0), 0.0);
        let one = make_profile(ProfileKind::NonzeroMoment, 1.0 + 1e-12).unwrap();
        assert!((free_solution(&one, 0.0, 10.0) - 16.0 / 35.0).abs() < 1e-10);
    }

    #[test]
    fn huygens_examples() {
        let z = make_profile(ProfileKind::ZeroMoment, 2.0).unwrap();
        assert!(free_solution(&z, 0.0, 6.0).abs() <= HUYGENS_TOL);
        assert_eq!(free_solution(&z, 2.0 * 3.0 + 4.0, 3.0), 0.0);
        let rep = huygens_check(&z, 2000, 7).unwrap();
        assert!(rep.passed, "{rep:?}");
        let nz = make_profile(ProfileKind::NonzeroMoment, 2.0).unwrap();
        assert!(matches!(huygens_check(&nz, 10, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn serde_roundtrip() {
        let p = make_profile(ProfileKind::ZeroMoment, 3.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"R\":3.0"));
        let back: DataProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
