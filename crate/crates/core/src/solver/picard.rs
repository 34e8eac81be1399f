use serde::{Deserialize, Serialize};

use super::grid::{last_row, FullGrid};
use crate::data::{free_solution, DataProfile};
use crate::error::{Error, Result};
use crate::math::{abs_pow, weight_f, WeightParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PicardOutcome {
    Converged {
        grid: FullGrid,
        iterations: usize,
        last_change: f64,
    },
    /// sup |u| exceeded 1/tol.
    Diverged { iterations: usize },
    /// Iteration cap hit without either verdict.
    Inconclusive { iterations: usize, last_change: f64 },
}

impl PicardOutcome {
    pub fn grid(&self) -> Option<&FullGrid> {
        match self {
            PicardOutcome::Converged { grid, .. } => Some(grid),
            _ => None,
        }
    }
}

/// Fixed-point iteration u ← εu⁰ + L_h(|u|^p) on the same lattice as the
/// diamond scheme, where L_h applies the trapezoid rule in y and in s to
/// ½∫₀ᵗ∫_{x-t+s}^{x+t-s} F(y,s) V(y,s) dy ds. Backward-cone edges fall on
/// lattice nodes, so each inner integral is a prefix-sum difference.
#[allow(clippy::needless_range_loop)]
pub fn picard_oracle(
    profile: &DataProfile,
    eps: f64,
    params: &WeightParams,
    h: f64,
    t_end: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PicardOutcome> {
    params.validate()?;
    if !(h > 0.0) || !(t_end > 0.0) || h > t_end {
        return Err(Error::params(format!("need 0 < h ≤ T (h = {h}, T = {t_end})")));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::params("tolerance and iteration cap must be positive"));
    }
    let n_rows = last_row(h, t_end) + 1;
    let center = ((t_end + profile.r) / h).ceil() as usize + 3;
    let width = 2 * center + 1;
    let x = |j: usize| (j as f64 - center as f64) * h;

    let free: Vec<Vec<f64>> = (0..n_rows)
        .map(|n| {
            (0..width)
                .map(|j| eps * free_solution(profile, x(j), n as f64 * h))
                .collect()
        })
        .collect();
    let weights: Vec<Vec<f64>> = (0..n_rows)
        .map(|n| (0..width).map(|j| weight_f(x(j), n as f64 * h, params)).collect())
        .collect();

    let mut u = free.clone();
    let mut prefix = vec![vec![0.0; width + 1]; n_rows];
    let mut source = vec![vec![0.0; width]; n_rows];
    let mut last_change = f64::INFINITY;
    for iter in 1..=max_iter {
        for m in 0..n_rows {
            for j in 0..width {
                source[m][j] = weights[m][j] * abs_pow(u[m][j], params.p);
            }
            let pre = &mut prefix[m];
            for j in 0..width {
                pre[j + 1] = pre[j] + source[m][j];
            }
        }
        let mut next = free.clone();
        let mut change = 0.0f64;
        let mut sup = 0.0f64;
        for n in 1..n_rows {
            for j in 0..width {
                let mut acc = 0.0;
                for m in 0..n {
                    let k = n - m;
                    let lo = j.saturating_sub(k);
                    let hi = (j + k).min(width - 1);
                    let mut inner = prefix[m][hi + 1] - prefix[m][lo];
                    if j >= k {
                        inner -= 0.5 * source[m][j - k];
                    }
                    if j + k < width {
                        inner -= 0.5 * source[m][j + k];
                    }
                    let ws = if m == 0 { 0.5 } else { 1.0 };
                    acc += ws * inner;
                }
                // The s = t end of the outer rule has a zero-length inner interval.
                next[n][j] += 0.5 * h * h * acc;
            }
        }
        for n in 0..n_rows {
            for j in 0..width {
                change = change.max((next[n][j] - u[n][j]).abs());
                sup = sup.max(next[n][j].abs());
            }
        }
        u = next;
        last_change = change;
        if !sup.is_finite() || sup > 1.0 / tol {
            return Ok(PicardOutcome::Diverged { iterations: iter });
        }
        if change <= tol {
            return Ok(PicardOutcome::Converged {
                grid: FullGrid { h, center, rows: u },
                iterations: iter,
                last_change,
            });
        }
    }
    Ok(PicardOutcome::Inconclusive {
        iterations: max_iter,
        last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_profile, ProfileKind};

    #[test]
    fn zero_data_is_immediate_fixed_point() {
        let p = make_profile(ProfileKind::NonzeroMoment, 2.0).unwrap();
        let params = WeightParams::new(0.0, 0.0, 2.0, 2.0).unwrap();
        match picard_oracle(&p, 0.0, &params, 0.25, 4.0, 1e-12, 10).unwrap() {
            PicardOutcome::Converged { grid, iterations, .. } => {
                assert_eq!(iterations, 1);
                assert_eq!(grid.sup(), 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strong_decay_leaves_free_solution() {
        let p = make_profile(ProfileKind::NonzeroMoment, 2.0).unwrap();
        let params = WeightParams::new(10.0, 10.0, 2.0, 2.0).unwrap();
        let out = picard_oracle(&p, 0.1, &params, 0.25, 4.0, 1e-12, 50).unwrap();
        let grid = out.grid().unwrap();
        let mut dev = 0.0f64;
        for (n, row) in grid.rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                dev = dev.max((v - 0.1 * free_solution(&p, grid.x(j), grid.t(n))).abs());
            }
        }
        assert!(dev < 1e-4, "dev {dev}");
    }

    #[test]
    fn large_data_diverges() {
        let p = make_profile(ProfileKind::NonzeroMoment, 2.0).unwrap();
        let params = WeightParams::new(-1.0, -1.0, 2.0, 2.0).unwrap();
        let out = picard_oracle(&p, 5.0, &params, 0.25, 8.0, 1e-8, 200).unwrap();
        assert!(matches!(out, PicardOutcome::Diverged { .. }), "{out:?}");
    }

    #[test]
    fn iteration_cap_is_inconclusive() {
        let p = make_profile(ProfileKind::NonzeroMoment, 2.0).unwrap();
        let params = WeightParams::new(0.0, 0.0, 2.0, 2.0).unwrap();
        let out = picard_oracle(&p, 0.5, &params, 0.25, 4.0, 1e-14, 1).unwrap();
        assert!(
            matches!(out, PicardOutcome::Inconclusive { iterations: 1, .. }),
            "{out:?}"
        );
    }
}
