use serde::{Deserialize, Serialize};

use crate::data::{free_solution, DataProfile};
use crate::error::{Error, Result};
use rayon::prelude::*;

use crate::math::{abs_pow, weight_f, weight_w, WeightParams};

/// Two time rows of a uniform lattice x_j = (j - c)h, t_n = nh, aligned with
/// the characteristics x ± t. Nodes farther than t + R + 2h from the origin
/// are held at zero.
#[derive(Debug, Clone)]
pub struct CharGrid {
    pub h: f64,
    pub t_max: f64,
    pub r: f64,
    center: usize,
    row: usize,
    prev: Vec<f64>,
    cur: Vec<f64>,
    scratch: Vec<f64>,
}

/// Rows at least this wide are updated in parallel chunks.
const PAR_MIN_NODES: usize = 16_384;
const PAR_CHUNK: usize = 4_096;

/// Largest row index that fits into [0, t_max].
pub(crate) fn last_row(h: f64, t_max: f64) -> usize {
    (t_max / h + 1e-9).floor() as usize
}

impl CharGrid {
    pub fn new(h: f64, t_max: f64, r: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::params(format!("grid spacing must be positive (got {h})")));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::params(format!("T_max must be positive (got {t_max})")));
        }
        let half = ((t_max + r) / h).ceil() as usize + 2;
        let center = half + 1;
        let len = 2 * center + 1;
        Ok(CharGrid {
            h,
            t_max,
            r,
            center,
            row: 0,
            prev: vec![0.0; len],
            cur: vec![0.0; len],
            scratch: vec![0.0; len],
        })
    }

    pub fn len(&self) -> usize {
        self.cur.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cur.is_empty()
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - self.center as f64) * self.h
    }

    pub fn row_index(&self) -> usize {
        self.row
    }

    pub fn t_now(&self) -> f64 {
        self.row as f64 * self.h
    }

    /// Values at the current time t_now.
    pub fn current(&self) -> &[f64] {
        &self.cur
    }

    /// Values at t_now - h.
    pub fn previous(&self) -> &[f64] {
        &self.prev
    }

    /// Index window [lo, hi] of nodes with |x| ≤ t + R + 2h.
    pub fn active(&self, t: f64) -> (usize, usize) {
        let k = ((t + self.r) / self.h).floor() as usize + 2;
        let k = k.min(self.center - 1);
        (self.center - k, self.center + k)
    }
}

/// Rows 0 and 1: u = εf at t = 0 and a second-order Taylor step using
/// u_tt = f″ + F|u|^p at t = 0.
pub fn first_row(profile: &DataProfile, eps: f64, grid: &mut CharGrid, params: &WeightParams) -> Result<()> {
    start_rows(profile, eps, grid, params, true)
}

/// Start rows for the free wave equation (source term dropped).
pub fn first_row_linear(profile: &DataProfile, eps: f64, grid: &mut CharGrid) -> Result<()> {
    let unit = WeightParams {
        a: 0.0,
        b: 0.0,
        p: 2.0,
        r: grid.r,
    };
    start_rows(profile, eps, grid, &unit, false)
}

fn start_rows(
    profile: &DataProfile,
    eps: f64,
    grid: &mut CharGrid,
    params: &WeightParams,
    nonlinear: bool,
) -> Result<()> {
    if grid.row != 0 {
        return Err(Error::pre("the start rows can only be written on a fresh grid"));
    }
    if grid.h > grid.t_max {
        return Err(Error::pre("the first step already exceeds T_max"));
    }
    let h = grid.h;
    for j in 0..grid.len() {
        let x = grid.x(j);
        let f = eps * profile.f(x);
        let mut source = 0.0;
        if nonlinear && f != 0.0 {
            source = weight_f(x, 0.0, params) * abs_pow(f, params.p);
        }
        grid.prev[j] = f;
        grid.cur[j] = f + h * eps * profile.g(x) + 0.5 * h * h * (eps * profile.f_dd(x) + source);
    }
    grid.row = 1;
    Ok(())
}

/// Advance one row by the diamond rule
/// u(x,t+h) = u(x-h,t) + u(x+h,t) - u(x,t-h) + h² F(x,t) |u(x,t)|^p.
/// With `nonlinear = false` the source term is dropped. Returns false when a
/// non-finite value was produced.
pub fn diamond_step(grid: &mut CharGrid, params: &WeightParams, nonlinear: bool) -> Result<bool> {
    if grid.row == 0 {
        return Err(Error::pre("diamond_step needs the two start rows"));
    }
    let t = grid.t_now();
    let h = grid.h;
    if (grid.row + 1) > last_row(h, grid.t_max) {
        return Err(Error::pre(format!("step past T_max = {}", grid.t_max)));
    }
    let (lo, hi) = grid.active(t + h);
    let h2 = h * h;
    let p = params.p;
    let center = grid.center as f64;
    let (cur, prev) = (&grid.cur, &grid.prev);
    let update = |j: usize| {
        let u = cur[j];
        let mut next = cur[j - 1] + cur[j + 1] - prev[j];
        if nonlinear && u != 0.0 {
            let x = (j as f64 - center) * h;
            next += h2 * weight_f(x, t, params) * abs_pow(u, p);
        }
        next
    };
    // scratch holds the row at t - h, whose support window lies inside [lo, hi].
    let out = &mut grid.scratch[lo..=hi];
    if out.len() >= PAR_MIN_NODES {
        out.par_chunks_mut(PAR_CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = lo + c * PAR_CHUNK;
            for (i, v) in chunk.iter_mut().enumerate() {
                *v = update(base + i);
            }
        });
    } else {
        for (i, v) in out.iter_mut().enumerate() {
            *v = update(lo + i);
        }
    }
    let finite = out.iter().all(|v| v.is_finite());
    std::mem::swap(&mut grid.prev, &mut grid.cur);
    std::mem::swap(&mut grid.cur, &mut grid.scratch);
    grid.row += 1;
    Ok(finite)
}

/// Discrete sup-norm and weighted sup-norm (weight w(|x|,t)) of one row.
pub fn row_norms(xs: impl IntoIterator<Item = f64>, values: &[f64], t: f64, params: &WeightParams) -> (f64, f64) {
    let mut sup = 0.0f64;
    let mut weighted = 0.0f64;
    for (x, &u) in xs.into_iter().zip(values) {
        let v = u.abs();
        if v == 0.0 {
            continue;
        }
        sup = sup.max(v);
        weighted = weighted.max(weight_w(x.abs(), t, params) * v);
    }
    (sup, weighted)
}

/// Norms of the current row of `grid`.
pub fn norms(grid: &CharGrid, params: &WeightParams) -> (f64, f64) {
    let (lo, hi) = grid.active(grid.t_now());
    row_norms(
        (lo..=hi).map(|j| grid.x(j)),
        &grid.current()[lo..=hi],
        grid.t_now(),
        params,
    )
}

/// Every time row of a run, kept for cross-solver comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullGrid {
    pub h: f64,
    /// Index of x = 0 in each row.
    pub center: usize,
    pub rows: Vec<Vec<f64>>,
}

impl FullGrid {
    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - self.center as f64) * self.h
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.h
    }

    /// max |u| over all nodes.
    pub fn sup(&self) -> f64 {
        self.rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// max |u - v| over common nodes. Both grids must share h and shape.
    pub fn sup_distance(&self, other: &FullGrid) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b))
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
    }
}

/// Runs the diamond scheme to `t_end` and keeps every row.
pub fn solve_grid(profile: &DataProfile, eps: f64, params: &WeightParams, h: f64, t_end: f64) -> Result<FullGrid> {
    params.validate()?;
    let mut grid = CharGrid::new(h, t_end, profile.r)?;
    first_row(profile, eps, &mut grid, params)?;
    let mut rows = vec![grid.previous().to_vec(), grid.current().to_vec()];
    let n_last = last_row(h, t_end);
    while grid.row_index() < n_last {
        if !diamond_step(&mut grid, params, true)? {
            return Err(Error::Numeric(format!("non-finite value at t = {}", grid.t_now())));
        }
        rows.push(grid.current().to_vec());
    }
    Ok(FullGrid {
        h,
        center: grid.center,
        rows,
    })
}

/// Max-node error of the scheme with F ≡ 0 against the free solution at
/// `t_end`, for data of unit amplitude.
pub fn free_scheme_error(profile: &DataProfile, h: f64, t_end: f64) -> Result<f64> {
    // The weight is unused by the linear update; any valid parameters do.
    let params = WeightParams::new(0.0, 0.0, 2.0, profile.r)?;
    let mut grid = CharGrid::new(h, t_end, profile.r)?;
    first_row_linear(profile, 1.0, &mut grid)?;
    while grid.row_index() < last_row(h, t_end) {
        diamond_step(&mut grid, &params, false)?;
    }
    let t = grid.t_now();
    Ok((0..grid.len())
        .map(|j| (grid.current()[j] - free_solution(profile, grid.x(j), t)).abs())
        .fold(0.0, f64::max))
}
