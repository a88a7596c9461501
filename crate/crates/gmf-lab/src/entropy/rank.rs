//! Monte Carlo rank of random magnification maps.
//!
//! A linear map that magnifies a d-dimensional feature by a factor n is an
//! (n*d) x d matrix. With i.i.d. Gaussian entries it is full rank with
//! probability 1 whenever n >= 1, while for n < 1 its rank is capped at n*d
//! and can never reach d. The trials measure both readings: the fraction at
//! full rank min(rows, d) and the fraction reaching rank d.

use crate::error::{Error, Result};
use crate::tensor::{Matrix, SplitMix64};

#[derive(Debug, Clone)]
pub struct RankTrialConfig {
    /// Base dimension d.
    pub d: usize,
    /// Magnification factor; rows = floor(n * d).
    pub n: f64,
    /// Number of sampled matrices.
    pub trials: usize,
    pub seed: u64,
}

impl RankTrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("rank trials need d >= 1".into()));
        }
        if !(self.n > 0.0) {
            return Err(Error::Config(format!(
                "magnification must be positive, got {}",
                self.n
            )));
        }
        if self.rows() == 0 {
            return Err(Error::Config(format!(
                "magnification {} of dimension {} leaves zero rows",
                self.n, self.d
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("rank trials need at least one trial".into()));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        (self.n * self.d as f64).floor() as usize
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RankTrialResult {
    pub rows: usize,
    pub cols: usize,
    /// Fraction of trials at rank min(rows, cols).
    pub full_rank_fraction: f64,
    /// Fraction of trials at rank d (impossible when rows < d).
    pub rank_d_fraction: f64,
    pub mean_rank: f64,
}

/// Numerical rank by Gaussian elimination with full pivoting on the largest
/// remaining entry; a pivot below `1e-10 * max|A|` ends the count.
pub fn numerical_rank(a: &Matrix) -> usize {
    let tol = 1e-10 * a.max_abs();
    if a.max_abs() == 0.0 {
        return 0;
    }
    let (rows, cols) = a.shape();
    let mut m = a.clone();
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let mut rank = 0;
    loop {
        // Find the largest entry in the untouched submatrix.
        let mut best = 0.0;
        let mut pivot = None;
        for i in 0..rows {
            if row_used[i] {
                continue;
            }
            for j in 0..cols {
                if col_used[j] {
                    continue;
                }
                let v = m.get(i, j).abs();
                if v > best {
                    best = v;
                    pivot = Some((i, j));
                }
            }
        }
        let (pi, pj) = match pivot {
            Some(p) if best > tol => p,
            _ => return rank,
        };
        rank += 1;
        row_used[pi] = true;
        col_used[pj] = true;
        let pv = m.get(pi, pj);
        for i in 0..rows {
            if row_used[i] {
                continue;
            }
            let factor = m.get(i, pj) / pv;
            if factor == 0.0 {
                continue;
            }
            for j in 0..cols {
                if col_used[j] {
                    continue;
                }
                let v = m.get(i, j) - factor * m.get(pi, j);
                m.set(i, j, v);
            }
        }
    }
}

/// Sample `trials` Gaussian (n*d) x d matrices and tally their ranks.
pub fn rank_trial(cfg: &RankTrialConfig) -> Result<RankTrialResult> {
    cfg.validate()?;
    let rows = cfg.rows();
    let cols = cfg.d;
    let mut rng = SplitMix64::stream(cfg.seed, "rank-trial");
    let mut full = 0usize;
    let mut at_d = 0usize;
    let mut rank_sum = 0usize;
    for _ in 0..cfg.trials {
        let a = Matrix::standard_normal(rows, cols, &mut rng);
        let r = numerical_rank(&a);
        rank_sum += r;
        if r == rows.min(cols) {
            full += 1;
        }
        if r == cfg.d {
            at_d += 1;
        }
    }
    Ok(RankTrialResult {
        rows,
        cols,
        full_rank_fraction: full as f64 / cfg.trials as f64,
        rank_d_fraction: at_d as f64 / cfg.trials as f64,
        mean_rank: rank_sum as f64 / cfg.trials as f64,
    })
}
