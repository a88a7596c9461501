//! Histogram information estimators and the dimension experiments built on
//! top of them.
//!
//! The estimators are deliberately plug-in: bin, count, normalize, sum.
//! Entropies are reported in nats. Mutual information is always computed
//! from one joint table with the marginals obtained by summing that table,
//! which keeps the estimate non-negative by construction and exactly
//! symmetric under exchanging the two variables (bin counts are summed in
//! sorted order, so even the floating-point value is exchange-invariant).

pub mod mapping;
pub mod rank;
pub mod width;

use crate::error::{Error, Result};

/// Fixed-grid histogram over a box in up to a few dimensions.
#[derive(Debug, Clone)]
pub struct HistogramEstimator {
    /// Bin count per dimension.
    bins: Vec<usize>,
    /// Closed value range per dimension; the top edge belongs to the last bin.
    ranges: Vec<(f64, f64)>,
    counts: Vec<u64>,
    total: u64,
}

impl HistogramEstimator {
    pub fn new(bins: Vec<usize>, ranges: Vec<(f64, f64)>) -> Result<Self> {
        if bins.is_empty() || bins.len() != ranges.len() {
            return Err(Error::Config(format!(
                "histogram needs matching bins and ranges, got {} and {}",
                bins.len(),
                ranges.len()
            )));
        }
        if bins.iter().any(|&b| b == 0) {
            return Err(Error::Config("histogram bin counts must be positive".into()));
        }
        for &(lo, hi) in &ranges {
            if !lo.is_finite() || !hi.is_finite() || hi < lo {
                return Err(Error::Config(format!(
                    "histogram range [{lo}, {hi}] is not a finite interval"
                )));
            }
        }
        let cells = bins.iter().product();
        Ok(HistogramEstimator {
            bins,
            ranges,
            counts: vec![0; cells],
            total: 0,
        })
    }

    fn bin_of(&self, dim: usize, v: f64) -> usize {
        let (lo, hi) = self.ranges[dim];
        if hi == lo {
            return 0; // degenerate range: everything shares one bin
        }
        let b = self.bins[dim];
        let raw = ((v - lo) / (hi - lo) * b as f64).floor();
        (raw as isize).clamp(0, b as isize - 1) as usize
    }

    /// Count one point; coordinates outside the range clamp to the edge bins.
    pub fn accumulate(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.bins.len() {
            return Err(Error::Contract(format!(
                "histogram point has {} coordinates, expected {}",
                point.len(),
                self.bins.len()
            )));
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("histogram point must be finite".into()));
        }
        let mut idx = 0;
        for (dim, &v) in point.iter().enumerate() {
            idx = idx * self.bins[dim] + self.bin_of(dim, v);
        }
        self.counts[idx] += 1;
        self.total += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Plug-in Shannon entropy of the bin distribution, in nats. Clamped
    /// into [0, ln(occupied bins)], which the exact quantity also satisfies.
    pub fn entropy_nats(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::Contract("entropy of an empty histogram".into()));
        }
        Ok(entropy_of_counts(&self.counts, self.total))
    }

    /// Marginal counts along one dimension (sums of the joint table).
    pub fn marginal_counts(&self, dim: usize) -> Vec<u64> {
        let mut out = vec![0u64; self.bins[dim]];
        for (flat, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            // Decode the flat index back into per-dimension bins.
            let mut rest = flat;
            let mut coord = 0;
            for d in (0..self.bins.len()).rev() {
                let b = rest % self.bins[d];
                rest /= self.bins[d];
                if d == dim {
                    coord = b;
                }
            }
            out[coord] += c;
        }
        out
    }
}

/// Entropy in nats of a count vector. Counts are summed in sorted order so
/// the result is invariant under any permutation of the table (transposing a
/// joint histogram included).
fn entropy_of_counts(counts: &[u64], total: u64) -> f64 {
    let mut nonzero: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    nonzero.sort_unstable();
    let n = total as f64;
    let h: f64 = nonzero
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.clamp(0.0, (nonzero.len().max(1) as f64).ln())
}

/// Plug-in entropy (nats) of a sample binned uniformly over its own
/// min..max range.
pub fn histogram_entropy(samples: &[f64], bins: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Contract("histogram_entropy of an empty sample".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("histogram_entropy: samples must be finite".into()));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut est = HistogramEstimator::new(vec![bins], vec![(lo, hi)])?;
    for &v in samples {
        est.accumulate(&[v])?;
    }
    est.entropy_nats()
}

/// Plug-in mutual information (nats) between two equally long samples,
/// estimated as `H(X) + H(Y) - H(X, Y)` on one `bins x bins` joint table
/// whose marginals supply the individual entropies.
pub fn mutual_information(xs: &[f64], ys: &[f64], bins: usize) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Contract(format!(
            "mutual_information needs paired samples, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::Contract("mutual_information of an empty sample".into()));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Contract("mutual_information: samples must be finite".into()));
    }
    let range = |s: &[f64]| {
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let mut joint = HistogramEstimator::new(vec![bins, bins], vec![range(xs), range(ys)])?;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        joint.accumulate(&[x, y])?;
    }
    let total = joint.total();
    let hx = entropy_of_counts(&joint.marginal_counts(0), total);
    let hy = entropy_of_counts(&joint.marginal_counts(1), total);
    let hxy = entropy_of_counts(joint.counts(), total);
    Ok((hx + hy - hxy).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::SplitMix64;

    #[test]
    fn identical_samples_have_zero_entropy() {
        let h = histogram_entropy(&[2.5; 1000], 16).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn uniform_bins_reach_ln_bins() {
        // 8000 points filling 8 bins evenly.
        let samples: Vec<f64> = (0..8000).map(|i| (i % 8) as f64 + 0.5).collect();
        let h = histogram_entropy(&samples, 8).unwrap();
        assert!((h - 8.0_f64.ln()).abs() < 0.01, "{h}");
    }

    #[test]
    fn bernoulli_quarter_matches_closed_form() {
        let mut rng = SplitMix64::stream(31, "bernoulli");
        let samples: Vec<f64> = (0..100_000)
            .map(|_| if rng.next_f64() < 0.25 { 1.0 } else { 0.0 })
            .collect();
        let h = histogram_entropy(&samples, 2).unwrap();
        let exact = -(0.25_f64.ln() * 0.25 + 0.75_f64.ln() * 0.75); // 0.5623...
        assert!((h - exact).abs() < 0.01, "{h} vs {exact}");
    }

    #[test]
    fn entropy_stays_within_bounds_on_random_samples() {
        let mut rng = SplitMix64::stream(32, "bounds");
        for trial in 0..200 {
            let n = 1 + rng.below(400);
            let bins = 1 + rng.below(24);
            let samples: Vec<f64> = (0..n).map(|_| rng.normal() * 3.0).collect();
            let h = histogram_entropy(&samples, bins).unwrap();
            assert!(h >= 0.0, "trial {trial}: negative entropy {h}");
            assert!(
                h <= (bins as f64).ln() + 1e-12,
                "trial {trial}: {h} above ln({bins})"
            );
        }
    }

    #[test]
    fn independent_coins_carry_no_information() {
        let mut rng = SplitMix64::stream(33, "coins");
        let xs: Vec<f64> = (0..60_000).map(|_| (rng.next_u64() & 1) as f64).collect();
        let ys: Vec<f64> = (0..60_000).map(|_| (rng.next_u64() & 1) as f64).collect();
        let mi = mutual_information(&xs, &ys, 2).unwrap();
        assert!(mi < 0.001, "independent coins leaked {mi} nats");
    }

    #[test]
    fn identity_pair_recovers_the_marginal_entropy() {
        let mut rng = SplitMix64::stream(34, "identity");
        let xs: Vec<f64> = (0..50_000).map(|_| (rng.below(4)) as f64).collect();
        let mi = mutual_information(&xs, &xs, 4).unwrap();
        let hx = histogram_entropy(&xs, 4).unwrap();
        assert!((mi - hx).abs() < 1e-9, "I(X;X)={mi} vs H(X)={hx}");
    }

    #[test]
    fn correlated_binary_table_matches_hand_value() {
        // Joint [[0.4, 0.1], [0.1, 0.4]]: I = 0.8 ln 1.6 + 0.2 ln 0.4 = 0.19274...
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut push = |x: f64, y: f64, k: usize| {
            for _ in 0..k {
                xs.push(x);
                ys.push(y);
            }
        };
        let n = 100_000;
        push(0.0, 0.0, 2 * n / 5);
        push(0.0, 1.0, n / 10);
        push(1.0, 0.0, n / 10);
        push(1.0, 1.0, 2 * n / 5);
        let mi = mutual_information(&xs, &ys, 2).unwrap();
        let expected = 0.8 * 1.6_f64.ln() + 0.2 * 0.4_f64.ln();
        assert!((mi - expected).abs() < 0.02, "{mi} vs {expected}");
    }

    #[test]
    fn mutual_information_is_exactly_symmetric() {
        let mut rng = SplitMix64::stream(35, "symmetry");
        for _ in 0..20 {
            let n = 500 + rng.below(2000);
            let xs: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let ys: Vec<f64> = xs
                .iter()
                .map(|&x| 0.6 * x + 0.8 * rng.normal())
                .collect();
            let a = mutual_information(&xs, &ys, 12).unwrap();
            let b = mutual_information(&ys, &xs, 12).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
            assert!(a >= 0.0);
        }
    }

    #[test]
    fn empty_and_mismatched_inputs_are_contract_errors() {
        assert!(histogram_entropy(&[], 4).is_err());
        assert!(mutual_information(&[1.0], &[1.0, 2.0], 4).is_err());
        assert!(histogram_entropy(&[f64::NAN, 1.0], 4).is_err());
    }
}
