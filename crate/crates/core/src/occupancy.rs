//! Sample occupancy statistics, the Good-Turing estimator, and the
//! multiplicative loss.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// An i.i.d. sample of atom indices (1-based; atom identities carry no
/// meaning beyond equality).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    indices: Vec<u32>,
}

impl Sample {
    pub fn new(indices: Vec<u32>) -> Result<Self> {
        if let Some(pos) = indices.iter().position(|&i| i == 0) {
            return Err(Error::Data(format!(
                "sample indices are 1-based; found 0 at position {pos}"
            )));
        }
        Ok(Sample { indices })
    }

    /// Construct from indices already known to be 1-based.
    pub(crate) fn from_trusted(indices: Vec<u32>) -> Self {
        Sample { indices }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn n(&self) -> usize {
        self.indices.len()
    }
}

/// Occupancy summary of a sample: multiplicities Y_j, level counts K_r,
/// and the number of distinct values K.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyProfile {
    n: usize,
    counts_by_level: BTreeMap<u64, u64>,
    k_total: u64,
    multiplicities: BTreeMap<u32, u64>,
}

impl OccupancyProfile {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sparse map r → K_r (number of atoms observed exactly r times).
    pub fn counts_by_level(&self) -> &BTreeMap<u64, u64> {
        &self.counts_by_level
    }

    /// Number of distinct atoms observed, K.
    pub fn k_total(&self) -> u64 {
        self.k_total
    }

    /// Sparse map atom → multiplicity Y_j (observed atoms only).
    pub fn multiplicities(&self) -> &BTreeMap<u32, u64> {
        &self.multiplicities
    }

    /// K_r for a single level (0 when absent).
    pub fn count_at_level(&self, r: u64) -> u64 {
        self.counts_by_level.get(&r).copied().unwrap_or(0)
    }
}

/// Compute the full occupancy profile of a sample; permutation-invariant.
pub fn occupancy_profile(sample: &Sample) -> OccupancyProfile {
    let mut sorted = sample.indices.clone();
    sorted.sort_unstable();
    let mut counts_by_level = BTreeMap::new();
    let mut multiplicities = BTreeMap::new();
    let mut k_total = 0u64;
    let mut pos = 0usize;
    while pos < sorted.len() {
        let atom = sorted[pos];
        let mut end = pos + 1;
        while end < sorted.len() && sorted[end] == atom {
            end += 1;
        }
        let run = (end - pos) as u64;
        *counts_by_level.entry(run).or_insert(0) += 1;
        multiplicities.insert(atom, run);
        k_total += 1;
        pos = end;
    }
    OccupancyProfile {
        n: sample.indices.len(),
        counts_by_level,
        k_total,
        multiplicities,
    }
}

/// Good-Turing estimator of the missing mass: K_1/n.
pub fn good_turing(profile: &OccupancyProfile) -> Result<f64> {
    if profile.n == 0 {
        return Err(Error::UndefinedEstimator(
            "Good-Turing is undefined for an empty sample".into(),
        ));
    }
    Ok(profile.count_at_level(1) as f64 / profile.n as f64)
}

/// Multiplicative loss |estimate/truth − 1|.
///
/// A vanished truth is an error, not +∞: the simulation pipelines filter
/// and count those events instead of propagating non-finite values.
pub fn mult_loss(estimate: f64, truth: f64) -> Result<f64> {
    if !estimate.is_finite() || estimate < 0.0 {
        return Err(Error::Parameter(format!(
            "estimate must be finite and nonnegative, got {estimate}"
        )));
    }
    if !truth.is_finite() || truth <= 0.0 {
        return Err(Error::DivisionDomain(format!(
            "multiplicative loss undefined for truth {truth}"
        )));
    }
    Ok((estimate / truth - 1.0).abs())
}

/// One fused pass over a sorted sample: singleton count, distinct count,
/// and the observed mass under `masses` (0-based over atoms 1..=J).
/// Shared by the risk pipelines so they avoid building sparse profiles.
pub(crate) fn singleton_stats(sorted: &[u32], masses: &[f64]) -> (u64, u64, f64) {
    let mut k1 = 0u64;
    let mut distinct = 0u64;
    let mut seen_sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut pos = 0usize;
    while pos < sorted.len() {
        let atom = sorted[pos];
        let mut end = pos + 1;
        while end < sorted.len() && sorted[end] == atom {
            end += 1;
        }
        if end - pos == 1 {
            k1 += 1;
        }
        distinct += 1;
        let x = masses[atom as usize - 1];
        let t = seen_sum + x;
        if seen_sum.abs() >= x.abs() {
            comp += (seen_sum - t) + x;
        } else {
            comp += (x - t) + seen_sum;
        }
        seen_sum = t;
        pos = end;
    }
    (k1, distinct, seen_sum + comp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile_of(indices: Vec<u32>) -> OccupancyProfile {
        occupancy_profile(&Sample::new(indices).unwrap())
    }

    #[test]
    fn profile_examples() {
        let p = profile_of(vec![1, 1, 2, 3]);
        assert_eq!(p.k_total(), 3);
        assert_eq!(p.count_at_level(1), 2);
        assert_eq!(p.count_at_level(2), 1);

        let p = profile_of(vec![1, 2, 3, 4, 5]);
        assert_eq!(p.k_total(), 5);
        assert_eq!(p.count_at_level(1), 5);

        let p = profile_of(vec![7, 7, 7]);
        assert_eq!(p.k_total(), 1);
        assert_eq!(p.count_at_level(3), 1);
    }

    #[test]
    fn profile_invariants_hold() {
        let p = profile_of(vec![9, 2, 9, 2, 9, 5, 11, 11, 3]);
        let sum_k: u64 = p.counts_by_level().values().sum();
        assert_eq!(sum_k, p.k_total());
        let sum_rk: u64 = p.counts_by_level().iter().map(|(r, k)| r * k).sum();
        assert_eq!(sum_rk as usize, p.n());
        let sum_y: u64 = p.multiplicities().values().sum();
        assert_eq!(sum_y as usize, p.n());
        assert_eq!(p.multiplicities().len() as u64, p.k_total());
    }

    #[test]
    fn profile_is_permutation_invariant() {
        let a = profile_of(vec![4, 1, 4, 2, 2, 2]);
        let b = profile_of(vec![2, 2, 4, 1, 2, 4]);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_sample_profile() {
        let p = profile_of(vec![]);
        assert_eq!(p.n(), 0);
        assert_eq!(p.k_total(), 0);
        assert!(p.counts_by_level().is_empty());
    }

    #[test]
    fn sample_rejects_zero_index() {
        assert!(matches!(Sample::new(vec![1, 0, 2]), Err(Error::Data(_))));
    }

    #[test]
    fn good_turing_examples() {
        assert_eq!(good_turing(&profile_of(vec![1, 1, 2, 3])).unwrap(), 0.5);
        assert_eq!(good_turing(&profile_of(vec![1, 2, 3, 4, 5])).unwrap(), 1.0);
        assert_eq!(good_turing(&profile_of(vec![6, 6, 6, 6, 6])).unwrap(), 0.0);
        assert!(matches!(
            good_turing(&profile_of(vec![])),
            Err(Error::UndefinedEstimator(_))
        ));
    }

    #[test]
    fn mult_loss_examples() {
        assert_eq!(mult_loss(1.0, 2.0).unwrap(), 0.5);
        assert_eq!(mult_loss(0.37, 0.37).unwrap(), 0.0);
        assert_eq!(mult_loss(0.0, 0.5).unwrap(), 1.0);
        assert!(matches!(mult_loss(1.0, 0.0), Err(Error::DivisionDomain(_))));
        assert!(matches!(mult_loss(-0.1, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn singleton_stats_matches_profile() {
        let masses = vec![0.4, 0.3, 0.2, 0.1];
        let sample = Sample::new(vec![1, 3, 3, 2]).unwrap();
        let mut sorted = sample.indices().to_vec();
        sorted.sort_unstable();
        let (k1, distinct, seen) = singleton_stats(&sorted, &masses);
        assert_eq!(k1, 2);
        assert_eq!(distinct, 3);
        assert!((seen - 0.9).abs() < 1e-15);
    }
}
