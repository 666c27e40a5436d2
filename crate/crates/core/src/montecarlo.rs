//! Deterministic seeded sampling, Monte Carlo risk curves for the
//! Good-Turing estimator, log-log rate fitting, and empirical
//! verification of the singleton-count concentration bound.
//!
//! Determinism contract: every replicate owns the RNG stream
//! `(master_seed, replicate_id)`, replicate outputs are collected in
//! replicate order, and reductions run sequentially over that order, so
//! results are bit-identical for any worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::DiscreteLaw;
use crate::numerics::neumaier_sum;
use crate::occupancy::{singleton_stats, Sample};

/// Default ε grid for the concentration check; straddles the regime
/// where the analytic bound dips below one.
pub const DEFAULT_EPS_GRID: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];

/// Maximum support size for which replicates use a dense counting pass
/// instead of sort-and-scan.
const COUNTING_PASS_MAX_SUPPORT: usize = 1 << 16;

/// Identifier of one reproducible RNG stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    /// Instantiate the stream; the same (seed, index) pair yields the
    /// same draw sequence on every platform.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Walker-Vose alias table: O(J) construction, two RNG words per draw.
#[derive(Debug)]
pub(crate) struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub(crate) fn new(masses: &[f64]) -> Self {
        let n = masses.len();
        let nf = n as f64;
        let mut scaled: Vec<f64> = masses.iter().map(|&p| p * nf).collect();
        let mut prob = vec![1.0f64; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        AliasTable { prob, alias }
    }

    /// Draw a 1-based atom index.
    #[inline]
    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng) -> u32 {
        let bucket = (((rng.next_u64() as u128) * (self.prob.len() as u128)) >> 64) as usize;
        let coin = (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0);
        if coin < self.prob[bucket] {
            bucket as u32 + 1
        } else {
            self.alias[bucket] + 1
        }
    }
}

/// Draw n i.i.d. atoms from the law on the given stream.
pub fn sample_iid(law: &DiscreteLaw, n: u64, stream: &RngStream) -> Sample {
    let table = law.alias_table();
    let mut rng = stream.rng();
    let indices: Vec<u32> = (0..n).map(|_| table.draw(&mut rng)).collect();
    Sample::from_trusted(indices)
}

/// One point of a Monte Carlo risk curve. `replicates` counts the
/// replicates that contributed to the mean; replicates whose missing
/// mass vanished are excluded and tallied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub n: u64,
    pub mean_loss: f64,
    pub stderr: f64,
    pub replicates: u64,
    pub exhausted_support_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub points: Vec<RiskPoint>,
}

/// Log-log least-squares fit of a risk curve against the n^(−α/2) target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub target_slope: f64,
}

/// Empirical exceedance of the singleton-count deviation versus the
/// analytic bound 4·exp(−ε²A_n²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: u64,
    pub eps_grid: Vec<f64>,
    pub empirical_exceedance: Vec<f64>,
    pub analytic_bound: Vec<f64>,
    pub a_n: f64,
}

/// Per-replicate Good-Turing loss, or None when the sample exhausted the
/// whole support (missing mass zero, multiplicative loss undefined).
fn replicate_loss(law: &DiscreteLaw, n: u64, stream: &RngStream) -> Option<f64> {
    let (k1, distinct, seen) = replicate_occupancy(law, n, stream);
    if distinct as usize == law.support_size() {
        return None;
    }
    let missing = 1.0 - seen;
    if missing <= 0.0 {
        return None;
    }
    let gt = k1 as f64 / n as f64;
    Some((gt / missing - 1.0).abs())
}

/// Fused per-replicate occupancy pass: (K_1, K, observed mass).
/// Small supports use a dense counting vector; large supports sort the
/// draws. Both paths accumulate mass in ascending atom order, so the
/// result does not depend on the path or on draw order.
fn replicate_occupancy(law: &DiscreteLaw, n: u64, stream: &RngStream) -> (u64, u64, f64) {
    let table = law.alias_table();
    let masses = law.masses();
    let mut rng = stream.rng();
    if law.support_size() <= COUNTING_PASS_MAX_SUPPORT {
        let mut counts = vec![0u32; law.support_size()];
        for _ in 0..n {
            counts[table.draw(&mut rng) as usize - 1] += 1;
        }
        let mut k1 = 0u64;
        let mut distinct = 0u64;
        let mut seen = 0.0f64;
        let mut comp = 0.0f64;
        for (pos, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if c == 1 {
                k1 += 1;
            }
            distinct += 1;
            let x = masses[pos];
            let t = seen + x;
            if seen.abs() >= x.abs() {
                comp += (seen - t) + x;
            } else {
                comp += (x - t) + seen;
            }
            seen = t;
        }
        (k1, distinct, seen + comp)
    } else {
        let mut draws: Vec<u32> = (0..n).map(|_| table.draw(&mut rng)).collect();
        draws.sort_unstable();
        singleton_stats(&draws, masses)
    }
}

fn check_risk_inputs(ns: &[u64], replicates: u64) -> Result<()> {
    if replicates < 2 {
        return Err(Error::Parameter(format!(
            "risk estimation needs at least 2 replicates, got {replicates}"
        )));
    }
    if ns.is_empty() {
        return Err(Error::Parameter("empty sample-size grid".into()));
    }
    if ns[0] == 0 {
        return Err(Error::Parameter("sample sizes must be at least 1".into()));
    }
    for w in ns.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Parameter(format!(
                "sample sizes must be strictly increasing, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    if ns[0] == 0 {
        return Err(Error::Parameter("sample sizes must be >= 1".into()));
    }
    Ok(())
}

/// Monte Carlo risk curve of the Good-Turing estimator under
/// multiplicative loss, one stream per replicate.
pub fn risk_curve(
    law: &DiscreteLaw,
    ns: &[u64],
    replicates: u64,
    master_seed: u64,
) -> Result<RiskCurve> {
    check_risk_inputs(ns, replicates)?;
    let mut points = Vec::with_capacity(ns.len());
    for (point_idx, &n) in ns.iter().enumerate() {
        let base = point_idx as u64 * replicates;
        let losses: Vec<Option<f64>> = (0..replicates)
            .into_par_iter()
            .map(|rep| replicate_loss(law, n, &RngStream::new(master_seed, base + rep)))
            .collect();
        let kept: Vec<f64> = losses.iter().copied().flatten().collect();
        let exhausted = (replicates as usize - kept.len()) as u64;
        if kept.is_empty() {
            return Err(Error::DegenerateRisk(format!(
                "all {replicates} replicates exhausted the support at n={n}"
            )));
        }
        let m = kept.len() as f64;
        let mean = neumaier_sum(kept.iter().copied()) / m;
        let stderr = if kept.len() >= 2 {
            let ss = neumaier_sum(kept.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (m - 1.0) / m).sqrt()
        } else {
            0.0
        };
        points.push(RiskPoint {
            n,
            mean_loss: mean,
            stderr,
            replicates: kept.len() as u64,
            exhausted_support_count: exhausted,
        });
    }
    Ok(RiskCurve { points })
}

/// Ordinary least squares of y on x with the coefficient of determination.
pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mean_x = neumaier_sum(xs.iter().copied()) / m;
    let mean_y = neumaier_sum(ys.iter().copied()) / m;
    let sxx = neumaier_sum(xs.iter().map(|x| (x - mean_x) * (x - mean_x)));
    let sxy = neumaier_sum(xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)));
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot = neumaier_sum(ys.iter().map(|y| (y - mean_y) * (y - mean_y)));
    let ss_res = neumaier_sum(
        xs.iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            }),
    );
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r2)
}

/// Fit ln(mean_loss) against ln(n); target slope is −α/2.
pub fn fit_rate(curve: &RiskCurve, alpha: f64) -> Result<RateFit> {
    if !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be finite, got {alpha}")));
    }
    let usable: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.mean_loss > 0.0 && p.mean_loss.is_finite())
        .map(|p| ((p.n as f64).ln(), p.mean_loss.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least 3 usable points, got {}",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|&(x, _)| x).collect();
    let ys: Vec<f64> = usable.iter().map(|&(_, y)| y).collect();
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        target_slope: -alpha / 2.0,
    })
}

/// Empirical exceedance frequencies of |K_1/E K_1 − 1| ≥ ε against the
/// analytic bound, with A_n computed from exact occupancy expectations.
pub fn concentration_check(
    law: &DiscreteLaw,
    n: u64,
    replicates: u64,
    eps_grid: &[f64],
    master_seed: u64,
) -> Result<ConcentrationReport> {
    if replicates < 2 {
        return Err(Error::Parameter(format!(
            "concentration check needs at least 2 replicates, got {replicates}"
        )));
    }
    if eps_grid.is_empty() {
        return Err(Error::Parameter("empty epsilon grid".into()));
    }
    for &e in eps_grid {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Parameter(format!("epsilon must be positive, got {e}")));
        }
    }
    let ek1 = crate::laws::expected_k_r(law, n, 1)?;
    if ek1 <= 0.0 {
        return Err(Error::DegenerateRisk(
            "expected singleton count vanishes for this law and n".into(),
        ));
    }
    let ek2 = if n >= 2 {
        crate::laws::expected_k_r(law, n, 2)?
    } else {
        0.0
    };
    let a_n = ek1 / (8.0 * ek1.max(2.0 * ek2) + 4.0 / 3.0).sqrt();
    let singletons: Vec<u64> = (0..replicates)
        .into_par_iter()
        .map(|rep| replicate_occupancy(law, n, &RngStream::new(master_seed, rep)).0)
        .collect();
    let empirical_exceedance: Vec<f64> = eps_grid
        .iter()
        .map(|&eps| {
            let hits = singletons
                .iter()
                .filter(|&&k1| (k1 as f64 / ek1 - 1.0).abs() >= eps)
                .count();
            hits as f64 / replicates as f64
        })
        .collect();
    let analytic_bound: Vec<f64> = eps_grid
        .iter()
        .map(|&eps| 4.0 * (-eps * eps * a_n * a_n).exp())
        .collect();
    Ok(ConcentrationReport {
        n,
        eps_grid: eps_grid.to_vec(),
        empirical_exceedance,
        analytic_bound,
        a_n,
    })
}

/// Risk curve over a geometric law with the truncation level chosen so
/// the discarded tail is below 1e-12; exhibits non-vanishing loss.
pub fn geometric_inconsistency_probe(
    q: f64,
    ns: &[u64],
    replicates: u64,
    master_seed: u64,
) -> Result<RiskCurve> {
    if !q.is_finite() || q <= 0.0 || q >= 1.0 {
        return Err(Error::Parameter(format!("q outside (0,1): {q}")));
    }
    let j_max = ((1e-12f64.ln() / q.ln()).ceil() as usize).max(1) + 1;
    let law = crate::laws::make_geometric(q, j_max)?;
    risk_curve(&law, ns, replicates, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{make_geometric, make_zipf, DiscreteLaw};
    use crate::occupancy::occupancy_profile;
    use approx::assert_relative_eq;

    #[test]
    fn sample_iid_edges() {
        let law = DiscreteLaw::explicit(vec![1.0]).unwrap();
        let s = sample_iid(&law, 5, &RngStream::new(3, 0));
        assert_eq!(s.indices(), &[1, 1, 1, 1, 1]);
        let s = sample_iid(&law, 0, &RngStream::new(3, 0));
        assert_eq!(s.n(), 0);
    }

    #[test]
    fn sample_iid_marginal_frequency() {
        let law = DiscreteLaw::explicit(vec![0.8, 0.2]).unwrap();
        let s = sample_iid(&law, 1_000_000, &RngStream::new(42, 0));
        let ones = s.indices().iter().filter(|&&i| i == 1).count();
        let freq = ones as f64 / 1e6;
        assert!((freq - 0.8).abs() < 0.0015, "freq={freq}");
    }

    #[test]
    fn sample_iid_chi_squared_on_top_atoms() {
        let law = make_zipf(0.9, 1000).unwrap();
        let mut counts = vec![0u64; law.support_size()];
        let n_per_stream = 100_000u64;
        let streams = 10u64;
        for stream in 0..streams {
            let s = sample_iid(&law, n_per_stream, &RngStream::new(2024, stream));
            for &idx in s.indices() {
                counts[idx as usize - 1] += 1;
            }
        }
        let total = (n_per_stream * streams) as f64;
        let stat: f64 = law.masses()[..50]
            .iter()
            .zip(&counts)
            .map(|(&p, &c)| {
                let expect = total * p;
                (c as f64 - expect) * (c as f64 - expect) / expect
            })
            .sum();
        assert!(stat < 86.660815, "chi-squared statistic {stat}");
    }

    #[test]
    fn alias_table_is_deterministic_across_calls() {
        let law = make_zipf(0.5, 1000).unwrap();
        let a = sample_iid(&law, 200, &RngStream::new(9, 7));
        let b = sample_iid(&law, 200, &RngStream::new(9, 7));
        assert_eq!(a, b);
        let c = sample_iid(&law, 200, &RngStream::new(9, 8));
        assert_ne!(a, c);
    }

    #[test]
    fn replicate_paths_agree() {
        let law = make_zipf(0.5, 2000).unwrap();
        let stream = RngStream::new(5, 11);
        let n = 500u64;
        let (k1, distinct, seen) = replicate_occupancy(&law, n, &stream);
        let sample = sample_iid(&law, n, &stream);
        let profile = occupancy_profile(&sample);
        assert_eq!(k1, profile.count_at_level(1));
        assert_eq!(distinct, profile.k_total());
        let missing = crate::laws::missing_mass_exact(&law, &sample).unwrap();
        assert_relative_eq!(1.0 - seen, missing, epsilon = 1e-12);
    }

    #[test]
    fn risk_curve_rejects_bad_grids() {
        let law = make_zipf(0.5, 100).unwrap();
        assert!(matches!(
            risk_curve(&law, &[10, 10], 5, 1),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            risk_curve(&law, &[10, 20], 1, 1),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(risk_curve(&law, &[], 5, 1), Err(Error::Parameter(_))));
        assert!(matches!(
            risk_curve(&law, &[0, 10], 5, 1),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn risk_curve_degenerates_on_single_atom() {
        let law = DiscreteLaw::explicit(vec![1.0]).unwrap();
        assert!(matches!(
            risk_curve(&law, &[4, 8], 10, 1),
            Err(Error::DegenerateRisk(_))
        ));
    }

    #[test]
    fn risk_curve_is_deterministic_across_worker_counts() {
        let law = make_zipf(0.5, 5000).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| risk_curve(&law, &[64, 128, 256], 50, 77).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn fit_rate_synthetic_power_law() {
        let points: Vec<RiskPoint> = [10u64, 100, 1000]
            .iter()
            .map(|&n| RiskPoint {
                n,
                mean_loss: (n as f64).powf(-0.5),
                stderr: 0.0,
                replicates: 2,
                exhausted_support_count: 0,
            })
            .collect();
        let fit = fit_rate(&RiskCurve { points }, 0.5).unwrap();
        assert_relative_eq!(fit.slope, -0.5, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
        assert_eq!(fit.target_slope, -0.25);
    }

    #[test]
    fn fit_rate_flat_curve() {
        let points: Vec<RiskPoint> = [10u64, 100, 1000]
            .iter()
            .map(|&n| RiskPoint {
                n,
                mean_loss: 0.25,
                stderr: 0.0,
                replicates: 2,
                exhausted_support_count: 0,
            })
            .collect();
        let fit = fit_rate(&RiskCurve { points }, 0.5).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn fit_rate_needs_three_points() {
        let points = vec![
            RiskPoint {
                n: 10,
                mean_loss: 0.5,
                stderr: 0.0,
                replicates: 2,
                exhausted_support_count: 0,
            },
            RiskPoint {
                n: 20,
                mean_loss: 0.4,
                stderr: 0.0,
                replicates: 2,
                exhausted_support_count: 0,
            },
        ];
        assert!(matches!(
            fit_rate(&RiskCurve { points }, 0.5),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn mean_missing_mass_is_monotone_in_n() {
        let law = make_zipf(0.5, 2000).unwrap();
        let reps = 400u64;
        let mut stats = Vec::new();
        for (idx, n) in [50u64, 200, 800].into_iter().enumerate() {
            let values: Vec<f64> = (0..reps)
                .map(|rep| {
                    let s = sample_iid(&law, n, &RngStream::new(31, idx as u64 * reps + rep));
                    crate::laws::missing_mass_exact(&law, &s).unwrap()
                })
                .collect();
            let mean = neumaier_sum(values.iter().copied()) / reps as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (reps as f64 - 1.0);
            stats.push((mean, (var / reps as f64).sqrt()));
        }
        for w in stats.windows(2) {
            let (m_prev, se_prev) = w[0];
            let (m_next, se_next) = w[1];
            assert!(m_next <= m_prev + 2.0 * (se_prev + se_next));
        }
    }

    #[test]
    fn concentration_reports_bound_and_frequencies() {
        let law = make_zipf(0.5, 10_000).unwrap();
        let report = concentration_check(&law, 500, 400, &DEFAULT_EPS_GRID, 11).unwrap();
        assert!(report.a_n > 0.0);
        assert_eq!(report.eps_grid.len(), report.empirical_exceedance.len());
        for (freq, bound) in report
            .empirical_exceedance
            .iter()
            .zip(&report.analytic_bound)
        {
            assert!(*freq >= 0.0 && *freq <= 1.0);
            assert!(*bound > 0.0);
        }
        let single = DiscreteLaw::explicit(vec![1.0]).unwrap();
        assert!(matches!(
            concentration_check(&single, 5, 10, &DEFAULT_EPS_GRID, 1),
            Err(Error::DegenerateRisk(_))
        ));
    }

    #[test]
    fn geometric_probe_picks_tight_truncation() {
        let curve = geometric_inconsistency_probe(0.5, &[100, 200], 20, 3).unwrap();
        assert_eq!(curve.points.len(), 2);
        let law = make_geometric(0.5, 41).unwrap();
        assert!(law.residual() < 1e-12);
    }
}
