//! Pitman-Yor partition and random-measure simulators, posterior laws for
//! the missing mass, and Kolmogorov-Smirnov checks that the simulated and
//! analytic posteriors agree.

use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::betalab::{reg_inc_beta, BetaParams};
use crate::error::{Error, Result};
use crate::montecarlo::{AliasTable, RngStream};
use crate::occupancy::singleton_stats;

/// Hard cap on stick-breaking length before reporting a truncation failure.
const MAX_STICKS: u64 = 4_000_000;

/// Pitman-Yor parameters: discount alpha in [0,1) and strength eta > -alpha.
/// (0, alpha) is the stable subfamily, (eta, 0) the Dirichlet process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PYParams {
    pub eta: f64,
    pub alpha: f64,
}

impl PYParams {
    pub fn new(eta: f64, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..1.0).contains(&alpha) {
            return Err(Error::Parameter(format!(
                "discount must lie in [0, 1), got {alpha}"
            )));
        }
        if !eta.is_finite() || eta <= -alpha {
            return Err(Error::Parameter(format!(
                "strength must exceed -discount, got eta={eta}, alpha={alpha}"
            )));
        }
        Ok(PYParams { eta, alpha })
    }
}

/// Exchangeable partition of n observations into blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    block_sizes: Vec<u64>,
    n: u64,
}

impl Partition {
    pub fn block_sizes(&self) -> &[u64] {
        &self.block_sizes
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.block_sizes.len() as u64
    }
}

/// Realized stick-breaking weights plus the undistributed leftover mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAtoms {
    pub weights: Vec<f64>,
    pub leftover: f64,
}

/// Outcome of a Kolmogorov-Smirnov comparison at the 5% level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSReport {
    pub statistic: f64,
    pub n_samples: u64,
    pub n_samples_b: Option<u64>,
    pub critical_value_5pct: f64,
    pub pass: bool,
}

/// Posterior draws of (missing mass, block count) with the number of
/// replicates dropped because the truncation remainder got sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDraws {
    pub samples: Vec<(f64, u64)>,
    pub discarded_replicates: u64,
}

/// One row of the block-count scaling table: quantiles of K_n / n^alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnScalingRow {
    pub n: u64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

/// Block-count scaling table across sample sizes for one discount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnScalingTable {
    pub alpha: f64,
    pub replicates: u64,
    pub rows: Vec<KnScalingRow>,
}

fn crp_with_rng(py: PYParams, n: u64, rng: &mut ChaCha8Rng) -> Partition {
    let PYParams { eta, alpha } = py;
    let mut block_sizes: Vec<u64> = Vec::new();
    let mut cust_block: Vec<u32> = Vec::with_capacity(n as usize);
    for i in 1..=n {
        let k = block_sizes.len() as f64;
        let new_block = if i == 1 {
            true
        } else {
            rng.random::<f64>() * (eta + (i - 1) as f64) < eta + k * alpha
        };
        if new_block {
            cust_block.push(block_sizes.len() as u32);
            block_sizes.push(1);
        } else {
            // Propose a uniformly random previous customer's block and
            // accept with (size - alpha)/size; overall this lands on block
            // j with probability proportional to size_j - alpha.
            let block = loop {
                let j = rng.random_range(0..(i - 1) as usize);
                let b = cust_block[j] as usize;
                if alpha == 0.0 {
                    break b;
                }
                let size = block_sizes[b] as f64;
                if rng.random::<f64>() * size < size - alpha {
                    break b;
                }
            };
            cust_block.push(block as u32);
            block_sizes[block] += 1;
        }
    }
    Partition { block_sizes, n }
}

/// Sample a partition of n observations from the Chinese-restaurant
/// process with the given parameters.
pub fn crp_sample(py: PYParams, n: u64, stream: &RngStream) -> Partition {
    crp_with_rng(py, n, &mut stream.rng())
}

fn sticks_with_rng(py: PYParams, trunc_tol: f64, rng: &mut ChaCha8Rng) -> Result<WeightedAtoms> {
    let PYParams { eta, alpha } = py;
    let mut weights = Vec::new();
    let mut leftover = 1.0f64;
    let mut i = 0u64;
    while leftover > trunc_tol {
        i += 1;
        if i > MAX_STICKS {
            return Err(Error::TruncationFailure(format!(
                "leftover {leftover:.3e} still above tolerance {trunc_tol:.3e} after {MAX_STICKS} sticks"
            )));
        }
        let dist = BetaDist::new(1.0 - alpha, eta + i as f64 * alpha).map_err(|e| {
            Error::Parameter(format!("stick fraction law is invalid at stick {i}: {e}"))
        })?;
        let v: f64 = dist.sample(rng);
        weights.push(leftover * v);
        leftover *= 1.0 - v;
    }
    Ok(WeightedAtoms { weights, leftover })
}

/// Break sticks until the leftover mass drops to the tolerance; the
/// k-th fraction is Beta(1-alpha, eta + k alpha).
pub fn stick_breaking(py: PYParams, trunc_tol: f64, stream: &RngStream) -> Result<WeightedAtoms> {
    check_unit_open(trunc_tol, "truncation tolerance")?;
    sticks_with_rng(py, trunc_tol, &mut stream.rng())
}

/// Posterior law of the missing mass given k blocks among n samples:
/// Beta(eta + k alpha, n - k alpha).
pub fn posterior_mm_law(py: PYParams, k: u64, n: u64) -> Result<BetaParams> {
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "block count must satisfy 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    BetaParams::new(
        py.eta + k as f64 * py.alpha,
        n as f64 - k as f64 * py.alpha,
    )
}

/// Dirichlet parameters of the posterior atom weights given a partition,
/// with the unseen-mass component first:
/// (eta + K alpha, n_1 - alpha, ..., n_K - alpha).
pub fn posterior_weights_law(py: PYParams, partition: &Partition) -> Result<Vec<f64>> {
    if partition.k() == 0 {
        return Err(Error::Domain(
            "posterior weights need a non-empty partition".into(),
        ));
    }
    let mut params = Vec::with_capacity(partition.block_sizes.len() + 1);
    params.push(py.eta + partition.k() as f64 * py.alpha);
    for &size in &partition.block_sizes {
        params.push(size as f64 - py.alpha);
    }
    Ok(params)
}

fn joint_replicate(
    py: PYParams,
    n: u64,
    trunc_tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(f64, u64)>> {
    let atoms = sticks_with_rng(py, trunc_tol, rng)?;
    let mut masses = atoms.weights;
    masses.push(atoms.leftover);
    let remainder_index = masses.len() as u32;
    let table = AliasTable::new(&masses);
    let mut indices: Vec<u32> = (0..n).map(|_| table.draw(rng)).collect();
    indices.sort_unstable();
    if *indices.last().expect("n >= 1") == remainder_index {
        return Ok(None);
    }
    let (_, distinct, seen_mass) = singleton_stats(&indices, &masses);
    Ok(Some(((1.0 - seen_mass).clamp(0.0, 1.0), distinct)))
}

/// Simulate (missing mass, block count) pairs by realizing a truncated
/// random measure per replicate and sampling n observations from it.
/// Replicates that sample the truncation remainder are discarded and
/// counted.
pub fn simulate_joint_mm(
    py: PYParams,
    n: u64,
    reps: u64,
    trunc_tol: f64,
    master_seed: u64,
) -> Result<JointDraws> {
    check_positive_counts(n, reps)?;
    check_unit_open(trunc_tol, "truncation tolerance")?;
    let results: Vec<Option<(f64, u64)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::new(master_seed, rep).rng();
            joint_replicate(py, n, trunc_tol, &mut rng)
        })
        .collect::<Result<_>>()?;
    let discarded = results.iter().filter(|r| r.is_none()).count() as u64;
    let samples: Vec<(f64, u64)> = results.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(Error::InsufficientData(
            "every replicate sampled the truncation remainder".into(),
        ));
    }
    Ok(JointDraws {
        samples,
        discarded_replicates: discarded,
    })
}

fn exchangeable_replicate(py: PYParams, n: u64, rng: &mut ChaCha8Rng) -> (f64, u64) {
    let PYParams { eta, alpha } = py;
    let mut discovered: Vec<f64> = Vec::new();
    let mut leftover = 1.0f64;
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut cum = 0.0f64;
        let mut hit = false;
        for &m in &discovered {
            cum += m;
            if u < cum {
                hit = true;
                break;
            }
        }
        if !hit {
            let k = discovered.len() as f64;
            let dist = BetaDist::new(1.0 - alpha, eta + (k + 1.0) * alpha)
                .expect("parameters validated by PYParams");
            let v: f64 = dist.sample(rng);
            discovered.push(leftover * v);
            leftover *= 1.0 - v;
        }
    }
    (leftover, discovered.len() as u64)
}

/// Draw (missing mass, block count) pairs without truncation: atoms are
/// discovered in size-biased order, each new atom takes a
/// Beta(1-alpha, eta + (D+1) alpha) fraction of the leftover mass, and
/// the missing mass is the exact leftover after n observations.
pub fn exchangeable_mm_draws(
    py: PYParams,
    n: u64,
    reps: u64,
    master_seed: u64,
) -> Result<Vec<(f64, u64)>> {
    check_positive_counts(n, reps)?;
    Ok((0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::new(master_seed, rep).rng();
            exchangeable_replicate(py, n, &mut rng)
        })
        .collect())
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF, with the 5%
/// critical value 1.36/sqrt(m).
pub fn ks_statistic<F>(samples: &[f64], cdf: F) -> Result<KSReport>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut xs = checked_sorted(samples, "KS samples")?;
    let m = xs.len() as f64;
    let mut stat = 0.0f64;
    for (i, x) in xs.iter_mut().enumerate() {
        let f = cdf(*x)?;
        if !f.is_finite() {
            return Err(Error::Data(format!("CDF returned a non-finite value at {x}")));
        }
        stat = stat.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
    }
    let critical_value_5pct = 1.36 / m.sqrt();
    Ok(KSReport {
        statistic: stat,
        n_samples: xs.len() as u64,
        n_samples_b: None,
        critical_value_5pct,
        pass: stat < critical_value_5pct,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic with the 5% critical value
/// 1.36 sqrt(1/m_a + 1/m_b).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KSReport> {
    let xs = checked_sorted(a, "first KS sample")?;
    let ys = checked_sorted(b, "second KS sample")?;
    let (ma, mb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut stat = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        stat = stat.max((i as f64 / ma - j as f64 / mb).abs());
    }
    let critical_value_5pct = 1.36 * (1.0 / ma + 1.0 / mb).sqrt();
    Ok(KSReport {
        statistic: stat,
        n_samples: xs.len() as u64,
        n_samples_b: Some(ys.len() as u64),
        critical_value_5pct,
        pass: stat < critical_value_5pct,
    })
}

/// Under the Dirichlet process with unit strength the missing mass is
/// Beta(1, n) regardless of the observed block count; compare simulated
/// draws against that law.
pub fn dp_posterior_check(
    n: u64,
    reps: u64,
    trunc_tol: f64,
    master_seed: u64,
) -> Result<KSReport> {
    let py = PYParams::new(1.0, 0.0)?;
    let draws = simulate_joint_mm(py, n, reps, trunc_tol, master_seed)?;
    let mms: Vec<f64> = draws.samples.iter().map(|&(mm, _)| mm).collect();
    let law = BetaParams::new(1.0, n as f64)?;
    ks_statistic(&mms, |x| reg_inc_beta(law, x.clamp(0.0, 1.0)))
}

/// Compare two routes to the stable-process missing mass at the same n:
/// exact size-biased simulation versus composing the partition law with
/// the conditional Beta(k alpha, n - k alpha). The tolerance argument is
/// accepted for interface uniformity; the simulation route is exact.
pub fn stable_posterior_check(
    alpha: f64,
    n: u64,
    reps: u64,
    trunc_tol: f64,
    master_seed: u64,
) -> Result<KSReport> {
    check_unit_open(trunc_tol, "truncation tolerance")?;
    let py = stable_params(alpha)?;
    let direct: Vec<f64> = exchangeable_mm_draws(py, n, reps, master_seed)?
        .into_iter()
        .map(|(mm, _)| mm)
        .collect();
    let composed: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = RngStream::new(master_seed, reps + rep).rng();
            let partition = crp_with_rng(py, n, &mut rng);
            let law = posterior_mm_law(py, partition.k(), n)?;
            let dist = BetaDist::new(law.a, law.b)
                .map_err(|e| Error::Domain(format!("posterior law is not samplable: {e}")))?;
            Ok(dist.sample(&mut rng))
        })
        .collect::<Result<_>>()?;
    ks_two_sample(&direct, &composed)
}

/// Conditional variant: restrict exact draws to the modal block count
/// and compare them against Beta(k alpha, n - k alpha) directly.
pub fn stable_posterior_check_conditional(
    alpha: f64,
    n: u64,
    reps: u64,
    master_seed: u64,
) -> Result<KSReport> {
    let py = stable_params(alpha)?;
    let draws = exchangeable_mm_draws(py, n, reps, master_seed)?;
    let mut counts: std::collections::BTreeMap<u64, u64> = std::collections::BTreeMap::new();
    for &(_, k) in &draws {
        *counts.entry(k).or_insert(0) += 1;
    }
    let (&modal_k, _) = counts
        .iter()
        .max_by_key(|&(_, &c)| c)
        .expect("reps >= 1 guarantees draws");
    let conditioned: Vec<f64> = draws
        .iter()
        .filter(|&&(_, k)| k == modal_k)
        .map(|&(mm, _)| mm)
        .collect();
    if conditioned.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "only {} draws at the modal block count {modal_k}",
            conditioned.len()
        )));
    }
    let law = posterior_mm_law(py, modal_k, n)?;
    ks_statistic(&conditioned, |x| reg_inc_beta(law, x.clamp(0.0, 1.0)))
}

/// Quantiles of K_n / n^alpha across sample sizes under the stable
/// subfamily; the rows converge when the block count grows like n^alpha.
pub fn kn_scaling(
    alpha: f64,
    ns: &[u64],
    reps: u64,
    master_seed: u64,
) -> Result<KnScalingTable> {
    let py = stable_params(alpha)?;
    if reps < 2 {
        return Err(Error::Parameter(format!(
            "quantiles need at least 2 replicates, got {reps}"
        )));
    }
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::Parameter(
            "sample sizes must be non-empty, positive, and strictly increasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for (point_idx, &n) in ns.iter().enumerate() {
        let scale = (n as f64).powf(alpha);
        let mut ratios: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let stream = RngStream::new(master_seed, point_idx as u64 * reps + rep);
                crp_sample(py, n, &stream).k() as f64 / scale
            })
            .collect();
        ratios.sort_unstable_by(f64::total_cmp);
        let q = |p: f64| ratios[((p * ratios.len() as f64).ceil() as usize).max(1) - 1];
        rows.push(KnScalingRow {
            n,
            q05: q(0.05),
            q25: q(0.25),
            q50: q(0.50),
            q75: q(0.75),
            q95: q(0.95),
        });
    }
    Ok(KnScalingTable {
        alpha,
        replicates: reps,
        rows,
    })
}

fn stable_params(alpha: f64) -> Result<PYParams> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::Parameter(format!(
            "stable discount must lie in (0, 1), got {alpha}"
        )));
    }
    PYParams::new(0.0, alpha)
}

fn check_positive_counts(n: u64, reps: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    if reps == 0 {
        return Err(Error::Parameter("replicate count must be at least 1".into()));
    }
    Ok(())
}

fn check_unit_open(x: f64, what: &str) -> Result<()> {
    if !x.is_finite() || x <= 0.0 || x >= 1.0 {
        return Err(Error::Parameter(format!("{what} must lie in (0, 1), got {x}")));
    }
    Ok(())
}

fn checked_sorted(samples: &[f64], what: &str) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Data(format!("{what} are empty")));
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::Data(format!("{what} contain a non-finite value {bad}")));
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    Ok(xs)
}
