//! Truncated heavy-tailed discrete laws and their exact functionals:
//! missing mass, occupancy expectations, and the tail counting function.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::montecarlo::AliasTable;
use crate::numerics::{gamma, log_binomial, neumaier_sum, pow_one_minus};
use crate::occupancy::Sample;

/// Law family tag, carrying the construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Zipf { alpha: f64 },
    ZipfLog { alpha: f64, beta_log: f64 },
    Geometric { q: f64 },
    Explicit,
}

/// A normalized discrete law on atoms 1..=J with non-increasing masses.
///
/// `residual` records the relative tail mass of the untruncated series
/// that the truncation at J discarded; it is diagnostic, not subtracted.
/// Laws are immutable after construction and safe to share across threads.
#[derive(Debug)]
pub struct DiscreteLaw {
    family: Family,
    masses: Vec<f64>,
    residual: f64,
    alias: OnceLock<AliasTable>,
}

impl DiscreteLaw {
    /// Law with explicitly given masses; they must be positive and
    /// non-increasing, and are normalized to sum to one.
    pub fn explicit(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Parameter("explicit law needs at least one mass".into()));
        }
        for (i, &m) in masses.iter().enumerate() {
            if !m.is_finite() || m <= 0.0 {
                return Err(Error::Parameter(format!(
                    "explicit mass at position {i} must be positive and finite, got {m}"
                )));
            }
            if i > 0 && m > masses[i - 1] {
                return Err(Error::Parameter(format!(
                    "explicit masses must be non-increasing, violated at position {i}"
                )));
            }
        }
        Ok(Self::from_weights(Family::Explicit, masses, 0.0))
    }

    fn from_weights(family: Family, weights: Vec<f64>, residual: f64) -> Self {
        let total = neumaier_sum(weights.iter().copied());
        let masses = weights.into_iter().map(|w| w / total).collect();
        DiscreteLaw {
            family,
            masses,
            residual,
            alias: OnceLock::new(),
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Masses in atom order; atom j has mass `masses()[j-1]`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Truncation level J.
    pub fn support_size(&self) -> usize {
        self.masses.len()
    }

    /// Relative discarded tail of the untruncated series.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Enforce a truncation tolerance after the fact.
    pub fn check_residual(&self, delta_trunc: f64) -> Result<()> {
        if !(delta_trunc > 0.0) {
            return Err(Error::Parameter(format!(
                "delta_trunc must be positive, got {delta_trunc}"
            )));
        }
        if self.residual >= delta_trunc {
            return Err(Error::Parameter(format!(
                "truncation residual {:.3e} exceeds delta_trunc {:.3e}; raise J",
                self.residual, delta_trunc
            )));
        }
        Ok(())
    }

    pub(crate) fn alias_table(&self) -> &AliasTable {
        self.alias.get_or_init(|| AliasTable::new(&self.masses))
    }
}

/// Zipf law: p_j ∝ j^(−1/α) for j = 1..=J.
pub fn make_zipf(alpha: f64, j_max: usize) -> Result<DiscreteLaw> {
    check_alpha(alpha)?;
    check_support(j_max)?;
    let s = 1.0 / alpha;
    let weights: Vec<f64> = (1..=j_max).map(|j| (j as f64).powf(-s)).collect();
    let z = neumaier_sum(weights.iter().copied());
    let residual = power_tail(s, j_max) / z;
    Ok(DiscreteLaw::from_weights(Family::Zipf { alpha }, weights, residual))
}

/// Zipf law with a slowly varying log correction:
/// p_j ∝ j^(−1/α) (1 + ln j)^beta_log, clamped to a monotone envelope.
pub fn make_zipf_log(alpha: f64, beta_log: f64, j_max: usize) -> Result<DiscreteLaw> {
    check_alpha(alpha)?;
    check_support(j_max)?;
    if !beta_log.is_finite() {
        return Err(Error::Parameter(format!(
            "beta_log must be finite, got {beta_log}"
        )));
    }
    let s = 1.0 / alpha;
    let mut weights: Vec<f64> = (1..=j_max)
        .map(|j| {
            let jf = j as f64;
            jf.powf(-s) * (1.0 + jf.ln()).powf(beta_log)
        })
        .collect();
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::Parameter(format!(
            "log-corrected weights overflow or vanish for alpha={alpha}, beta_log={beta_log}, J={j_max}"
        )));
    }
    for j in 1..weights.len() {
        if weights[j] > weights[j - 1] {
            weights[j] = weights[j - 1];
        }
    }
    let z = neumaier_sum(weights.iter().copied());
    let residual = log_corrected_tail(s, beta_log, j_max) / z;
    Ok(DiscreteLaw::from_weights(
        Family::ZipfLog { alpha, beta_log },
        weights,
        residual,
    ))
}

/// Geometric law: p_j ∝ (1−q) q^(j−1), renormalized over j ≤ J;
/// residual is the untruncated tail mass q^J.
pub fn make_geometric(q: f64, j_max: usize) -> Result<DiscreteLaw> {
    if !q.is_finite() || q <= 0.0 || q >= 1.0 {
        return Err(Error::Parameter(format!("q outside (0,1): {q}")));
    }
    check_support(j_max)?;
    let ln_q = q.ln();
    let weights: Vec<f64> = (1..=j_max)
        .map(|j| (1.0 - q) * ((j - 1) as f64 * ln_q).exp())
        .collect();
    let residual = (j_max as f64 * ln_q).exp();
    Ok(DiscreteLaw::from_weights(Family::Geometric { q }, weights, residual))
}

/// Tail counting function ν̄(x) = #{j : p_j ≥ x}.
pub fn tail_count(law: &DiscreteLaw, x: f64) -> Result<usize> {
    if !(x > 0.0) {
        return Err(Error::Parameter(format!("tail_count needs x > 0, got {x}")));
    }
    Ok(law.masses.iter().filter(|&&p| p >= x).count())
}

/// Exact missing mass of a sample: 1 minus the total mass of observed atoms.
pub fn missing_mass_exact(law: &DiscreteLaw, sample: &Sample) -> Result<f64> {
    let j_max = law.support_size();
    for &idx in sample.indices() {
        if idx == 0 || idx as usize > j_max {
            return Err(Error::Data(format!(
                "sample index {idx} outside support 1..={j_max}"
            )));
        }
    }
    let mut sorted: Vec<u32> = sample.indices().to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() == j_max {
        return Ok(0.0);
    }
    let seen = neumaier_sum(sorted.iter().map(|&idx| law.masses[idx as usize - 1]));
    Ok((1.0 - seen).clamp(0.0, 1.0))
}

/// E[M_n] = Σ_j p_j (1−p_j)^n, summed exactly over the truncated support.
pub fn expected_missing_mass(law: &DiscreteLaw, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let total = neumaier_sum(law.masses.iter().map(|&p| p * pow_one_minus(p, nf)));
    total.clamp(0.0, 1.0)
}

/// E[K_{n,r}] = C(n,r) Σ_j p_j^r (1−p_j)^(n−r), computed in log space.
pub fn expected_k_r(law: &DiscreteLaw, n: u64, r: u64) -> Result<f64> {
    if r == 0 || r > n {
        return Err(Error::Parameter(format!(
            "occupancy level r must satisfy 1 <= r <= n, got r={r}, n={n}"
        )));
    }
    let log_c = log_binomial(n, r);
    let rf = r as f64;
    let tail = (n - r) as f64;
    let total = neumaier_sum(law.masses.iter().map(|&p| {
        let mut ln_term = log_c + rf * p.ln();
        if tail > 0.0 {
            ln_term += tail * (-p).ln_1p();
        }
        ln_term.exp()
    }));
    Ok(total)
}

/// E[K_{n,1}] scaled by its regular-variation prediction
/// αΓ(1−α) ℓ n^α with ℓ = Z_J^(−α); approaches 1 for n large but far
/// below the truncation scale. Defined for the pure zipf family only.
pub fn karlin_ratio(law: &DiscreteLaw, n: u64) -> Result<f64> {
    let alpha = match law.family {
        Family::Zipf { alpha } => alpha,
        ref other => {
            return Err(Error::UnsupportedFamily(format!(
                "karlin_ratio requires the pure zipf family, got {other:?}"
            )))
        }
    };
    if n == 0 {
        return Err(Error::Parameter("karlin_ratio needs n >= 1".into()));
    }
    let ek1 = expected_k_r(law, n, 1)?;
    let ell = law.masses[0].powf(alpha);
    Ok(ek1 / (alpha * gamma(1.0 - alpha) * ell * (n as f64).powf(alpha)))
}

/// Exact Good-Turing bias E[K_{n,1}]/n − E[M_n] = Σ_j p_j² (1−p_j)^(n−1);
/// always within [0, 1/n].
pub fn gt_bias_exact(law: &DiscreteLaw, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("gt_bias_exact needs n >= 1".into()));
    }
    let tail = (n - 1) as f64;
    Ok(neumaier_sum(
        law.masses.iter().map(|&p| p * p * pow_one_minus(p, tail)),
    ))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::Parameter(format!("alpha outside (0,1): {alpha}")));
    }
    Ok(())
}

fn check_support(j_max: usize) -> Result<()> {
    if j_max == 0 {
        return Err(Error::Parameter("truncation level J must be >= 1".into()));
    }
    Ok(())
}

/// Σ_{i>J} i^(−s) for s > 1: direct terms up to max(J, 1000), then a
/// four-term Euler-Maclaurin tail, giving ~1e-14 relative accuracy.
fn power_tail(s: f64, j: usize) -> f64 {
    let anchor = j.max(1000);
    let direct = neumaier_sum(((j + 1)..=anchor).map(|i| (i as f64).powf(-s)));
    let a = anchor as f64;
    let integral = a.powf(1.0 - s) / (s - 1.0);
    let em = integral - 0.5 * a.powf(-s) + s / 12.0 * a.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * a.powf(-s - 3.0);
    direct + em
}

/// Σ_{i>J} i^(−s) (1 + ln i)^β: direct terms to max(J, 1000), then
/// Euler-Maclaurin with the integral evaluated by Simpson's rule under
/// the substitution x = J e^v.
fn log_corrected_tail(s: f64, beta: f64, j: usize) -> f64 {
    let anchor = j.max(1000);
    let f = |x: f64| x.powf(-s) * (1.0 + x.ln()).powf(beta);
    let direct = neumaier_sum(((j + 1)..=anchor).map(|i| f(i as f64)));
    let a = anchor as f64;
    let g = |v: f64| (-(s - 1.0) * v).exp() * (1.0 + a.ln() + v).powf(beta);
    let v_max = 60.0 / (s - 1.0);
    let integral = a.powf(1.0 - s) * simpson(g, 0.0, v_max, 1 << 14);
    let f_prime = a.powf(-s - 1.0) * (1.0 + a.ln()).powf(beta - 1.0) * (beta - s * (1.0 + a.ln()));
    direct + integral - 0.5 * f(a) - f_prime / 12.0
}

fn simpson<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, intervals: usize) -> f64 {
    debug_assert!(intervals % 2 == 0);
    let h = (hi - lo) / intervals as f64;
    let mut acc = g(lo) + g(hi);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(lo + k as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupancy;
    use approx::assert_relative_eq;

    #[test]
    fn zipf_small_masses_match_arithmetic() {
        let law = make_zipf(0.5, 2).unwrap();
        assert_relative_eq!(law.masses()[0], 0.8, max_relative = 1e-14);
        assert_relative_eq!(law.masses()[1], 0.2, max_relative = 1e-14);

        let law = make_zipf(0.5, 3).unwrap();
        let want = [
            0.73469387755102040816,
            0.18367346938775510204,
            0.081632653061224489796,
        ];
        for (got, want) in law.masses().iter().zip(want) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn zipf_mass_ratios_follow_the_power_law() {
        let law = make_zipf(0.4, 5000).unwrap();
        let p1 = law.masses()[0];
        for j in [2usize, 17, 400, 5000] {
            let want = (j as f64).powf(-1.0 / 0.4);
            assert_relative_eq!(law.masses()[j - 1] / p1, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn zipf_residuals_match_tail_oracle() {
        let law = make_zipf(0.5, 2).unwrap();
        let zeta2 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        assert_relative_eq!(law.residual(), (zeta2 - 1.25) / 1.25, max_relative = 1e-12);

        let law = make_zipf(0.5, 10_000).unwrap();
        assert_relative_eq!(law.residual(), 6.079336625992729e-05, max_relative = 1e-9);

        let law = make_zipf(0.7, 1_000_000).unwrap();
        assert_relative_eq!(law.residual(), 2.133053769255017e-03, max_relative = 1e-9);
        assert!(law.residual() < 1e-2);
    }

    #[test]
    fn power_tail_matches_exact_zeta_tail() {
        assert_relative_eq!(
            power_tail(2.0, 10),
            0.09516633568168575,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zipf_log_degenerates_to_zipf_at_beta_zero() {
        let a = make_zipf_log(0.5, 0.0, 2).unwrap();
        assert_relative_eq!(a.masses()[0], 0.8, max_relative = 1e-14);
        assert_relative_eq!(a.masses()[1], 0.2, max_relative = 1e-14);
    }

    #[test]
    fn zipf_log_small_case_matches_arithmetic() {
        let law = make_zipf_log(0.5, 1.0, 2).unwrap();
        assert_relative_eq!(law.masses()[0], 0.70259908502955354, max_relative = 1e-13);
        assert_relative_eq!(law.masses()[1], 0.29740091497044646, max_relative = 1e-13);
    }

    #[test]
    fn zipf_log_masses_are_monotone() {
        for beta in [-1.0, -0.3, 0.4, 2.0] {
            let law = make_zipf_log(0.6, beta, 100_000).unwrap();
            let m = law.masses();
            assert!(m.windows(2).all(|w| w[0] >= w[1]), "beta_log={beta}");
            assert!(m.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn geometric_masses_and_residual() {
        let law = make_geometric(0.5, 2).unwrap();
        assert_relative_eq!(law.masses()[0], 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(law.masses()[1], 1.0 / 3.0, max_relative = 1e-14);

        let law = make_geometric(0.5, 50).unwrap();
        assert_relative_eq!(law.residual(), 2.0f64.powi(-50), max_relative = 1e-12);
        assert_relative_eq!(law.masses()[0], 0.5, max_relative = 1e-12);

        let law = make_geometric(0.9, 500).unwrap();
        let lp: Vec<f64> = law.masses().iter().map(|p| p.ln()).collect();
        for j in 1..lp.len() {
            assert_relative_eq!(lp[j] - lp[j - 1], 0.9f64.ln(), max_relative = 1e-9);
        }
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(matches!(make_zipf(0.0, 10), Err(Error::Parameter(_))));
        assert!(matches!(make_zipf(1.0, 10), Err(Error::Parameter(_))));
        assert!(matches!(make_zipf(-0.2, 10), Err(Error::Parameter(_))));
        assert!(matches!(make_zipf(0.5, 0), Err(Error::Parameter(_))));
        assert!(matches!(make_geometric(1.0, 10), Err(Error::Parameter(_))));
        assert!(matches!(make_geometric(0.0, 10), Err(Error::Parameter(_))));
        assert!(matches!(make_zipf_log(0.5, f64::NAN, 10), Err(Error::Parameter(_))));
        assert!(matches!(
            DiscreteLaw::explicit(vec![0.2, 0.5, 0.3]),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(DiscreteLaw::explicit(vec![]), Err(Error::Parameter(_))));
        assert!(matches!(
            DiscreteLaw::explicit(vec![0.5, 0.0]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn normalization_holds_for_all_families() {
        for law in [
            make_zipf(0.3, 12345).unwrap(),
            make_zipf_log(0.8, -1.5, 4321).unwrap(),
            make_geometric(0.77, 300).unwrap(),
            DiscreteLaw::explicit(vec![0.5, 0.3, 0.2]).unwrap(),
        ] {
            let total = neumaier_sum(law.masses().iter().copied());
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_count_basics() {
        let law = DiscreteLaw::explicit(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(tail_count(&law, 0.25).unwrap(), 2);
        assert_eq!(tail_count(&law, 0.6).unwrap(), 0);
        assert_eq!(tail_count(&law, 1e-9).unwrap(), 3);
        assert!(matches!(tail_count(&law, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn tail_count_regularity_for_zipf() {
        let law = make_zipf(0.5, 10_000).unwrap();
        let p = law.masses();
        assert_eq!(tail_count(&law, p[99]).unwrap(), 100);
        let mut values = Vec::new();
        for j in (20..=1000).step_by(49) {
            let x = (p[j - 1] * p[j]).sqrt();
            values.push(tail_count(&law, x).unwrap() as f64 * x.powf(0.5));
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo < 1.05, "tail-count regularity spread {}", hi / lo);
    }

    #[test]
    fn missing_mass_examples() {
        let law = DiscreteLaw::explicit(vec![0.5, 0.3, 0.2]).unwrap();
        let s = Sample::new(vec![1, 1, 3]).unwrap();
        assert_relative_eq!(missing_mass_exact(&law, &s).unwrap(), 0.3, max_relative = 1e-12);
        let empty = Sample::new(vec![]).unwrap();
        assert_eq!(missing_mass_exact(&law, &empty).unwrap(), 1.0);
        let full = Sample::new(vec![1, 2, 3, 1]).unwrap();
        assert_eq!(missing_mass_exact(&law, &full).unwrap(), 0.0);
        let bad = Sample::new(vec![4]).unwrap();
        assert!(matches!(missing_mass_exact(&law, &bad), Err(Error::Data(_))));
    }

    #[test]
    fn expected_missing_mass_examples() {
        let half = DiscreteLaw::explicit(vec![0.5, 0.5]).unwrap();
        assert_eq!(expected_missing_mass(&half, 0), 1.0);
        assert_relative_eq!(expected_missing_mass(&half, 1), 0.5, max_relative = 1e-14);
        let law = make_zipf(0.5, 2000).unwrap();
        let mut prev = 1.0;
        for n in [1u64, 2, 5, 10, 100, 1000] {
            let m = expected_missing_mass(&law, n);
            assert!(m <= prev && m >= 0.0);
            prev = m;
        }
    }

    #[test]
    fn expected_k_r_examples_and_balance() {
        let half = DiscreteLaw::explicit(vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(expected_k_r(&half, 2, 2).unwrap(), 0.5, max_relative = 1e-13);
        assert_relative_eq!(expected_k_r(&half, 2, 1).unwrap(), 1.0, max_relative = 1e-13);
        assert!(matches!(expected_k_r(&half, 2, 0), Err(Error::Parameter(_))));
        assert!(matches!(expected_k_r(&half, 2, 3), Err(Error::Parameter(_))));

        let law = make_zipf(0.6, 40).unwrap();
        let n = 150u64;
        let total: f64 = (1..=n)
            .map(|r| r as f64 * expected_k_r(&law, n, r).unwrap())
            .sum();
        assert_relative_eq!(total, n as f64, max_relative = 1e-9);
    }

    #[test]
    fn single_atom_edge_cases() {
        let one = DiscreteLaw::explicit(vec![1.0]).unwrap();
        assert_eq!(gt_bias_exact(&one, 5).unwrap(), 0.0);
        assert_relative_eq!(expected_k_r(&one, 5, 5).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(expected_k_r(&one, 5, 1).unwrap(), 0.0);
        assert_eq!(expected_missing_mass(&one, 3), 0.0);
    }

    #[test]
    fn gt_bias_examples() {
        let half = DiscreteLaw::explicit(vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(gt_bias_exact(&half, 2).unwrap(), 0.25, max_relative = 1e-14);
        let law = make_zipf(0.5, 10_000).unwrap();
        let bias = gt_bias_exact(&law, 100).unwrap();
        assert!(bias >= 0.0 && bias <= 0.01);
        assert!(matches!(gt_bias_exact(&law, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn karlin_ratio_rejects_other_families() {
        let geom = make_geometric(0.5, 40).unwrap();
        assert!(matches!(karlin_ratio(&geom, 10), Err(Error::UnsupportedFamily(_))));
        let law = make_zipf(0.5, 10_000).unwrap();
        assert!(karlin_ratio(&law, 100).unwrap() > 0.0);
    }

    #[test]
    fn expected_missing_mass_agrees_with_monte_carlo() {
        use crate::montecarlo::{sample_iid, RngStream};
        let law = make_zipf(0.5, 2000).unwrap();
        let n = 500u64;
        let reps = 4000u64;
        let mut values = Vec::with_capacity(reps as usize);
        for rep in 0..reps {
            let s = sample_iid(&law, n, &RngStream::new(7, rep));
            values.push(missing_mass_exact(&law, &s).unwrap());
        }
        let mean = neumaier_sum(values.iter().copied()) / reps as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (reps as f64 - 1.0);
        let se = (var / reps as f64).sqrt();
        let exact = expected_missing_mass(&law, n);
        assert!(
            (mean - exact).abs() < 4.0 * se,
            "MC mean {mean} vs exact {exact} (se {se})"
        );
        let _ = occupancy::occupancy_profile(&sample_iid(&law, 100, &RngStream::new(1, 0)));
    }
}
