//! High-precision Beta-distribution numerics and numerical verification
//! of the analytic machinery behind the missing-mass results: the density
//! sup bound, the median-gap lower bound, the ψ/κ maximizer bound, and
//! the two-branch impossibility profile for Beta(1,n).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{log_beta_raw, pow_one_minus, reg_inc_beta_raw};

/// Verified left edge of the density sup bound's domain: the bound is
/// asymptotic, and the grid scan validates it from a ≥ 20 upward.
pub const LEMMA1_N0: f64 = 20.0;

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a <= 0.0 || b <= 0.0 {
            return Err(Error::Domain(format!(
                "Beta shape parameters must be positive and finite, got a={a}, b={b}"
            )));
        }
        Ok(BetaParams { a, b })
    }
}

/// ln B(a,b), cancellation-free across the full (0, 10^6] range.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    BetaParams::new(a, b)?;
    Ok(log_beta_raw(a, b))
}

/// Beta density. Endpoints return the finite limit when it exists
/// (zero or positive exponent) and a domain error when the density
/// diverges there, so non-finite values never propagate silently.
pub fn beta_pdf(p: BetaParams, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("density argument outside [0,1]: {x}")));
    }
    let BetaParams { a, b } = p;
    if x == 0.0 || x == 1.0 {
        let exponent = if x == 0.0 { a - 1.0 } else { b - 1.0 };
        return if exponent > 0.0 {
            Ok(0.0)
        } else if exponent == 0.0 {
            Ok((-log_beta_raw(a, b)).exp())
        } else {
            Err(Error::Domain(format!(
                "density diverges at x={x} for a={a}, b={b}"
            )))
        };
    }
    Ok(((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - log_beta_raw(a, b)).exp())
}

/// Regularized incomplete Beta I_x(a,b).
pub fn reg_inc_beta(p: BetaParams, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("CDF argument outside [0,1]: {x}")));
    }
    reg_inc_beta_raw(p.a, p.b, x)
}

/// Median by bisection on the regularized incomplete Beta; the final
/// bracket is narrower than 1e-12.
pub fn beta_median(p: BetaParams) -> Result<f64> {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reg_inc_beta_raw(p.a, p.b, mid)? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mode (a−1)/(a+b−2); interior only, so both shapes must exceed 1.
pub fn beta_mode(p: BetaParams) -> Result<f64> {
    if p.a <= 1.0 || p.b <= 1.0 {
        return Err(Error::Domain(format!(
            "mode formula needs a, b > 1, got a={}, b={}",
            p.a, p.b
        )));
    }
    Ok((p.a - 1.0) / (p.a + p.b - 2.0))
}

/// Second inflection point bound
/// κ(a,b) = mode + √((a−1)(b−1)/(a+b−3)) / (a+b−2); beyond it the
/// density is convex and decreasing.
pub fn kappa(p: BetaParams) -> Result<f64> {
    require_shapes_above(p, 3.0)?;
    let BetaParams { a, b } = p;
    Ok((a - 1.0) / (a + b - 2.0) + ((a - 1.0) * (b - 1.0) / (a + b - 3.0)).sqrt() / (a + b - 2.0))
}

/// Maximize ψ(x) = I_{(1+t)x∧1}(a,b) − I_{(1−t)x}(a,b) over x ≥ 0.
///
/// ψ is strictly unimodal for b > 1 (the likelihood ratio
/// f((1+t)x)/f((1−t)x) is strictly decreasing), so a golden-section
/// search over [0, 1/(1−t)] finds the global maximizer.
pub fn psi_sup(p: BetaParams, t: f64) -> Result<(f64, f64)> {
    require_shapes_above(p, 3.0)?;
    if !t.is_finite() || t <= 0.0 || t >= 0.5 {
        return Err(Error::Domain(format!("width t must lie in (0, 1/2), got {t}")));
    }
    let psi = |x: f64| -> Result<f64> {
        let hi = ((1.0 + t) * x).min(1.0);
        let lo = (1.0 - t) * x;
        Ok(reg_inc_beta_raw(p.a, p.b, hi)? - reg_inc_beta_raw(p.a, p.b, lo)?)
    };
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut lo = 0.0f64;
    let mut hi = 1.0 / (1.0 - t);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = psi(x1)?;
    let mut f2 = psi(x2)?;
    while hi - lo > 1e-13 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = psi(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = psi(x1)?;
        }
    }
    let x_star = 0.5 * (lo + hi);
    Ok((x_star, psi(x_star)?))
}

/// Margin of the density sup bound: 8(a+b)^{3/2} a^{−1/2} b^{−1/2}
/// minus the density at the mode. Positive means the bound holds.
pub fn lemma1_margin(a: f64, b: f64) -> Result<f64> {
    let p = BetaParams::new(a, b)?;
    if !(a >= LEMMA1_N0 && b > a) {
        return Err(Error::Domain(format!(
            "sup-bound margin is verified for b > a >= {LEMMA1_N0}, got a={a}, b={b}"
        )));
    }
    let bound = 8.0 * (a + b).powf(1.5) / (a * b).sqrt();
    let f_mode = beta_pdf(p, beta_mode(p)?)?;
    Ok(bound - f_mode)
}

/// Median gap I_{m_{a,b}}(a,b) − I_{m_{a−1,b}}(a,b) through its closed
/// form m^{a−1}(1−m)^b / ((a−1) B(a−1,b)) with m = m_{a−1,b}.
pub fn lemma2_gap(a: f64, b: f64) -> Result<f64> {
    BetaParams::new(a, b)?;
    if !(a > 3.0 && b > 3.0 && a < b / 2.0) {
        return Err(Error::Domain(format!(
            "median gap needs a, b > 3 and a < b/2, got a={a}, b={b}"
        )));
    }
    let m = beta_median(BetaParams::new(a - 1.0, b)?)?;
    Ok(((a - 1.0) * m.ln() + b * (-m).ln_1p() - (a - 1.0).ln() - log_beta_raw(a - 1.0, b)).exp())
}

/// inf over x ≥ 0 of P(|Z/x − 1| > ε) for Z ~ Beta(1,n), via the
/// closed-form CDF and a dense log grid on both branches of the split
/// at x = 1/(1+ε), plus the analytic branch endpoints.
pub fn impossibility_profile(n: u64, eps: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("profile needs n >= 2, got {n}")));
    }
    if !eps.is_finite() || eps <= 0.0 || eps >= 0.25 {
        return Err(Error::Domain(format!("eps must lie in (0, 1/4), got {eps}")));
    }
    let nf = n as f64;
    let g = |x: f64| {
        pow_one_minus((1.0 + eps) * x, nf) + 1.0 - pow_one_minus((1.0 - eps) * x, nf)
    };
    let split = 1.0 / (1.0 + eps);
    let mut best = 1.0f64;
    let mut scan = |lo: f64, hi: f64| {
        const POINTS: usize = 100_000;
        let ln_lo = lo.ln();
        let step = (hi.ln() - ln_lo) / (POINTS - 1) as f64;
        for i in 0..POINTS {
            let x = (ln_lo + step * i as f64).exp();
            let v = g(x);
            if v < best {
                best = v;
            }
        }
    };
    scan(1e-9, split);
    scan(split, 1.0 / (1.0 - eps));
    let branch_b_infimum = 1.0 - (nf * (2.0 * eps / (1.0 + eps)).ln()).exp();
    Ok(best.min(branch_b_infimum))
}

/// Margin of one lemma verification at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMargin {
    pub a: f64,
    pub b: f64,
    pub margin: f64,
}

/// Grid sweep of a lemma: per-point margins, their minimum, and the
/// count of non-positive ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub grid: String,
    pub margins: Vec<GridMargin>,
    pub min_margin: f64,
    pub violations: u64,
}

impl LemmaReport {
    fn from_margins(grid: String, margins: Vec<GridMargin>) -> Self {
        let min_margin = margins
            .iter()
            .map(|m| m.margin)
            .fold(f64::INFINITY, f64::min);
        let violations = margins.iter().filter(|m| m.margin <= 0.0).count() as u64;
        LemmaReport {
            grid,
            margins,
            min_margin,
            violations,
        }
    }
}

fn geometric_grid(start: f64, stop: f64, factor: f64) -> Vec<f64> {
    let mut values = Vec::new();
    let mut v = start;
    while v <= stop * (1.0 + 1e-12) {
        values.push(v);
        v *= factor;
    }
    values
}

/// Sweep the density sup bound over 20 ≤ a < b ≤ 2000, geometric ×1.3.
pub fn lemma1_report() -> Result<LemmaReport> {
    let grid = geometric_grid(20.0, 2000.0, 1.3);
    let mut margins = Vec::new();
    for (i, &a) in grid.iter().enumerate() {
        for &b in &grid[i + 1..] {
            margins.push(GridMargin {
                a,
                b,
                margin: lemma1_margin(a, b)?,
            });
        }
    }
    Ok(LemmaReport::from_margins(
        "density sup bound on 20 <= a < b <= 2000, geometric step 1.3".into(),
        margins,
    ))
}

/// Sweep √a times the median gap over 3 < a ≤ 10^3, 2a < b ≤ 10^4,
/// geometric ×1.3 in both directions.
pub fn lemma2_report() -> Result<LemmaReport> {
    let mut margins = Vec::new();
    for &a in &geometric_grid(3.5, 1000.0, 1.3) {
        for &b in &geometric_grid(2.05 * a, 10_000.0, 1.3) {
            margins.push(GridMargin {
                a,
                b,
                margin: a.sqrt() * lemma2_gap(a, b)?,
            });
        }
    }
    Ok(LemmaReport::from_margins(
        "sqrt(a) * median gap on 3 < a <= 10^3, 2a < b <= 10^4, geometric step 1.3".into(),
        margins,
    ))
}

fn require_shapes_above(p: BetaParams, floor: f64) -> Result<()> {
    if p.a <= floor || p.b <= floor {
        return Err(Error::Domain(format!(
            "shapes must exceed {floor}, got a={}, b={}",
            p.a, p.b
        )));
    }
    Ok(())
}
