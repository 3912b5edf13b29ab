use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{estimate_indices, log_grid, simonenko_indices, Growth, IndexGrid, IndexPair, NFunction};
use crate::error::{Error, Result};

/// `G̃(s) = ∫₀ˢ g⁻¹ = s w - G(w)` with `w = g⁻¹(s)`.
pub fn conjugate_value(nf: &NFunction, s: f64) -> Result<f64> {
    let s = s.abs();
    if s == 0.0 {
        return Ok(0.0);
    }
    let w = nf.inverse_derivative(s)?;
    Ok((s * w - nf.value(w)).max(0.0))
}

#[derive(Debug)]
struct Conjugate {
    base: NFunction,
}

impl Growth for Conjugate {
    fn value(&self, s: f64) -> f64 {
        conjugate_value(&self.base, s).unwrap_or(f64::NAN)
    }
    fn derivative(&self, s: f64) -> f64 {
        self.base.inverse_derivative(s).unwrap_or(f64::NAN)
    }
    fn second_derivative(&self, s: f64) -> Option<f64> {
        let w = self.base.inverse_derivative(s).ok()?;
        self.base.second_derivative(w).map(|d| 1.0 / d)
    }
}

/// The complementary N-function `G̃`.
///
/// Requires `g` to be strictly increasing on the sampling grid so that
/// `g⁻¹` is well defined; `g⁻¹` itself is computed by a bracketed search.
pub fn complementary(nf: &NFunction) -> Result<NFunction> {
    let conj = conjugate_unindexed(nf)?;
    Ok(match estimate_indices(&conj, &IndexGrid::default()) {
        Ok(pair) => conj.with_indices(pair),
        Err(_) => conj,
    })
}

/// `complementary` without the index estimate.
pub(crate) fn conjugate_unindexed(nf: &NFunction) -> Result<NFunction> {
    let grid = log_grid(1e-8, 1e8, 40);
    let mut prev = nf.derivative(grid[0]);
    for &t in &grid[1..] {
        let d = nf.derivative(t);
        if !d.is_finite() {
            break;
        }
        if !(d > prev) {
            return Err(Error::NotStrictlyIncreasing { t });
        }
        prev = d;
    }
    Ok(NFunction::new(
        format!("conj({})", nf.label()),
        Arc::new(Conjugate { base: nf.clone() }),
    ))
}

/// `G(t) + G̃(s) - s t`, non-negative by Young's inequality.
pub fn young_gap(nf: &NFunction, s: f64, t: f64) -> Result<f64> {
    Ok(nf.value(t) + conjugate_value(nf, s)? - s * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta2 {
    pub holds: bool,
    /// Sup of `G(2t)/G(t)` over the sampling grid.
    pub constant: f64,
}

/// Sampled Δ₂ check: `sup G(2t)/G(t)` over a log grid on `[1e-8, 1e8]`.
/// Declared to hold when the sup is finite and the ratio is not still
/// growing over the last sampled decade.
pub fn check_delta2(nf: &NFunction) -> Delta2 {
    let per_decade = 40;
    let ratios: Vec<f64> = log_grid(1e-8, 1e8, per_decade)
        .into_iter()
        .map(|t| nf.value(2.0 * t) / nf.value(t))
        .take_while(|r| r.is_finite())
        .collect();
    let constant = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = ratios.len();
    let growing = n > per_decade && ratios[n - 1] > ratios[n - 1 - per_decade] * (1.0 + 1e-3);
    let truncated = n < log_grid(1e-8, 1e8, per_decade).len();
    Delta2 {
        holds: constant.is_finite() && !growing && !truncated,
        constant: if truncated { f64::INFINITY } else { constant },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    MuchSmaller,
    NotMuchSmaller,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEvidence {
    pub lambda: f64,
    pub last_t: f64,
    pub last_ratio: f64,
    /// Tail slope of `ln ratio` against `ln ln t`.
    pub loglog_slope: f64,
    pub verdict: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthComparison {
    pub verdict: Comparison,
    pub evidence: Vec<LambdaEvidence>,
}

pub const DEFAULT_LAMBDAS: [f64; 4] = [0.5, 1.0, 2.0, 10.0];

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn compare_one(a: &NFunction, b: &NFunction, lambda: f64) -> LambdaEvidence {
    let mut ts = Vec::new();
    let mut rs = Vec::new();
    for k in 1..=300 {
        let t = 10f64.powi(k);
        let num = a.value(lambda * t);
        let den = b.value(t);
        if !num.is_finite() || !den.is_finite() || den <= 0.0 {
            break;
        }
        ts.push(t);
        rs.push(num / den);
    }
    let n = rs.len();
    if n < 6 {
        return LambdaEvidence {
            lambda,
            last_t: ts.last().copied().unwrap_or(f64::NAN),
            last_ratio: rs.last().copied().unwrap_or(f64::NAN),
            loglog_slope: f64::NAN,
            verdict: Comparison::Inconclusive,
        };
    }
    let last = rs[n - 1];
    let half = n / 2;
    let decreasing = rs[half..].windows(2).all(|w| w[1] < w[0]);
    let third = n - (n / 3).max(3);
    let xs: Vec<f64> = ts[third..].iter().map(|t| t.ln().ln()).collect();
    let ys: Vec<f64> = rs[third..]
        .iter()
        .map(|r| if *r > 0.0 { r.ln() } else { f64::NEG_INFINITY })
        .collect();
    let loglog_slope = if ys.iter().all(|y| y.is_finite()) {
        slope(&xs, &ys)
    } else {
        f64::NEG_INFINITY
    };
    let back = rs[n - 6];
    let verdict = if decreasing && (last < 1e-6 || loglog_slope <= -0.5) {
        Comparison::MuchSmaller
    } else if (last / back - 1.0).abs() < 1e-3 || last > back {
        Comparison::NotMuchSmaller
    } else {
        Comparison::Inconclusive
    };
    LambdaEvidence {
        lambda,
        last_t: ts[n - 1],
        last_ratio: last,
        loglog_slope,
        verdict,
    }
}

/// Estimate `lim A(λt)/B(t)` as `t → ∞` along `t = 10^k` for each `λ`.
///
/// `MuchSmaller` needs a monotone decaying tail for every λ, either below
/// `1e-6` at the largest representable `t` or decaying at least like a
/// power of `1/ln t`. A ratio that settles at a positive value or grows gives
/// `NotMuchSmaller`; anything else is `Inconclusive`.
pub fn compare_at_infinity(a: &NFunction, b: &NFunction, lambdas: &[f64]) -> GrowthComparison {
    let lambdas = if lambdas.is_empty() {
        &DEFAULT_LAMBDAS[..]
    } else {
        lambdas
    };
    let evidence: Vec<LambdaEvidence> = lambdas.iter().map(|&l| compare_one(a, b, l)).collect();
    let verdict = if evidence
        .iter()
        .any(|e| e.verdict == Comparison::NotMuchSmaller)
    {
        Comparison::NotMuchSmaller
    } else if evidence.iter().all(|e| e.verdict == Comparison::MuchSmaller) {
        Comparison::MuchSmaller
    } else {
        Comparison::Inconclusive
    };
    GrowthComparison { verdict, evidence }
}

/// `(min{t^{p⁺}, t^{p⁻}}, max{t^{p⁺}, t^{p⁻}})`.
pub fn xi_bounds(indices: &IndexPair, t: f64) -> (f64, f64) {
    let a = t.powf(indices.p_plus);
    let b = t.powf(indices.p_minus);
    (a.min(b), a.max(b))
}

#[derive(Debug)]
struct ComposeInverse {
    outer: NFunction,
    inner: NFunction,
}

impl Growth for ComposeInverse {
    fn value(&self, t: f64) -> f64 {
        match self.inner.inverse_value(t) {
            Ok(w) => self.outer.value(w),
            Err(_) => f64::NAN,
        }
    }
    fn derivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self.inner.inverse_value(t) {
            Ok(w) => self.outer.derivative(w) / self.inner.derivative(w),
            Err(_) => f64::NAN,
        }
    }
    fn second_derivative(&self, t: f64) -> Option<f64> {
        let w = self.inner.inverse_value(t).ok()?;
        let (r, h) = (self.outer.derivative(w), self.inner.derivative(w));
        let (dr, dh) = (
            self.outer.second_derivative(w)?,
            self.inner.second_derivative(w)?,
        );
        Some((dr * h - r * dh) / (h * h * h))
    }
}

/// `F = R ∘ H⁻¹`, an N-function when `q⁺(H) < r⁻(R)`.
pub fn compose_inverse(outer: &NFunction, inner: &NFunction) -> Result<NFunction> {
    let q = simonenko_indices(inner)?;
    let r = simonenko_indices(outer)?;
    if !(q.p_plus < r.p_minus) {
        return Err(Error::HypothesisViolated(format!(
            "R∘H⁻¹ needs q+ < r-, got q+ = {} and r- = {}",
            q.p_plus, r.p_minus
        )));
    }
    let f = NFunction::new(
        format!("{}∘inv({})", outer.label(), inner.label()),
        Arc::new(ComposeInverse {
            outer: outer.clone(),
            inner: inner.clone(),
        }),
    );
    f.validate()?;
    let pair = estimate_indices(&f, &IndexGrid::default())?;
    Ok(f.with_indices(pair))
}

/// Critical Hénon exponent `n(α + p)/(n - p)`.
pub fn critical_exponent(p: f64, n: u32, alpha: f64) -> Result<f64> {
    let nf = n as f64;
    if !(p > 1.0) || !(p < nf) {
        return Err(Error::HypothesisViolated(format!(
            "critical exponent needs 1 < p < n, got p = {p}, n = {n}"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must be >= 0")));
    }
    Ok(nf * (alpha + p) / (nf - p))
}

/// `max{t^{a/b}}` over the four ratios of `numer±` to `denom±`.
pub fn psi(numer: &IndexPair, denom: &IndexPair, t: f64) -> f64 {
    [numer.p_plus, numer.p_minus]
        .iter()
        .flat_map(|a| [denom.p_plus, denom.p_minus].map(move |b| t.powf(a / b)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `(ψ₁(t), ψ₂(t))` with ψ₁ over the ratios `q±/r±` and ψ₂ over `q±/p±`.
pub fn psi_functions(q: &IndexPair, r: &IndexPair, p: &IndexPair, t: f64) -> (f64, f64) {
    (psi(q, r, t), psi(q, p, t))
}
