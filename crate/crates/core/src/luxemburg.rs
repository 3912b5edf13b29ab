//! Modulars and Luxemburg norms of radial functions over weighted 1-D
//! measures `scale * s^k ds` on `(a, b)`, and the Strauss envelope
//! `‖s^{1-n}‖` in `L^{G̃}((r, 1), s^{n-1} ds)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nfunction::{conjugate_unindexed, NFunction};
use crate::quadrature::{gl10, integrate, QuadratureOptions};
use crate::roots::bracketed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMeasure {
    pub a: f64,
    pub b: f64,
    pub weight_power: f64,
    /// Constant factor, e.g. the sphere area when integrating over a ball.
    pub scale: f64,
}

impl WeightedMeasure {
    pub fn new(a: f64, b: f64, weight_power: f64) -> Result<Self> {
        if !(a >= 0.0) || !(b > a) || !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "measure interval needs 0 <= a < b < inf, got ({a}, {b})"
            )));
        }
        if !(weight_power > -1.0 || a > 0.0) {
            return Err(Error::InvalidInput(format!(
                "weight s^{weight_power} is not integrable at 0"
            )));
        }
        Ok(Self {
            a,
            b,
            weight_power,
            scale: 1.0,
        })
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn density(&self, s: f64) -> f64 {
        if self.weight_power == 0.0 {
            self.scale
        } else {
            self.scale * s.powf(self.weight_power)
        }
    }

    fn singular(&self) -> bool {
        self.a == 0.0 && self.weight_power < 0.0
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct SampledFunction {
    evaluator: Evaluator,
    /// Declared power behavior `s^β` at the left endpoint.
    pub singular_exponent: Option<f64>,
    /// Interior points where the function may have kinks.
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("singular_exponent", &self.singular_exponent)
            .field("breakpoints", &self.breakpoints.len())
            .finish()
    }
}

impl SampledFunction {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            evaluator: Arc::new(f),
            singular_exponent: None,
            breakpoints: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    pub fn singular(mut self, exponent: f64) -> Self {
        self.singular_exponent = Some(exponent);
        self
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.evaluator)(s)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.evaluator.clone();
        Self {
            evaluator: Arc::new(move |s| c * inner(s)),
            singular_exponent: self.singular_exponent,
            breakpoints: self.breakpoints.clone(),
        }
    }
}

fn opts() -> QuadratureOptions {
    QuadratureOptions {
        rel_tol: 1e-12,
        ..QuadratureOptions::default()
    }
}

/// `∫ f dμ`.
pub fn integrate_measure(f: &SampledFunction, mu: &WeightedMeasure) -> Result<f64> {
    let graded = mu.singular() || (mu.a == 0.0 && f.singular_exponent.is_some());
    let r = integrate(
        |s| f.eval(s) * mu.density(s),
        mu.a,
        mu.b,
        &f.breakpoints,
        graded,
        &opts(),
    )?;
    Ok(r.value)
}

/// `∫ G(|f|) dμ`.
pub fn modular(nf: &NFunction, f: &SampledFunction, mu: &WeightedMeasure) -> Result<f64> {
    modular_scaled(nf, f, mu, 1.0)
}

fn modular_scaled(
    nf: &NFunction,
    f: &SampledFunction,
    mu: &WeightedMeasure,
    inv_lambda: f64,
) -> Result<f64> {
    let g = SampledFunction {
        evaluator: {
            let nf = nf.clone();
            let inner = f.evaluator.clone();
            Arc::new(move |s| nf.value(inner(s) * inv_lambda))
        },
        singular_exponent: f.singular_exponent,
        breakpoints: f.breakpoints.clone(),
    };
    integrate_measure(&g, mu)
}

const LAMBDA_EXP: f64 = 40.0;
const MAX_EXPANSIONS: usize = 24;

/// Solve `M(λ) = 1` for a decreasing modular `M`, working in `x = ln λ`.
/// `Ok(None)` from the modular means it is infinite at that scale.
pub(crate) fn solve_norm<M: Fn(f64) -> Result<Option<f64>>>(modular_at: M) -> Result<f64> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let phi = |x: f64| -> f64 {
        match modular_at(x.exp()) {
            Ok(Some(m)) if m > 0.0 => -m.ln(),
            Ok(Some(_)) => f64::INFINITY,
            Ok(None) => f64::NEG_INFINITY,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let step = LAMBDA_EXP * std::f64::consts::LN_2;
    let mut lo = -step;
    let mut flo = phi(lo);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    if flo == f64::INFINITY {
        return Ok(0.0);
    }
    let mut hi = step;
    let mut fhi = phi(hi);
    let mut k = 0;
    while flo > 0.0 && k < MAX_EXPANSIONS {
        hi = lo;
        fhi = flo;
        lo -= step;
        flo = phi(lo);
        k += 1;
        if flo == f64::INFINITY {
            return Ok(0.0);
        }
    }
    let mut infinite_above = 0;
    while !(fhi > 0.0) && k < MAX_EXPANSIONS && failure.borrow().is_none() {
        // divergence at 2^40 and 2^80 is taken as divergence at every scale;
        // huge λ would otherwise underflow the integrand to a spurious finite value
        if fhi == f64::NEG_INFINITY {
            infinite_above += 1;
            if infinite_above >= 2 {
                return Err(Error::NonNormable);
            }
        }
        lo = hi;
        flo = fhi;
        hi += step;
        fhi = phi(hi);
        k += 1;
    }
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    if !(flo <= 0.0 && fhi > 0.0) {
        return Err(Error::NonNormable);
    }
    let x = bracketed(&phi, lo, hi, flo, fhi, 1e-11, 200);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    Ok(x.exp())
}

fn infinite_as_none(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) | Err(Error::Divergent(_)) | Err(Error::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `inf{λ > 0 : ∫ G(|f|/λ) dμ ≤ 1}`, to about 1e-11 relative in `λ`.
///
/// The bracket starts at `[2^-40, 2^40]` and is widened on demand; the norm is
/// 0 exactly when the modular already vanishes at `λ = 2^-40`.
pub fn luxemburg_norm(nf: &NFunction, f: &SampledFunction, mu: &WeightedMeasure) -> Result<f64> {
    solve_norm(|lambda| infinite_as_none(modular_scaled(nf, f, mu, 1.0 / lambda)))
}

/// Fixed composite Gauss–Legendre rule on `(r, 1)` with log-spaced panels.
fn envelope_nodes(r: f64) -> Vec<(f64, f64)> {
    let panels = ((1.0 / r).log2() * 2.0).ceil().max(1.0) as usize;
    let ratio = (1.0 / r).ln() / panels as f64;
    let rule = gl10();
    let mut out = Vec::with_capacity(panels * rule.order());
    for j in 0..panels {
        let a = r * (ratio * j as f64).exp();
        let b = if j + 1 == panels {
            1.0
        } else {
            r * (ratio * (j + 1) as f64).exp()
        };
        out.extend(rule.mapped(a, b));
    }
    out
}

fn envelope_with(conj: &NFunction, n: u32, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        if r >= 1.0 {
            return Ok(0.0);
        }
        return Err(Error::InvalidInput(format!("envelope radius must lie in (0, 1), got {r}")));
    }
    let k = n as i32 - 1;
    // (s^{1-n}, s^{n-1} * weight) at each node
    let samples: Vec<(f64, f64)> = envelope_nodes(r)
        .into_iter()
        .map(|(s, w)| (s.powi(-k), w * s.powi(k)))
        .collect();
    solve_norm(|lambda| {
        let inv = 1.0 / lambda;
        let mut sum = 0.0;
        for &(f, w) in &samples {
            let v = conj.value(f * inv);
            if !v.is_finite() {
                return Ok(None);
            }
            sum += w * v;
        }
        Ok(if sum.is_finite() { Some(sum) } else { None })
    })
}

/// `‖s^{1-n}‖` in `L^{G̃}((r, 1), s^{n-1} ds)`; 0 for `r >= 1`.
pub fn strauss_envelope(g: &NFunction, n: u32, r: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("dimension n = {n} must be >= 2")));
    }
    let conj = conjugate_unindexed(g)?;
    envelope_with(&conj, n, r)
}

/// Envelope tabulated against `x = ln(r / (1 - r))`, stored as `ln env`, with
/// monotone cubic interpolation between nodes and linear extrapolation in
/// `x` outside.
#[derive(Debug, Clone)]
pub struct EnvelopeTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

pub const TABLE_X_MIN: f64 = -34.0;
pub const TABLE_X_MAX: f64 = 16.0;
pub const TABLE_STEP: f64 = 0.1;

impl EnvelopeTable {
    pub fn build(g: &NFunction, n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("dimension n = {n} must be >= 2")));
        }
        let conj = conjugate_unindexed(g)?;
        let m = ((TABLE_X_MAX - TABLE_X_MIN) / TABLE_STEP).round() as usize;
        let xs: Vec<f64> = (0..=m).map(|i| TABLE_X_MIN + TABLE_STEP * i as f64).collect();
        let ys = xs
            .par_iter()
            .map(|&x| envelope_with(&conj, n, logistic(x)).map(f64::ln))
            .collect::<Result<Vec<f64>>>()?;
        let slopes = fritsch_carlson(&xs, &ys);
        Ok(Self { xs, ys, slopes })
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        if r <= 0.0 {
            return f64::INFINITY;
        }
        let x = (r / (1.0 - r)).ln();
        let m = self.xs.len() - 1;
        let ln_env = if x <= self.xs[0] {
            self.ys[0] + self.slopes[0] * (x - self.xs[0])
        } else if x >= self.xs[m] {
            self.ys[m] + self.slopes[m] * (x - self.xs[m])
        } else {
            let i = (((x - self.xs[0]) / TABLE_STEP).floor() as usize).min(m - 1);
            hermite(
                self.xs[i],
                self.xs[i + 1],
                self.ys[i],
                self.ys[i + 1],
                self.slopes[i],
                self.slopes[i + 1],
                x,
            )
        };
        ln_env.exp()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Monotonicity-preserving node slopes.
fn fritsch_carlson(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let m = xs.len();
    let delta: Vec<f64> = (0..m - 1)
        .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
        .collect();
    let mut d = vec![0.0; m];
    d[0] = delta[0];
    d[m - 1] = delta[m - 2];
    for i in 1..m - 1 {
        d[i] = if delta[i - 1] * delta[i] <= 0.0 {
            0.0
        } else {
            let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i])
        };
    }
    d
}

type TableSlot = Arc<OnceLock<std::result::Result<Arc<EnvelopeTable>, Error>>>;

fn table_cache() -> &'static Mutex<HashMap<(String, u32), TableSlot>> {
    static CACHE: OnceLock<Mutex<HashMap<(String, u32), TableSlot>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Shared envelope table keyed by `(G label, n)`. Each key is built once;
/// concurrent callers for the same key wait for the first build.
///
/// Labels must identify the function: two different `G` with the same label
/// share a table.
pub fn envelope_table(g: &NFunction, n: u32) -> Result<Arc<EnvelopeTable>> {
    let slot = {
        let mut cache = table_cache().lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry((g.label().to_string(), n))
            .or_default()
            .clone()
    };
    slot.get_or_init(|| EnvelopeTable::build(g, n).map(Arc::new))
        .clone()
}

/// `2 ‖f‖_G ‖h‖_{G̃} - ∫ |f h| dμ`, non-negative by Hölder's inequality.
pub fn holder_gap(
    g: &NFunction,
    f: &SampledFunction,
    h: &SampledFunction,
    mu: &WeightedMeasure,
) -> Result<f64> {
    let conj = conjugate_unindexed(g)?;
    let nf = luxemburg_norm(g, f, mu)?;
    let nh = luxemburg_norm(&conj, h, mu)?;
    let (fe, he) = (f.evaluator.clone(), h.evaluator.clone());
    let mut breakpoints = f.breakpoints.clone();
    breakpoints.extend_from_slice(&h.breakpoints);
    let product = SampledFunction {
        evaluator: Arc::new(move |s| (fe(s) * he(s)).abs()),
        singular_exponent: match (f.singular_exponent, h.singular_exponent) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(0.0) + b.unwrap_or(0.0)),
        },
        breakpoints,
    };
    let integral = integrate_measure(&product, mu)?;
    Ok(2.0 * nf * nh - integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::{make_catalog, CatalogSpec};

    fn make(s: &str) -> NFunction {
        make_catalog(&s.parse::<CatalogSpec>().unwrap()).unwrap()
    }

    fn unit(k: f64) -> WeightedMeasure {
        WeightedMeasure::new(0.0, 1.0, k).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn modular_examples() {
        let sq = make("power:p=2");
        let one = SampledFunction::constant(1.0);
        assert!((modular(&sq, &one, &unit(0.0)).unwrap() - 1.0).abs() < 1e-14);
        let id = SampledFunction::new(|s| s);
        assert!((modular(&sq, &id, &unit(2.0)).unwrap() - 0.2).abs() < 1e-14);
        let half = make("power:p=2,c=0.5");
        let du = SampledFunction::new(|s| 2.0 * s);
        assert!((modular(&half, &du, &unit(2.0)).unwrap() - 0.4).abs() < 1e-14);
    }

    #[test]
    fn modular_singular_weight() {
        // ∫_0^1 s^{-1/2} ds = 2
        let one = SampledFunction::constant(1.0);
        let m = modular(&make("power:p=2"), &one, &unit(-0.5)).unwrap();
        assert!((m - 2.0).abs() < 1e-9, "{m}");
    }

    #[test]
    fn measure_validation() {
        assert!(WeightedMeasure::new(0.0, 1.0, -1.0).is_err());
        assert!(WeightedMeasure::new(0.5, 1.0, -3.0).is_ok());
        assert!(WeightedMeasure::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn norm_examples() {
        let sq = make("power:p=2");
        let zero = SampledFunction::constant(0.0);
        assert_eq!(luxemburg_norm(&sq, &zero, &unit(0.0)).unwrap(), 0.0);
        let one = SampledFunction::constant(1.0);
        let mu = WeightedMeasure::new(0.0, 4.0, 0.0).unwrap();
        assert!((luxemburg_norm(&sq, &one, &mu).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn power_norm_is_weighted_lp() {
        for (p, k) in [(1.5, 0.0), (2.0, 2.0), (3.0, 1.0), (4.5, 3.0)] {
            let g = make(&format!("power:p={p}"));
            let f = SampledFunction::new(|s: f64| 1.0 + s * s);
            let mu = unit(k);
            let lp = integrate_measure(&SampledFunction::new(move |s: f64| (1.0 + s * s).powf(p)), &mu)
                .unwrap()
                .powf(1.0 / p);
            let norm = luxemburg_norm(&g, &f, &mu).unwrap();
            assert!(rel(norm, lp) < 1e-9, "p {p} k {k}: {norm} vs {lp}");
        }
    }

    #[test]
    fn tiny_and_huge_functions_expand_the_bracket() {
        let g = make("power:p=2");
        for c in [1e-20, 1e20] {
            let f = SampledFunction::constant(c);
            let norm = luxemburg_norm(&g, &f, &unit(0.0)).unwrap();
            assert!(rel(norm, c) < 1e-9, "{c}: {norm}");
        }
    }

    #[test]
    fn non_normable() {
        let g = make("power:p=2");
        let f = SampledFunction::new(|s: f64| s.powf(-0.6)).singular(-0.6);
        let r = luxemburg_norm(&g, &f, &unit(0.0));
        assert!(matches!(r, Err(Error::NonNormable)), "{r:?}");
    }

    fn power_closed_form(p: f64, n: u32, r: f64) -> f64 {
        let n = n as f64;
        ((p - 1.0) / (n - p) * (r.powf((p - n) / (p - 1.0)) - 1.0)).powf((p - 1.0) / p)
    }

    /// `G̃ = c s^{p'}` for `G = t^p`, so the envelope is `c^{1/p'}` times the
    /// unweighted `L^{p'}` expression.
    fn conjugate_factor(p: f64) -> f64 {
        let q = p / (p - 1.0);
        (p.powf(-1.0 / (p - 1.0)) / q).powf(1.0 / q)
    }

    #[test]
    fn envelope_power_case() {
        for p in [1.5, 2.0, 2.5] {
            for n in [3u32, 4, 5] {
                for r in [0.1, 0.5, 0.9] {
                    let g = make(&format!("power:p={p}"));
                    let env = strauss_envelope(&g, n, r).unwrap();
                    let exact = conjugate_factor(p) * power_closed_form(p, n, r);
                    assert!(rel(env, exact) < 1e-9, "p {p} n {n} r {r}: {env} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn envelope_quarter_square_is_power_closed_form() {
        // G = t^2/4 has G̃ = s^2
        let g = make("power:p=2,c=0.25");
        let env = strauss_envelope(&g, 3, 0.5).unwrap();
        assert!((env - 1.0).abs() < 1e-10, "{env}");
        assert!(strauss_envelope(&g, 3, 1.0 - 1e-9).unwrap() < 1e-4);
        assert_eq!(strauss_envelope(&g, 3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn envelope_fixed_rule_matches_adaptive_norm() {
        let g = make("log_perturbed:p=2,q=1,r=1");
        let conj = conjugate_unindexed(&g).unwrap();
        for r in [1e-6, 0.01, 0.7] {
            let f = SampledFunction::new(|s: f64| s.powi(-2));
            let mu = WeightedMeasure::new(r, 1.0, 2.0).unwrap();
            let adaptive = luxemburg_norm(&conj, &f, &mu).unwrap();
            let fixed = strauss_envelope(&g, 3, r).unwrap();
            assert!(rel(fixed, adaptive) < 1e-9, "{r}: {fixed} vs {adaptive}");
        }
    }

    #[test]
    fn table_interpolation_error() {
        let g = make("power:p=2");
        let table = envelope_table(&g, 3).unwrap();
        let again = envelope_table(&g, 3).unwrap();
        assert!(Arc::ptr_eq(&table, &again));
        for r in [1e-13, 3.3e-9, 1e-4, 0.0123, 0.5, 0.77, 0.999, 1.0 - 1e-8] {
            let exact = strauss_envelope(&g, 3, r).unwrap();
            assert!(rel(table.eval(r), exact) < 1e-7, "{r}: {} vs {exact}", table.eval(r));
        }
    }

    #[test]
    fn holder_gap_examples() {
        let sq = make("power:p=2");
        let zero = SampledFunction::constant(0.0);
        let mu = unit(0.0);
        assert!(holder_gap(&sq, &zero, &zero, &mu).unwrap().abs() < 1e-15);
        // ‖1‖_{t^2} = 1, ‖s‖_{s^2/4} = 1/√12
        let gap = holder_gap(
            &sq,
            &SampledFunction::constant(1.0),
            &SampledFunction::new(|s| s),
            &mu,
        )
        .unwrap();
        assert!((gap - (1.0 / 3f64.sqrt() - 0.5)).abs() < 1e-9, "{gap}");
        // f = h with unit G-norm: gap = 2‖f‖_{G̃} - ∫f^2 = 2·(1/2) - 1
        let f = SampledFunction::constant(1.0);
        let gap = holder_gap(&sq, &f, &f, &mu).unwrap();
        assert!((gap - 0.0).abs() < 1e-9, "{gap}");
    }
}
