//! N-functions: convex growth functions `G(t) = ∫₀ᵗ g` with their indices,
//! complementary functions and the comparison tests used by the classifier.

mod catalog;
mod ops;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{make_catalog, CatalogSpec};
pub(crate) use ops::conjugate_unindexed;
pub use ops::{
    check_delta2, compare_at_infinity, complementary, compose_inverse, conjugate_value,
    critical_exponent, psi, psi_functions, xi_bounds, young_gap, Comparison, Delta2,
    GrowthComparison, LambdaEvidence, DEFAULT_LAMBDAS,
};

/// Closed-form or numerically backed evaluation of an N-function on `t >= 0`.
pub trait Growth: Send + Sync + fmt::Debug {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    fn second_derivative(&self, _t: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSource {
    Analytic,
    Estimated,
}

/// Bounds `p⁻ <= t g(t) / G(t) <= p⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexPair {
    pub p_minus: f64,
    pub p_plus: f64,
    pub source: IndexSource,
}

impl IndexPair {
    pub fn new(p_minus: f64, p_plus: f64, source: IndexSource) -> Result<Self> {
        if !(p_minus > 1.0) || !(p_plus >= p_minus) || !p_plus.is_finite() {
            return Err(Error::NotAdmissible(format!(
                "index pair ({p_minus}, {p_plus}) violates 1 < p- <= p+ < inf"
            )));
        }
        Ok(Self {
            p_minus,
            p_plus,
            source,
        })
    }

    pub fn analytic(p_minus: f64, p_plus: f64) -> Result<Self> {
        Self::new(p_minus, p_plus, IndexSource::Analytic)
    }

    /// Hölder conjugate pair `((p⁺)', (p⁻)')`.
    pub fn conjugate(&self) -> (f64, f64) {
        let c = |p: f64| p / (p - 1.0);
        (c(self.p_plus), c(self.p_minus))
    }
}

/// An N-function. Cheap to clone; immutable after construction.
#[derive(Clone)]
pub struct NFunction {
    growth: Arc<dyn Growth>,
    label: String,
    indices: Option<IndexPair>,
}

impl fmt::Debug for NFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NFunction")
            .field("label", &self.label)
            .field("indices", &self.indices)
            .finish()
    }
}

impl NFunction {
    pub fn new(label: impl Into<String>, growth: Arc<dyn Growth>) -> Self {
        Self {
            growth,
            label: label.into(),
            indices: None,
        }
    }

    pub fn with_indices(mut self, indices: IndexPair) -> Self {
        self.indices = Some(indices);
        self
    }

    /// `G(|t|)`: the function is extended evenly to the whole line.
    pub fn value(&self, t: f64) -> f64 {
        self.growth.value(t.abs())
    }

    /// `g(t)`, extended as an odd function.
    pub fn derivative(&self, t: f64) -> f64 {
        let v = self.growth.derivative(t.abs());
        if t < 0.0 {
            -v
        } else {
            v
        }
    }

    pub fn second_derivative(&self, t: f64) -> Option<f64> {
        self.growth.second_derivative(t.abs())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn indices(&self) -> Option<IndexPair> {
        self.indices
    }

    pub fn growth(&self) -> &Arc<dyn Growth> {
        &self.growth
    }

    /// `g⁻¹(s)` for `s >= 0`.
    pub fn inverse_derivative(&self, s: f64) -> Result<f64> {
        crate::roots::invert_increasing(|t| self.growth.derivative(t), s)
    }

    /// `G⁻¹(y)` for `y >= 0`.
    pub fn inverse_value(&self, y: f64) -> Result<f64> {
        crate::roots::invert_increasing(|t| self.growth.value(t), y)
    }

    /// Sampled check of the defining properties: `G(0) = 0`, strict increase,
    /// midpoint convexity, monotone `g` with `g(0) = 0`, superlinearity at the
    /// grid extremes and agreement of `g` with a central difference of `G`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::NotAdmissible(format!("{}: {msg}", self.label)));
        let g0 = self.growth.value(0.0);
        if g0 != 0.0 {
            return bad(format!("G(0) = {g0:e}"));
        }
        if self.growth.derivative(0.0) != 0.0 {
            return bad("g(0) != 0".into());
        }
        let grid = log_grid(1e-8, 1e8, 10);
        let vals: Vec<f64> = grid.iter().map(|&t| self.growth.value(t)).collect();
        let ders: Vec<f64> = grid.iter().map(|&t| self.growth.derivative(t)).collect();
        for i in 0..grid.len() {
            let (t, v, d) = (grid[i], vals[i], ders[i]);
            if !v.is_finite() || !d.is_finite() {
                continue;
            }
            if !(d > 0.0) {
                return bad(format!("g({t:e}) = {d:e} is not positive"));
            }
            if i > 0 && vals[i - 1].is_finite() {
                if !(v > vals[i - 1]) {
                    return bad(format!("G not strictly increasing near t = {t:e}"));
                }
                if d < ders[i - 1] * (1.0 - 1e-12) {
                    return bad(format!("g decreasing near t = {t:e}"));
                }
                let a = grid[i - 1];
                let mid = self.growth.value(0.5 * (a + t));
                if mid > 0.5 * (vals[i - 1] + v) * (1.0 + 1e-12) {
                    return bad(format!("midpoint convexity fails on [{a:e}, {t:e}]"));
                }
            }
            let h = 1e-5;
            let fd = (self.growth.value(t * (1.0 + h)) - self.growth.value(t * (1.0 - h)))
                / (2.0 * t * h);
            if fd.is_finite() && (fd - d).abs() > 1e-6 * d.abs() {
                return bad(format!("g({t:e}) = {d:e} but dG/dt ~ {fd:e}"));
            }
        }
        let lo = grid[0];
        let hi = *grid.iter().rev().find(|&&t| self.growth.value(t).is_finite()).unwrap();
        let slope = |t: f64| self.growth.value(t) / t;
        if !(slope(lo) < slope(1.0) && slope(1.0) < slope(hi)) {
            return bad("G(t)/t is not increasing from 0 to infinity on the grid".into());
        }
        Ok(())
    }
}

/// Log-spaced grid with `per_decade` points per decade, endpoints included.
pub fn log_grid(t_min: f64, t_max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (t_max / t_min).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    let (l0, l1) = (t_min.ln(), t_max.ln());
    (0..=n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / n as f64).exp())
        .collect()
}

/// Grid used by index estimation.
#[derive(Debug, Clone, Copy)]
pub struct IndexGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
}

impl Default for IndexGrid {
    fn default() -> Self {
        Self {
            t_min: 1e-8,
            t_max: 1e8,
            per_decade: 400,
        }
    }
}

fn index_ratio(nf: &NFunction, t: f64) -> Option<f64> {
    let v = nf.growth.value(t);
    let d = nf.growth.derivative(t);
    let r = t * d / v;
    (v > 0.0 && v.is_finite() && d.is_finite() && r.is_finite()).then_some(r)
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Numerical inf/sup of `t g(t) / G(t)` on a log grid, refined by
/// golden-section search around the grid extrema.
pub fn estimate_indices(nf: &NFunction, grid: &IndexGrid) -> Result<IndexPair> {
    let ts = log_grid(grid.t_min, grid.t_max, grid.per_decade);
    let samples: Vec<(usize, f64)> = ts
        .iter()
        .enumerate()
        .filter_map(|(i, &t)| index_ratio(nf, t).map(|r| (i, r)))
        .collect();
    if samples.len() < 3 {
        return Err(Error::IndexEstimation(format!(
            "{}: too few finite samples",
            nf.label
        )));
    }
    let (imin, rmin) = samples
        .iter()
        .copied()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let (imax, rmax) = samples
        .iter()
        .copied()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let refine = |i: usize, sign: f64, start: f64| -> f64 {
        let lo = ts[i.saturating_sub(1)].ln();
        let hi = ts[(i + 1).min(ts.len() - 1)].ln();
        let f = |x: f64| sign * index_ratio(nf, x.exp()).unwrap_or(sign * start);
        let (_, v) = golden_section(f, lo, hi, 60);
        if sign > 0.0 {
            v.min(start)
        } else {
            (-v).max(start)
        }
    };
    let p_minus = refine(imin, 1.0, rmin);
    let p_plus = refine(imax, -1.0, rmax);
    // an infimum reached at a grid edge with the excess over 1 still
    // shrinking is taken to tend to 1
    let last = samples.len() - 1;
    let decade = grid.per_decade.min(last);
    let edge_to_one = |a: f64, b: f64| (a - 1.0) < 0.95 * (b - 1.0);
    let sliding = (imin == samples[last].0 && edge_to_one(samples[last].1, samples[last - decade].1))
        || (imin == samples[0].0 && edge_to_one(samples[0].1, samples[decade].1));
    if !(p_minus > 1.0) || sliding {
        return Err(Error::NotAdmissible(format!(
            "{}: t g(t)/G(t) = {p_minus} <= 1 near t = {:e}",
            nf.label, ts[imin]
        )));
    }
    let top_growing = imax == samples[last].0 && {
        let back = samples.len().saturating_sub(grid.per_decade + 1);
        samples[last].1 > samples[back].1 * 1.01
    };
    if !p_plus.is_finite() || p_plus > 1e6 || top_growing {
        return Err(Error::IndexEstimation(format!(
            "{}: t g(t)/G(t) appears unbounded above (reached {p_plus:e})",
            nf.label
        )));
    }
    IndexPair::new(p_minus, p_plus, IndexSource::Estimated)
}

/// The cached analytic pair when the function carries one, otherwise a
/// numerical estimate on the default grid.
pub fn simonenko_indices(nf: &NFunction) -> Result<IndexPair> {
    match nf.indices {
        Some(pair) => Ok(pair),
        None => estimate_indices(nf, &IndexGrid::default()),
    }
}
