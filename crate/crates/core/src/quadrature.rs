//! Composite Gauss–Legendre quadrature with adaptive panel bisection and
//! geometric grading toward a singular left endpoint.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    fn integrate_checked<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in self.mapped(a, b) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { at: x });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Shared 10-point rule used by the adaptive integrator.
pub fn gl10() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

/// Shared 8-point rule used for fixed per-panel integration on radial grids.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
    /// Geometric grading ratio toward a singular left endpoint.
    pub grading_ratio: f64,
    pub max_graded_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-15,
            max_depth: 40,
            grading_ratio: 0.5,
            max_graded_panels: 60,
        }
    }
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<Integral> {
    let rule = gl10();
    let mid = 0.5 * (a + b);
    let left = rule.integrate_checked(f, a, mid)?;
    let right = rule.integrate_checked(f, mid, b)?;
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= tol || depth == 0 || (b - a) <= 1e-15 * (a.abs() + b.abs()) {
        return Ok(Integral {
            value: refined,
            error: err,
        });
    }
    let l = adaptive(f, a, mid, left, 0.5 * tol, depth - 1)?;
    let r = adaptive(f, mid, b, right, 0.5 * tol, depth - 1)?;
    Ok(Integral {
        value: l.value + r.value,
        error: l.error + r.error,
    })
}

/// Adaptive integration over a list of panels (sorted breakpoints).
fn integrate_panels<F: Fn(f64) -> f64>(
    f: &F,
    edges: &[f64],
    opts: &QuadratureOptions,
) -> Result<(Vec<f64>, f64)> {
    let rule = gl10();
    let mut coarse = Vec::with_capacity(edges.len().saturating_sub(1));
    for w in edges.windows(2) {
        coarse.push(rule.integrate_checked(f, w[0], w[1])?);
    }
    let scale: f64 = coarse.iter().map(|c| c.abs()).sum();
    let target = opts.abs_tol.max(opts.rel_tol * scale);
    let per_panel = target / coarse.len().max(1) as f64;
    let mut values = Vec::with_capacity(coarse.len());
    let mut error = 0.0;
    for (w, c) in edges.windows(2).zip(coarse) {
        let r = adaptive(f, w[0], w[1], c, per_panel, opts.max_depth)?;
        values.push(r.value);
        error += r.error;
    }
    Ok((values, error))
}

fn merge_breakpoints(mut edges: Vec<f64>, breakpoints: &[f64]) -> Vec<f64> {
    let lo = edges[0];
    let hi = *edges.last().unwrap();
    edges.extend(breakpoints.iter().copied().filter(|&x| x > lo && x < hi));
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (a.abs() + b.abs()));
    edges
}

/// Integrate `f` over (a, b).
///
/// When `singular_left` is set the interval is cut into geometrically graded
/// panels toward `a` and the remainder beyond the last panel is extrapolated
/// from the ratio of successive panel contributions; non-decaying
/// contributions are reported as divergence. For `a > 0` with `b / a` large
/// the panels are log-spaced instead.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    singular_left: bool,
    opts: &QuadratureOptions,
) -> Result<Integral> {
    if !(b > a) {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
        });
    }
    if singular_left {
        return integrate_graded(&f, a, b, breakpoints, opts);
    }
    let edges = if a > 0.0 && b / a > 4.0 {
        let m = (b / a).log2().ceil() as usize;
        let ratio = (b / a).ln() / m as f64;
        let mut e: Vec<f64> = (0..=m).map(|j| a * (ratio * j as f64).exp()).collect();
        e[0] = a;
        e[m] = b;
        e
    } else {
        vec![a, b]
    };
    let edges = merge_breakpoints(edges, breakpoints);
    let (values, error) = integrate_panels(&f, &edges, opts)?;
    Ok(Integral {
        value: values.iter().sum(),
        error,
    })
}

fn integrate_graded<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadratureOptions,
) -> Result<Integral> {
    let len = b - a;
    let q = opts.grading_ratio;
    let mut total = 0.0;
    let mut error = 0.0;
    let mut contributions: Vec<f64> = Vec::new();
    let mut upper = b;
    let mut scale = 1.0;
    for _ in 0..opts.max_graded_panels {
        scale *= q;
        let lower = a + len * scale;
        let edges = merge_breakpoints(vec![lower, upper], breakpoints);
        let (vals, err) = integrate_panels(f, &edges, opts)?;
        let c: f64 = vals.iter().sum();
        total += c;
        error += err;
        contributions.push(c);
        upper = lower;
        let k = contributions.len();
        if k >= 8
            && contributions[k - 3..]
                .iter()
                .all(|c| c.abs() <= 1e-17 * total.abs())
        {
            return Ok(Integral {
                value: total,
                error,
            });
        }
    }
    let k = contributions.len();
    let tail_ratio = |i: usize| -> Option<f64> {
        let (prev, cur) = (contributions[i - 1], contributions[i]);
        if prev > 0.0 && cur >= 0.0 {
            Some(cur / prev)
        } else if prev == 0.0 && cur == 0.0 {
            Some(0.0)
        } else {
            None
        }
    };
    let ratios: Vec<Option<f64>> = (k - 3..k).map(tail_ratio).collect();
    let rho = match ratios.last().copied().flatten() {
        Some(r) => r,
        None => {
            return Ok(Integral {
                value: total,
                error: error + contributions[k - 1].abs(),
            })
        }
    };
    if ratios.iter().all(|r| matches!(r, Some(x) if *x >= 1.0 - 1e-3)) {
        return Err(Error::Divergent(format!(
            "graded panel contributions stop decaying near s = {a:e} (ratio {rho:.4})"
        )));
    }
    let tail = if rho < 1.0 {
        contributions[k - 1] * rho / (1.0 - rho)
    } else {
        f64::INFINITY
    };
    let rel_tails: Vec<f64> = (0..3)
        .map(|j| {
            let i = k - 1 - j;
            let r = match tail_ratio(i) {
                Some(r) if r < 1.0 => r,
                _ => return f64::INFINITY,
            };
            let partial: f64 = contributions[..=i].iter().sum();
            contributions[i] * r / (1.0 - r) / partial.abs().max(f64::MIN_POSITIVE)
        })
        .collect();
    if rel_tails.iter().all(|t| *t > 0.5) {
        return Err(Error::Divergent(format!(
            "relative tail above 0.5 over the last 3 graded panels near s = {a:e}"
        )));
    }
    Ok(Integral {
        value: total + tail,
        error: error + 0.1 * tail.abs(),
    })
}
