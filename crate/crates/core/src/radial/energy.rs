//! Piecewise-linear finite-element discretization of
//! `J(u) = ∫_B G(|∇u|) dx - ∫_B F(|x|, u) dx` for radial `u`.
//!
//! On panel `k` the slope is `s_k` and the gradient term is integrated
//! exactly against the weight: `W_k = (r_{k+1}^n - r_k^n)/n`. The source term
//! uses 8-point Gauss–Legendre per panel. Where `|s| < ε` the flux
//! `g(|s|) sign(s)` is replaced by `g(ρ) s/ρ`, `ρ = √(ε² + s²)`, and the energy
//! density by `G(ρ) - G(ε)`, whose derivative it is. The density jumps by
//! `|2G(ε) - G(√2 ε)|` at `|s| = ε`, which is below 1e-11 for the default ε.

use super::problem::RadialProblem;
use super::profile::RadialProfile;
use crate::error::Result;
use crate::luxemburg::solve_norm;
use crate::nfunction::NFunction;
use crate::quadrature::gl8;

pub const DEFAULT_EPS: f64 = 1e-8;

pub(crate) fn panel_weight(r0: f64, r1: f64, n: u32) -> f64 {
    (r1.powi(n as i32) - r0.powi(n as i32)) / n as f64
}

fn second_derivative(g: &NFunction, t: f64) -> f64 {
    g.second_derivative(t).unwrap_or_else(|| {
        let e = 1e-6 * t.max(1e-6);
        (g.derivative(t + e) - g.derivative((t - e).max(0.0))) / (t + e - (t - e).max(0.0))
    })
}

pub(crate) fn gradient_density(g: &NFunction, s: f64, eps: f64) -> f64 {
    let a = s.abs();
    if a >= eps {
        g.value(a)
    } else {
        let rho = (eps * eps + s * s).sqrt();
        g.value(rho) - g.value(eps)
    }
}

/// Regularized flux `Φ(s)`.
pub fn flux(g: &NFunction, s: f64, eps: f64) -> f64 {
    let a = s.abs();
    if a >= eps {
        g.derivative(a).copysign(s)
    } else {
        let rho = (eps * eps + s * s).sqrt();
        g.derivative(rho) * s / rho
    }
}

pub fn flux_derivative(g: &NFunction, s: f64, eps: f64) -> f64 {
    let a = s.abs();
    if a >= eps {
        second_derivative(g, a)
    } else {
        let rho = (eps * eps + s * s).sqrt();
        second_derivative(g, rho) * s * s / (rho * rho) + g.derivative(rho) * eps * eps / rho.powi(3)
    }
}

/// Source quadrature nodes: `(panel, r, weight · r^{n-1}, t)` where `t` is
/// the local coordinate in the panel.
fn source_nodes(u: &RadialProfile, n: u32) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
    let rule = gl8();
    let r = u.nodes();
    (0..u.grid.panels()).flat_map(move |k| {
        let (a, b) = (r[k], r[k + 1]);
        rule.mapped(a, b)
            .map(move |(x, w)| (k, x, w * x.powi(n as i32 - 1), (x - a) / (b - a)))
    })
}

pub fn energy(p: &RadialProblem, u: &RadialProfile) -> Result<f64> {
    energy_eps(p, u, DEFAULT_EPS)
}

pub fn energy_eps(p: &RadialProblem, u: &RadialProfile, eps: f64) -> Result<f64> {
    let (a, b) = energy_parts(p, u, eps);
    let e = a - b;
    if !e.is_finite() {
        return Err(crate::error::Error::NonFinite { at: 1.0 });
    }
    Ok(e)
}

/// `(ω ∫ G(|u'|) r^{n-1}, ω ∫ F(r, u) r^{n-1})`.
pub fn energy_parts(p: &RadialProblem, u: &RadialProfile, eps: f64) -> (f64, f64) {
    let r = u.nodes();
    let grad: f64 = (0..u.grid.panels())
        .map(|k| panel_weight(r[k], r[k + 1], p.n) * gradient_density(&p.g, u.slope(k), eps))
        .sum();
    let src: f64 = source_nodes(u, p.n)
        .map(|(k, x, w, t)| {
            let v = u.values[k] * (1.0 - t) + u.values[k + 1] * t;
            w * p.source.primitive(x, v)
        })
        .sum();
    let om = p.omega();
    (om * grad, om * src)
}

/// `⟨J'(u), φ_i⟩` for every node; the Dirichlet node `r = 1` gets 0.
pub fn energy_gradient(p: &RadialProblem, u: &RadialProfile) -> Vec<f64> {
    energy_gradient_eps(p, u, DEFAULT_EPS)
}

pub fn energy_gradient_eps(p: &RadialProblem, u: &RadialProfile, eps: f64) -> Vec<f64> {
    let r = u.nodes();
    let m = u.grid.panels();
    let mut out = vec![0.0; m + 1];
    for k in 0..m {
        let h = u.grid.width(k);
        let q = panel_weight(r[k], r[k + 1], p.n) * flux(&p.g, u.slope(k), eps) / h;
        out[k] -= q;
        out[k + 1] += q;
    }
    for (k, x, w, t) in source_nodes(u, p.n) {
        let v = u.values[k] * (1.0 - t) + u.values[k + 1] * t;
        let f = w * p.source.f(x, v);
        out[k] -= f * (1.0 - t);
        out[k + 1] -= f * t;
    }
    let om = p.omega();
    for v in out.iter_mut() {
        *v *= om;
    }
    out[m] = 0.0;
    out
}

/// Tridiagonal Hessian of the discrete energy on the free nodes `0..M`:
/// `(lower, diag, upper)` with `lower[i]` coupling `i+1` to `i`.
pub fn energy_hessian(p: &RadialProblem, u: &RadialProfile, eps: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let r = u.nodes();
    let m = u.grid.panels();
    let mut diag = vec![0.0; m + 1];
    let mut off = vec![0.0; m];
    for k in 0..m {
        let h = u.grid.width(k);
        let a = panel_weight(r[k], r[k + 1], p.n) * flux_derivative(&p.g, u.slope(k), eps) / (h * h);
        diag[k] += a;
        diag[k + 1] += a;
        off[k] -= a;
    }
    for (k, x, w, t) in source_nodes(u, p.n) {
        let v = u.values[k] * (1.0 - t) + u.values[k + 1] * t;
        let d = w * p.source.df(x, v);
        diag[k] -= d * (1.0 - t) * (1.0 - t);
        diag[k + 1] -= d * t * t;
        off[k] -= d * t * (1.0 - t);
    }
    let om = p.omega();
    diag.truncate(m);
    off.truncate(m - 1);
    let diag: Vec<f64> = diag.into_iter().map(|v| v * om).collect();
    let off: Vec<f64> = off.into_iter().map(|v| v * om).collect();
    (off.clone(), diag, off)
}

/// Thomas algorithm; `None` on a zero pivot.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return None;
    }
    c[0] = if n > 1 { upper[0] / beta } else { 0.0 };
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i - 1] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return None;
        }
        if i < n - 1 {
            c[i] = upper[i] / beta;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// `‖u'‖` in `L^G(B)`, measure `ω r^{n-1} dr`, for the piecewise-linear `u`.
pub fn gradient_norm(p: &RadialProblem, u: &RadialProfile) -> Result<f64> {
    let r = u.nodes();
    let om = p.omega();
    let terms: Vec<(f64, f64)> = (0..u.grid.panels())
        .map(|k| (om * panel_weight(r[k], r[k + 1], p.n), u.slope(k).abs()))
        .collect();
    solve_norm(|lambda| {
        let m: f64 = terms.iter().map(|(w, s)| w * p.g.value(s / lambda)).sum();
        Ok(m.is_finite().then_some(m))
    })
}

/// `‖φ_i‖_{L^G(B)} + ‖φ_i'‖_{L^G(B)}` for the hat function at node `i`.
fn hat_norm(p: &RadialProblem, u: &RadialProfile, i: usize) -> Result<f64> {
    let r = u.nodes();
    let m = u.grid.panels();
    let om = p.omega();
    let rule = gl8();
    let mut vals: Vec<(f64, f64)> = Vec::new();
    let mut slopes: Vec<(f64, f64)> = Vec::new();
    if i > 0 {
        let (a, b) = (r[i - 1], r[i]);
        slopes.push((om * panel_weight(a, b, p.n), 1.0 / (b - a)));
        vals.extend(
            rule.mapped(a, b)
                .map(|(x, w)| (om * w * x.powi(p.n as i32 - 1), (x - a) / (b - a))),
        );
    }
    if i < m {
        let (a, b) = (r[i], r[i + 1]);
        slopes.push((om * panel_weight(a, b, p.n), 1.0 / (b - a)));
        vals.extend(
            rule.mapped(a, b)
                .map(|(x, w)| (om * w * x.powi(p.n as i32 - 1), (b - x) / (b - a))),
        );
    }
    let norm_of = |terms: &[(f64, f64)]| {
        solve_norm(|lambda| {
            let m: f64 = terms.iter().map(|(w, v)| w * p.g.value(v / lambda)).sum();
            Ok(m.is_finite().then_some(m))
        })
    };
    Ok(norm_of(&vals)? + norm_of(&slopes)?)
}

/// `max_i |⟨J'(u), φ_i⟩| / ‖φ_i‖_{W^{1,G}}` over the free nodes.
pub fn weak_residual(p: &RadialProblem, u: &RadialProfile) -> Result<f64> {
    weak_residual_eps(p, u, DEFAULT_EPS)
}

pub fn weak_residual_eps(p: &RadialProblem, u: &RadialProfile, eps: f64) -> Result<f64> {
    let grad = energy_gradient_eps(p, u, eps);
    let mut worst = 0.0f64;
    for (i, gi) in grad.iter().enumerate().take(u.grid.panels()) {
        if *gi == 0.0 {
            continue;
        }
        worst = worst.max(gi.abs() / hat_norm(p, u, i)?);
    }
    Ok(worst)
}
