//! Identity-based checks on computed or supplied radial profiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::admissibility::{check_boundedness_hypothesis, ProblemSpec};
use crate::error::Result;
use crate::luxemburg::envelope_table;
use crate::quadrature::gl8;
use crate::radial::{gradient_norm, RadialProblem, RadialProfile};

/// `Σ_k ∫_{r_k}^{r_{k+1}} f(r, u(r), u'(r)) dr` with Hermite reconstruction and
/// eight Gauss points per panel.
fn integrate_profile(u: &RadialProfile, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let r = u.nodes();
    let rule = gl8();
    let mut total = 0.0;
    for k in 0..r.len() - 1 {
        for (x, w) in rule.mapped(r[k], r[k + 1]) {
            let (v, dv) = u.hermite_at(x);
            total += w * f(x, v, dv);
        }
    }
    total
}

/// Same, on the piecewise-linear interpolant.
fn integrate_linear(u: &RadialProfile, f: impl Fn(f64, f64) -> f64) -> f64 {
    let r = u.nodes();
    let rule = gl8();
    let mut total = 0.0;
    for k in 0..r.len() - 1 {
        for (x, w) in rule.mapped(r[k], r[k + 1]) {
            total += w * f(x, u.linear_at(x));
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / (1 + |rhs|)`.
    pub residual: f64,
    pub parts: BTreeMap<String, f64>,
}

/// Radial form of the Pohozaev identity in the unit ball (`x·ν = 1`):
///
/// `ω[∫ (nF + x·∇ₓF) r^{n-1} + ∫ (g(|u'|)|u'| - nG(|u'|)) r^{n-1}]
///   = ω (g(|u'(1)|)|u'(1)| - G(|u'(1)|))`.
///
/// `u'(1)` is the profile's stored boundary derivative; reconstructed
/// profiles carry the one-sided three-point value there.
pub fn pohozaev_residual(p: &RadialProblem, u: &RadialProfile) -> Result<PohozaevReport> {
    let n = p.n as f64;
    let om = p.omega();
    let rn = |r: f64| r.powi(p.n as i32 - 1);
    let n_primitive = om * n * integrate_profile(u, |r, v, _| p.source.primitive(r, v) * rn(r));
    let x_grad = om * integrate_profile(u, |r, v, _| p.source.x_grad_primitive(r, v) * rn(r));
    let gradient = om
        * integrate_profile(u, |r, _, dv| {
            let t = dv.abs();
            (p.g.derivative(t) * t - n * p.g.value(t)) * rn(r)
        });
    let t1 = u.derivatives.last().unwrap().abs();
    let rhs = om * (p.g.derivative(t1) * t1 - p.g.value(t1));
    let lhs = n_primitive + x_grad + gradient;
    let parts = BTreeMap::from([
        ("n_primitive".to_string(), n_primitive),
        ("x_grad_primitive".to_string(), x_grad),
        ("gradient".to_string(), gradient),
        ("boundary".to_string(), rhs),
    ]);
    Ok(PohozaevReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / (1.0 + rhs.abs()),
        parts,
    })
}

/// `(n+α)/q⁻ + 1 - n/p⁺`.
pub fn nonexistence_factor(n: u32, alpha: f64, q_minus: f64, p_plus: f64) -> f64 {
    let n = n as f64;
    (n + alpha) / q_minus + 1.0 - n / p_plus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceAudit {
    pub factor: f64,
    /// `∫_B |x|^α h(u) u dx`.
    pub integral: f64,
    pub product: f64,
    /// `ω (1 - 1/p⁺) g(|u'(1)|)|u'(1)|`.
    pub boundary: f64,
    /// Non-positive product against a positive boundary term.
    pub contradiction: bool,
}

pub fn nonexistence_audit(spec: &ProblemSpec, u: &RadialProfile) -> NonexistenceAudit {
    let p_plus = spec.g_indices().p_plus;
    let q_minus = spec.h_indices().p_minus;
    let factor = nonexistence_factor(spec.n, spec.alpha, q_minus, p_plus);
    let om = crate::radial::sphere_area(spec.n);
    let e = spec.alpha + spec.n as f64 - 1.0;
    let integral = om
        * integrate_profile(u, |r, v, _| {
            let v = v.max(0.0);
            r.powf(e) * spec.h.derivative(v) * v
        });
    let t1 = u.derivatives.last().unwrap().abs();
    let boundary = om * (1.0 - 1.0 / p_plus) * spec.g.derivative(t1) * t1;
    let product = factor * integral;
    NonexistenceAudit {
        factor,
        integral,
        product,
        boundary,
        contradiction: product <= 0.0 && boundary > 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StraussCheck {
    pub c_emp: f64,
    pub gradient_norm: f64,
    /// `(r_i, |u(r_i)| / (‖u'‖ env(r_i)))` on interior nodes.
    pub ratios: Vec<(f64, f64)>,
}

pub fn strauss_check(p: &RadialProblem, u: &RadialProfile) -> Result<StraussCheck> {
    let norm = gradient_norm(p, u)?;
    let table = envelope_table(&p.g, p.n)?;
    let r = u.nodes();
    let ratios: Vec<(f64, f64)> = (1..r.len() - 1)
        .map(|i| {
            let ratio = if norm > 0.0 {
                u.values[i].abs() / (norm * table.eval(r[i]))
            } else {
                0.0
            };
            (r[i], ratio)
        })
        .collect();
    let c_emp = ratios.iter().fold(0.0f64, |m, (_, q)| m.max(*q));
    Ok(StraussCheck {
        c_emp,
        gradient_norm: norm,
        ratios,
    })
}

/// `e_k = ω ∫_0^1 r^{α+n-1} H((u - (1 - 2^{-k}))₊) dr`, `k = 0..=k_max`, on
/// the piecewise-linear interpolant.
pub fn degiorgi_levels(spec: &ProblemSpec, u: &RadialProfile, k_max: usize) -> Vec<f64> {
    let om = crate::radial::sphere_area(spec.n);
    let e = spec.alpha + spec.n as f64 - 1.0;
    (0..=k_max)
        .map(|k| {
            let level = 1.0 - 0.5f64.powi(k as i32);
            if u.values.iter().all(|v| *v <= level) {
                return 0.0;
            }
            om * integrate_linear(u, |r, v| r.powf(e) * spec.h.value((v - level).max(0.0)))
        })
        .collect()
}

pub fn levels_csv(levels: &[f64]) -> String {
    let mut s = String::from("k,level,energy\n");
    for (k, e) in levels.iter().enumerate() {
        s.push_str(&format!("{k},{:.16e},{e:.16e}\n", 1.0 - 0.5f64.powi(k as i32)));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub sup_norm: f64,
    pub hypothesis_ok: bool,
    pub note: Option<String>,
}

pub fn boundedness_report(spec: &ProblemSpec, u: &RadialProfile) -> BoundednessReport {
    let (hypothesis_ok, note) = match check_boundedness_hypothesis(spec) {
        Ok(b) => (b, None),
        Err(e) => (false, Some(e.to_string())),
    };
    BoundednessReport {
        sup_norm: u.values.iter().fold(0.0f64, |m, v| m.max(*v)),
        hypothesis_ok,
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::{make_catalog, CatalogSpec, NFunction};
    use crate::radial::{CustomSource, RadialGrid, Source};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn make(s: &str) -> NFunction {
        make_catalog(&s.parse::<CatalogSpec>().unwrap()).unwrap()
    }

    fn constant_six() -> RadialProblem {
        RadialProblem::new(3, make("power:p=2,c=0.5"), Source::Constant(6.0))
    }

    fn bump(grid: RadialGrid) -> RadialProfile {
        RadialProfile::from_fn(grid, |r| 1.0 - r * r, |r| -2.0 * r).unwrap()
    }

    #[test]
    fn pohozaev_manufactured_quadratic() {
        let rep = pohozaev_residual(&constant_six(), &bump(RadialGrid::uniform(32).unwrap())).unwrap();
        assert!((rep.lhs - 8.0 * PI).abs() < 1e-12);
        assert!((rep.rhs - 8.0 * PI).abs() < 1e-12);
        assert!(rep.residual <= 1e-8);
        let sum = rep.parts["n_primitive"] + rep.parts["x_grad_primitive"] + rep.parts["gradient"];
        assert!((sum - rep.lhs).abs() <= 1e-12 * rep.lhs.abs());
        assert_eq!(rep.parts["boundary"], rep.rhs);
    }

    #[test]
    fn pohozaev_zero_profile() {
        let z = RadialProfile::zero(RadialGrid::uniform(16).unwrap());
        let rep = pohozaev_residual(&constant_six(), &z).unwrap();
        assert_eq!((rep.lhs, rep.rhs, rep.residual), (0.0, 0.0, 0.0));
    }

    /// `u = cos(πr/2)` solves `-Δu = f(r)` in the ball of `R^3` with
    /// `f = (π²/4) cos(πr/2) + (π/r) sin(πr/2)`.
    fn cosine_problem() -> RadialProblem {
        let f = |r: f64| {
            let a = PI * r / 2.0;
            let s = if r < 1e-8 { PI / 2.0 } else { a.sin() / r };
            PI * PI / 4.0 * a.cos() + PI * s
        };
        // r f'(r), with the sin(a)/r term expanded near 0
        let rdf = |r: f64| {
            let a = PI * r / 2.0;
            let sinc_part = if r < 1e-4 {
                -PI * PI * PI * r * r / 12.0
            } else {
                PI * (a * a.cos() - a.sin()) / r
            };
            -PI * PI * PI / 8.0 * r * a.sin() + sinc_part
        };
        RadialProblem::new(
            3,
            make("power:p=2,c=0.5"),
            Source::Custom(CustomSource {
                f: Arc::new(move |r, _| f(r)),
                primitive: Arc::new(move |r, u| f(r) * u),
                x_grad_primitive: Arc::new(move |r, u| rdf(r) * u),
                df: None,
            }),
        )
    }

    #[test]
    fn pohozaev_refinement_rate() {
        let p = cosine_problem();
        let exact = |g: RadialGrid| {
            RadialProfile::from_fn(g, |r| (PI * r / 2.0).cos(), |r| -PI / 2.0 * (PI * r / 2.0).sin()).unwrap()
        };
        let analytic = pohozaev_residual(&p, &exact(RadialGrid::graded(64).unwrap())).unwrap();
        assert!(analytic.residual < 1e-8, "{}", analytic.residual);
        let mut prev = f64::INFINITY;
        for m in [32, 64, 128, 256] {
            let g = RadialGrid::graded(m).unwrap();
            let u = RadialProfile::from_values(g.clone(), exact(g).values).unwrap();
            let res = pohozaev_residual(&p, &u).unwrap().residual;
            assert!(res <= prev / 2.0, "M={m}: {res} after {prev}");
            prev = res;
        }
        assert!(prev < 5e-3);
    }

    #[test]
    fn nonexistence_factor_root() {
        for (n, p, alpha) in [(3u32, 2.0, 0.0), (3, 2.0, 1.0), (5, 3.0, 2.0)] {
            let q = p * (n as f64 + alpha) / (n as f64 - p);
            assert!(nonexistence_factor(n, alpha, q, p).abs() < 1e-12);
            assert!(nonexistence_factor(n, alpha, q * 0.9, p) > 0.0);
            assert!(nonexistence_factor(n, alpha, q * 1.1, p) < 0.0);
        }
    }

    #[test]
    fn nonexistence_audit_on_zero_and_subcritical() {
        let spec = ProblemSpec::new(3, 1.0, make("power:p=2,c=0.5"), make("power:p=4,c=0.25"), None).unwrap();
        let z = RadialProfile::zero(RadialGrid::uniform(16).unwrap());
        let a = nonexistence_audit(&spec, &z);
        assert_eq!(a.product, 0.0);
        assert!(!a.contradiction);
        let a = nonexistence_audit(&spec, &bump(RadialGrid::graded(64).unwrap()));
        assert!(a.factor > 0.0 && a.integral > 0.0 && !a.contradiction);
        // ω ∫ r^3 (1-r²)^4 dr = 4π B(2,5)/2 = π/15
        assert!((a.integral - PI / 15.0).abs() < 1e-10, "{}", a.integral);
    }

    #[test]
    fn strauss_bounded_and_scale_invariant() {
        let p = RadialProblem::new(3, make("power:p=2"), Source::Constant(0.0));
        let u = bump(RadialGrid::graded(256).unwrap());
        let a = strauss_check(&p, &u).unwrap();
        assert!(a.c_emp.is_finite() && a.c_emp > 0.0 && a.c_emp <= 2.0, "{}", a.c_emp);
        let b = strauss_check(&p, &u.scaled(5.0)).unwrap();
        assert!((a.c_emp - b.c_emp).abs() < 1e-9 * a.c_emp);
        let z = strauss_check(&p, &RadialProfile::zero(u.grid.clone())).unwrap();
        assert_eq!(z.c_emp, 0.0);
    }

    fn henon_spec() -> ProblemSpec {
        ProblemSpec::new(3, 1.0, make("power:p=2,c=0.5"), make("power:p=4,c=0.25"), Some(make("power:p=5"))).unwrap()
    }

    #[test]
    fn degiorgi_levels_vanish_below_one() {
        let u = bump(RadialGrid::graded(64).unwrap()).scaled(0.7);
        let e = degiorgi_levels(&henon_spec(), &u, 12);
        assert!(e[0] > 0.0);
        assert!(e.windows(2).all(|w| w[1] <= w[0]));
        // 1 - 2^{-2} = 0.75 ≥ 0.7
        assert!(e[2..].iter().all(|x| *x == 0.0));
        assert!(e[1] > 0.0);
    }

    #[test]
    fn degiorgi_constant_limit() {
        let g = RadialGrid::uniform(16).unwrap();
        let u = RadialProfile::unconstrained(g, vec![1.5; 17], vec![0.0; 17]).unwrap();
        let e = degiorgi_levels(&henon_spec(), &u, 40);
        // ω/(n+α) H(1/2) with H = t⁴/4
        let limit = 4.0 * PI / 4.0 * 0.5f64.powi(4) / 4.0;
        assert!((e[40] - limit).abs() < 1e-6 * limit);
        assert!(levels_csv(&e).starts_with("k,level,energy\n0,0.0000000000000000e0,"));
    }

    #[test]
    fn boundedness_examples() {
        let spec = henon_spec();
        let r = boundedness_report(&spec, &bump(RadialGrid::uniform(16).unwrap()));
        assert_eq!(r.sup_norm, 1.0);
        assert!(r.hypothesis_ok);
        let no_r = ProblemSpec::new(3, 1.0, make("power:p=2"), make("power:p=4"), None).unwrap();
        let r = boundedness_report(&no_r, &RadialProfile::zero(RadialGrid::uniform(16).unwrap()));
        assert_eq!(r.sup_norm, 0.0);
        assert!(!r.hypothesis_ok && r.note.is_some());
    }
}
