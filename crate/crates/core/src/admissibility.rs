//! Existence, boundedness and nonexistence hypotheses for the Hénon problem
//! `-Δ_g u = |x|^α h(u)` in the unit ball of `R^n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::luxemburg::envelope_table;
use crate::nfunction::{
    compare_at_infinity, critical_exponent, simonenko_indices, Comparison, IndexPair, NFunction,
    DEFAULT_LAMBDAS,
};
use crate::quadrature::{integrate, QuadratureOptions};

/// Margin for strict index comparisons.
pub const INDEX_MARGIN: f64 = 1e-9;
/// Half-width of the slope dead band around `-1`.
pub const SLOPE_BAND: f64 = 0.05;
/// Slope-fit windows `[lo, hi]` in `r`, nearest the origin first.
pub const SLOPE_WINDOWS: [(f64, f64); 2] = [(1e-12, 1e-10), (1e-10, 1e-8)];

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub n: u32,
    pub alpha: f64,
    pub g: NFunction,
    pub h: NFunction,
    pub r: Option<NFunction>,
}

impl ProblemSpec {
    pub fn new(n: u32, alpha: f64, g: NFunction, h: NFunction, r: Option<NFunction>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput(format!("dimension n = {n} must be >= 3")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha = {alpha} must be finite and >= 0")));
        }
        simonenko_indices(&g)?;
        simonenko_indices(&h)?;
        if let Some(r) = &r {
            simonenko_indices(r)?;
        }
        Ok(Self { n, alpha, g, h, r })
    }

    pub fn g_indices(&self) -> IndexPair {
        simonenko_indices(&self.g).expect("validated at construction")
    }

    pub fn h_indices(&self) -> IndexPair {
        simonenko_indices(&self.h).expect("validated at construction")
    }

    /// `R`, or `H` when none was given.
    pub fn comparison(&self) -> &NFunction {
        self.r.as_ref().unwrap_or(&self.h)
    }
}

pub fn check_superlinearity(spec: &ProblemSpec) -> bool {
    spec.g_indices().p_plus + INDEX_MARGIN < spec.h_indices().p_minus
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralOutcome {
    Convergent,
    Divergent,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityIntegral {
    pub outcome: IntegralOutcome,
    /// Quadrature value when convergent.
    pub value: Option<f64>,
    /// Log-log slope fitted in the window nearest the origin.
    pub slope: f64,
    /// Slope in the second window, for the stability check.
    pub slope_outer: f64,
    pub note: Option<String>,
}

fn fit_slope(integrand_ln: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    let pts = 21;
    let (a, b) = (lo.ln(), hi.ln());
    let mut xs = Vec::with_capacity(pts);
    let mut ys = Vec::with_capacity(pts);
    for i in 0..pts {
        let x = a + (b - a) * i as f64 / (pts - 1) as f64;
        let y = integrand_ln(x.exp());
        if y.is_finite() {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.len() < 5 {
        return None;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Numerical test of `∫_0^1 r^{α+n-1} R(env(r)) dr < ∞`.
///
/// The integrand's log-log slope `β` near `r = 0` decides: `β > -0.95` is
/// convergent (and the value is computed), `β <= -1.05` divergent, anything
/// in between or a slope that differs by more than 0.05 between the two fit
/// windows is indeterminate.
pub fn check_admissibility_integral(spec: &ProblemSpec) -> Result<AdmissibilityIntegral> {
    let table = envelope_table(&spec.g, spec.n)?;
    let rf = spec.comparison().clone();
    let k = spec.alpha + spec.n as f64 - 1.0;
    let ln_integrand = |r: f64| k * r.ln() + rf.value(table.eval(r)).ln();
    let slopes: Vec<Option<f64>> = SLOPE_WINDOWS
        .iter()
        .map(|&(lo, hi)| fit_slope(&ln_integrand, lo, hi))
        .collect();
    let (beta, beta_outer) = match (slopes[0], slopes[1]) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Ok(AdmissibilityIntegral {
                outcome: IntegralOutcome::Indeterminate,
                value: None,
                slope: slopes[0].unwrap_or(f64::NAN),
                slope_outer: slopes[1].unwrap_or(f64::NAN),
                note: Some("integrand not finite in the slope windows".into()),
            })
        }
    };
    let mut out = AdmissibilityIntegral {
        outcome: IntegralOutcome::Indeterminate,
        value: None,
        slope: beta,
        slope_outer: beta_outer,
        note: None,
    };
    if (beta - beta_outer).abs() > SLOPE_BAND {
        out.note = Some(format!(
            "unstable slope: {beta} near 1e-11 vs {beta_outer} near 1e-9"
        ));
        return Ok(out);
    }
    if beta <= -1.0 - SLOPE_BAND {
        out.outcome = IntegralOutcome::Divergent;
        return Ok(out);
    }
    if beta <= -1.0 + SLOPE_BAND {
        out.note = Some("slope inside the dead band around -1".into());
        return Ok(out);
    }
    let integrand = |r: f64| {
        if r <= 0.0 {
            0.0
        } else {
            r.powf(k) * rf.value(table.eval(r))
        }
    };
    match integrate(integrand, 0.0, 1.0, &[], true, &QuadratureOptions::default()) {
        Ok(v) => {
            out.outcome = IntegralOutcome::Convergent;
            out.value = Some(v.value);
        }
        Err(e) => out.note = Some(format!("slope suggests convergence but quadrature failed: {e}")),
    }
    Ok(out)
}

/// `q⁻(H) >= n(α + p⁺)/(n - p⁺)`, up to the index margin.
pub fn check_nonexistence(spec: &ProblemSpec) -> Result<bool> {
    let p = spec.g_indices().p_plus;
    let crit = critical_exponent(p, spec.n, spec.alpha)?;
    Ok(spec.h_indices().p_minus >= crit - INDEX_MARGIN)
}

pub fn check_boundedness_hypothesis(spec: &ProblemSpec) -> Result<bool> {
    let r = spec
        .r
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("boundedness check needs R".into()))?;
    Ok(spec.h_indices().p_plus + INDEX_MARGIN < simonenko_indices(r)?.p_minus)
}

/// `n((n - p⁻) p⁺ / ((n - p⁺) p⁻) - 1)`.
pub fn critical_alpha_threshold(g: &NFunction, n: u32) -> Result<f64> {
    let ip = simonenko_indices(g)?;
    let nf = n as f64;
    if !(ip.p_plus < nf) {
        return Err(Error::HypothesisViolated(format!(
            "threshold needs p+ < n, got p+ = {} and n = {n}",
            ip.p_plus
        )));
    }
    if ip.p_minus == ip.p_plus {
        return Ok(0.0);
    }
    Ok(nf * ((nf - ip.p_minus) * ip.p_plus / ((nf - ip.p_plus) * ip.p_minus) - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ExistenceGuaranteed,
    NonexistenceGuaranteed,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub evidence: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub integral: Option<AdmissibilityIntegral>,
    pub caveats: Vec<String>,
    /// Existence and nonexistence checks both passed.
    pub conflict: bool,
}

impl ClassificationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_INDICES_BELOW_N: &str = "gradient_indices_below_n";
pub const CHECK_SUPERLINEAR: &str = "superlinearity";
pub const CHECK_H_BELOW_R: &str = "h_much_smaller_than_r";
pub const CHECK_INTEGRAL: &str = "admissibility_integral";
pub const CHECK_NONEXISTENCE: &str = "nonexistence";

pub fn classify(spec: &ProblemSpec) -> ClassificationReport {
    let gp = spec.g_indices();
    let hq = spec.h_indices();
    let nf = spec.n as f64;
    let mut checks = Vec::new();
    let mut caveats = Vec::new();

    let below_n = gp.p_plus < nf;
    checks.push(Check {
        name: CHECK_INDICES_BELOW_N.into(),
        passed: below_n,
        evidence: json!({ "p_minus": gp.p_minus, "p_plus": gp.p_plus, "n": spec.n }),
    });

    let superlinear = check_superlinearity(spec);
    checks.push(Check {
        name: CHECK_SUPERLINEAR.into(),
        passed: superlinear,
        evidence: json!({ "p_plus": gp.p_plus, "q_minus": hq.p_minus }),
    });

    if spec.r.is_none() {
        caveats.push(
            "R defaulted to H; existence also needs H much smaller than R at infinity, \
             which cannot hold for R = H"
                .into(),
        );
    }
    let cmp = compare_at_infinity(&spec.h, spec.comparison(), &DEFAULT_LAMBDAS);
    checks.push(Check {
        name: CHECK_H_BELOW_R.into(),
        passed: cmp.verdict == Comparison::MuchSmaller,
        evidence: serde_json::to_value(&cmp).unwrap_or(Value::Null),
    });

    let integral = match check_admissibility_integral(spec) {
        Ok(i) => {
            checks.push(Check {
                name: CHECK_INTEGRAL.into(),
                passed: i.outcome == IntegralOutcome::Convergent,
                evidence: serde_json::to_value(&i).unwrap_or(Value::Null),
            });
            Some(i)
        }
        Err(e) => {
            checks.push(Check {
                name: CHECK_INTEGRAL.into(),
                passed: false,
                evidence: json!({ "error": e.to_string() }),
            });
            None
        }
    };

    let nonexistence = match check_nonexistence(spec) {
        Ok(b) => {
            let crit = critical_exponent(gp.p_plus, spec.n, spec.alpha).unwrap_or(f64::NAN);
            checks.push(Check {
                name: CHECK_NONEXISTENCE.into(),
                passed: b,
                evidence: json!({ "q_minus": hq.p_minus, "critical": crit }),
            });
            b
        }
        Err(e) => {
            checks.push(Check {
                name: CHECK_NONEXISTENCE.into(),
                passed: false,
                evidence: json!({ "error": e.to_string() }),
            });
            false
        }
    };

    let existence = checks
        .iter()
        .filter(|c| c.name != CHECK_NONEXISTENCE)
        .all(|c| c.passed);
    let conflict = existence && nonexistence;
    let verdict = if conflict {
        Verdict::Indeterminate
    } else if existence {
        Verdict::ExistenceGuaranteed
    } else if nonexistence {
        Verdict::NonexistenceGuaranteed
    } else {
        Verdict::Indeterminate
    };
    ClassificationReport {
        verdict,
        checks,
        integral,
        caveats,
        conflict,
    }
}

/// Classify every spec; results are returned in input order.
pub fn classify_all(specs: &[ProblemSpec]) -> Vec<ClassificationReport> {
    specs.par_iter().map(classify).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::{make_catalog, CatalogSpec};

    fn make(s: &str) -> NFunction {
        make_catalog(&s.parse::<CatalogSpec>().unwrap()).unwrap()
    }

    fn spec(n: u32, alpha: f64, g: &str, h: &str, r: Option<&str>) -> ProblemSpec {
        ProblemSpec::new(n, alpha, make(g), make(h), r.map(make)).unwrap()
    }

    #[test]
    fn superlinearity_examples() {
        assert!(check_superlinearity(&spec(3, 0.0, "power:p=2", "power:p=5", None)));
        assert!(!check_superlinearity(&spec(3, 0.0, "power_sum:p=2,q=3", "power:p=3", None)));
        assert!(check_superlinearity(&spec(3, 0.0, "power_sum:p=2,q=3", "power:p=4", None)));
    }

    #[test]
    fn integral_examples() {
        let c = check_admissibility_integral(&spec(3, 1.0, "power:p=2", "power:p=5", None)).unwrap();
        assert_eq!(c.outcome, IntegralOutcome::Convergent);
        let d = check_admissibility_integral(&spec(3, 1.0, "power:p=2", "power:p=10", None)).unwrap();
        assert_eq!(d.outcome, IntegralOutcome::Divergent);
        // slope is α + n - 1 + q(p - n)/p
        assert!((d.slope - (3.0 - 5.0)).abs() < 1e-6, "{d:?}");
    }

    #[test]
    fn integral_value_matches_closed_form() {
        // G = t^2/4 gives env = (1/r - 1)^{1/2}; with R = t^2, n = 3, α = 0:
        // ∫ r^2 (1/r - 1) dr = 1/2 - 1/3
        let s = spec(3, 0.0, "power:p=2,c=0.25", "power:p=2", None);
        let c = check_admissibility_integral(&s).unwrap();
        let v = c.value.unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-7, "{v}");
    }

    #[test]
    fn nonexistence_examples() {
        assert!(check_nonexistence(&spec(3, 1.0, "power:p=2", "power:p=9", None)).unwrap());
        assert!(!check_nonexistence(&spec(3, 1.0, "power:p=2", "power:p=5", None)).unwrap());
        assert!(check_nonexistence(&spec(3, 0.0, "power:p=2", "power:p=6", None)).unwrap());
        assert!(check_nonexistence(&spec(3, 0.0, "power:p=3", "power:p=6", None)).is_err());
    }

    #[test]
    fn boundedness_examples() {
        let b = |h: &str, r: &str| {
            check_boundedness_hypothesis(&spec(3, 0.0, "power:p=2", h, Some(r))).unwrap()
        };
        assert!(b("power:p=4", "power:p=6"));
        assert!(!b("power:p=6", "power:p=6"));
        assert!(b("power_sum:p=3,q=4", "power:p=5"));
        assert!(check_boundedness_hypothesis(&spec(3, 0.0, "power:p=2", "power:p=4", None)).is_err());
    }

    #[test]
    fn alpha_threshold_examples() {
        assert_eq!(critical_alpha_threshold(&make("power:p=2"), 3).unwrap(), 0.0);
        let t = critical_alpha_threshold(&make("power_sum:p=2,q=3"), 5).unwrap();
        assert!((t - 6.25).abs() < 1e-12);
        let t = critical_alpha_threshold(&make("power_sum:p=2,q=3"), 4).unwrap();
        assert!((t - 8.0).abs() < 1e-12);
        assert!(critical_alpha_threshold(&make("power_sum:p=2,q=3"), 3).is_err());
    }

    #[test]
    fn classify_examples() {
        let r = classify(&spec(3, 1.0, "power:p=2", "power:p=5,c=0.2", Some("power:p=5.5")));
        assert_eq!(r.verdict, Verdict::ExistenceGuaranteed, "{r:#?}");
        assert!(r.caveats.is_empty());
        let r = classify(&spec(3, 1.0, "power:p=2", "power:p=9,c=0.1111111111111111", None));
        assert_eq!(r.verdict, Verdict::NonexistenceGuaranteed);
        assert!(!r.caveats.is_empty());
        let r = classify(&spec(3, 1.0, "power:p=3", "power:p=2", None));
        assert_eq!(r.verdict, Verdict::Indeterminate);
        assert!(!r.check(CHECK_SUPERLINEAR).unwrap().passed);
    }

    #[test]
    fn verdicts_follow_checks() {
        for (g, h, r) in [
            ("power:p=2", "power:p=4", Some("power:p=4.5")),
            ("power:p=2", "power:p=4", None),
            ("power_sum:p=2,q=2.5", "power:p=3", Some("power:p=3.5")),
            ("power:p=2", "power:p=7", Some("power:p=8")),
        ] {
            let rep = classify(&spec(3, 0.5, g, h, r));
            if rep.verdict == Verdict::ExistenceGuaranteed {
                assert!(rep.checks.iter().filter(|c| c.name != CHECK_NONEXISTENCE).all(|c| c.passed));
            }
            if rep.verdict == Verdict::NonexistenceGuaranteed {
                assert!(rep.check(CHECK_NONEXISTENCE).unwrap().passed);
            }
            if !rep.check(CHECK_SUPERLINEAR).unwrap().passed {
                assert_ne!(rep.verdict, Verdict::ExistenceGuaranteed);
            }
        }
    }

    #[test]
    fn report_json_shape() {
        let r = classify(&spec(3, 1.0, "power:p=2", "power:p=5", Some("power:p=5.5")));
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["verdict"], "ExistenceGuaranteed");
        assert!(v["checks"].as_array().unwrap().iter().all(|c| c.get("passed").is_some()));
        assert!(v["integral"]["value"].is_number());
    }
}
