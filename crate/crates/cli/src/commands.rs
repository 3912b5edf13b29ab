use std::path::Path;

use henon_core::admissibility::{
    classify, ClassificationReport, ProblemSpec, Verdict, CHECK_H_BELOW_R, CHECK_INTEGRAL,
    CHECK_NONEXISTENCE, CHECK_SUPERLINEAR,
};
use henon_core::diagnostics::{
    boundedness_report, degiorgi_levels, pohozaev_residual, strauss_check,
};
use henon_core::nfunction::{
    check_delta2, conjugate_value, make_catalog, simonenko_indices, CatalogSpec, NFunction,
};
use henon_core::radial::{
    energy, geometry_check, mountain_pass_solve, solve_shooting, weak_residual, RadialGrid,
    RadialProblem, RadialProfile, Source,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Axis, Method, RunConfig};
use crate::output::{num, to_json};
use crate::Failure;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Named parameters of `catalog`, in `family:key=value` order.
#[derive(Debug, Clone, Default)]
pub struct CatalogParams {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub c: Option<f64>,
}

pub fn catalog(family: &str, params: &CatalogParams) -> Result<String, Failure> {
    let named = [("p", params.p), ("q", params.q), ("r", params.r), ("s", params.s), ("c", params.c)];
    let body: Vec<String> = named
        .iter()
        .filter_map(|(k, v)| v.map(|v| format!("{k}={v}")))
        .collect();
    let spec: CatalogSpec = format!("{family}:{}", body.join(","))
        .parse()
        .map_err(|e: henon_core::Error| Failure::config(e.to_string()))?;
    let nf = make_catalog(&spec)?;
    let ip = simonenko_indices(&nf)?;
    let d2 = check_delta2(&nf);
    let table: Vec<Value> = [0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&s| json!({"s": s, "value": conjugate_value(&nf, s).ok()}))
        .collect();
    Ok(to_json(&json!({
        "name": spec.to_string(),
        "family": spec.family(),
        "indices": {"p_minus": ip.p_minus, "p_plus": ip.p_plus, "source": ip.source},
        "delta2": {"holds": d2.holds, "constant": d2.constant},
        "conjugate": table,
    })))
}

fn spec_json(spec: &ProblemSpec) -> Value {
    json!({
        "n": spec.n,
        "alpha": spec.alpha,
        "g": spec.g.label(),
        "h": spec.h.label(),
        "r": spec.r.as_ref().map(NFunction::label),
    })
}

const EVIDENCE_HEADER: &str =
    "verdict,superlinearity,h_much_smaller_than_r,admissibility_integral,integral_outcome,integral_value,integral_slope,nonexistence,conflict";

fn evidence_fields(report: &ClassificationReport) -> String {
    let passed = |name: &str| report.check(name).map_or(String::new(), |c| c.passed.to_string());
    let (outcome, value, slope) = match &report.integral {
        Some(i) => (
            serde_json::to_value(i.outcome).unwrap().as_str().unwrap_or("").to_string(),
            i.value.map_or(String::new(), num),
            num(i.slope),
        ),
        None => Default::default(),
    };
    format!(
        "{:?},{},{},{},{outcome},{value},{slope},{},{}",
        report.verdict,
        passed(CHECK_SUPERLINEAR),
        passed(CHECK_H_BELOW_R),
        passed(CHECK_INTEGRAL),
        passed(CHECK_NONEXISTENCE),
        report.conflict
    )
}

fn csv_label(s: &str) -> String {
    format!("\"{s}\"")
}

pub fn classify_cmd(cfg: &RunConfig, format: Format) -> Result<String, Failure> {
    let spec = cfg.problem_spec()?;
    let report = classify(&spec);
    Ok(match format {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("report serializes");
            v["spec"] = spec_json(&spec);
            to_json(&v)
        }
        Format::Csv => format!(
            "n,alpha,g,h,r,{EVIDENCE_HEADER}\n{},{},{},{},{},{}\n",
            spec.n,
            num(spec.alpha),
            csv_label(spec.g.label()),
            csv_label(spec.h.label()),
            spec.r.as_ref().map_or(String::new(), |r| csv_label(r.label())),
            evidence_fields(&report)
        ),
    })
}

/// One classification per `(alpha, q)` point with `H = t^q`, rows in grid
/// order whatever the thread count.
pub fn sweep_cmd(cfg: &RunConfig, parallel: bool) -> Result<String, Failure> {
    let n = cfg.spec.n.ok_or_else(|| Failure::config("spec.n is required"))?;
    let g_spec = cfg.spec.g.ok_or_else(|| Failure::config("spec.g is required"))?;
    let g = make_catalog(&g_spec).map_err(|e| Failure::config(format!("spec.g: {e}")))?;
    let r = cfg
        .spec
        .r
        .map(|r| make_catalog(&r).map_err(|e| Failure::config(format!("spec.r: {e}"))))
        .transpose()?;
    let alpha = cfg.sweep.alpha.unwrap_or(Axis { min: cfg.spec.alpha.unwrap_or(0.0), max: cfg.spec.alpha.unwrap_or(0.0), count: 1 });
    let q = cfg.sweep.q.ok_or_else(|| Failure::config("sweep.q is required"))?;
    let points: Vec<(f64, f64)> = alpha
        .points()
        .into_iter()
        .flat_map(|a| q.points().into_iter().map(move |q| (a, q)))
        .collect();
    let row = |(i, &(a, q)): (usize, &(f64, f64))| -> Result<String, Failure> {
        let h = make_catalog(&CatalogSpec::Power { p: q, c: 1.0 })
            .map_err(|e| Failure::config(format!("sweep.q = {q}: {e}")))?;
        let spec = ProblemSpec::new(n, a, g.clone(), h, r.clone())
            .map_err(|e| Failure::config(format!("sweep point {i}: {e}")))?;
        Ok(format!("{i},{},{},{}\n", num(a), num(q), evidence_fields(&classify(&spec))))
    };
    let rows: Vec<Result<String, Failure>> = if parallel {
        points.par_iter().enumerate().map(row).collect()
    } else {
        points.iter().enumerate().map(row).collect()
    };
    let mut out = format!("index,alpha,q,{EVIDENCE_HEADER}\n");
    for r in rows {
        out.push_str(&r?);
    }
    Ok(out)
}

pub struct SolveOptions<'a> {
    pub method: Method,
    pub force: bool,
    pub out: Option<&'a Path>,
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

pub fn solve_cmd(cfg: &RunConfig, opts: &SolveOptions) -> Result<String, Failure> {
    let spec = cfg.problem_spec()?;
    cfg.validate_solver()?;
    let report = classify(&spec);
    if !opts.force {
        if report.verdict == Verdict::NonexistenceGuaranteed {
            let gp = spec.g_indices().p_plus;
            let nf = spec.n as f64;
            return Err(Failure::refused(format!(
                "refusing to solve: nonexistence criterion q- >= n(alpha+p+)/(n-p+) holds \
                 ({} >= {}), so no positive solution exists; pass --force to run anyway",
                spec.h_indices().p_minus,
                nf * (spec.alpha + gp) / (nf - gp)
            )));
        }
        if report.check(CHECK_SUPERLINEAR).is_some_and(|c| !c.passed) {
            return Err(Failure::refused(
                "refusing to solve: p+ < q- fails, so the mountain pass geometry is not available; \
                 pass --force to run anyway",
            ));
        }
    }
    let m = cfg.solve.grid_size.unwrap_or(256);
    let grid = RadialGrid::graded(m)?;
    let problem = RadialProblem::from(&spec);
    let mut summary = json!({
        "method": opts.method,
        "spec": spec_json(&spec),
        "verdict": report.verdict,
        "grid_size": m,
    });
    let mut telemetry = None;
    let profile = match opts.method {
        Method::Shooting => {
            let sol = solve_shooting(&problem, &grid, cfg.solve.d0_range.unwrap_or((1e-3, 1e3)))?;
            summary["d0"] = json!(sol.d0);
            summary["brackets"] = json!(sol.brackets);
            summary["energy"] = json!(energy(&problem, &sol.profile)?);
            sol.profile
        }
        Method::MountainPass => {
            let res = mountain_pass_solve(&problem, &grid, &cfg.solver)?;
            let geo = geometry_check(&problem, &grid, 0.1, 64, cfg.solver.seed)?;
            summary["energy"] = json!(res.energy);
            summary["iterations"] = json!(res.iterations);
            summary["eps_sensitivity"] = json!(res.eps_sensitivity);
            summary["geometry"] = json!({"radius": 0.1, "sigma": geo.sigma, "passed": geo.passed});
            telemetry = Some(res.telemetry_csv());
            res.profile
        }
    };
    summary["residual"] = json!(weak_residual(&problem, &profile)?);
    summary["sup_norm"] = json!(profile.sup_norm());
    summary["pohozaev_residual"] = json!(pohozaev_residual(&problem, &profile)?.residual);
    if let Some(dir) = opts.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        write(&dir.join("profile.csv"), &profile.to_csv())?;
        let mut files = vec!["profile.csv", "summary.json"];
        if let Some(t) = &telemetry {
            write(&dir.join("telemetry.csv"), t)?;
            files.push("telemetry.csv");
        }
        summary["files"] = json!(files);
        write(&dir.join("summary.json"), &to_json(&summary))?;
    }
    Ok(to_json(&summary))
}

pub const ALL_CHECKS: [&str; 4] = ["pohozaev", "strauss", "residual", "levels"];

/// Right-hand side for `verify`: the Hénon source of the spec or a constant.
pub fn parse_source(text: &str, spec: &ProblemSpec) -> Result<Source, Failure> {
    if text == "henon" {
        return Ok(RadialProblem::from(spec).source);
    }
    if let Some(c) = text.strip_prefix("constant:") {
        let c: f64 = c
            .parse()
            .map_err(|_| Failure::config(format!("--source: cannot parse `{c}` as a number")))?;
        return Ok(Source::Constant(c));
    }
    Err(Failure::config(format!("--source: expected `henon` or `constant:<value>`, got `{text}`")))
}

pub fn load_profile(path: &Path) -> Result<RadialProfile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        RadialProfile::from_json(&v)
    } else {
        RadialProfile::from_csv(&text)
    };
    parsed.map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

pub fn verify_cmd(cfg: &RunConfig, profile: &RadialProfile, checks: &[String], source: &str) -> Result<String, Failure> {
    let spec = cfg.problem_spec()?;
    let problem = RadialProblem::new(spec.n, spec.g.clone(), parse_source(source, &spec)?);
    for c in checks {
        if !ALL_CHECKS.contains(&c.as_str()) {
            return Err(Failure::config(format!("unknown check `{c}`; expected one of {ALL_CHECKS:?}")));
        }
    }
    let wanted = |name: &str| checks.is_empty() || checks.iter().any(|c| c == name);
    let mut out = json!({"spec": spec_json(&spec), "source": source, "nodes": profile.nodes().len()});
    if wanted("pohozaev") {
        out["pohozaev"] = serde_json::to_value(pohozaev_residual(&problem, profile)?).unwrap();
    }
    if wanted("strauss") {
        let s = strauss_check(&problem, profile)?;
        out["strauss"] = json!({"c_emp": s.c_emp, "gradient_norm": s.gradient_norm});
    }
    if wanted("residual") {
        out["residual"] = json!(weak_residual(&problem, profile)?);
    }
    if wanted("levels") {
        out["levels"] = json!(degiorgi_levels(&spec, profile, 20));
        out["boundedness"] = serde_json::to_value(boundedness_report(&spec, profile)).unwrap();
    }
    Ok(to_json(&out))
}
