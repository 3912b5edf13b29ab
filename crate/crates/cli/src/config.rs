use std::path::Path;

use henon_core::admissibility::ProblemSpec;
use henon_core::nfunction::{make_catalog, CatalogSpec, NFunction};
use henon_core::radial::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Shooting,
    MountainPass,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub n: Option<u32>,
    pub alpha: Option<f64>,
    pub g: Option<CatalogSpec>,
    pub h: Option<CatalogSpec>,
    pub r: Option<CatalogSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub method: Option<Method>,
    pub grid_size: Option<usize>,
    /// Scan interval for the shooting parameter `u(0)`.
    pub d0_range: Option<(f64, f64)>,
    pub force: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }

    pub fn parse(text: &str, field: &str) -> Result<Self, Failure> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let bad = || Failure::config(format!("{field}: expected `min,max,count`, got `{text}`"));
        let [a, b, c] = parts.as_slice() else {
            return Err(bad());
        };
        let axis = Axis {
            min: a.parse().map_err(|_| bad())?,
            max: b.parse().map_err(|_| bad())?,
            count: c.parse().map_err(|_| bad())?,
        };
        axis.validate(field)?;
        Ok(axis)
    }

    fn validate(&self, field: &str) -> Result<(), Failure> {
        if self.count == 0 || !self.min.is_finite() || !self.max.is_finite() || self.max < self.min {
            return Err(Failure::config(format!(
                "{field}: need finite min <= max and count >= 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha: Option<Axis>,
    /// Exponent of `H = t^q`.
    pub q: Option<Axis>,
}

/// Everything a command may read, from a TOML document and then flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub spec: SpecConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        let de = toml::Deserializer::parse(text).map_err(|e| Failure::config(format!("config: {e}")))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Failure::config(format!("config field `{path}`: {}", e.into_inner().message().trim()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, Failure> {
        let s = &self.spec;
        let n = s.n.ok_or_else(|| Failure::config("spec.n is required"))?;
        let alpha = s.alpha.unwrap_or(0.0);
        let g = build(s.g.as_ref(), "spec.g")?.ok_or_else(|| Failure::config("spec.g is required"))?;
        let h = build(s.h.as_ref(), "spec.h")?.ok_or_else(|| Failure::config("spec.h is required"))?;
        let r = build(s.r.as_ref(), "spec.r")?;
        ProblemSpec::new(n, alpha, g, h, r).map_err(|e| Failure::config(format!("spec: {e}")))
    }

    pub fn validate_solver(&self) -> Result<(), Failure> {
        self.solver
            .validate()
            .map_err(|e| Failure::config(e.to_string()))
    }
}

fn build(spec: Option<&CatalogSpec>, field: &str) -> Result<Option<NFunction>, Failure> {
    spec.map(|c| make_catalog(c).map_err(|e| Failure::config(format!("{field}: {e}"))))
        .transpose()
}

pub fn parse_catalog(text: &str, field: &str) -> Result<CatalogSpec, Failure> {
    text.parse()
        .map_err(|e| Failure::config(format!("{field}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 7

[spec]
n = 3
alpha = 1.0
g = { family = "power", p = 2, c = 0.5 }
h = { family = "power", p = 4, c = 0.25 }

[solver]
residual_tol = 1e-8

[solve]
method = "mountain-pass"
grid_size = 128

[sweep]
alpha = { min = 0, max = 4, count = 20 }
q = { min = 2, max = 12, count = 20 }
"#;

    #[test]
    fn full_document_parses() {
        let c = RunConfig::from_toml(FULL).unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.solve.method, Some(Method::MountainPass));
        assert_eq!(c.solver.residual_tol, 1e-8);
        assert_eq!(c.solver.path_points, SolverConfig::default().path_points);
        let spec = c.problem_spec().unwrap();
        assert_eq!((spec.n, spec.alpha), (3, 1.0));
        assert_eq!(c.sweep.q.unwrap().points().len(), 20);
    }

    #[test]
    fn errors_carry_field_paths() {
        let e = RunConfig::from_toml("[spec]\nn = 3\ng = { family = \"power\", p = \"two\" }\n").unwrap_err();
        assert!(e.message.contains("spec.g"), "{}", e.message);
        let e = RunConfig::from_toml("[solver]\npath_pts = 3\n").unwrap_err();
        assert!(e.message.contains("solver"), "{}", e.message);
        let c = RunConfig::from_toml("[spec]\nn = 3\ng = { family = \"power\", p = 0.5 }\nh = { family = \"power\", p = 4 }\n").unwrap();
        let e = c.problem_spec().unwrap_err();
        assert!(e.message.starts_with("spec.g:"), "{}", e.message);
        assert_eq!(e.code, 2);
    }

    #[test]
    fn axis_points() {
        let a = Axis::parse("0,4,5", "alpha").unwrap();
        assert_eq!(a.points(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(Axis::parse("2,2,1", "q").unwrap().points(), vec![2.0]);
        assert!(Axis::parse("0,4", "q").is_err());
        assert!(Axis::parse("4,0,3", "q").is_err());
    }
}
