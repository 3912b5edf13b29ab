use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::grid::RadialGrid;
use crate::error::{Error, Result};

/// Radial function on a grid: nodal values `u_i` and derivatives `u'_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

/// Three-point derivative estimates: symmetric zero at the origin, the
/// non-uniform central formula inside and a one-sided formula at `r = 1`.
pub fn reconstruct_derivatives(r: &[f64], u: &[f64]) -> Vec<f64> {
    let m = r.len() - 1;
    let mut d = vec![0.0; m + 1];
    for i in 1..m {
        let (h1, h2) = (r[i] - r[i - 1], r[i + 1] - r[i]);
        d[i] = -h2 / (h1 * (h1 + h2)) * u[i - 1]
            + (h2 - h1) / (h1 * h2) * u[i]
            + h1 / (h2 * (h1 + h2)) * u[i + 1];
    }
    let (h1, h2) = (r[m] - r[m - 1], r[m - 1] - r[m - 2]);
    d[m] = (2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[m] - (h1 + h2) / (h1 * h2) * u[m - 1]
        + h1 / (h2 * (h1 + h2)) * u[m - 2];
    d
}

impl RadialProfile {
    /// Profile with `u(1) = 0` enforced.
    pub fn new(grid: RadialGrid, values: Vec<f64>, derivatives: Vec<f64>) -> Result<Self> {
        let p = Self::unconstrained(grid, values, derivatives)?;
        let last = *p.values.last().unwrap();
        if last.abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "Dirichlet condition violated: u(1) = {last:e}"
            )));
        }
        Ok(p)
    }

    /// Profile without the boundary condition, for test functions such as
    /// constants.
    pub fn unconstrained(grid: RadialGrid, values: Vec<f64>, derivatives: Vec<f64>) -> Result<Self> {
        let m = grid.nodes().len();
        if values.len() != m || derivatives.len() != m {
            return Err(Error::InvalidInput(format!(
                "profile needs {m} values and derivatives, got {} and {}",
                values.len(),
                derivatives.len()
            )));
        }
        if let Some(i) = values
            .iter()
            .chain(&derivatives)
            .position(|v| !v.is_finite())
        {
            return Err(Error::NonFinite {
                at: grid.nodes()[i % m],
            });
        }
        Ok(Self {
            grid,
            values,
            derivatives,
        })
    }

    /// Values with reconstructed derivatives.
    pub fn from_values(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes().len() {
            return Err(Error::InvalidInput("value count does not match grid".into()));
        }
        let d = reconstruct_derivatives(grid.nodes(), &values);
        Self::new(grid, values, d)
    }

    pub fn from_fn(grid: RadialGrid, u: impl Fn(f64) -> f64, du: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| u(r)).collect();
        let derivatives = grid.nodes().iter().map(|&r| du(r)).collect();
        Self::new(grid, values, derivatives)
    }

    pub fn zero(grid: RadialGrid) -> Self {
        let m = grid.nodes().len();
        Self {
            grid,
            values: vec![0.0; m],
            derivatives: vec![0.0; m],
        }
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    /// Slope of the piecewise-linear interpolant on panel `k`.
    pub fn slope(&self, k: usize) -> f64 {
        (self.values[k + 1] - self.values[k]) / self.grid.width(k)
    }

    pub fn linear_at(&self, r: f64) -> f64 {
        let k = self.grid.locate(r);
        let t = (r - self.grid.nodes()[k]) / self.grid.width(k);
        self.values[k] * (1.0 - t) + self.values[k + 1] * t
    }

    /// Cubic Hermite value and derivative at `r`.
    pub fn hermite_at(&self, r: f64) -> (f64, f64) {
        let k = self.grid.locate(r);
        let h = self.grid.width(k);
        let t = (r - self.grid.nodes()[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.derivatives[k] * h, self.derivatives[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        let dv = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv / h)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            derivatives: self.derivatives.iter().map(|v| c * v).collect(),
        }
    }

    /// Same grid, new values, derivatives reconstructed.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        let d = reconstruct_derivatives(self.nodes(), &values);
        Self {
            grid: self.grid.clone(),
            values,
            derivatives: d,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,u,du\n");
        for ((r, u), d) in self.nodes().iter().zip(&self.values).zip(&self.derivatives) {
            s.push_str(&format!("{r:.16e},{u:.16e},{d:.16e}\n"));
        }
        s
    }

    /// Parse the `r,u,du` CSV form. The Dirichlet condition is not enforced
    /// here; callers decide.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim().replace(' ', "") == "r,u,du" => {}
            Some((i, h)) => {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected header `r,u,du`, found `{h}`",
                    i + 1
                )))
            }
            None => return Err(Error::InvalidInput("empty profile CSV".into())),
        }
        let (mut r, mut u, mut d) = (Vec::new(), Vec::new(), Vec::new());
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected 3 fields, found {}",
                    i + 1,
                    fields.len()
                )));
            }
            let mut parsed = [0.0; 3];
            for (slot, f) in parsed.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|_| {
                    Error::InvalidInput(format!("line {}: cannot parse `{f}` as a number", i + 1))
                })?;
            }
            r.push(parsed[0]);
            u.push(parsed[1]);
            d.push(parsed[2]);
        }
        let grid = RadialGrid::from_nodes(r)?;
        Self::unconstrained(grid, u, d)
    }

    pub fn to_json(&self, meta: Value) -> Value {
        serde_json::json!({
            "grid": self.nodes(),
            "values": self.values,
            "derivatives": self.derivatives,
            "meta": meta,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let doc: ProfileDoc = serde_json::from_value(v.clone())
            .map_err(|e| Error::InvalidInput(format!("profile JSON: {e}")))?;
        let grid = RadialGrid::from_nodes(doc.grid)?;
        Self::unconstrained(grid, doc.values, doc.derivatives)
    }
}

#[derive(Deserialize, Serialize)]
struct ProfileDoc {
    grid: Vec<f64>,
    values: Vec<f64>,
    derivatives: Vec<f64>,
}
