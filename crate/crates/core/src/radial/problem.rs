use std::fmt;
use std::sync::Arc;

use crate::admissibility::ProblemSpec;
use crate::nfunction::NFunction;

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User-supplied right-hand side `f(r, u)` with its primitive
/// `F(r, u) = ∫_0^u f(r, s) ds` and `x·∇_x F(r, u)`.
#[derive(Clone)]
pub struct CustomSource {
    pub f: Field,
    pub primitive: Field,
    pub x_grad_primitive: Field,
    /// `∂f/∂u`; finite differences are used when absent.
    pub df: Option<Field>,
}

#[derive(Clone)]
pub enum Source {
    /// `f = r^α h(u₊)`.
    Henon { alpha: f64, h: NFunction },
    /// `f ≡ c`.
    Constant(f64),
    Custom(CustomSource),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Henon { alpha, h } => write!(f, "Henon {{ alpha: {alpha}, h: {} }}", h.label()),
            Source::Constant(c) => write!(f, "Constant({c})"),
            Source::Custom(_) => f.write_str("Custom"),
        }
    }
}

fn weight(r: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        r.powf(alpha)
    }
}

impl Source {
    pub fn f(&self, r: f64, u: f64) -> f64 {
        match self {
            Source::Henon { alpha, h } => weight(r, *alpha) * h.derivative(u.max(0.0)),
            Source::Constant(c) => *c,
            Source::Custom(c) => (c.f)(r, u),
        }
    }

    pub fn df(&self, r: f64, u: f64) -> f64 {
        match self {
            Source::Henon { alpha, h } => {
                if u <= 0.0 {
                    return 0.0;
                }
                let d2 = h.second_derivative(u).unwrap_or_else(|| {
                    let e = 1e-6 * u.max(1e-8);
                    (h.derivative(u + e) - h.derivative((u - e).max(0.0))) / (u + e - (u - e).max(0.0))
                });
                weight(r, *alpha) * d2
            }
            Source::Constant(_) => 0.0,
            Source::Custom(c) => match &c.df {
                Some(df) => df(r, u),
                None => {
                    let e = 1e-6 * u.abs().max(1e-3);
                    ((c.f)(r, u + e) - (c.f)(r, u - e)) / (2.0 * e)
                }
            },
        }
    }

    pub fn primitive(&self, r: f64, u: f64) -> f64 {
        match self {
            Source::Henon { alpha, h } => weight(r, *alpha) * h.value(u.max(0.0)),
            Source::Constant(c) => c * u,
            Source::Custom(c) => (c.primitive)(r, u),
        }
    }

    pub fn x_grad_primitive(&self, r: f64, u: f64) -> f64 {
        match self {
            Source::Henon { alpha, h } => alpha * weight(r, *alpha) * h.value(u.max(0.0)),
            Source::Constant(_) => 0.0,
            Source::Custom(c) => (c.x_grad_primitive)(r, u),
        }
    }
}

/// `-Δ_g u = f(|x|, u)` in the unit ball of `R^n`, `u = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub n: u32,
    pub g: NFunction,
    pub source: Source,
}

impl RadialProblem {
    pub fn new(n: u32, g: NFunction, source: Source) -> Self {
        Self { n, g, source }
    }

    /// Surface area of the unit sphere in `R^n`.
    pub fn omega(&self) -> f64 {
        sphere_area(self.n)
    }
}

impl From<&ProblemSpec> for RadialProblem {
    fn from(spec: &ProblemSpec) -> Self {
        Self {
            n: spec.n,
            g: spec.g.clone(),
            source: Source::Henon {
                alpha: spec.alpha,
                h: spec.h.clone(),
            },
        }
    }
}

/// `2 π^{n/2} / Γ(n/2)`, by the recursion `ω_{n+2} = 2π ω_n / n`.
pub fn sphere_area(n: u32) -> f64 {
    use std::f64::consts::PI;
    let (mut w, mut k) = if n % 2 == 0 { (2.0 * PI, 2) } else { (2.0, 1) };
    while k < n {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}
