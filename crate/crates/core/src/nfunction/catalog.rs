use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Growth, IndexPair, NFunction};
use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

/// Catalog family plus parameters, addressable from config files as
/// `{ family = "power_sum", p = 2, q = 3 }` and from the command line as
/// `power_sum:p=2,q=3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogSpec {
    /// `c t^p`
    Power {
        p: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// `t^p/p + t^q/q`
    PowerSum { p: f64, q: f64 },
    /// `t^p ln^r(e - 1 + t^q)`
    LogPerturbed { p: f64, q: f64, r: f64 },
    /// `t^p (ln ln(e^e - 1 + t))^s`
    Loglog { p: f64, s: f64 },
}

impl CatalogSpec {
    pub fn family(&self) -> &'static str {
        match self {
            Self::Power { .. } => "power",
            Self::PowerSum { .. } => "power_sum",
            Self::LogPerturbed { .. } => "log_perturbed",
            Self::Loglog { .. } => "loglog",
        }
    }

    /// Positional form: `power [p, c?]`, `power_sum [p, q]`,
    /// `log_perturbed [p, q, r]`, `loglog [p, s]`.
    pub fn from_params(name: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "{name} expects {n} parameters, got {}",
                    params.len()
                )))
            }
        };
        match name {
            "power" => match params {
                [p] => Ok(Self::Power { p: *p, c: 1.0 }),
                [p, c] => Ok(Self::Power { p: *p, c: *c }),
                _ => Err(Error::InvalidInput(format!(
                    "power expects 1 or 2 parameters, got {}",
                    params.len()
                ))),
            },
            "power_sum" => {
                need(2)?;
                Ok(Self::PowerSum {
                    p: params[0],
                    q: params[1],
                })
            }
            "log_perturbed" => {
                need(3)?;
                Ok(Self::LogPerturbed {
                    p: params[0],
                    q: params[1],
                    r: params[2],
                })
            }
            "loglog" => {
                need(2)?;
                Ok(Self::Loglog {
                    p: params[0],
                    s: params[1],
                })
            }
            other => Err(Error::InvalidInput(format!("unknown family `{other}`"))),
        }
    }

    fn check(&self) -> Result<()> {
        let fail = |c: &str| {
            Err(Error::InvalidParameter {
                family: self.family(),
                constraint: c.to_string(),
            })
        };
        let finite = match *self {
            Self::Power { p, c } => p.is_finite() && c.is_finite(),
            Self::PowerSum { p, q } => p.is_finite() && q.is_finite(),
            Self::LogPerturbed { p, q, r } => p.is_finite() && q.is_finite() && r.is_finite(),
            Self::Loglog { p, s } => p.is_finite() && s.is_finite(),
        };
        if !finite {
            return fail("parameters must be finite");
        }
        match *self {
            Self::Power { p, c } => {
                if !(p > 1.0) {
                    return fail("p > 1");
                }
                if !(c > 0.0) {
                    return fail("c > 0");
                }
            }
            Self::PowerSum { p, q } => {
                if !(p > 1.0) {
                    return fail("1 < p");
                }
                if !(q > p) {
                    return fail("p < q");
                }
            }
            Self::LogPerturbed { p, q, r } => {
                if !(q > 0.0) || !(r > 0.0) || !(p > 0.0) {
                    return fail("p, q, r > 0");
                }
                if !(p + q * r > 1.0) {
                    return fail("p + q r > 1");
                }
                if !(p > 1.0) {
                    return fail("p > 1 (lower index p- = p must exceed 1)");
                }
            }
            Self::Loglog { p, s } => {
                if !(p > 1.0) {
                    return fail("p > 1");
                }
                if !(s > 0.0) {
                    return fail("s > 0");
                }
            }
        }
        Ok(())
    }

    /// Index pair stated for the family.
    pub fn index_pair(&self) -> Result<IndexPair> {
        match *self {
            Self::Power { p, .. } => IndexPair::analytic(p, p),
            Self::PowerSum { p, q } => IndexPair::analytic(p, q),
            Self::LogPerturbed { p, q, r } => IndexPair::analytic(p, p + q * r),
            Self::Loglog { p, s } => IndexPair::analytic(p, p + s),
        }
    }
}

impl fmt::Display for CatalogSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Power { p, c } if c == 1.0 => write!(f, "power:p={p}"),
            Self::Power { p, c } => write!(f, "power:p={p},c={c}"),
            Self::PowerSum { p, q } => write!(f, "power_sum:p={p},q={q}"),
            Self::LogPerturbed { p, q, r } => write!(f, "log_perturbed:p={p},q={q},r={r}"),
            Self::Loglog { p, s } => write!(f, "loglog:p={p},s={s}"),
        }
    }
}

impl FromStr for CatalogSpec {
    type Err = Error;

    /// `family:key=value,key=value`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut p = None;
        let mut q = None;
        let mut r = None;
        let mut sv = None;
        let mut c = None;
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("`{v}` is not a number")))?;
            let slot = match k.trim() {
                "p" => &mut p,
                "q" => &mut q,
                "r" => &mut r,
                "s" => &mut sv,
                "c" => &mut c,
                other => {
                    return Err(Error::InvalidInput(format!("unknown parameter `{other}`")))
                }
            };
            *slot = Some(v);
        }
        let req = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::InvalidInput(format!("{family} requires parameter `{name}`")))
        };
        let unexpected = |allowed: &[&str]| -> Result<()> {
            for (name, v) in [("p", p), ("q", q), ("r", r), ("s", sv), ("c", c)] {
                if v.is_some() && !allowed.contains(&name) {
                    return Err(Error::InvalidInput(format!(
                        "{family} does not take parameter `{name}`"
                    )));
                }
            }
            Ok(())
        };
        match family.trim() {
            "power" => {
                unexpected(&["p", "c"])?;
                Ok(Self::Power {
                    p: req("p", p)?,
                    c: c.unwrap_or(1.0),
                })
            }
            "power_sum" => {
                unexpected(&["p", "q"])?;
                Ok(Self::PowerSum {
                    p: req("p", p)?,
                    q: req("q", q)?,
                })
            }
            "log_perturbed" => {
                unexpected(&["p", "q", "r"])?;
                Ok(Self::LogPerturbed {
                    p: req("p", p)?,
                    q: req("q", q)?,
                    r: req("r", r)?,
                })
            }
            "loglog" => {
                unexpected(&["p", "s"])?;
                Ok(Self::Loglog {
                    p: req("p", p)?,
                    s: req("s", sv)?,
                })
            }
            other => Err(Error::InvalidInput(format!("unknown family `{other}`"))),
        }
    }
}

/// Build a catalog N-function with closed-form `G`, `g`, `g'` and the
/// family's index pair attached.
pub fn make_catalog(spec: &CatalogSpec) -> Result<NFunction> {
    spec.check()?;
    let growth: Arc<dyn Growth> = match *spec {
        CatalogSpec::Power { p, c } => Arc::new(Power { p, c }),
        CatalogSpec::PowerSum { p, q } => Arc::new(PowerSum { p, q }),
        CatalogSpec::LogPerturbed { p, q, r } => Arc::new(LogPerturbed { p, q, r }),
        CatalogSpec::Loglog { p, s } => Arc::new(Loglog { p, s }),
    };
    Ok(NFunction::new(spec.to_string(), growth).with_indices(spec.index_pair()?))
}

#[derive(Debug)]
struct Power {
    p: f64,
    c: f64,
}

impl Growth for Power {
    fn value(&self, t: f64) -> f64 {
        self.c * t.powf(self.p)
    }
    fn derivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        self.c * self.p * t.powf(self.p - 1.0)
    }
    fn second_derivative(&self, t: f64) -> Option<f64> {
        Some(self.c * self.p * (self.p - 1.0) * t.powf(self.p - 2.0))
    }
}

#[derive(Debug)]
struct PowerSum {
    p: f64,
    q: f64,
}

impl Growth for PowerSum {
    fn value(&self, t: f64) -> f64 {
        t.powf(self.p) / self.p + t.powf(self.q) / self.q
    }
    fn derivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        t.powf(self.p - 1.0) + t.powf(self.q - 1.0)
    }
    fn second_derivative(&self, t: f64) -> Option<f64> {
        Some((self.p - 1.0) * t.powf(self.p - 2.0) + (self.q - 1.0) * t.powf(self.q - 2.0))
    }
}

#[derive(Debug)]
struct LogPerturbed {
    p: f64,
    q: f64,
    r: f64,
}

impl LogPerturbed {
    // E = e - 1 + t^q, L = ln E
    fn parts(&self, t: f64) -> (f64, f64, f64) {
        let tq = t.powf(self.q);
        let big_e = E - 1.0 + tq;
        (tq, big_e, big_e.ln())
    }
}

impl Growth for LogPerturbed {
    fn value(&self, t: f64) -> f64 {
        let (_, _, l) = self.parts(t);
        t.powf(self.p) * l.powf(self.r)
    }
    fn derivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let (tq, big_e, l) = self.parts(t);
        let a = self.p * l + self.r * self.q * tq / big_e;
        t.powf(self.p - 1.0) * l.powf(self.r - 1.0) * a
    }
    fn second_derivative(&self, t: f64) -> Option<f64> {
        let (p, q, r) = (self.p, self.q, self.r);
        let (tq, big_e, l) = self.parts(t);
        let a = p * l + r * q * tq / big_e;
        let dl = q * t.powf(q - 1.0) / big_e;
        let da = p * dl + r * q * q * t.powf(q - 1.0) * (E - 1.0) / (big_e * big_e);
        let tp1 = t.powf(p - 1.0);
        Some(
            (p - 1.0) * t.powf(p - 2.0) * l.powf(r - 1.0) * a
                + tp1 * (r - 1.0) * l.powf(r - 2.0) * dl * a
                + tp1 * l.powf(r - 1.0) * da,
        )
    }
}

#[derive(Debug)]
struct Loglog {
    p: f64,
    s: f64,
}

impl Loglog {
    const SHIFT: f64 = 14.154_262_241_479_262; // e^e - 1

    // M = ln ln(c + t), M' and M''
    fn parts(&self, t: f64) -> (f64, f64, f64) {
        let x = Self::SHIFT + t;
        let lx = x.ln();
        let m = lx.ln();
        let dm = 1.0 / (x * lx);
        let ddm = -(lx + 1.0) / (x * lx).powi(2);
        (m, dm, ddm)
    }
}

impl Growth for Loglog {
    fn value(&self, t: f64) -> f64 {
        let (m, _, _) = self.parts(t);
        t.powf(self.p) * m.powf(self.s)
    }
    fn derivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let (m, dm, _) = self.parts(t);
        let b = self.p * m + self.s * t * dm;
        t.powf(self.p - 1.0) * m.powf(self.s - 1.0) * b
    }
    fn second_derivative(&self, t: f64) -> Option<f64> {
        let (p, s) = (self.p, self.s);
        let (m, dm, ddm) = self.parts(t);
        let b = p * m + s * t * dm;
        let db = p * dm + s * dm + s * t * ddm;
        let tp1 = t.powf(p - 1.0);
        Some(
            (p - 1.0) * t.powf(p - 2.0) * m.powf(s - 1.0) * b
                + tp1 * (s - 1.0) * m.powf(s - 2.0) * dm * b
                + tp1 * m.powf(s - 1.0) * db,
        )
    }
}
