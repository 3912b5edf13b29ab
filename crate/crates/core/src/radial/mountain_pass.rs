//! Numerical mountain pass on the discrete energy.
//!
//! Paths are rays `t ↦ t v` from 0 through `e = t_e v`, where `J(e) ≤ 0`. Each
//! iteration locates the path maximizer `w = t* v`, moves it along the
//! negative H¹-preconditioned gradient and accepts the move only when the
//! new ray maximum is lower, halving the step otherwise. Near convergence a
//! Newton iteration on the tridiagonal Hessian may finish the job.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::energy::{
    energy_eps, energy_gradient_eps, energy_hessian, gradient_norm, panel_weight,
    solve_tridiagonal, weak_residual_eps,
};
use super::grid::RadialGrid;
use super::problem::RadialProblem;
use super::profile::RadialProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub epsilon_reg: f64,
    pub descent_step: f64,
    pub path_points: usize,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub newton_polish: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon_reg: 1e-8,
            descent_step: 1.0,
            path_points: 16,
            max_iters: 2000,
            residual_tol: 1e-7,
            newton_polish: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("epsilon_reg", self.epsilon_reg),
            ("descent_step", self.descent_step),
            ("residual_tol", self.residual_tol),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("solver.{name} = {v} must be > 0")));
            }
        }
        if self.path_points < 8 {
            return Err(Error::InvalidInput(format!(
                "solver.path_points = {} must be >= 8",
                self.path_points
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("solver.max_iters must be > 0".into()));
        }
        Ok(())
    }
}

pub const MAX_DOUBLINGS: usize = 60;

/// Double `t` from 1 until `J(t u0) ≤ 0`.
pub fn find_e(p: &RadialProblem, u0: &RadialProfile) -> Result<(RadialProfile, f64)> {
    find_e_eps(p, u0, 1e-8)
}

fn find_e_eps(p: &RadialProblem, u0: &RadialProfile, eps: f64) -> Result<(RadialProfile, f64)> {
    let mut t = 1.0;
    for _ in 0..=MAX_DOUBLINGS {
        let e = u0.scaled(t);
        if energy_eps(p, &e, eps)? <= 0.0 {
            return Ok((e, t));
        }
        t *= 2.0;
    }
    Err(Error::NoCrossover {
        doublings: MAX_DOUBLINGS,
    })
}

/// `u / ‖u'‖_{L^G(B)}`.
pub fn normalize(p: &RadialProblem, u: &RadialProfile) -> Result<RadialProfile> {
    let norm = gradient_norm(p, u)?;
    if !(norm > 0.0) {
        return Err(Error::InvalidInput("cannot normalize a constant profile".into()));
    }
    Ok(u.scaled(1.0 / norm))
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if (b - a) <= 1e-13 * b.abs() {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Maximum of `J` on the ray through `v`: `(t*, J(t* v), t_e)`.
fn ray_max(p: &RadialProblem, v: &RadialProfile, points: usize, eps: f64) -> Result<(f64, f64, f64)> {
    let (_, t_end) = find_e_eps(p, v, eps).map_err(|e| match e {
        Error::NoCrossover { .. } => Error::PathCollapse { index: points - 1 },
        other => other,
    })?;
    // J > 0 near 0 under superlinearity, so a maximum at the first node
    // means the sampling is too coarse: zoom towards the origin.
    let mut t_end = t_end;
    for _ in 0..40 {
        let ts: Vec<f64> = (0..points).map(|j| t_end * j as f64 / (points - 1) as f64).collect();
        let mut best = 0;
        let mut best_val = 0.0;
        for (j, &t) in ts.iter().enumerate().skip(1) {
            let e = energy_eps(p, &v.scaled(t), eps)?;
            if e > best_val {
                best = j;
                best_val = e;
            }
        }
        if best == points - 1 {
            return Err(Error::PathCollapse { index: best });
        }
        if best > 0 {
            let (t, val) = golden_max(|t| energy_eps(p, &v.scaled(t), eps), ts[best - 1], ts[best + 1])?;
            return Ok((t, val, t_end));
        }
        t_end = ts[1];
    }
    Err(Error::PathCollapse { index: 0 })
}

/// H¹-seminorm stiffness on the free nodes, weighted like the energy.
fn stiffness(p: &RadialProblem, grid: &RadialGrid) -> (Vec<f64>, Vec<f64>) {
    let r = grid.nodes();
    let m = grid.panels();
    let om = p.omega();
    let mut diag = vec![0.0; m + 1];
    let mut off = vec![0.0; m];
    for k in 0..m {
        let h = grid.width(k);
        let a = om * panel_weight(r[k], r[k + 1], p.n) / (h * h);
        diag[k] += a;
        diag[k + 1] += a;
        off[k] -= a;
    }
    diag.truncate(m);
    off.truncate(m - 1);
    (off, diag)
}

fn with_free(u: &RadialProfile, free: &[f64]) -> RadialProfile {
    let mut v = free.to_vec();
    v.push(0.0);
    u.with_values(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub iteration: usize,
    pub phase: String,
    pub path_max: f64,
    pub residual: f64,
    pub step: f64,
    pub t_star: f64,
}

#[derive(Debug, Clone)]
pub struct MountainPassResult {
    pub profile: RadialProfile,
    /// Critical value `c`.
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub telemetry: Vec<TelemetryRow>,
    /// `max |u_ε - u_{ε/4}|`.
    pub eps_sensitivity: f64,
}

impl MountainPassResult {
    pub fn telemetry_csv(&self) -> String {
        let mut s = String::from("iteration,phase,path_max,residual,step,t_star\n");
        for t in &self.telemetry {
            s.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                t.iteration, t.phase, t.path_max, t.residual, t.step, t.t_star
            ));
        }
        s
    }
}

/// Newton on the free nodes, damped so that `max |∇J|` decreases.
fn newton(p: &RadialProblem, start: &RadialProfile, eps: f64, tol: f64, max_steps: usize) -> Result<(RadialProfile, f64)> {
    let m = start.grid.panels();
    let mut u = start.clone();
    let mut grad = energy_gradient_eps(p, &u, eps);
    let mut gmax = grad[..m].iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut res = weak_residual_eps(p, &u, eps)?;
    for _ in 0..max_steps {
        if res <= tol {
            break;
        }
        let (lo, d, up) = energy_hessian(p, &u, eps);
        let rhs: Vec<f64> = grad[..m].iter().map(|g| -g).collect();
        let Some(delta) = solve_tridiagonal(&lo, &d, &up, &rhs) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let free: Vec<f64> = (0..m).map(|i| u.values[i] + lambda * delta[i]).collect();
            let cand = with_free(&u, &free);
            let g = energy_gradient_eps(p, &cand, eps);
            let gm = g[..m].iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if gm < gmax {
                u = cand;
                grad = g;
                gmax = gm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        res = weak_residual_eps(p, &u, eps)?;
    }
    Ok((u, res))
}

/// Newton is tried once the descent residual is below this.
const POLISH_START: f64 = 1e-2;

pub fn mountain_pass_solve(p: &RadialProblem, grid: &RadialGrid, cfg: &SolverConfig) -> Result<MountainPassResult> {
    let u0 = RadialProfile::from_fn(grid.clone(), |r| 1.0 - r * r, |r| -2.0 * r)?;
    mountain_pass_from(p, &u0, cfg)
}

/// Mountain pass starting from the ray through `u0` (`u0 ≥ 0`, `u0 ≠ 0`).
pub fn mountain_pass_from(p: &RadialProblem, u0: &RadialProfile, cfg: &SolverConfig) -> Result<MountainPassResult> {
    cfg.validate()?;
    let eps = cfg.epsilon_reg;
    let m = u0.grid.panels();
    let (k_off, k_diag) = stiffness(p, &u0.grid);
    let mut v = normalize(p, u0)?;
    let (mut t_star, mut c, _) = ray_max(p, &v, cfg.path_points, eps)?;
    let mut w = v.scaled(t_star);
    let mut telemetry = Vec::new();
    let mut step = cfg.descent_step;
    let mut next_polish = POLISH_START;
    for iter in 0..cfg.max_iters {
        let res = weak_residual_eps(p, &w, eps)?;
        telemetry.push(TelemetryRow {
            iteration: iter,
            phase: "descent".into(),
            path_max: c,
            residual: res,
            step,
            t_star,
        });
        if res <= cfg.residual_tol {
            return finish(p, w, c, res, iter, telemetry, eps, cfg);
        }
        if cfg.newton_polish && res <= next_polish {
            let (u, r2) = newton(p, &w, eps, cfg.residual_tol, 30)?;
            let positive = u.values[..m].iter().all(|x| *x > 0.0);
            if r2 <= cfg.residual_tol && positive {
                let e = energy_eps(p, &u, eps)?;
                telemetry.push(TelemetryRow {
                    iteration: iter,
                    phase: "newton".into(),
                    path_max: e,
                    residual: r2,
                    step: 1.0,
                    t_star,
                });
                return finish(p, u, e, r2, iter, telemetry, eps, cfg);
            }
            next_polish = res * 0.1;
        }
        let grad = energy_gradient_eps(p, &w, eps);
        let dir = solve_tridiagonal(&k_off, &k_diag, &k_off, &grad[..m]).ok_or(Error::NonConvergence {
            residual: res,
            iterations: iter,
        })?;
        let mut accepted = false;
        while step > 1e-14 {
            let free: Vec<f64> = (0..m).map(|i| w.values[i] - step * dir[i]).collect();
            let cand = with_free(&w, &free);
            let attempt = normalize(p, &cand).and_then(|nv| {
                let (t, val, _) = ray_max(p, &nv, cfg.path_points, eps)?;
                Ok((nv, t, val))
            });
            match attempt {
                Ok((nv, t, val)) if val < c => {
                    v = nv;
                    t_star = t;
                    c = val;
                    w = v.scaled(t_star);
                    accepted = true;
                    step = (step * 1.5).min(cfg.descent_step);
                    break;
                }
                Ok(_) | Err(Error::PathCollapse { .. }) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            return Err(Error::NonConvergence {
                residual: res,
                iterations: iter,
            });
        }
    }
    let res = weak_residual_eps(p, &w, eps)?;
    Err(Error::NonConvergence {
        residual: res,
        iterations: cfg.max_iters,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &RadialProblem,
    w: RadialProfile,
    c: f64,
    res: f64,
    iter: usize,
    telemetry: Vec<TelemetryRow>,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<MountainPassResult> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::PathCollapse { index: 0 });
    }
    let (w4, _) = newton(p, &w, eps / 4.0, cfg.residual_tol, 10)?;
    let eps_sensitivity = w
        .values
        .iter()
        .zip(&w4.values)
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    Ok(MountainPassResult {
        profile: w,
        energy: c,
        residual: res,
        iterations: iter,
        telemetry,
        eps_sensitivity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryCheck {
    pub sigma: f64,
    pub passed: bool,
    pub samples: usize,
}

/// Random nonnegative profile: a few hat bumps times `(1 - r)`.
pub fn random_profile(grid: &RadialGrid, rng: &mut impl Rng) -> RadialProfile {
    let bumps = rng.gen_range(1..=4);
    let params: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| (rng.gen_range(0.0..0.95), rng.gen_range(0.1..1.0), rng.gen_range(0.05..1.0)))
        .collect();
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| {
            let s: f64 = params
                .iter()
                .map(|&(c, w, a)| a * (1.0 - (r - c).abs() / w).max(0.0))
                .sum();
            s * (1.0 - r)
        })
        .collect();
    RadialProfile::from_values(grid.clone(), values).expect("u(1) = 0 by construction")
}

/// Smallest sampled `J` over `samples` random nonnegative profiles with
/// gradient norm `radius`.
pub fn geometry_check(p: &RadialProblem, grid: &RadialGrid, radius: f64, samples: usize, seed: u64) -> Result<GeometryCheck> {
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::InvalidInput(format!("radius {radius} must lie in (0, 1]")));
    }
    let samples = samples.max(50);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma = f64::INFINITY;
    for _ in 0..samples {
        let u = random_profile(grid, &mut rng);
        let u = normalize(p, &u)?.scaled(radius);
        sigma = sigma.min(energy_eps(p, &u, 1e-8)?);
    }
    Ok(GeometryCheck {
        sigma,
        passed: sigma > 0.0,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::{make_catalog, CatalogSpec, NFunction};
    use crate::radial::problem::Source;
    use crate::radial::energy::{energy_parts, DEFAULT_EPS};

    fn make(s: &str) -> NFunction {
        make_catalog(&s.parse::<CatalogSpec>().unwrap()).unwrap()
    }

    fn henon(alpha: f64, h: &str) -> RadialProblem {
        RadialProblem::new(3, make("power:p=2,c=0.5"), Source::Henon { alpha, h: make(h) })
    }

    fn unit_bump(p: &RadialProblem, grid: &RadialGrid) -> RadialProfile {
        let u = RadialProfile::from_fn(grid.clone(), |r| 1.0 - r * r, |r| -2.0 * r).unwrap();
        normalize(p, &u).unwrap()
    }

    #[test]
    fn find_e_crossover() {
        let p = henon(1.0, "power:p=4,c=0.25");
        let grid = RadialGrid::graded(64).unwrap();
        let (e, t) = find_e(&p, &unit_bump(&p, &grid)).unwrap();
        assert!(t <= 64.0);
        assert!(crate::radial::energy(&p, &e).unwrap() <= 0.0);
    }

    #[test]
    fn pure_power_ray_identity() {
        let p = RadialProblem::new(3, make("power:p=2"), Source::Henon { alpha: 1.0, h: make("power:p=4") });
        let grid = RadialGrid::graded(64).unwrap();
        let u = unit_bump(&p, &grid);
        let (a, b) = energy_parts(&p, &u, 0.0);
        for t in [0.3, 1.0, 2.5] {
            let (at, bt) = energy_parts(&p, &u.scaled(t), 0.0);
            assert!((at - t * t * a).abs() < 1e-12 * at.abs());
            assert!((bt - t.powi(4) * b).abs() < 1e-12 * bt.abs());
        }
    }

    #[test]
    fn find_e_fails_without_superlinearity() {
        let p = RadialProblem::new(3, make("power:p=3"), Source::Henon { alpha: 0.0, h: make("power:p=2,c=0.01") });
        let grid = RadialGrid::graded(32).unwrap();
        let r = find_e(&p, &unit_bump(&p, &grid));
        assert!(matches!(r, Err(Error::NoCrossover { doublings: 60 })), "{r:?}");
    }

    #[test]
    fn converges_with_positive_level() {
        for alpha in [0.0, 1.0] {
            let p = henon(alpha, "power:p=4,c=0.25");
            let grid = RadialGrid::graded(128).unwrap();
            let res = mountain_pass_solve(&p, &grid, &SolverConfig::default()).unwrap();
            assert!(res.energy > 0.0);
            assert!(res.residual <= 1e-7);
            let u = &res.profile.values;
            assert!(u[..128].iter().all(|x| *x > 0.0));
            assert!(u.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let maxima: Vec<f64> = res
                .telemetry
                .iter()
                .filter(|t| t.phase == "descent")
                .map(|t| t.path_max)
                .collect();
            assert!(maxima.windows(2).all(|w| w[1] <= w[0]));
            assert!(res.eps_sensitivity < 1e-6);
        }
    }

    #[test]
    fn agrees_with_shooting() {
        let p = henon(1.0, "power:p=4,c=0.25");
        let grid = RadialGrid::graded(256).unwrap();
        let mp = mountain_pass_solve(&p, &grid, &SolverConfig::default()).unwrap();
        let sh = crate::radial::solve_shooting(&p, &grid, (0.1, 100.0)).unwrap();
        let diff = mp
            .profile
            .values
            .iter()
            .zip(&sh.profile.values)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(diff <= 1e-2 * sh.profile.sup_norm(), "{diff}");
    }

    #[test]
    fn pure_descent_also_converges() {
        let p = henon(1.0, "power:p=4,c=0.25");
        let grid = RadialGrid::graded(64).unwrap();
        let cfg = SolverConfig {
            newton_polish: false,
            residual_tol: 1e-5,
            ..SolverConfig::default()
        };
        let res = mountain_pass_solve(&p, &grid, &cfg).unwrap();
        assert!(res.telemetry.iter().all(|t| t.phase == "descent"));
        assert!(res.residual <= 1e-5);
    }

    #[test]
    fn forced_sublinear_fails() {
        let p = RadialProblem::new(3, make("power:p=3"), Source::Henon { alpha: 0.0, h: make("power:p=2") });
        let grid = RadialGrid::graded(32).unwrap();
        let r = mountain_pass_solve(&p, &grid, &SolverConfig::default());
        assert!(
            matches!(r, Err(Error::PathCollapse { .. }) | Err(Error::NonConvergence { .. })),
            "{r:?}"
        );
    }

    #[test]
    fn geometry_small_and_large_radius() {
        let p = henon(1.0, "power:p=4,c=0.25");
        let grid = RadialGrid::graded(64).unwrap();
        let small = geometry_check(&p, &grid, 0.05, 50, 7).unwrap();
        assert!(small.passed && small.sigma > 0.0);
        let again = geometry_check(&p, &grid, 0.05, 50, 7).unwrap();
        assert_eq!(small, again);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            path_points: 4,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            epsilon_reg: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let _ = DEFAULT_EPS;
    }
}
