//! Shooting on the radial equation in flux form:
//! `u' = -sign(w) g⁻¹(|w| / r^{n-1})`, `w' = r^{n-1} f(r, u)`,
//! where `w = r^{n-1} g(|u'|) sign(-u')`.

use super::grid::RadialGrid;
use super::problem::{RadialProblem, Source};
use super::profile::RadialProfile;
use crate::error::{Error, Result};
use crate::quadrature::gl8;

pub const R_START: f64 = 1e-6;
const RTOL: f64 = 1e-11;
const ATOL: f64 = 1e-13;
const GUARD: f64 = 1e150;
pub const TERMINAL_TOL: f64 = 1e-8;
pub const SCAN_POINTS: usize = 41;

#[derive(Debug, Clone)]
pub struct Shot {
    /// Not Dirichlet-constrained: `values[M] = u(1)`.
    pub profile: RadialProfile,
    pub terminal: f64,
    /// First radius where `u` reaches 0, if any.
    pub first_zero: Option<f64>,
}

fn rhs(p: &RadialProblem, r: f64, y: [f64; 2]) -> Result<[f64; 2]> {
    let k = p.n as i32 - 1;
    let rk = r.powi(k);
    let s = y[1].abs() / rk;
    let du = -p.g.inverse_derivative(s)?.copysign(y[1]);
    Ok([du, rk * p.source.f(r, y[0])])
}

/// Series start: `w(r0) = ∫_0^{r0} s^{n-1} f(s, d0) ds`, with `u` corrected by
/// the trapezoid estimate of `∫ u'`.
fn start(p: &RadialProblem, d0: f64) -> Result<[f64; 2]> {
    let k = p.n as i32 - 1;
    let w0: f64 = match &p.source {
        Source::Henon { alpha, h } => {
            R_START.powf(alpha + p.n as f64) * h.derivative(d0.max(0.0)) / (p.n as f64 + alpha)
        }
        src => gl8()
            .mapped(0.0, R_START)
            .map(|(s, wq)| wq * s.powi(k) * src.f(s, d0))
            .sum(),
    };
    let du = -p.g.inverse_derivative(w0.abs() / R_START.powi(k))?.copysign(w0);
    Ok([d0 + 0.5 * R_START * du, w0])
}

// Dormand–Prince 5(4)
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step(p: &RadialProblem, r: f64, y: [f64; 2], h: f64) -> Result<([f64; 2], f64)> {
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s][j] * kj[0];
            ys[1] += h * A[s][j] * kj[1];
        }
        k[s] = rhs(p, r + C[s] * h, ys)?;
    }
    let mut y5 = y;
    let mut y4 = y;
    for s in 0..7 {
        for c in 0..2 {
            y5[c] += h * B5[s] * k[s][c];
            y4[c] += h * B4[s] * k[s][c];
        }
    }
    let mut err = 0.0f64;
    for c in 0..2 {
        let sc = ATOL + RTOL * y[c].abs().max(y5[c].abs());
        err = err.max((y5[c] - y4[c]).abs() / sc);
    }
    Ok((y5, err))
}

/// Integrate from `R_START` with `u(0) = d0` and record the solution at the
/// grid nodes. Integration continues past the first zero of `u` (with
/// `u₊` in the Hénon source), so `u(1)` depends continuously on `d0`.
pub fn shoot(p: &RadialProblem, grid: &RadialGrid, d0: f64) -> Result<Shot> {
    if !(d0 > 0.0) || !d0.is_finite() {
        return Err(Error::InvalidInput(format!("shooting height d0 = {d0} must be > 0")));
    }
    let nodes = grid.nodes();
    let m = nodes.len();
    let mut values = vec![0.0; m];
    let mut derivs = vec![0.0; m];
    values[0] = d0;
    let mut y = start(p, d0)?;
    let mut r = R_START;
    let mut h: f64 = 1e-4;
    let mut first_zero = None;
    for i in 1..m {
        let target = nodes[i];
        while r < target {
            let step = h.min(target - r);
            let (y_new, err) = dp_step(p, r, y, step)?;
            if err <= 1.0 {
                if first_zero.is_none() && y_new[0] <= 0.0 && y[0] > 0.0 {
                    // linear estimate within the step
                    first_zero = Some(r + step * y[0] / (y[0] - y_new[0]));
                }
                r += step;
                y = y_new;
                if y[0].abs() > GUARD || y[1].abs() > GUARD || !y[0].is_finite() {
                    return Err(Error::BlowUp { r });
                }
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = step * factor;
            if h < 1e-14 * r.max(1e-6) {
                return Err(Error::StepCollapse { r });
            }
        }
        values[i] = y[0];
        derivs[i] = rhs(p, r, y)?[0];
        if !derivs[i].is_finite() {
            return Err(Error::BlowUp { r });
        }
    }
    let terminal = values[m - 1];
    let profile = RadialProfile::unconstrained(grid.clone(), values, derivs)?;
    Ok(Shot {
        profile,
        terminal,
        first_zero,
    })
}

#[derive(Debug, Clone)]
pub struct ShootingSolution {
    pub profile: RadialProfile,
    pub d0: f64,
    /// Every `d0` interval of the scan where `u(1)` changes sign.
    pub brackets: Vec<(f64, f64)>,
    pub scan: Vec<(f64, f64)>,
}

/// Geometric scan of `d0` over `d_range`, then bisection on the first sign
/// change until `|u(1)| ≤ 1e-8`. The returned profile has `u(1)` set to 0.
pub fn solve_shooting(p: &RadialProblem, grid: &RadialGrid, d_range: (f64, f64)) -> Result<ShootingSolution> {
    let (lo, hi) = d_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "shooting range needs 0 < low < high, got ({lo}, {hi})"
        )));
    }
    let ratio = (hi / lo).ln() / (SCAN_POINTS - 1) as f64;
    let mut scan = Vec::with_capacity(SCAN_POINTS);
    for j in 0..SCAN_POINTS {
        let d = if j == SCAN_POINTS - 1 {
            hi
        } else {
            lo * (ratio * j as f64).exp()
        };
        // blow-up counts as "far below zero" only for reporting; skip it
        if let Ok(s) = shoot(p, grid, d) {
            scan.push((d, s.terminal));
        }
    }
    let brackets: Vec<(f64, f64)> = scan
        .windows(2)
        .filter(|w| w[0].1 == 0.0 || w[0].1.signum() != w[1].1.signum())
        .map(|w| (w[0].0, w[1].0))
        .collect();
    let Some(&(mut a, mut b)) = brackets.first() else {
        return Err(Error::NoBracket {
            low: lo,
            high: hi,
            scan,
        });
    };
    let mut best = shoot(p, grid, a)?;
    let mut fa = best.terminal;
    if fa.abs() > TERMINAL_TOL {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let s = shoot(p, grid, mid)?;
            let fm = s.terminal;
            best = s;
            if fm.abs() <= TERMINAL_TOL || mid == a || mid == b {
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
    }
    if best.terminal.abs() > TERMINAL_TOL {
        return Err(Error::NonConvergence {
            residual: best.terminal.abs(),
            iterations: 200,
        });
    }
    let d0 = best.profile.values[0];
    let mut profile = best.profile;
    let m = profile.values.len() - 1;
    profile.values[m] = 0.0;
    if let Some(i) = (1..m).find(|&i| profile.values[i] <= 0.0) {
        return Err(Error::PositivityViolation {
            min: profile.values[i],
            at: profile.nodes()[i],
        });
    }
    Ok(ShootingSolution {
        profile,
        d0,
        brackets,
        scan,
    })
}
