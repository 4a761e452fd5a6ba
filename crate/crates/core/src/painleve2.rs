//! Step-weight oracles: the Tracy-Widom distribution `F(s; gamma)` from a
//! stand-alone Nystrom discretization, `y^2 = -d^2/ds^2 log F` from the main
//! engine, and the Hastings-McLeod solution of `y'' = s y + 2 y^3` by a
//! boundary-value solve.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{lu_log_det, solve_tridiagonal};
use crate::observables::{FdScheme, Probe};
use crate::quadrature::{self, Resolution};
use crate::sigma::SigmaWeight;
use crate::specfun::{airy_ai, airy_pair};

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("gamma = {gamma} outside (0, 1]")))
    }
}

/// `det(1 - gamma K_Ai)` on `L^2(s, inf)`, discretized independently of the
/// deformed-kernel engine: Gauss-Legendre on `[s, s + L]` with short panels,
/// the kernel's difference quotient, and an LU log-determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwOracle {
    pub nodes_per_panel: usize,
    pub max_panel: f64,
    pub tail_tol: f64,
}

impl Default for TwOracle {
    fn default() -> Self {
        TwOracle { nodes_per_panel: 32, max_panel: 2.0, tail_tol: 1e-18 }
    }
}

impl TwOracle {
    pub fn log_f(&self, s: f64, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        if !s.is_finite() {
            return Err(Error::param(format!("s = {s} must be finite")));
        }
        let top = quadrature::airy_cutoff(self.tail_tol).max(s + self.max_panel);
        let panels = ((top - s) / self.max_panel).ceil() as usize;
        let bps: Vec<f64> = (0..=panels).map(|k| s + (top - s) * k as f64 / panels as f64).collect();
        let rule = quadrature::composite_rule(&bps, self.nodes_per_panel)?;
        let n = rule.len();
        let vals: Vec<(f64, f64)> = rule.nodes.iter().map(|&u| airy_pair(u)).collect::<Result<_>>()?;
        let sw: Vec<f64> = rule.weights.iter().map(|w| (gamma * w).sqrt()).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            let (ui, (ai, api)) = (rule.nodes[i], vals[i]);
            for j in 0..n {
                let k = if i == j {
                    api * api - ui * ai * ai
                } else {
                    let (uj, (aj, apj)) = (rule.nodes[j], vals[j]);
                    (ai * apj - api * aj) / (ui - uj)
                };
                a[i * n + j] = -sw[i] * k * sw[j];
            }
            a[i * n + i] += 1.0;
        }
        let (log_abs, sign) = lu_log_det(a, n)?;
        if sign < 0.0 {
            return Err(Error::NonFinite("negative Tracy-Widom determinant"));
        }
        Ok(log_abs)
    }

    pub fn f(&self, s: f64, gamma: f64) -> Result<f64> {
        Ok(self.log_f(s, gamma)?.exp())
    }
}

/// `F(s; gamma)` with the default oracle.
pub fn f_tw(s: f64, gamma: f64) -> Result<f64> {
    TwOracle::default().f(s, gamma)
}

pub fn log_f_tw(s: f64, gamma: f64) -> Result<f64> {
    TwOracle::default().log_f(s, gamma)
}

/// `y_gamma(s)^2 = -d^2/ds^2 log F(s; gamma)`, by central differences of the
/// step-weight determinant at `t = 1`, `x = -s`.
pub fn y_sq_from_determinant(gamma: f64, s: f64, fd: &FdScheme) -> Result<f64> {
    y_sq_with(gamma, s, fd, &Resolution::default())
}

pub fn y_sq_with(gamma: f64, s: f64, fd: &FdScheme, res: &Resolution) -> Result<f64> {
    check_gamma(gamma)?;
    let sigma = SigmaWeight::step(gamma)?;
    let probe = Probe::new(&sigma, -s, 1.0, res, &[])?;
    Ok(-probe.dx(fd, 2, -s, 1.0, |d| d.log_q)?)
}

/// `int_s^inf y_gamma^2 dv`, which equals `d/ds log F(s; gamma)`.
pub fn y_sq_tail_integral(gamma: f64, s: f64, fd: &FdScheme) -> Result<f64> {
    let top = quadrature::airy_cutoff(1e-18).max(s + 1.0);
    let panels = ((top - s) / 2.0).ceil().max(1.0) as usize;
    let bps: Vec<f64> = (0..=panels).map(|k| s + (top - s) * k as f64 / panels as f64).collect();
    let rule = quadrature::composite_rule(&bps, 16)?;
    let mut total = 0.0;
    for (&v, &w) in rule.nodes.iter().zip(&rule.weights) {
        total += w * y_sq_from_determinant(gamma, v, fd)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum P2Method {
    Bvp,
    Determinant,
}

/// `y_gamma` sampled on an increasing grid.
#[derive(Debug, Clone, Serialize)]
pub struct P2Solution {
    pub gamma: f64,
    pub grid: Vec<f64>,
    pub y: Vec<f64>,
    pub method: P2Method,
}

impl P2Solution {
    /// Tabulate `sqrt(y^2)` from the determinant route; only meaningful where
    /// `y > 0`, which holds everywhere for `gamma = 1`.
    pub fn from_determinant(gamma: f64, grid: &[f64], fd: &FdScheme) -> Result<Self> {
        check_grid(grid)?;
        let y = grid
            .iter()
            .map(|&s| y_sq_from_determinant(gamma, s, fd).map(|v| v.max(0.0).sqrt()))
            .collect::<Result<_>>()?;
        Ok(P2Solution { gamma, grid: grid.to_vec(), y, method: P2Method::Determinant })
    }

    /// Six-point Lagrange interpolation; `None` outside the grid.
    pub fn eval(&self, s: f64) -> Option<f64> {
        let n = self.grid.len();
        if n == 0 || s < self.grid[0] || s > self.grid[n - 1] {
            return None;
        }
        if n < 6 {
            return self.grid.iter().position(|&g| g == s).map(|i| self.y[i]);
        }
        let i = self.grid.partition_point(|&g| g <= s).saturating_sub(1);
        let start = i.saturating_sub(2).min(n - 6);
        let xs = &self.grid[start..start + 6];
        let ys = &self.y[start..start + 6];
        let mut total = 0.0;
        for k in 0..6 {
            let mut l = 1.0;
            for m in 0..6 {
                if m != k {
                    l *= (s - xs[m]) / (xs[k] - xs[m]);
                }
            }
            total += l * ys[k];
        }
        Some(total)
    }

    /// `y(L1) / (sqrt(gamma) Ai(L1))`, which should be one.
    pub fn right_boundary_ratio(&self) -> Result<f64> {
        let (&l1, &y) = self.grid.last().zip(self.y.last()).ok_or(Error::NonFinite("empty solution"))?;
        Ok(y / (self.gamma.sqrt() * airy_ai(l1)?))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Left boundary value `sqrt(L0/2) (1 + 1/(8 (-L0)^3))`.
fn left_asymptote(l0: f64) -> f64 {
    (0.5 * l0).sqrt() * (1.0 + 1.0 / (8.0 * (-l0).powi(3)))
}

fn rhs(s: f64, y: f64) -> f64 {
    s * y + 2.0 * y * y * y
}

fn rhs_dy(s: f64, y: f64) -> f64 {
    s + 6.0 * y * y
}

/// Numerov residual of `y'' = s y + 2 y^3` at interior nodes.
fn numerov_residual(s: &[f64], y: &[f64], h2: f64) -> Vec<f64> {
    let n = y.len();
    (1..n - 1)
        .map(|i| {
            let f = |k: usize| rhs(s[k], y[k]);
            y[i + 1] - 2.0 * y[i] + y[i - 1] - h2 / 12.0 * (f(i + 1) + 10.0 * f(i) + f(i - 1))
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Hastings-McLeod solution on `[-l0, l1]` with `n` intervals, by a
/// fourth-order Numerov discretization and damped Newton iteration.
pub fn solve_hm(domain: (f64, f64), n: usize) -> Result<P2Solution> {
    let (l0, l1) = domain;
    if !(l0 >= 8.0 && l1 >= 6.0 && l0.is_finite() && l1.is_finite()) {
        return Err(Error::param(format!("need L0 >= 8 and L1 >= 6, got ({l0}, {l1})")));
    }
    if n < 50 {
        return Err(Error::param(format!("grid size {n} too small")));
    }
    let h = (l1 + l0) / n as f64;
    let h2 = h * h;
    let s: Vec<f64> = (0..=n).map(|k| if k == n { l1 } else { -l0 + k as f64 * h }).collect();
    let (left, right) = (left_asymptote(l0), airy_ai(l1)?);
    // blend of the two asymptotes
    let mut y: Vec<f64> = s
        .iter()
        .map(|&v| {
            let w = 1.0 / (1.0 + (2.0 * (v + 1.0)).exp());
            let ai = airy_ai(v.max(-l0)).unwrap_or(0.0).max(0.0);
            w * (0.5 * v.abs()).sqrt() + (1.0 - w) * ai
        })
        .collect();
    y[0] = left;
    y[n] = right;
    let mut r = numerov_residual(&s, &y, h2);
    let mut norm = max_abs(&r);
    for _ in 0..100 {
        let m = n - 1;
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            sub[k] = 1.0 - h2 / 12.0 * rhs_dy(s[i - 1], y[i - 1]);
            diag[k] = -2.0 - 10.0 * h2 / 12.0 * rhs_dy(s[i], y[i]);
            sup[k] = 1.0 - h2 / 12.0 * rhs_dy(s[i + 1], y[i + 1]);
        }
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = solve_tridiagonal(&sub, &diag, &sup, &neg_r)?;
        let step = max_abs(&delta);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = y
                .iter()
                .enumerate()
                .map(|(i, &v)| if i == 0 || i == n { v } else { v + lambda * delta[i - 1] })
                .collect();
            let tr = numerov_residual(&s, &trial, h2);
            let tn = max_abs(&tr);
            if tn.is_finite() && (tn < norm || lambda < 1e-3 || tn <= 1e-15) {
                y = trial;
                r = tr;
                norm = tn;
                break;
            }
            lambda *= 0.5;
        }
        if lambda < 1e-3 {
            return Err(Error::NoConvergence("Hastings-McLeod Newton step collapsed".into()));
        }
        if lambda * step <= 1e-12 {
            return Ok(P2Solution { gamma: 1.0, grid: s, y, method: P2Method::Bvp });
        }
    }
    Err(Error::NoConvergence("Hastings-McLeod Newton did not converge in 100 steps".into()))
}

/// Default domain and grid of the boundary-value solve.
pub const HM_DOMAIN: (f64, f64) = (12.0, 6.0);
pub const HM_GRID: usize = 2000;

/// Constant term of `log F(-s; 1) + s^3/12 + (1/8) log s`, Richardson
/// extrapolated in `s^{-3/2}` from two gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailConstant {
    pub s: [f64; 2],
    pub raw: [f64; 2],
    pub extrapolated: f64,
}

pub fn tail_constant(s1: f64, s2: f64) -> Result<TailConstant> {
    if !(s1 > 0.0 && s2 > s1) {
        return Err(Error::param(format!("need 0 < s1 < s2, got {s1}, {s2}")));
    }
    let g = |s: f64| -> Result<f64> { Ok(log_f_tw(-s, 1.0)? + s.powi(3) / 12.0 + 0.125 * s.ln()) };
    let (g1, g2) = (g(s1)?, g(s2)?);
    let r = (s1 / s2).powf(1.5);
    let extrapolated = (g2 - r * g1) / (1.0 - r);
    Ok(TailConstant { s: [s1, s2], raw: [g1, g2], extrapolated })
}
