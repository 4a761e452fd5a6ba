//! Gauss-Legendre rules, composite panel rules, and the truncated, panelled
//! integration interval used to discretize the deformed Airy operator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sigma::{SigmaShape, SigmaWeight};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Panel breakpoints; every node lies strictly inside one panel.
    pub panels: Vec<f64>,
}

impl QuadratureRule {
    pub fn empty() -> Self {
        QuadratureRule { nodes: Vec::new(), weights: Vec::new(), panels: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

pub const MAX_GAUSS_NODES: usize = 512;

/// Legendre `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_GAUSS_NODES {
        return Err(Error::param(format!("gauss_legendre: n = {n} outside 1..={MAX_GAUSS_NODES}")));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights, panels: vec![-1.0, 1.0] })
}

/// Gauss-Legendre with `n_per_panel` nodes mapped onto each panel.
pub fn composite_rule(breakpoints: &[f64], n_per_panel: usize) -> Result<QuadratureRule> {
    if breakpoints.len() < 2 {
        return Err(Error::param("composite_rule needs at least two breakpoints"));
    }
    if breakpoints.iter().any(|b| !b.is_finite()) {
        return Err(Error::param("composite_rule: non-finite breakpoint"));
    }
    if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("composite_rule: breakpoints must be strictly increasing"));
    }
    let base = gauss_legendre(n_per_panel)?;
    let panels = breakpoints.len() - 1;
    let mut nodes = Vec::with_capacity(panels * n_per_panel);
    let mut weights = Vec::with_capacity(panels * n_per_panel);
    for w in breakpoints.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        let mid = 0.5 * (w[1] + w[0]);
        for (&x, &wt) in base.nodes.iter().zip(&base.weights) {
            nodes.push(mid + half * x);
            weights.push(half * wt);
        }
    }
    Ok(QuadratureRule { nodes, weights, panels: breakpoints.to_vec() })
}

/// Discretization parameters for the Nystrom operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolution {
    pub n_per_panel: usize,
    /// Target size of neglected tails, both of sigma and of the Airy kernel.
    pub tail_tol: f64,
    /// Longest panel allowed in the u-variable.
    pub max_panel_u: f64,
    /// Longest panel, in units of sigma's transition width, across a smooth transition.
    pub sigma_panel_width: f64,
    /// Extra uniform splitting of every panel.
    pub subdivide: usize,
    pub diagonal_switch: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            n_per_panel: 48,
            tail_tol: 1e-16,
            max_panel_u: 4.0,
            sigma_panel_width: 6.0,
            subdivide: 1,
            diagonal_switch: crate::specfun::DEFAULT_DIAGONAL_SWITCH,
        }
    }
}

impl Resolution {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_panel == 0 || self.n_per_panel > MAX_GAUSS_NODES {
            return Err(Error::param(format!("n_per_panel {} outside 1..={MAX_GAUSS_NODES}", self.n_per_panel)));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol <= 1e-6) {
            return Err(Error::param(format!("tail_tol {} outside (0, 1e-6]", self.tail_tol)));
        }
        if !(self.max_panel_u > 0.0 && self.max_panel_u.is_finite()) {
            return Err(Error::param("max_panel_u must be positive"));
        }
        if !(self.sigma_panel_width > 0.0 && self.sigma_panel_width.is_finite()) {
            return Err(Error::param("sigma_panel_width must be positive"));
        }
        if self.subdivide == 0 || self.subdivide > 64 {
            return Err(Error::param("subdivide must lie in 1..=64"));
        }
        if !(self.diagonal_switch >= 0.0 && self.diagonal_switch < 1e-2) {
            return Err(Error::param("diagonal_switch must lie in [0, 1e-2)"));
        }
        Ok(())
    }

    /// Same panels, twice the nodes per panel.
    pub fn doubled(&self) -> Self {
        Resolution { n_per_panel: 2 * self.n_per_panel, ..*self }
    }
}

/// The affine change of variables `u = t^{2/3} z - x t^{-1/3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryScaling {
    pub t23: f64,
    pub shift: f64,
}

impl AiryScaling {
    pub fn new(x: f64, t: f64) -> Self {
        let c = t.cbrt();
        AiryScaling { t23: c * c, shift: x / c }
    }

    #[inline]
    pub fn to_u(&self, z: f64) -> f64 {
        self.t23 * z - self.shift
    }

    #[inline]
    pub fn to_z(&self, u: f64) -> f64 {
        (u + self.shift) / self.t23
    }
}

/// Cut beyond which `exp(-(4/3) B^{3/2})` falls below `tol`.
pub fn airy_cutoff(tol: f64) -> f64 {
    (0.75 * (1.0 / tol).ln()).powf(2.0 / 3.0)
}

/// Truncated u-interval `(a, b)` carrying the operator up to `tail_tol`.
/// Returns `a >= b` when the weight has no support below the Airy cut.
pub fn truncation_bounds(sigma: &SigmaWeight, x: f64, t: f64, tail_tol: f64) -> Result<(f64, f64)> {
    if !(t > 0.0 && t.is_finite()) || !x.is_finite() {
        return Err(Error::param(format!("truncation_bounds needs finite x and t > 0 (x={x}, t={t})")));
    }
    if !(tail_tol > 0.0 && tail_tol <= 1e-6) {
        return Err(Error::param(format!("tail_tol {tail_tol} outside (0, 1e-6]")));
    }
    let map = AiryScaling::new(x, t);
    let b = airy_cutoff(tail_tol);
    let a = match sigma.lower_support() {
        Some(r) => map.to_u(r),
        None => {
            if sigma.is_zero() {
                return Ok((b, b));
            }
            let decay = sigma
                .decay()
                .ok_or_else(|| Error::InvalidSigma("decay constants are required to truncate the lower tail".into()))?;
            map.to_u(-decay.tail_cut(tail_tol))
        }
    };
    Ok((a, b))
}

/// Panel breakpoints in the u-variable, or an empty list for an empty operator.
pub fn operator_breakpoints(sigma: &SigmaWeight, x: f64, t: f64, res: &Resolution) -> Result<Vec<f64>> {
    res.validate()?;
    let (a, b) = truncation_bounds(sigma, x, t, res.tail_tol)?;
    if a >= b {
        return Ok(Vec::new());
    }
    let map = AiryScaling::new(x, t);
    let mut pts = vec![a, b, 0.0, map.to_u(0.0)];
    for &(r, _) in sigma.atoms() {
        pts.push(map.to_u(r));
    }
    if let SigmaShape::Logistic { theta } = sigma.shape() {
        let cut = sigma.decay().map(|d| d.tail_cut(res.tail_tol)).unwrap_or(40.0 * theta);
        let width = res.sigma_panel_width * theta;
        let count = (cut / width).ceil() as i64;
        for k in -count..=count {
            pts.push(map.to_u(k as f64 * width));
        }
    }
    pts.retain(|p| *p >= a && *p <= b);
    pts.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match merged.last() {
            Some(&q) if (p - q).abs() <= 1e-12 * q.abs().max(1.0) => {}
            _ => merged.push(p),
        }
    }
    // endpoints must be exact
    *merged.first_mut().expect("nonempty") = a;
    *merged.last_mut().expect("nonempty") = b;

    let mut out = vec![merged[0]];
    for w in merged.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let len = hi - lo;
        let cap = panel_cap(lo.min(hi), res.max_panel_u);
        let pieces = ((len / cap).ceil() as usize).max(1) * res.subdivide;
        for k in 1..pieces {
            out.push(lo + len * k as f64 / pieces as f64);
        }
        out.push(hi);
    }
    Ok(out)
}

/// Longer panels are allowed where the Airy functions do not oscillate.
fn panel_cap(u: f64, max_panel_u: f64) -> f64 {
    if u >= 0.0 {
        max_panel_u
    } else {
        max_panel_u.min(20.0 / (1.0 + (-u).sqrt()))
    }
}
