//! Nystrom discretization of the deformed Airy operator with kernel
//! `sqrt(sigma(z(u))) K_Ai(u, v) sqrt(sigma(z(v)))`, `z(u) = t^{-2/3} u + x/t`.
//!
//! Nodes are laid out in the sigma variable `z` ([`ZGrid`]) and mapped to
//! `u = t^{2/3} z - x t^{-1/3}`. Re-using one `ZGrid` at nearby `(x, t)` keeps
//! the discrete determinant a smooth function of `(x, t)`, which finite
//! differences rely on.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, ShiftedCholesky};
use crate::quadrature::{self, AiryScaling, QuadratureRule, Resolution};
use crate::sigma::{self, SigmaWeight, StieltjesRule};
use crate::specfun::{airy_pair_unchecked, kernel_from_values};

/// Largest Nystrom dimension accepted; the dense matrix alone is 8 n^2 bytes.
pub const MAX_OPERATOR_NODES: usize = 6144;

/// Quadrature in the sigma variable together with sigma at the nodes.
#[derive(Debug, Clone)]
pub struct ZGrid {
    rule: QuadratureRule,
    sigma_at_nodes: Vec<f64>,
    resolution: Resolution,
    measure_cut: f64,
}

impl ZGrid {
    /// Panels for `(x, t)` pulled back to the z-variable.
    pub fn new(sigma: &SigmaWeight, x: f64, t: f64, res: &Resolution) -> Result<Self> {
        check_point(x, t)?;
        let bps_u = quadrature::operator_breakpoints(sigma, x, t, res)?;
        let measure_cut = sigma.decay().map(|d| d.tail_cut(res.tail_tol)).unwrap_or(f64::INFINITY);
        if bps_u.is_empty() {
            return Ok(ZGrid {
                rule: QuadratureRule::empty(),
                sigma_at_nodes: Vec::new(),
                resolution: *res,
                measure_cut,
            });
        }
        let map = AiryScaling::new(x, t);
        let mut bps: Vec<f64> = Vec::with_capacity(bps_u.len());
        for u in bps_u {
            let mut z = map.to_z(u);
            // undo round-off of the u round trip so atoms stay inside the support
            if let Some(&(r, _)) = sigma.atoms().iter().find(|a| (a.0 - z).abs() <= 1e-10 * a.0.abs().max(1.0)) {
                z = r;
            }
            if bps.last().is_none_or(|&q| z > q) {
                bps.push(z);
            }
        }
        if bps.len() < 2 {
            return Ok(ZGrid {
                rule: QuadratureRule::empty(),
                sigma_at_nodes: Vec::new(),
                resolution: *res,
                measure_cut,
            });
        }
        let nodes = (bps.len() - 1).saturating_mul(res.n_per_panel);
        if nodes > MAX_OPERATOR_NODES {
            return Err(Error::TooLarge { nodes, limit: MAX_OPERATOR_NODES });
        }
        let rule = quadrature::composite_rule(&bps, res.n_per_panel)?;
        let sigma_at_nodes = rule.nodes.iter().map(|&z| sigma.value(z)).collect();
        Ok(ZGrid { rule, sigma_at_nodes, resolution: *res, measure_cut })
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn resolution(&self) -> &Resolution {
        &self.resolution
    }

    /// z-interval covered by the grid, clipped to where `d sigma` is not negligible.
    pub fn measure_support(&self) -> Option<(f64, f64)> {
        let (lo, hi) = (*self.rule.panels.first()?, *self.rule.panels.last()?);
        let lo = lo.max(-self.measure_cut);
        let hi = hi.min(self.measure_cut).max(lo);
        Some((lo, hi))
    }

    /// Stieltjes rule for `d sigma` over the grid's support.
    pub fn dsigma_rule(&self, sigma: &SigmaWeight) -> Result<StieltjesRule> {
        match self.measure_support() {
            Some(support) => sigma::dsigma_rule(sigma, support),
            None => Ok(StieltjesRule { points: Vec::new(), weights: Vec::new(), atom_count: 0 }),
        }
    }
}

fn check_point(x: f64, t: f64) -> Result<()> {
    if !x.is_finite() || !(t > 0.0 && t.is_finite()) {
        return Err(Error::param(format!("need finite x and t > 0, got x={x}, t={t}")));
    }
    Ok(())
}

/// Factored `I - M` at one `(x, t)`, with `M_ij = s_i K_Ai(u_i, u_j) s_j`
/// and `s_i = sqrt(w_i sigma_i)` in the u-variable.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    x: f64,
    t: f64,
    map: AiryScaling,
    switch: f64,
    z_panels: Vec<f64>,
    u: Vec<f64>,
    u_weights: Vec<f64>,
    sqrt_sw: Vec<f64>,
    ai: Vec<f64>,
    aip: Vec<f64>,
    chol: ShiftedCholesky,
    /// `(I - M)^{-1} f` with `f_i = s_i Ai(u_i)`.
    resolvent_ai: Vec<f64>,
}

/// Diagnostics of one build, serialized into report metadata.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridInfo {
    pub nodes: usize,
    pub panels: usize,
    pub n_per_panel: usize,
    pub tail_tol: f64,
}

impl DiscretizedOperator {
    pub fn build(sigma: &SigmaWeight, x: f64, t: f64, res: &Resolution) -> Result<Self> {
        let grid = ZGrid::new(sigma, x, t, res)?;
        Self::on_grid(&grid, x, t)
    }

    /// Operator at `(x, t)` using the nodes of an existing grid.
    pub fn on_grid(grid: &ZGrid, x: f64, t: f64) -> Result<Self> {
        check_point(x, t)?;
        let map = AiryScaling::new(x, t);
        let n = grid.len();
        let mut u = Vec::with_capacity(n);
        let mut u_weights = Vec::with_capacity(n);
        let mut sqrt_sw = Vec::with_capacity(n);
        let mut ai = Vec::with_capacity(n);
        let mut aip = Vec::with_capacity(n);
        for k in 0..n {
            let uk = map.to_u(grid.rule.nodes[k]);
            let wk = map.t23 * grid.rule.weights[k];
            let (a, ap) = airy_pair_unchecked(uk);
            u.push(uk);
            u_weights.push(wk);
            sqrt_sw.push((wk * grid.sigma_at_nodes[k]).sqrt());
            ai.push(a);
            aip.push(ap);
        }
        let switch = grid.resolution.diagonal_switch;
        let mut neg_m = vec![0.0; n * n];
        for i in 0..n {
            let row = &mut neg_m[i * n..i * n + n];
            let (ui, ai_i, aip_i, si) = (u[i], ai[i], aip[i], sqrt_sw[i]);
            for j in 0..i {
                let k = kernel_from_values(ui, ai_i, aip_i, u[j], ai[j], aip[j], switch);
                row[j] = -si * k * sqrt_sw[j];
            }
            row[i] = -si * si * (aip_i * aip_i - ui * ai_i * ai_i);
        }
        if neg_m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("operator assembly"));
        }
        let chol = ShiftedCholesky::factor(neg_m, n)?;
        let f: Vec<f64> = sqrt_sw.iter().zip(&ai).map(|(s, a)| s * a).collect();
        let resolvent_ai = chol.solve(&f);
        Ok(DiscretizedOperator {
            x,
            t,
            map,
            switch,
            z_panels: grid.rule.panels.clone(),
            u,
            u_weights,
            sqrt_sw,
            ai,
            aip,
            chol,
            resolvent_ai,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn info(&self, res: &Resolution) -> GridInfo {
        GridInfo {
            nodes: self.dim(),
            panels: self.z_panels.len().saturating_sub(1),
            n_per_panel: res.n_per_panel,
            tail_tol: res.tail_tol,
        }
    }

    /// The rule in the u-variable.
    pub fn rule(&self) -> QuadratureRule {
        QuadratureRule {
            nodes: self.u.clone(),
            weights: self.u_weights.clone(),
            panels: self.z_panels.iter().map(|&z| self.map.to_u(z)).collect(),
        }
    }

    pub fn sqrt_sw(&self) -> &[f64] {
        &self.sqrt_sw
    }

    /// `log det(I - M)`, the discrete `log Q`.
    pub fn log_det(&self) -> f64 {
        self.chol.log_det()
    }

    pub fn q_det(&self) -> f64 {
        self.log_det().exp()
    }

    /// Diagonal of the Cholesky factor of `I - M`.
    pub fn factor_diagonal(&self) -> Vec<f64> {
        self.chol.diagonal()
    }

    /// Dense symmetric `M`, rebuilt from the cached Airy values.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.dim();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = if i == j {
                    self.aip[i] * self.aip[i] - self.u[i] * self.ai[i] * self.ai[i]
                } else {
                    kernel_from_values(
                        self.u[i],
                        self.ai[i],
                        self.aip[i],
                        self.u[j],
                        self.ai[j],
                        self.aip[j],
                        self.switch,
                    )
                };
                let v = self.sqrt_sw[i] * k * self.sqrt_sw[j];
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        m
    }

    /// `(I - M)^{-1} rhs`.
    pub fn solve_resolvent(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim() {
            return Err(Error::param(format!("rhs has {} entries, operator has {}", rhs.len(), self.dim())));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("solve_resolvent rhs"));
        }
        Ok(self.chol.solve(rhs))
    }

    /// Exact x-derivatives of the discrete `log Q` on its frozen grid:
    /// with `f = s Ai(u)`, `g = s Ai'(u)` and `R = (I - M)^{-1}`,
    /// `d/dx log Q = -t^{-1/3} f.Rf` and
    /// `d2/dx2 log Q = t^{-2/3} (2 g.Rf - (f.Rf)^2)`.
    pub fn trace_derivatives(&self) -> (f64, f64) {
        let f: Vec<f64> = self.sqrt_sw.iter().zip(&self.ai).map(|(s, a)| s * a).collect();
        let g: Vec<f64> = self.sqrt_sw.iter().zip(&self.aip).map(|(s, a)| s * a).collect();
        let frf = dot(&f, &self.resolvent_ai);
        let grf = dot(&g, &self.resolvent_ai);
        let inv_c = 1.0 / self.t.cbrt();
        (-inv_c * frf, inv_c * inv_c * (2.0 * grf - frf * frf))
    }

    /// `u = d2/dx2 log Q + x/2t` from [`Self::trace_derivatives`].
    pub fn u_trace(&self) -> f64 {
        self.trace_derivatives().1 + self.x / (2.0 * self.t)
    }

    /// `p = d/dx log Q + x^2/4t` from [`Self::trace_derivatives`].
    pub fn p_trace(&self) -> f64 {
        self.trace_derivatives().0 + self.x * self.x / (4.0 * self.t)
    }

    /// `phi(z) = t^{1/6} [Ai(zeta) + sum_j s_j K(zeta, u_j) (Rf)_j]`, `zeta = t^{2/3} z - x t^{-1/3}`.
    pub fn phi_eval(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain { func: "phi_eval", value: z, detail: "must be finite" });
        }
        let zeta = self.map.to_u(z);
        let (a, ap) = airy_pair_unchecked(zeta);
        let mut corr = 0.0;
        for j in 0..self.dim() {
            let k = kernel_from_values(zeta, a, ap, self.u[j], self.ai[j], self.aip[j], self.switch);
            corr += self.sqrt_sw[j] * k * self.resolvent_ai[j];
        }
        Ok(self.t.powf(1.0 / 6.0) * (a + corr))
    }

    pub fn phi_eval_many(&self, zs: &[f64]) -> Result<Vec<f64>> {
        zs.iter().map(|&z| self.phi_eval(z)).collect()
    }

    /// `int phi^2 d sigma` with the measure discretized by `rule`.
    pub fn phi_sq_integral_with(&self, rule: &StieltjesRule) -> Result<f64> {
        let phi = self.phi_eval_many(&rule.points)?;
        Ok(phi.iter().zip(&rule.weights).map(|(p, w)| w * p * p).sum())
    }

    /// Largest eigenvalue of `M` by power iteration (M is positive semidefinite).
    pub fn spectral_radius(&self, iterations: usize) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let m = self.matrix();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * (i as f64).sin()).collect();
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let w: Vec<f64> = (0..n).map(|i| dot(&m[i * n..i * n + n], &v)).collect();
            let norm = dot(&w, &w).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = dot(&v, &w) / dot(&v, &v);
            v = w.into_iter().map(|x| x / norm).collect();
        }
        lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::airy_kernel;

    fn res() -> Resolution {
        Resolution::default()
    }

    #[test]
    fn oversized_grid_is_refused() {
        let s = SigmaWeight::step(1.0).unwrap();
        let err = ZGrid::new(&s, 50.0, 1e-3, &Resolution::default()).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }), "{err}");
        assert_eq!(err.kind(), crate::error::ErrorKind::Numerical);
    }

    #[test]
    fn zero_weight_is_identity() {
        let op = DiscretizedOperator::build(&SigmaWeight::zero(), 0.3, 0.5, &res()).unwrap();
        assert_eq!(op.dim(), 0);
        assert_eq!(op.log_det(), 0.0);
        let t: f64 = 0.5;
        for &z in &[-3.0, 0.0, 2.5] {
            let zeta = t.cbrt().powi(2) * z - 0.3 / t.cbrt();
            let want = t.powf(1.0 / 6.0) * crate::specfun::airy_ai(zeta).unwrap();
            assert_eq!(op.phi_eval(z).unwrap(), want);
        }
    }

    #[test]
    fn step_grid_starts_at_zero() {
        let op = DiscretizedOperator::build(&SigmaWeight::step(1.0).unwrap(), 0.0, 1.0, &res()).unwrap();
        assert_eq!(op.rule().panels[0], 0.0);
    }

    #[test]
    fn lowest_atom_survives_round_trip() {
        let s = SigmaWeight::piecewise(&[(-1.0, 0.3), (0.0, 1.0)]).unwrap();
        for (x, t) in [(0.8, 0.05), (0.3, 0.2), (-1.0, 0.5), (2.1, 0.013)] {
            let g = ZGrid::new(&s, x, t, &res()).unwrap();
            assert_eq!(g.rule().panels[0], -1.0);
            assert_eq!(g.dsigma_rule(&s).unwrap().atom_count, 2);
        }
    }

    #[test]
    fn matrix_symmetric_and_positive_pivots() {
        for s in [SigmaWeight::kpz(), SigmaWeight::piecewise(&[(-1.0, 0.3), (0.0, 1.0)]).unwrap()] {
            let op = DiscretizedOperator::build(&s, -0.2, 0.2, &res()).unwrap();
            let n = op.dim();
            let m = op.matrix();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(m[i * n + j], m[j * n + i]);
                }
            }
            assert!(op.factor_diagonal().iter().all(|&d| d > 0.0));
            assert!(op.log_det() <= 1e-12);
            let rho = op.spectral_radius(200);
            assert!(rho < 1.0 - 1e-10, "rho {rho}");
        }
    }

    #[test]
    fn step_reduces_to_scaled_airy_matrix() {
        let gamma = 0.5;
        let op = DiscretizedOperator::build(&SigmaWeight::step(gamma).unwrap(), 0.4, 0.3, &res()).unwrap();
        let rule = op.rule();
        let n = op.dim();
        let m = op.matrix();
        for i in (0..n).step_by(7) {
            for j in (0..n).step_by(5) {
                let plain =
                    (rule.weights[i] * rule.weights[j]).sqrt() * airy_kernel(rule.nodes[i], rule.nodes[j]).unwrap();
                assert!((m[i * n + j] - gamma * plain).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn resolvent_contract() {
        let op = DiscretizedOperator::build(&SigmaWeight::kpz(), 0.5, 0.5, &res()).unwrap();
        let n = op.dim();
        let rhs: Vec<f64> = (0..n).map(|i| (0.1 * i as f64).cos()).collect();
        let g = op.solve_resolvent(&rhs).unwrap();
        let m = op.matrix();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let r = g[i] - dot(&m[i * n..i * n + n], &g) - rhs[i];
            worst = worst.max(r.abs());
        }
        assert!(worst <= 1e-12);
        assert!(op.solve_resolvent(&rhs[1..]).is_err());
    }

    #[test]
    fn self_convergence_at_kpz_point() {
        let s = SigmaWeight::kpz();
        let a = DiscretizedOperator::build(&s, 0.5, 0.5, &res()).unwrap().log_det();
        let b = DiscretizedOperator::build(&s, 0.5, 0.5, &res().doubled()).unwrap().log_det();
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn spectral_convergence_rates() {
        let sigmas = [
            SigmaWeight::step(1.0).unwrap(),
            SigmaWeight::step(0.5).unwrap(),
            SigmaWeight::kpz(),
            SigmaWeight::fermi(0.5).unwrap(),
            SigmaWeight::piecewise(&[(-1.0, 0.3), (0.0, 1.0)]).unwrap(),
        ];
        for s in &sigmas {
            for &(x, t) in &[(-1.0, 0.5), (0.0, 0.5), (0.5, 0.1)] {
                let ld = |n: usize| {
                    let r = Resolution { n_per_panel: n, ..res() };
                    DiscretizedOperator::build(s, x, t, &r).unwrap().log_det()
                };
                let (l6, l12, l24, l48) = (ld(6), ld(12), ld(24), ld(48));
                let d = [(l6 - l12).abs(), (l12 - l24).abs(), (l24 - l48).abs()];
                for w in d.windows(2) {
                    assert!(w[1] <= 1e-12 || w[1] * 10.0 <= w[0], "{} at ({x},{t}): {d:?}", s.label());
                }
            }
        }
    }

    #[test]
    fn trace_derivatives_match_differences() {
        let s = SigmaWeight::kpz();
        let (x, t) = (0.3, 0.2);
        let grid = ZGrid::new(&s, x, t, &res()).unwrap();
        let ld = |xx: f64| DiscretizedOperator::on_grid(&grid, xx, t).unwrap().log_det();
        let h = 1e-3;
        let d1 = (ld(x - 2.0 * h) - 8.0 * ld(x - h) + 8.0 * ld(x + h) - ld(x + 2.0 * h)) / (12.0 * h);
        let d2 =
            (-ld(x - 2.0 * h) + 16.0 * ld(x - h) - 30.0 * ld(x) + 16.0 * ld(x + h) - ld(x + 2.0 * h)) / (12.0 * h * h);
        let op = DiscretizedOperator::on_grid(&grid, x, t).unwrap();
        let (e1, e2) = op.trace_derivatives();
        assert!((d1 - e1).abs() < 1e-9 * e1.abs().max(1.0), "{d1} {e1}");
        assert!((d2 - e2).abs() < 1e-6 * e2.abs().max(1.0), "{d2} {e2}");
    }

    #[test]
    fn phi_continuous_at_atoms() {
        let s = SigmaWeight::piecewise(&[(-1.0, 0.3), (0.0, 1.0)]).unwrap();
        let op = DiscretizedOperator::build(&s, 0.3, 0.2, &res()).unwrap();
        for &(r, _) in s.atoms() {
            let at = op.phi_eval(r).unwrap();
            let lo = op.phi_eval(r - 1e-6).unwrap();
            let hi = op.phi_eval(r + 1e-6).unwrap();
            assert!((lo - hi).abs() <= 1e-5 * at.abs().max(1.0));
        }
    }

    #[test]
    fn phi_tail_follows_airy_decay() {
        // the ratio phi / (t^{1/6} Ai(zeta)) tends to one with an O(zeta^{-1/2}) correction
        let (x, t) = (0.3, 0.5);
        let op = DiscretizedOperator::build(&SigmaWeight::kpz(), x, t, &res()).unwrap();
        let map = AiryScaling::new(x, t);
        let ratio = |zeta: f64| {
            let z = map.to_z(zeta);
            op.phi_eval(z).unwrap() / (t.powf(1.0 / 6.0) * crate::specfun::airy_ai(zeta).unwrap())
        };
        let (r2, r4, r8) = (ratio(2.0) - 1.0, ratio(4.0) - 1.0, ratio(8.0) - 1.0);
        assert!(r8.abs() < r4.abs() && r4.abs() < r2.abs());
        assert!(r8.abs() < 0.1, "{r8}");
    }
}
