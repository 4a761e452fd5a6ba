//! Per-point quantities derived from `log Q`: `u`, `p`, samples of `phi`, and
//! `int phi^2 d sigma`, plus finite-difference derivatives in `x` and `t`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fredholm::{DiscretizedOperator, GridInfo, ZGrid};
use crate::quadrature::Resolution;
use crate::sigma::{SigmaWeight, StieltjesRule};
pub use crate::stencil::StencilOrder;
use crate::stencil::{self, weights};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdScheme {
    pub h_x: f64,
    pub h_t: f64,
    pub order: StencilOrder,
    pub richardson: bool,
}

impl FdScheme {
    /// `h_x = 5e-3 t^{1/3}` (the natural x-scale), `h_t = 5e-3 t`, 5-point
    /// stencils with Richardson extrapolation.
    pub fn default_for(t: f64) -> Self {
        FdScheme { h_x: 5e-3 * t.cbrt(), h_t: 5e-3 * t, order: StencilOrder::Fourth, richardson: true }
    }

    pub fn halved(&self) -> Self {
        FdScheme { h_x: 0.5 * self.h_x, h_t: 0.5 * self.h_t, ..*self }
    }

    pub fn validate(&self, t: f64) -> Result<()> {
        if !(self.h_x > 0.0 && self.h_x.is_finite()) {
            return Err(Error::param(format!("h_x = {} must be positive", self.h_x)));
        }
        if !(self.h_t > 0.0 && self.h_t < 0.1 * t) {
            return Err(Error::param(format!("h_t = {} must lie in (0, 0.1 t) with t = {t}", self.h_t)));
        }
        Ok(())
    }
}

/// Everything computed at one `(x, t)` on a frozen grid.
#[derive(Debug, Clone)]
pub struct PointData {
    pub x: f64,
    pub t: f64,
    pub log_q: f64,
    /// Exact `d/dx log Q` and `d2/dx2 log Q` of the discrete determinant.
    pub dlog_q: f64,
    pub d2log_q: f64,
    /// `phi` at the probe's sample points.
    pub phi_z: Vec<f64>,
    /// `phi` at the nodes of the probe's `d sigma` rule (empty unless requested).
    pub phi_measure: Vec<f64>,
}

impl PointData {
    pub fn u(&self) -> f64 {
        self.d2log_q + self.x / (2.0 * self.t)
    }

    pub fn p(&self) -> f64 {
        self.dlog_q + self.x * self.x / (4.0 * self.t)
    }
}

/// Memoizing evaluator on the grid of a fixed center point.
pub struct Probe<'a> {
    sigma: &'a SigmaWeight,
    grid: ZGrid,
    measure: StieltjesRule,
    zs: Vec<f64>,
    cache: RefCell<HashMap<(u64, u64), Rc<PointData>>>,
}

impl<'a> Probe<'a> {
    pub fn new(sigma: &'a SigmaWeight, x: f64, t: f64, res: &Resolution, zs: &[f64]) -> Result<Self> {
        let grid = ZGrid::new(sigma, x, t, res)?;
        let measure = grid.dsigma_rule(sigma)?;
        Ok(Probe { sigma, grid, measure, zs: zs.to_vec(), cache: RefCell::new(HashMap::new()) })
    }

    pub fn sigma(&self) -> &SigmaWeight {
        self.sigma
    }

    pub fn grid(&self) -> &ZGrid {
        &self.grid
    }

    pub fn measure(&self) -> &StieltjesRule {
        &self.measure
    }

    pub fn operator(&self, x: f64, t: f64) -> Result<DiscretizedOperator> {
        DiscretizedOperator::on_grid(&self.grid, x, t)
    }

    /// Data at `(x, t)`; `phi_measure` is filled when `with_measure`.
    pub fn at(&self, x: f64, t: f64, with_measure: bool) -> Result<Rc<PointData>> {
        let key = (x.to_bits(), t.to_bits());
        if let Some(d) = self.cache.borrow().get(&key) {
            if !with_measure || d.phi_measure.len() == self.measure.points.len() {
                return Ok(Rc::clone(d));
            }
        }
        let op = self.operator(x, t)?;
        let (dlog_q, d2log_q) = op.trace_derivatives();
        let phi_z = op.phi_eval_many(&self.zs)?;
        let phi_measure = if with_measure { op.phi_eval_many(&self.measure.points)? } else { Vec::new() };
        let data = Rc::new(PointData { x, t, log_q: op.log_det(), dlog_q, d2log_q, phi_z, phi_measure });
        self.cache.borrow_mut().insert(key, Rc::clone(&data));
        Ok(data)
    }

    /// `int phi^2 d sigma` from data evaluated with the measure.
    pub fn phi_sq_int(&self, d: &PointData) -> f64 {
        d.phi_measure.iter().zip(&self.measure.weights).map(|(p, w)| w * p * p).sum()
    }

    /// `int phi * psi d sigma` for two vectors on the measure nodes.
    pub fn pair_int(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.measure.weights).map(|((p, q), w)| w * p * q).sum()
    }

    /// x-derivative of a scalar read off the point data.
    pub fn dx(&self, fd: &FdScheme, derivative: u32, x: f64, t: f64, f: impl Fn(&PointData) -> f64) -> Result<f64> {
        let w = weights(derivative, fd.order, fd.richardson, fd.h_x);
        stencil::apply(&w, x, |xx| self.at(xx, t, false).map(|d| f(&d)))
    }

    /// t-derivative of a scalar read off the point data.
    pub fn dt(&self, fd: &FdScheme, derivative: u32, x: f64, t: f64, f: impl Fn(&PointData) -> f64) -> Result<f64> {
        let w = weights(derivative, fd.order, fd.richardson, fd.h_t);
        stencil::apply(&w, t, |tt| self.at(x, tt, false).map(|d| f(&d)))
    }

    /// x-derivative of `phi` at every sample point.
    pub fn dx_phi(&self, fd: &FdScheme, derivative: u32, x: f64, t: f64) -> Result<Vec<f64>> {
        let w = weights(derivative, fd.order, fd.richardson, fd.h_x);
        let mut acc = vec![0.0; self.zs.len()];
        for (off, c) in w {
            let d = self.at(x + off, t, false)?;
            for (a, p) in acc.iter_mut().zip(&d.phi_z) {
                *a += c * p;
            }
        }
        Ok(acc)
    }

    /// t-derivative of `phi` at every sample point.
    pub fn dt_phi(&self, fd: &FdScheme, x: f64, t: f64) -> Result<Vec<f64>> {
        let w = weights(1, fd.order, fd.richardson, fd.h_t);
        let mut acc = vec![0.0; self.zs.len()];
        for (off, c) in w {
            let d = self.at(x, t + off, false)?;
            for (a, p) in acc.iter_mut().zip(&d.phi_z) {
                *a += c * p;
            }
        }
        Ok(acc)
    }

    /// x-derivative of `phi` on the measure nodes.
    pub fn dx_phi_measure(&self, fd: &FdScheme, x: f64, t: f64) -> Result<Vec<f64>> {
        let w = weights(1, fd.order, fd.richardson, fd.h_x);
        let mut acc = vec![0.0; self.measure.points.len()];
        for (off, c) in w {
            let d = self.at(x + off, t, true)?;
            for (a, p) in acc.iter_mut().zip(&d.phi_measure) {
                *a += c * p;
            }
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableSet {
    pub x: f64,
    pub t: f64,
    pub log_q: f64,
    pub q_det: f64,
    /// `d2/dx2 log Q + x/2t` by finite differences.
    pub u: f64,
    /// `d/dx log Q + x^2/4t` by finite differences.
    pub p: f64,
    pub phi_sq_int: f64,
    /// `u` and `p` from the exact derivatives of the discrete determinant.
    pub u_trace: f64,
    pub p_trace: f64,
    pub fd: FdScheme,
    pub grid: GridInfo,
}

pub fn observe(s: &SigmaWeight, x: f64, t: f64, fd: &FdScheme) -> Result<ObservableSet> {
    observe_with(s, x, t, fd, &Resolution::default())
}

pub fn observe_with(s: &SigmaWeight, x: f64, t: f64, fd: &FdScheme, res: &Resolution) -> Result<ObservableSet> {
    fd.validate(t)?;
    let probe = Probe::new(s, x, t, res, &[])?;
    let center = probe.at(x, t, true)?;
    let d2 = probe.dx(fd, 2, x, t, |d| d.log_q)?;
    let d1 = probe.dx(fd, 1, x, t, |d| d.log_q)?;
    let op_info = GridInfo {
        nodes: probe.grid().len(),
        panels: probe.grid().rule().panels.len().saturating_sub(1),
        n_per_panel: res.n_per_panel,
        tail_tol: res.tail_tol,
    };
    Ok(ObservableSet {
        x,
        t,
        log_q: center.log_q,
        q_det: center.log_q.exp(),
        u: d2 + x / (2.0 * t),
        p: d1 + x * x / (4.0 * t),
        phi_sq_int: probe.phi_sq_int(&center),
        u_trace: center.u(),
        p_trace: center.p(),
        fd: *fd,
        grid: op_info,
    })
}

/// `observe` over an x-grid, evaluated in parallel, returned in input order.
pub fn u_profile(s: &SigmaWeight, xs: &[f64], t: f64, fd: &FdScheme) -> Result<Vec<ObservableSet>> {
    xs.par_iter().map(|&x| observe(s, x, t, fd)).collect()
}

/// `d u / dx` with `u` from the exact derivative route.
pub fn dx_u(s: &SigmaWeight, x: f64, t: f64, fd: &FdScheme) -> Result<f64> {
    fd.validate(t)?;
    Probe::new(s, x, t, &Resolution::default(), &[])?.dx(fd, 1, x, t, PointData::u)
}

pub fn dt_u(s: &SigmaWeight, x: f64, t: f64, fd: &FdScheme) -> Result<f64> {
    fd.validate(t)?;
    Probe::new(s, x, t, &Resolution::default(), &[])?.dt(fd, 1, x, t, PointData::u)
}

pub fn dx3_u(s: &SigmaWeight, x: f64, t: f64, fd: &FdScheme) -> Result<f64> {
    fd.validate(t)?;
    Probe::new(s, x, t, &Resolution::default(), &[])?.dx(fd, 3, x, t, PointData::u)
}

/// `d p / dx` where `p` itself is a first difference of `log Q`.
pub fn dx_p(s: &SigmaWeight, x: f64, t: f64, fd: &FdScheme) -> Result<f64> {
    fd.validate(t)?;
    let probe = Probe::new(s, x, t, &Resolution::default(), &[])?;
    let p_at = |xx: f64| -> Result<f64> { Ok(probe.dx(fd, 1, xx, t, |d| d.log_q)? + xx * xx / (4.0 * t)) };
    stencil::apply(&weights(1, fd.order, fd.richardson, fd.h_x), x, p_at)
}

/// `d^k phi(z) / dx^k` for `k` in 1..=3.
pub fn dx_phi(s: &SigmaWeight, x: f64, t: f64, z: f64, fd: &FdScheme, k: u32) -> Result<f64> {
    fd.validate(t)?;
    if !(1..=3).contains(&k) {
        return Err(Error::param(format!("derivative order {k} not in 1..=3")));
    }
    let probe = Probe::new(s, x, t, &Resolution::default(), &[z])?;
    Ok(probe.dx_phi(fd, k, x, t)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_closed_forms() {
        let s = SigmaWeight::zero();
        let (x, t) = (0.7, 0.4);
        let fd = FdScheme::default_for(t);
        let o = observe(&s, x, t, &fd).unwrap();
        assert_eq!(o.log_q, 0.0);
        assert!((o.u - x / (2.0 * t)).abs() < 1e-12);
        assert!((o.p - x * x / (4.0 * t)).abs() < 1e-12);
        assert_eq!(o.phi_sq_int, 0.0);
        assert!((dx_u(&s, x, t, &fd).unwrap() - 1.0 / (2.0 * t)).abs() < 1e-9);
        assert!((dt_u(&s, x, t, &fd).unwrap() + x / (2.0 * t * t)).abs() < 1e-9);
    }

    #[test]
    fn identity_at_kpz_point() {
        let (x, t) = (0.4, 0.2);
        let o = observe(&SigmaWeight::kpz(), x, t, &FdScheme::default_for(t)).unwrap();
        let gap = (o.phi_sq_int + t * o.u - x / 2.0).abs() / (x / 2.0).max(1.0);
        assert!(gap <= 1e-7, "gap {gap}");
        assert!((o.u - o.u_trace).abs() < 1e-6 * o.u.abs().max(1.0));
    }

    #[test]
    fn profile_keeps_order_and_matches_observe() {
        let s = SigmaWeight::kpz();
        let t = 0.3;
        let fd = FdScheme::default_for(t);
        let xs = [-0.4, 0.1, 0.6];
        let prof = u_profile(&s, &xs, t, &fd).unwrap();
        for (o, &x) in prof.iter().zip(&xs) {
            assert_eq!(o.x, x);
            assert_eq!(o.u.to_bits(), observe(&s, x, t, &fd).unwrap().u.to_bits());
        }
    }

    #[test]
    fn step_self_similarity() {
        let s = SigmaWeight::step(1.0).unwrap();
        for &(x, t) in &[(-0.3, 0.1), (0.2, 0.05)] {
            let a = observe(&s, x, t, &FdScheme::default_for(t)).unwrap();
            let (x8, t8) = (2.0 * x, 8.0 * t);
            let b = observe(&s, x8, t8, &FdScheme::default_for(t8)).unwrap();
            // u - x/2t = -t^{-2/3} y^2(-x t^{-1/3}) scales by t^{-2/3}
            let ga = (a.u - x / (2.0 * t)) * t.powf(2.0 / 3.0);
            let gb = (b.u - x8 / (2.0 * t8)) * t8.powf(2.0 / 3.0);
            assert!((ga - gb).abs() < 1e-6, "{ga} {gb}");
            assert!((a.log_q - b.log_q).abs() < 1e-9);
        }
    }

    #[test]
    fn p_derivative_is_u() {
        let s = SigmaWeight::kpz();
        let fd = FdScheme::default_for(0.3);
        let dp = dx_p(&s, 0.3, 0.3, &fd).unwrap();
        let u = observe(&s, 0.3, 0.3, &fd).unwrap().u;
        assert!((dp - u).abs() <= 5e-5, "{dp} {u}");
    }

    #[test]
    fn stencil_order_visible_in_u() {
        // halving h divides the 4th-order error by about 16
        let s = SigmaWeight::kpz();
        let (x, t) = (0.3, 0.2);
        let probe = Probe::new(&s, x, t, &Resolution::default(), &[]).unwrap();
        let exact = probe.at(x, t, false).unwrap().d2log_q;
        let fd = |h: f64| FdScheme { h_x: h, h_t: 1e-3, order: StencilOrder::Fourth, richardson: false };
        let err = |h: f64| (probe.dx(&fd(h), 2, x, t, |d| d.log_q).unwrap() - exact).abs();
        let ratio = err(0.08) / err(0.04);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn invalid_steps_rejected() {
        let fd = FdScheme { h_t: 0.2, ..FdScheme::default_for(1.0) };
        assert!(observe(&SigmaWeight::kpz(), 0.0, 1.0, &fd).is_err());
    }
}
