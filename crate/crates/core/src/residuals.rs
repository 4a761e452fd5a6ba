//! Normalized residuals of the differential and integral identities satisfied
//! by `log Q`, `u` and `phi`.
//!
//! Every residual is `raw / scale` where `scale` is the largest magnitude
//! among the individual terms of the equation, so cancellation cannot hide
//! behind large terms.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::observables::{FdScheme, PointData, Probe};
use crate::quadrature::Resolution;
use crate::sigma::SigmaWeight;
use crate::stencil::{self, weights};

/// Smallest admissible scale; all-zero equations report `normalized = 0`.
const SCALE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub raw: f64,
    pub scale: f64,
    pub normalized: f64,
    pub meta: Value,
}

impl ResidualReport {
    fn from_terms(name: &str, terms: &[f64], meta: Value) -> Result<Self> {
        let raw: f64 = terms.iter().sum();
        let scale = terms.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(SCALE_FLOOR);
        Self::new(name, raw, scale, meta)
    }

    fn new(name: &str, raw: f64, scale: f64, meta: Value) -> Result<Self> {
        let normalized = raw / scale;
        if !normalized.is_finite() {
            return Err(Error::NonFinite("residual"));
        }
        Ok(ResidualReport { name: name.to_string(), raw, scale, normalized, meta })
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.normalized.abs() <= tol
    }

    /// One JSON line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// The identity families that can be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Kdv,
    Schrodinger,
    Idpii,
    Evolution,
    Mkdv,
    PhiIdentity,
    Cylkdv,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] = [
        CheckKind::Kdv,
        CheckKind::Schrodinger,
        CheckKind::Idpii,
        CheckKind::Evolution,
        CheckKind::Mkdv,
        CheckKind::PhiIdentity,
        CheckKind::Cylkdv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Kdv => "kdv",
            CheckKind::Schrodinger => "schrodinger",
            CheckKind::Idpii => "idpii",
            CheckKind::Evolution => "evolution",
            CheckKind::Mkdv => "mkdv",
            CheckKind::PhiIdentity => "phi-identity",
            CheckKind::Cylkdv => "cylkdv",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Acceptance tolerance on `|normalized|`.
    pub fn tolerance(self) -> f64 {
        match self {
            CheckKind::Kdv | CheckKind::Schrodinger | CheckKind::Idpii | CheckKind::Cylkdv => 1e-4,
            CheckKind::Evolution | CheckKind::Mkdv => 5e-4,
            CheckKind::PhiIdentity => 1e-6,
        }
    }

    /// Whether the check is evaluated at each sample `z`.
    pub fn uses_z(self) -> bool {
        matches!(self, CheckKind::Schrodinger | CheckKind::Idpii | CheckKind::Evolution | CheckKind::Mkdv)
    }
}

/// Shared evaluator for all checks at one `(x, t)`; determinants are memoized
/// across checks.
pub struct PointChecks<'a> {
    probe: Probe<'a>,
    x: f64,
    t: f64,
    zs: Vec<f64>,
    fd: FdScheme,
    res: Resolution,
}

impl<'a> PointChecks<'a> {
    pub fn new(s: &'a SigmaWeight, x: f64, t: f64, zs: &[f64], fd: &FdScheme, res: &Resolution) -> Result<Self> {
        fd.validate(t)?;
        res.validate()?;
        if zs.iter().any(|z| !z.is_finite()) {
            return Err(Error::param("sample points z must be finite"));
        }
        let probe = Probe::new(s, x, t, res, zs)?;
        Ok(PointChecks { probe, x, t, zs: zs.to_vec(), fd: *fd, res: *res })
    }

    fn meta(&self, z: Option<f64>) -> Value {
        let mut m = json!({
            "sigma": self.probe.sigma().label(),
            "x": self.x,
            "t": self.t,
            "fd": self.fd,
            "nodes": self.probe.grid().len(),
            "n_per_panel": self.res.n_per_panel,
            "tail_tol": self.res.tail_tol,
        });
        if let Some(z) = z {
            m["z"] = json!(z);
        }
        m
    }

    /// `u_t + 2 u u_x + u_xxx / 6`.
    pub fn kdv(&self) -> Result<ResidualReport> {
        let (p, fd, x, t) = (&self.probe, &self.fd, self.x, self.t);
        let u = p.at(x, t, false)?.u();
        // only the determinant part of u = d2 log Q + x/2t is differenced
        let ut = p.dt(fd, 1, x, t, d2)? - x / (2.0 * t * t);
        let ux = p.dx(fd, 1, x, t, d2)? + 1.0 / (2.0 * t);
        let uxxx = p.dx(fd, 3, x, t, d2)?;
        ResidualReport::from_terms("kdv", &[ut, 2.0 * u * ux, uxxx / 6.0], self.meta(None))
    }

    /// `phi_xx - (z - 2u) phi` at every sample point.
    pub fn schrodinger(&self) -> Result<Vec<ResidualReport>> {
        let (p, fd, x, t) = (&self.probe, &self.fd, self.x, self.t);
        let c = p.at(x, t, false)?;
        let u = c.u();
        let phi_xx = p.dx_phi(fd, 2, x, t)?;
        self.zs
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let phi = c.phi_z[i];
                ResidualReport::from_terms("schrodinger", &[phi_xx[i], -z * phi, 2.0 * u * phi], self.meta(Some(z)))
            })
            .collect()
    }

    /// `phi_xx - (z - x/t + (2/t) int phi^2 d sigma) phi`.
    pub fn idpii(&self) -> Result<Vec<ResidualReport>> {
        let (p, fd, x, t) = (&self.probe, &self.fd, self.x, self.t);
        let c = p.at(x, t, true)?;
        let potential = 2.0 / t * p.phi_sq_int(&c);
        let phi_xx = p.dx_phi(fd, 2, x, t)?;
        self.zs
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let phi = c.phi_z[i];
                let terms = [phi_xx[i], -z * phi, x / t * phi, -potential * phi];
                ResidualReport::from_terms("idpii", &terms, self.meta(Some(z)))
            })
            .collect()
    }

    /// `phi_t + (2/3)(z + u) phi_x - u_x phi / 3`.
    pub fn evolution(&self) -> Result<Vec<ResidualReport>> {
        let (p, fd, x, t) = (&self.probe, &self.fd, self.x, self.t);
        let c = p.at(x, t, false)?;
        let u = c.u();
        let ux = p.dx(fd, 1, x, t, d2)? + 1.0 / (2.0 * t);
        let phi_t = p.dt_phi(fd, x, t)?;
        let phi_x = p.dx_phi(fd, 1, x, t)?;
        self.zs
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let terms = [phi_t[i], 2.0 / 3.0 * z * phi_x[i], 2.0 / 3.0 * u * phi_x[i], -ux * c.phi_z[i] / 3.0];
                ResidualReport::from_terms("evolution", &terms, self.meta(Some(z)))
            })
            .collect()
    }

    /// `phi_t + (2/3) phi_xxx + phi/2t + x phi_x / t
    ///  - (2/t) phi int phi phi_x d sigma - (2/t) phi_x int phi^2 d sigma`.
    pub fn mkdv(&self) -> Result<Vec<ResidualReport>> {
        let (p, fd, x, t) = (&self.probe, &self.fd, self.x, self.t);
        let c = p.at(x, t, true)?;
        let sq = p.phi_sq_int(&c);
        let cross = p.pair_int(&c.phi_measure, &p.dx_phi_measure(fd, x, t)?);
        let phi_t = p.dt_phi(fd, x, t)?;
        let phi_x = p.dx_phi(fd, 1, x, t)?;
        let phi_xxx = p.dx_phi(fd, 3, x, t)?;
        self.zs
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let phi = c.phi_z[i];
                let terms = [
                    phi_t[i],
                    2.0 / 3.0 * phi_xxx[i],
                    phi / (2.0 * t),
                    x * phi_x[i] / t,
                    -2.0 / t * phi * cross,
                    -2.0 / t * phi_x[i] * sq,
                ];
                ResidualReport::from_terms("mkdv", &terms, self.meta(Some(z)))
            })
            .collect()
    }

    /// `int phi^2 d sigma + t u - x/2`, normalized by `max(1, |x|/2)`.
    pub fn phi_identity(&self) -> Result<ResidualReport> {
        let (x, t) = (self.x, self.t);
        let c = self.probe.at(x, t, true)?;
        let raw = self.probe.phi_sq_int(&c) + t * c.u() - 0.5 * x;
        ResidualReport::new("phi-identity", raw, (0.5 * x.abs()).max(1.0), self.meta(None))
    }

    /// Cylindrical KdV at the `(rho, T)` matching this point:
    /// `x = -rho / sqrt(T)`, `t = 1 / sqrt(T)`.
    pub fn cyl_kdv(&self) -> Result<ResidualReport> {
        let big_t = 1.0 / (self.t * self.t);
        let rho = -self.x * big_t.sqrt();
        // U = u / T + rho / 2T, in which the x/2t part of u cancels
        let cyl = |r: f64, bt: f64| -> Result<f64> {
            let d = self.probe.at(-r / bt.sqrt(), 1.0 / bt.sqrt(), false)?;
            Ok(d.d2log_q / bt)
        };
        let h_rho = self.fd.h_x * big_t.sqrt();
        let h_big_t = self.fd.h_t / self.t * big_t;
        let (order, rich) = (self.fd.order, self.fd.richardson);
        let uu = cyl(rho, big_t)?;
        let u_t = stencil::apply(&weights(1, order, rich, h_big_t), big_t, |bt| cyl(rho, bt))?;
        let u_r = stencil::apply(&weights(1, order, rich, h_rho), rho, |r| cyl(r, big_t))?;
        let u_rrr = stencil::apply(&weights(3, order, rich, h_rho), rho, |r| cyl(r, big_t))?;
        let terms = [u_t, u_rrr / 12.0, uu * u_r, uu / (2.0 * big_t)];
        let mut meta = self.meta(None);
        meta["rho"] = json!(rho);
        meta["big_t"] = json!(big_t);
        ResidualReport::from_terms("cylkdv", &terms, meta)
    }

    pub fn run(&self, kind: CheckKind) -> Result<Vec<ResidualReport>> {
        match kind {
            CheckKind::Kdv => Ok(vec![self.kdv()?]),
            CheckKind::Schrodinger => self.schrodinger(),
            CheckKind::Idpii => self.idpii(),
            CheckKind::Evolution => self.evolution(),
            CheckKind::Mkdv => self.mkdv(),
            CheckKind::PhiIdentity => Ok(vec![self.phi_identity()?]),
            CheckKind::Cylkdv => Ok(vec![self.cyl_kdv()?]),
        }
    }
}

pub fn kdv_residual(s: &SigmaWeight, x: f64, t: f64, fd: &FdScheme) -> Result<ResidualReport> {
    PointChecks::new(s, x, t, &[], fd, &Resolution::default())?.kdv()
}

pub fn schrodinger_residual(s: &SigmaWeight, x: f64, t: f64, z: f64, fd: &FdScheme) -> Result<ResidualReport> {
    first(PointChecks::new(s, x, t, &[z], fd, &Resolution::default())?.schrodinger()?)
}

pub fn idpii_residual(s: &SigmaWeight, x: f64, t: f64, z: f64, fd: &FdScheme) -> Result<ResidualReport> {
    first(PointChecks::new(s, x, t, &[z], fd, &Resolution::default())?.idpii()?)
}

pub fn evolution_residual(s: &SigmaWeight, x: f64, t: f64, z: f64, fd: &FdScheme) -> Result<ResidualReport> {
    first(PointChecks::new(s, x, t, &[z], fd, &Resolution::default())?.evolution()?)
}

pub fn mkdv_residual(s: &SigmaWeight, x: f64, t: f64, z: f64, fd: &FdScheme) -> Result<ResidualReport> {
    first(PointChecks::new(s, x, t, &[z], fd, &Resolution::default())?.mkdv()?)
}

pub fn phi_identity_gap(s: &SigmaWeight, x: f64, t: f64) -> Result<ResidualReport> {
    PointChecks::new(s, x, t, &[], &FdScheme::default_for(t), &Resolution::default())?.phi_identity()
}

/// Cylindrical KdV at `(rho, big_t)`; `fd` is the scheme of the matching `(x, t)`.
pub fn cyl_kdv_residual(s: &SigmaWeight, rho: f64, big_t: f64, fd: &FdScheme) -> Result<ResidualReport> {
    if !(big_t > 0.0 && big_t.is_finite()) || !rho.is_finite() {
        return Err(Error::param(format!("need finite rho and T > 0, got rho={rho}, T={big_t}")));
    }
    let (x, t) = (-rho / big_t.sqrt(), 1.0 / big_t.sqrt());
    PointChecks::new(s, x, t, &[], fd, &Resolution::default())?.cyl_kdv()
}

fn d2(d: &PointData) -> f64 {
    d.d2log_q
}

fn first(mut v: Vec<ResidualReport>) -> Result<ResidualReport> {
    v.pop().ok_or(Error::NonFinite("empty residual batch"))
}

/// All requested checks over the cartesian product of `points` and `zs`,
/// evaluated in parallel per point and returned in input order.
pub fn run_suite(
    s: &SigmaWeight,
    points: &[(f64, f64)],
    zs: &[f64],
    kinds: &[CheckKind],
    fd_for: impl Fn(f64) -> FdScheme + Sync,
    res: &Resolution,
) -> Result<Vec<ResidualReport>> {
    let per_point: Vec<Vec<ResidualReport>> = points
        .par_iter()
        .map(|&(x, t)| {
            let checks = PointChecks::new(s, x, t, zs, &fd_for(t), res)?;
            let mut out = Vec::new();
            for &k in kinds {
                out.extend(checks.run(k)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

/// The standard `(x, t)` test set.
pub const STANDARD_POINTS: [(f64, f64); 5] = [(-1.0, 0.5), (-0.2, 0.2), (0.0, 0.5), (0.3, 0.2), (0.8, 0.05)];

/// Default sample points for `phi`.
pub const STANDARD_Z: [f64; 3] = [-0.5, 0.0, 0.7];
