//! The weight `sigma`: a non-decreasing function on the line with values in
//! [0, 1], possibly with jumps (atoms of `d sigma`), and its Stieltjes integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Constants in `|sigma(r) - gamma chi(r)| <= c1 exp(-c2 |r|)` and
/// `|sigma'(r)| <= c3 |r|^{-3}` for `|r| > big_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub big_c: f64,
}

impl DecayConstants {
    /// Distance beyond which the exponential bound drops below `tol`.
    pub fn tail_cut(&self, tol: f64) -> f64 {
        ((self.c1 / tol).ln() / self.c2).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SigmaShape {
    /// Identically zero.
    Zero,
    /// Right-continuous staircase; each entry is (location, mass).
    Steps(Vec<(f64, f64)>),
    /// `1 / (1 + exp(-r / theta))`.
    Logistic { theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaWeight {
    label: String,
    shape: SigmaShape,
    gamma: f64,
    decay: Option<DecayConstants>,
    antisymmetric: bool,
}

impl SigmaWeight {
    /// The zero weight; its operator vanishes and `Q = 1`.
    pub fn zero() -> Self {
        SigmaWeight {
            label: "zero".into(),
            shape: SigmaShape::Zero,
            gamma: 0.0,
            decay: Some(DecayConstants { c1: f64::MIN_POSITIVE, c2: 1.0, c3: 0.0, big_c: 0.0 }),
            antisymmetric: false,
        }
    }

    /// `gamma` times the indicator of `[0, inf)`.
    pub fn step(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidSigma(format!("step gamma {gamma} outside (0, 1]")));
        }
        let mut s = Self::piecewise(&[(0.0, gamma)])?;
        s.label = format!("step({gamma})");
        Ok(s)
    }

    pub fn kpz() -> Self {
        let mut s = Self::fermi(1.0).expect("theta = 1 is valid");
        s.label = "kpz".into();
        s
    }

    pub fn fermi(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidSigma(format!("fermi theta {theta} must be positive")));
        }
        let big_c = 20.0 * theta;
        // max of r^3 sigma'(r) beyond big_c, attained at big_c
        let c3 = big_c.powi(3) * (-20.0f64).exp() / theta;
        Ok(SigmaWeight {
            label: format!("fermi({theta})"),
            shape: SigmaShape::Logistic { theta },
            gamma: 1.0,
            decay: Some(DecayConstants { c1: 1.0, c2: 1.0 / theta, c3, big_c }),
            antisymmetric: true,
        })
    }

    /// `(1 + tanh(r / theta)) / 2`, which is `fermi(theta / 2)`.
    pub fn tanh(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidSigma(format!("tanh theta {theta} must be positive")));
        }
        let mut s = Self::fermi(0.5 * theta)?;
        s.label = format!("tanh({theta})");
        Ok(s)
    }

    /// Staircase from `(location, level)` pairs; levels are non-decreasing.
    pub fn piecewise(steps: &[(f64, f64)]) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidSigma("piecewise sigma needs at least one step".into()));
        }
        let mut prev_loc = f64::NEG_INFINITY;
        let mut prev_level = 0.0;
        let mut atoms = Vec::new();
        for (i, &(loc, level)) in steps.iter().enumerate() {
            if !loc.is_finite() || !level.is_finite() {
                return Err(Error::InvalidSigma(format!("step {i}: non-finite entry")));
            }
            if loc <= prev_loc {
                return Err(Error::InvalidSigma(format!("step {i}: locations must increase")));
            }
            if !(0.0..=1.0).contains(&level) {
                return Err(Error::InvalidSigma(format!("step {i}: level {level} outside [0, 1]")));
            }
            if level < prev_level {
                return Err(Error::InvalidSigma(format!("step {i}: decreasing level {level} < {prev_level}")));
            }
            if level > prev_level {
                atoms.push((loc, level - prev_level));
            }
            prev_loc = loc;
            prev_level = level;
        }
        let gamma = prev_level;
        if gamma <= 0.0 {
            return Err(Error::InvalidSigma("final level must be positive".into()));
        }
        // |sigma - gamma chi| vanishes outside [first, last] atom; bound it with c2 = 1
        let reach = atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        let mut level = 0.0;
        for (k, &(loc, mass)) in atoms.iter().enumerate() {
            level += mass;
            let next = atoms.get(k + 1).map(|a| a.0).unwrap_or(f64::INFINITY);
            // on [loc, next) sigma = level; compare against gamma chi on both sides of 0
            if loc < 0.0 {
                worst = worst.max(level);
            }
            if next > 0.0 {
                worst = worst.max(gamma - level);
            }
        }
        let c1 = (worst * reach.exp()).max(f64::MIN_POSITIVE);
        Ok(SigmaWeight {
            label: "piecewise".into(),
            shape: SigmaShape::Steps(atoms),
            gamma,
            decay: Some(DecayConstants { c1, c2: 1.0, c3: 0.0, big_c: reach }),
            antisymmetric: false,
        })
    }

    /// Parse the JSON configuration form.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SigmaSpec = serde_json::from_str(text)?;
        spec.build()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shape(&self) -> &SigmaShape {
        &self.shape
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn decay(&self) -> Option<DecayConstants> {
        self.decay
    }

    /// Replace the decay constants (used for user-supplied bounds).
    pub fn with_decay(mut self, decay: Option<DecayConstants>) -> Self {
        self.decay = decay;
        self
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.antisymmetric
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, SigmaShape::Zero)
    }

    /// Jump locations and masses.
    pub fn atoms(&self) -> &[(f64, f64)] {
        match &self.shape {
            SigmaShape::Steps(a) => a,
            _ => &[],
        }
    }

    /// Left end of the support when sigma vanishes identically below it.
    pub fn lower_support(&self) -> Option<f64> {
        match &self.shape {
            SigmaShape::Steps(a) => Some(a[0].0),
            _ => None,
        }
    }

    /// Width of the smooth transition, if any.
    pub fn transition_width(&self) -> Option<f64> {
        match self.shape {
            SigmaShape::Logistic { theta } => Some(theta),
            _ => None,
        }
    }

    /// `sigma(r)`; right limit at atoms.
    pub fn value(&self, r: f64) -> f64 {
        match &self.shape {
            SigmaShape::Zero => 0.0,
            SigmaShape::Steps(atoms) => atoms.iter().take_while(|a| a.0 <= r).map(|a| a.1).sum(),
            SigmaShape::Logistic { theta } => logistic(r / theta),
        }
    }

    /// `sigma'(r)` away from atoms.
    pub fn density(&self, r: f64) -> f64 {
        match self.shape {
            SigmaShape::Logistic { theta } => {
                let v = logistic(r / theta);
                let w = logistic(-r / theta);
                v * w / theta
            }
            _ => 0.0,
        }
    }

    /// `lim sigma(r)` as `r -> -inf`.
    pub fn lower_limit(&self) -> f64 {
        0.0
    }

    /// Total mass of `d sigma`.
    pub fn total_mass(&self) -> f64 {
        self.gamma - self.lower_limit()
    }
}

fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// JSON form: `{"type": "step"|"kpz"|"fermi"|"piecewise"|"tanh", "gamma", "theta", "steps"}`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSpec {
    #[serde(rename = "type")]
    pub kind: SigmaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaKind {
    Step,
    Kpz,
    Fermi,
    Piecewise,
    Tanh,
}

impl SigmaSpec {
    pub fn build(&self) -> Result<SigmaWeight> {
        let unused = |field: &str, present: bool| {
            if present {
                Err(Error::InvalidSigma(format!("field `{field}` is not used by type {:?}", self.kind)))
            } else {
                Ok(())
            }
        };
        let theta =
            |name: &str| self.theta.ok_or_else(|| Error::InvalidSigma(format!("type {name} requires field `theta`")));
        match self.kind {
            SigmaKind::Step => {
                unused("theta", self.theta.is_some())?;
                unused("steps", self.steps.is_some())?;
                SigmaWeight::step(self.gamma.unwrap_or(1.0))
            }
            SigmaKind::Kpz => {
                unused("theta", self.theta.is_some())?;
                unused("steps", self.steps.is_some())?;
                check_unit_gamma(self.gamma)?;
                Ok(SigmaWeight::kpz())
            }
            SigmaKind::Fermi => {
                unused("steps", self.steps.is_some())?;
                check_unit_gamma(self.gamma)?;
                SigmaWeight::fermi(theta("fermi")?)
            }
            SigmaKind::Tanh => {
                unused("steps", self.steps.is_some())?;
                check_unit_gamma(self.gamma)?;
                SigmaWeight::tanh(theta("tanh")?)
            }
            SigmaKind::Piecewise => {
                unused("theta", self.theta.is_some())?;
                let steps = self
                    .steps
                    .as_ref()
                    .ok_or_else(|| Error::InvalidSigma("type piecewise requires field `steps`".into()))?;
                let pairs: Vec<(f64, f64)> = steps.iter().map(|s| (s[0], s[1])).collect();
                let s = SigmaWeight::piecewise(&pairs)?;
                if let Some(g) = self.gamma {
                    if (g - s.gamma()).abs() > 1e-15 {
                        return Err(Error::InvalidSigma(format!(
                            "gamma {g} differs from the last level {}",
                            s.gamma()
                        )));
                    }
                }
                Ok(s)
            }
        }
    }
}

fn check_unit_gamma(gamma: Option<f64>) -> Result<()> {
    match gamma {
        Some(g) if g != 1.0 => Err(Error::InvalidSigma(format!("smooth weights have gamma = 1, got {g}"))),
        _ => Ok(()),
    }
}

/// Points and weights such that `sum w_k f(p_k)` approximates `int f d sigma`
/// over `support`: atoms first, then density nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub atom_count: usize,
}

const DSIGMA_NODES: usize = 32;

pub fn dsigma_rule(s: &SigmaWeight, support: (f64, f64)) -> Result<StieltjesRule> {
    let (a, b) = support;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::param("integrate_dsigma: support must be finite"));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &(r, m) in s.atoms() {
        if r >= a && r <= b {
            points.push(r);
            weights.push(m);
        }
    }
    let atom_count = points.len();
    if let SigmaShape::Logistic { theta } = s.shape {
        if b > a {
            let width = 4.0 * theta;
            let first = (a / width).floor() as i64;
            let last = (b / width).ceil() as i64;
            let mut bps: Vec<f64> = (first..=last).map(|k| k as f64 * width).filter(|&p| p > a && p < b).collect();
            bps.insert(0, a);
            bps.push(b);
            let rule = quadrature::composite_rule(&bps, DSIGMA_NODES)?;
            for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
                let d = s.density(r);
                if d > 0.0 {
                    points.push(r);
                    weights.push(w * d);
                }
            }
        }
    }
    Ok(StieltjesRule { points, weights, atom_count })
}

/// `int f d sigma = sum m_j f(r_j) + int sigma' f` over `support`.
pub fn integrate_dsigma(f: impl Fn(f64) -> f64, s: &SigmaWeight, support: (f64, f64)) -> Result<f64> {
    let rule = dsigma_rule(s, support)?;
    let mut total = 0.0;
    for (&p, &w) in rule.points.iter().zip(&rule.weights) {
        let v = f(p);
        if !v.is_finite() {
            return Err(Error::NonFinite("integrate_dsigma integrand"));
        }
        total += w * v;
    }
    Ok(total)
}

/// `int (chi_(0,inf)(r) - sigma(r)) dr`; finite only when `gamma = 1`.
pub fn sigma_gap_integral(s: &SigmaWeight) -> Result<f64> {
    if s.gamma() != 1.0 {
        return Err(Error::Divergent(format!(
            "gap integral of {} diverges since sigma tends to {} != 1",
            s.label(),
            s.gamma()
        )));
    }
    match &s.shape {
        SigmaShape::Zero => unreachable!("zero weight has gamma 0"),
        SigmaShape::Steps(atoms) => {
            let mut cuts: Vec<f64> = atoms.iter().map(|a| a.0).collect();
            cuts.push(0.0);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut total = 0.0;
            for w in cuts.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                let chi = if mid > 0.0 { 1.0 } else { 0.0 };
                total += (chi - s.value(mid)) * (w[1] - w[0]);
            }
            Ok(total)
        }
        SigmaShape::Logistic { theta } => {
            let decay = s.decay().ok_or_else(|| Error::InvalidSigma("decay constants required".into()))?;
            let cut = decay.tail_cut(1e-18);
            let width = 2.0 * theta;
            let n = (cut / width).ceil() as usize;
            let right: Vec<f64> = (0..=n).map(|k| k as f64 * width).collect();
            let left: Vec<f64> = right.iter().rev().map(|&r| -r).collect();
            let upper = quadrature::composite_rule(&right, 24)?.integrate(|r| logistic(-r / theta));
            let lower = quadrature::composite_rule(&left, 24)?.integrate(|r| logistic(r / theta));
            Ok(upper - lower)
        }
    }
}
