//! Closed-form comparators for the small-`t` regimes, a numerical estimator
//! of the limiting profile `v(x) = lim u(x, t)`, and the KPZ formulas.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fredholm::DiscretizedOperator;
use crate::observables::FdScheme;
use crate::painleve2::{log_f_tw, y_sq_from_determinant};
use crate::quadrature::{self, Resolution};
use crate::sigma::{sigma_gap_integral, SigmaWeight};
use crate::specfun::MathConstants;

/// Default width of the Painleve II strip in units of `t^{1/3}`.
pub const DEFAULT_M: f64 = 3.0;
/// Default right edge of the small-`t` regime with a limiting profile.
pub const DEFAULT_K: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `x <= -M t^{1/3}`: `u` is exponentially close to `x/2t`.
    #[serde(rename = "i")]
    Singular,
    /// `|x| < M t^{1/3}`: Painleve II scaling.
    #[serde(rename = "ii")]
    PainleveII,
    /// `M t^{1/3} <= x <= K`: `u` tends to a `t`-independent profile.
    #[serde(rename = "iii")]
    Profile,
    #[serde(rename = "outside")]
    Outside,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Singular => "i",
            Regime::PainleveII => "ii",
            Regime::Profile => "iii",
            Regime::Outside => "outside",
        }
    }
}

pub fn classify(x: f64, t: f64, m: f64, k: f64) -> Regime {
    let edge = m * t.cbrt();
    if x <= -edge {
        Regime::Singular
    } else if x < edge {
        Regime::PainleveII
    } else if x <= k {
        Regime::Profile
    } else {
        Regime::Outside
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("t = {t} must be positive")))
    }
}

/// `x / 2t`.
pub fn regime_i_u(x: f64, t: f64) -> f64 {
    x / (2.0 * t)
}

/// `log Q` is exponentially small in the first regime.
pub fn log_q_regime_i(_s: &SigmaWeight, _x: f64, _t: f64) -> f64 {
    0.0
}

/// `x/2t - t^{-2/3} y_gamma^2(-x t^{-1/3})`.
pub fn regime_ii_u(x: f64, t: f64, gamma: f64) -> Result<f64> {
    check_t(t)?;
    let s = -x / t.cbrt();
    let y2 = y_sq_from_determinant(gamma, s, &FdScheme::default_for(1.0))?;
    Ok(x / (2.0 * t) - y2 / (t.cbrt() * t.cbrt()))
}

/// `log F(-x t^{-1/3}; gamma)`, the leading term of `log Q` in the second regime.
pub fn log_q_regime_ii(x: f64, t: f64, gamma: f64) -> Result<f64> {
    check_t(t)?;
    log_f_tw(-x / t.cbrt(), gamma)
}

/// `1/(8 x^2) + (1/2) int (chi - sigma) dr`.
pub fn regime_iii_v_small_x(s: &SigmaWeight, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::param(format!("x = {x} must be positive")));
    }
    Ok(1.0 / (8.0 * x * x) + 0.5 * sigma_gap_integral(s)?)
}

/// `-x^3/12t - (1/8) log(x t^{-1/3}) + c_TW + int_0^x (x - r)(v(r) - 1/(8 r^2)) dr`.
pub fn log_q_regime_iii(x: f64, t: f64, v_fn: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    check_t(t)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::param(format!("x = {x} must be positive")));
    }
    let rule = quadrature::composite_rule(&[0.0, 0.5 * x, x], 24)?;
    let mut correction = 0.0;
    for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
        correction += w * (x - r) * (v_fn(r)? - 1.0 / (8.0 * r * r));
    }
    Ok(-x.powi(3) / (12.0 * t) - 0.125 * (x / t.cbrt()).ln() + MathConstants::TW_TAIL_CONSTANT + correction)
}

/// Correction model for `u(x, t) = v (1 + c g(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VModel {
    /// `g = t^{1/3} / x`.
    Linear,
    /// `g = t / x^3`, the leading correction for the exact step solution.
    Cubic,
    /// Subtract `u_step(x, t) - 1/(8x^2)` for the unit step, whose limit is
    /// known exactly, then fit the remainder with the `Linear` basis. The
    /// leading `t`-correction does not depend on the weight, so it cancels.
    StepControl,
}

impl VModel {
    fn basis(self, x: f64, t: f64) -> f64 {
        match self {
            VModel::Linear | VModel::StepControl => t.cbrt() / x,
            VModel::Cubic => t / (x * x * x),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VEstimate {
    pub x: f64,
    pub v_hat: f64,
    pub t_samples: Vec<f64>,
    /// Root-mean-square misfit relative to `|v_hat|`; zero for two samples.
    pub model_residual: f64,
    pub model: VModel,
    pub u_samples: Vec<f64>,
}

/// Sample times with `x t^{-1/3}` at 5 and 6.3.
pub fn default_t_samples(x: f64) -> Vec<f64> {
    vec![8e-3 * x.powi(3), 4e-3 * x.powi(3)]
}

/// Least-squares fit of `u(x, t_i)` to the model; samples must be strictly
/// decreasing and satisfy `3 t^{1/3} < x`.
pub fn v_estimate(s: &SigmaWeight, x: f64, t_samples: &[f64], model: VModel, res: &Resolution) -> Result<VEstimate> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::param(format!("x = {x} must be positive")));
    }
    if t_samples.len() < 2 {
        return Err(Error::param("need at least two t samples"));
    }
    if t_samples.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("t samples must be strictly decreasing"));
    }
    for &t in t_samples {
        check_t(t)?;
        if classify(x, t, DEFAULT_M, f64::INFINITY) != Regime::Profile {
            return Err(Error::RegimeViolated(format!("x = {x}, t = {t}: need {DEFAULT_M} t^(1/3) < x")));
        }
    }
    let u_at = |w: &SigmaWeight| -> Result<Vec<f64>> {
        t_samples.par_iter().map(|&t| DiscretizedOperator::build(w, x, t, res).map(|op| op.u_trace())).collect()
    };
    let u_samples = u_at(s)?;
    let fitted: Vec<f64> = if model == VModel::StepControl {
        let reference = u_at(&SigmaWeight::step(1.0)?)?;
        let limit = 1.0 / (8.0 * x * x);
        u_samples.iter().zip(&reference).map(|(u, r)| u - r + limit).collect()
    } else {
        u_samples.clone()
    };
    let g: Vec<f64> = t_samples.iter().map(|&t| model.basis(x, t)).collect();
    let n = g.len() as f64;
    let (gm, um) = (g.iter().sum::<f64>() / n, fitted.iter().sum::<f64>() / n);
    let sgg: f64 = g.iter().map(|gi| (gi - gm).powi(2)).sum();
    let sgu: f64 = g.iter().zip(&fitted).map(|(gi, ui)| (gi - gm) * (ui - um)).sum();
    let slope = sgu / sgg;
    let v_hat = um - slope * gm;
    let misfit: f64 = g.iter().zip(&fitted).map(|(gi, ui)| (ui - v_hat - slope * gi).powi(2)).sum::<f64>() / n;
    let model_residual = misfit.sqrt() / v_hat.abs().max(f64::MIN_POSITIVE);
    if !v_hat.is_finite() || !model_residual.is_finite() {
        return Err(Error::NonFinite("v_estimate fit"));
    }
    Ok(VEstimate { x, v_hat, t_samples: t_samples.to_vec(), model_residual, model, u_samples })
}

/// `Q_kpz(s T^{-1/6}, T^{-1/2})`, the Laplace transform of the narrow-wedge
/// KPZ height at time `T`.
pub fn kpz_laplace(s_param: f64, big_t: f64) -> Result<f64> {
    if !(big_t > 0.0 && big_t.is_finite()) {
        return Err(Error::param(format!("T = {big_t} must be positive")));
    }
    let (x, t) = kpz_point(s_param, big_t);
    Ok(DiscretizedOperator::build(&SigmaWeight::kpz(), x, t, &Resolution::default())?.q_det())
}

/// `(x, t)` at which `kpz_laplace(s, T)` evaluates the determinant.
pub fn kpz_point(s_param: f64, big_t: f64) -> (f64, f64) {
    (s_param * big_t.powf(-1.0 / 6.0), 1.0 / big_t.sqrt())
}

/// `(4/15 pi^6)(1 + pi^2 y)^{5/2} - 4/(15 pi^6) - 2y/(3 pi^4) - y^2/(2 pi^2)`;
/// a binomial series is used for small `y`, where the closed form cancels.
pub fn kpz_tail_rate(y: f64) -> Result<f64> {
    let a = PI * PI * y;
    if !(a >= -1.0) || !y.is_finite() {
        return Err(Error::param(format!("y = {y} below -1/pi^2")));
    }
    let c = 4.0 / (15.0 * PI.powi(6));
    if a.abs() < 0.25 {
        // sum_{k>=3} binom(5/2, k) a^k
        let mut coeff = 2.5 * 1.5 * 0.5 / 6.0;
        let mut power = a * a * a;
        let mut term = coeff * power;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum.abs() && k < 80.0 {
            coeff *= (2.5 - k) / (k + 1.0);
            power *= a;
            term = coeff * power;
            sum += term;
            k += 1.0;
        }
        Ok(c * sum)
    } else {
        Ok(c * (1.0 + a).powf(2.5) - c - 2.0 * y / (3.0 * PI.powi(4)) - y * y / (2.0 * PI * PI))
    }
}

/// `-t^{-4} phi(x t) - (1/6) sqrt(1 + pi^2 x t)`.
pub fn kpz_deep_tail(x: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    let y = x * t;
    Ok(-kpz_tail_rate(y)? / t.powi(4) - (1.0 + PI * PI * y).sqrt() / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        assert_eq!(classify(-1.0, 0.01, 3.0, DEFAULT_K), Regime::Singular);
        assert_eq!(classify(0.0, 0.7, 3.0, DEFAULT_K), Regime::PainleveII);
        assert_eq!(classify(0.0, 1e-6, 3.0, DEFAULT_K), Regime::PainleveII);
        assert_eq!(classify(0.5, 1e-3, 3.0, DEFAULT_K), Regime::Profile);
        assert_eq!(classify(5.0, 1e-3, 3.0, DEFAULT_K), Regime::Outside);
        assert_eq!(regime_i_u(-1.0, 0.1), -5.0);
    }

    #[test]
    fn small_x_profile_values() {
        assert!((regime_iii_v_small_x(&SigmaWeight::kpz(), 0.2).unwrap() - 3.125).abs() < 1e-12);
        let pw = SigmaWeight::piecewise(&[(-1.0, 0.3), (0.0, 1.0)]).unwrap();
        assert!((regime_iii_v_small_x(&pw, 0.2).unwrap() - 2.975).abs() < 1e-12);
        let step = SigmaWeight::step(1.0).unwrap();
        assert_eq!(regime_iii_v_small_x(&step, 0.3).unwrap(), 1.0 / (8.0 * 0.09));
        assert!(regime_iii_v_small_x(&step, 0.0).is_err());
    }

    #[test]
    fn regime_one_gap_decays() {
        let s = SigmaWeight::kpz();
        let t = 0.1;
        let gap = |x: f64| {
            let u = DiscretizedOperator::build(&s, x, t, &Resolution::default()).unwrap().u_trace();
            (u - regime_i_u(x, t)).abs()
        };
        // the gap is of the order t^{-2/3} Ai(|x| t^{-1/3})^2, far below |u|
        assert!(gap(-1.0) < 1e-2);
        let xs = [-1.0, -1.5, -2.0, -2.5];
        let logs: Vec<f64> = xs.iter().map(|&x| gap(x).ln()).collect();
        let scaled: Vec<f64> = xs.iter().map(|x: &f64| x.abs() / t.cbrt()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (scaled.iter().sum::<f64>() / n, logs.iter().sum::<f64>() / n);
        let slope: f64 = scaled.iter().zip(&logs).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
            / scaled.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        assert!(slope < -1.0, "{slope}");
    }

    #[test]
    fn regime_two_exact_for_steps() {
        for (x, t, g) in [(-1.0, 0.5, 1.0), (0.3, 0.2, 0.5)] {
            let s = SigmaWeight::step(g).unwrap();
            let u = DiscretizedOperator::build(&s, x, t, &Resolution::default()).unwrap().u_trace();
            let asym = regime_ii_u(x, t, g).unwrap();
            assert!((u - asym).abs() < 1e-6 * u.abs().max(1.0), "{u} {asym}");
        }
    }

    #[test]
    fn step_profile_estimate() {
        let s = SigmaWeight::step(1.0).unwrap();
        let e = v_estimate(&s, 0.5, &[1e-3, 5e-4], VModel::Cubic, &Resolution::default()).unwrap();
        assert!((e.v_hat / 0.5 - 1.0).abs() < 0.02, "{e:?}");
        let c = v_estimate(&s, 0.5, &[1e-3, 5e-4], VModel::StepControl, &Resolution::default()).unwrap();
        assert!((c.v_hat / 0.5 - 1.0).abs() < 1e-9, "{c:?}");
        assert!(v_estimate(&s, 0.1, &[1e-3, 5e-4], VModel::Cubic, &Resolution::default()).is_err());
        assert!(v_estimate(&s, 0.5, &[5e-4, 1e-3], VModel::Cubic, &Resolution::default()).is_err());
    }

    #[test]
    fn profile_estimate_stable_across_sample_pairs() {
        let s = SigmaWeight::kpz();
        let res = Resolution::default();
        let a = v_estimate(&s, 0.5, &[1e-3, 5e-4], VModel::StepControl, &res).unwrap();
        let b = v_estimate(&s, 0.5, &[5e-4, 2.5e-4], VModel::StepControl, &res).unwrap();
        assert!((a.v_hat / b.v_hat - 1.0).abs() < 0.01, "{} {}", a.v_hat, b.v_hat);
    }

    #[test]
    fn small_t_identity_probe() {
        let s = SigmaWeight::kpz();
        let (x, t) = (0.5, 1e-3);
        let probe = crate::observables::Probe::new(&s, x, t, &Resolution::default(), &[]).unwrap();
        let d = probe.at(x, t, true).unwrap();
        let gap = (probe.phi_sq_int(&d) - 0.5 * x).abs();
        assert!(gap <= t * d.u().abs() + 1e-6, "{gap}");
    }

    #[test]
    fn tail_rate_series_and_closed_form_agree() {
        for y in [0.02, 0.025, 0.0253, 0.026, 0.03] {
            let a = PI * PI * y;
            let c = 4.0 / (15.0 * PI.powi(6));
            let closed = c * (1.0 + a).powf(2.5) - c - 2.0 * y / (3.0 * PI.powi(4)) - y * y / (2.0 * PI * PI);
            let series = kpz_tail_rate(y).unwrap();
            assert!((closed - series).abs() < 1e-12 * series.abs().max(1e-3), "{y}");
        }
    }

    #[test]
    fn deep_tail_leading_term() {
        // -t^{-4} phi(x t) -> -x^3 / 12 t for small x t
        let (x, t): (f64, f64) = (1e-2, 1e-2);
        let lead = -x.powi(3) / (12.0 * t);
        let v = -kpz_tail_rate(x * t).unwrap() / t.powi(4);
        assert!((v / lead - 1.0).abs() < 1e-3, "{v} {lead}");
        assert!(kpz_tail_rate(0.0).unwrap() == 0.0);
        assert!(kpz_deep_tail(x, t).unwrap().is_finite());
    }

    #[test]
    fn kpz_laplace_range_and_agreement() {
        for (s, bt) in [(0.0, 4.0), (-1.0, 1.0), (2.0, 9.0)] {
            let q = kpz_laplace(s, bt).unwrap();
            assert!(q > 0.0 && q <= 1.0);
        }
        let (x, t) = kpz_point(0.0, 4.0);
        assert_eq!((x, t), (0.0, 0.5));
        let direct = DiscretizedOperator::build(&SigmaWeight::kpz(), 0.0, 0.5, &Resolution::default()).unwrap();
        assert_eq!(kpz_laplace(0.0, 4.0).unwrap().to_bits(), direct.q_det().to_bits());
    }

    #[test]
    fn log_q_formula_reduces_for_step() {
        let s = SigmaWeight::step(1.0).unwrap();
        let v = |r: f64| regime_iii_v_small_x(&s, r);
        let (x, t) = (1.6, 8e-3);
        let formula = log_q_regime_iii(x, t, v).unwrap();
        let exact = log_f_tw(-8.0, 1.0).unwrap();
        assert!((formula - exact).abs() < 2e-2, "{formula} {exact}");
    }
}
