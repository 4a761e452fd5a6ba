//! Real Airy functions, the Airy kernel, `I0`, and named constants.
//!
//! Airy evaluation uses three regions:
//! * `x >= 2`: steepest-descent (Laplace) integral along the shifted contour,
//!   summed with a fixed composite Gauss-Legendre rule;
//! * `-10 <= x < 2`: local Taylor series of `y'' = x y` about tabulated
//!   anchors spaced 0.25 apart;
//! * `x < -10`: the oscillatory asymptotic expansion.

use std::f64::consts::{FRAC_PI_4, LN_2, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature;

/// `Ai(0) = 3^(-2/3) / Gamma(2/3)`.
pub const AI_ZERO: f64 = 0.355_028_053_887_817_2;
/// `Ai'(0) = -3^(-1/3) / Gamma(1/3)`.
pub const AI_PRIME_ZERO: f64 = -0.258_819_403_792_806_8;

/// Default half-width below which the kernel switches to its diagonal expansion.
pub const DEFAULT_DIAGONAL_SWITCH: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathConstants {
    pub zeta_prime_minus_one: f64,
    pub tw_tail_constant: f64,
}

impl MathConstants {
    pub const ZETA_PRIME_MINUS_ONE: f64 = -0.165_421_143_700_450_929_21;
    /// Constant term of the Tracy-Widom left tail, `ln 2 / 24 + zeta'(-1)`.
    pub const TW_TAIL_CONSTANT: f64 = LN_2 / 24.0 + Self::ZETA_PRIME_MINUS_ONE;

    pub const fn new() -> Self {
        MathConstants { zeta_prime_minus_one: Self::ZETA_PRIME_MINUS_ONE, tw_tail_constant: Self::TW_TAIL_CONSTANT }
    }
}

impl Default for MathConstants {
    fn default() -> Self {
        Self::new()
    }
}

fn check_finite(func: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { func, value: x, detail: "must be finite" })
    }
}

pub fn airy_ai(x: f64) -> Result<f64> {
    check_finite("airy_ai", x)?;
    Ok(airy_pair_unchecked(x).0)
}

pub fn airy_ai_prime(x: f64) -> Result<f64> {
    check_finite("airy_ai_prime", x)?;
    Ok(airy_pair_unchecked(x).1)
}

/// `(Ai(x), Ai'(x))` in one evaluation.
pub fn airy_pair(x: f64) -> Result<(f64, f64)> {
    check_finite("airy_pair", x)?;
    Ok(airy_pair_unchecked(x))
}

const LAPLACE_FROM: f64 = 2.0;
const ASYMPTOTIC_BELOW: f64 = -10.0;
const ANCHOR_STEP: f64 = 0.25;

pub(crate) fn airy_pair_unchecked(x: f64) -> (f64, f64) {
    if x >= LAPLACE_FROM {
        airy_laplace(x)
    } else if x >= ASYMPTOTIC_BELOW {
        let table = anchors();
        let k = ((x - ASYMPTOTIC_BELOW) / ANCHOR_STEP).round() as usize;
        let k = k.min(table.len() - 1);
        let a = ASYMPTOTIC_BELOW + k as f64 * ANCHOR_STEP;
        let (y, yp) = table[k];
        taylor_step(a, y, yp, x - a)
    } else {
        airy_oscillatory(-x)
    }
}

/// Advance a solution of `y'' = x y` from `a` to `a + h` by its Taylor series.
fn taylor_step(a: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    if h == 0.0 {
        return (y, yp);
    }
    let scale = y.abs() + (yp * h).abs();
    // c[k-1], c[k], c[k+1] rolling window
    let mut c_prev = 0.0;
    let mut c_k = y;
    let mut c_next = yp;
    let mut hk = 1.0; // h^k
    let mut val = 0.0;
    let mut der = 0.0;
    let mut k = 0usize;
    loop {
        let term = c_k * hk;
        val += term;
        if k > 0 {
            der += k as f64 * c_k * hk / h;
        }
        let c_new = (a * c_k + c_prev) / ((k + 1) as f64 * (k + 2) as f64);
        c_prev = c_k;
        c_k = c_next;
        c_next = c_new;
        hk *= h;
        k += 1;
        if k > 6 && (c_k * hk).abs() + (c_next * hk * h).abs() < 1e-19 * scale {
            break;
        }
        if k > 120 {
            break;
        }
    }
    (val, der)
}

fn anchors() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let count = ((LAPLACE_FROM - ASYMPTOTIC_BELOW) / ANCHOR_STEP).round() as usize + 1;
        let zero_index = (-ASYMPTOTIC_BELOW / ANCHOR_STEP).round() as usize;
        let mut table = vec![(0.0, 0.0); count];
        let sub = 4;
        let h = ANCHOR_STEP / sub as f64;
        // positive side: integrate downwards from the Laplace value, where Ai grows
        table[count - 1] = airy_laplace(LAPLACE_FROM);
        for k in (zero_index..count - 1).rev() {
            let (mut y, mut yp) = table[k + 1];
            let mut a = ASYMPTOTIC_BELOW + (k + 1) as f64 * ANCHOR_STEP;
            for _ in 0..sub {
                (y, yp) = taylor_step(a, y, yp, -h);
                a -= h;
            }
            table[k] = (y, yp);
        }
        // negative side: integrate from the closed-form values at the origin
        table[zero_index] = (AI_ZERO, AI_PRIME_ZERO);
        for k in (0..zero_index).rev() {
            let (mut y, mut yp) = table[k + 1];
            let mut a = ASYMPTOTIC_BELOW + (k + 1) as f64 * ANCHOR_STEP;
            for _ in 0..sub {
                (y, yp) = taylor_step(a, y, yp, -h);
                a -= h;
            }
            table[k] = (y, yp);
        }
        table
    })
}

/// Nodes for `int_0^inf e^{-s^2} g(s) ds`: (s, w e^{-s^2}, s^3/3).
fn laplace_nodes() -> &'static [(f64, f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let panels: Vec<f64> = (0..=10).map(|k| 0.62 * k as f64).collect();
        let rule = quadrature::composite_rule(&panels, 20).expect("static rule");
        rule.nodes.iter().zip(&rule.weights).map(|(&s, &w)| (s, w * (-s * s).exp(), s * s * s / 3.0)).collect()
    })
}

/// Ai and Ai' for `x >= 2` from
/// `Ai(x) = e^{-zeta} x^{-1/4} / pi * int_0^inf e^{-s^2} cos(s^3 / (3 x^{3/4})) ds`.
fn airy_laplace(x: f64) -> (f64, f64) {
    let sqrt_x = x.sqrt();
    let q = x.sqrt().sqrt(); // x^{1/4}
    let inv_x34 = 1.0 / (sqrt_x * q);
    let mut cos_sum = 0.0;
    let mut sin_sum = 0.0;
    for &(s, w, s3) in laplace_nodes() {
        let (sn, cs) = (s3 * inv_x34).sin_cos();
        cos_sum += w * cs;
        sin_sum += w * s * sn;
    }
    let zeta = 2.0 / 3.0 * x * sqrt_x;
    let ai_scaled = cos_sum / (q * PI);
    let aip_scaled = -(q * cos_sum + sin_sum / sqrt_x) / PI;
    if zeta > 700.0 {
        // keep as much precision as possible approaching underflow
        let ai = (ai_scaled.ln() - zeta).exp();
        let aip = -((-aip_scaled).ln() - zeta).exp();
        (ai, aip)
    } else {
        let e = (-zeta).exp();
        (ai_scaled * e, aip_scaled * e)
    }
}

/// Ai(-y), Ai'(-y) for large `y` by the Hankel-type expansion.
fn airy_oscillatory(y: f64) -> (f64, f64) {
    let sqrt_y = y.sqrt();
    let zeta = 2.0 / 3.0 * y * sqrt_y;
    let inv = 1.0 / zeta;
    // u_k and v_k coefficients of the Airy asymptotic series
    let mut u = 1.0_f64;
    let (mut p, mut q, mut pd, mut qd) = (1.0, 0.0, 1.0, 0.0);
    let mut power = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        power *= inv;
        let tu = u * power;
        let tv = v * power;
        if tu.abs() > last {
            break;
        }
        last = tu.abs();
        // (-1)^floor(k/2) pattern, odd terms go to the sine series
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * tu;
            pd += sign * tv;
        } else {
            q += sign * tu;
            qd += sign * tv;
        }
        if tu.abs() < 1e-18 {
            break;
        }
    }
    let (sn, cs) = (zeta - FRAC_PI_4).sin_cos();
    let amp = 1.0 / (PI.sqrt() * sqrt_y.sqrt());
    let ai = amp * (cs * p + sn * q);
    let aip = sqrt_y.sqrt() / PI.sqrt() * (sn * pd - cs * qd);
    (ai, aip)
}

/// The Airy kernel `(Ai(u)Ai'(v) - Ai'(u)Ai(v)) / (u - v)`.
pub fn airy_kernel(u: f64, v: f64) -> Result<f64> {
    airy_kernel_with_switch(u, v, DEFAULT_DIAGONAL_SWITCH)
}

pub fn airy_kernel_with_switch(u: f64, v: f64, switch: f64) -> Result<f64> {
    check_finite("airy_kernel", u)?;
    check_finite("airy_kernel", v)?;
    let (au, apu) = airy_pair_unchecked(u);
    let (av, apv) = airy_pair_unchecked(v);
    Ok(kernel_from_values(u, au, apu, v, av, apv, switch))
}

/// Kernel from precomputed Airy values; near the diagonal the expansion about
/// the midpoint is used instead of the difference quotient.
#[inline]
pub(crate) fn kernel_from_values(u: f64, au: f64, apu: f64, v: f64, av: f64, apv: f64, switch: f64) -> f64 {
    let d = u - v;
    if d.abs() >= switch {
        (au * apv - apu * av) / d
    } else {
        let m = 0.5 * (u + v);
        let (a, ap) = airy_pair_unchecked(m);
        kernel_near_diagonal(m, a, ap, 0.5 * d)
    }
}

/// `K(m + delta, m - delta)` to `O(delta^4)`.
#[inline]
pub(crate) fn kernel_near_diagonal(m: f64, a: f64, ap: f64, delta: f64) -> f64 {
    let diag = ap * ap - m * a * a;
    let curv = (2.0 / 3.0) * m * ap * ap - (2.0 / 3.0) * m * m * a * a + a * ap / 3.0;
    diag + delta * delta * curv
}

/// Modified Bessel function `I0(x)` for `x >= 0`.
pub fn bessel_i0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain { func: "bessel_i0", value: x, detail: "requires finite x >= 0" });
    }
    if x <= 50.0 {
        // all terms positive, so no cancellation
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        Ok(sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (8.0 * kf * x);
            if next < 1e-17 * sum {
                break;
            }
            term = next;
            sum += term;
        }
        let half = (0.5 * x).exp();
        Ok(half * (half * sum / (2.0 * PI * x).sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Double-double arithmetic for the Maclaurin oracle.
    #[derive(Clone, Copy, Debug)]
    struct Dd(f64, f64);

    impl Dd {
        fn from(x: f64) -> Self {
            Dd(x, 0.0)
        }
        fn two_sum(a: f64, b: f64) -> (f64, f64) {
            let s = a + b;
            let bb = s - a;
            (s, (a - (s - bb)) + (b - bb))
        }
        fn add(self, o: Dd) -> Dd {
            let (s, e) = Self::two_sum(self.0, o.0);
            let e = e + self.1 + o.1;
            let (hi, lo) = Self::two_sum(s, e);
            Dd(hi, lo)
        }
        fn mul(self, o: Dd) -> Dd {
            let p = self.0 * o.0;
            let e = self.0.mul_add(o.0, -p) + (self.0 * o.1 + self.1 * o.0);
            let (hi, lo) = Self::two_sum(p, e);
            Dd(hi, lo)
        }
        fn div_f(self, d: f64) -> Dd {
            let q1 = self.0 / d;
            let r = self.add(Dd::from(d).mul(Dd::from(-q1)));
            let q2 = r.0 / d;
            let (hi, lo) = Self::two_sum(q1, q2);
            Dd(hi, lo)
        }
    }

    // Ai(0) and Ai'(0) to double-double accuracy
    const AI0_DD: Dd = Dd(0.3550280538878172, 2.05233632436212e-17);
    const AIP0_DD: Dd = Dd(-0.2588194037928068, 2.522243111610832e-17);

    /// Maclaurin series of Ai and Ai' in double-double (oracle).
    fn maclaurin_oracle(x: f64) -> (f64, f64) {
        let xd = Dd::from(x);
        // Ai = Ai(0) f(x) + Ai'(0) g(x); f, g series of y'' = x y
        let mut f_term = Dd::from(1.0);
        let mut g_term = xd;
        let mut f_sum = f_term;
        let mut g_sum = g_term;
        let mut fp_sum = Dd::from(0.0);
        let mut gp_sum = Dd::from(1.0);
        let x3 = xd.mul(xd).mul(xd);
        for k in 1..200 {
            let k3 = 3.0 * k as f64;
            f_term = f_term.mul(x3).div_f(k3 * (k3 - 1.0));
            g_term = g_term.mul(x3).div_f((k3 + 1.0) * k3);
            f_sum = f_sum.add(f_term);
            g_sum = g_sum.add(g_term);
            fp_sum = fp_sum.add(f_term.mul(Dd::from(k3)).div_f(x));
            gp_sum = gp_sum.add(g_term.mul(Dd::from(k3 + 1.0)).div_f(x));
            if f_term.0.abs() + g_term.0.abs() < 1e-34 {
                break;
            }
        }
        let ai = AI0_DD.mul(f_sum).add(AIP0_DD.mul(g_sum));
        let aip = AI0_DD.mul(fp_sum).add(AIP0_DD.mul(gp_sum));
        (ai.0 + ai.1, aip.0 + aip.1)
    }

    #[test]
    fn origin_values() {
        assert!((airy_ai(0.0).unwrap() - 0.355028053887817).abs() < 1e-15);
        assert!((airy_ai_prime(0.0).unwrap() + 0.258819403792807).abs() < 1e-15);
    }

    #[test]
    fn maclaurin_oracle_agrees_on_moderate_arguments() {
        for &x in &[-5.0, -4.5, -3.3, -1.0, -0.2, 0.7, 1.5, 2.0, 2.6, 4.5] {
            let (ai, aip) = maclaurin_oracle(x);
            let (a, ap) = airy_pair(x).unwrap();
            assert!((a - ai).abs() < 1e-14, "Ai({x}): {a} vs {ai}");
            assert!((ap - aip).abs() < 1e-14, "Ai'({x}): {ap} vs {aip}");
        }
    }

    #[test]
    fn minus_five_pinned() {
        let (ai, aip) = maclaurin_oracle(-5.0);
        assert!((ai - 0.350761009024114319788).abs() < 1e-15);
        assert!((aip - 0.3271928185544431367949).abs() < 1e-15);
        assert!((airy_ai(-5.0).unwrap() - ai).abs() < 1e-14);
        assert!((airy_ai_prime(-5.0).unwrap() - aip).abs() < 1e-14);
    }

    // Reference values from a 40-digit evaluation.
    const REFERENCE: &[(f64, f64, f64)] = &[
        (-200.0, 0.1488939424838102511513, -0.2600066454334060227629),
        (-100.0, 0.1767533932395528780908, -0.2422970316605838053991),
        (-30.0, -0.08796818845684216283262, 1.228620602637485134704),
        (-15.0, 0.2782174908708289295276, 0.2723742043086420208258),
        (-12.0, -0.06655517505437312947419, 1.023110453367970729896),
        (-10.3, -0.2321080188548297485439, 0.677492829540911080133),
        (-9.99, 0.05018211716213980051681, 0.9917458433554862467731),
        (-7.3, 0.3357703705151472769672, -0.1800958044832936598516),
        (-2.5, -0.1123250676929660891875, 0.6788527342647943633721),
        (0.3, 0.2788064819550049246637, -0.2451463642190548043662),
        (1.99, 0.03545853857066838476009, -0.05379243543188825028274),
        (2.0, 0.03492413042327437913532, -0.053090384433653631704),
        (2.01, 0.03439670712989422851244, -0.0523954590434030058457),
        (3.0, 0.006591139357460719144257, -0.01191297670595131847376),
        (4.7, 0.0002128609213585974379872, -0.000472183639986264062339),
        (7.5, 1.917256067513430751645e-7, -5.31271395972054468479e-7),
        (10.0, 1.104753255289868593355e-10, -3.520633676738923636621e-10),
        (15.0, 2.164962520737992298989e-18, -8.420567954017772766124e-18),
        (25.0, 8.116026824691386683758e-38, -4.066089337243281005323e-37),
        (50.0, 4.584941724074828478348e-104, -3.244331819828799296131e-103),
        (100.0, 2.634482152088184489551e-291, -2.635140361604409933603e-290),
    ];

    #[test]
    fn reference_table() {
        for &(x, ai, aip) in REFERENCE {
            let (a, ap) = airy_pair(x).unwrap();
            if x.abs() <= 15.0 {
                assert!((a - ai).abs() < 1e-13, "Ai({x})");
                assert!((ap - aip).abs() < 1e-13, "Ai'({x})");
            }
            if x >= 2.0 {
                assert!(((a - ai) / ai).abs() < 1e-11, "Ai({x}) rel {}", (a - ai) / ai);
                assert!(((ap - aip) / aip).abs() < 1e-11, "Ai'({x})");
            } else if x < -15.0 {
                // oscillatory: absolute error relative to the envelope
                let env = x.abs().powf(-0.25);
                assert!((a - ai).abs() < 1e-12 * env, "Ai({x})");
                assert!((ap - aip).abs() < 1e-12 / env, "Ai'({x})");
            }
        }
    }

    #[test]
    fn underflow_is_zero() {
        assert_eq!(airy_ai(200.0).unwrap(), 0.0);
        assert_eq!(airy_ai(1e6).unwrap(), 0.0);
        assert_eq!(airy_ai_prime(1e6).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(airy_ai(f64::NAN).is_err());
        assert!(airy_ai_prime(f64::INFINITY).is_err());
        assert!(airy_kernel(0.0, f64::NEG_INFINITY).is_err());
        assert!(bessel_i0(-1.0).is_err());
    }

    #[test]
    fn leading_asymptotic_normalization() {
        for &x in &[20.0, 60.0, 100.0] {
            let a = airy_ai(x).unwrap();
            let ratio = a * (2.0 / 3.0 * x.powf(1.5)).exp() * 2.0 * PI.sqrt() * x.powf(0.25);
            let zeta = 2.0 / 3.0 * x.powf(1.5);
            assert!((ratio - 1.0).abs() < 0.1 / zeta, "x={x} ratio={ratio}");
            // next term of the series is -5/(72 zeta)
            assert!((ratio - 1.0 + 5.0 / (72.0 * zeta)).abs() < 0.1 / (zeta * zeta));
        }
    }

    #[test]
    fn ode_residual_five_point() {
        let h = 1e-2;
        let mut x = -8.0;
        while x <= 8.0 {
            let f = |s: f64| airy_ai(s).unwrap();
            let d2 =
                (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h);
            assert!((d2 - x * f(x)).abs() < 1e-7, "x={x}");
            x += 0.173;
        }
        for &x in &[-3.0, 0.0, 3.0] {
            let h = 1e-4;
            let f = |s: f64| airy_ai(s).unwrap();
            let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            assert!((d2 - x * f(x)).abs() < 1e-8 * (1.0 + x.abs()) * 10.0);
        }
    }

    #[test]
    fn derivative_consistent_with_values() {
        for &x in &[-11.0, -9.9, -4.0, 1.0, 1.99, 2.01, 5.0] {
            let h = 1e-3;
            let f = |s: f64| airy_ai(s).unwrap();
            let d = (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
            assert!((d - airy_ai_prime(x).unwrap()).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn region_seams_are_continuous() {
        for &x in &[LAPLACE_FROM, ASYMPTOTIC_BELOW] {
            let h = 1e-12;
            let below = airy_pair(x - h).unwrap();
            let above = airy_pair(x + h).unwrap();
            // first-order Taylor across the seam
            assert!((above.0 - below.0 - 2.0 * h * below.1).abs() < 1e-14, "x={x}");
            assert!((above.1 - below.1 - 2.0 * h * x * below.0).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn kernel_diagonal_and_symmetry() {
        for &u in &[-7.0, -1.3, 0.0, 0.4, 3.5] {
            let (a, ap) = airy_pair(u).unwrap();
            let k = airy_kernel(u, u).unwrap();
            assert!((k - (ap * ap - u * a * a)).abs() < 1e-15);
            for &v in &[-6.1, -0.5, 2.2] {
                assert_eq!(airy_kernel(u, v).unwrap(), airy_kernel(v, u).unwrap());
            }
        }
    }

    #[test]
    fn kernel_near_diagonal_matches_quotient() {
        // at |u - v| = 2e-3 the quotient loses only ~1e-13 and the expansion error is ~1e-12
        for &u in &[-5.0, -2.0, 0.3, 1.7, 4.0] {
            let v = u + 2e-3;
            let quotient = airy_kernel_with_switch(u, v, 0.0).unwrap();
            let expansion = airy_kernel_with_switch(u, v, 1.0).unwrap();
            assert!((quotient - expansion).abs() < 1e-11, "u={u}: {quotient} {expansion}");
        }
    }

    #[test]
    fn kernel_continuous_across_switch() {
        let s = DEFAULT_DIAGONAL_SWITCH;
        let mut u = -5.0;
        while u <= 5.0 {
            let inside = airy_kernel(u, u + s * (1.0 - 1e-9)).unwrap();
            let outside = airy_kernel(u, u + s * (1.0 + 1e-9)).unwrap();
            assert!((inside - outside).abs() < 1e-10, "u={u}: jump {}", inside - outside);
            u += 0.37;
        }
    }

    #[test]
    fn kernel_diagonal_counts_particles() {
        let x = -30.0;
        let rule = quadrature::composite_rule(&(0..=80).map(|k| x + 0.5 * k as f64).collect::<Vec<_>>(), 24).unwrap();
        let total: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&u, &w)| w * airy_kernel(u, u).unwrap()).sum();
        let ratio = total / (2.0 / (3.0 * PI) * 30f64.powf(1.5));
        assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
    }

    #[test]
    fn bessel_values() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 0..30 {
            if k > 0 {
                fact *= k as f64;
            }
            sum += 0.5f64.powi(2 * k) / (fact * fact);
        }
        assert!((bessel_i0(1.0).unwrap() - sum).abs() < 1e-15);
        assert!((bessel_i0(1.0).unwrap() - 1.266065877752008335598).abs() < 1e-15);
        assert!((bessel_i0(10.0).unwrap() / 2815.71662846625447147 - 1.0).abs() < 1e-13);
        assert!((bessel_i0(35.0).unwrap() / 107338818494514.0635735 - 1.0).abs() < 1e-13);
        assert!((bessel_i0(50.0).unwrap() / 293255378384933632665.5 - 1.0).abs() < 1e-12);
        let big = 600.0;
        let r = bessel_i0(big).unwrap() * (2.0 * PI * big).sqrt() * (-big).exp();
        assert!((r - 1.0).abs() < 1e-3);
        // seam continuity
        let below = bessel_i0(50.0).unwrap();
        let above = bessel_i0(50.0 + 1e-12).unwrap();
        assert!((above / below - 1.0).abs() < 1e-11);
    }

    #[test]
    fn bessel_increasing() {
        let mut prev = bessel_i0(0.0).unwrap();
        for k in 1..=500 {
            let v = bessel_i0(0.1 * k as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn tail_constant_value() {
        let c = MathConstants::new();
        assert_eq!(c.tw_tail_constant, LN_2 / 24.0 + c.zeta_prime_minus_one);
        assert!((c.tw_tail_constant + 0.136540).abs() < 1e-6);
    }
}
