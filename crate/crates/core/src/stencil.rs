//! Central finite-difference weights with optional Richardson extrapolation.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StencilOrder {
    /// 3-point first/second derivative, 4-point third derivative.
    Second,
    /// 5-point first/second derivative, 6-point third derivative.
    Fourth,
}

impl StencilOrder {
    pub fn power(self) -> i32 {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }
}

/// Weights `(offset in units of h, coefficient)` for `d^k/dx^k`, before
/// division by `h^k`.
fn base(derivative: u32, order: StencilOrder) -> &'static [(f64, f64)] {
    use StencilOrder::*;
    match (derivative, order) {
        (1, Second) => &[(-1.0, -0.5), (1.0, 0.5)],
        (2, Second) => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        (3, Second) => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        (1, Fourth) => &[(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)],
        (2, Fourth) => {
            &[(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)]
        }
        (3, Fourth) => {
            &[(-3.0, 1.0 / 8.0), (-2.0, -1.0), (-1.0, 13.0 / 8.0), (1.0, -13.0 / 8.0), (2.0, 1.0), (3.0, -1.0 / 8.0)]
        }
        _ => panic!("unsupported derivative order {derivative}"),
    }
}

/// Sample offsets (absolute) and weights approximating the `derivative`-th
/// derivative with step `h`; Richardson combines steps `h` and `h/2`.
pub fn weights(derivative: u32, order: StencilOrder, richardson: bool, h: f64) -> Vec<(f64, f64)> {
    let scale = |step: f64| step.powi(derivative as i32);
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut push = |offset: f64, w: f64| {
        if let Some(e) = out.iter_mut().find(|e| e.0 == offset) {
            e.1 += w;
        } else {
            out.push((offset, w));
        }
    };
    if richardson {
        let f = 2f64.powi(order.power());
        let half = 0.5 * h;
        for &(k, c) in base(derivative, order) {
            push(k * half, f * c / scale(half) / (f - 1.0));
        }
        for &(k, c) in base(derivative, order) {
            push(k * h, -c / scale(h) / (f - 1.0));
        }
    } else {
        for &(k, c) in base(derivative, order) {
            push(k * h, c / scale(h));
        }
    }
    out.retain(|e| e.1 != 0.0);
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Apply `weights` to a scalar function.
pub fn apply<E>(w: &[(f64, f64)], center: f64, mut f: impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
    let mut acc = 0.0;
    for &(off, c) in w {
        acc += c * f(center + off)?;
    }
    Ok(acc)
}
