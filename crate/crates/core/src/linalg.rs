//! Small dense kernels: a Cholesky factorization of `I - M` that keeps pivots
//! in the form `1 + d`, partial-pivot LU, and a tridiagonal solver.

use crate::error::{Error, Result};

/// Dot product with eight independent accumulators (fixed order, so the
/// result does not depend on anything but the inputs).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let chunks = n / 8;
    for c in 0..chunks {
        let i = 8 * c;
        for l in 0..8 {
            acc[l] += a[i + l] * b[i + l];
        }
    }
    let mut tail = 0.0;
    for i in 8 * chunks..n {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Lower Cholesky factor of `I - M` for symmetric `M`, row-major.
#[derive(Debug, Clone)]
pub struct ShiftedCholesky {
    n: usize,
    l: Vec<f64>,
    log_det: f64,
}

impl ShiftedCholesky {
    /// Factor `I - M` where `neg_m` holds `-M` (only the lower triangle,
    /// diagonal included, is read). Pivots are formed as `1 + d_i` with `d_i`
    /// accumulated separately, so `log det = sum log1p(d_i)` keeps full
    /// relative accuracy when the determinant is close to one.
    pub fn factor(mut neg_m: Vec<f64>, n: usize) -> Result<Self> {
        assert_eq!(neg_m.len(), n * n);
        let mut logdet = CompensatedSum::default();
        for i in 0..n {
            let (done, rest) = neg_m.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            for j in 0..i {
                let row_j = &done[j * n..j * n + n];
                let s = row_i[j] - dot(&row_i[..j], &row_j[..j]);
                row_i[j] = s / row_j[j];
            }
            let d = row_i[i] - dot(&row_i[..i], &row_i[..i]);
            let pivot = 1.0 + d;
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Factorization { index: i, pivot });
            }
            row_i[i] = pivot.sqrt();
            logdet.add(d.ln_1p());
        }
        Ok(ShiftedCholesky { n, l: neg_m, log_det: logdet.value() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.l[i * self.n + i]).collect()
    }

    /// Solve `(I - M) x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + n];
            y[i] = (y[i] - dot(&row[..i], &y[..i])) / row[i];
        }
        for i in (0..n).rev() {
            let row = &self.l[i * n..i * n + n];
            let xi = y[i] / row[i];
            y[i] = xi;
            for k in 0..i {
                y[k] -= row[k] * xi;
            }
        }
        y
    }
}

/// `log |det A|` and its sign by partial-pivot LU (row-major, consumed).
pub fn lu_log_det(mut a: Vec<f64>, n: usize) -> Result<(f64, f64)> {
    assert_eq!(a.len(), n * n);
    let mut sign = 1.0;
    let mut logdet = CompensatedSum::default();
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > 0.0) || !best.is_finite() {
            return Err(Error::Factorization { index: k, pivot: best });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            sign = -sign;
        }
        let pivot = a[k * n + k];
        if pivot < 0.0 {
            sign = -sign;
        }
        logdet.add(pivot.abs().ln());
        let (upper, lower) = a.split_at_mut((k + 1) * n);
        let row_k = &upper[k * n..k * n + n];
        for i in 0..n - k - 1 {
            let row_i = &mut lower[i * n..i * n + n];
            let f = row_i[k] / pivot;
            if f != 0.0 {
                for j in k + 1..n {
                    row_i[j] -= f * row_k[j];
                }
            }
            row_i[k] = f;
        }
    }
    Ok((logdet.value(), sign))
}

/// Solve a tridiagonal system (Thomas algorithm); `sub[0]` and `sup[n-1]` unused.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Factorization { index: 0, pivot: 0.0 });
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Factorization { index: i, pivot: denom });
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
