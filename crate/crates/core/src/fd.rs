//! Finite-difference helpers: central differences with one Richardson step and
//! Fornberg weights on arbitrary nodes.

use crate::linalg::{CMatrix, CVector, C64};

/// Values that can be linearly combined with real weights.
pub trait Lin: Clone {
    fn scaled(&self, a: f64) -> Self;
    fn plus(&self, other: &Self) -> Self;
}

impl Lin for f64 {
    fn scaled(&self, a: f64) -> Self {
        self * a
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

impl Lin for C64 {
    fn scaled(&self, a: f64) -> Self {
        self * a
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

impl Lin for CMatrix {
    fn scaled(&self, a: f64) -> Self {
        self.map(|z| z * a)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

impl Lin for CVector {
    fn scaled(&self, a: f64) -> Self {
        self.map(|z| z * a)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

/// `sum_k w_k y_k`
pub fn combine<T: Lin>(weights: &[f64], values: &[T]) -> T {
    assert!(!values.is_empty() && weights.len() == values.len());
    let mut acc = values[0].scaled(weights[0]);
    for (w, v) in weights.iter().zip(values).skip(1) {
        acc = acc.plus(&v.scaled(*w));
    }
    acc
}

/// `(f(x+h) - f(x-h)) / 2h`
pub fn central<T: Lin, F: Fn(f64) -> T>(f: &F, x: f64, h: f64) -> T {
    combine(&[0.5 / h, -0.5 / h], &[f(x + h), f(x - h)])
}

/// Central difference extrapolated once: `(4 D(h/2) - D(h)) / 3`.
pub fn central_richardson<T: Lin, F: Fn(f64) -> T>(f: &F, x: f64, h: f64) -> T {
    combine(&[4.0 / 3.0, -1.0 / 3.0], &[central(f, x, 0.5 * h), central(f, x, h)])
}

/// Fornberg's algorithm: `w[m][j]` is the weight of `f(nodes[j])` in the
/// m-th derivative at `x0`, for `m = 0..=max_order`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut w = vec![vec![0.0; n]; max_order + 1];
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// m-th derivative at `x0` from samples `f(nodes[j])`.
pub fn derivative_from_samples<T: Lin>(x0: f64, nodes: &[f64], values: &[T], order: usize) -> T {
    let w = fornberg_weights(x0, nodes, order);
    combine(&w[order], values)
}

/// m-th derivative of `f` at `x0` on the symmetric stencil `x0 + k h`, `|k| <= half`.
pub fn derivative<T: Lin, F: Fn(f64) -> T>(f: &F, x0: f64, h: f64, half: usize, order: usize) -> T {
    let nodes: Vec<f64> = (-(half as i64)..=half as i64).map(|k| x0 + k as f64 * h).collect();
    let values: Vec<T> = nodes.iter().map(|&x| f(x)).collect();
    derivative_from_samples(x0, &nodes, &values, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_weights() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for j in 0..5 {
            assert!((w[1][j] - d1[j]).abs() < 1e-14);
            assert!((w[2][j] - d2[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn richardson_on_sine() {
        let d = central_richardson(&f64::sin, 0.7, 1e-3);
        assert!((d - 0.7f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn fifth_derivative_of_exp() {
        let d = derivative(&f64::exp, 0.3, 0.05, 5, 5);
        assert!((d - 0.3f64.exp()).abs() < 1e-5);
    }
}
