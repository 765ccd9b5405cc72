//! Truncated power series in one real variable with complex scalar or ket
//! coefficients, `f(t) = sum_k c_k t^k`.

use crate::linalg::{outer, CMatrix, CVector, C64};

/// Scalar series truncated after `t^order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub coeffs: Vec<C64>,
}

impl Series {
    pub fn new(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn constant(x: C64, order: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); order + 1];
        coeffs[0] = x;
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn conj(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|z| z.conj()).collect() }
    }

    pub fn add(&self, other: &Series) -> Self {
        Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, x: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|z| z * x).collect() }
    }

    pub fn mul(&self, other: &Series) -> Self {
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|k| (0..=k).map(|j| self.coeffs[j] * other.coeffs[k - j]).sum()).collect();
        Self { coeffs }
    }

    /// `1/f`, requires `c_0 != 0`.
    pub fn recip(&self) -> Self {
        let a = &self.coeffs;
        let mut b = vec![C64::new(0.0, 0.0); a.len()];
        b[0] = a[0].inv();
        for k in 1..a.len() {
            let s: C64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
            b[k] = -s * b[0];
        }
        Self { coeffs: b }
    }

    /// Principal `sqrt(f)`, requires `c_0 != 0`.
    pub fn sqrt(&self) -> Self {
        let a = &self.coeffs;
        let mut b = vec![C64::new(0.0, 0.0); a.len()];
        b[0] = a[0].sqrt();
        for k in 1..a.len() {
            let s: C64 = (1..k).map(|j| b[j] * b[k - j]).sum();
            b[k] = (a[k] - s) / (b[0] * 2.0);
        }
        Self { coeffs: b }
    }

    /// `F(f)` for `F(w) = sum_k a_k w^k`, requires `c_0 = 0`.
    pub fn compose(&self, outer_coeffs: &[C64]) -> Self {
        debug_assert!(self.coeffs[0].norm() < 1e-12);
        let order = self.order();
        let mut acc = Series::constant(C64::new(0.0, 0.0), order);
        let mut power = Series::constant(C64::new(1.0, 0.0), order);
        for (k, a) in outer_coeffs.iter().enumerate() {
            if k > order {
                break;
            }
            acc = acc.add(&power.scale(*a));
            power = power.mul(self);
        }
        acc
    }

    /// k-th derivative at 0.
    pub fn derivative_at_zero(&self, k: usize) -> C64 {
        self.coeffs[k] * factorial(k)
    }
}

/// Ket-valued series.
#[derive(Clone, Debug, PartialEq)]
pub struct KetSeries {
    pub coeffs: Vec<CVector>,
}

impl KetSeries {
    /// From derivatives `psi^{(k)}(0)`.
    pub fn from_derivatives(derivs: &[CVector]) -> Self {
        Self { coeffs: derivs.iter().enumerate().map(|(k, d)| d / C64::new(factorial(k), 0.0)).collect() }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `<a|b>`
    pub fn inner(&self, other: &KetSeries) -> Series {
        let n = self.order().min(other.order());
        Series::new((0..=n).map(|k| (0..=k).map(|j| self.coeffs[j].dotc(&other.coeffs[k - j])).sum()).collect())
    }

    /// `<a|v>` for a fixed ket `a`.
    pub fn inner_fixed(a: &CVector, b: &KetSeries) -> Series {
        Series::new(b.coeffs.iter().map(|c| a.dotc(c)).collect())
    }

    pub fn scale(&self, s: &Series) -> Self {
        let n = self.order().min(s.order());
        Self {
            coeffs: (0..=n)
                .map(|k| (0..=k).fold(CVector::zeros(self.coeffs[0].len()), |acc, j| acc + &self.coeffs[j] * s.coeffs[k - j]))
                .collect(),
        }
    }

    pub fn sub_fixed(&self, s: &Series, a: &CVector) -> Self {
        let mut out = self.clone();
        for (k, c) in out.coeffs.iter_mut().enumerate() {
            *c -= a * s.coeffs[k];
        }
        out
    }

    /// `|self><a| + |a><self|` coefficientwise, for a fixed ket `a`.
    pub fn symmetric_outer(&self, a: &CVector) -> Vec<CMatrix> {
        self.coeffs.iter().map(|c| outer(c, a) + outer(a, c)).collect()
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn sqrt_squares_back() {
        let f = Series::new(vec![r(4.0), r(1.0), r(-0.5), r(0.25), r(2.0)]);
        let g = f.sqrt();
        let back = g.mul(&g);
        for (a, b) in back.coeffs.iter().zip(&f.coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn recip_of_geometric() {
        // 1/(1 - t) = 1 + t + t^2 + ...
        let f = Series::new(vec![r(1.0), r(-1.0), r(0.0), r(0.0), r(0.0)]);
        assert!(f.recip().coeffs.iter().all(|c| (c - r(1.0)).norm() < 1e-15));
    }

    #[test]
    fn compose_exp() {
        // exp(t) from the exponential series composed with w = t
        let w = Series::new(vec![r(0.0), r(1.0), r(0.0), r(0.0), r(0.0), r(0.0)]);
        let a: Vec<C64> = (0..6).map(|k| r(1.0 / factorial(k))).collect();
        let e = w.compose(&a);
        for k in 0..6 {
            assert!((e.derivative_at_zero(k) - r(1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }
}
