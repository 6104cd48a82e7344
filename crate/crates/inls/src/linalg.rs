//! Symmetric (not necessarily Hermitian) banded `LDLᵀ` without pivoting.
//!
//! Used for `M + S` (real SPD) and `M + iθS` (complex symmetric with SPD real
//! part); both factor stably without pivoting.

use std::ops::{Add, Div, Mul, Sub};

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + From<f64>
{
}
impl<T> Scalar for T where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T> + From<f64>
{
}

/// Lower band storage: `band[i][k] = A[i][i−k]` for `k ≤ p`.
#[derive(Clone, Debug)]
pub struct SymBand<T> {
    pub p: usize,
    pub band: Vec<Vec<T>>,
}

impl<T: Scalar> SymBand<T> {
    pub fn zeros(n: usize, p: usize) -> Self {
        SymBand {
            p,
            band: vec![vec![T::from(0.0); p + 1]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.band.len()
    }

    /// `A[i][j]` for `|i − j| ≤ p`, zero otherwise.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.p {
            T::from(0.0)
        } else {
            self.band[hi][k]
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let n = self.n();
        let mut y = vec![T::from(0.0); n];
        for i in 0..n {
            let mut acc = self.band[i][0] * x[i];
            for k in 1..=self.p.min(i) {
                acc = acc + self.band[i][k] * x[i - k];
            }
            for k in 1..=self.p.min(n - 1 - i) {
                acc = acc + self.band[i + k][k] * x[i + k];
            }
            y[i] = acc;
        }
        y
    }
}

/// Factorization `A = L D Lᵀ` with unit lower-banded `L`.
#[derive(Clone, Debug)]
pub struct BandLdl<T> {
    p: usize,
    l: Vec<Vec<T>>,
    d: Vec<T>,
}

impl<T: Scalar> BandLdl<T> {
    pub fn factor(a: &SymBand<T>) -> Self {
        let n = a.n();
        let p = a.p;
        let mut l = vec![vec![T::from(0.0); p + 1]; n];
        let mut d = vec![T::from(0.0); n];
        for j in 0..n {
            let mut dj = a.band[j][0];
            for k in 1..=p.min(j) {
                let ljk = l[j][k];
                dj = dj - ljk * ljk * d[j - k];
            }
            d[j] = dj;
            for i in j + 1..=(j + p).min(n - 1) {
                // L[i][j] = (A[i][j] − Σ_m L[i][m] L[j][m] d[m]) / d[j]
                let mut v = a.band[i][i - j];
                let m_lo = i.saturating_sub(p);
                for m in m_lo..j {
                    v = v - l[i][i - m] * l[j][j - m] * d[m];
                }
                l[i][i - j] = v / dj;
            }
        }
        BandLdl { p, l, d }
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.d.len();
        let p = self.p;
        for i in 0..n {
            let mut v = x[i];
            for k in 1..=p.min(i) {
                v = v - self.l[i][k] * x[i - k];
            }
            x[i] = v;
        }
        for i in 0..n {
            x[i] = x[i] / self.d[i];
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in 1..=p.min(n - 1 - i) {
                v = v - self.l[i + k][k] * x[i + k];
            }
            x[i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn test_matrix(n: usize) -> SymBand<f64> {
        let mut a = SymBand::zeros(n, 3);
        for i in 0..n {
            a.band[i][0] = 4.0 + (i as f64).sin();
            for k in 1..=3.min(i) {
                a.band[i][k] = 0.3 / k as f64 * ((i + k) as f64).cos();
            }
        }
        a
    }

    #[test]
    fn real_solve_round_trip() {
        let a = test_matrix(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).cos()).collect();
        let mut b = a.matvec(&x);
        BandLdl::factor(&a).solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_symmetric_solve_round_trip() {
        let r = test_matrix(40);
        let mut a = SymBand::<Complex64>::zeros(40, 3);
        for i in 0..40 {
            for k in 0..=3 {
                a.band[i][k] = Complex64::new(if k == 0 { 1.0 } else { 0.0 }, 0.7 * r.band[i][k]);
            }
        }
        let x: Vec<Complex64> = (0..40).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let mut b = a.matvec(&x);
        BandLdl::factor(&a).solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-11);
        }
        assert_eq!(a.get(3, 5), a.get(5, 3));
        assert_eq!(a.get(0, 9), Complex64::new(0.0, 0.0));
    }
}
