//! Multi-axis complex FFTs over row-major data (last axis fastest).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse plans for each transformed axis.
pub struct FftPlans {
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftPlans {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FftPlans({} axes)", self.fwd.len())
    }
}

impl FftPlans {
    pub fn new(lens: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        FftPlans {
            fwd: lens.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inv: lens.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }
}

/// Transforms `data` (shape `dims`) along each axis listed in `axes`, where
/// `axes[i]` is paired with `plans` entry `i`. Inverse transforms are normalized.
pub fn transform(data: &mut [Complex64], dims: &[usize], axes: &[usize], plans: &FftPlans, inverse: bool) {
    let total: usize = dims.iter().product();
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for (pi, &axis) in axes.iter().enumerate() {
        let len = dims[axis];
        let inner: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let plan = if inverse { &plans.inv[pi] } else { &plans.fwd[pi] };
        if inner == 1 {
            data.par_chunks_mut(len).for_each(|line| plan.process(line));
        } else {
            for o in 0..outer {
                for k in 0..inner {
                    let line = (o * inner + k) * len;
                    for i in 0..len {
                        buf[line + i] = data[o * len * inner + i * inner + k];
                    }
                }
            }
            buf.par_chunks_mut(len).for_each(|line| plan.process(line));
            for o in 0..outer {
                for k in 0..inner {
                    let line = (o * inner + k) * len;
                    for i in 0..len {
                        data[o * len * inner + i * inner + k] = buf[line + i];
                    }
                }
            }
        }
        if inverse {
            let s = 1.0 / len as f64;
            data.par_iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Angular wavenumbers of an `n`-point periodic axis of length `period`.
/// The Nyquist mode (even `n`) carries `−π n / period`.
pub fn wavenumbers(n: usize, period: f64) -> Vec<f64> {
    let base = 2.0 * PI / period;
    (0..n)
        .map(|i| {
            let m = if i < n.div_ceil(2) { i as i64 } else { i as i64 - n as i64 };
            base * m as f64
        })
        .collect()
}

/// Wavenumbers for first derivatives: the Nyquist mode is zeroed so real
/// fields stay real.
pub fn derivative_wavenumbers(n: usize, period: f64) -> Vec<f64> {
    let mut k = wavenumbers(n, period);
    if n.is_multiple_of(2) {
        k[n / 2] = 0.0;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_3d() {
        let dims = [4usize, 6, 8];
        let plans = FftPlans::new(&dims);
        let orig: Vec<Complex64> = (0..192).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut d = orig.clone();
        transform(&mut d, &dims, &[0, 1, 2], &plans, false);
        transform(&mut d, &dims, &[0, 1, 2], &plans, true);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(4, 2.0 * PI);
        assert_eq!(k, vec![0.0, 1.0, -2.0, -1.0]);
        let kd = derivative_wavenumbers(4, 2.0 * PI);
        assert_eq!(kd, vec![0.0, 1.0, 0.0, -1.0]);
    }
}
