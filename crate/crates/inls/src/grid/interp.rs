//! Resampling `x ↦ u(λx)` on a field's own grid.
//!
//! Periodic axes use trigonometric interpolation, staggered axes 6-point
//! Lagrange in `s` with the even mirror at the origin. Targets outside the
//! domain are filled with zero only when the field is negligible near the
//! boundary.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::radial::RadialAxis;
use super::{Field, GridKind};
use crate::error::{Error, Result};

/// Relative size below which boundary values count as zero.
const TAIL_TOL: f64 = 1e-10;

type Row = Option<Vec<(usize, f64)>>;

/// Samples `x ↦ f(λx)` at every grid point.
pub fn dilate(f: &Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidField(format!("dilation factor {lambda} must be positive")));
    }
    if lambda == 1.0 {
        return Ok(f.clone());
    }
    let grid = f.grid();
    let dims = grid.dims().to_vec();
    let rows: Vec<Vec<Row>> = match grid.kind() {
        GridKind::Cartesian => (0..grid.dim()).map(|a| periodic_rows(grid, a, lambda)).collect(),
        GridKind::Radial => vec![staggered_rows(grid.radial_axis().unwrap(), lambda)],
        GridKind::Cylindrical => vec![
            staggered_rows(grid.radial_axis().unwrap(), lambda),
            periodic_rows(grid, 1, lambda),
        ],
    };
    if rows.iter().any(|r| r.iter().any(Option::is_none)) {
        let sup = f.sup_norm();
        let shell = grid.outer_shell();
        let edge = f
            .values()
            .iter()
            .zip(&shell)
            .filter(|(_, &s)| s)
            .fold(0.0f64, |m, (v, _)| m.max(v.norm()));
        if edge > TAIL_TOL * sup {
            return Err(Error::ResampleOutOfDomain(format!(
                "lambda = {lambda} maps samples outside the grid and the field is {:.3e} of its peak at the boundary",
                edge / sup
            )));
        }
    }
    let mut values = f.values().to_vec();
    for (a, r) in rows.iter().enumerate() {
        values = apply_axis(&values, &dims, a, r);
    }
    Ok(f.with_values(values))
}

fn apply_axis(values: &[Complex64], dims: &[usize], axis: usize, rows: &[Row]) -> Vec<Complex64> {
    let inner: usize = dims[axis + 1..].iter().product();
    let len = dims[axis];
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let ia = (i / inner) % len;
        let base = i - ia * inner;
        if let Some(row) = &rows[ia] {
            *o = row.iter().map(|&(m, w)| values[base + m * inner] * w).sum();
        }
    }
    out
}

/// Trigonometric interpolation weights on periodic axis `axis` at `λ x_j`.
fn periodic_rows(grid: &super::Grid, axis: usize, lambda: f64) -> Vec<Row> {
    let n = grid.dims()[axis];
    let pts = grid.axis_points(axis);
    let lo = grid.offset()[axis] - grid.extent()[axis];
    let period = 2.0 * grid.extent()[axis];
    let h = grid.spacing(axis);
    pts.iter()
        .map(|&x| {
            let y = lambda * x;
            if y < lo - 1e-12 || y > lo + period - h + 1e-12 {
                return None;
            }
            Some(
                (0..n)
                    .map(|m| (m, dirichlet_kernel(n, 2.0 * PI * (y - pts[m]) / period)))
                    .collect(),
            )
        })
        .collect()
}

/// Cardinal function of `n`-point trigonometric interpolation (Nyquist mode symmetrized).
fn dirichlet_kernel(n: usize, theta: f64) -> f64 {
    let half = 0.5 * theta;
    let s = half.sin();
    if s.abs() < 1e-14 {
        // θ ≡ 0 (mod 2π)
        return if n.is_multiple_of(2) { (n as f64 * half).cos() * half.cos().signum() } else { (n as f64 * half).cos() / half.cos() };
    }
    let nf = n as f64;
    if n.is_multiple_of(2) {
        (nf * half).sin() * half.cos() / (nf * s)
    } else {
        (nf * half).sin() / (nf * s)
    }
}

/// Lagrange weights on a staggered axis at `r = λ r_j`.
fn staggered_rows(ax: &RadialAxis, lambda: f64) -> Vec<Row> {
    ax.r.iter().map(|&r| radial_weights(ax, lambda * r)).collect()
}

/// 6-point Lagrange weights in `s` for the value at radius `r`, with the even
/// mirror folded in; `None` beyond the outer edge.
pub fn radial_weights(ax: &RadialAxis, r: f64) -> Option<Vec<(usize, f64)>> {
    let n = ax.n;
    if r > ax.face_r[n - 1] {
        return None;
    }
    let s = ax.map.s_of_r(r.abs()) / ax.h - 0.5;
    let j0 = (s.floor() as i64 - 2).clamp(-3, n as i64 - 6);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(6);
    for a in 0..6 {
        let ia = j0 + a;
        let mut w = 1.0;
        for b in 0..6 {
            if b != a {
                let ib = j0 + b;
                w *= (s - ib as f64) / ((ia - ib) as f64);
            }
        }
        let idx = if ia < 0 { (-ia - 1) as usize } else { ia as usize };
        match row.iter_mut().find(|e| e.0 == idx) {
            Some(e) => e.1 += w,
            None => row.push((idx, w)),
        }
    }
    Some(row)
}

/// Value at radius `r` of samples on a staggered axis; zero beyond the outer edge.
pub fn sample_radial(ax: &RadialAxis, values: &[Complex64], r: f64) -> Complex64 {
    match radial_weights(ax, r) {
        Some(row) => row.iter().map(|&(i, w)| values[i] * w).sum(),
        None => Complex64::new(0.0, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{GridSpec, RadialMap};
    use super::*;

    #[test]
    fn kernel_is_cardinal() {
        for n in [8usize, 9] {
            for m in 0..n {
                let k = dirichlet_kernel(n, 2.0 * PI * m as f64 / n as f64);
                assert!((k - if m == 0 { 1.0 } else { 0.0 }).abs() < 1e-13, "n={n} m={m} {k}");
            }
        }
    }

    #[test]
    fn radial_dilation_of_gaussian() {
        for map in [RadialMap::UNIFORM, RadialMap::GRADED] {
            let g = GridSpec::radial(3, 1024, 16.0).with_map(map).build().unwrap();
            let f = Field::from_radial_fn(g.clone(), |r| Complex64::new((-r * r).exp(), 0.0));
            for lambda in [0.5, 1.7] {
                let d = dilate(&f, lambda).unwrap();
                for (v, r) in d.values().iter().zip(g.radius()) {
                    let e = (-(lambda * r).powi(2)).exp();
                    assert!((v.re - e).abs() < 1e-8, "{map:?} {lambda} {r}");
                }
            }
        }
    }

    #[test]
    fn cartesian_dilation_is_spectral() {
        let g = GridSpec::cartesian(2, &[128, 128], &[10.0, 10.0]).build().unwrap();
        let f = Field::from_fn(g.clone(), |x| Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), 0.0));
        let d = dilate(&f, 1.3).unwrap();
        for i in 0..g.len() {
            let x = g.coords(i);
            let e = (-1.69 * (x[0] * x[0] + 2.0 * x[1] * x[1])).exp();
            assert!((d.values()[i].re - e).abs() < 1e-10);
        }
    }

    #[test]
    fn wide_field_cannot_expand_outward() {
        let g = GridSpec::radial(2, 64, 4.0).build().unwrap();
        let f = Field::from_radial_fn(g, |r| Complex64::new((-r * r / 8.0).exp(), 0.0));
        assert!(matches!(dilate(&f, 2.0), Err(Error::ResampleOutOfDomain(_))));
        assert!(dilate(&f, 0.5).is_ok());
    }
}
