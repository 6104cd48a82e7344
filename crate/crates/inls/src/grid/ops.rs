//! Calculus and quadrature on fields.

use num_complex::Complex64;
use rayon::prelude::*;

use super::fft::{derivative_wavenumbers, transform};
use super::{Field, Grid, GridKind};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

const SUM_CHUNK: usize = 4096;

/// `Σ_{i<len} term(i)` summed in fixed chunks, so the result does not depend
/// on thread scheduling.
pub(crate) fn chunked_sum<T>(len: usize, term: impl Fn(usize) -> T + Sync) -> T
where
    T: Send + std::iter::Sum<T> + Copy,
{
    let parts: Vec<T> = (0..len.div_ceil(SUM_CHUNK))
        .into_par_iter()
        .map(|c| (c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(len)).map(&term).sum())
        .collect();
    parts.into_iter().sum()
}

/// `∫ f dx` with the grid's quadrature weights.
pub fn integrate(f: &Field) -> Complex64 {
    let (v, m) = (f.values(), f.grid().measure());
    chunked_sum(v.len(), |i| v[i] * m[i])
}

/// `∫ f̄ g dx`.
pub fn inner(f: &Field, g: &Field) -> Complex64 {
    let (a, b, m) = (f.values(), g.values(), f.grid().measure());
    chunked_sum(a.len(), |i| a[i].conj() * b[i] * m[i])
}

/// `∫ |f|² dx`.
pub fn norm_sq(f: &Field) -> f64 {
    let (v, m) = (f.values(), f.grid().measure());
    chunked_sum(v.len(), |i| v[i].norm_sqr() * m[i])
}

/// `(|x|² + ε²)^{−b/2}` with `ε = grid.weight_eps`.
pub fn singular_weight(grid: &std::sync::Arc<Grid>, b: f64) -> Result<Field> {
    let w = weight_values(grid, b)?;
    Field::new(grid.clone(), w.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
}

fn weight_values(grid: &Grid, b: f64) -> Result<Vec<f64>> {
    if b == 0.0 {
        return Ok(vec![1.0; grid.len()]);
    }
    let eps = grid.weight_eps();
    if eps == 0.0 && grid.has_origin_sample() {
        return Err(Error::SingularAtOrigin);
    }
    Ok(grid.radius().iter().map(|r| (r * r + eps * eps).powf(-b / 2.0)).collect())
}

/// Quadrature weights `ν` for `∫ |x|^{−b} g dx ≈ Σ ν_i g_i`.
///
/// On radial grids with `ε = 0` the weight carries its own end corrections;
/// elsewhere `ν = measure · w`.
pub fn potential_measure(grid: &Grid, b: f64) -> Result<Vec<f64>> {
    if grid.kind() == GridKind::Radial {
        let ax = grid.radial_axis().unwrap();
        if b != 0.0 && grid.weight_eps() == 0.0 {
            return Ok(ax.weighted_measure(b, 0.0));
        }
    }
    let w = weight_values(grid, b)?;
    Ok(w.iter().zip(grid.measure()).map(|(w, m)| w * m).collect())
}

/// `ν / measure`: the pointwise weight consistent with [`potential_measure`].
pub fn effective_weight(grid: &Grid, b: f64) -> Result<Vec<f64>> {
    let nu = potential_measure(grid, b)?;
    Ok(nu.iter().zip(grid.measure()).map(|(n, m)| n / m).collect())
}

/// Forward transform of a Cartesian field (unnormalized).
pub fn spectral_coefficients(f: &Field) -> Result<Vec<Complex64>> {
    let grid = f.grid();
    if grid.kind() != GridKind::Cartesian {
        return Err(Error::InvalidGrid("spectral coefficients need a Cartesian grid".into()));
    }
    let mut d = f.values().to_vec();
    let axes: Vec<usize> = (0..grid.dim()).collect();
    transform(&mut d, grid.dims(), &axes, grid.plans(), false);
    Ok(d)
}

/// `Σ |f̂_k|² · Πh / total`, equal to `∫|f|²` by Parseval.
pub fn spectral_norm_sq(f: &Field) -> Result<f64> {
    let grid = f.grid();
    let c = spectral_coefficients(f)?;
    let scale = grid.measure()[0] / grid.len() as f64;
    Ok(c.iter().map(|v| v.norm_sqr()).sum::<f64>() * scale)
}

/// Per-axis wavenumbers of the periodic axes (Cartesian: all; Cylindrical: the last).
fn periodic_axes(grid: &Grid) -> Vec<usize> {
    match grid.kind() {
        GridKind::Cartesian => (0..grid.dim()).collect(),
        GridKind::Cylindrical => vec![1],
        GridKind::Radial => vec![],
    }
}

fn axis_index(dims: &[usize], idx: usize, axis: usize) -> usize {
    let inner: usize = dims[axis + 1..].iter().product();
    (idx / inner) % dims[axis]
}

/// Spectral derivative of a periodic axis.
fn spectral_derivative(grid: &Grid, values: &[Complex64], axis: usize, order: u32) -> Vec<Complex64> {
    let axes = periodic_axes(grid);
    let mut d = values.to_vec();
    transform(&mut d, grid.dims(), &axes, grid.plans(), false);
    let k = if order == 1 {
        derivative_wavenumbers(grid.dims()[axis], 2.0 * grid.extent()[axis])
    } else {
        grid.wavenumbers(axis)
    };
    let dims = grid.dims().to_vec();
    d.par_iter_mut().enumerate().for_each(|(i, v)| {
        let ka = k[axis_index(&dims, i, axis)];
        *v *= if order == 1 { Complex64::new(0.0, ka) } else { Complex64::new(-ka * ka, 0.0) };
    });
    transform(&mut d, grid.dims(), &axes, grid.plans(), true);
    d
}

/// Applies `op` to every τ-line of a cylindrical field (or the single line of a radial one).
fn per_line(grid: &Grid, values: &[Complex64], op: impl Fn(&[Complex64]) -> Vec<Complex64> + Sync) -> Vec<Complex64> {
    match grid.kind() {
        GridKind::Radial => op(values),
        GridKind::Cylindrical => {
            let (nt, nz) = (grid.dims()[0], grid.dims()[1]);
            let lines: Vec<Vec<Complex64>> = (0..nz)
                .into_par_iter()
                .map(|z| {
                    let line: Vec<Complex64> = (0..nt).map(|t| values[t * nz + z]).collect();
                    op(&line)
                })
                .collect();
            let mut out = vec![ZERO; values.len()];
            for (z, line) in lines.iter().enumerate() {
                for (t, v) in line.iter().enumerate() {
                    out[t * nz + z] = *v;
                }
            }
            out
        }
        GridKind::Cartesian => unreachable!("no staggered axis"),
    }
}

/// `∇f`: one component per Cartesian axis; `∂_r f` on radial grids; `(∂_τ f, ∂_{x_N} f)` on cylindrical grids.
pub fn gradient(f: &Field) -> Vec<Field> {
    let grid = f.grid();
    let mk = |v: Vec<Complex64>| Field::new(grid.clone(), v).expect("length preserved");
    match grid.kind() {
        GridKind::Cartesian => {
            let axes = periodic_axes(grid);
            let mut hat = f.values().to_vec();
            transform(&mut hat, grid.dims(), &axes, grid.plans(), false);
            let dims = grid.dims().to_vec();
            (0..grid.dim())
                .map(|a| {
                    let k = derivative_wavenumbers(dims[a], 2.0 * grid.extent()[a]);
                    let mut d: Vec<Complex64> = hat
                        .par_iter()
                        .enumerate()
                        .map(|(i, v)| v * Complex64::new(0.0, k[axis_index(&dims, i, a)]))
                        .collect();
                    transform(&mut d, &dims, &axes, grid.plans(), true);
                    mk(d)
                })
                .collect()
        }
        GridKind::Radial => {
            let ax = grid.radial_axis().unwrap();
            vec![mk(ax.dr_of(f.values()))]
        }
        GridKind::Cylindrical => {
            let ax = grid.radial_axis().unwrap();
            vec![
                mk(per_line(grid, f.values(), |l| ax.dr_of(l))),
                mk(spectral_derivative(grid, f.values(), 1, 1)),
            ]
        }
    }
}

/// `Δf`; on radial grids `f″ + (N−1)/r f′`.
pub fn laplacian(f: &Field) -> Field {
    let grid = f.grid();
    let values = match grid.kind() {
        GridKind::Cartesian => {
            let axes = periodic_axes(grid);
            let mut d = f.values().to_vec();
            transform(&mut d, grid.dims(), &axes, grid.plans(), false);
            let dims = grid.dims().to_vec();
            let ks: Vec<Vec<f64>> = (0..grid.dim()).map(|a| grid.wavenumbers(a)).collect();
            d.par_iter_mut().enumerate().for_each(|(i, v)| {
                let k2: f64 = (0..dims.len()).map(|a| ks[a][axis_index(&dims, i, a)].powi(2)).sum();
                *v *= -k2;
            });
            transform(&mut d, grid.dims(), &axes, grid.plans(), true);
            d
        }
        GridKind::Radial => grid.radial_axis().unwrap().laplacian(f.values()),
        GridKind::Cylindrical => {
            let ax = grid.radial_axis().unwrap();
            let lt = per_line(grid, f.values(), |l| ax.laplacian(l));
            let lz = spectral_derivative(grid, f.values(), 1, 2);
            lt.iter().zip(&lz).map(|(a, b)| a + b).collect()
        }
    };
    f.with_values(values)
}

/// Discrete `‖∇f‖²` in its conservative form.
///
/// Cartesian: Parseval with the full wavenumbers. Radial: `⟨f, Sf⟩`.
/// Cylindrical: stiffness form per τ-line plus the spectral `x_N` part.
pub fn dirichlet_form(f: &Field) -> f64 {
    let grid = f.grid();
    match grid.kind() {
        GridKind::Cartesian => {
            let hat = spectral_coefficients(f).expect("Cartesian");
            let dims = grid.dims().to_vec();
            let ks: Vec<Vec<f64>> = (0..grid.dim()).map(|a| grid.wavenumbers(a)).collect();
            let scale = grid.measure()[0] / grid.len() as f64;
            chunked_sum(hat.len(), |i| {
                let k2: f64 = (0..dims.len()).map(|a| ks[a][axis_index(&dims, i, a)].powi(2)).sum();
                k2 * hat[i].norm_sqr()
            }) * scale
        }
        GridKind::Radial => grid.radial_axis().unwrap().stiffness_form(f.values()),
        GridKind::Cylindrical => {
            let ax = grid.radial_axis().unwrap();
            let (nt, nz) = (grid.dims()[0], grid.dims()[1]);
            let hz = grid.spacing(1);
            let forms: Vec<f64> = (0..nz)
                .into_par_iter()
                .map(|z| {
                    let line: Vec<Complex64> = (0..nt).map(|t| f.values()[t * nz + z]).collect();
                    ax.stiffness_form(&line)
                })
                .collect();
            let tau_part = forms.iter().sum::<f64>() * hz;
            let mut hat = f.values().to_vec();
            transform(&mut hat, grid.dims(), &[1], grid.plans(), false);
            let k = grid.wavenumbers(1);
            let z_part: f64 = (0..nt)
                .map(|t| {
                    let s: f64 = (0..nz).map(|z| k[z] * k[z] * hat[t * nz + z].norm_sqr()).sum();
                    ax.mu_c[t] * s
                })
                .sum::<f64>()
                * hz
                / nz as f64;
            tau_part + z_part
        }
    }
}

/// Fraction of `∫ g |f|²` carried by the outer 10% shell of the domain.
pub fn shell_fraction(f: &Field, weight: impl Fn(usize) -> f64) -> f64 {
    let grid = f.grid();
    let shell = grid.outer_shell();
    let (mut inside, mut total) = (0.0, 0.0);
    for (i, (v, m)) in f.values().iter().zip(grid.measure()).enumerate() {
        let x = v.norm_sqr() * m * weight(i);
        total += x;
        if shell[i] {
            inside += x;
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::super::GridSpec;
    use super::*;
    use std::f64::consts::PI;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn sine_derivatives_exact() {
        let g = GridSpec::cartesian(1, &[64], &[PI]).build().unwrap();
        let f = Field::from_fn(g.clone(), |x| c((3.0 * x[0]).sin()));
        let d = &gradient(&f)[0];
        let l = laplacian(&f);
        for i in 0..64 {
            let x = g.coords(i)[0];
            assert!((d.values()[i].re - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
            assert!((l.values()[i].re + 9.0 * (3.0 * x).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_have_zero_derivatives() {
        for spec in [
            GridSpec::cartesian(2, &[16, 16], &[3.0, 3.0]),
            GridSpec::radial(3, 64, 8.0),
            GridSpec::cylindrical(3, [32, 16], [6.0, 6.0]),
        ] {
            let g = spec.build().unwrap();
            let f = Field::from_fn(g, |_| c(2.5));
            for d in gradient(&f) {
                assert!(d.sup_norm() < 1e-10);
            }
            assert!(laplacian(&f).sup_norm() < 1e-9);
            if f.grid().kind() == GridKind::Cartesian {
                assert!(dirichlet_form(&f) < 1e-12 * norm_sq(&f));
            }
        }
    }

    #[test]
    fn radial_gradient_of_gaussian() {
        let g = GridSpec::radial(3, 2048, 16.0).build().unwrap();
        let f = Field::from_radial_fn(g.clone(), |r| c((-r * r).exp()));
        let d = &gradient(&f)[0];
        let exact: Vec<f64> = g.radius().iter().map(|r| -2.0 * r * (-r * r).exp()).collect();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = d.values().iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a.re - b).abs()));
        assert!(err / scale <= 1e-8, "{}", err / scale);
    }

    #[test]
    fn radial_laplacian_of_gaussian() {
        let g = GridSpec::radial(3, 2048, 16.0).build().unwrap();
        let f = Field::from_radial_fn(g.clone(), |r| c((-r * r / 2.0).exp()));
        let l = laplacian(&f);
        let exact: Vec<f64> = g.radius().iter().map(|r| (r * r - 3.0) * (-r * r / 2.0).exp()).collect();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = l.values().iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a.re - b).abs()));
        assert!(err / scale <= 1e-7, "{}", err / scale);
    }

    #[test]
    fn gaussian_integrals() {
        let g = GridSpec::cartesian(1, &[512], &[16.0]).build().unwrap();
        let f = Field::from_fn(g, |x| c((-x[0] * x[0]).exp()));
        assert!((integrate(&f).re - PI.sqrt()).abs() < 1e-10);
        let g = GridSpec::radial(3, 1024, 16.0).build().unwrap();
        let f = Field::from_radial_fn(g, |r| c((-r * r).exp()));
        assert!((integrate(&f).re - PI.powf(1.5)).abs() < 1e-8);
        assert_eq!(integrate(&Field::zeros(GridSpec::radial(2, 16, 1.0).build().unwrap())), ZERO);
    }

    #[test]
    fn weight_definition_and_errors() {
        let g = GridSpec::radial(2, 64, 8.0).build().unwrap();
        let w = singular_weight(&g, 0.5).unwrap();
        for (v, r) in w.values().iter().zip(g.radius()) {
            assert_eq!(v.re, r.powf(-0.5));
        }
        let ones = singular_weight(&g, 0.0).unwrap();
        assert!(ones.values().iter().all(|v| *v == c(1.0)));
        let cart = GridSpec::cartesian(2, &[8, 8], &[4.0, 4.0]).with_weight_eps(0.0).build().unwrap();
        assert!(matches!(singular_weight(&cart, 0.5), Err(Error::SingularAtOrigin)));
        let staggered = GridSpec::cartesian(2, &[8, 8], &[4.0, 4.0])
            .with_offset(&[0.5, 0.5])
            .with_weight_eps(0.0)
            .build()
            .unwrap();
        assert!(singular_weight(&staggered, 0.5).is_ok());
    }

    #[test]
    fn radial_weighted_quadrature_is_accurate() {
        // ∫_{ℝ³} |x|^{-1/2} e^{-r²} dx = 2π Γ(5/4)
        let exact = 2.0 * PI * statrs::function::gamma::gamma(1.25);
        for spec in [GridSpec::radial(3, 512, 12.0), GridSpec::radial(3, 512, 12.0).with_map(super::super::RadialMap::GRADED)] {
            let g = spec.with_cusp(0.5).build().unwrap();
            let nu = potential_measure(&g, 0.5).unwrap();
            let s: f64 = nu.iter().zip(g.radius()).map(|(n, r)| n * (-r * r).exp()).sum();
            assert!((s - exact).abs() < 1e-9 * exact, "{}", (s - exact).abs());
        }
    }

    #[test]
    fn parseval_on_cartesian() {
        let g = GridSpec::cartesian(2, &[32, 24], &[5.0, 4.0]).build().unwrap();
        let f = Field::from_fn(g, |x| Complex64::new((-x[0] * x[0]).exp() * x[1].cos(), (-x[1] * x[1]).exp()));
        let a = norm_sq(&f);
        let b = spectral_norm_sq(&f).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn integration_by_parts_cartesian_and_radial() {
        let g = GridSpec::cartesian(2, &[64, 64], &[8.0, 8.0]).build().unwrap();
        let f = Field::from_fn(g.clone(), |x| c((-(x[0] * x[0] + x[1] * x[1])).exp()));
        let h = Field::from_fn(g, |x| Complex64::new(0.0, (-(x[0] - 0.3).powi(2) - x[1] * x[1] / 2.0).exp()));
        let lhs = inner(&f, &laplacian(&h));
        let rhs: Complex64 = gradient(&f).iter().zip(gradient(&h).iter()).map(|(a, b)| inner(a, b)).sum();
        assert!((lhs + rhs).norm() < 1e-8 * rhs.norm());

        let g = GridSpec::radial(3, 2048, 16.0).build().unwrap();
        let f = Field::from_radial_fn(g.clone(), |r| c((-r * r).exp()));
        let h = Field::from_radial_fn(g, |r| c((1.0 + r * r) * (-r * r / 2.0).exp()));
        let lhs = inner(&f, &laplacian(&h));
        let rhs = inner(&gradient(&f)[0], &gradient(&h)[0]);
        assert!((lhs + rhs).norm() < 1e-8 * rhs.norm(), "{}", (lhs + rhs).norm() / rhs.norm());
    }

    #[test]
    fn dirichlet_forms_agree_across_grids() {
        // ‖∇ e^{-r²/2}‖² in ℝ³ = (3/2) π^{3/2}
        let exact = 1.5 * PI.powf(1.5);
        let g = GridSpec::radial(3, 1024, 12.0).build().unwrap();
        let f = Field::from_radial_fn(g, |r| c((-r * r / 2.0).exp()));
        assert!((dirichlet_form(&f) - exact).abs() < 1e-8 * exact);
        let g = GridSpec::cylindrical(3, [256, 64], [10.0, 10.0]).build().unwrap();
        let f = Field::from_radial_fn(g, |r| c((-r * r / 2.0).exp()));
        assert!((dirichlet_form(&f) - exact).abs() < 1e-7 * exact, "{}", dirichlet_form(&f) - exact);
        assert!((norm_sq(&f) - PI.powf(1.5)).abs() < 1e-8);
    }

    #[test]
    fn radial_matches_cartesian_quadrature() {
        let gc = GridSpec::cartesian(2, &[64, 64], &[8.0, 8.0]).build().unwrap();
        let gr = GridSpec::radial(2, 256, 8.0).build().unwrap();
        let prof = |r: f64| c((-r * r).exp() * (1.0 + r * r));
        let a = integrate(&Field::from_radial_fn(gc, prof)).re;
        let b = integrate(&Field::from_radial_fn(gr, prof)).re;
        assert!((a - b).abs() < 1e-4 * b.abs());
    }
}
