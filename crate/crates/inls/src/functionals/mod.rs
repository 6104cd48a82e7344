//! Conserved quantities, virial functionals and the inequalities built on them.

mod cutoff;
mod inequalities;
mod virial;

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use cutoff::{chi, chi_support, Cutoff, CutoffKind};
pub use inequalities::{finite_variance_inequality, gn_quotient, strauss_ratio, FiniteVarianceCheck};
pub use virial::{cylindrical_virial, localized_virial, localized_virial_tensor, CylindricalVirial, LocalizedVirial};

use crate::error::{Error, Result};
use crate::grid::{chunked_sum, dirichlet_form, gradient, norm_sq, potential_measure, Field, Grid, GridKind};
use crate::model::ModelParams;

/// Share of the `|x|²`-weighted integrand allowed in the outer 10% shell.
pub const VARIANCE_TAIL_LIMIT: f64 = 1e-6;

/// Column order of the diagnostics CSV.
pub const CSV_COLUMNS: [&str; 10] = [
    "t",
    "mass",
    "energy",
    "potential",
    "virial_g",
    "grad_sq",
    "variance",
    "variance_d1",
    "variance_d2",
    "variance_d2_fd",
];

/// Scalar diagnostics of one field at time `t`.
///
/// `variance` and `variance_d1` are NaN when `variance_reliable` is false;
/// `variance_d2_fd` is NaN unless filled in from a time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub potential: f64,
    pub virial_g: f64,
    pub grad_sq: f64,
    pub variance: f64,
    pub variance_d1: f64,
    pub variance_d2: f64,
    pub variance_d2_fd: f64,
    pub variance_reliable: bool,
}

impl DiagnosticRecord {
    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        let v = [
            self.t,
            self.mass,
            self.energy,
            self.potential,
            self.virial_g,
            self.grad_sq,
            self.variance,
            self.variance_d1,
            self.variance_d2,
            self.variance_d2_fd,
        ];
        v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(",")
    }
}

pub fn write_csv<W: Write>(records: &[DiagnosticRecord], w: &mut W) -> Result<()> {
    writeln!(w, "{}", DiagnosticRecord::csv_header())?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Grid-dependent weights reused across many evaluations.
#[derive(Debug, Clone)]
pub struct DiagnosticsContext {
    grid: Arc<Grid>,
    params: ModelParams,
    nu: Vec<f64>,
    r2: Vec<f64>,
    shell: Vec<bool>,
}

impl DiagnosticsContext {
    pub fn new(grid: &Arc<Grid>, params: &ModelParams) -> Result<Self> {
        if grid.dim() != params.n() {
            return Err(Error::GridMismatch(format!(
                "grid is {}-dimensional, params have N = {}",
                grid.dim(),
                params.n()
            )));
        }
        Ok(DiagnosticsContext {
            grid: grid.clone(),
            params: *params,
            nu: potential_measure(grid, params.b())?,
            r2: grid.radius().iter().map(|r| r * r).collect(),
            shell: grid.outer_shell(),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    /// Quadrature weights of the potential integral.
    pub fn potential_weights(&self) -> &[f64] {
        &self.nu
    }

    fn check(&self, u: &Field) -> Result<()> {
        if **u.grid() != *self.grid {
            return Err(Error::GridMismatch("field and diagnostics grids differ".into()));
        }
        Ok(())
    }

    /// `P(u) = ∫|x|^{−b}|u|^{α+2}`.
    pub fn potential(&self, u: &Field) -> f64 {
        let p = self.params.alpha() + 2.0;
        let v = u.values();
        chunked_sum(v.len(), |i| self.nu[i] * v[i].norm().powf(p))
    }

    /// Share of `∫|x|²|u|²` in the outer shell.
    pub fn variance_tail(&self, u: &Field) -> f64 {
        let (mut shell, mut total) = (0.0, 0.0);
        for (i, v) in u.values().iter().enumerate() {
            let x = v.norm_sqr() * self.grid.measure()[i] * self.r2[i];
            total += x;
            if self.shell[i] {
                shell += x;
            }
        }
        if total > 0.0 {
            shell / total
        } else {
            0.0
        }
    }

    pub fn evaluate(&self, u: &Field, t: f64) -> Result<DiagnosticRecord> {
        self.evaluate_with_grad(u, t, None)
    }

    /// As [`evaluate`](Self::evaluate), optionally reusing a precomputed `‖∇u‖²`.
    pub fn evaluate_with_grad(&self, u: &Field, t: f64, grad_sq: Option<f64>) -> Result<DiagnosticRecord> {
        self.check(u)?;
        let a = self.params.alpha();
        let mass = norm_sq(u);
        let grad_sq = grad_sq.unwrap_or_else(|| dirichlet_form(u));
        let potential = self.potential(u);
        let energy = grad_sq / 2.0 - potential / (a + 2.0);
        let virial_g = grad_sq - self.params.g_coeff() * potential;
        let variance_d2 = 8.0 * grad_sq - 4.0 * self.params.s_plus() / (a + 2.0) * potential;
        let reliable = self.variance_tail(u) < VARIANCE_TAIL_LIMIT;
        let (variance, variance_d1) = if reliable {
            let (z, m) = (u.values(), self.grid.measure());
            let v = chunked_sum(z.len(), |i| z[i].norm_sqr() * self.r2[i] * m[i]);
            let xg = x_dot_grad(u);
            let im = chunked_sum(z.len(), |i| (z[i].conj() * xg[i]).im * m[i]);
            (v, 4.0 * im)
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(DiagnosticRecord {
            t,
            mass,
            energy,
            potential,
            virial_g,
            grad_sq,
            variance,
            variance_d1,
            variance_d2,
            variance_d2_fd: f64::NAN,
            variance_reliable: reliable,
        })
    }
}

/// All scalar diagnostics of `u` at time `t`.
///
/// The variance pair is NaN-marked (not an error) when too much of the
/// `|x|²`-weighted integrand sits near the boundary.
pub fn diagnostics(u: &Field, params: &ModelParams, t: f64) -> Result<DiagnosticRecord> {
    DiagnosticsContext::new(u.grid(), params)?.evaluate(u, t)
}

pub fn mass(u: &Field) -> f64 {
    norm_sq(u)
}

/// `‖∇u‖²` in the grid's conservative discretization.
pub fn grad_sq(u: &Field) -> f64 {
    dirichlet_form(u)
}

pub fn potential(u: &Field, params: &ModelParams) -> Result<f64> {
    Ok(DiagnosticsContext::new(u.grid(), params)?.potential(u))
}

pub fn energy(u: &Field, params: &ModelParams) -> Result<f64> {
    Ok(grad_sq(u) / 2.0 - potential(u, params)? / (params.alpha() + 2.0))
}

/// `x·∇u` at every sample (`r ∂_r u` on radial grids, `τ∂_τ u + x_N ∂_N u` on cylindrical ones).
pub fn x_dot_grad(u: &Field) -> Vec<Complex64> {
    let grid = u.grid();
    let g = gradient(u);
    let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
    let ncomp = match grid.kind() {
        GridKind::Cartesian => grid.dim(),
        GridKind::Radial => 1,
        GridKind::Cylindrical => 2,
    };
    for (i, o) in out.iter_mut().enumerate() {
        let c = grid.coords(i);
        for a in 0..ncomp {
            *o += g[a].values()[i] * c[a];
        }
    }
    out
}
