//! Radial decay, Gagliardo–Nirenberg and finite-variance inequalities.

use serde::{Deserialize, Serialize};

use super::{diagnostics, potential};
use crate::error::{Error, Result};
use crate::grid::{dirichlet_form, norm_sq, Field, GridKind};
use crate::groundstate::GroundStateSummary;
use crate::model::ModelParams;

/// `sup_j r_j^{(N−1)/2}|u(r_j)| / (‖u‖^{1/2}‖∇u‖^{1/2})` for radial fields in `ℝ^N`.
///
/// The power `(N−1)/2` is the radial decay rate of `H¹(ℝ^N)`, so the ratio is
/// bounded and invariant under `u ↦ c u(λ·)`.
pub fn strauss_ratio(u: &Field) -> Result<f64> {
    let grid = u.grid();
    if grid.kind() != GridKind::Radial {
        return Err(Error::InvalidGrid("strauss_ratio needs a Radial grid".into()));
    }
    let m = norm_sq(u);
    let g = dirichlet_form(u);
    if m == 0.0 || g == 0.0 {
        return Err(Error::ZeroField);
    }
    let pw = (grid.dim() as f64 - 1.0) / 2.0;
    let samples: Vec<f64> = u
        .values()
        .iter()
        .zip(grid.radius())
        .map(|(v, r)| r.powf(pw) * v.norm())
        .collect();
    Ok(refined_sup(&samples) / (m.sqrt() * g.sqrt()).sqrt())
}

/// Supremum of samples on a uniform `s` grid, refined between the neighbours of the
/// largest sample by golden-section search on a local 6-point interpolant.
fn refined_sup(g: &[f64]) -> f64 {
    let n = g.len();
    let (jmax, &gmax) = g
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, (j, v)| if *v > *best.1 { (j, v) } else { best });
    if n < 6 {
        return gmax;
    }
    let j0 = (jmax as i64 - 2).clamp(0, n as i64 - 6) as usize;
    let interp = |t: f64| -> f64 {
        // t in units of h relative to sample j0
        let mut acc = 0.0;
        for a in 0..6 {
            let mut w = 1.0;
            for b in 0..6 {
                if a != b {
                    w *= (t - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += w * g[j0 + a];
        }
        acc
    };
    let centre = (jmax - j0) as f64;
    let (mut lo, mut hi) = ((centre - 1.0).max(0.0), (centre + 1.0).min(5.0));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut fa, mut fb) = (interp(a), interp(b));
    for _ in 0..80 {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = interp(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = interp(b);
        }
    }
    gmax.max(fa.max(fb))
}

/// Weinstein quotient `P(f) / (‖∇f‖^{(Nα+2b)/2} ‖f‖^{(4−2b−(N−2)α)/2})`.
pub fn gn_quotient(u: &Field, params: &ModelParams) -> Result<f64> {
    let m = norm_sq(u);
    let g = dirichlet_form(u);
    if m == 0.0 || g == 0.0 {
        return Err(Error::ZeroField);
    }
    let p = potential(u, params)?;
    Ok(p / (g.powf(params.s_plus() / 4.0) * m.powf(params.s_mass() / 4.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteVarianceCheck {
    /// `(V′/4)²`.
    pub lhs: f64,
    /// `V · (‖∇u‖² − C_opt^{−4/(Nα+2b)} M^{−(4−2b−(N−2)α)/(Nα+2b)} P^{4/(Nα+2b)})`.
    pub rhs: f64,
    pub slack: f64,
}

/// Compares `(Im∫ū x·∇u)²` with `‖xu‖²` times the GN-reduced kinetic energy.
pub fn finite_variance_inequality(u: &Field, gs: &GroundStateSummary, params: &ModelParams) -> Result<FiniteVarianceCheck> {
    let d = diagnostics(u, params, 0.0)?;
    if !d.variance_reliable {
        return Err(Error::VarianceUnreliable);
    }
    let sp = params.s_plus();
    let lhs = (d.variance_d1 / 4.0).powi(2);
    let bracket = if d.mass > 0.0 {
        d.grad_sq - gs.c_opt.powf(-4.0 / sp) * d.mass.powf(-params.s_mass() / sp) * d.potential.powf(4.0 / sp)
    } else {
        0.0
    };
    let rhs = d.variance * bracket;
    Ok(FiniteVarianceCheck { lhs, rhs, slack: rhs - lhs })
}
