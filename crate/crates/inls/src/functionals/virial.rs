//! Localized virial quantities `V_φ = ∫φ|u|²` and their time derivatives.
//!
//! `V″_φ = −∫Δ²φ|u|² + 4 Re Σ∫∂²_{jk}φ ∂_jū ∂_ku − (2α/(α+2))∫|x|^{−b}Δφ|u|^{α+2}
//!        + (4/(α+2))∫∇φ·∇(|x|^{−b})|u|^{α+2}`.
//!
//! The bi-Laplacian term is evaluated in its weak form `2∫(Δφ)′ Re(ū ∂_ρ u)`,
//! since the bridge profile is only C². On staggered axes the gradient terms
//! use the face quadrature of the stiffness form, so a cutoff that is
//! quadratic on the whole grid reproduces `8G(u)` exactly. `∇(|x|^{−b})` enters
//! as `−b x|x|^{−2}` times the grid's weight.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cutoff::{Cutoff, CutoffKind};
use super::x_dot_grad;
use crate::error::{Error, Result};
use crate::grid::{dirichlet_form, gradient, potential_measure, symmetry_deviation, Field, GridKind, Symmetry};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedVirial {
    pub v: f64,
    pub v_d1: f64,
    pub v_d2: f64,
    /// `v_d2 − 8G(u)`.
    pub remainder_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylindricalVirial {
    pub v: f64,
    pub v_d1: f64,
    pub v_d2: f64,
    /// `v_d2 − 8G(u)`.
    pub defect: f64,
}

/// Shared pieces: `P`-type sums and `G`.
struct Potentials {
    nu: Vec<f64>,
    pow: Vec<f64>,
    grad_sq: f64,
    potential: f64,
}

impl Potentials {
    fn new(u: &Field, params: &ModelParams) -> Result<Self> {
        let nu = potential_measure(u.grid(), params.b())?;
        let p = params.alpha() + 2.0;
        let pow: Vec<f64> = u.values().iter().map(|v| v.norm().powf(p)).collect();
        let potential = nu.iter().zip(&pow).map(|(n, q)| n * q).sum();
        Ok(Potentials {
            nu,
            pow,
            grad_sq: dirichlet_form(u),
            potential,
        })
    }

    fn g(&self, params: &ModelParams) -> f64 {
        self.grad_sq - params.g_coeff() * self.potential
    }

    /// `Σ ν c_i |u_i|^{α+2}`.
    fn weighted(&self, c: impl Fn(usize) -> f64) -> f64 {
        self.nu.iter().zip(&self.pow).enumerate().map(|(i, (n, q))| n * q * c(i)).sum()
    }
}

fn check(u: &Field, cutoff: &Cutoff, params: &ModelParams) -> Result<()> {
    if **u.grid() != **cutoff.grid() {
        return Err(Error::GridCutoffMismatch);
    }
    if u.grid().dim() != params.n() {
        return Err(Error::GridMismatch(format!(
            "grid is {}-dimensional, params have N = {}",
            u.grid().dim(),
            params.n()
        )));
    }
    Ok(())
}

/// Radial-cutoff virial quantities, using the radial reduction of the Hessian term.
pub fn localized_virial(u: &Field, cutoff: &Cutoff, params: &ModelParams) -> Result<LocalizedVirial> {
    check(u, cutoff, params)?;
    if cutoff.kind() != CutoffKind::RadialQuadratic {
        return Err(Error::InvalidField("localized_virial needs a RadialQuadratic cutoff".into()));
    }
    let grid = u.grid();
    let a = params.alpha();
    let b = params.b();
    let pots = Potentials::new(u, params)?;
    let m = grid.measure();
    let vals = u.values();
    let pv = &cutoff.values;
    let v: f64 = (0..u.len()).map(|i| m[i] * pv[i].psi * vals[i].norm_sqr()).sum();
    let (v_d1, t1, t2) = match grid.kind() {
        GridKind::Radial => {
            let ax = grid.radial_axis().unwrap();
            let ur = ax.dr_of(vals);
            let d1: f64 = (0..u.len()).map(|i| m[i] * pv[i].dpsi * (vals[i].conj() * ur[i]).im).sum();
            let t1: f64 = (0..u.len()).map(|i| m[i] * pv[i].dlap * (vals[i].conj() * ur[i]).re).sum();
            let du = ax.face_derivative(vals);
            let t2: f64 = (0..ax.n).map(|k| ax.face_k[k] * cutoff.face_d2[k] * du[k].norm_sqr()).sum();
            (2.0 * d1, 2.0 * t1, 4.0 * t2)
        }
        GridKind::Cartesian => {
            let g = gradient(u);
            let xg = x_dot_grad(u);
            let mut d1 = 0.0;
            let mut t1 = 0.0;
            let mut t2 = 0.0;
            for i in 0..u.len() {
                let z = vals[i].conj() * xg[i];
                d1 += m[i] * pv[i].dpsi_over_rho * z.im;
                t1 += m[i] * pv[i].dlap_over_rho * z.re;
                let grad2: f64 = g.iter().map(|c| c.values()[i].norm_sqr()).sum();
                t2 += m[i] * (pv[i].dpsi_over_rho * grad2 + pv[i].hess_excess * xg[i].norm_sqr());
            }
            (2.0 * d1, 2.0 * t1, 4.0 * t2)
        }
        GridKind::Cylindrical => unreachable!("rejected when the cutoff was built"),
    };
    let t3 = -2.0 * a / (a + 2.0) * pots.weighted(|i| pv[i].lap);
    let t4 = -4.0 * b / (a + 2.0) * pots.weighted(|i| pv[i].dpsi_over_rho);
    let v_d2 = t1 + t2 + t3 + t4;
    Ok(LocalizedVirial {
        v,
        v_d1,
        v_d2,
        remainder_bound: v_d2 - 8.0 * pots.g(params),
    })
}

/// Virial quantities on Cartesian grids from the full Hessian `∂²_{jk}φ`, for either cutoff kind.
pub fn localized_virial_tensor(u: &Field, cutoff: &Cutoff, params: &ModelParams) -> Result<LocalizedVirial> {
    check(u, cutoff, params)?;
    let grid = u.grid();
    if grid.kind() != GridKind::Cartesian {
        return Err(Error::InvalidGrid("the tensor form needs a Cartesian grid".into()));
    }
    let n = grid.dim();
    let profiled = if cutoff.kind() == CutoffKind::Cylindrical { n - 1 } else { n };
    let a = params.alpha();
    let b = params.b();
    let pots = Potentials::new(u, params)?;
    let m = grid.measure();
    let vals = u.values();
    let pv = &cutoff.values;
    let g = gradient(u);
    let phi = cutoff.phi();
    let lap = cutoff.laplacian();
    let (mut v, mut d1, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0);
    let mut x_dot_grad_phi = vec![0.0; u.len()];
    for i in 0..u.len() {
        let x = grid.coords(i);
        let p = pv[i];
        let grad_phi = |j: usize| if j < profiled { p.dpsi_over_rho * x[j] } else { 2.0 * x[j] };
        let hess = |j: usize, k: usize| {
            if j < profiled && k < profiled {
                let d = if j == k { p.dpsi_over_rho } else { 0.0 };
                d + p.hess_excess * x[j] * x[k]
            } else if j == k {
                2.0
            } else {
                0.0
            }
        };
        let du: Vec<Complex64> = g.iter().map(|c| c.values()[i]).collect();
        v += m[i] * phi[i] * vals[i].norm_sqr();
        let gp_du: Complex64 = (0..n).map(|j| du[j] * grad_phi(j)).sum();
        d1 += m[i] * (vals[i].conj() * gp_du).im;
        let grad_lap: Complex64 = (0..profiled).map(|j| du[j] * (p.dlap_over_rho * x[j])).sum();
        t1 += m[i] * (vals[i].conj() * grad_lap).re;
        let mut h = 0.0;
        for j in 0..n {
            for k in 0..n {
                h += hess(j, k) * (du[j].conj() * du[k]).re;
            }
        }
        t2 += m[i] * h;
        let r2: f64 = x[..n].iter().map(|c| c * c).sum();
        let xgp: f64 = (0..n).map(|j| x[j] * grad_phi(j)).sum();
        // ∇φ·x / |x|², equal to 2 wherever φ is the exact quadratic
        x_dot_grad_phi[i] = if r2 > 0.0 { xgp / r2 } else { 2.0 };
    }
    let t3 = -2.0 * a / (a + 2.0) * pots.weighted(|i| lap[i]);
    let t4 = -4.0 * b / (a + 2.0) * pots.weighted(|i| x_dot_grad_phi[i]);
    let v_d2 = 2.0 * t1 + 4.0 * t2 + t3 + t4;
    Ok(LocalizedVirial {
        v,
        v_d1: 2.0 * d1,
        v_d2,
        remainder_bound: v_d2 - 8.0 * pots.g(params),
    })
}

/// Virial quantities for `φ = ψ_R(y) + x_N²` on fields symmetric in `y`.
pub fn cylindrical_virial(u: &Field, cutoff: &Cutoff, params: &ModelParams) -> Result<CylindricalVirial> {
    check(u, cutoff, params)?;
    if cutoff.kind() != CutoffKind::Cylindrical {
        return Err(Error::InvalidField("cylindrical_virial needs a Cylindrical cutoff".into()));
    }
    if u.symmetry() != Symmetry::CylindricalSigmaN {
        let dev = symmetry_deviation(u, Symmetry::CylindricalSigmaN)?;
        if dev > 1e-10 {
            return Err(Error::SymmetryViolation(dev));
        }
    }
    let grid = u.grid();
    if grid.kind() == GridKind::Cartesian {
        let lv = localized_virial_tensor(u, cutoff, params)?;
        return Ok(CylindricalVirial {
            v: lv.v,
            v_d1: lv.v_d1,
            v_d2: lv.v_d2,
            defect: lv.remainder_bound,
        });
    }
    let a = params.alpha();
    let b = params.b();
    let pots = Potentials::new(u, params)?;
    let ax = grid.radial_axis().unwrap();
    let (nt, nz) = (grid.dims()[0], grid.dims()[1]);
    let hz = grid.spacing(1);
    let m = grid.measure();
    let vals = u.values();
    let pv = &cutoff.values;
    let g = gradient(u);
    let (ut, uz) = (g[0].values(), g[1].values());
    let phi = cutoff.phi();
    let (mut v, mut d1, mut t1) = (0.0, 0.0, 0.0);
    for i in 0..u.len() {
        let z = grid.coords(i)[1];
        v += m[i] * phi[i] * vals[i].norm_sqr();
        d1 += m[i] * (vals[i].conj() * (ut[i] * pv[i].dpsi + uz[i] * (2.0 * z))).im;
        t1 += m[i] * pv[i].dlap * (vals[i].conj() * ut[i]).re;
    }
    // τ-part of the Hessian term with face weights ψ″, plus the plain x_N part
    let (mut tau_psi, mut tau_plain) = (0.0, 0.0);
    for iz in 0..nz {
        let line: Vec<Complex64> = (0..nt).map(|t| vals[t * nz + iz]).collect();
        let du = ax.face_derivative(&line);
        for k in 0..nt {
            let e = ax.face_k[k] * du[k].norm_sqr();
            tau_psi += e * cutoff.face_d2[k];
            tau_plain += e;
        }
    }
    let z_part = pots.grad_sq - tau_plain * hz;
    let t2 = 4.0 * tau_psi * hz + 8.0 * z_part;
    let t3 = -2.0 * a / (a + 2.0) * pots.weighted(|i| pv[i].lap + 2.0);
    let t4 = -4.0 * b / (a + 2.0)
        * pots.weighted(|i| {
            let c = grid.coords(i);
            let (tau, z) = (c[0], c[1]);
            (pv[i].dpsi_over_rho * tau * tau + 2.0 * z * z) / (tau * tau + z * z)
        });
    let v_d2 = 2.0 * t1 + t2 + t3 + t4;
    Ok(CylindricalVirial {
        v,
        v_d1: 2.0 * d1,
        v_d2,
        defect: v_d2 - 8.0 * pots.g(params),
    })
}
