//! The positive radial solution `Q` of `−ΔQ + Q = |x|^{−b}Q^{α+1}` and the
//! threshold constants derived from it.
//!
//! The iteration is of Petviashvili type on the conservative radial
//! discretization: with `A = μ̃ + S` (corrected measure plus stiffness) and
//! `N(Q) = ν Q^{α+1}`,
//! `Q ← M^{(α+1)/α} A^{−1} N(Q)`, `M = ⟨Q, AQ⟩ / ⟨Q, N(Q)⟩`.
//! At a fixed point `M = 1`, and `Q` solves the discrete equation exactly.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{potential_measure, Field, Grid, GridKind, GridSpec, RadialMap};
use crate::linalg::{BandLdl, SymBand};
use crate::model::ModelParams;

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundStateOptions {
    pub max_iter: usize,
    /// Bound on `‖Q_{n+1} − Q_n‖_∞ / ‖Q_n‖_∞`.
    pub tol: f64,
    /// Bound on the elliptic residual relative to `sup Q`; raised to the grid's
    /// rounding floor when that is larger.
    pub residual_tol: f64,
    /// Under-relaxation factor in `(0, 1]`.
    pub relax: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions {
            max_iter: 5000,
            tol: 1e-10,
            residual_tol: 1e-8,
            relax: 1.0,
        }
    }
}

impl GroundStateOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || !(self.tol > 0.0) || !(self.residual_tol > 0.0) || !(self.relax > 0.0 && self.relax <= 1.0) {
            return Err(Error::InvalidControls(format!("ground-state options out of range: {self:?}")));
        }
        Ok(())
    }
}

/// Radial grid used by default: 4096 points on `[0, 30]`, graded toward the origin.
pub fn default_grid(params: &ModelParams) -> GridSpec {
    // radial collapse only occurs for N ≥ 2
    let map = if params.n() == 1 { RadialMap::STEEP } else { RadialMap::COLLAPSE };
    GridSpec::radial(params.n(), 4096, 30.0)
        .with_map(map)
        .with_cusp(params.b())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `E(Q) M(Q)^{σc}`.
    pub e_m_sigma: f64,
    /// `‖∇Q‖ ‖Q‖^{σc}`.
    pub grad_m_sigma: f64,
    /// `P(Q) M(Q)^{σc}`.
    pub p_m_sigma: f64,
}

/// Every scalar of a converged ground state; enough for classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub params: ModelParams,
    pub mass_q: f64,
    pub grad_sq_q: f64,
    pub potential_q: f64,
    pub energy_q: f64,
    /// Weinstein quotient of `Q`.
    pub c_opt: f64,
    /// `2(α+2)/(Nα+2b) · (‖∇Q‖‖Q‖^{σc})^{−(Nα−4+2b)/2}`.
    pub c_opt_closed: f64,
    pub thresholds: Thresholds,
    /// `sup|−ΔQ + Q − |x|^{−b}Q^{α+1}|` in the discrete operator.
    pub residual: f64,
    pub sup_q: f64,
    pub iterations: usize,
    /// Stabilizing factor `M` at the last iterate before normalization.
    pub stabilizing_factor: f64,
}

impl GroundStateSummary {
    /// Builds the summary from the three integrals; `residual`, `sup_q` and
    /// iteration data are left as given.
    pub fn from_integrals(params: ModelParams, mass_q: f64, grad_sq_q: f64, potential_q: f64) -> Self {
        let sc = params.sigma_c();
        let a = params.alpha();
        let energy_q = grad_sq_q / 2.0 - potential_q / (a + 2.0);
        let grad_m_sigma = grad_sq_q.sqrt() * mass_q.powf(sc / 2.0);
        let c_opt = potential_q / (grad_sq_q.powf(params.s_plus() / 4.0) * mass_q.powf(params.s_mass() / 4.0));
        let c_opt_closed = 2.0 * (a + 2.0) / params.s_plus() * grad_m_sigma.powf(-params.s_minus() / 2.0);
        GroundStateSummary {
            params,
            mass_q,
            grad_sq_q,
            potential_q,
            energy_q,
            c_opt,
            c_opt_closed,
            thresholds: Thresholds {
                e_m_sigma: energy_q * mass_q.powf(sc),
                grad_m_sigma,
                p_m_sigma: potential_q * mass_q.powf(sc),
            },
            residual: 0.0,
            sup_q: 0.0,
            iterations: 0,
            stabilizing_factor: 1.0,
        }
    }
}

/// Converged ground state: the profile on its radial grid plus its scalars.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub q: Field,
    pub summary: GroundStateSummary,
}

impl GroundState {
    pub fn params(&self) -> &ModelParams {
        &self.summary.params
    }

    /// `Q(r)` by local interpolation; zero beyond the grid.
    pub fn profile_at(&self, r: f64) -> f64 {
        let ax = self.q.grid().radial_axis().expect("radial grid");
        crate::grid::interp::sample_radial(ax, self.q.values(), r).re
    }
}

/// Pieces of the discrete elliptic problem on one grid.
struct Discretization {
    n: usize,
    mu: Vec<f64>,
    nu: Vec<f64>,
    stiff: SymBand<f64>,
    solver: BandLdl<f64>,
    scale: Vec<f64>,
    alpha: f64,
}

impl Discretization {
    fn new(grid: &Grid, params: &ModelParams) -> Result<Self> {
        let ax = grid.radial_axis().unwrap();
        let n = ax.n;
        let mu = ax.mu_c.clone();
        let nu = potential_measure(grid, params.b())?;
        let stiff = ax.stiffness_band();
        // (μ̃ + S) scaled symmetrically by μ̃^{−1/2}
        let scale: Vec<f64> = mu.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut a = stiff.clone();
        for i in 0..n {
            a.band[i][0] += mu[i];
            for k in 0..=a.p.min(i) {
                a.band[i][k] *= scale[i] * scale[i - k];
            }
        }
        Ok(Discretization {
            n,
            mu,
            nu,
            solver: BandLdl::factor(&a),
            stiff,
            scale,
            alpha: params.alpha(),
        })
    }

    fn apply_a(&self, q: &[f64]) -> Vec<f64> {
        let mut y = self.stiff.matvec(q);
        for i in 0..self.n {
            y[i] += self.mu[i] * q[i];
        }
        y
    }

    fn nonlinear(&self, q: &[f64]) -> Vec<f64> {
        q.iter().zip(&self.nu).map(|(v, n)| n * v.abs().powf(self.alpha) * v).collect()
    }

    fn solve_a(&self, rhs: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = rhs.iter().zip(&self.scale).map(|(r, s)| r * s).collect();
        self.solver.solve_in_place(&mut y);
        y.iter().zip(&self.scale).map(|(v, s)| v * s).collect()
    }

    fn stabilizing_factor(&self, q: &[f64]) -> f64 {
        let aq = self.apply_a(q);
        let nq = self.nonlinear(q);
        dot(q, &aq) / dot(q, &nq)
    }

    /// Residual level reachable in floating point: rounding in `Q` is amplified
    /// by `max_i S_ii/μ̃_i`.
    fn rounding_floor(&self) -> f64 {
        let amp = (0..self.n).map(|i| self.stiff.band[i][0] / self.mu[i]).fold(0.0, f64::max);
        16.0 * f64::EPSILON * amp
    }

    /// `sup|(SQ)/μ̃ + Q − (ν/μ̃)Q^{α+1}|`.
    fn residual(&self, q: &[f64]) -> f64 {
        let sq = self.stiff.matvec(q);
        let nq = self.nonlinear(q);
        (0..self.n)
            .map(|i| ((sq[i] - nq[i]) / self.mu[i] + q[i]).abs())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn check_grid(grid: &Grid, params: &ModelParams) -> Result<()> {
    if grid.kind() != GridKind::Radial {
        return Err(Error::InvalidGrid("ground states are computed on Radial grids".into()));
    }
    if grid.dim() != params.n() {
        return Err(Error::GridMismatch(format!(
            "grid is {}-dimensional, params have N = {}",
            grid.dim(),
            params.n()
        )));
    }
    Ok(())
}

/// Solves for `Q` from a Gaussian start, widening the start when an iterate loses positivity.
pub fn solve_ground_state(params: &ModelParams, grid: &Arc<Grid>, opts: &GroundStateOptions) -> Result<GroundState> {
    check_grid(grid, params)?;
    opts.validate()?;
    let disc = Discretization::new(grid, params)?;
    let mut width = 1.0;
    let mut last = Error::NonPositive;
    for _ in 0..4 {
        let q0: Vec<f64> = grid.radius().iter().map(|r| (-(r / width).powi(2)).exp()).collect();
        match iterate(&disc, q0, opts) {
            Ok(done) => return finish(params, grid, &disc, done),
            Err(Error::NonPositive) => {
                log::warn!("ground-state iterate lost positivity from width {width}; restarting wider");
                width *= 2.0;
                last = Error::NonPositive;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Solves for `Q` starting from the real part of `initial`.
pub fn solve_ground_state_from(
    params: &ModelParams,
    initial: &Field,
    opts: &GroundStateOptions,
) -> Result<GroundState> {
    let grid = initial.grid();
    check_grid(grid, params)?;
    opts.validate()?;
    let disc = Discretization::new(grid, params)?;
    let q0: Vec<f64> = initial.values().iter().map(|v| v.re).collect();
    if sup(&q0) == 0.0 {
        return Err(Error::ZeroField);
    }
    let done = iterate(&disc, q0, opts)?;
    finish(params, grid, &disc, done)
}

struct Converged {
    q: Vec<f64>,
    iterations: usize,
    factor: f64,
}

fn iterate(disc: &Discretization, mut q: Vec<f64>, opts: &GroundStateOptions) -> Result<Converged> {
    let a = disc.alpha;
    let gamma = (a + 1.0) / a;
    let mut delta = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let residual_tol = opts.residual_tol.max(disc.rounding_floor());
    for it in 1..=opts.max_iter {
        let factor = disc.stabilizing_factor(&q);
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::NonPositive);
        }
        let nq = disc.nonlinear(&q);
        let mut next = disc.solve_a(&nq);
        let mg = factor.powf(gamma);
        for (v, old) in next.iter_mut().zip(&q) {
            *v = opts.relax * mg * *v + (1.0 - opts.relax) * old;
        }
        let s = sup(&next);
        if next.iter().any(|&v| v < -1e-10 * s) {
            return Err(Error::NonPositive);
        }
        delta = q.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / sup(&q);
        q = next;
        if delta < opts.tol {
            let normalized = normalize(disc, &q);
            residual = disc.residual(&normalized) / sup(&normalized);
            if residual <= residual_tol {
                return Ok(Converged {
                    q: normalized,
                    iterations: it,
                    factor,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        max_iter: opts.max_iter,
        delta,
        residual,
    })
}

/// Rescales `q` so its stabilizing factor is exactly 1.
fn normalize(disc: &Discretization, q: &[f64]) -> Vec<f64> {
    let m = disc.stabilizing_factor(q);
    let c = m.powf(1.0 / disc.alpha);
    q.iter().map(|v| v * c).collect()
}

fn finish(params: &ModelParams, grid: &Arc<Grid>, disc: &Discretization, done: Converged) -> Result<GroundState> {
    let q = done.q;
    let mass = dot(&q, &disc.mu.iter().zip(&q).map(|(m, v)| m * v).collect::<Vec<_>>());
    let grad_sq = dot(&q, &disc.stiff.matvec(&q));
    let a = params.alpha();
    let potential: f64 = q.iter().zip(&disc.nu).map(|(v, n)| n * v.abs().powf(a + 2.0)).sum();
    let mut summary = GroundStateSummary::from_integrals(*params, mass, grad_sq, potential);
    summary.residual = disc.residual(&q);
    summary.sup_q = sup(&q);
    summary.iterations = done.iterations;
    summary.stabilizing_factor = done.factor;
    let field = Field::new(grid.clone(), q.into_iter().map(|v| Complex64::new(v, 0.0)).collect())?;
    Ok(GroundState { q: field, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevResiduals {
    pub r1: f64,
    pub r2: f64,
}

/// Relative defects of `M = (4−2b−(N−2)α)/(Nα+2b)·‖∇Q‖² = (4−2b−(N−2)α)/(2(α+2))·P`.
pub fn pohozaev_residuals(gs: &GroundStateSummary) -> PohozaevResiduals {
    let p = &gs.params;
    let sm = p.s_mass();
    PohozaevResiduals {
        r1: (gs.mass_q * p.s_plus() / (sm * gs.grad_sq_q) - 1.0).abs(),
        r2: (gs.mass_q * 2.0 * (p.alpha() + 2.0) / (sm * gs.potential_q) - 1.0).abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRelations {
    /// `E(Q) / ((Nα−4+2b)/(2(Nα+2b)) ‖∇Q‖²)`.
    pub r_grad: f64,
    /// `E(Q) / ((Nα−4+2b)/(4(α+2)) P(Q))`.
    pub r_pot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConstants {
    pub c_opt: f64,
    pub c_opt_closed: f64,
    pub e_m_sigma: f64,
    pub grad_m_sigma: f64,
    pub p_m_sigma: f64,
    pub energy_relations: EnergyRelations,
}

pub fn sharp_constants(gs: &GroundStateSummary) -> SharpConstants {
    let p = &gs.params;
    SharpConstants {
        c_opt: gs.c_opt,
        c_opt_closed: gs.c_opt_closed,
        e_m_sigma: gs.thresholds.e_m_sigma,
        grad_m_sigma: gs.thresholds.grad_m_sigma,
        p_m_sigma: gs.thresholds.p_m_sigma,
        energy_relations: EnergyRelations {
            r_grad: gs.energy_q / (p.s_minus() / (2.0 * p.s_plus()) * gs.grad_sq_q),
            r_pot: gs.energy_q / (p.s_minus() / (4.0 * (p.alpha() + 2.0)) * gs.potential_q),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coercivity {
    pub rho: f64,
    pub nu: f64,
}

/// `ρ = 1 − A/(P(Q)M(Q)^{σc})`, `ν = 1 − (1−ρ)^{(Nα−4+2b)/(Nα+2b)}`.
pub fn coercivity_margin(gs: &GroundStateSummary, a: f64) -> Result<Coercivity> {
    let pm = gs.thresholds.p_m_sigma;
    if !(a >= 0.0) || a >= pm {
        return Err(Error::AboveThreshold { a, threshold: pm });
    }
    let rho = 1.0 - a / pm;
    let p = &gs.params;
    let nu = 1.0 - (1.0 - rho).powf(p.s_minus() / p.s_plus());
    Ok(Coercivity { rho, nu })
}
