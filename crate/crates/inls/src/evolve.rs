//! Time integration with diagnostics and stopping rules.
//!
//! Cartesian and cylindrical grids use Strang splitting,
//! `L(dt/2) ∘ N(dt) ∘ L(dt/2)`, where `L` is the free flow `e^{iτΔ}` and `N`
//! the pointwise phase rotation `u ↦ u e^{i dt w|u|^α}`. `L` is exact on
//! periodic axes and Crank–Nicolson on the staggered axis.
//!
//! Radial grids resolve `|x|^{−b}` down to `r ≈ 10⁻⁴`, where the splitting
//! commutator is `O(1)` pointwise. There the step is the symmetric implicit
//! midpoint scheme
//! `iμ̃(u⁺ − u)/dt = S ū − ν F(|u|², |u⁺|²) ū`, `ū = (u + u⁺)/2`,
//! with `F` the divided difference of `2/(α+2) s^{(α+2)/2}`. It conserves the
//! discrete mass and energy exactly, is time-reversible, and maps the discrete
//! ground state to `e^{iθ}Q`. `F` is resolved by fixed-point iteration with
//! Anderson mixing.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{DiagnosticRecord, DiagnosticsContext};
use crate::grid::fft::transform;
use crate::grid::{dirichlet_form, effective_weight, shell_fraction, Field, Grid, GridKind};
use crate::linalg::{BandLdl, SymBand};
use crate::model::ModelParams;

/// Number of consecutive samples below `scatter_p_floor` that count as dispersal.
pub const DISPERSAL_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveControls {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between diagnostic samples.
    pub sample_every: usize,
    pub dt_min: f64,
    pub blowup_grad_factor: f64,
    pub scatter_p_floor: f64,
    /// Largest admissible share of the mass in the outer 10% shell.
    pub boundary_mass_cap: f64,
    /// Largest admissible single-step energy change, relative to
    /// `max(|E|, ‖∇u‖²/2)`, before `dt` is halved.
    pub drift_tol: f64,
    /// Drop the nonlinear substep (free flow).
    pub linear_only: bool,
}

impl Default for EvolveControls {
    fn default() -> Self {
        EvolveControls {
            dt: 1e-3,
            t_end: 1.0,
            sample_every: 10,
            dt_min: 1e-7,
            blowup_grad_factor: 25.0,
            scatter_p_floor: 0.02,
            boundary_mass_cap: 1e-8,
            drift_tol: 1e-9,
            linear_only: false,
        }
    }
}

impl EvolveControls {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_min > 0.0
            && self.dt > self.dt_min
            && self.dt.is_finite()
            && self.t_end > 0.0
            && self.t_end.is_finite()
            && self.sample_every > 0
            && self.blowup_grad_factor > 1.0
            && self.scatter_p_floor > 0.0
            && self.scatter_p_floor < 1.0
            && self.boundary_mass_cap > 0.0
            && self.drift_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidControls(format!("evolve controls out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fate")]
pub enum Fate {
    RanToEnd,
    BlowupDetected { t: f64 },
    Dispersed { t: f64 },
    BoundaryContaminated { t: f64 },
    StepFloorHit { t: f64 },
}

impl Fate {
    pub fn label(&self) -> &'static str {
        match self {
            Fate::RanToEnd => "RanToEnd",
            Fate::BlowupDetected { .. } => "BlowupDetected",
            Fate::Dispersed { .. } => "Dispersed",
            Fate::BoundaryContaminated { .. } => "BoundaryContaminated",
            Fate::StepFloorHit { .. } => "StepFloorHit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Strictly increasing in `t`; the first record is `t = 0`, the last the stopping time.
    pub records: Vec<DiagnosticRecord>,
    pub fate: Fate,
    pub final_field: Field,
    pub steps: usize,
    /// Step size in force when the run stopped.
    pub dt_last: f64,
}

/// Free-flow half step of a fixed size, prepared once.
enum FreeFlow {
    /// `e^{−i|k|²τ}` at every Fourier index.
    Spectral(Vec<Complex64>),
    /// `(μ̃ + iθS) u⁺ = (μ̃ − iθS) u` per staggered line, then `e^{−ik_z²τ}` on cylindrical grids.
    Crank {
        theta: f64,
        ldl: BandLdl<Complex64>,
        scale: Vec<f64>,
        z_mult: Option<Vec<Complex64>>,
    },
}

/// Fixed-point iterations allowed per implicit step.
pub const IMPLICIT_MAX_ITER: usize = 60;
/// Relative sup-norm change that ends the fixed-point iteration.
pub const IMPLICIT_TOL: f64 = 1e-13;
/// Change accepted once successive iterates stop contracting.
pub const IMPLICIT_STALL_TOL: f64 = 1e-11;
/// History length of the Anderson mixing in the implicit solve.
const ANDERSON_DEPTH: usize = 5;

/// Anderson mixing for the fixed point `x = G(x)` in the `μ̃`-weighted inner product.
struct Anderson<'a> {
    depth: usize,
    weight: &'a [f64],
    last: Option<(Vec<Complex64>, Vec<Complex64>)>,
    dx: Vec<Vec<Complex64>>,
    df: Vec<Vec<Complex64>>,
}

impl<'a> Anderson<'a> {
    fn new(depth: usize, weight: &'a [f64]) -> Self {
        Self { depth, weight, last: None, dx: Vec::new(), df: Vec::new() }
    }

    fn dot(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).zip(self.weight).map(|((a, b), w)| w * (a.conj() * b).re).sum()
    }

    /// Replaces `x` by the mixed iterate given `g = G(x)`.
    fn update(&mut self, x: &mut [Complex64], g: &[Complex64]) {
        let f: Vec<Complex64> = g.iter().zip(x.iter()).map(|(g, x)| g - x).collect();
        if let Some((x_old, f_old)) = self.last.take() {
            if self.dx.len() == self.depth {
                self.dx.remove(0);
                self.df.remove(0);
            }
            self.dx.push(x.iter().zip(&x_old).map(|(a, b)| a - b).collect());
            self.df.push(f.iter().zip(&f_old).map(|(a, b)| a - b).collect());
        }
        self.last = Some((x.to_vec(), f.clone()));
        let m = self.df.len();
        let gamma = if m == 0 {
            Vec::new()
        } else {
            let mut gram: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| self.dot(&self.df[i], &self.df[j])).collect()).collect();
            let rhs: Vec<f64> = (0..m).map(|i| self.dot(&self.df[i], &f)).collect();
            let ridge = 1e-12 * (0..m).map(|i| gram[i][i]).fold(0.0, f64::max);
            for (i, row) in gram.iter_mut().enumerate() {
                row[i] += ridge;
            }
            solve_small(gram, rhs).unwrap_or_else(|| vec![0.0; m])
        };
        for i in 0..x.len() {
            let mut v = x[i] + f[i];
            for (k, c) in gamma.iter().enumerate() {
                v -= (self.dx[k][i] + self.df[k][i]) * c;
            }
            x[i] = v;
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c] == 0.0 || !a[p][c].is_finite() {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..m {
            let l = a[r][c] / a[c][c];
            for k in c..m {
                a[r][k] -= l * a[c][k];
            }
            b[r] -= l * b[c];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Reusable stepper for one grid, weight and nonlinearity.
pub struct Propagator {
    grid: Arc<Grid>,
    alpha: f64,
    weight: Option<Vec<f64>>,
    stiff: Option<SymBand<f64>>,
    cached: Option<(f64, FreeFlow)>,
}

/// Divided difference `(g(s₁) − g(s₀))/(s₁ − s₀)` of `g(s) = 2/(α+2) s^{(α+2)/2}`,
/// by Taylor expansion about the midpoint when `s₀ ≈ s₁`.
fn divided_power(s0: f64, s1: f64, alpha: f64) -> f64 {
    let m = 0.5 * (s0 + s1);
    if m <= 0.0 {
        return 0.0;
    }
    let d = s1 - s0;
    let h = 0.5 * alpha;
    if d.abs() <= 1e-4 * m {
        // relative form: m^{h−2} alone overflows for subnormal m
        let q = d / m;
        return m.powf(h) * (1.0 + h * (h - 1.0) * q * q / 24.0);
    }
    let p = h + 1.0;
    (s1.powf(p) - s0.powf(p)) / (p * d)
}

impl Propagator {
    /// `weight = None` gives the free flow.
    pub fn new(grid: &Arc<Grid>, alpha: f64, weight: Option<Vec<f64>>) -> Result<Self> {
        if let Some(w) = &weight {
            if w.len() != grid.len() {
                return Err(Error::GridMismatch(format!("weight has {} samples, grid {}", w.len(), grid.len())));
            }
        }
        Ok(Propagator {
            grid: grid.clone(),
            alpha,
            weight,
            stiff: grid.radial_axis().map(|ax| ax.stiffness_band()),
            cached: None,
        })
    }

    /// Propagator for the model on `grid`, weight `ν/μ̃` so the flow conserves the discrete energy.
    pub fn for_model(grid: &Arc<Grid>, params: &ModelParams) -> Result<Self> {
        Self::new(grid, params.alpha(), Some(effective_weight(grid, params.b())?))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn prepare(&mut self, tau: f64) {
        if matches!(&self.cached, Some((t, _)) if *t == tau) {
            return;
        }
        let grid = &self.grid;
        let flow = match grid.kind() {
            GridKind::Cartesian => {
                let dims = grid.dims().to_vec();
                let ks: Vec<Vec<f64>> = (0..grid.dim()).map(|a| grid.wavenumbers(a)).collect();
                let mult = (0..grid.len())
                    .map(|i| {
                        let mut rest = i;
                        let mut k2 = 0.0;
                        for a in (0..dims.len()).rev() {
                            k2 += ks[a][rest % dims[a]].powi(2);
                            rest /= dims[a];
                        }
                        Complex64::from_polar(1.0, -k2 * tau)
                    })
                    .collect();
                FreeFlow::Spectral(mult)
            }
            GridKind::Radial | GridKind::Cylindrical => {
                let ax = grid.radial_axis().unwrap();
                let theta = tau / 2.0;
                let stiff = self.stiff.as_ref().unwrap();
                let scale: Vec<f64> = ax.mu_c.iter().map(|m| 1.0 / m.sqrt()).collect();
                let mut a = SymBand::<Complex64>::zeros(ax.n, stiff.p);
                for i in 0..ax.n {
                    for k in 0..=stiff.p.min(i) {
                        let mut v = Complex64::new(0.0, theta * stiff.band[i][k]);
                        if k == 0 {
                            v += ax.mu_c[i];
                        }
                        a.band[i][k] = v * (scale[i] * scale[i - k]);
                    }
                }
                let z_mult = (grid.kind() == GridKind::Cylindrical)
                    .then(|| grid.wavenumbers(1).iter().map(|k| Complex64::from_polar(1.0, -k * k * tau)).collect());
                FreeFlow::Crank {
                    theta,
                    ldl: BandLdl::factor(&a),
                    scale,
                    z_mult,
                }
            }
        };
        self.cached = Some((tau, flow));
    }

    /// `u ← e^{iτΔ_h} u` (Crank–Nicolson on staggered axes).
    pub fn free_flow(&mut self, u: &mut [Complex64], tau: f64) {
        self.prepare(tau);
        let grid = self.grid.clone();
        let flow = &self.cached.as_ref().unwrap().1;
        match flow {
            FreeFlow::Spectral(mult) => {
                let axes: Vec<usize> = (0..grid.dim()).collect();
                transform(u, grid.dims(), &axes, grid.plans(), false);
                u.par_iter_mut().zip(mult.par_iter()).for_each(|(v, m)| *v *= m);
                transform(u, grid.dims(), &axes, grid.plans(), true);
            }
            FreeFlow::Crank {
                theta,
                ldl,
                scale,
                z_mult,
            } => {
                let ax = grid.radial_axis().unwrap();
                let crank = |line: &mut [Complex64]| {
                    let su = ax.apply_stiffness(line);
                    for i in 0..line.len() {
                        let rhs = line[i] * ax.mu_c[i] - Complex64::new(0.0, *theta) * su[i];
                        line[i] = rhs * scale[i];
                    }
                    ldl.solve_in_place(line);
                    for (v, s) in line.iter_mut().zip(scale) {
                        *v *= s;
                    }
                };
                match z_mult {
                    None => crank(u),
                    Some(zm) => {
                        let (nt, nz) = (grid.dims()[0], grid.dims()[1]);
                        let lines: Vec<Vec<Complex64>> = (0..nz)
                            .into_par_iter()
                            .map(|z| {
                                let mut line: Vec<Complex64> = (0..nt).map(|t| u[t * nz + z]).collect();
                                crank(&mut line);
                                line
                            })
                            .collect();
                        for (z, line) in lines.iter().enumerate() {
                            for (t, v) in line.iter().enumerate() {
                                u[t * nz + z] = *v;
                            }
                        }
                        transform(u, grid.dims(), &[1], grid.plans(), false);
                        u.par_chunks_mut(nz).for_each(|row| {
                            for (v, m) in row.iter_mut().zip(zm) {
                                *v *= m;
                            }
                        });
                        transform(u, grid.dims(), &[1], grid.plans(), true);
                    }
                }
            }
        }
    }

    /// `u ← u e^{i dt w |u|^α}`; exact since `|u|` is invariant.
    pub fn nonlinear(&self, u: &mut [Complex64], dt: f64) {
        if let Some(w) = &self.weight {
            let a = self.alpha;
            u.par_iter_mut().zip(w.par_iter()).for_each(|(v, w)| {
                *v *= Complex64::from_polar(1.0, dt * w * v.norm().powf(a));
            });
        }
    }

    /// One step; `dt < 0` runs backwards and inverts a forward step.
    ///
    /// Returns false (leaving `u` untouched) when the implicit radial step fails to converge.
    pub fn step_in_place(&mut self, u: &mut [Complex64], dt: f64) -> bool {
        if self.grid.kind() == GridKind::Radial && self.weight.is_some() {
            return self.implicit_step(u, dt);
        }
        self.free_flow(u, dt / 2.0);
        self.nonlinear(u, dt);
        self.free_flow(u, dt / 2.0);
        true
    }

    fn implicit_step(&mut self, u: &mut [Complex64], dt: f64) -> bool {
        let ax = self.grid.radial_axis().unwrap();
        let stiff = self.stiff.as_ref().unwrap();
        let w = self.weight.as_ref().unwrap();
        let n = ax.n;
        let mu = &ax.mu_c;
        let nu: Vec<f64> = w.iter().zip(mu).map(|(w, m)| w * m).collect();
        let scale: Vec<f64> = mu.iter().map(|m| 1.0 / m.sqrt()).collect();
        let half = Complex64::new(0.0, dt / 2.0);
        let s0: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
        let su = ax.apply_stiffness(u);
        let mut next = u.to_vec();
        let mut acc = Anderson::new(ANDERSON_DEPTH, mu);
        let mut prev = f64::INFINITY;
        for _ in 0..IMPLICIT_MAX_ITER {
            let f: Vec<f64> = (0..n).map(|i| divided_power(s0[i], next[i].norm_sqr(), self.alpha)).collect();
            let mut a = SymBand::<Complex64>::zeros(n, stiff.p);
            for i in 0..n {
                for k in 0..=stiff.p.min(i) {
                    let mut h = stiff.band[i][k];
                    if k == 0 {
                        h -= nu[i] * f[i];
                    }
                    let mut v = half * h;
                    if k == 0 {
                        v += mu[i];
                    }
                    a.band[i][k] = v * (scale[i] * scale[i - k]);
                }
            }
            let mut x: Vec<Complex64> = (0..n)
                .map(|i| (u[i] * mu[i] - half * (su[i] - u[i] * (nu[i] * f[i]))) * scale[i])
                .collect();
            BandLdl::factor(&a).solve_in_place(&mut x);
            let mut change: f64 = 0.0;
            let mut size: f64 = 0.0;
            for i in 0..n {
                x[i] *= scale[i];
                change = change.max((x[i] - next[i]).norm());
                size = size.max(x[i].norm());
            }
            if !x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                return false;
            }
            // accept at the tolerance, or once rounding stalls the contraction
            if change <= IMPLICIT_TOL * size || (change <= IMPLICIT_STALL_TOL * size && change > 0.5 * prev) {
                u.copy_from_slice(&x);
                return true;
            }
            prev = change;
            acc.update(&mut next, &x);
        }
        false
    }
}

/// One step with the pointwise weight `w` (e.g. [`singular_weight`](crate::grid::singular_weight)).
pub fn step(u: &Field, dt: f64, params: &ModelParams, w: &Field) -> Result<Field> {
    if **u.grid() != **w.grid() {
        return Err(Error::GridMismatch("field and weight grids differ".into()));
    }
    let weight = w.values().iter().map(|z| z.re).collect();
    let mut p = Propagator::new(u.grid(), params.alpha(), Some(weight))?;
    let mut v = u.values().to_vec();
    if !p.step_in_place(&mut v, dt) {
        return Err(Error::NoConvergence {
            max_iter: IMPLICIT_MAX_ITER,
            delta: f64::NAN,
            residual: f64::NAN,
        });
    }
    Ok(u.with_values(v))
}

/// Share of the mass in the outer 10% shell.
pub fn boundary_mass(u: &Field) -> f64 {
    shell_fraction(u, |_| 1.0)
}

/// Integrates `u0` to `t_end` (or the first stopping rule) with the model nonlinearity.
pub fn run(u0: &Field, params: &ModelParams, controls: &EvolveControls) -> Result<Trajectory> {
    controls.validate()?;
    let grid = u0.grid().clone();
    if grid.dim() != params.n() {
        return Err(Error::GridMismatch(format!("grid is {}-dimensional, params have N = {}", grid.dim(), params.n())));
    }
    let tail = boundary_mass(u0);
    if tail > controls.boundary_mass_cap {
        return Err(Error::TailMassExceeded { fraction: tail });
    }
    let ctx = DiagnosticsContext::new(&grid, params)?;
    let mut prop = if controls.linear_only {
        Propagator::new(&grid, params.alpha(), None)?
    } else {
        Propagator::for_model(&grid, params)?
    };
    let conserved = |u: &Field, g: f64| -> f64 {
        if controls.linear_only {
            g / 2.0
        } else {
            g / 2.0 - ctx.potential(u) / (params.alpha() + 2.0)
        }
    };

    let mut u = u0.clone();
    let mut g = dirichlet_form(&u);
    let mut e = conserved(&u, g);
    let first = ctx.evaluate_with_grad(&u, 0.0, Some(g))?;
    let (g0, p0) = (first.grad_sq, first.potential);
    let mut records = vec![first];
    let mut t = 0.0;
    let mut dt = controls.dt;
    let mut steps = 0usize;
    let mut low_p = 0usize;
    let mut fate = Fate::RanToEnd;
    let t_tol = 1e-12 * controls.t_end;

    while controls.t_end - t > t_tol {
        let h = dt.min(controls.t_end - t);
        let mut next = u.values().to_vec();
        let converged = prop.step_in_place(&mut next, h);
        let cand = u.with_values(next);
        let g_new = dirichlet_form(&cand);
        let e_new = conserved(&cand, g_new);
        let scale = e.abs().max(g / 2.0).max(f64::MIN_POSITIVE);
        if !converged || (e_new - e).abs() > controls.drift_tol * scale {
            if dt / 2.0 < controls.dt_min {
                fate = Fate::StepFloorHit { t };
                break;
            }
            dt /= 2.0;
            log::debug!("t = {t:.6}: energy drift {:.3e}, dt -> {dt:.3e}", (e_new - e).abs() / scale);
            continue;
        }
        u = cand;
        g = g_new;
        e = e_new;
        t += h;
        steps += 1;
        if g >= controls.blowup_grad_factor * g0 {
            fate = Fate::BlowupDetected { t };
            break;
        }
        if steps.is_multiple_of(controls.sample_every) {
            let rec = ctx.evaluate_with_grad(&u, t, Some(g))?;
            records.push(rec);
            if boundary_mass(&u) > controls.boundary_mass_cap {
                fate = Fate::BoundaryContaminated { t };
                break;
            }
            if p0 > 0.0 && rec.potential / p0 <= controls.scatter_p_floor {
                low_p += 1;
                if low_p >= DISPERSAL_SAMPLES {
                    fate = Fate::Dispersed { t };
                    break;
                }
            } else {
                low_p = 0;
            }
        }
    }
    if records.last().map(|r| r.t < t).unwrap_or(true) {
        records.push(ctx.evaluate_with_grad(&u, t, Some(g))?);
    }
    fill_variance_fd(&mut records);
    Ok(Trajectory {
        records,
        fate,
        final_field: u,
        steps,
        dt_last: dt,
    })
}

/// Centered second difference of the sampled variance on a possibly uneven time grid.
pub fn fill_variance_fd(records: &mut [DiagnosticRecord]) {
    for r in records.iter_mut() {
        r.variance_d2_fd = f64::NAN;
    }
    for i in 1..records.len().saturating_sub(1) {
        let (a, b, c) = (&records[i - 1], &records[i], &records[i + 1]);
        if !(a.variance_reliable && b.variance_reliable && c.variance_reliable) {
            continue;
        }
        let (hm, hp) = (b.t - a.t, c.t - b.t);
        let fd = 2.0 * ((c.variance - b.variance) / hp - (b.variance - a.variance) / hm) / (hm + hp);
        records[i].variance_d2_fd = fd;
    }
}

/// `max |variance_d2_fd − variance_d2| / max(|variance_d2|, floor)` over interior samples,
/// with `floor = 1e−12 · max|variance_d2|`.
pub fn virial_consistency(traj: &Trajectory) -> Result<f64> {
    let recs = &traj.records;
    let reliable = recs.iter().filter(|r| r.variance_reliable).count();
    if reliable < 5 || reliable != recs.len() {
        return Err(Error::InsufficientSamples(reliable));
    }
    let floor = 1e-12 * recs.iter().map(|r| r.variance_d2.abs()).fold(0.0, f64::max);
    let worst = recs[1..recs.len() - 1]
        .iter()
        .map(|r| (r.variance_d2_fd - r.variance_d2).abs() / r.variance_d2.abs().max(floor).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{norm_sq, singular_weight, GridSpec};

    #[test]
    fn divided_power_is_finite_on_subnormals() {
        for alpha in [1.5, 2.0, 3.0] {
            let s = 3.6e-309;
            for s1 in [s, 1.00001 * s, 0.0, 1.0] {
                assert!(divided_power(s, s1, alpha).is_finite(), "alpha {alpha}, s1 {s1:e}");
            }
        }
    }

    #[test]
    fn zero_stays_zero() {
        let p = ModelParams::new(2, 0.5, 3.0).unwrap();
        let g = GridSpec::cartesian(2, &[32, 32], &[8.0, 8.0]).build().unwrap();
        let w = singular_weight(&g, p.b()).unwrap();
        let u = step(&Field::zeros(g), 1e-2, &p, &w).unwrap();
        assert!(u.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn fourier_mode_is_an_exact_eigenflow() {
        let p = ModelParams::validation_mode(1, 0.0, 2.0).unwrap();
        let g = GridSpec::cartesian(1, &[64], &[std::f64::consts::PI]).build().unwrap();
        let k = 3.0;
        let u = Field::from_fn(g.clone(), |x| Complex64::from_polar(1.0, k * x[0]));
        let w = Field::zeros(g);
        let dt = 0.037;
        let out = step(&u, dt, &p, &w).unwrap();
        let phase = Complex64::from_polar(1.0, -k * k * dt);
        for (a, b) in out.values().iter().zip(u.values()) {
            assert!((a - b * phase).norm() < 1e-13);
        }
    }

    #[test]
    fn step_reverses_exactly() {
        let p2 = ModelParams::new(2, 0.5, 3.0).unwrap();
        let p3 = ModelParams::new(3, 0.5, 2.0).unwrap();
        for (spec, p) in [
            (GridSpec::cartesian(2, &[48, 48], &[8.0, 8.0]), p2),
            (GridSpec::radial(2, 256, 12.0).with_cusp(0.5), p2),
            (GridSpec::cylindrical(3, [64, 32], [8.0, 8.0]), p3),
        ] {
            let g = spec.build().unwrap();
            let u0 = Field::from_fn(g.clone(), |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                Complex64::from_polar(1.3 * (-r2 / 2.0).exp(), 0.3 * r2)
            });
            let mut prop = Propagator::for_model(&g, &p).unwrap();
            let mut v = u0.values().to_vec();
            assert!(prop.step_in_place(&mut v, 1e-2));
            assert!(prop.step_in_place(&mut v, -1e-2));
            let err = v.iter().zip(u0.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{:?}: {err:e}", g.kind());
        }
    }

    #[test]
    fn mass_is_conserved_per_step() {
        let p = ModelParams::new(3, 0.5, 2.0).unwrap();
        for spec in [GridSpec::radial(3, 512, 16.0).with_cusp(0.5), GridSpec::cylindrical(3, [64, 32], [8.0, 8.0])] {
            let g = spec.build().unwrap();
            let u0 = Field::from_fn(g.clone(), |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                Complex64::from_polar(1.5 * (-r2 / 2.0).exp(), 0.2 * r2)
            });
            let mut prop = Propagator::for_model(&g, &p).unwrap();
            let mut v = u0.values().to_vec();
            for _ in 0..20 {
                assert!(prop.step_in_place(&mut v, 5e-3));
            }
            let m1 = norm_sq(&u0.with_values(v));
            let m0 = norm_sq(&u0);
            assert!((m1 - m0).abs() < 1e-12 * m0, "{:?}", g.kind());
        }
    }

    #[test]
    fn variance_fd_on_uneven_times() {
        let mut recs: Vec<DiagnosticRecord> = [0.0, 0.1, 0.15, 0.35, 0.4]
            .iter()
            .map(|&t| DiagnosticRecord {
                t,
                mass: 1.0,
                energy: 0.0,
                potential: 0.0,
                virial_g: 0.0,
                grad_sq: 0.0,
                variance: 1.0 + 2.0 * t + 3.0 * t * t,
                variance_d1: 0.0,
                variance_d2: 6.0,
                variance_d2_fd: 0.0,
                variance_reliable: true,
            })
            .collect();
        fill_variance_fd(&mut recs);
        assert!(recs[0].variance_d2_fd.is_nan() && recs[4].variance_d2_fd.is_nan());
        for r in &recs[1..4] {
            assert!((r.variance_d2_fd - 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn controls_are_checked() {
        let bad = EvolveControls {
            dt_min: 1e-2,
            dt: 1e-3,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidControls(_))));
        assert!(EvolveControls::default().validate().is_ok());
    }
}
