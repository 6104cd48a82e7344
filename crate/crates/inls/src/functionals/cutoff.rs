//! Truncated quadratic weights `φ_R` for localized virial identities.
//!
//! The profile `χ` equals `r²` on `[0, 1]` and vanishes beyond `r_out ≈ 2.62`.
//! On `[1, r_out]` it is a C² bridge whose `χ″` is piecewise linear:
//! `2 → −K` over `d`, `−K → 2` over `d`, flat `2` over `p`, `2 → 0` over `e`.
//! `K` and `p` are fixed by `χ(r_out) = χ′(r_out) = 0`; `χ″ ≤ 2` holds
//! everywhere. No C² profile with `χ″ ≤ 2` can vanish already at `r = 2`.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};

const D: f64 = 0.25;
const E: f64 = 0.25;

/// One piece of the bridge: start, length, `χ″` at both ends, `χ` and `χ′` at the start.
#[derive(Debug, Clone, Copy)]
struct Piece {
    start: f64,
    len: f64,
    c0: f64,
    c1: f64,
    v: f64,
    dv: f64,
}

#[derive(Debug)]
struct Bridge {
    pieces: Vec<Piece>,
    end: f64,
}

fn assemble(p: f64) -> (Vec<Piece>, f64, f64) {
    let k = 2.0 + (2.0 + 2.0 * p + E) / D;
    let spec = [(D, 2.0, -k), (D, -k, 2.0), (p, 2.0, 2.0), (E, 2.0, 0.0)];
    let (mut x, mut v, mut dv) = (1.0, 1.0, 2.0);
    let mut pieces = Vec::with_capacity(4);
    for (len, c0, c1) in spec {
        pieces.push(Piece { start: x, len, c0, c1, v, dv });
        v += dv * len + c0 * len * len / 2.0 + (c1 - c0) * len * len / 6.0;
        dv += c0 * len + (c1 - c0) * len / 2.0;
        x += len;
    }
    (pieces, v, x)
}

fn bridge() -> &'static Bridge {
    static B: OnceLock<Bridge> = OnceLock::new();
    B.get_or_init(|| {
        // χ(end) decreases in p on [0, 2]
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if assemble(mid).1 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (pieces, _, end) = assemble(0.5 * (lo + hi));
        Bridge { pieces, end }
    })
}

/// Outer edge of the support of `χ`.
pub fn chi_support() -> f64 {
    bridge().end
}

/// `(χ, χ′, χ″, χ‴)` at `r ≥ 0`; `χ‴` is one-sided at the knots.
pub fn chi(r: f64) -> [f64; 4] {
    if r <= 1.0 {
        return [r * r, 2.0 * r, 2.0, 0.0];
    }
    let b = bridge();
    if r >= b.end {
        return [0.0; 4];
    }
    let pc = b.pieces.iter().rev().find(|p| r >= p.start).unwrap();
    let t = r - pc.start;
    let slope = (pc.c1 - pc.c0) / pc.len;
    [
        pc.v + pc.dv * t + pc.c0 * t * t / 2.0 + slope * t * t * t / 6.0,
        pc.dv + pc.c0 * t + slope * t * t / 2.0,
        pc.c0 + slope * t,
        slope,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffKind {
    RadialQuadratic,
    Cylindrical,
}

/// Profile `ψ(ρ) = R²χ(ρ/R)` in a `dim`-dimensional radial variable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Profile {
    pub r_cut: f64,
    pub dim: usize,
}

/// Radial derivatives of `ψ` needed by the virial terms.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ProfileValues {
    pub psi: f64,
    pub dpsi: f64,
    pub d2psi: f64,
    /// `ψ′/ρ`, equal to 2 inside the quadratic core.
    pub dpsi_over_rho: f64,
    /// `(ψ″ − ψ′/ρ)/ρ²`, zero inside the quadratic core.
    pub hess_excess: f64,
    /// `Δψ = ψ″ + (dim−1)ψ′/ρ`.
    pub lap: f64,
    /// `(Δψ)′`.
    pub dlap: f64,
    /// `(Δψ)′/ρ`, zero inside the core.
    pub dlap_over_rho: f64,
    /// `Δ²ψ` away from the knots.
    pub bilap: f64,
}

impl Profile {
    pub fn at(&self, rho: f64) -> ProfileValues {
        let rc = self.r_cut;
        let m = self.dim as f64 - 1.0;
        if rho <= rc {
            return ProfileValues {
                psi: rho * rho,
                dpsi: 2.0 * rho,
                d2psi: 2.0,
                dpsi_over_rho: 2.0,
                hess_excess: 0.0,
                lap: 2.0 * self.dim as f64,
                dlap: 0.0,
                dlap_over_rho: 0.0,
                bilap: 0.0,
            };
        }
        let [c, c1, c2, c3] = chi(rho / rc);
        let psi = rc * rc * c;
        let dpsi = rc * c1;
        let d2psi = c2;
        let d3psi = c3 / rc;
        let g = dpsi / rho;
        let lap = d2psi + m * g;
        // (ψ′/ρ)′ = (ψ″ − ψ′/ρ)/ρ
        let dg = (d2psi - g) / rho;
        let dlap = d3psi + m * dg;
        // χ⁗ = 0 between knots; (ψ′/ρ)″ = (ψ‴ − 2(ψ′/ρ)′)/ρ
        let d2g = (d3psi - 2.0 * dg) / rho;
        let d2lap = m * d2g;
        ProfileValues {
            psi,
            dpsi,
            d2psi,
            dpsi_over_rho: g,
            hess_excess: dg / rho,
            lap,
            dlap,
            dlap_over_rho: dlap / rho,
            bilap: d2lap + m * dlap / rho,
        }
    }
}

/// `φ_R` and its derivatives sampled on a grid.
///
/// Radial kind: `φ(x) = R²χ(|x|/R)`. Cylindrical kind: `φ(x) = R²χ(|y|/R) + x_N²`
/// with `y` the first `N−1` coordinates. Profile derivatives refer to `|x|`
/// (radial kind) or `|y|` (cylindrical kind).
#[derive(Debug, Clone)]
pub struct Cutoff {
    kind: CutoffKind,
    r_cut: f64,
    grid: Arc<Grid>,
    pub(crate) values: Vec<ProfileValues>,
    /// `ψ″` at the faces of the staggered axis, when there is one.
    pub(crate) face_d2: Vec<f64>,
}

impl Cutoff {
    pub fn radial_quadratic(grid: &Arc<Grid>, r_cut: f64) -> Result<Cutoff> {
        if grid.kind() == GridKind::Cylindrical {
            return Err(Error::GridMismatch("radial cutoffs need a Cartesian or Radial grid".into()));
        }
        Cutoff::build(grid, r_cut, CutoffKind::RadialQuadratic, grid.dim())
    }

    pub fn cylindrical(grid: &Arc<Grid>, r_cut: f64) -> Result<Cutoff> {
        if grid.dim() < 3 || grid.kind() == GridKind::Radial {
            return Err(Error::GridMismatch("cylindrical cutoffs need N >= 3 on a Cartesian or Cylindrical grid".into()));
        }
        Cutoff::build(grid, r_cut, CutoffKind::Cylindrical, grid.dim() - 1)
    }

    fn build(grid: &Arc<Grid>, r_cut: f64, kind: CutoffKind, dim: usize) -> Result<Cutoff> {
        if !(r_cut > 0.0 && r_cut.is_finite()) {
            return Err(Error::InvalidField(format!("cutoff radius {r_cut} must be positive")));
        }
        let profile = Profile { r_cut, dim };
        let rho: Vec<f64> = match (kind, grid.kind()) {
            (CutoffKind::RadialQuadratic, _) => grid.radius().to_vec(),
            (CutoffKind::Cylindrical, GridKind::Cylindrical) => (0..grid.len()).map(|i| grid.coords(i)[0]).collect(),
            (CutoffKind::Cylindrical, _) => {
                let n = grid.dim();
                (0..grid.len())
                    .map(|i| {
                        let c = grid.coords(i);
                        c[..n - 1].iter().map(|x| x * x).sum::<f64>().sqrt()
                    })
                    .collect()
            }
        };
        let values = rho.iter().map(|&r| profile.at(r)).collect();
        let face_d2 = grid
            .radial_axis()
            .map(|ax| ax.face_r.iter().map(|&r| profile.at(r).d2psi).collect())
            .unwrap_or_default();
        Ok(Cutoff {
            kind,
            r_cut,
            grid: grid.clone(),
            values,
            face_d2,
        })
    }

    pub fn kind(&self) -> CutoffKind {
        self.kind
    }
    pub fn radius(&self) -> f64 {
        self.r_cut
    }
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `φ` at every sample.
    pub fn phi(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(self.x_n_sq())
            .map(|(v, z2)| v.psi + z2)
            .collect()
    }

    /// `Δφ` at every sample.
    pub fn laplacian(&self) -> Vec<f64> {
        let extra = if self.kind == CutoffKind::Cylindrical { 2.0 } else { 0.0 };
        self.values.iter().map(|v| v.lap + extra).collect()
    }

    /// `Δ²φ` at every sample (away from the profile knots).
    pub fn bilaplacian(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.bilap).collect()
    }

    /// `ψ′/ρ` at every sample.
    pub fn dphi_over_r(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.dpsi_over_rho).collect()
    }

    /// `ψ″` at every sample.
    pub fn d2phi(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.d2psi).collect()
    }

    /// `∇φ` in the grid's native components.
    pub fn gradient(&self) -> Vec<Vec<f64>> {
        let grid = &self.grid;
        match grid.kind() {
            GridKind::Radial => vec![self.values.iter().map(|v| v.dpsi).collect()],
            GridKind::Cylindrical => vec![
                self.values.iter().map(|v| v.dpsi).collect(),
                (0..grid.len()).map(|i| 2.0 * grid.coords(i)[1]).collect(),
            ],
            GridKind::Cartesian => {
                let n = grid.dim();
                let profiled = if self.kind == CutoffKind::Cylindrical { n - 1 } else { n };
                (0..n)
                    .map(|a| {
                        (0..grid.len())
                            .map(|i| {
                                let x = grid.coords(i)[a];
                                if a < profiled {
                                    self.values[i].dpsi_over_rho * x
                                } else {
                                    2.0 * x
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    fn x_n_sq(&self) -> Vec<f64> {
        let grid = &self.grid;
        match (self.kind, grid.kind()) {
            (CutoffKind::RadialQuadratic, _) => vec![0.0; grid.len()],
            (CutoffKind::Cylindrical, GridKind::Cylindrical) => (0..grid.len()).map(|i| grid.coords(i)[1].powi(2)).collect(),
            (CutoffKind::Cylindrical, _) => {
                let n = grid.dim();
                (0..grid.len()).map(|i| grid.coords(i)[n - 1].powi(2)).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn bridge_is_c2_and_bounded() {
        let end = chi_support();
        assert!(end > 2.0 && end < 3.0);
        let [v, d, _, _] = chi(end - 1e-12);
        assert!(v.abs() < 1e-10 && d.abs() < 1e-10);
        let mut r = 0.0;
        while r < end + 0.1 {
            let [_, _, c2, _] = chi(r);
            assert!(c2 <= 2.0 + 1e-12);
            let eps = 1e-7;
            let a = chi(r + eps);
            let b = chi((r - eps).max(0.0));
            if r > eps {
                let scale = 2.0 * eps;
                assert!(((a[0] - b[0]) / scale - chi(r)[1]).abs() < 1e-5, "chi' at {r}");
                assert!(((a[1] - b[1]) / scale - chi(r)[2]).abs() < 1e-4, "chi'' at {r}");
            }
            r += 0.01;
        }
    }

    #[test]
    fn quadratic_core_is_exact() {
        let g = GridSpec::radial(3, 64, 8.0).build().unwrap();
        let c = Cutoff::radial_quadratic(&g, 2.0).unwrap();
        for (p, r) in c.phi().iter().zip(g.radius()) {
            if *r <= 2.0 {
                assert_eq!(*p, r * r);
            }
            if *r >= 2.0 * chi_support() {
                assert_eq!(*p, 0.0);
            }
        }
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let p = Profile { r_cut: 1.5, dim: 3 };
        for &rho in &[1.6, 1.95, 2.3, 3.1] {
            let h = 1e-5;
            let a = p.at(rho + h);
            let b = p.at(rho - h);
            let v = p.at(rho);
            assert!(((a.psi - b.psi) / (2.0 * h) - v.dpsi).abs() < 1e-6);
            assert!(((a.lap - b.lap) / (2.0 * h) - v.dlap).abs() < 1e-5);
            assert!(((a.dlap - b.dlap) / (2.0 * h) + 2.0 / rho * v.dlap - v.bilap).abs() < 1e-4);
        }
    }

    #[test]
    fn kinds_respect_grid_types() {
        let rad = GridSpec::radial(3, 64, 8.0).build().unwrap();
        let cyl = GridSpec::cylindrical(3, [32, 16], [8.0, 8.0]).build().unwrap();
        assert!(Cutoff::cylindrical(&rad, 2.0).is_err());
        assert!(Cutoff::radial_quadratic(&cyl, 2.0).is_err());
        assert!(Cutoff::cylindrical(&cyl, 2.0).is_ok());
        assert!(Cutoff::radial_quadratic(&rad, -1.0).is_err());
    }
}
