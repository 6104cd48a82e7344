//! Discretized domains and complex fields on them.
//!
//! * `Cartesian`: periodic box `[−L_i + o_i, L_i + o_i)` per axis, spectral calculus.
//! * `Radial`: staggered half-line in `r`, 4th-order finite differences.
//! * `Cylindrical`: staggered `τ = |y|` axis times a periodic `x_N` axis.
//!
//! Data are stored row-major with the last axis fastest; on cylindrical grids
//! the index is `iτ · n_z + i_z`.

pub mod fft;
pub mod interp;
pub mod io;
mod ops;
pub mod quadrature;
pub mod radial;

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use ops::*;
pub use radial::{RadialAxis, RadialMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Cartesian,
    Radial,
    Cylindrical,
}

/// Symmetry class claimed by a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    None,
    Radial,
    #[serde(rename = "CylindricalSigmaN")]
    CylindricalSigmaN,
}

/// Serializable grid description. Optional entries take kind-specific defaults:
/// zero offset, `weight_eps = h/2` on Cartesian grids and `0` otherwise, the
/// uniform radial map, and `cusp = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKind,
    /// Spatial dimension `N` of the embedding space.
    pub n: usize,
    pub dims: Vec<usize>,
    pub extent: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<RadialMap>,
    /// Exponent `c` of the `r^{2−c}` terms expected in fields near the origin
    /// (normally `b`); selects the radial end corrections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cusp: Option<f64>,
}

impl GridSpec {
    pub fn cartesian(n: usize, dims: &[usize], extent: &[f64]) -> Self {
        GridSpec {
            kind: GridKind::Cartesian,
            n,
            dims: dims.to_vec(),
            extent: extent.to_vec(),
            offset: None,
            weight_eps: None,
            map: None,
            cusp: None,
        }
    }

    pub fn radial(n: usize, points: usize, extent: f64) -> Self {
        GridSpec {
            kind: GridKind::Radial,
            n,
            dims: vec![points],
            extent: vec![extent],
            offset: None,
            weight_eps: None,
            map: None,
            cusp: None,
        }
    }

    /// `τ` axis of `dims[0]` points over `[0, extent[0]]`, `x_N` axis periodic on `[−extent[1], extent[1])`.
    pub fn cylindrical(n: usize, dims: [usize; 2], extent: [f64; 2]) -> Self {
        GridSpec {
            kind: GridKind::Cylindrical,
            n,
            dims: dims.to_vec(),
            extent: extent.to_vec(),
            offset: None,
            weight_eps: None,
            map: None,
            cusp: None,
        }
    }

    pub fn with_offset(mut self, offset: &[f64]) -> Self {
        self.offset = Some(offset.to_vec());
        self
    }
    pub fn with_weight_eps(mut self, eps: f64) -> Self {
        self.weight_eps = Some(eps);
        self
    }
    pub fn with_map(mut self, map: RadialMap) -> Self {
        self.map = Some(map);
        self
    }
    pub fn with_cusp(mut self, cusp: f64) -> Self {
        self.cusp = Some(cusp);
        self
    }

    pub fn build(&self) -> Result<Arc<Grid>> {
        Grid::new(self).map(Arc::new)
    }
}

/// An immutable discretized domain with precomputed geometry.
#[derive(Debug)]
pub struct Grid {
    spec: GridSpec,
    kind: GridKind,
    n: usize,
    dims: Vec<usize>,
    extent: Vec<f64>,
    offset: Vec<f64>,
    weight_eps: f64,
    map: RadialMap,
    cusp: f64,
    total: usize,
    axis: Option<RadialAxis>,
    radius: Vec<f64>,
    measure: Vec<f64>,
    plans: OnceLock<fft::FftPlans>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Grid {
    pub fn new(spec: &GridSpec) -> Result<Grid> {
        let n = spec.n;
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension N = {n} outside 1..=3")));
        }
        let naxes = match spec.kind {
            GridKind::Cartesian => n,
            GridKind::Radial => 1,
            GridKind::Cylindrical => 2,
        };
        if spec.kind == GridKind::Cylindrical && n < 2 {
            return Err(Error::InvalidGrid("cylindrical grids need N >= 2".into()));
        }
        if spec.dims.len() != naxes || spec.extent.len() != naxes {
            return Err(Error::InvalidGrid(format!(
                "{:?} grid in N = {n} needs {naxes} dims and extents",
                spec.kind
            )));
        }
        if spec.dims.iter().any(|&d| d < 4) {
            return Err(Error::InvalidGrid("every axis needs at least 4 points".into()));
        }
        if spec.extent.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidGrid("extents must be positive and finite".into()));
        }
        let offset = spec.offset.clone().unwrap_or_else(|| vec![0.0; naxes]);
        if offset.len() != naxes || offset.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("offset needs one finite entry per axis".into()));
        }
        if spec.kind == GridKind::Radial && offset[0] != 0.0 {
            return Err(Error::InvalidGrid("radial grids carry no offset".into()));
        }
        if spec.kind == GridKind::Cylindrical && offset[0] != 0.0 {
            return Err(Error::InvalidGrid("the tau axis carries no offset".into()));
        }
        let map = spec.map.unwrap_or_default();
        map.validate()?;
        let cusp = spec.cusp.unwrap_or(0.0);
        if !(0.0..2.0).contains(&cusp) {
            return Err(Error::InvalidGrid(format!("cusp = {cusp} outside [0, 2)")));
        }
        let spacing: Vec<f64> = spec.dims.iter().zip(&spec.extent).map(|(&d, &e)| 2.0 * e / d as f64).collect();
        let weight_eps = match spec.weight_eps {
            Some(e) => e,
            None => match spec.kind {
                GridKind::Cartesian => 0.5 * spacing.iter().cloned().fold(f64::INFINITY, f64::min),
                _ => 0.0,
            },
        };
        if !(weight_eps >= 0.0 && weight_eps.is_finite()) {
            return Err(Error::InvalidGrid(format!("weight_eps = {weight_eps} must be >= 0")));
        }
        let dims = spec.dims.clone();
        let extent = spec.extent.clone();
        let total: usize = dims.iter().product();
        let axis = match spec.kind {
            GridKind::Cartesian => None,
            GridKind::Radial => Some(RadialAxis::new(dims[0], extent[0], n, map, cusp)?),
            GridKind::Cylindrical => Some(RadialAxis::new(dims[0], extent[0], n - 1, map, 0.0)?),
        };
        let mut grid = Grid {
            spec: GridSpec {
                kind: spec.kind,
                n,
                dims: dims.clone(),
                extent: extent.clone(),
                offset: Some(offset.clone()),
                weight_eps: Some(weight_eps),
                map: Some(map),
                cusp: Some(cusp),
            },
            kind: spec.kind,
            n,
            dims,
            extent,
            offset,
            weight_eps,
            map,
            cusp,
            total,
            axis,
            radius: Vec::new(),
            measure: Vec::new(),
            plans: OnceLock::new(),
        };
        let mut coords = [0.0; 3];
        grid.radius = (0..total)
            .map(|i| {
                grid.coords_into(i, &mut coords);
                match grid.kind {
                    GridKind::Cartesian => coords[..n].iter().map(|x| x * x).sum::<f64>().sqrt(),
                    GridKind::Radial => coords[0],
                    GridKind::Cylindrical => coords[0].hypot(coords[1]),
                }
            })
            .collect();
        grid.measure = match grid.kind {
            GridKind::Cartesian => vec![spacing.iter().product(); total],
            GridKind::Radial => grid.axis.as_ref().unwrap().mu_c.clone(),
            GridKind::Cylindrical => {
                let ax = grid.axis.as_ref().unwrap();
                let hz = spacing[1];
                let nz = grid.dims[1];
                (0..total).map(|i| ax.mu_c[i / nz] * hz).collect()
            }
        };
        Ok(grid)
    }

    /// Fully populated description; rebuilding from it yields an equal grid.
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn kind(&self) -> GridKind {
        self.kind
    }
    /// Spatial dimension `N`.
    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn extent(&self) -> &[f64] {
        &self.extent
    }
    pub fn offset(&self) -> &[f64] {
        &self.offset
    }
    pub fn weight_eps(&self) -> f64 {
        self.weight_eps
    }
    pub fn map(&self) -> RadialMap {
        self.map
    }
    pub fn cusp(&self) -> f64 {
        self.cusp
    }
    pub fn len(&self) -> usize {
        self.total
    }
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
    /// Uniform spacing of a periodic axis (or of `s` on a staggered axis).
    pub fn spacing(&self, axis: usize) -> f64 {
        match (self.kind, axis) {
            (GridKind::Radial, 0) | (GridKind::Cylindrical, 0) => self.axis.as_ref().unwrap().h,
            _ => 2.0 * self.extent[axis] / self.dims[axis] as f64,
        }
    }
    /// Staggered axis of Radial and Cylindrical grids.
    pub fn radial_axis(&self) -> Option<&RadialAxis> {
        self.axis.as_ref()
    }
    /// `|x|` at every sample.
    pub fn radius(&self) -> &[f64] {
        &self.radius
    }
    /// Quadrature weight of every sample.
    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// Native coordinates of sample `idx`: `x` (Cartesian), `r` (Radial), `(τ, x_N)` (Cylindrical).
    pub fn coords_into(&self, idx: usize, out: &mut [f64; 3]) {
        match self.kind {
            GridKind::Cartesian => {
                let mut rem = idx;
                for a in (0..self.n).rev() {
                    let i = rem % self.dims[a];
                    rem /= self.dims[a];
                    out[a] = self.cart_coord(a, i);
                }
            }
            GridKind::Radial => out[0] = self.axis.as_ref().unwrap().r[idx],
            GridKind::Cylindrical => {
                let nz = self.dims[1];
                out[0] = self.axis.as_ref().unwrap().r[idx / nz];
                out[1] = self.cart_coord(1, idx % nz);
            }
        }
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let mut c = [0.0; 3];
        self.coords_into(idx, &mut c);
        c
    }

    fn cart_coord(&self, axis: usize, i: usize) -> f64 {
        -self.extent[axis] + self.offset[axis] + i as f64 * self.spacing(axis)
    }

    /// Coordinates of a periodic axis.
    pub fn axis_points(&self, axis: usize) -> Vec<f64> {
        (0..self.dims[axis]).map(|i| self.cart_coord(axis, i)).collect()
    }

    /// Samples within the outer 10% of the domain along any bounded direction.
    pub fn outer_shell(&self) -> Vec<bool> {
        let mut c = [0.0; 3];
        (0..self.total)
            .map(|i| {
                self.coords_into(i, &mut c);
                match self.kind {
                    GridKind::Cartesian => (0..self.n).any(|a| {
                        let rel = (c[a] - self.offset[a]).abs() / self.extent[a];
                        rel > 0.9
                    }),
                    GridKind::Radial => {
                        let ax = self.axis.as_ref().unwrap();
                        c[0] > 0.9 * ax.face_r[ax.n - 1]
                    }
                    GridKind::Cylindrical => {
                        let ax = self.axis.as_ref().unwrap();
                        c[0] > 0.9 * ax.face_r[ax.n - 1] || (c[1] - self.offset[1]).abs() > 0.9 * self.extent[1]
                    }
                }
            })
            .collect()
    }

    pub(crate) fn plans(&self) -> &fft::FftPlans {
        self.plans.get_or_init(|| match self.kind {
            GridKind::Cartesian => fft::FftPlans::new(&self.dims),
            GridKind::Cylindrical => fft::FftPlans::new(&self.dims[1..]),
            GridKind::Radial => fft::FftPlans::new(&[]),
        })
    }

    /// Wavenumbers of periodic axis `axis`.
    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        fft::wavenumbers(self.dims[axis], 2.0 * self.extent[axis])
    }

    /// True when some sample sits exactly at the origin.
    pub fn has_origin_sample(&self) -> bool {
        self.radius.contains(&0.0)
    }
}

/// Complex samples on a grid together with a claimed symmetry class.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    symmetry: Symmetry,
}

impl Field {
    /// Wraps samples; the symmetry defaults to the grid's natural class.
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let symmetry = natural_symmetry(&grid);
        Ok(Field { grid, values, symmetry })
    }

    pub fn zeros(grid: Arc<Grid>) -> Field {
        let n = grid.len();
        let symmetry = natural_symmetry(&grid);
        Field {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
            symmetry,
        }
    }

    /// Samples `f` at the native coordinates of every point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> Complex64) -> Field {
        let mut c = [0.0; 3];
        let values = (0..grid.len())
            .map(|i| {
                grid.coords_into(i, &mut c);
                f(&c[..])
            })
            .collect();
        let symmetry = natural_symmetry(&grid);
        Field { grid, values, symmetry }
    }

    /// Samples a function of `|x|` (and of `x_N` on cylindrical grids it ignores `x_N`).
    pub fn from_radial_fn(grid: Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Field {
        let values = grid.radius().iter().map(|&r| f(r)).collect();
        let symmetry = match grid.kind() {
            GridKind::Cartesian => Symmetry::Radial,
            _ => natural_symmetry(&grid),
        };
        Field { grid, values, symmetry }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }
    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same grid, new samples, same symmetry claim.
    pub fn with_values(&self, values: Vec<Complex64>) -> Field {
        assert_eq!(values.len(), self.values.len());
        Field {
            grid: self.grid.clone(),
            values,
            symmetry: self.symmetry,
        }
    }

    pub fn scaled(&self, c: Complex64) -> Field {
        self.with_values(self.values.iter().map(|v| v * c).collect())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Claims a symmetry class after checking it within `1e−10` (relative to `sup|f|`).
    ///
    /// On Cartesian grids the check uses the grid's own symmetries: coordinate
    /// swaps and reflections among the rotated coordinates.
    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Result<Field> {
        let dev = symmetry_deviation(&self, symmetry)?;
        if dev > 1e-10 {
            return Err(Error::SymmetryViolation(dev));
        }
        self.symmetry = symmetry;
        Ok(self)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn natural_symmetry(grid: &Grid) -> Symmetry {
    match grid.kind() {
        GridKind::Cartesian => Symmetry::None,
        GridKind::Radial => Symmetry::Radial,
        GridKind::Cylindrical => Symmetry::CylindricalSigmaN,
    }
}

/// Largest relative change of `f` under the symmetry operations the grid admits.
pub fn symmetry_deviation(f: &Field, symmetry: Symmetry) -> Result<f64> {
    let grid = f.grid();
    match (grid.kind(), symmetry) {
        (_, Symmetry::None) => Ok(0.0),
        (GridKind::Radial, Symmetry::Radial) => Ok(0.0),
        (GridKind::Cylindrical, Symmetry::CylindricalSigmaN) => Ok(0.0),
        (GridKind::Cartesian, s) => {
            let n = grid.dim();
            let k = if s == Symmetry::Radial { n } else { n - 1 };
            if s == Symmetry::CylindricalSigmaN && n < 3 {
                return Err(Error::InvalidField("CylindricalSigmaN needs N >= 3".into()));
            }
            Ok(cartesian_symmetry_deviation(f, k))
        }
        (kind, s) => Err(Error::InvalidField(format!("{s:?} symmetry is not representable on a {kind:?} grid"))),
    }
}

fn cartesian_symmetry_deviation(f: &Field, k: usize) -> f64 {
    let grid = f.grid();
    let dims = grid.dims();
    let n = grid.dim();
    let scale = f.sup_norm().max(f64::MIN_POSITIVE);
    let strides: Vec<usize> = (0..n).map(|a| dims[a + 1..].iter().product()).collect();
    let mut worst: f64 = 0.0;
    let reflect_ok = |a: usize| -> Option<usize> {
        // grid maps to itself under x_a → −x_a when 2(L − o)/h is an integer
        let t = 2.0 * (grid.extent()[a] - grid.offset()[a]) / grid.spacing(a);
        let ti = t.round();
        if (t - ti).abs() < 1e-9 {
            Some(ti as usize)
        } else {
            None
        }
    };
    let vals = f.values();
    for idx in 0..vals.len() {
        let mut mi = [0usize; 3];
        let mut rem = idx;
        for a in (0..n).rev() {
            mi[a] = rem % dims[a];
            rem /= dims[a];
        }
        let flat = |m: &[usize; 3]| (0..n).map(|a| m[a] * strides[a]).sum::<usize>();
        for a in 0..k {
            if let Some(t) = reflect_ok(a) {
                let mut m = mi;
                m[a] = (t + dims[a] - mi[a] % dims[a]) % dims[a];
                worst = worst.max((vals[flat(&m)] - vals[idx]).norm() / scale);
            }
            for c in a + 1..k {
                if dims[a] == dims[c] && grid.extent()[a] == grid.extent()[c] && grid.offset()[a] == grid.offset()[c] {
                    let mut m = mi;
                    m.swap(a, c);
                    worst = worst.max((vals[flat(&m)] - vals[idx]).norm() / scale);
                }
            }
        }
    }
    worst
}
