//! Experiment configuration and initial-data recipes.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::EvolveControls;
use crate::grid::io::load_field;
use crate::grid::{Field, Grid, GridKind, GridSpec};
use crate::groundstate::{default_grid, solve_ground_state, GroundState, GroundStateOptions};
use crate::model::{ModelParams, ParamsRepr};

/// Low radial modes in the seeded perturbation.
const NOISE_MODES: usize = 4;

/// One experiment. Every optional entry has a default, so a config may be as
/// small as `{"params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub params: ParamsRepr,
    /// Defaults to [`default_grid`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Defaults to the ground state itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub controls: EvolveControls,
    #[serde(default)]
    pub ground: GroundStateOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

/// Initial-data recipes. `chirp` is `λ` in the factor `e^{iλ|x|²}`; `noise`
/// scales a seeded smooth radial perturbation `1 + noise·Σ ξ_k cos(kπr/R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// `A e^{−|x|²/(2σ²)} e^{iλ|x|²} e^{iv·x}`; a boost needs a Cartesian grid.
    Gaussian {
        amplitude: f64,
        sigma: f64,
        #[serde(default)]
        chirp: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        boost: Vec<f64>,
        #[serde(default)]
        noise: f64,
    },
    /// `c Q e^{iλ|x|²}`.
    GroundStateMultiple {
        c: f64,
        #[serde(default)]
        chirp: f64,
        #[serde(default)]
        noise: f64,
    },
    /// A binary field file; its grid replaces the configured one.
    File { path: PathBuf },
}

/// Ground state, grid and initial datum of a configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub params: ModelParams,
    pub grid: Arc<Grid>,
    pub gs: GroundState,
    pub u0: Field,
}

impl ExperimentConfig {
    pub fn new(params: ModelParams) -> Self {
        ExperimentConfig {
            id: None,
            params: params.into(),
            grid: None,
            initial: None,
            controls: EvolveControls::default(),
            ground: GroundStateOptions::default(),
            outputs: None,
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn model(&self) -> Result<ModelParams> {
        self.params.validate()
    }

    pub fn grid_spec(&self, params: &ModelParams) -> GridSpec {
        self.grid.clone().unwrap_or_else(|| default_grid(params))
    }

    /// Solves for `Q` on the configured grid when it is radial in the right
    /// dimension, otherwise on [`default_grid`].
    pub fn ground_state(&self, params: &ModelParams) -> Result<GroundState> {
        let spec = match &self.grid {
            Some(g) if g.kind == GridKind::Radial && g.n == params.n() => g.clone(),
            _ => default_grid(params),
        };
        solve_ground_state(params, &spec.build()?, &self.ground)
    }

    /// Validates everything and builds `u0`.
    pub fn prepare(&self) -> Result<Prepared> {
        let params = self.model()?;
        self.controls.validate()?;
        let gs = self.ground_state(&params)?;
        let u0 = match &self.initial {
            Some(InitialData::File { path }) => {
                let f = load_field(path)?;
                if let Some(spec) = &self.grid {
                    if *spec.build()? != **f.grid() {
                        return Err(Error::GridMismatch(format!("{} is not on the configured grid", path.display())));
                    }
                }
                f
            }
            recipe => {
                let built = self.grid_spec(&params).build()?;
                let grid = if *built == **gs.q.grid() { gs.q.grid().clone() } else { built };
                build_initial(recipe.as_ref(), &grid, &gs, self.seed)?
            }
        };
        if u0.grid().dim() != params.n() {
            return Err(Error::GridMismatch(format!(
                "grid is {}-dimensional, params have N = {}",
                u0.grid().dim(),
                params.n()
            )));
        }
        Ok(Prepared {
            params,
            grid: u0.grid().clone(),
            gs,
            u0,
        })
    }
}

fn build_initial(recipe: Option<&InitialData>, grid: &Arc<Grid>, gs: &GroundState, seed: u64) -> Result<Field> {
    let on_q_grid = **grid == **gs.q.grid();
    let profile = |r: f64| if r.is_finite() { gs.profile_at(r) } else { 0.0 };
    let q_field = || {
        if on_q_grid {
            gs.q.clone()
        } else {
            Field::from_radial_fn(grid.clone(), |r| Complex64::new(profile(r), 0.0))
        }
    };
    let (base, chirp, noise) = match recipe {
        None => (q_field(), 0.0, 0.0),
        Some(InitialData::GroundStateMultiple { c, chirp, noise }) => {
            check_finite(&[*c, *chirp, *noise])?;
            (q_field().scaled(Complex64::new(*c, 0.0)), *chirp, *noise)
        }
        Some(InitialData::Gaussian {
            amplitude,
            sigma,
            chirp,
            boost,
            noise,
        }) => {
            check_finite(&[*amplitude, *sigma, *chirp, *noise])?;
            check_finite(boost)?;
            if !(*sigma > 0.0) {
                return Err(Error::InvalidField(format!("sigma = {sigma} must be positive")));
            }
            let mut f = Field::from_radial_fn(grid.clone(), |r| Complex64::new(amplitude * (-(r * r) / (2.0 * sigma * sigma)).exp(), 0.0));
            if boost.iter().any(|v| *v != 0.0) {
                if grid.kind() != GridKind::Cartesian || boost.len() != grid.dim() {
                    return Err(Error::InvalidField("a boost needs a Cartesian grid and one entry per axis".into()));
                }
                let values: Vec<Complex64> = f
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, u)| {
                        let x = grid.coords(i);
                        let phase: f64 = boost.iter().zip(&x).map(|(v, x)| v * x).sum();
                        u * Complex64::from_polar(1.0, phase)
                    })
                    .collect();
                f = Field::new(grid.clone(), values)?;
            }
            (f, *chirp, *noise)
        }
        Some(InitialData::File { .. }) => unreachable!("file data are loaded by the caller"),
    };
    let mut out = base;
    if chirp != 0.0 {
        let r = grid.radius().to_vec();
        let values = out.values().iter().zip(&r).map(|(u, r)| u * Complex64::from_polar(1.0, chirp * r * r)).collect();
        out = out.with_values(values);
    }
    if noise != 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi: Vec<f64> = (0..NOISE_MODES).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r_max = grid.radius().iter().cloned().fold(0.0, f64::max);
        let r = grid.radius().to_vec();
        let values = out
            .values()
            .iter()
            .zip(&r)
            .map(|(u, r)| {
                let bump: f64 = xi
                    .iter()
                    .enumerate()
                    .map(|(k, x)| x * ((k + 1) as f64 * std::f64::consts::PI * r / r_max).cos())
                    .sum();
                u * (1.0 + noise * bump)
            })
            .collect();
        out = out.with_values(values);
    }
    Ok(out)
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidField("recipe parameters must be finite".into()))
    }
}
