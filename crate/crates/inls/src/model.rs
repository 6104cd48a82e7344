//! PDE parameters `(N, b, α)`, the critical exponents they determine, and the
//! scaling symmetry `u_λ(x) = λ^{(2−b)/α} u(λx)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{interp, Field};

/// Derived exponents; always recomputed from `(N, b, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalExponents {
    pub gamma_c: f64,
    pub sigma_c: f64,
    /// `+∞` for `N = 1, 2`.
    pub alpha_max: f64,
}

/// Validated model parameters.
///
/// Construct with [`validate_params`] (strict intercritical regime) or
/// [`ModelParams::validation_mode`] (additionally admits `b = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct ModelParams {
    n: usize,
    b: f64,
    alpha: f64,
    scattering_regime: bool,
    validation: bool,
    exponents: CriticalExponents,
}

/// Unvalidated JSON form of [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsRepr {
    pub n: usize,
    pub b: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub validation_mode: bool,
}

impl ParamsRepr {
    pub fn validate(&self) -> Result<ModelParams> {
        if self.validation_mode {
            ModelParams::validation_mode(self.n, self.b, self.alpha)
        } else {
            validate_params(self.n, self.b, self.alpha)
        }
    }
}

impl TryFrom<ParamsRepr> for ModelParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        r.validate()
    }
}

impl From<ModelParams> for ParamsRepr {
    fn from(p: ModelParams) -> Self {
        ParamsRepr {
            n: p.n,
            b: p.b,
            alpha: p.alpha,
            validation_mode: p.validation,
        }
    }
}

/// Upper admissible power: `(4−2b)/(N−2)` for `N ≥ 3`, `+∞` otherwise.
pub fn alpha_max(n: usize, b: f64) -> f64 {
    if n >= 3 {
        (4.0 - 2.0 * b) / (n as f64 - 2.0)
    } else {
        f64::INFINITY
    }
}

/// Checks `0 < b < min{2, N}` and `(4−2b)/N < α < α_max(N)`; boundaries are rejected.
pub fn validate_params(n: usize, b: f64, alpha: f64) -> Result<ModelParams> {
    build(n, b, alpha, false)
}

fn build(n: usize, b: f64, alpha: f64, validation: bool) -> Result<ModelParams> {
    if n == 0 {
        return Err(Error::OutOfRangeN("N = 0 violates N >= 1".into()));
    }
    let nf = n as f64;
    let b_max = nf.min(2.0);
    let b_ok = if validation {
        b >= 0.0 && b < b_max
    } else {
        b > 0.0 && b < b_max
    };
    if !b_ok {
        let lower = if validation { "0 <= b" } else { "0 < b" };
        return Err(Error::OutOfRangeB(format!(
            "b = {b} violates {lower} < min{{2, N}} = {b_max}"
        )));
    }
    // validation mode also admits mass-subcritical powers
    let a_min = if validation { 0.0 } else { (4.0 - 2.0 * b) / nf };
    let a_max = alpha_max(n, b);
    if !(alpha > a_min && alpha < a_max) {
        return Err(Error::OutOfRangeAlpha(format!(
            "alpha = {alpha} violates (4-2b)/N = {a_min} < alpha < alpha(N) = {a_max}"
        )));
    }
    let gamma_c = nf / 2.0 - (2.0 - b) / alpha;
    let sigma_c = (1.0 - gamma_c) / gamma_c;
    Ok(ModelParams {
        n,
        b,
        alpha,
        scattering_regime: n >= 2 && b < b_max.min(nf / 2.0),
        validation,
        exponents: CriticalExponents {
            gamma_c,
            sigma_c,
            alpha_max: a_max,
        },
    })
}

impl ModelParams {
    pub fn new(n: usize, b: f64, alpha: f64) -> Result<Self> {
        validate_params(n, b, alpha)
    }

    /// Admits `b = 0` and any `0 < α < α_max`; used for closed-form soliton oracles.
    /// Critical exponents are still reported but carry no threshold meaning
    /// outside the intercritical range.
    pub fn validation_mode(n: usize, b: f64, alpha: f64) -> Result<Self> {
        build(n, b, alpha, true)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn scattering_regime(&self) -> bool {
        self.scattering_regime
    }
    pub fn is_validation(&self) -> bool {
        self.validation
    }
    pub fn exponents(&self) -> CriticalExponents {
        self.exponents
    }
    pub fn gamma_c(&self) -> f64 {
        self.exponents.gamma_c
    }
    pub fn sigma_c(&self) -> f64 {
        self.exponents.sigma_c
    }

    /// `Nα + 2b`
    pub fn s_plus(&self) -> f64 {
        self.n as f64 * self.alpha + 2.0 * self.b
    }
    /// `Nα − 4 + 2b`, positive in the intercritical range.
    pub fn s_minus(&self) -> f64 {
        self.n as f64 * self.alpha - 4.0 + 2.0 * self.b
    }
    /// `4 − 2b − (N−2)α`, positive in the intercritical range.
    pub fn s_mass(&self) -> f64 {
        4.0 - 2.0 * self.b - (self.n as f64 - 2.0) * self.alpha
    }
    /// Coefficient of `P` in `G`: `(Nα+2b)/(2(α+2))`.
    pub fn g_coeff(&self) -> f64 {
        self.s_plus() / (2.0 * (self.alpha + 2.0))
    }
    /// Amplitude exponent of the scaling symmetry, `(2−b)/α`.
    pub fn scaling_power(&self) -> f64 {
        (2.0 - self.b) / self.alpha
    }
}

/// `u_λ(x) = λ^{(2−b)/α} u(λx)` resampled on the field's own grid.
///
/// Cartesian axes use band-limited interpolation, staggered axes 6-point Lagrange
/// interpolation. `λ = 1` returns an identical copy.
pub fn rescale(field: &Field, lambda: f64, params: &ModelParams) -> Result<Field> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidField(format!("lambda = {lambda} must be positive")));
    }
    if lambda == 1.0 {
        return Ok(field.clone());
    }
    let amp = lambda.powf(params.scaling_power());
    let mut out = interp::dilate(field, lambda)?;
    for v in out.values_mut() {
        *v *= amp;
    }
    Ok(out)
}
