//! Threshold classification of initial data and runtime criteria on trajectories.
//!
//! All comparisons with the ground state go through the dimensionless ratios
//! `E M^{σc} / E(Q)M(Q)^{σc}`, `‖∇u‖‖u‖^{σc} / ‖∇Q‖‖Q‖^{σc}` and
//! `P M^{σc} / P(Q)M(Q)^{σc}`, formed in log space.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::functionals::{diagnostics, DiagnosticRecord};
use crate::grid::{Field, Symmetry};
use crate::groundstate::GroundStateSummary;
use crate::model::ModelParams;

/// Relative width of the band treated as `E M^{σc} = E(Q)M(Q)^{σc}`.
pub const AT_THRESHOLD_TOL: f64 = 1e-6;

/// Slack below which a disagreement between equivalent conditions is not reported.
pub const EQUIVALENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    ScatterCriterion,
    BlowupCriterion,
    BelowGlobal,
    BelowBlowup,
    AtThreshold1,
    AtThreshold2,
    AtThreshold3,
    AboveScatter,
    AboveBlowup,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryRoute {
    FiniteVariance,
    Radial,
    #[serde(rename = "CylindricalΣN")]
    CylindricalSigmaN,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictedFate {
    Global,
    GlobalScatter,
    Blowup,
    BlowupOrGrowup,
    Soliton,
    Unknown,
}

/// One evaluated inequality; `slack > 0` exactly when it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub value: f64,
    pub threshold: f64,
    pub slack: f64,
}

impl Margin {
    /// `value < threshold`.
    pub fn below(value: f64, threshold: f64) -> Self {
        Margin { value, threshold, slack: threshold - value }
    }
    /// `value > threshold`.
    pub fn above(value: f64, threshold: f64) -> Self {
        Margin { value, threshold, slack: value - threshold }
    }
    pub fn holds(&self) -> bool {
        self.slack > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem: Theorem,
    pub margins: BTreeMap<String, Margin>,
    pub symmetry_route: SymmetryRoute,
    pub predicted_fate: PredictedFate,
}

impl Verdict {
    fn new(theorem: Theorem, margins: BTreeMap<String, Margin>, route: SymmetryRoute, fate: PredictedFate) -> Self {
        let predicted_fate = if theorem == Theorem::Unclassified { PredictedFate::Unknown } else { fate };
        Verdict {
            theorem,
            margins,
            symmetry_route: route,
            predicted_fate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AboveThresholdReport {
    /// `16E(1 − E(Q)M(Q)^{σc} / (E M^{σc}))`.
    pub lambda0: f64,
    pub v0: f64,
    pub v0_d1: f64,
    pub v0_d2: f64,
    /// Slack of `(E M^{σc}/E(Q)M(Q)^{σc})(1 − V′(0)²/(32 E V(0))) ≤ 1`.
    pub cond_energy: f64,
    /// `1 − P M^{σc}/P(Q)M(Q)^{σc}`: positive on the scattering side, negative on the blow-up side.
    pub cond_p: f64,
    /// Sign of `V′(0)`.
    pub cond_sign: i8,
    /// `(V″(0) − λ₀) / 16|E|`, the equivalent form of `cond_p`.
    pub cond_p_equivalent: f64,
}

/// Ratios of the scale-invariant quantities of `u` to those of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRatios {
    pub energy: f64,
    pub gradient: f64,
    pub potential: f64,
}

impl ThresholdRatios {
    pub fn new(mass: f64, grad_sq: f64, potential: f64, energy: f64, gs: &GroundStateSummary) -> Self {
        let sc = gs.params.sigma_c();
        let th = &gs.thresholds;
        let ln_m = mass.ln();
        // sign(x) · exp(ln|x| + σc ln M − ln T)
        let ratio = |x: f64, t: f64| -> f64 {
            if x == 0.0 {
                0.0
            } else {
                x.signum() * (x.abs().ln() + sc * ln_m - t.ln()).exp()
            }
        };
        ThresholdRatios {
            energy: ratio(energy, th.e_m_sigma),
            gradient: if grad_sq == 0.0 {
                0.0
            } else {
                (0.5 * grad_sq.ln() + 0.5 * sc * ln_m - th.grad_m_sigma.ln()).exp()
            },
            potential: ratio(potential, th.p_m_sigma),
        }
    }

    pub fn of_record(r: &DiagnosticRecord, gs: &GroundStateSummary) -> Self {
        Self::new(r.mass, r.grad_sq, r.potential, r.energy, gs)
    }
}

/// First applicable blow-up strengthening: radial symmetry (`N ≥ 2`, `α ≤ 4`),
/// cylindrical symmetry (`N ≥ 3`, `α ≤ 2`), then finite variance.
pub fn symmetry_route(symmetry: Symmetry, variance_reliable: bool, params: &ModelParams) -> SymmetryRoute {
    let (n, a) = (params.n(), params.alpha());
    match symmetry {
        Symmetry::Radial if n >= 2 && a <= 4.0 => SymmetryRoute::Radial,
        Symmetry::CylindricalSigmaN if n >= 3 && a <= 2.0 => SymmetryRoute::CylindricalSigmaN,
        _ if variance_reliable => SymmetryRoute::FiniteVariance,
        _ => SymmetryRoute::None,
    }
}

fn blowup_fate(route: SymmetryRoute) -> PredictedFate {
    if route == SymmetryRoute::None {
        PredictedFate::BlowupOrGrowup
    } else {
        PredictedFate::Blowup
    }
}

fn global_fate(params: &ModelParams) -> PredictedFate {
    if params.scattering_regime() {
        PredictedFate::GlobalScatter
    } else {
        PredictedFate::Global
    }
}

/// Below-threshold dichotomy from the ratios alone.
pub fn classify_below_ratios(r: &ThresholdRatios, route: SymmetryRoute, params: &ModelParams) -> Verdict {
    let mut m = BTreeMap::new();
    let energy = Margin::below(r.energy, 1.0);
    m.insert("energy_below".to_string(), energy);
    if !energy.holds() {
        return Verdict::new(Theorem::Unclassified, m, route, PredictedFate::Unknown);
    }
    let global = Margin::below(r.gradient, 1.0);
    let blow = Margin::above(r.gradient, 1.0);
    m.insert("gradient_below".to_string(), global);
    m.insert("gradient_above".to_string(), blow);
    if global.holds() {
        Verdict::new(Theorem::BelowGlobal, m, route, global_fate(params))
    } else if blow.holds() {
        Verdict::new(Theorem::BelowBlowup, m, route, blowup_fate(route))
    } else {
        Verdict::new(Theorem::Unclassified, m, route, PredictedFate::Unknown)
    }
}

/// Threshold trichotomy from the ratios; `tol` is the relative band for equality.
pub fn classify_at_ratios(r: &ThresholdRatios, route: SymmetryRoute, tol: f64) -> Result<Verdict> {
    if (r.energy - 1.0).abs() > tol {
        return Err(Error::NotAtThreshold(r.energy));
    }
    let mut m = BTreeMap::new();
    m.insert(
        "energy_at".to_string(),
        Margin {
            value: r.energy,
            threshold: 1.0,
            slack: tol - (r.energy - 1.0).abs(),
        },
    );
    let gap = r.gradient - 1.0;
    m.insert(
        "gradient_at".to_string(),
        Margin {
            value: r.gradient,
            threshold: 1.0,
            slack: tol - gap.abs(),
        },
    );
    let v = if gap.abs() <= tol {
        Verdict::new(Theorem::AtThreshold2, m, route, PredictedFate::Soliton)
    } else if gap < 0.0 {
        m.insert("gradient_below".to_string(), Margin::below(r.gradient, 1.0));
        Verdict::new(Theorem::AtThreshold1, m, route, PredictedFate::Global)
    } else {
        m.insert("gradient_above".to_string(), Margin::above(r.gradient, 1.0));
        Verdict::new(Theorem::AtThreshold3, m, route, blowup_fate(route))
    };
    Ok(v)
}

fn prepare(u0: &Field, gs: &GroundStateSummary) -> Result<(DiagnosticRecord, ThresholdRatios, SymmetryRoute)> {
    let d = diagnostics(u0, &gs.params, 0.0)?;
    if d.mass == 0.0 {
        return Err(Error::ZeroField);
    }
    let r = ThresholdRatios::of_record(&d, gs);
    let route = symmetry_route(u0.symmetry(), d.variance_reliable, &gs.params);
    Ok((d, r, route))
}

/// Below-threshold classification; `Unclassified` unless `E M^{σc} < E(Q)M(Q)^{σc}`.
pub fn classify_below(u0: &Field, gs: &GroundStateSummary) -> Result<Verdict> {
    let (_, r, route) = prepare(u0, gs)?;
    Ok(classify_below_ratios(&r, route, &gs.params))
}

/// At-threshold classification; `NotAtThreshold` outside the band.
pub fn classify_at(u0: &Field, gs: &GroundStateSummary, tol: f64) -> Result<Verdict> {
    let (_, r, route) = prepare(u0, gs)?;
    classify_at_ratios(&r, route, tol)
}

/// Above-threshold classification for data with finite variance.
///
/// Each condition is also evaluated in its `λ₀` form; a sign disagreement with
/// both slacks above [`EQUIVALENCE_TOL`] is reported as `ConditionsInconsistent`.
pub fn classify_above(u0: &Field, gs: &GroundStateSummary) -> Result<(Verdict, AboveThresholdReport)> {
    let (d, r, _) = prepare(u0, gs)?;
    if !d.variance_reliable {
        return Err(Error::VarianceUnreliable);
    }
    let params = &gs.params;
    let (e, v, v1, v2) = (d.energy, d.variance, d.variance_d1, d.variance_d2);
    let lambda0 = if r.energy != 0.0 { 16.0 * e * (1.0 - 1.0 / r.energy) } else { f64::NEG_INFINITY };
    let scale = 16.0 * e.abs();

    let mut m = BTreeMap::new();
    let ener1 = Margin {
        value: r.energy,
        threshold: 1.0,
        slack: r.energy - 1.0,
    };
    let ener2_value = r.energy * (1.0 - v1 * v1 / (32.0 * e * v));
    let ener2 = Margin {
        value: ener2_value,
        threshold: 1.0,
        slack: 1.0 - ener2_value,
    };
    let pot_below = Margin::below(r.potential, 1.0);
    let pot_above = Margin::above(r.potential, 1.0);
    let slope_pos = Margin {
        value: v1,
        threshold: 0.0,
        slack: v1,
    };
    let slope_neg = Margin {
        value: v1,
        threshold: 0.0,
        slack: -v1,
    };
    let equiv = (v2 - lambda0) / scale;

    if e > 0.0 {
        check_equivalent("energy_above", ener1.slack, lambda0 / scale)?;
        check_equivalent("variance_energy", ener2.slack, (v1 * v1 - 2.0 * v * lambda0) / (2.0 * v * scale))?;
        check_equivalent("potential_below", pot_below.slack, equiv)?;
    }

    m.insert("energy_above".to_string(), ener1);
    m.insert("variance_energy".to_string(), ener2);
    m.insert("potential_below".to_string(), pot_below);
    m.insert("potential_above".to_string(), pot_above);
    m.insert("slope_nonnegative".to_string(), slope_pos);
    m.insert("slope_nonpositive".to_string(), slope_neg);

    // Non-strict conditions hold with zero slack.
    let base = ener1.slack >= 0.0 && ener2.slack >= 0.0 && e > 0.0;
    let route = SymmetryRoute::FiniteVariance;
    let verdict = if base && pot_below.holds() && v1 >= 0.0 {
        Verdict::new(Theorem::AboveScatter, m, route, global_fate(params))
    } else if base && pot_above.holds() && v1 <= 0.0 {
        Verdict::new(Theorem::AboveBlowup, m, route, PredictedFate::Blowup)
    } else {
        Verdict::new(Theorem::Unclassified, m, route, PredictedFate::Unknown)
    };
    let report = AboveThresholdReport {
        lambda0,
        v0: v,
        v0_d1: v1,
        v0_d2: v2,
        cond_energy: ener2.slack,
        cond_p: pot_below.slack,
        cond_sign: if v1 > 0.0 {
            1
        } else if v1 < 0.0 {
            -1
        } else {
            0
        },
        cond_p_equivalent: equiv,
    };
    Ok((verdict, report))
}

fn check_equivalent(name: &str, direct: f64, equivalent: f64) -> Result<()> {
    let disagree = (direct > 0.0) != (equivalent > 0.0);
    if disagree && direct.abs() > EQUIVALENCE_TOL && equivalent.abs() > EQUIVALENCE_TOL {
        return Err(Error::ConditionsInconsistent(format!(
            "{name}: direct slack {direct:.3e}, equivalent form {equivalent:.3e}"
        )));
    }
    Ok(())
}

/// Verdict plus the above-threshold report when that branch was taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub ratios: ThresholdRatios,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub above: Option<AboveThresholdReport>,
}

/// Routes `u0` to the below, at or above branch by its energy ratio.
///
/// Above-threshold data without reliable variance are `Unclassified`.
pub fn classify(u0: &Field, gs: &GroundStateSummary) -> Result<Classification> {
    let (d, r, route) = prepare(u0, gs)?;
    let params = &gs.params;
    if (r.energy - 1.0).abs() <= AT_THRESHOLD_TOL {
        let verdict = classify_at_ratios(&r, route, AT_THRESHOLD_TOL)?;
        return Ok(Classification { verdict, ratios: r, above: None });
    }
    if r.energy < 1.0 {
        let verdict = classify_below_ratios(&r, route, params);
        return Ok(Classification { verdict, ratios: r, above: None });
    }
    if !d.variance_reliable {
        let mut m = BTreeMap::new();
        m.insert("energy_above".to_string(), Margin::above(r.energy, 1.0));
        let verdict = Verdict::new(Theorem::Unclassified, m, SymmetryRoute::None, PredictedFate::Unknown);
        return Ok(Classification { verdict, ratios: r, above: None });
    }
    let (verdict, report) = classify_above(u0, gs)?;
    Ok(Classification {
        verdict,
        ratios: r,
        above: Some(report),
    })
}

/// Extremes of the two runtime criteria over a trajectory's samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeCriteria {
    /// `min_t (P(Q)M(Q)^{σc} − P(u)M^{σc})`.
    pub scat_margin_min: f64,
    /// `max_t G(u)`.
    pub blow_margin_max: f64,
}

impl RuntimeCriteria {
    /// The scattering criterion holds on the window.
    pub fn scatter_certified(&self) -> bool {
        self.scat_margin_min > 0.0
    }
    /// `δ = −max G` when the blow-up criterion holds on the window.
    pub fn blowup_delta(&self) -> Option<f64> {
        (self.blow_margin_max < 0.0).then_some(-self.blow_margin_max)
    }
    pub fn theorem(&self) -> Theorem {
        if self.scatter_certified() {
            Theorem::ScatterCriterion
        } else if self.blowup_delta().is_some() {
            Theorem::BlowupCriterion
        } else {
            Theorem::Unclassified
        }
    }
}

pub fn runtime_criteria(traj: &Trajectory, gs: &GroundStateSummary) -> Result<RuntimeCriteria> {
    runtime_criteria_records(&traj.records, gs)
}

pub fn runtime_criteria_records(records: &[DiagnosticRecord], gs: &GroundStateSummary) -> Result<RuntimeCriteria> {
    if records.is_empty() {
        return Err(Error::InsufficientSamples(0));
    }
    let sc = gs.params.sigma_c();
    let th = gs.thresholds.p_m_sigma;
    let mut out = RuntimeCriteria {
        scat_margin_min: f64::INFINITY,
        blow_margin_max: f64::NEG_INFINITY,
    };
    for r in records {
        let pm = if r.potential > 0.0 { (r.potential.ln() + sc * r.mass.ln()).exp() } else { 0.0 };
        out.scat_margin_min = out.scat_margin_min.min(th - pm);
        out.blow_margin_max = out.blow_margin_max.max(r.virial_g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::GroundStateSummary;

    fn summary() -> GroundStateSummary {
        // Pohozaev-consistent scalars for N = 3, b = 0.5, α = 2
        let p = ModelParams::new(3, 0.5, 2.0).unwrap();
        let m = 10.0;
        let g = m * p.s_plus() / p.s_mass();
        let pot = g * 2.0 * (p.alpha() + 2.0) / p.s_plus();
        GroundStateSummary::from_integrals(p, m, g, pot)
    }

    #[test]
    fn ground_state_scalars_sit_at_threshold() {
        let gs = summary();
        let r = ThresholdRatios::new(gs.mass_q, gs.grad_sq_q, gs.potential_q, gs.energy_q, &gs);
        for v in [r.energy, r.gradient, r.potential] {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let v = classify_at_ratios(&r, SymmetryRoute::Radial, AT_THRESHOLD_TOL).unwrap();
        assert_eq!(v.theorem, Theorem::AtThreshold2);
        assert_eq!(v.predicted_fate, PredictedFate::Soliton);
    }

    #[test]
    fn multiples_split_by_gradient() {
        let gs = summary();
        let p = gs.params;
        let a = p.alpha();
        for (c, want) in [(0.9, Theorem::BelowGlobal), (1.1, Theorem::BelowBlowup)] {
            let (m, g, pot) = (c * c * gs.mass_q, c * c * gs.grad_sq_q, c.powf(a + 2.0) * gs.potential_q);
            let e = g / 2.0 - pot / (a + 2.0);
            let r = ThresholdRatios::new(m, g, pot, e, &gs);
            let v = classify_below_ratios(&r, SymmetryRoute::Radial, &p);
            assert_eq!(v.theorem, want, "c = {c}");
            let fired = [Theorem::BelowGlobal, Theorem::BelowBlowup].iter().filter(|t| **t == v.theorem).count();
            assert_eq!(fired, 1);
        }
    }

    #[test]
    fn unclassified_predicts_unknown() {
        let gs = summary();
        let r = ThresholdRatios {
            energy: 2.0,
            gradient: 1.5,
            potential: 1.0,
        };
        let v = classify_below_ratios(&r, SymmetryRoute::Radial, &gs.params);
        assert_eq!(v.theorem, Theorem::Unclassified);
        assert_eq!(v.predicted_fate, PredictedFate::Unknown);
        assert!(matches!(
            classify_at_ratios(&r, SymmetryRoute::Radial, AT_THRESHOLD_TOL),
            Err(Error::NotAtThreshold(_))
        ));
    }

    #[test]
    fn routes_follow_dimension_and_power() {
        let p3 = ModelParams::new(3, 0.5, 2.0).unwrap();
        let p1 = ModelParams::new(1, 0.5, 4.5).unwrap();
        assert_eq!(symmetry_route(Symmetry::Radial, true, &p3), SymmetryRoute::Radial);
        assert_eq!(symmetry_route(Symmetry::CylindricalSigmaN, false, &p3), SymmetryRoute::CylindricalSigmaN);
        assert_eq!(symmetry_route(Symmetry::Radial, true, &p1), SymmetryRoute::FiniteVariance);
        assert_eq!(symmetry_route(Symmetry::None, false, &p1), SymmetryRoute::None);
        assert_eq!(blowup_fate(SymmetryRoute::None), PredictedFate::BlowupOrGrowup);
    }

    #[test]
    fn single_record_window() {
        let gs = summary();
        let rec = DiagnosticRecord {
            t: 0.0,
            mass: 1.0,
            energy: 0.1,
            potential: 0.2,
            virial_g: -0.3,
            grad_sq: 0.5,
            variance: 1.0,
            variance_d1: 0.0,
            variance_d2: 0.0,
            variance_d2_fd: f64::NAN,
            variance_reliable: true,
        };
        let c = runtime_criteria_records(&[rec], &gs).unwrap();
        assert_eq!(c.blow_margin_max, -0.3);
        assert!((c.scat_margin_min - (gs.thresholds.p_m_sigma - 0.2)).abs() < 1e-15);
        assert!(matches!(runtime_criteria_records(&[], &gs), Err(Error::InsufficientSamples(0))));
    }
}
