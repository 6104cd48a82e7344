//! Subcommand implementations behind the `inls` binary.
//!
//! Every command either writes all of its files or none: existing targets
//! without `force` fail with `OutputConflict` before anything is computed.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, runtime_criteria, Classification, PredictedFate, RuntimeCriteria};
use crate::error::{Error, Result};
use crate::evolve::{run, Fate};
use crate::functionals::write_csv;
use crate::grid::io::save_field;
use crate::grid::GridSpec;
use crate::groundstate::{pohozaev_residuals, sharp_constants, GroundStateSummary, PohozaevResiduals, SharpConstants};
use crate::model::ModelParams;

pub use config::{ExperimentConfig, InitialData, Prepared};

pub const GS_JSON: &str = "gs.json";
pub const Q_FIELD: &str = "q.field";
pub const THRESHOLDS_CSV: &str = "thresholds.csv";
pub const DIAG_CSV: &str = "diag.csv";
pub const FINAL_FIELD: &str = "final.field";
pub const FATE_JSON: &str = "fate.json";
pub const VERDICT_JSON: &str = "verdict.json";
pub const FATE_MAP_CSV: &str = "fate_map.csv";
pub const REPORT_MD: &str = "report.md";

/// Column order of the fate map.
pub const FATE_MAP_COLUMNS: [&str; 13] = [
    "id",
    "n",
    "b",
    "alpha",
    "theorem",
    "route",
    "predicted_fate",
    "observed_fate",
    "t_stop",
    "grad_growth",
    "scat_margin_min",
    "blow_margin_max",
    "agreement",
];

/// Output directory with the overwrite policy.
#[derive(Debug, Clone)]
pub struct OutDir {
    pub dir: PathBuf,
    pub force: bool,
}

impl OutDir {
    pub fn new(dir: impl Into<PathBuf>, force: bool) -> Self {
        OutDir { dir: dir.into(), force }
    }

    /// Fails without touching anything if a target exists and `force` is off.
    pub fn claim(&self, files: &[&str]) -> Result<()> {
        if !self.force {
            let taken: Vec<&str> = files.iter().copied().filter(|f| self.dir.join(f).exists()).collect();
            if !taken.is_empty() {
                return Err(Error::OutputConflict(format!(
                    "{} already holds {}; pass --force to overwrite",
                    self.dir.display(),
                    taken.join(", ")
                )));
            }
        }
        fs::create_dir_all(&self.dir).map_err(|e| Error::Io(format!("{}: {e}", self.dir.display())))
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn write(&self, file: &str, contents: &[u8]) -> Result<()> {
        let p = self.path(file);
        fs::write(&p, contents).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
    }
}

/// Contents of `gs.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundReport {
    pub summary: GroundStateSummary,
    pub pohozaev: PohozaevResiduals,
    pub sharp_constants: SharpConstants,
    pub grid: GridSpec,
}

impl GroundReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Plain-text table of the threshold quantities.
    pub fn threshold_table(&self) -> String {
        let s = &self.summary;
        let rows = [
            ("mass_q", s.mass_q),
            ("grad_sq_q", s.grad_sq_q),
            ("potential_q", s.potential_q),
            ("energy_q", s.energy_q),
            ("e_m_sigma", s.thresholds.e_m_sigma),
            ("grad_m_sigma", s.thresholds.grad_m_sigma),
            ("p_m_sigma", s.thresholds.p_m_sigma),
            ("c_opt", s.c_opt),
            ("c_opt_closed", s.c_opt_closed),
            ("pohozaev_r1", self.pohozaev.r1),
            ("pohozaev_r2", self.pohozaev.r2),
        ];
        let mut out = String::from("quantity,value\n");
        for (k, v) in rows {
            let _ = writeln!(out, "{k},{v:.17e}");
        }
        out
    }
}

/// Contents of `fate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FateReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub params: ModelParams,
    #[serde(flatten)]
    pub fate: Fate,
    pub steps: usize,
    pub dt_last: f64,
    pub t_stop: f64,
    /// `‖∇u(t_stop)‖² / ‖∇u0‖²`.
    pub grad_growth: f64,
    pub classification: Classification,
    pub runtime: RuntimeCriteria,
    /// Whether the observation is consistent with the predicted fate; absent when inconclusive.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<bool>,
}

/// Compares a prediction with an observed fate. `Dispersed` is the finite-window
/// heuristic for scattering; contaminated or step-limited runs are inconclusive.
pub fn fate_agrees(predicted: PredictedFate, observed: &Fate) -> Option<bool> {
    use PredictedFate as P;
    match observed {
        Fate::BoundaryContaminated { .. } | Fate::StepFloorHit { .. } => None,
        Fate::RanToEnd => match predicted {
            P::Global | P::GlobalScatter | P::Soliton => Some(true),
            P::Blowup => Some(false),
            P::BlowupOrGrowup | P::Unknown => None,
        },
        Fate::Dispersed { .. } => match predicted {
            P::Global | P::GlobalScatter => Some(true),
            P::Blowup | P::BlowupOrGrowup | P::Soliton => Some(false),
            P::Unknown => None,
        },
        Fate::BlowupDetected { .. } => match predicted {
            P::Blowup | P::BlowupOrGrowup => Some(true),
            P::Global | P::GlobalScatter | P::Soliton => Some(false),
            P::Unknown => None,
        },
    }
}

/// Solves for `Q` and writes `gs.json`, `q.field` and `thresholds.csv`.
pub fn cmd_ground(cfg: &ExperimentConfig, out: &OutDir) -> Result<GroundReport> {
    let params = cfg.model()?;
    out.claim(&[GS_JSON, Q_FIELD, THRESHOLDS_CSV])?;
    let gs = cfg.ground_state(&params)?;
    let report = GroundReport {
        summary: gs.summary,
        pohozaev: pohozaev_residuals(&gs.summary),
        sharp_constants: sharp_constants(&gs.summary),
        grid: gs.q.grid().spec().clone(),
    };
    out.write(GS_JSON, to_json(&report).as_bytes())?;
    save_field(&gs.q, &out.path(Q_FIELD))?;
    out.write(THRESHOLDS_CSV, report.threshold_table().as_bytes())?;
    Ok(report)
}

/// Classifies the configured datum.
pub fn cmd_classify(cfg: &ExperimentConfig, ground: Option<&GroundStateSummary>) -> Result<Classification> {
    let prep = cfg.prepare()?;
    classify(&prep.u0, ground.unwrap_or(&prep.gs.summary))
}

/// Classifies, integrates and evaluates the runtime criteria of one config.
pub fn simulate(cfg: &ExperimentConfig) -> Result<(FateReport, crate::evolve::Trajectory)> {
    let prep = cfg.prepare()?;
    let classification = classify(&prep.u0, &prep.gs.summary)?;
    let traj = run(&prep.u0, &prep.params, &cfg.controls)?;
    let runtime = runtime_criteria(&traj, &prep.gs.summary)?;
    let first = traj.records.first().expect("trajectory has a first record");
    let last = traj.records.last().expect("trajectory has a last record");
    let agreement = fate_agrees(classification.verdict.predicted_fate, &traj.fate);
    let report = FateReport {
        id: cfg.id.clone(),
        params: prep.params,
        fate: traj.fate,
        steps: traj.steps,
        dt_last: traj.dt_last,
        t_stop: last.t,
        grad_growth: last.grad_sq / first.grad_sq,
        classification,
        runtime,
        agreement,
    };
    Ok((report, traj))
}

/// Runs one config and writes `diag.csv`, `final.field` and `fate.json`.
pub fn cmd_evolve(cfg: &ExperimentConfig, out: &OutDir) -> Result<FateReport> {
    cfg.model()?;
    cfg.controls.validate()?;
    out.claim(&[DIAG_CSV, FINAL_FIELD, FATE_JSON])?;
    let (report, traj) = simulate(cfg)?;
    let mut csv = Vec::new();
    write_csv(&traj.records, &mut csv)?;
    out.write(DIAG_CSV, &csv)?;
    save_field(&traj.final_field, &out.path(FINAL_FIELD))?;
    out.write(FATE_JSON, to_json(&report).as_bytes())?;
    Ok(report)
}

/// One fate-map row: the report or the failure of its config.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub id: String,
    pub outcome: std::result::Result<FateReport, Error>,
}

impl SweepRow {
    pub fn csv_row(&self) -> String {
        let cells: Vec<String> = match &self.outcome {
            Ok(r) => {
                let v = &r.classification.verdict;
                let agreement = match r.agreement {
                    Some(true) => "agree",
                    Some(false) => "disagree",
                    None => "inconclusive",
                };
                vec![
                    self.id.clone(),
                    r.params.n().to_string(),
                    r.params.b().to_string(),
                    r.params.alpha().to_string(),
                    format!("{:?}", v.theorem),
                    route_label(v.symmetry_route),
                    format!("{:?}", v.predicted_fate),
                    r.fate.label().to_string(),
                    format!("{:.17e}", r.t_stop),
                    format!("{:.17e}", r.grad_growth),
                    format!("{:.17e}", r.runtime.scat_margin_min),
                    format!("{:.17e}", r.runtime.blow_margin_max),
                    agreement.to_string(),
                ]
            }
            Err(e) => {
                let mut c = vec![String::new(); FATE_MAP_COLUMNS.len()];
                c[0] = self.id.clone();
                c[7] = format!("error:{}", e.reason());
                c[12] = "error".into();
                c
            }
        };
        cells.join(",")
    }
}

fn route_label(r: crate::classify::SymmetryRoute) -> String {
    serde_json::to_value(r).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Parses a JSON array of configs; rows that fail to parse are kept as failures.
pub fn parse_sweep(text: &str) -> Result<Vec<(String, Result<ExperimentConfig>)>> {
    let values: Vec<serde_json::Value> = serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep list: {e}")))?;
    let rows: Vec<(String, Result<ExperimentConfig>)> = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let fallback = format!("run{i:03}");
            let parsed = serde_json::from_value::<ExperimentConfig>(v).map_err(|e| Error::Config(e.to_string()));
            let id = parsed.as_ref().ok().and_then(|c| c.id.clone()).unwrap_or(fallback);
            (id, parsed)
        })
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    for (id, _) in &rows {
        if !seen.insert(id.as_str()) {
            return Err(Error::Config(format!("duplicate run id {id}")));
        }
    }
    Ok(rows)
}

/// Runs every row on at most `jobs` threads and writes the fate map in input order.
pub fn cmd_sweep(rows: Vec<(String, Result<ExperimentConfig>)>, out: &OutDir, jobs: usize) -> Result<Vec<SweepRow>> {
    out.claim(&[FATE_MAP_CSV])?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
    let done: Vec<SweepRow> = pool.install(|| {
        rows.into_par_iter()
            .map(|(id, cfg)| {
                let outcome = cfg.and_then(|c| simulate(&c).map(|(r, _)| r));
                if let Err(e) = &outcome {
                    log::warn!("sweep row {id} failed: {e}");
                }
                SweepRow { id, outcome }
            })
            .collect()
    });
    let mut csv = FATE_MAP_COLUMNS.join(",");
    csv.push('\n');
    for row in &done {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    out.write(FATE_MAP_CSV, csv.as_bytes())?;
    Ok(done)
}

/// Markdown summary of whatever outputs `dir` holds; written to `report.md`.
pub fn cmd_report(out: &OutDir) -> Result<String> {
    out.claim(&[REPORT_MD])?;
    let mut md = String::from("# inls report\n\n");
    let mut found = false;
    let gs_path = out.path(GS_JSON);
    if gs_path.exists() {
        found = true;
        let g = GroundReport::load(&gs_path)?;
        let p = &g.summary.params;
        let _ = writeln!(md, "## Ground state (N = {}, b = {}, α = {})\n", p.n(), p.b(), p.alpha());
        md.push_str("| quantity | value |\n|---|---|\n");
        for line in g.threshold_table().lines().skip(1) {
            let (k, v) = line.split_once(',').unwrap_or((line, ""));
            let _ = writeln!(md, "| {k} | {v} |");
        }
        md.push('\n');
    }
    let fate_path = out.path(FATE_JSON);
    if fate_path.exists() {
        found = true;
        let text = fs::read_to_string(&fate_path).map_err(|e| Error::Io(e.to_string()))?;
        let r: FateReport = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", fate_path.display())))?;
        md.push_str("## Evolution\n\n");
        let v = &r.classification.verdict;
        let _ = writeln!(md, "- verdict: {:?}, route {}, predicted {:?}", v.theorem, route_label(v.symmetry_route), v.predicted_fate);
        let _ = writeln!(md, "- observed: {} at t = {:.6} after {} steps (dt = {:.3e})", r.fate.label(), r.t_stop, r.steps, r.dt_last);
        let _ = writeln!(md, "- gradient growth: {:.3}", r.grad_growth);
        let _ = writeln!(
            md,
            "- runtime criteria: scat_margin_min = {:.6e}, blow_margin_max = {:.6e}",
            r.runtime.scat_margin_min, r.runtime.blow_margin_max
        );
        md.push('\n');
    }
    let map_path = out.path(FATE_MAP_CSV);
    if map_path.exists() {
        found = true;
        let text = fs::read_to_string(&map_path).map_err(|e| Error::Io(e.to_string()))?;
        md.push_str("## Fate map\n\n");
        md.push_str("| id | theorem | predicted | observed | agreement |\n|---|---|---|---|---|\n");
        let (mut agree, mut total) = (0, 0);
        for line in text.lines().skip(1) {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != FATE_MAP_COLUMNS.len() {
                continue;
            }
            total += 1;
            agree += usize::from(c[12] == "agree");
            let _ = writeln!(md, "| {} | {} | {} | {} | {} |", c[0], c[4], c[6], c[7], c[12]);
        }
        let _ = writeln!(md, "\n{agree} of {total} rows agree.\n");
    }
    if !found {
        return Err(Error::Io(format!("{} holds no outputs to report on", out.dir.display())));
    }
    md.push_str("`Dispersed` is a finite-window heuristic for scattering, not a proof of it.\n");
    let mut f = fs::File::create(out.path(REPORT_MD)).map_err(|e| Error::Io(e.to_string()))?;
    f.write_all(md.as_bytes()).map_err(|e| Error::Io(e.to_string()))?;
    Ok(md)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}
