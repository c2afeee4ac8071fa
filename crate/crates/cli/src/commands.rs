//! The five subcommands. Each takes a validated config and an output
//! directory and writes its files there.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use kirigami_core::analytic::{inverse_design, AnalyticInput, FreeVariable, ShapeLaw};
use kirigami_core::export::{obj_string, sig9, snap_csv_string};
use kirigami_core::laminate::{bending_stiffness_bilayer, bending_stiffness_trilayer, membrane_stiffness, TrilayerSpec};
use kirigami_core::pattern::{assign_rest_metrics, coverage_fraction, generate_mesh};
use kirigami_core::shellsim::{find_stable_states, snap_through, ModeLabel, ShellModel, Sign, SnapControl, StableStates};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ConfigError, StudyConfig};

/// States with |H|/L below this are written as `state_flat.obj`.
pub const FLAT_HEIGHT_RATIO: f64 = 1e-6;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// Physically or numerically invalid input, including infeasible targets.
    Invalid(String),
    /// No equilibrium could be computed.
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) | CliError::Io(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "invalid config:\n{e}"),
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<kirigami_core::Error> for CliError {
    fn from(e: kirigami_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))
}

/// Rounds every number in a JSON tree to 9 significant digits.
fn round9(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => {
                let r: f64 = sig9(x).parse().unwrap_or(x);
                serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
            }
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round9).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round9(v))).collect()),
        other => other,
    }
}

fn write_json(dir: &Path, name: &str, value: Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&round9(value)).expect("JSON values always serialize");
    text.push('\n');
    write_file(dir, name, &text)
}

/// Laminate and analytic quantities at one (λ, L) point.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPoint {
    pub lambda: f64,
    pub eps: f64,
    /// mm
    pub size: f64,
    /// mm, cross patterns only
    pub arm_width: Option<f64>,
    pub t_s: f64,
    pub t_k: f64,
    pub coverage: f64,
    /// mN/mm (= N/m)
    pub c_s: f64,
    /// µJ
    pub d_tri: f64,
    /// µJ
    pub d_bi: f64,
    /// 1/mm
    pub kappa: f64,
    pub hl_pyramid: f64,
    pub hl_spherical_cap: f64,
}

pub fn analytic_point(cfg: &StudyConfig, lambda: f64, size: f64) -> Result<AnalyticPoint, CliError> {
    let sub = cfg.substrate_layer();
    let face = cfg.face_layer();
    let pattern = cfg.pattern_at(size).map_err(CliError::Invalid)?;
    let coverage = coverage_fraction(&pattern, &cfg.substrate_at(size))?;
    let spec = TrilayerSpec::new(sub, face, lambda, coverage, cfg.laminate.poisson)?;
    let c_s = membrane_stiffness(&sub, cfg.laminate.poisson)?;
    let d_tri = bending_stiffness_trilayer(&spec)?;
    let d_bi = bending_stiffness_bilayer(&spec)?;
    let input = |shape| AnalyticInput { c_s, d_eq: d_tri, length_l: size, prestretch: lambda, shape };
    Ok(AnalyticPoint {
        lambda,
        eps: lambda - 1.0,
        size,
        arm_width: cfg.arm_width_at(size),
        t_s: sub.thickness,
        t_k: face.thickness,
        coverage,
        c_s,
        d_tri,
        d_bi,
        kappa: input(ShapeLaw::Pyramid).curvature()?,
        hl_pyramid: input(ShapeLaw::Pyramid).height_ratio()?,
        hl_spherical_cap: input(ShapeLaw::SphericalCap).height_ratio()?,
    })
}

fn grid(cfg: &StudyConfig) -> Vec<(f64, f64)> {
    let lambdas = cfg.prestretches();
    cfg.sizes().into_iter().flat_map(|l| lambdas.iter().map(move |&lam| (lam, l))).collect()
}

/// Writes `analyze.json` with one entry per (L, λ) point and returns the
/// points.
pub fn run_analyze(cfg: &StudyConfig, out: &Path) -> Result<Vec<AnalyticPoint>, CliError> {
    let points = grid(cfg).into_iter().map(|(lam, l)| analytic_point(cfg, lam, l)).collect::<Result<Vec<_>, _>>()?;
    let entries: Vec<Value> = points
        .iter()
        .map(|p| {
            json!({
                "lambda": p.lambda,
                "eps": p.eps,
                "L_mm": p.size,
                "w_mm": p.arm_width,
                "coverage": p.coverage,
                "C_s_N_per_m": p.c_s,
                "D_tri_uJ": p.d_tri,
                "D_bi_uJ": p.d_bi,
                "D_ratio": p.d_tri / p.d_bi,
                "kappa_per_mm": p.kappa,
                "hl_pyramid": p.hl_pyramid,
                "hl_spherical_cap": p.hl_spherical_cap,
            })
        })
        .collect();
    write_json(
        out,
        "analyze.json",
        json!({
            "seed": cfg.seed,
            "substrate": cfg.laminate.substrate,
            "face": cfg.laminate.face,
            "t_s_mm": cfg.substrate_layer().thickness,
            "t_k_mm": cfg.face_layer().thickness,
            "poisson": cfg.laminate.poisson,
            "points": entries,
        }),
    )?;
    Ok(points)
}

/// Builds the shell model for pre-stretch `lambda` at size `size`.
pub fn build_model(cfg: &StudyConfig, lambda: f64, size: f64) -> Result<ShellModel, CliError> {
    let pattern = cfg.pattern_at(size).map_err(CliError::Invalid)?;
    let mesh = generate_mesh(&pattern, &cfg.substrate_at(size), cfg.edge_length_at(size))?;
    let mesh = assign_rest_metrics(&mesh, lambda)?;
    Ok(ShellModel::new(mesh, cfg.substrate_layer(), cfg.face_layer(), cfg.laminate.poisson, size)?)
}

pub const SWEEP_CSV_HEADER: [&str; 16] = [
    "lambda",
    "eps",
    "L_mm",
    "w_mm",
    "t_s_mm",
    "t_k_mm",
    "n",
    "C_s_N_per_m",
    "D_eq_N_m",
    "kappa_per_mm",
    "hl_analytic_pyramid",
    "hl_analytic_spherical_cap",
    "hl_sim_positive",
    "hl_sim_negative",
    "n_equilibria",
    "errors",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: AnalyticPoint,
    pub hl_sim_positive: Option<f64>,
    pub hl_sim_negative: Option<f64>,
    pub n_equilibria: Option<usize>,
    pub errors: String,
}

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        let p = &self.point;
        let opt = |v: Option<f64>| v.map(sig9).unwrap_or_default();
        vec![
            sig9(p.lambda),
            sig9(p.eps),
            sig9(p.size),
            opt(p.arm_width),
            sig9(p.t_s),
            sig9(p.t_k),
            sig9(p.coverage),
            sig9(p.c_s),
            sig9(p.d_tri * 1e-6),
            sig9(p.kappa),
            sig9(p.hl_pyramid),
            sig9(p.hl_spherical_cap),
            opt(self.hl_sim_positive),
            opt(self.hl_sim_negative),
            self.n_equilibria.map(|n| n.to_string()).unwrap_or_default(),
            self.errors.clone(),
        ]
    }
}

/// Mode-1 height ratio of the first state with the given sign.
fn signed_mode1_ratio(found: &StableStates, sign: Sign, size: f64) -> Option<f64> {
    found
        .states
        .iter()
        .find(|s| s.sign == sign && s.mode_label != ModeLabel::Mode2)
        .map(|s| s.height_ratio(size))
}

fn sweep_row(cfg: &StudyConfig, lambda: f64, size: f64) -> Result<SweepRow, CliError> {
    let point = analytic_point(cfg, lambda, size)?;
    if !cfg.sweep.simulate {
        return Ok(SweepRow { point, hl_sim_positive: None, hl_sim_negative: None, n_equilibria: None, errors: String::new() });
    }
    let model = match build_model(cfg, lambda, size) {
        Ok(m) => m,
        Err(e) => {
            return Ok(SweepRow { point, hl_sim_positive: None, hl_sim_negative: None, n_equilibria: Some(0), errors: e.to_string() })
        }
    };
    let found = find_stable_states(&model, cfg.solver.seeds(), &cfg.solver.options());
    let mut pos = signed_mode1_ratio(&found, Sign::Positive, size);
    let mut neg = signed_mode1_ratio(&found, Sign::Negative, size);
    // A flat state is both the positive and the negative one.
    if let [only] = found.states.as_slice() {
        if only.height_ratio(size) < FLAT_HEIGHT_RATIO {
            pos = Some(only.height_ratio(size));
            neg = pos;
        }
    }
    let errors = found.failures.iter().map(|(s, e)| format!("{}: {e}", s.name())).collect::<Vec<_>>().join("; ");
    Ok(SweepRow { point, hl_sim_positive: pos, hl_sim_negative: neg, n_equilibria: Some(found.states.len()), errors })
}

/// Writes `sweep.csv`: one row per (L, λ), sizes outermost, in input order.
pub fn run_sweep(cfg: &StudyConfig, out: &Path) -> Result<Vec<SweepRow>, CliError> {
    let points = grid(cfg);
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(lam, l)| sweep_row(cfg, lam, l))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_, _>>()?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(SWEEP_CSV_HEADER).map_err(csv_err)?;
    for r in &rows {
        w.write_record(r.record()).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_file(out, "sweep.csv", &String::from_utf8(bytes).expect("CSV fields are UTF-8"))?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignResult {
    pub target: f64,
    pub free: FreeVariable,
    pub shape_law: ShapeLaw,
    pub solved: f64,
    /// Forward H/L at the solved parameter.
    pub forward_check: f64,
}

/// Solves the forward height law for the free variable and writes
/// `design.json`. The fixed parameters are the first pre-stretch and size.
pub fn run_design(
    cfg: &StudyConfig,
    target: Option<f64>,
    free: Option<FreeVariable>,
    out: &Path,
) -> Result<DesignResult, CliError> {
    let target = target
        .or(cfg.design.target)
        .ok_or_else(|| CliError::Config(ConfigError(vec![crate::config::FieldError { path: "design.target".into(), message: "required for design".into() }])))?;
    if !(target >= 0.0 && target.is_finite()) {
        return Err(CliError::Invalid(format!("target H/L must be a non-negative number, got {target}")));
    }
    let free = free.unwrap_or(cfg.design.free);
    let shape = cfg.design.shape_law;
    let lambda = cfg.prestretches()[0];
    let size = cfg.sizes()[0];
    let p = analytic_point(cfg, lambda, size)?;
    let fixed = AnalyticInput { c_s: p.c_s, d_eq: p.d_tri, length_l: size, prestretch: lambda, shape };
    let solved = inverse_design(target, free, &fixed)?;
    let check = match free {
        FreeVariable::Prestretch => AnalyticInput { prestretch: solved, ..fixed },
        FreeVariable::Size => AnalyticInput { length_l: solved, ..fixed },
    }
    .height_ratio()?;
    let result = DesignResult { target, free, shape_law: shape, solved, forward_check: check };
    write_json(
        out,
        "design.json",
        json!({
            "seed": cfg.seed,
            "target_hl": target,
            "free": free,
            "shape_law": shape,
            "solved": solved,
            "forward_hl": check,
            "fixed": {
                "lambda": lambda,
                "L_mm": size,
                "coverage": p.coverage,
                "C_s_N_per_m": p.c_s,
                "D_eq_uJ": p.d_tri,
            },
        }),
    )?;
    Ok(result)
}

/// File stem for each state: flat, positive, negative, or the seed name for
/// mode-2 states, made unique with a numeric suffix.
fn state_names(found: &StableStates, size: f64) -> Vec<String> {
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    found
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let base = if s.height_ratio(size) < FLAT_HEIGHT_RATIO {
                "flat".to_string()
            } else if s.mode_label == ModeLabel::Mode2 {
                found
                    .seed_states
                    .iter()
                    .find(|(seed, idx)| *idx == Some(i) && seed.name().starts_with("mode2"))
                    .map(|(seed, _)| seed.name().to_string())
                    .unwrap_or_else(|| "mode2".to_string())
            } else {
                match s.sign {
                    Sign::Positive => "positive".to_string(),
                    Sign::Negative => "negative".to_string(),
                }
            };
            let n = used.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}_{n}")
            }
        })
        .collect()
}

#[derive(Debug)]
pub struct SimulateResult {
    pub model: ShellModel,
    pub found: StableStates,
    pub files: Vec<String>,
}

/// Finds the stable states at the first pre-stretch and size, writes one OBJ
/// per state and `summary.json`. Fails with a solver error only when no seed
/// converged.
pub fn run_simulate(cfg: &StudyConfig, out: &Path) -> Result<SimulateResult, CliError> {
    let lambda = cfg.prestretches()[0];
    let size = cfg.sizes()[0];
    let point = analytic_point(cfg, lambda, size)?;
    let model = build_model(cfg, lambda, size)?;
    let found = find_stable_states(&model, cfg.solver.seeds(), &cfg.solver.options());
    let names = state_names(&found, size);
    let mut files = Vec::new();
    let mut states = Vec::new();
    for (s, name) in found.states.iter().zip(&names) {
        let file = format!("state_{name}.obj");
        write_file(out, &file, &obj_string(&model.mesh, &s.positions))?;
        states.push(json!({
            "file": file,
            "sign": s.sign,
            "mode": s.mode_label,
            "energy_total_uJ": s.energy_total,
            "energy_membrane_uJ": s.energy_membrane,
            "energy_bending_uJ": s.energy_bending,
            "height_mm": s.height,
            "hl": s.height_ratio(size),
            "gradient_norm": s.gradient_norm,
            "iterations": s.iterations,
            "evaluations": s.evaluations,
        }));
        files.push(file);
    }
    let seeds: Vec<Value> = found
        .seed_states
        .iter()
        .map(|(seed, idx)| {
            let error = found.failures.iter().find(|(s, _)| s == seed).map(|(_, e)| e.to_string());
            json!({ "seed": seed.name(), "state": idx.map(|i| files[i].clone()), "error": error })
        })
        .collect();
    write_json(
        out,
        "summary.json",
        json!({
            "seed": cfg.seed,
            "lambda": lambda,
            "L_mm": size,
            "vertices": model.num_vertices(),
            "faces": model.mesh.faces.len(),
            "edge_length_mm": cfg.edge_length_at(size),
            "hl_analytic_pyramid": point.hl_pyramid,
            "hl_analytic_spherical_cap": point.hl_spherical_cap,
            "n_equilibria": found.states.len(),
            "states": states,
            "seeds": seeds,
        }),
    )?;
    if found.states.is_empty() {
        let msgs: Vec<String> = found.failures.iter().map(|(s, e)| format!("{}: {e}", s.name())).collect();
        return Err(CliError::Solver(format!("no equilibrium converged ({})", msgs.join("; "))));
    }
    Ok(SimulateResult { model, found, files })
}

#[derive(Debug)]
pub struct SnapResult {
    pub outcome: kirigami_core::shellsim::SnapOutcome,
    pub start_sign: Sign,
    pub start_energy: f64,
    pub csv: String,
}

/// Pushes the positive state (or the only state) toward the other one and
/// writes `snap.csv`. When no snap happens a quoted trailer row says so.
pub fn run_snap(cfg: &StudyConfig, out: &Path) -> Result<SnapResult, CliError> {
    let lambda = cfg.prestretches()[0];
    let size = cfg.sizes()[0];
    let model = build_model(cfg, lambda, size)?;
    let opts = cfg.solver.options();
    let found = find_stable_states(&model, cfg.solver.seeds(), &opts);
    let start = found
        .states
        .iter()
        .find(|s| s.sign == Sign::Positive && s.mode_label != ModeLabel::Mode2)
        .or_else(|| found.states.first())
        .ok_or_else(|| CliError::Solver("no equilibrium converged to start from".into()))?;
    let control = SnapControl::DisplacementSteps { steps: cfg.snap.steps, range: cfg.snap.range };
    let outcome = snap_through(&model, start, control, None, &opts).map_err(|e| CliError::Solver(e.to_string()))?;
    let trailer = (!outcome.snapped).then(|| {
        format!("no snap-through: the structure returned to the start state after {} steps", outcome.curve.len())
    });
    let csv = snap_csv_string(&outcome.curve, trailer.as_deref());
    write_file(out, "snap.csv", &csv)?;
    Ok(SnapResult { start_sign: start.sign, start_energy: start.energy_total, outcome, csv })
}
