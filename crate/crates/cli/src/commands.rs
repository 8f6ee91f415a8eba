use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use binn::geometry::Vec2;
use binn::network::{Architecture, NetworkParams};
use binn::quadrature::QuadratureRule;
use binn::training::{loss_csv, train, TrainError};
use serde::{Deserialize, Serialize};

use crate::case::{runtime, Case};
use crate::config::RunConfig;
use crate::CliError;

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const LOSS_FILE: &str = "loss.csv";
pub const BOUNDARY_FILE: &str = "boundary.csv";
pub const INTERIOR_FILE: &str = "interior.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const EVAL_FILE: &str = "eval.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub problem: String,
    pub iterations: usize,
    pub final_loss: f64,
    pub boundary_rel_l2: Option<f64>,
    pub interior_rel_l2: Option<f64>,
    pub runtime_s: f64,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn rule(cfg: &RunConfig) -> Result<QuadratureRule, CliError> {
    QuadratureRule::gauss_legendre(cfg.quadrature.n_g).map_err(|e| CliError::Validation(format!("quadrature.n_g: {e}")))
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let out = cfg.output_dir();
    fs::create_dir_all(&out).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    Ok(out)
}

/// Train, then write the checkpoint, loss curve, boundary and interior
/// comparisons and the metrics summary into the output directory.
pub fn solve(cfg: &RunConfig) -> Result<Metrics, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let case = Case::from_config(cfg)?;
    let rule = rule(cfg)?;
    let mut tc = cfg.train_config(case.default_iterations)?;
    let out = prepare_out(cfg)?;
    let ckpt = out.join(CHECKPOINT_FILE);
    tc.checkpoint_path = Some(ckpt.clone());
    let asm = case.problem.assemble(&rule).map_err(|e| CliError::Validation(format!("problem: {e}")))?;
    let arch = Architecture { input: 2, width: cfg.network.width, blocks: cfg.network.blocks, output: case.n_u() };
    let outcome = match train(&asm, arch, &tc) {
        Ok(o) => o,
        Err(TrainError::Config(m)) => return Err(CliError::Validation(format!("train: {m}"))),
        Err(e) => return Err(runtime(e)),
    };
    write(&out.join(LOSS_FILE), &loss_csv(&outcome.loss_history))?;
    outcome.params.save(&ckpt, tc.iterations).map_err(runtime)?;

    let boundary = case.boundary(&outcome.params)?;
    write(&out.join(BOUNDARY_FILE), &boundary.to_csv(false))?;
    let interior = case.interior(&outcome.params, &rule, &case.interior_points(), cfg.refine())?;
    write(&out.join(INTERIOR_FILE), &interior.to_csv(false))?;

    let metrics = Metrics {
        problem: case.label.clone(),
        iterations: tc.iterations,
        final_loss: *outcome.loss_history.last().expect("history holds the initial loss"),
        boundary_rel_l2: boundary.rel_l2,
        interior_rel_l2: interior.rel_l2,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&metrics).map_err(runtime)?;
    write(&out.join(METRICS_FILE), &(json + "\n"))?;
    Ok(metrics)
}

/// Points file: one `x1,x2` (or whitespace-separated) pair per line; blank
/// lines, `#` comments and a leading header line are skipped.
pub fn parse_points(text: &str) -> Result<Vec<Vec2>, CliError> {
    let mut out = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => out.push(Vec2::new(v[0], v[1])),
            None if first => {}
            _ => return Err(CliError::Validation(format!("points line {}: expected two finite numbers, got `{line}`", i + 1))),
        }
        first = false;
    }
    Ok(out)
}

/// Interior values of a checkpoint at the listed points. Points inside the
/// clearance band are evaluated and flagged in `margin_warning`.
pub fn eval(cfg: &RunConfig, checkpoint: &Path, points: &Path) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let case = Case::from_config(cfg)?;
    let rule = rule(cfg)?;
    let (params, _) = NetworkParams::load(checkpoint)
        .map_err(|e| CliError::Validation(format!("checkpoint {}: {e}", checkpoint.display())))?;
    if params.arch.output != case.n_u() {
        return Err(CliError::Validation(format!(
            "checkpoint has {} outputs but problem `{}` needs {}",
            params.arch.output,
            case.label,
            case.n_u()
        )));
    }
    let text = fs::read_to_string(points)
        .map_err(|e| CliError::Validation(format!("cannot read points {}: {e}", points.display())))?;
    let pts = parse_points(&text)?;
    let report = case.interior(&params, &rule, &pts, cfg.refine())?;
    let warned = report.near_boundary.iter().filter(|&&w| w).count() / case.n_u();
    if warned > 0 {
        eprintln!("warning: {warned} point(s) closer than the clearance margin to the boundary");
    }
    let out = prepare_out(cfg)?;
    let path = out.join(EVAL_FILE);
    write(&path, &report.to_csv(true))?;
    Ok(path)
}
