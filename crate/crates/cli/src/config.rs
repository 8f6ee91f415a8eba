//! Run configuration: a JSON document, overridden field by field by flags.
//!
//! Precedence, highest first: command-line flag, config file, `BINN_OUT_DIR`
//! (output directory only), built-in default. Unset iteration counts fall back
//! to the benchmark's own count.

use std::path::{Path, PathBuf};

use binn::benchmarks::BenchmarkName;
use binn::bie_elastic::KernelKind;
use binn::bie_potential::DomainKind;
use binn::geometry::LoopKind;
use binn::kernels::Material;
use binn::quadrature::MAX_ORDER;
use binn::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUT_DIR_ENV: &str = "BINN_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "binn-out";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<ProblemConfig>,
    pub train: TrainSection,
    pub network: NetworkSection,
    pub quadrature: QuadratureSection,
    pub output: Option<PathBuf>,
    /// Segment subdivision used for interior evaluation.
    pub refine: Option<usize>,
}

/// A benchmark name or an inline problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemConfig {
    Named(BenchmarkName),
    Inline(InlineProblem),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub iterations: Option<usize>,
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub checkpoint_every: Option<usize>,
    pub threads: Option<usize>,
    pub batch_size: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub width: usize,
    /// Residual blocks.
    pub blocks: usize,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self { width: 20, blocks: 2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub n_g: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self { n_g: 10 }
    }
}

/// Boundary value problem given directly in the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InlineProblem {
    Potential {
        #[serde(default = "interior")]
        domain: DomainKind,
        loops: Vec<InlineLoop>,
        #[serde(default)]
        exact: Option<LinearField>,
    },
    Elastic {
        material: Material,
        #[serde(default = "full_plane")]
        kernel: KernelKind,
        loops: Vec<InlineLoop>,
        #[serde(default)]
        exact: Option<LinearField>,
    },
}

fn interior() -> DomainKind {
    DomainKind::Interior
}

fn full_plane() -> KernelKind {
    KernelKind::FullPlane
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineLoop {
    pub kind: LoopKind,
    pub pieces: Vec<InlinePiece>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlinePiece {
    pub curve: CurveConfig,
    pub segments: usize,
    pub bc: BcConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveConfig {
    Line { start: [f64; 2], end: [f64; 2] },
    /// Angles in radians; `end_angle < start_angle` runs clockwise.
    Arc { center: [f64; 2], radius: f64, start_angle: f64, end_angle: f64 },
}

/// `value + gradient · x + normal · n` (potential problems use the first
/// component). The `normal` term expresses fluxes and tractions of a linear
/// field on curved pieces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearData {
    pub value: [f64; 2],
    pub gradient: [[f64; 2]; 2],
    pub normal: [[f64; 2]; 2],
}

impl LinearData {
    pub fn eval(&self, x: [f64; 2], n: [f64; 2]) -> [f64; 2] {
        let (g, m) = (&self.gradient, &self.normal);
        let row = |k: usize| self.value[k] + g[k][0] * x[0] + g[k][1] * x[1] + m[k][0] * n[0] + m[k][1] * n[1];
        [row(0), row(1)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    #[serde(rename = "type")]
    pub kind: BcKind,
    #[serde(default)]
    pub value: [f64; 2],
    #[serde(default)]
    pub gradient: [[f64; 2]; 2],
    #[serde(default)]
    pub normal: [[f64; 2]; 2],
}

impl BcConfig {
    pub fn data(&self) -> LinearData {
        LinearData { value: self.value, gradient: self.gradient, normal: self.normal }
    }
}

/// Linear reference solution `value + gradient · x`, exact for both operators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearField {
    pub value: [f64; 2],
    pub gradient: [[f64; 2]; 2],
}

impl LinearField {
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        LinearData { value: self.value, gradient: self.gradient, normal: [[0.0; 2]; 2] }.eval(x, [0.0; 2])
    }
}

/// Values given on the command line; `None` leaves the config untouched.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub problem: Option<BenchmarkName>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub learning_rate: Option<f64>,
    pub width: Option<usize>,
    pub n_g: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub refine: Option<usize>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = o.problem {
            self.problem = Some(ProblemConfig::Named(p));
        }
        let t = &mut self.train;
        t.iterations = o.iterations.or(t.iterations);
        t.seed = o.seed.or(t.seed);
        t.learning_rate = o.learning_rate.or(t.learning_rate);
        t.threads = o.threads.or(t.threads);
        if let Some(w) = o.width {
            self.network.width = w;
        }
        if let Some(n) = o.n_g {
            self.quadrature.n_g = n;
        }
        if o.out.is_some() {
            self.output = o.out.clone();
        }
        self.refine = o.refine.or(self.refine);
    }

    /// Output directory: config/flag, then `BINN_OUT_DIR`, then `binn-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn refine(&self) -> usize {
        self.refine.unwrap_or(1)
    }

    /// Field-level checks that do not need the problem built.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        let n = self.quadrature.n_g;
        if n < 2 || n % 2 != 0 || n > MAX_ORDER {
            return bad(format!(
                "quadrature.n_g must be even and within 2..={MAX_ORDER} (the singular rules pair ±ξ nodes), got {n}"
            ));
        }
        if self.network.width == 0 {
            return bad("network.width must be at least 1".into());
        }
        if self.refine() == 0 {
            return bad("refine must be at least 1".into());
        }
        if self.train.threads == Some(0) {
            return bad("train.threads must be at least 1".into());
        }
        if self.problem.is_none() {
            return bad("problem is required (use --problem or a config file)".into());
        }
        if let Some(ProblemConfig::Inline(p)) = &self.problem {
            let loops = match p {
                InlineProblem::Potential { loops, .. } | InlineProblem::Elastic { loops, .. } => loops,
            };
            if loops.is_empty() {
                return bad("problem.loops must not be empty".into());
            }
            for (i, l) in loops.iter().enumerate() {
                for (j, piece) in l.pieces.iter().enumerate() {
                    if piece.segments == 0 {
                        return bad(format!("problem.loops[{i}].pieces[{j}].segments must be at least 1"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Training settings, with `default_iterations` when none is given.
    pub fn train_config(&self, default_iterations: usize) -> Result<TrainConfig, CliError> {
        let t = &self.train;
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            iterations: t.iterations.unwrap_or(default_iterations),
            learning_rate: t.learning_rate.unwrap_or(d.learning_rate),
            beta1: t.beta1.unwrap_or(d.beta1),
            beta2: t.beta2.unwrap_or(d.beta2),
            epsilon: t.epsilon.unwrap_or(d.epsilon),
            seed: t.seed.unwrap_or(d.seed),
            checkpoint_every: t.checkpoint_every.unwrap_or(d.checkpoint_every),
            checkpoint_path: None,
            threads: t.threads.unwrap_or(d.threads),
            batch_size: t.batch_size,
        };
        cfg.validate().map_err(|e| CliError::Validation(format!("train: {e}")))?;
        Ok(cfg)
    }
}
