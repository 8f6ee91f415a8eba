//! Residual-block MLP `φ(x; θ)` with tanh activations.
//!
//! Layout: a dense stem `2 → h`, `blocks` residual blocks
//! `a ↦ a + tanh(W² tanh(W¹ a + b¹) + b²)`, and a linear head `h → n_u`.
//! All parameters live in one flat vector; [`Architecture::layers`] gives
//! the offsets.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dual::{Dual2, Scalar};
use crate::geometry::Vec2;

pub const CHECKPOINT_MAGIC: &str = "binn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub width: usize,
    pub blocks: usize,
    pub output: usize,
}

impl Architecture {
    pub fn new(width: usize, output: usize) -> Self {
        Self { input: 2, width, blocks: 2, output }
    }

    /// Dense layers in evaluation order.
    pub fn layers(&self) -> Vec<LayerShape> {
        let mut out = Vec::with_capacity(2 + 2 * self.blocks);
        let mut offset = 0;
        let mut push = |rows: usize, cols: usize| {
            let l = LayerShape { weight: offset, bias: offset + rows * cols, rows, cols };
            offset += rows * cols + rows;
            out.push(l);
        };
        push(self.width, self.input);
        for _ in 0..2 * self.blocks {
            push(self.width, self.width);
        }
        push(self.output, self.width);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().last().map(|l| l.bias + l.rows).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.input != 2 || self.width == 0 || self.output == 0 {
            return Err(NetworkError::Architecture(format!(
                "need input 2 and positive width/output, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Offsets of one dense layer `rows × cols` inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub weight: usize,
    pub bias: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub arch: Architecture,
    pub values: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(arch: Architecture) -> Self {
        Self { arch, values: vec![0.0; arch.parameter_count()] }
    }

    /// Weights uniform in `±√(6/(fan_in + fan_out))`, biases zero.
    pub fn init_xavier(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(arch);
        for l in arch.layers() {
            let bound = (6.0 / (l.rows + l.cols) as f64).sqrt();
            for w in &mut p.values[l.weight..l.weight + l.rows * l.cols] {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        p
    }

    pub fn weight(&self, l: &LayerShape) -> &[f64] {
        &self.values[l.weight..l.weight + l.rows * l.cols]
    }

    pub fn bias(&self, l: &LayerShape) -> &[f64] {
        &self.values[l.bias..l.bias + l.rows]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Network evaluation over any [`Scalar`].
    pub fn forward_generic<S: Scalar>(&self, x: [S; 2]) -> Vec<S> {
        let layers = self.arch.layers();
        let dense = |l: &LayerShape, a: &[S]| -> Vec<S> {
            let w = self.weight(l);
            let b = self.bias(l);
            (0..l.rows)
                .map(|i| {
                    let mut acc = S::cst(b[i]);
                    for (j, aj) in a.iter().enumerate() {
                        acc = acc + S::cst(w[i * l.cols + j]) * *aj;
                    }
                    acc
                })
                .collect()
        };
        let mut a: Vec<S> = dense(&layers[0], &x).into_iter().map(S::tanh).collect();
        for b in 0..self.arch.blocks {
            let h: Vec<S> = dense(&layers[1 + 2 * b], &a).into_iter().map(S::tanh).collect();
            let g = dense(&layers[2 + 2 * b], &h);
            a = a.iter().zip(g).map(|(ai, gi)| *ai + gi.tanh()).collect();
        }
        dense(&layers[layers.len() - 1], &a)
    }

    pub fn forward(&self, x: Vec2) -> Vec<f64> {
        self.forward_generic([x.x1, x.x2])
    }

    /// Output and spatial Jacobian `jac[k] = [∂φ_k/∂x₁, ∂φ_k/∂x₂]`.
    pub fn forward_with_spatial_grad(&self, x: Vec2) -> (Vec<f64>, Vec<[f64; 2]>) {
        let out = self.forward_generic([Dual2::variable(x.x1, 0), Dual2::variable(x.x2, 1)]);
        (out.iter().map(|d| d.value).collect(), out.iter().map(|d| d.tangents).collect())
    }

    /// Text checkpoint; every value is written in shortest round-trip form.
    pub fn to_checkpoint(&self, iteration: usize) -> String {
        let a = &self.arch;
        let mut s = format!(
            "{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}\narch {} {} {} {}\niteration {iteration}\ncount {}\n",
            a.input,
            a.width,
            a.blocks,
            a.output,
            self.values.len()
        );
        for v in &self.values {
            let _ = writeln!(s, "{v:?}");
        }
        s
    }

    /// Parses [`to_checkpoint`](Self::to_checkpoint) output; returns the
    /// parameters and the stored iteration.
    pub fn from_checkpoint(text: &str) -> Result<(Self, usize), NetworkError> {
        let bad = |m: &str| NetworkError::Checkpoint(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let version = header
            .strip_prefix(CHECKPOINT_MAGIC)
            .and_then(|r| r.trim().strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| bad("missing header"))?;
        if version != CHECKPOINT_VERSION {
            return Err(NetworkError::Checkpoint(format!("unsupported version {version}")));
        }
        let mut field = |name: &str| -> Result<Vec<usize>, NetworkError> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            let rest = line.strip_prefix(name).ok_or_else(|| NetworkError::Checkpoint(format!("expected `{name}`")))?;
            rest.split_whitespace()
                .map(|t| t.parse().map_err(|_| NetworkError::Checkpoint(format!("bad `{name}` field"))))
                .collect()
        };
        let arch = field("arch")?;
        if arch.len() != 4 {
            return Err(bad("arch needs four fields"));
        }
        let arch = Architecture { input: arch[0], width: arch[1], blocks: arch[2], output: arch[3] };
        arch.validate()?;
        let iteration = *field("iteration")?.first().ok_or_else(|| bad("missing iteration"))?;
        let count = *field("count")?.first().ok_or_else(|| bad("missing count"))?;
        if count != arch.parameter_count() {
            return Err(NetworkError::Checkpoint(format!(
                "count {count} does not match architecture ({})",
                arch.parameter_count()
            )));
        }
        let values = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|_| NetworkError::Checkpoint(format!("bad value `{l}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != count {
            return Err(NetworkError::Checkpoint(format!("expected {count} values, found {}", values.len())));
        }
        Ok((Self { arch, values }, iteration))
    }

    pub fn save(&self, path: &Path, iteration: usize) -> Result<(), NetworkError> {
        std::fs::write(path, self.to_checkpoint(iteration))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, usize), NetworkError> {
        Self::from_checkpoint(&std::fs::read_to_string(path)?)
    }
}
