//! Adam and the full-batch training loop over a precomputed [`Assembly`].
//!
//! One iteration: evaluate the network and its spatial tangents at every
//! evaluation point, map them to slot values `u`, form `R = M u + k` and the
//! loss `Σ w R²`, then pull `∂L/∂u = 2 Mᵀ(w ∘ R)` back through the network.
//! Points are split into contiguous chunks (one per thread); chunk
//! gradients are summed in chunk order.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::Assembly;
use crate::autodiff::{record_network, AutodiffError, RecordedNetwork, Slot, Tape, Var};
use crate::network::{Architecture, NetworkError, NetworkParams};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Write a checkpoint every this many iterations (when a path is set).
    pub checkpoint_every: usize,
    pub checkpoint_path: Option<PathBuf>,
    pub threads: usize,
    /// Residual rows drawn per iteration; `None` trains on all of them.
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            checkpoint_every: 1000,
            checkpoint_path: None,
            threads: 1,
            batch_size: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {b}"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be at least 1".into());
        }
        if self.batch_size == Some(0) {
            return bad("batch_size must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },
    #[error("non-finite loss at iteration {iteration}; last finite parameters kept")]
    NonFiniteLoss { iteration: usize, last_finite: Box<NetworkParams> },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// Bias-corrected Adam update in place.
pub fn adam_step(theta: &mut [f64], grad: &[f64], state: &mut AdamState, cfg: &TrainConfig) -> Result<(), TrainError> {
    if grad.len() != theta.len() || state.m.len() != theta.len() {
        return Err(TrainError::Config("gradient and parameter shapes differ".into()));
    }
    if !grad.iter().all(|g| g.is_finite()) {
        return Err(TrainError::NonFiniteGradient { iteration: state.t as usize });
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..theta.len() {
        let g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        theta[i] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.epsilon);
    }
    Ok(())
}

/// Contiguous block of evaluation points with the slots read from it.
struct Chunk {
    start: usize,
    end: usize,
    slot_ids: Vec<usize>,
    local: Vec<Slot>,
}

struct Recorded<'a> {
    tape: Tape<'a>,
    net: RecordedNetwork,
    u: Var,
}

/// Loss and gradient evaluator bound to one assembly.
pub struct Objective<'a> {
    asm: &'a Assembly,
    chunks: Vec<Chunk>,
}

impl<'a> Objective<'a> {
    pub fn new(asm: &'a Assembly, threads: usize) -> Self {
        let n = asm.points.len();
        let k = threads.clamp(1, n.max(1));
        let bounds: Vec<(usize, usize)> = (0..k).map(|i| (i * n / k, (i + 1) * n / k)).collect();
        let mut chunks: Vec<Chunk> =
            bounds.iter().map(|&(start, end)| Chunk { start, end, slot_ids: Vec::new(), local: Vec::new() }).collect();
        for (sid, s) in asm.slots.iter().enumerate() {
            let c = bounds.iter().position(|&(a, b)| s.point >= a && s.point < b).expect("slot point in range");
            chunks[c].slot_ids.push(sid);
            chunks[c].local.push(Slot { point: s.point - bounds[c].0, terms: s.terms.clone() });
        }
        Self { asm, chunks }
    }

    /// `(L, ∂L/∂θ)`; `rows` restricts the loss to a subset of residuals
    /// (weights rescaled so the expectation matches the full loss).
    pub fn loss_and_gradient(&'a self, params: &NetworkParams, rows: Option<&[usize]>) -> Result<(f64, Vec<f64>), TrainError> {
        let asm = self.asm;
        let parallel = self.chunks.len() > 1;
        let run = |c: &'a Chunk| -> Result<Recorded<'a>, AutodiffError> {
            let mut tape = Tape::new();
            let net = record_network(&mut tape, params, &asm.points[c.start..c.end]);
            let u = tape.combine(net.streams(), &c.local);
            if let Some(e) = tape.error() {
                return Err(e.clone());
            }
            Ok(Recorded { tape, net, u })
        };
        let recorded: Vec<Recorded<'a>> = if parallel {
            std::thread::scope(|s| {
                let hs: Vec<_> = self.chunks.iter().map(|c| s.spawn(move || run(c))).collect();
                hs.into_iter().map(|h| h.join().expect("worker panicked")).collect::<Result<Vec<_>, _>>()
            })?
        } else {
            vec![run(&self.chunks[0])?]
        };
        let mut u = vec![0.0; asm.slots.len()];
        for (c, r) in self.chunks.iter().zip(&recorded) {
            for (&sid, &v) in c.slot_ids.iter().zip(&r.tape.value(r.u).data) {
                u[sid] = v;
            }
        }
        let mu = asm.matrix.matvec(&u);
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..mu.len()).collect();
                &all
            }
        };
        let scale = mu.len() as f64 / rows.len().max(1) as f64;
        let mut loss = 0.0;
        let mut gu = vec![0.0; u.len()];
        for &r in rows {
            let res = mu[r] + asm.known[r];
            let w = asm.weights[r] * scale;
            loss += w * res * res;
            let f = 2.0 * w * res;
            for (g, m) in gu.iter_mut().zip(asm.matrix.row(r)) {
                *g += f * m;
            }
        }
        if !loss.is_finite() {
            return Ok((loss, vec![f64::NAN; params.values.len()]));
        }
        let gu = &gu;
        let back = |c: &Chunk, r: &Recorded| -> Result<Vec<f64>, AutodiffError> {
            let seed: Vec<f64> = c.slot_ids.iter().map(|&s| gu[s]).collect();
            let grads = r.tape.backward_seeded(r.u, &seed)?;
            Ok(r.net.gradient(params, &grads))
        };
        let parts: Vec<Vec<f64>> = if parallel {
            std::thread::scope(|s| {
                let hs: Vec<_> =
                    self.chunks.iter().zip(&recorded).map(|(c, r)| s.spawn(move || back(c, r))).collect();
                hs.into_iter().map(|h| h.join().expect("worker panicked")).collect::<Result<Vec<_>, _>>()
            })?
        } else {
            vec![back(&self.chunks[0], &recorded[0])?]
        };
        let mut grad = vec![0.0; params.values.len()];
        for p in parts {
            for (g, v) in grad.iter_mut().zip(p) {
                *g += v;
            }
        }
        Ok((loss, grad))
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Loss at the initial parameters and after every update
    /// (`iterations + 1` entries).
    pub loss_history: Vec<f64>,
    pub runtime_s: f64,
}

/// Trains a freshly initialised network of shape `arch`.
pub fn train(asm: &Assembly, arch: Architecture, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    arch.validate()?;
    if arch.output != asm.n_u {
        return Err(TrainError::Config(format!(
            "network has {} outputs but the problem has {} unknown components",
            arch.output, asm.n_u
        )));
    }
    train_from(asm, NetworkParams::init_xavier(arch, cfg.seed), cfg)
}

/// Continues training from `params`.
pub fn train_from(asm: &Assembly, mut params: NetworkParams, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let start = Instant::now();
    let obj = Objective::new(asm, cfg.threads);
    let mut state = AdamState::new(params.values.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ba7c);
    let n_rows = asm.rows.len();
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    let mut last_finite = params.clone();
    for it in 0..=cfg.iterations {
        let batch: Option<Vec<usize>> = match cfg.batch_size {
            Some(b) if b < n_rows && it < cfg.iterations => {
                let mut v = sample(&mut rng, n_rows, b).into_vec();
                v.sort_unstable();
                Some(v)
            }
            _ => None,
        };
        let (loss, grad) = obj.loss_and_gradient(&params, batch.as_deref())?;
        if !loss.is_finite() {
            if let Some(path) = &cfg.checkpoint_path {
                last_finite.save(path, it.saturating_sub(1))?;
            }
            return Err(TrainError::NonFiniteLoss { iteration: it, last_finite: Box::new(last_finite) });
        }
        history.push(loss);
        last_finite.values.copy_from_slice(&params.values);
        if it == cfg.iterations {
            break;
        }
        if let Err(e) = adam_step(&mut params.values, &grad, &mut state, cfg) {
            if let Some(path) = &cfg.checkpoint_path {
                last_finite.save(path, it)?;
            }
            return Err(match e {
                TrainError::NonFiniteGradient { .. } => TrainError::NonFiniteGradient { iteration: it },
                e => e,
            });
        }
        if let Some(path) = &cfg.checkpoint_path {
            if (it + 1) % cfg.checkpoint_every == 0 {
                params.save(path, it + 1)?;
            }
        }
    }
    if let Some(path) = &cfg.checkpoint_path {
        params.save(path, cfg.iterations)?;
    }
    Ok(TrainOutcome { params, loss_history: history, runtime_s: start.elapsed().as_secs_f64() })
}

/// `iteration,loss` CSV.
pub fn loss_csv(history: &[f64]) -> String {
    let mut s = String::from("iteration,loss\n");
    for (i, l) in history.iter().enumerate() {
        s.push_str(&format!("{i},{l:e}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bie_potential::{DomainKind, PotentialProblem};
    use crate::geometry::{build_boundary, flower_pieces, BoundaryCondition, BoundaryData, GeometrySpec, LoopKind, LoopSpec, Vec2};
    use crate::quadrature::QuadratureRule;
    use rand::Rng;

    fn small_assembly() -> Assembly {
        let bc = BoundaryCondition::Dirichlet(BoundaryData::scalar(|x: Vec2, _| x.x1.cos() * x.x2.cosh()));
        let b = build_boundary(&GeometrySpec {
            loops: vec![LoopSpec { kind: LoopKind::Outer, region_id: 0, pieces: flower_pieces(3, bc) }],
        })
        .unwrap();
        PotentialProblem::new(b, DomainKind::Interior).unwrap().assemble(&QuadratureRule::gauss_legendre(6).unwrap()).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let cfg = TrainConfig::default();
        let mut th = vec![0.3, -1.0, 2.0];
        let mut st = AdamState::new(3);
        adam_step(&mut th, &[0.0; 3], &mut st, &cfg).unwrap();
        assert_eq!(th, vec![0.3, -1.0, 2.0]);
        assert!(st.m.iter().chain(&st.v).all(|&x| x == 0.0));
        assert_eq!(st.t, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = TrainConfig::default();
        let g = [2.5, -0.1, 1e-3];
        let mut th = vec![0.0; 3];
        let mut st = AdamState::new(3);
        adam_step(&mut th, &g, &mut st, &cfg).unwrap();
        for (t, g) in th.iter().zip(g) {
            assert!((t + cfg.learning_rate * g.signum()).abs() < 1e-3 * cfg.learning_rate, "{t}");
        }
    }

    /// Second evaluator written from the update formulas.
    fn adam_reference(theta: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], t: i32, c: &TrainConfig) {
        for i in 0..theta.len() {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            let mh = m[i] / (1.0 - c.beta1.powi(t));
            let vh = v[i] / (1.0 - c.beta2.powi(t));
            theta[i] -= c.learning_rate * mh / (vh.sqrt() + c.epsilon);
        }
    }

    #[test]
    fn matches_reference_bitwise() {
        let cfg = TrainConfig { learning_rate: 3e-3, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 17;
        let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = a.clone();
        let mut st = AdamState::new(n);
        let (mut m, mut v) = (vec![0.0; n], vec![0.0; n]);
        for t in 1..=25 {
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            adam_step(&mut a, &g, &mut st, &cfg).unwrap();
            adam_reference(&mut b, &g, &mut m, &mut v, t, &cfg);
            assert_eq!(a, b);
            assert!(st.v.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut st = AdamState::new(2);
        let e = adam_step(&mut [0.0, 0.0], &[1.0, f64::NAN], &mut st, &TrainConfig::default());
        assert!(matches!(e, Err(TrainError::NonFiniteGradient { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let asm = small_assembly();
        let p = NetworkParams::init_xavier(Architecture::new(6, 1), 8);
        let (l, g) = Objective::new(&asm, 1).loss_and_gradient(&p, None).unwrap();
        assert!((l - asm.loss(&p)).abs() <= 1e-12 * l);
        for i in (0..p.values.len()).step_by(7) {
            let h = 1e-6;
            let mut q = p.clone();
            q.values[i] += h;
            let lp = asm.loss(&q);
            q.values[i] -= 2.0 * h;
            let lm = asm.loss(&q);
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-4), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn chunked_gradient_agrees() {
        let asm = small_assembly();
        let p = NetworkParams::init_xavier(Architecture::new(6, 1), 9);
        let (l1, g1) = Objective::new(&asm, 1).loss_and_gradient(&p, None).unwrap();
        let (l3, g3) = Objective::new(&asm, 3).loss_and_gradient(&p, None).unwrap();
        assert!((l1 - l3).abs() <= 1e-14 * l1);
        for (a, b) in g1.iter().zip(&g3) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn zero_iterations_and_determinism() {
        let asm = small_assembly();
        let arch = Architecture::new(6, 1);
        let cfg = TrainConfig { iterations: 0, seed: 5, ..Default::default() };
        let out = train(&asm, arch, &cfg).unwrap();
        assert_eq!(out.params, NetworkParams::init_xavier(arch, 5));
        assert_eq!(out.loss_history.len(), 1);
        let cfg = TrainConfig { iterations: 30, seed: 5, ..Default::default() };
        let a = train(&asm, arch, &cfg).unwrap();
        let b = train(&asm, arch, &cfg).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.params, b.params);
        assert!(a.loss_history[30] < a.loss_history[0]);
    }

    #[test]
    fn checkpoint_written_and_batches_run() {
        let asm = small_assembly();
        let dir = std::env::temp_dir().join(format!("binn-train-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ck.txt");
        let cfg = TrainConfig {
            iterations: 4,
            checkpoint_every: 2,
            checkpoint_path: Some(path.clone()),
            batch_size: Some(5),
            ..Default::default()
        };
        let out = train(&asm, Architecture::new(6, 1), &cfg).unwrap();
        let (p, it) = NetworkParams::load(&path).unwrap();
        assert_eq!(it, 4);
        assert_eq!(p, out.params);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn output_mismatch_rejected() {
        let asm = small_assembly();
        assert!(matches!(train(&asm, Architecture::new(6, 2), &TrainConfig::default()), Err(TrainError::Config(_))));
    }
}
