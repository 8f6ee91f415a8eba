//! The five reference problems, their closed-form or oracle solutions, and
//! error metrics along boundary trajectories and interior grids.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use crate::assembly::{deriv_from_jacobian, Assembly, AssemblyError, BieSystem, BoundaryTrace, Field, FnField, InteriorValue, DEFAULT_MARGIN};
use crate::bie_elastic::{interior_displacement, ElasticProblem, KernelKind};
use crate::bie_potential::{interior_value, DomainKind, PotentialProblem};
use crate::geometry::{
    build_boundary, circle_piece, flower_pieces, rectangle_pieces, Boundary, BoundaryCondition, BoundaryData, Curve,
    GeometrySpec, LoopKind, LoopSpec, PieceSpec, Vec2,
};
use crate::kernels::{flamant_displacement, Material, PlaneCondition};
use crate::oracle::{adaptive_integral, adaptive_tol, bem_solve, BemSolution, Singularity};
use crate::quadrature::QuadratureRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkName {
    Flower,
    Cylinder,
    Beam,
    Hertz,
    Inclusion,
}

impl BenchmarkName {
    pub const ALL: [BenchmarkName; 5] = [Self::Flower, Self::Cylinder, Self::Beam, Self::Hertz, Self::Inclusion];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Flower => "flower",
            Self::Cylinder => "cylinder",
            Self::Beam => "beam",
            Self::Hertz => "hertz",
            Self::Inclusion => "inclusion",
        }
    }
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| format!("unknown problem `{s}` (expected one of flower, cylinder, beam, hertz, inclusion)"))
    }
}

#[derive(Clone, Debug)]
pub enum Problem {
    Potential(PotentialProblem),
    Elastic(ElasticProblem),
}

impl Problem {
    pub fn n_u(&self) -> usize {
        match self {
            Problem::Potential(_) => 1,
            Problem::Elastic(_) => 2,
        }
    }

    pub fn boundary(&self) -> &Boundary {
        match self {
            Problem::Potential(p) => &p.boundary,
            Problem::Elastic(p) => &p.boundary,
        }
    }

    pub fn system(&self) -> BieSystem {
        match self {
            Problem::Potential(p) => p.system(),
            Problem::Elastic(p) => p.system(),
        }
    }

    pub fn assemble(&self, rule: &QuadratureRule) -> Result<Assembly, AssemblyError> {
        match self {
            Problem::Potential(p) => p.assemble(rule),
            Problem::Elastic(p) => p.assemble(rule),
        }
    }

    pub fn interior(&self, field: &dyn Field, rule: &QuadratureRule, y: Vec2, refine: usize) -> Result<InteriorValue, AssemblyError> {
        match self {
            Problem::Potential(p) => interior_value(p, field, rule, y, refine),
            Problem::Elastic(p) => interior_displacement(p, field, rule, y, refine),
        }
    }

    /// Interior values at many points from one boundary trace.
    pub fn interior_many(
        &self,
        field: &dyn Field,
        rule: &QuadratureRule,
        points: &[Vec2],
        refine: usize,
    ) -> Result<Vec<InteriorValue>, AssemblyError> {
        let trace = BoundaryTrace::new(&self.system(), field, rule, refine)?;
        points
            .iter()
            .map(|&y| match self {
                Problem::Potential(_) => trace.value_in_region(0, y, DEFAULT_MARGIN),
                Problem::Elastic(_) => trace.value(y, DEFAULT_MARGIN),
            })
            .collect()
    }

    /// Material whose Hooke law gives the derivative channel on `seg`.
    fn deriv_material(&self, seg: usize) -> Option<Material> {
        match self {
            Problem::Potential(_) => None,
            Problem::Elastic(p) => match p.boundary.segments[seg].bc {
                BoundaryCondition::Interface => p.interface_material,
                _ => Some(p.regions[0].material),
            },
        }
    }

    /// Boundary unknowns on segment `seg` at `x` (normal `n`): derivative
    /// channel on Dirichlet pieces, value on Neumann pieces, both on
    /// interfaces.
    pub fn unknowns(&self, seg: usize, value: &[f64], jac: &[[f64; 2]], n: Vec2) -> Vec<f64> {
        let n_u = self.n_u();
        let d = deriv_from_jacobian(self.deriv_material(seg).as_ref(), jac, n);
        match self.boundary().segments[seg].bc {
            BoundaryCondition::Dirichlet(_) => d[..n_u].to_vec(),
            BoundaryCondition::Neumann(_) => value[..n_u].to_vec(),
            BoundaryCondition::Interface => value[..n_u].iter().chain(&d[..n_u]).copied().collect(),
        }
    }
}

type VecFn = Arc<dyn Fn(Vec2) -> [f64; 2] + Send + Sync>;
type JacFn = Arc<dyn Fn(Vec2) -> [[f64; 2]; 2] + Send + Sync>;

/// Reference field of a benchmark.
#[derive(Clone)]
pub enum Reference {
    /// Closed-form field and its Jacobian (`jac[k][j] = ∂u_k/∂x_j`).
    Analytic { value: VecFn, jacobian: JacFn },
    /// Superposition of Flamant loads for the pressure `p(s)` on
    /// `x₁ = 0, |s| ≤ a`.
    Flamant { material: Material, half_width: f64, load: f64 },
    /// Two-domain constant-element BEM with the given element counts
    /// (square edge, interface).
    Oracle { per_edge: usize, interface: usize },
}

impl fmt::Debug for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::Analytic { .. } => f.write_str("Analytic"),
            Reference::Flamant { material, half_width, load } => {
                write!(f, "Flamant {{ {material:?}, a = {half_width}, P = {load} }}")
            }
            Reference::Oracle { per_edge, interface } => write!(f, "Oracle {{ {per_edge} per edge, {interface} on the interface }}"),
        }
    }
}

/// Hertz pressure `p(s) = (2P/(πa²))·√(a² − s²)`.
pub fn hertz_pressure(s: f64, a: f64, load: f64) -> f64 {
    2.0 * load / (PI * a * a) * (a * a - s * s).max(0.0).sqrt()
}

/// `u(y) = ∫ p(s) u^F((0, s), y) ds` by adaptive quadrature; surface points
/// use a log-weighted rule about `s = y₂`.
pub fn flamant_superposition(y: Vec2, mat: &Material, a: f64, load: f64) -> Result<[f64; 2], AssemblyError> {
    let err = |e: crate::oracle::OracleError| AssemblyError::Invalid(format!("Flamant reference at {y}: {e}"));
    if y.x1.abs() < 1e-12 {
        // on the surface the kernel reduces to f·[2(1−ν) ln|y₂ − s|, ±(1−2ν)π/2]
        let nu = mat.kernel_nu();
        let f = -1.0 / (2.0 * PI * mat.shear_modulus());
        let p = |t: f64| hertz_pressure(y.x2 + t, a, load);
        let (lo, hi) = (-a - y.x2, a - y.x2);
        let (mut log, mut below, mut above) = (0.0, 0.0, 0.0);
        if lo < 0.0 {
            let h = hi.min(0.0);
            log += adaptive_integral(p, lo, h, Singularity::LogAt0).map_err(err)?;
            below = adaptive_tol(p, lo, h, 1e-13).map_err(err)?;
        }
        if hi > 0.0 {
            let l = lo.max(0.0);
            log += adaptive_integral(p, l, hi, Singularity::LogAt0).map_err(err)?;
            above = adaptive_tol(p, l, hi, 1e-13).map_err(err)?;
        }
        // load below y (s < y₂): θ = π/2
        let half = (1.0 - 2.0 * nu) * PI / 2.0;
        return Ok([f * 2.0 * (1.0 - nu) * log, f * half * (below - above)]);
    }
    let mut out = [0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let f = |s: f64| {
            let p = hertz_pressure(s, a, load);
            if p == 0.0 {
                return 0.0;
            }
            flamant_displacement(Vec2::new(0.0, s), y, mat).map(|u| p * u[k]).unwrap_or(f64::NAN)
        };
        *o = adaptive_tol(f, -a, a, 1e-13).map_err(err)?;
    }
    Ok(out)
}

/// One compared quantity at one location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec2,
    pub component: usize,
    pub value: f64,
    pub reference: f64,
}

impl Sample {
    pub fn abs_error(&self) -> f64 {
        (self.value - self.reference).abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMetrics {
    pub abs_error: Vec<f64>,
    /// `None` when the reference has zero norm.
    pub rel_l2: Option<f64>,
    pub abs_l2: f64,
}

/// Pointwise absolute error and `‖pred − ref‖₂ / ‖ref‖₂`.
pub fn error_metrics(pred: &[f64], reference: &[f64]) -> Result<ErrorMetrics, AssemblyError> {
    if pred.len() != reference.len() {
        return Err(AssemblyError::Invalid(format!("{} predictions for {} references", pred.len(), reference.len())));
    }
    let abs_error: Vec<f64> = pred.iter().zip(reference).map(|(p, r)| (p - r).abs()).collect();
    let abs_l2 = abs_error.iter().map(|e| e * e).sum::<f64>().sqrt();
    let norm = reference.iter().map(|r| r * r).sum::<f64>().sqrt();
    Ok(ErrorMetrics { abs_error, rel_l2: (norm > 0.0).then(|| abs_l2 / norm), abs_l2 })
}

/// Samples with their error metrics.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub samples: Vec<Sample>,
    pub metrics: ErrorMetrics,
    /// Interior points inside the clearance band (interior comparisons only).
    pub near_boundary: Vec<bool>,
}

impl Comparison {
    fn new(samples: Vec<Sample>, near_boundary: Vec<bool>) -> Result<Self, AssemblyError> {
        let p: Vec<f64> = samples.iter().map(|s| s.value).collect();
        let r: Vec<f64> = samples.iter().map(|s| s.reference).collect();
        Ok(Self { metrics: error_metrics(&p, &r)?, samples, near_boundary })
    }

    pub fn rel_l2(&self) -> f64 {
        self.metrics.rel_l2.unwrap_or(self.metrics.abs_l2)
    }

    /// `x1,x2,component,value,reference,abs_error` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,component,value,reference,abs_error\n");
        for p in &self.samples {
            s.push_str(&format!("{},{},{},{:e},{:e},{:e}\n", p.x.x1, p.x.x2, p.component, p.value, p.reference, p.abs_error()));
        }
        s
    }
}

/// A point on the boundary with its segment and outward normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub x: Vec2,
    pub normal: Vec2,
    pub segment: usize,
}

/// `n` points evenly spaced in arc length (cell centres) over the given
/// segments.
pub fn trajectory(boundary: &Boundary, segments: &[usize], n: usize) -> Vec<TrajectoryPoint> {
    let lengths: Vec<f64> = segments.iter().map(|&s| boundary.segments[s].curve.length()).collect();
    let total: f64 = lengths.iter().sum();
    let mut out = Vec::with_capacity(n);
    let (mut k, mut acc) = (0, 0.0);
    for i in 0..n {
        let s = (i as f64 + 0.5) * total / n as f64;
        while k + 1 < segments.len() && s > acc + lengths[k] {
            acc += lengths[k];
            k += 1;
        }
        let xi = (2.0 * (s - acc) / lengths[k] - 1.0).clamp(-1.0, 1.0);
        let p = boundary.segments[segments[k]].point(xi);
        out.push(TrajectoryPoint { x: p.x, normal: p.normal, segment: segments[k] });
    }
    out
}

/// Benchmark problem with its reference solution and observation protocol.
#[derive(Debug)]
pub struct Benchmark {
    pub name: BenchmarkName,
    pub problem: Problem,
    pub reference: Reference,
    /// Desk-scale iteration count.
    pub iterations: usize,
    /// Boundary samples used for the boundary error curve.
    pub trajectory_points: usize,
    oracle: OnceLock<Result<(BieSystem, BemSolution), AssemblyError>>,
}

impl Benchmark {
    fn new(name: BenchmarkName, problem: Problem, reference: Reference, iterations: usize, trajectory_points: usize) -> Self {
        Self { name, problem, reference, iterations, trajectory_points, oracle: OnceLock::new() }
    }

    pub fn n_u(&self) -> usize {
        self.problem.n_u()
    }

    /// Two-domain BEM solution (inclusion only); solved once and cached.
    pub fn oracle(&self) -> Result<&(BieSystem, BemSolution), AssemblyError> {
        let Reference::Oracle { per_edge, interface } = self.reference else {
            return Err(AssemblyError::Invalid(format!("{} has no BEM oracle", self.name)));
        };
        self.oracle
            .get_or_init(|| {
                let p = inclusion_problem(per_edge, interface, 1.0)?;
                let sys = p.system();
                let sol = bem_solve(&sys)?;
                Ok((sys, sol))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Reference value at `y` (interior or boundary).
    pub fn reference_value(&self, y: Vec2) -> Result<[f64; 2], AssemblyError> {
        match &self.reference {
            Reference::Analytic { value, .. } => Ok(value(y)),
            Reference::Flamant { material, half_width, load } => flamant_superposition(y, material, *half_width, *load),
            Reference::Oracle { .. } => {
                let (sys, sol) = self.oracle()?;
                let region = if y.norm() < INCLUSION_RADIUS { 1 } else { 0 };
                sol.interior(sys, region, y)
            }
        }
    }

    /// Reference as a [`Field`] (analytic references only).
    pub fn reference_field(&self) -> Option<FnField<impl Fn(Vec2) -> (Vec<f64>, Vec<[f64; 2]>) + '_>> {
        match &self.reference {
            Reference::Analytic { value, jacobian } => {
                let n_u = self.n_u();
                Some(FnField(move |x: Vec2| {
                    let v = value(x);
                    let j = jacobian(x);
                    (v[..n_u].to_vec(), j[..n_u].to_vec())
                }))
            }
            _ => None,
        }
    }

    /// Boundary unknowns along the benchmark trajectory against the
    /// reference. For the inclusion: interface displacement and traction at
    /// the oracle's element midpoints.
    pub fn boundary_comparison(&self, field: &dyn Field) -> Result<Comparison, AssemblyError> {
        let mut samples = Vec::new();
        match &self.reference {
            Reference::Oracle { .. } => {
                let (sys, sol) = self.oracle()?;
                let Problem::Elastic(p) = &self.problem else { unreachable!("oracle reference is elastic") };
                let mat = p.interface_material.expect("inclusion has an interface material");
                for (j, seg) in sys.boundary.segments.iter().enumerate() {
                    if !matches!(seg.bc, BoundaryCondition::Interface) {
                        continue;
                    }
                    let pt = seg.point(0.0);
                    let (v, jac) = field.eval(pt.x);
                    let t = deriv_from_jacobian(Some(&mat), &jac, pt.normal);
                    for c in 0..2 {
                        samples.push(Sample { x: pt.x, component: c, value: v[c], reference: sol.value[j][c] });
                    }
                    for c in 0..2 {
                        samples.push(Sample { x: pt.x, component: 2 + c, value: t[c], reference: sol.deriv[j][c] });
                    }
                }
            }
            _ => {
                let b = self.problem.boundary();
                let segs: Vec<usize> = (0..b.len()).collect();
                for tp in trajectory(b, &segs, self.trajectory_points) {
                    let (v, jac) = field.eval(tp.x);
                    let pred = self.problem.unknowns(tp.segment, &v, &jac, tp.normal);
                    let reference = match &self.reference {
                        Reference::Analytic { value, jacobian } => {
                            let n_u = self.n_u();
                            self.problem.unknowns(tp.segment, &value(tp.x)[..n_u], &jacobian(tp.x)[..n_u], tp.normal)
                        }
                        // Neumann patch: the unknown is the displacement
                        _ => self.reference_value(tp.x)?.to_vec(),
                    };
                    for (c, (p, r)) in pred.iter().zip(&reference).enumerate() {
                        samples.push(Sample { x: tp.x, component: c, value: *p, reference: *r });
                    }
                }
            }
        }
        Comparison::new(samples, Vec::new())
    }

    /// Relative L2 errors of the interface displacement and traction
    /// separately (inclusion only).
    pub fn interface_errors(&self, field: &dyn Field) -> Result<(f64, f64), AssemblyError> {
        let c = self.boundary_comparison(field)?;
        let part = |lo: usize| {
            let s: Vec<&Sample> = c.samples.iter().filter(|s| s.component / 2 == lo).collect();
            let p: Vec<f64> = s.iter().map(|s| s.value).collect();
            let r: Vec<f64> = s.iter().map(|s| s.reference).collect();
            error_metrics(&p, &r).map(|m| m.rel_l2.unwrap_or(m.abs_l2))
        };
        Ok((part(0)?, part(1)?))
    }

    /// Interior grid respecting the clearance margin.
    pub fn interior_grid(&self) -> Vec<Vec2> {
        let m = DEFAULT_MARGIN;
        let b = self.problem.boundary();
        let keep = |x: Vec2| b.distance_to(x) >= m;
        let grid = |lo: Vec2, hi: Vec2, n: usize| -> Vec<Vec2> {
            let mut v = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let t = |k: usize| k as f64 / (n - 1) as f64;
                    v.push(Vec2::new(lo.x1 + (hi.x1 - lo.x1) * t(i), lo.x2 + (hi.x2 - lo.x2) * t(j)));
                }
            }
            v
        };
        match self.name {
            BenchmarkName::Flower => {
                grid(Vec2::new(-2.5, -2.5), Vec2::new(2.5, 2.5), 41).into_iter().filter(|&x| inside_flower(x) && keep(x)).collect()
            }
            BenchmarkName::Cylinder => {
                grid(Vec2::new(-10.0, -10.0), Vec2::new(10.0, 10.0), 20).into_iter().filter(|&x| x.norm() > 1.5 && keep(x)).collect()
            }
            BenchmarkName::Beam => grid(Vec2::new(m, -1.0 + m), Vec2::new(2.0 - m, 1.0 - m), 21),
            BenchmarkName::Hertz => grid(Vec2::new(m, -2.0), Vec2::new(4.0, 2.0), 21).into_iter().filter(|&x| keep(x)).collect(),
            BenchmarkName::Inclusion => {
                grid(Vec2::new(-2.5 + m, -2.5 + m), Vec2::new(2.5 - m, 2.5 - m), 21).into_iter().filter(|&x| keep(x)).collect()
            }
        }
    }

    /// Interior reconstruction on `points` against the reference.
    pub fn interior_comparison(
        &self,
        field: &dyn Field,
        rule: &QuadratureRule,
        points: &[Vec2],
        refine: usize,
    ) -> Result<Comparison, AssemblyError> {
        let mut samples = Vec::new();
        let mut near = Vec::new();
        let values = self.problem.interior_many(field, rule, points, refine)?;
        for (&y, v) in points.iter().zip(values) {
            let r = self.reference_value(y)?;
            for c in 0..self.n_u() {
                samples.push(Sample { x: y, component: c, value: v.value[c], reference: r[c] });
                near.push(v.near_boundary);
            }
        }
        Comparison::new(samples, near)
    }
}

fn pentagon_apothem() -> f64 {
    1.0 / (PI / 5.0).tan()
}

/// Pentagon of side 2 united with the five unit petal discs.
pub fn inside_flower(x: Vec2) -> bool {
    let ap = pentagon_apothem();
    let dirs = (0..5).map(|k| Vec2::from_polar(1.0, 2.0 * PI * k as f64 / 5.0));
    let in_pentagon = dirs.clone().all(|e| x.dot(e) <= ap);
    in_pentagon || dirs.into_iter().any(|e| (x - e * ap).norm() <= 1.0)
}

fn flower_u(x: Vec2) -> f64 {
    x.x1.sin() * x.x2.sinh() + x.x1.cos() * x.x2.cosh()
}

fn flower_grad(x: Vec2) -> [f64; 2] {
    let (a, b) = (x.x1, x.x2);
    [a.cos() * b.sinh() - a.sin() * b.cosh(), a.sin() * b.cosh() + a.cos() * b.sinh()]
}

/// Flower-shaped domain, `u = sin x₁ sinh x₂ + cos x₁ cosh x₂` prescribed on
/// all 100 segments.
pub fn make_flower() -> Benchmark {
    let bc = BoundaryCondition::Dirichlet(BoundaryData::scalar(|x, _| flower_u(x)));
    let b = build_boundary(&GeometrySpec {
        loops: vec![LoopSpec { kind: LoopKind::Outer, region_id: 0, pieces: flower_pieces(20, bc) }],
    })
    .expect("flower geometry");
    let p = PotentialProblem::new(b, DomainKind::Interior).expect("flower problem");
    let reference = Reference::Analytic {
        value: Arc::new(|x| [flower_u(x), 0.0]),
        jacobian: Arc::new(|x| [flower_grad(x), [0.0; 2]]),
    };
    Benchmark::new(BenchmarkName::Flower, Problem::Potential(p), reference, 20000, 2000)
}

pub const CYLINDER_RADIUS: f64 = 1.5;
pub const FREE_STREAM: f64 = 3.0;

/// Perturbation potential `u⁽²⁾ = a²‖v₀‖x₁/|x|²`.
pub fn cylinder_perturbation(x: Vec2) -> f64 {
    CYLINDER_RADIUS * CYLINDER_RADIUS * FREE_STREAM * x.x1 / x.norm_sq()
}

fn cylinder_grad(x: Vec2) -> [f64; 2] {
    let c = CYLINDER_RADIUS * CYLINDER_RADIUS * FREE_STREAM;
    let r2 = x.norm_sq();
    [c * (r2 - 2.0 * x.x1 * x.x1) / (r2 * r2), -2.0 * c * x.x1 * x.x2 / (r2 * r2)]
}

/// Uniform flow past a cylinder of radius 1.5, solved for the decaying
/// perturbation with `∂u⁽²⁾/∂n = −‖v₀‖ n₁` on 40 segments.
pub fn make_cylinder_flow() -> Benchmark {
    let bc = BoundaryCondition::Neumann(BoundaryData::scalar(|_, n| -FREE_STREAM * n.x1));
    let b = build_boundary(&GeometrySpec {
        loops: vec![LoopSpec {
            kind: LoopKind::Hole,
            region_id: 0,
            pieces: vec![circle_piece(Vec2::ZERO, CYLINDER_RADIUS, LoopKind::Hole, 40, bc)],
        }],
    })
    .expect("cylinder geometry");
    let p = PotentialProblem::new(b, DomainKind::Exterior).expect("cylinder problem");
    let reference = Reference::Analytic {
        value: Arc::new(|x| [cylinder_perturbation(x), 0.0]),
        jacobian: Arc::new(|x| [cylinder_grad(x), [0.0; 2]]),
    };
    Benchmark::new(BenchmarkName::Cylinder, Problem::Potential(p), reference, 10000, 1000)
}

/// Cantilever data: `L = D = 2`, `P = E = 1`, `ν = 0.3`.
pub mod beam {
    use crate::geometry::Vec2;

    pub const L: f64 = 2.0;
    pub const D: f64 = 2.0;
    pub const P: f64 = 1.0;
    pub const E: f64 = 1.0;
    pub const NU: f64 = 0.3;
    pub const I: f64 = D * D * D / 12.0;

    pub fn displacement(x: Vec2) -> [f64; 2] {
        let c = P / (6.0 * E * I);
        let (x1, x2) = (x.x1, x.x2);
        [
            -c * x2 * ((6.0 * L - 3.0 * x1) * x1 + (2.0 + NU) * (x2 * x2 - D * D / 4.0)),
            c * (3.0 * NU * x2 * x2 * (L - x1) + (4.0 + 5.0 * NU) * D * D * x1 / 4.0 + (3.0 * L - x1) * x1 * x1),
        ]
    }

    /// `jac[k][j] = ∂u_k/∂x_j`.
    pub fn jacobian(x: Vec2) -> [[f64; 2]; 2] {
        let c = P / (6.0 * E * I);
        let (x1, x2) = (x.x1, x.x2);
        [
            [-c * x2 * (6.0 * L - 6.0 * x1), -c * ((6.0 * L - 3.0 * x1) * x1 + (2.0 + NU) * (3.0 * x2 * x2 - D * D / 4.0))],
            [
                c * (-3.0 * NU * x2 * x2 + (4.0 + 5.0 * NU) * D * D / 4.0 + 6.0 * L * x1 - 3.0 * x1 * x1),
                c * 6.0 * NU * x2 * (L - x1),
            ],
        ]
    }

    /// `[σ₁₁, σ₂₂, σ₁₂]`.
    pub fn stress(x: Vec2) -> [f64; 3] {
        [-P * (L - x.x1) * x.x2 / I, 0.0, P / (2.0 * I) * (D * D / 4.0 - x.x2 * x.x2)]
    }
}

/// Beam material in plane stress (the closed form is a plane-stress
/// solution); `PlaneStrain` probes the sensitivity.
pub fn make_beam_with(plane: PlaneCondition) -> Benchmark {
    let m = Material::new(beam::E, beam::NU, plane).expect("beam material");
    let trac = move |x: Vec2, n: Vec2| {
        let s = beam::stress(x);
        [s[0] * n.x1 + s[2] * n.x2, s[2] * n.x1 + s[1] * n.x2]
    };
    let neu = BoundaryCondition::Neumann(BoundaryData::new(trac));
    let fix = BoundaryCondition::Dirichlet(BoundaryData::new(|x, _| beam::displacement(x)));
    let b = build_boundary(&GeometrySpec {
        loops: vec![LoopSpec {
            kind: LoopKind::Outer,
            region_id: 0,
            pieces: rectangle_pieces(Vec2::new(0.0, -beam::D / 2.0), Vec2::new(beam::L, beam::D / 2.0), [20; 4], [
                neu.clone(),
                neu.clone(),
                neu,
                fix,
            ]),
        }],
    })
    .expect("beam geometry");
    let p = ElasticProblem::single(b, m, KernelKind::FullPlane).expect("beam problem");
    let reference = Reference::Analytic { value: Arc::new(beam::displacement), jacobian: Arc::new(beam::jacobian) };
    Benchmark::new(BenchmarkName::Beam, Problem::Elastic(p), reference, 20000, 4000)
}

pub fn make_beam() -> Benchmark {
    make_beam_with(PlaneCondition::PlaneStress)
}

pub const HERTZ_HALF_WIDTH: f64 = 1.0;
pub const HERTZ_LOAD: f64 = 1.0;

pub fn hertz_material() -> Material {
    Material::new(1.0, 0.3, PlaneCondition::PlaneStrain).expect("hertz material")
}

/// Prescribed Hertz pressure on the patch `x₁ = 0, |x₂| ≤ 1` of a half-plane,
/// 20 segments, half-plane kernel.
pub fn make_hertz() -> Benchmark {
    let (a, load) = (HERTZ_HALF_WIDTH, HERTZ_LOAD);
    // traction −p n with n = (−1, 0)
    let bc = BoundaryCondition::Neumann(BoundaryData::new(move |x: Vec2, n: Vec2| {
        let p = hertz_pressure(x.x2, a, load);
        [-p * n.x1, -p * n.x2]
    }));
    let b = build_boundary(&GeometrySpec {
        loops: vec![LoopSpec {
            kind: LoopKind::Open,
            region_id: 0,
            pieces: vec![PieceSpec {
                curve: Curve::Line { start: Vec2::new(0.0, a), end: Vec2::new(0.0, -a) },
                segments: 20,
                bc,
            }],
        }],
    })
    .expect("hertz geometry");
    let m = hertz_material();
    let p = ElasticProblem::single(b, m, KernelKind::HalfPlane).expect("hertz problem");
    Benchmark::new(
        BenchmarkName::Hertz,
        Problem::Elastic(p),
        Reference::Flamant { material: m, half_width: a, load },
        10000,
        1000,
    )
}

pub const INCLUSION_RADIUS: f64 = 1.0;
pub const PLATE_HALF: f64 = 2.5;
pub const INCLUSION_BETA: f64 = 10.0;

/// 5 × 5 plate with a centred circular inclusion (`E₂ = 10 E₁`), left edge
/// clamped, unit tension on the right edge. `e_ratio` scales `E₂`.
pub fn inclusion_problem(per_edge: usize, interface: usize, e_ratio: f64) -> Result<ElasticProblem, AssemblyError> {
    let m1 = Material::new(1.0, 0.3, PlaneCondition::PlaneStrain)?;
    let m2 = Material::new(10.0 * e_ratio, 0.3, PlaneCondition::PlaneStrain)?;
    let free = BoundaryCondition::Neumann(BoundaryData::constant([0.0; 2]));
    let pull = BoundaryCondition::Neumann(BoundaryData::constant([1.0, 0.0]));
    let clamp = BoundaryCondition::Dirichlet(BoundaryData::constant([0.0; 2]));
    let h = PLATE_HALF;
    let b = build_boundary(&GeometrySpec {
        loops: vec![
            LoopSpec {
                kind: LoopKind::Outer,
                region_id: 0,
                pieces: rectangle_pieces(Vec2::new(-h, -h), Vec2::new(h, h), [per_edge; 4], [free.clone(), pull, free, clamp]),
            },
            LoopSpec {
                kind: LoopKind::Hole,
                region_id: 1,
                pieces: vec![circle_piece(Vec2::ZERO, INCLUSION_RADIUS, LoopKind::Hole, interface, BoundaryCondition::Interface)],
            },
        ],
    })
    .map_err(|e| AssemblyError::Invalid(e.to_string()))?;
    ElasticProblem::with_inclusion(b, m1, m2, INCLUSION_BETA)
}

/// 200 source points on the matrix boundary (120 on the plate edges, 80 on
/// the interface); reference from a 512-element two-domain BEM.
pub fn make_inclusion() -> Benchmark {
    let p = inclusion_problem(30, 80, 1.0).expect("inclusion problem");
    Benchmark::new(
        BenchmarkName::Inclusion,
        Problem::Elastic(p),
        Reference::Oracle { per_edge: 96, interface: 128 },
        50000,
        0,
    )
}

pub fn make(name: BenchmarkName) -> Benchmark {
    match name {
        BenchmarkName::Flower => make_flower(),
        BenchmarkName::Cylinder => make_cylinder_flow(),
        BenchmarkName::Beam => make_beam(),
        BenchmarkName::Hertz => make_hertz(),
        BenchmarkName::Inclusion => make_inclusion(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::adaptive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian(f: impl Fn(Vec2) -> f64, x: Vec2) -> f64 {
        let h = 1e-3;
        (f(x + Vec2::new(h, 0.0)) + f(x - Vec2::new(h, 0.0)) + f(x + Vec2::new(0.0, h)) + f(x - Vec2::new(0.0, h))
            - 4.0 * f(x))
            / (h * h)
    }

    #[test]
    fn flower_reference() {
        let b = make_flower();
        assert_eq!(b.reference_value(Vec2::ZERO).unwrap()[0], 1.0);
        assert_eq!(b.problem.boundary().len(), 100);
        assert!((b.problem.boundary().total_length() - 5.0 * PI).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut n = 0;
        while n < 100 {
            let x = Vec2::new(rng.gen_range(-2.4..2.4), rng.gen_range(-2.4..2.4));
            if !inside_flower(x) {
                continue;
            }
            n += 1;
            assert!(laplacian(flower_u, x).abs() < 1e-5);
        }
        // the source points lie on the flower boundary
        for y in b.problem.boundary().source_points() {
            assert!(inside_flower(y * 0.999) && !inside_flower(y * 1.001));
        }
    }

    #[test]
    fn cylinder_reference() {
        let b = make_cylinder_flow();
        assert!((cylinder_perturbation(Vec2::new(3.0, 0.0)) - 2.25).abs() < 1e-15);
        assert!(cylinder_perturbation(Vec2::new(100.0, 0.0)).abs() < 0.07);
        let total: f64 = b
            .problem
            .boundary()
            .segments
            .iter()
            .map(|s| {
                let BoundaryCondition::Neumann(d) = &s.bc else { panic!() };
                QuadratureRule::gauss_legendre(10).unwrap().iter().map(|(xi, w)| {
                    let p = s.point(xi);
                    w * p.jacobian * d.eval(p.x, p.normal)[0]
                }).sum::<f64>()
            })
            .sum();
        assert!(total.abs() < 1e-12);
        for x in [Vec2::new(2.0, 1.0), Vec2::new(-3.0, 4.0)] {
            assert!(laplacian(cylinder_perturbation, x).abs() < 1e-5);
        }
        // Neumann datum regenerated from the field
        for s in &b.problem.boundary().segments {
            let p = s.point(0.3);
            let g = cylinder_grad(p.x);
            let BoundaryCondition::Neumann(d) = &s.bc else { panic!() };
            assert!((g[0] * p.normal.x1 + g[1] * p.normal.x2 - d.eval(p.x, p.normal)[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn beam_reference() {
        let b = make_beam();
        assert_eq!(b.problem.boundary().len(), 80);
        assert!(beam::stress(Vec2::new(0.7, 1.0))[2].abs() < 1e-15);
        assert!(beam::stress(Vec2::new(0.7, -1.0))[2].abs() < 1e-15);
        assert!((beam::stress(Vec2::new(0.3, 0.0))[2] - 0.75).abs() < 1e-15);
        assert!((beam::stress(Vec2::new(0.0, 1.0))[0] + 3.0).abs() < 1e-15);
        let Problem::Elastic(p) = &b.problem else { panic!() };
        let m = p.regions[0].material;
        // Hooke on the closed-form displacement reproduces the closed-form stress
        for x in [Vec2::new(0.4, 0.3), Vec2::new(1.6, -0.9)] {
            let s = m.stress(beam::jacobian(x));
            let e = beam::stress(x);
            assert!((s[0][0] - e[0]).abs() < 1e-10 && (s[1][1] - e[1]).abs() < 1e-10 && (s[0][1] - e[2]).abs() < 1e-10);
        }
        // equilibrium by central differences of the stress
        let h = 1e-4;
        for x in [Vec2::new(0.5, 0.5), Vec2::new(1.5, -0.2)] {
            let s = |y: Vec2| m.stress(beam::jacobian(y));
            let d1 = |i: usize, j: usize| (s(x + Vec2::new(h, 0.0))[i][j] - s(x - Vec2::new(h, 0.0))[i][j]) / (2.0 * h);
            let d2 = |i: usize, j: usize| (s(x + Vec2::new(0.0, h))[i][j] - s(x - Vec2::new(0.0, h))[i][j]) / (2.0 * h);
            assert!((d1(0, 0) + d2(0, 1)).abs() < 1e-5);
            assert!((d1(1, 0) + d2(1, 1)).abs() < 1e-5);
        }
    }

    #[test]
    fn hertz_reference() {
        assert!((hertz_pressure(0.0, 1.0, 1.0) - 2.0 / PI).abs() < 1e-15);
        assert_eq!(hertz_pressure(1.0, 1.0, 1.0), 0.0);
        assert_eq!(hertz_pressure(-1.0, 1.0, 1.0), 0.0);
        let total = adaptive(|s| hertz_pressure(s, 1.0, 1.0), -1.0, 1.0).unwrap();
        assert!((total - 1.0).abs() < 1e-10);
        let b = make_hertz();
        let u0 = b.reference_value(Vec2::new(0.0, 0.0)).unwrap();
        let u1 = b.reference_value(Vec2::new(0.0, 0.5)).unwrap();
        assert!(u0[1].abs() < 1e-12, "symmetry: {}", u0[1]);
        assert!(u0[0] > u1[0]);
        // the surface rule agrees with the generic one just below the surface
        for y2 in [0.3, -0.7, 1.4] {
            let s = b.reference_value(Vec2::new(0.0, y2)).unwrap();
            let d = b.reference_value(Vec2::new(1e-7, y2)).unwrap();
            assert!((s[0] - d[0]).abs() < 1e-5 && (s[1] - d[1]).abs() < 1e-5, "{s:?} vs {d:?}");
        }
        // far from the patch the field approaches a single Flamant load
        let far = Vec2::new(30.0, 5.0);
        let u = b.reference_value(far).unwrap();
        let f = flamant_displacement(Vec2::ZERO, far, &hertz_material()).unwrap();
        assert!((u[0] - f[0]).abs() < 1e-3 * f[0].abs());
    }

    #[test]
    fn error_metric_examples() {
        let r = [1.0, -2.0, 0.5];
        let m = error_metrics(&r, &r).unwrap();
        assert_eq!(m.rel_l2, Some(0.0));
        assert!(m.abs_error.iter().all(|&e| e == 0.0));
        let p: Vec<f64> = r.iter().map(|v| v + 0.25).collect();
        let m = error_metrics(&p, &r).unwrap();
        assert!(m.abs_error.iter().all(|&e| (e - 0.25).abs() < 1e-15));
        let s = |v: &[f64]| v.iter().map(|x| 7.0 * x).collect::<Vec<_>>();
        let m2 = error_metrics(&s(&p), &s(&r)).unwrap();
        assert!((m.rel_l2.unwrap() - m2.rel_l2.unwrap()).abs() < 1e-15);
        let z = error_metrics(&[1.0], &[0.0]).unwrap();
        assert_eq!(z.rel_l2, None);
        assert_eq!(z.abs_l2, 1.0);
        assert!(error_metrics(&[1.0], &[]).is_err());
    }

    #[test]
    fn trajectories_and_grids() {
        for (b, n) in [(make_flower(), 2000), (make_cylinder_flow(), 1000), (make_beam(), 4000), (make_hertz(), 1000)] {
            let bd = b.problem.boundary();
            let segs: Vec<usize> = (0..bd.len()).collect();
            let t = trajectory(bd, &segs, b.trajectory_points);
            assert_eq!(t.len(), n);
            assert!(t.iter().all(|p| bd.distance_to(p.x) < 1e-12));
            let g = b.interior_grid();
            assert!(!g.is_empty());
            assert!(g.iter().all(|&x| bd.distance_to(x) >= DEFAULT_MARGIN));
        }
    }

    #[test]
    fn names_round_trip() {
        for n in BenchmarkName::ALL {
            assert_eq!(n.as_str().parse::<BenchmarkName>().unwrap(), n);
        }
        assert!("plate".parse::<BenchmarkName>().is_err());
    }

    #[test]
    fn inclusion_layout() {
        let b = make_inclusion();
        let Problem::Elastic(p) = &b.problem else { panic!() };
        assert_eq!(p.regions[0].segments.len(), 200);
        assert_eq!(p.regions[1].segments.len(), 80);
        assert_eq!(p.beta, 10.0);
    }
}
