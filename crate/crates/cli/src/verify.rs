//! Deterministic self-checks: quadrature against the adaptive oracle,
//! free-term identities, BEM against closed forms, plug-in residuals.

use binn::assembly::{Field, FnField};
use binn::benchmarks::{make, BenchmarkName};
use binn::bie_elastic::{ElasticProblem, KernelKind};
use binn::bie_potential::{DomainKind, PotentialProblem};
use binn::geometry::{
    build_boundary, circle_piece, flower_pieces, rectangle_pieces, Boundary, BoundaryCondition, BoundaryData, Curve,
    GeometrySpec, LoopKind, LoopSpec, PieceSpec, Segment, Vec2,
};
use binn::kernels::{Material, PlaneCondition};
use binn::oracle::{adaptive_integral, bem_solve, Singularity};
use binn::quadrature::{integrate_cauchy, integrate_weak_log, weak_log_weights, QuadratureRule};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.measured.is_finite() && self.measured < self.tolerance
    }
}

type Outcome = Result<f64, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn rule(n: usize) -> QuadratureRule {
    QuadratureRule::gauss_legendre(n).expect("valid order")
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn flat_segment(a: f64) -> Segment {
    Segment {
        curve: Curve::Line { start: Vec2::new(-a, 0.0), end: Vec2::new(a, 0.0) },
        region_id: 0,
        bc: BoundaryCondition::Dirichlet(BoundaryData::constant([0.0; 2])),
    }
}

fn gauss_exactness() -> Outcome {
    // Σ cos(k) ξ^k, k ≤ 19, over [−1, 1]
    let p = |x: f64| (0..20).map(|k| (k as f64).cos() * x.powi(k)).sum::<f64>();
    let exact: f64 = (0..20).step_by(2).map(|k| 2.0 * (k as f64).cos() / (k as f64 + 1.0)).sum();
    Ok(rel(rule(10).integrate(p), exact))
}

fn weak_log_unit() -> Outcome {
    let v = integrate_weak_log(&flat_segment(1.0), &rule(10), |_| 1.0, 1.0).map_err(err)?;
    Ok((v + 2.0).abs())
}

/// The linear weights used by the residual assembly, on a non-unit half-arc.
fn weak_log_weights_unit() -> Outcome {
    let a = 0.37;
    let (alpha, alpha0) = weak_log_weights(a, &rule(10)).map_err(err)?;
    let exact = 2.0 * (a * a.ln() - a);
    Ok(rel(alpha.iter().sum::<f64>() + alpha0, exact))
}

fn weak_log_oracle(f: fn(f64) -> f64, a: f64) -> Outcome {
    let v = integrate_weak_log(&flat_segment(a), &rule(10), f, f(0.0)).map_err(err)?;
    let o = adaptive_integral(f, -a, a, Singularity::LogAt0).map_err(err)?;
    Ok(rel(v, o))
}

fn cauchy_unit() -> Outcome {
    integrate_cauchy(&rule(10), |_| 1.0).map_err(err).map(f64::abs)
}

fn cauchy_oracle(f: fn(f64) -> f64) -> Outcome {
    let v = integrate_cauchy(&rule(10), f).map_err(err)?;
    let o = adaptive_integral(f, -1.0, 1.0, Singularity::CauchyAt0).map_err(err)?;
    Ok((v - o).abs() / o.abs().max(1.0))
}

const W: f64 = 0.3;

/// Translation plus small rotation; the constant potential uses the first
/// component with `W` zeroed.
fn rigid(x: Vec2, w: f64) -> [f64; 2] {
    [0.7 - w * x.x2, -0.4 + w * x.x1]
}

fn rigid_data(w: f64) -> BoundaryCondition {
    BoundaryCondition::Dirichlet(BoundaryData::new(move |x, _| rigid(x, w)))
}

fn outer(pieces: Vec<PieceSpec>) -> Result<Boundary, String> {
    build_boundary(&GeometrySpec { loops: vec![LoopSpec { kind: LoopKind::Outer, region_id: 0, pieces }] }).map_err(err)
}

fn circle(bc: BoundaryCondition) -> Result<Boundary, String> {
    outer(vec![circle_piece(Vec2::ZERO, 1.0, LoopKind::Outer, 32, bc)])
}

fn square(bc: BoundaryCondition) -> Result<Boundary, String> {
    outer(rectangle_pieces(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), [8; 4], [bc.clone(), bc.clone(), bc.clone(), bc]))
}

fn flower(bc: BoundaryCondition) -> Result<Boundary, String> {
    outer(flower_pieces(20, bc))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn constant_potential(b: Result<Boundary, String>) -> Outcome {
    let p = PotentialProblem::new(b?, DomainKind::Interior).map_err(err)?;
    let f = FnField(|x: Vec2| (vec![rigid(x, 0.0)[0]], vec![[0.0; 2]]));
    Ok(max_abs(&p.assemble(&rule(10)).map_err(err)?.residuals(&f)))
}

fn rigid_body(b: Result<Boundary, String>) -> Outcome {
    let m = Material::new(1.0, 0.3, PlaneCondition::PlaneStrain).map_err(err)?;
    let p = ElasticProblem::single(b?, m, KernelKind::FullPlane).map_err(err)?;
    let f = FnField(|x: Vec2| (rigid(x, W).to_vec(), vec![[0.0, -W], [W, 0.0]]));
    Ok(max_abs(&p.assemble(&rule(10)).map_err(err)?.residuals(&f)))
}

/// Unit circle, `ū = x₁`: the BEM flux should be `n₁`.
fn bem_circle() -> Outcome {
    let bc = BoundaryCondition::Dirichlet(BoundaryData::scalar(|x, _| x.x1));
    let b = outer(vec![circle_piece(Vec2::ZERO, 1.0, LoopKind::Outer, 64, bc)])?;
    let sys = PotentialProblem::new(b, DomainKind::Interior).map_err(err)?.system();
    let sol = bem_solve(&sys).map_err(err)?;
    let (mut e, mut n) = (0.0, 0.0);
    for (j, seg) in sys.boundary.segments.iter().enumerate() {
        let q = seg.point(0.0).normal.x1;
        e += (sol.deriv[j][0] - q).powi(2);
        n += q * q;
    }
    Ok((e / n).sqrt())
}

fn plug_in(name: BenchmarkName) -> Outcome {
    let b = make(name);
    let f = b.reference_field().ok_or("no analytic reference")?;
    let asm = b.problem.assemble(&rule(10)).map_err(err)?;
    Ok(max_abs(&asm.residuals(&f as &dyn Field)))
}

/// Runs every check; never panics.
pub fn run() -> Vec<(Check, Option<String>)> {
    let cases: Vec<(&'static str, f64, Box<dyn Fn() -> Outcome>)> = vec![
        ("gauss n_g=10 exact to degree 19", 1e-12, Box::new(gauss_exactness)),
        ("weak-log f=1 gives -2", 1e-12, Box::new(weak_log_unit)),
        ("weak-log weights f=1, a=0.37", 1e-12, Box::new(weak_log_weights_unit)),
        ("weak-log cos t, a=0.1 vs adaptive", 1e-6, Box::new(|| weak_log_oracle(f64::cos, 0.1))),
        ("weak-log e^t, a=0.1 vs adaptive", 1e-6, Box::new(|| weak_log_oracle(f64::exp, 0.1))),
        ("cauchy f=1 gives 0", 1e-12, Box::new(cauchy_unit)),
        ("cauchy cos t vs adaptive", 1e-8, Box::new(|| cauchy_oracle(f64::cos))),
        ("cauchy e^t vs adaptive", 1e-8, Box::new(|| cauchy_oracle(f64::exp))),
        ("constant potential, circle", 1e-6, Box::new(|| constant_potential(circle(rigid_data(0.0))))),
        ("constant potential, square", 1e-6, Box::new(|| constant_potential(square(rigid_data(0.0))))),
        ("constant potential, flower", 1e-6, Box::new(|| constant_potential(flower(rigid_data(0.0))))),
        ("rigid body, square", 1e-5, Box::new(|| rigid_body(square(rigid_data(W))))),
        ("rigid body, circle", 1e-5, Box::new(|| rigid_body(circle(rigid_data(W))))),
        ("BEM unit circle flux vs n1", 2e-2, Box::new(bem_circle)),
        ("plug-in flower", 1e-3, Box::new(|| plug_in(BenchmarkName::Flower))),
        ("plug-in cylinder", 1e-3, Box::new(|| plug_in(BenchmarkName::Cylinder))),
        ("plug-in beam", 5e-3, Box::new(|| plug_in(BenchmarkName::Beam))),
    ];
    cases
        .into_iter()
        .map(|(name, tolerance, f)| match f() {
            Ok(measured) => (Check { name, measured, tolerance }, None),
            Err(e) => (Check { name, measured: f64::NAN, tolerance }, Some(e)),
        })
        .collect()
}

pub fn table(rows: &[(Check, Option<String>)]) -> String {
    let mut s = format!("{:<40} {:>12} {:>10}  result\n", "check", "measured", "tolerance");
    for (c, e) in rows {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        s.push_str(&format!("{:<40} {:>12.3e} {:>10.1e}  {verdict}", c.name, c.measured, c.tolerance));
        if let Some(e) = e {
            s.push_str(&format!(" ({e})"));
        }
        s.push('\n');
    }
    s
}
