//! A problem ready to train: boundary, reference and sampling plan.

use std::f64::consts::PI;

use binn::assembly::{Field, DEFAULT_MARGIN};
use binn::benchmarks::{error_metrics, make, trajectory, Benchmark, Problem, Sample};
use binn::bie_elastic::{ElasticProblem, KernelKind};
use binn::bie_potential::{DomainKind, PotentialProblem};
use binn::geometry::{
    build_boundary, Boundary, BoundaryCondition, BoundaryData, Curve, GeometrySpec, LoopKind, LoopSpec, PieceSpec, Vec2,
};
use binn::quadrature::QuadratureRule;

use crate::config::{BcKind, InlineLoop, InlineProblem, LinearField, ProblemConfig, RunConfig};
use crate::CliError;

/// Iterations for inline problems when none are configured.
pub const INLINE_ITERATIONS: usize = 5000;
/// Trajectory samples per segment for inline problems.
const INLINE_SAMPLES_PER_SEGMENT: usize = 10;
const INLINE_GRID: usize = 21;

pub enum CaseReference {
    Benchmark(Box<Benchmark>),
    Linear(LinearField),
    None,
}

pub struct Case {
    pub label: String,
    pub problem: Problem,
    pub reference: CaseReference,
    pub default_iterations: usize,
}

/// Samples with their relative L2 error (`None` without a reference).
pub struct Report {
    pub samples: Vec<Sample>,
    pub rel_l2: Option<f64>,
    /// Per-sample clearance flag (interior reports only).
    pub near_boundary: Vec<bool>,
}

impl Report {
    fn new(samples: Vec<Sample>, near_boundary: Vec<bool>) -> Result<Self, CliError> {
        let rel_l2 = if samples.iter().any(|s| s.reference.is_nan()) {
            None
        } else {
            let p: Vec<f64> = samples.iter().map(|s| s.value).collect();
            let r: Vec<f64> = samples.iter().map(|s| s.reference).collect();
            let m = error_metrics(&p, &r).map_err(runtime)?;
            Some(m.rel_l2.unwrap_or(m.abs_l2))
        };
        Ok(Self { samples, rel_l2, near_boundary })
    }

    /// `x1,x2,component,value,reference,abs_error`, plus `margin_warning`
    /// when `warn` is set. Missing references leave empty cells.
    pub fn to_csv(&self, warn: bool) -> String {
        let mut s = String::from("x1,x2,component,value,reference,abs_error");
        s.push_str(if warn { ",margin_warning\n" } else { "\n" });
        for (i, p) in self.samples.iter().enumerate() {
            s.push_str(&format!("{:e},{:e},{},{:e},", p.x.x1, p.x.x2, p.component, p.value));
            if p.reference.is_nan() {
                s.push(',');
            } else {
                s.push_str(&format!("{:e},{:e}", p.reference, p.abs_error()));
            }
            if warn {
                s.push_str(if self.near_boundary.get(i).copied().unwrap_or(false) { ",1" } else { ",0" });
            }
            s.push('\n');
        }
        s
    }
}

pub(crate) fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("problem: {e}"))
}

fn v(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn inline_boundary(loops: &[InlineLoop], n_u: usize) -> Result<Boundary, CliError> {
    let spec = GeometrySpec {
        loops: loops
            .iter()
            .map(|l| LoopSpec {
                kind: l.kind,
                region_id: 0,
                pieces: l
                    .pieces
                    .iter()
                    .map(|p| {
                        let curve = match p.curve {
                            crate::config::CurveConfig::Line { start, end } => Curve::Line { start: v(start), end: v(end) },
                            crate::config::CurveConfig::Arc { center, radius, start_angle, end_angle } => {
                                Curve::Arc { center: v(center), radius, start_angle, end_angle }
                            }
                        };
                        let d = p.bc.data();
                        let data = BoundaryData::new(move |x: Vec2, n: Vec2| {
                            let r = d.eval([x.x1, x.x2], [n.x1, n.x2]);
                            if n_u == 1 {
                                [r[0], 0.0]
                            } else {
                                r
                            }
                        });
                        let bc = match p.bc.kind {
                            BcKind::Dirichlet => BoundaryCondition::Dirichlet(data),
                            BcKind::Neumann => BoundaryCondition::Neumann(data),
                        };
                        PieceSpec { curve, segments: p.segments, bc }
                    })
                    .collect(),
            })
            .collect(),
    };
    build_boundary(&spec).map_err(invalid)
}

impl Case {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, CliError> {
        match cfg.problem.as_ref().ok_or_else(|| invalid("missing"))? {
            ProblemConfig::Named(name) => {
                let b = make(*name);
                Ok(Self {
                    label: name.to_string(),
                    problem: b.problem.clone(),
                    default_iterations: b.iterations,
                    reference: CaseReference::Benchmark(Box::new(b)),
                })
            }
            ProblemConfig::Inline(p) => {
                let (problem, exact) = match p {
                    InlineProblem::Potential { domain, loops, exact } => {
                        let b = inline_boundary(loops, 1)?;
                        (Problem::Potential(PotentialProblem::new(b, *domain).map_err(invalid)?), exact)
                    }
                    InlineProblem::Elastic { material, kernel, loops, exact } => {
                        let b = inline_boundary(loops, 2)?;
                        let m = binn::kernels::Material::new(material.young, material.poisson, material.plane)
                            .map_err(invalid)?;
                        (Problem::Elastic(ElasticProblem::single(b, m, *kernel).map_err(invalid)?), exact)
                    }
                };
                Ok(Self {
                    label: "inline".into(),
                    problem,
                    reference: exact.map_or(CaseReference::None, CaseReference::Linear),
                    default_iterations: INLINE_ITERATIONS,
                })
            }
        }
    }

    pub fn n_u(&self) -> usize {
        self.problem.n_u()
    }

    pub fn reference_at(&self, y: Vec2) -> Result<Option<[f64; 2]>, CliError> {
        match &self.reference {
            CaseReference::Benchmark(b) => b.reference_value(y).map(Some).map_err(runtime),
            CaseReference::Linear(l) => Ok(Some(l.eval([y.x1, y.x2]))),
            CaseReference::None => Ok(None),
        }
    }

    /// Boundary unknowns along the trajectory.
    pub fn boundary(&self, field: &dyn Field) -> Result<Report, CliError> {
        if let CaseReference::Benchmark(b) = &self.reference {
            let c = b.boundary_comparison(field).map_err(runtime)?;
            return Report::new(c.samples, Vec::new());
        }
        let bd = self.problem.boundary();
        let segs: Vec<usize> = (0..bd.len()).collect();
        let mut samples = Vec::new();
        for tp in trajectory(bd, &segs, INLINE_SAMPLES_PER_SEGMENT * bd.len()) {
            let (val, jac) = field.eval(tp.x);
            let pred = self.problem.unknowns(tp.segment, &val, &jac, tp.normal);
            let reference = match &self.reference {
                CaseReference::Linear(l) => {
                    let n_u = self.n_u();
                    self.problem.unknowns(tp.segment, &l.eval([tp.x.x1, tp.x.x2])[..n_u], &l.gradient[..n_u], tp.normal)
                }
                _ => vec![f64::NAN; pred.len()],
            };
            for (c, (p, r)) in pred.iter().zip(&reference).enumerate() {
                samples.push(Sample { x: tp.x, component: c, value: *p, reference: *r });
            }
        }
        Report::new(samples, Vec::new())
    }

    pub fn interior_points(&self) -> Vec<Vec2> {
        match &self.reference {
            CaseReference::Benchmark(b) => b.interior_grid(),
            _ => inline_grid(&self.problem),
        }
    }

    /// Interior values at `points` against the reference where one exists.
    pub fn interior(&self, field: &dyn Field, rule: &QuadratureRule, points: &[Vec2], refine: usize) -> Result<Report, CliError> {
        if points.is_empty() {
            return Report::new(Vec::new(), Vec::new());
        }
        let values = self.problem.interior_many(field, rule, points, refine).map_err(runtime)?;
        let mut samples = Vec::new();
        let mut near = Vec::new();
        for (&y, val) in points.iter().zip(values) {
            let r = self.reference_at(y)?;
            for c in 0..self.n_u() {
                let reference = r.map_or(f64::NAN, |r| r[c]);
                samples.push(Sample { x: y, component: c, value: val.value[c], reference });
                near.push(val.near_boundary);
            }
        }
        Report::new(samples, near)
    }
}

/// `(1/2π) ∮ (x − y)·n / |x − y|² dΓ`: 1 inside an outer loop, −1 inside a hole.
fn winding(b: &Boundary, y: Vec2) -> f64 {
    let rule = QuadratureRule::gauss_legendre(16).expect("16-point rule");
    let mut s = 0.0;
    for seg in &b.segments {
        for (xi, w) in rule.iter() {
            let p = seg.point(xi);
            let r = p.x - y;
            s += w * p.jacobian * r.dot(p.normal) / r.norm_sq();
        }
    }
    s / (2.0 * PI)
}

fn inline_grid(problem: &Problem) -> Vec<Vec2> {
    let b = problem.boundary();
    let rule = QuadratureRule::gauss_legendre(4).expect("4-point rule");
    let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for seg in &b.segments {
        for (xi, _) in rule.iter().chain([(-1.0, 0.0), (1.0, 0.0)]) {
            let x = seg.point(xi).x;
            lo = Vec2::new(lo.x1.min(x.x1), lo.x2.min(x.x2));
            hi = Vec2::new(hi.x1.max(x.x1), hi.x2.max(x.x2));
        }
    }
    let c = (lo + hi) * 0.5;
    let half = (hi - lo) * 0.5;
    let half_plane = matches!(problem, Problem::Elastic(p) if p.kernel == KernelKind::HalfPlane);
    let exterior = matches!(problem, Problem::Potential(p) if p.kind == DomainKind::Exterior)
        || b.loops.iter().all(|l| l.kind == LoopKind::Hole);
    let (lo, hi) = if half_plane {
        let s = half.x1.max(half.x2).max(1.0);
        (Vec2::new(DEFAULT_MARGIN, c.x2 - 2.0 * s), Vec2::new(4.0 * s, c.x2 + 2.0 * s))
    } else if exterior {
        (c - half * 3.0, c + half * 3.0)
    } else {
        (lo, hi)
    };
    let n = INLINE_GRID;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let t = |k: usize| k as f64 / (n - 1) as f64;
            let y = Vec2::new(lo.x1 + (hi.x1 - lo.x1) * t(i), lo.x2 + (hi.x2 - lo.x2) * t(j));
            if b.distance_to(y) < DEFAULT_MARGIN {
                continue;
            }
            let inside = half_plane || {
                let w = winding(b, y);
                if exterior {
                    w > -0.5
                } else {
                    w > 0.5
                }
            };
            if inside {
                out.push(y);
            }
        }
    }
    out
}
