//! Laplace problems: the network approximates the potential `φ(x; θ)` and
//! only its boundary trace (value or flux, whichever is unknown) enters the
//! residual.

use crate::assembly::{
    assemble, residual_direct, Assembly, AssemblyError, BieSystem, BoundaryTrace, Field, InteriorValue, KernelSpec,
    RegionSpec, DEFAULT_MARGIN,
};
use crate::geometry::{Boundary, BoundaryCondition, Segment, Vec2};
use crate::quadrature::QuadratureRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interior,
    /// Unbounded domain outside the boundary loops; the unknown is a
    /// perturbation that decays at infinity.
    Exterior,
}

#[derive(Clone, Debug)]
pub struct PotentialProblem {
    pub boundary: Boundary,
    pub kind: DomainKind,
}

impl PotentialProblem {
    pub fn new(boundary: Boundary, kind: DomainKind) -> Result<Self, AssemblyError> {
        if boundary.is_empty() {
            return Err(AssemblyError::Invalid("potential problem without segments".into()));
        }
        if boundary.segments.iter().any(|s| matches!(s.bc, BoundaryCondition::Interface)) {
            return Err(AssemblyError::Invalid("interface segments are not valid in a single-region potential problem".into()));
        }
        Ok(Self { boundary, kind })
    }

    /// Single region; segment normals already point out of the domain for
    /// both kinds (holes are clockwise).
    pub fn system(&self) -> BieSystem {
        let n = self.boundary.len();
        BieSystem {
            boundary: self.boundary.clone(),
            n_u: 1,
            regions: vec![RegionSpec {
                id: 0,
                kernel: KernelSpec::Laplace,
                segments: (0..n).collect(),
                signs: vec![1.0; n],
                weight: 1.0 / n as f64,
            }],
            interface: None,
        }
    }

    pub fn assemble(&self, rule: &QuadratureRule) -> Result<Assembly, AssemblyError> {
        assemble(&self.system(), rule)
    }

    pub fn source_count(&self) -> usize {
        self.boundary.len()
    }
}

/// The unknown boundary quantity on `seg` at `x`: the flux `∇φ·n` on
/// Dirichlet segments, the potential `φ` on Neumann segments.
pub fn boundary_unknowns(field: &dyn Field, x: Vec2, seg: &Segment) -> Result<f64, AssemblyError> {
    let (v, jac) = field.eval(x);
    match &seg.bc {
        BoundaryCondition::Dirichlet(_) => {
            let n = nearest_normal(seg, x);
            Ok(jac[0][0] * n.x1 + jac[0][1] * n.x2)
        }
        BoundaryCondition::Neumann(_) => Ok(v[0]),
        BoundaryCondition::Interface => {
            Err(AssemblyError::Invalid("interface segments are not valid in a single-region potential problem".into()))
        }
    }
}

/// Normal at the parameter closest to `x` (coarse scan then bisection).
fn nearest_normal(seg: &Segment, x: Vec2) -> Vec2 {
    let dist = |xi: f64| (seg.curve.point(xi) - x).norm_sq();
    let mut best = -1.0;
    for i in 0..=64 {
        let xi = -1.0 + i as f64 / 32.0;
        if dist(xi) < dist(best) {
            best = xi;
        }
    }
    let (mut lo, mut hi) = ((best - 1.0 / 32.0).max(-1.0), (best + 1.0 / 32.0).min(1.0));
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if dist(m1) < dist(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    seg.point(0.5 * (lo + hi)).normal
}

/// Residual at the source point of segment `source`, integrated directly.
pub fn residual(
    problem: &PotentialProblem,
    field: &dyn Field,
    rule: &QuadratureRule,
    source: usize,
) -> Result<f64, AssemblyError> {
    rule.require_even()?;
    if source >= problem.boundary.len() {
        return Err(AssemblyError::Invalid(format!("source {source} out of range")));
    }
    Ok(residual_direct(&problem.system(), field, rule, 0, source)?[0])
}

/// Mean squared residual over all source points.
pub fn loss(problem: &PotentialProblem, field: &dyn Field, rule: &QuadratureRule) -> Result<f64, AssemblyError> {
    Ok(problem.assemble(rule)?.loss(field))
}

/// `u(y) = ∫ u^s ∂φ/∂n − ∫ ∂u^s/∂n φ` from the boundary data, with every
/// segment split `refine` times.
pub fn interior_value(
    problem: &PotentialProblem,
    field: &dyn Field,
    rule: &QuadratureRule,
    y: Vec2,
    refine: usize,
) -> Result<InteriorValue, AssemblyError> {
    let trace = BoundaryTrace::new(&problem.system(), field, rule, refine)?;
    let v = trace.value_in_region(0, y, DEFAULT_MARGIN)?;
    Ok(InteriorValue { value: [v.value[0], 0.0], near_boundary: v.near_boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::FnField;
    use crate::geometry::{
        build_boundary, circle_piece, flower_pieces, rectangle_pieces, BoundaryData, GeometrySpec, LoopKind, LoopSpec,
    };
    use crate::network::{Architecture, NetworkParams};

    fn rule(n: usize) -> QuadratureRule {
        QuadratureRule::gauss_legendre(n).unwrap()
    }

    fn boundary(kind: LoopKind, pieces: Vec<crate::geometry::PieceSpec>) -> Boundary {
        build_boundary(&GeometrySpec { loops: vec![LoopSpec { kind, region_id: 0, pieces }] }).unwrap()
    }

    fn dirichlet(f: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> BoundaryCondition {
        BoundaryCondition::Dirichlet(BoundaryData::scalar(move |x, _| f(x)))
    }

    fn geometries(bc: BoundaryCondition) -> Vec<Boundary> {
        vec![
            boundary(LoopKind::Outer, vec![circle_piece(Vec2::ZERO, 1.0, LoopKind::Outer, 32, bc.clone())]),
            boundary(
                LoopKind::Outer,
                rectangle_pieces(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), [10; 4], std::array::from_fn(|_| bc.clone())),
            ),
            boundary(LoopKind::Outer, flower_pieces(20, bc)),
        ]
    }

    fn zero_net() -> NetworkParams {
        NetworkParams::zeros(Architecture::new(8, 1))
    }

    fn flower_field() -> FnField<impl Fn(Vec2) -> (Vec<f64>, Vec<[f64; 2]>)> {
        FnField(|x: Vec2| {
            let (a, b) = (x.x1, x.x2);
            let u = a.sin() * b.sinh() + a.cos() * b.cosh();
            let g = [a.cos() * b.sinh() - a.sin() * b.cosh(), a.sin() * b.cosh() + a.cos() * b.sinh()];
            (vec![u], vec![g])
        })
    }

    fn flower_exact(x: Vec2) -> f64 {
        x.x1.sin() * x.x2.sinh() + x.x1.cos() * x.x2.cosh()
    }

    #[test]
    fn constant_potential_identity() {
        for b in geometries(dirichlet(|_| 1.0)) {
            let p = PotentialProblem::new(b, DomainKind::Interior).unwrap();
            let r = p.assemble(&rule(10)).unwrap().residuals(&zero_net());
            let max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max < 1e-6, "max residual {max}");
        }
    }

    #[test]
    fn plug_in_flower_decreases_with_order() {
        let b = boundary(LoopKind::Outer, flower_pieces(20, dirichlet(flower_exact)));
        let p = PotentialProblem::new(b, DomainKind::Interior).unwrap();
        let f = flower_field();
        let max = |n| {
            p.assemble(&rule(n)).unwrap().residuals(&f).iter().fold(0.0f64, |m: f64, v| m.max(v.abs()))
        };
        let (m10, m20) = (max(10), max(20));
        assert!(m10 < 1e-3, "{m10}");
        assert!(m20 < m10, "{m20} vs {m10}");
    }

    #[test]
    fn residual_linear_in_data() {
        let make = |s: f64| {
            let b = boundary(
                LoopKind::Outer,
                rectangle_pieces(
                    Vec2::new(0.0, 0.0),
                    Vec2::new(2.0, 1.0),
                    [6, 3, 6, 3],
                    [
                        dirichlet(move |x| s * x.x1 * x.x2),
                        BoundaryCondition::Neumann(BoundaryData::scalar(move |x, _| s * (1.0 + x.x2))),
                        dirichlet(move |x| s * x.x1.cos()),
                        BoundaryCondition::Neumann(BoundaryData::scalar(move |_, _| -s)),
                    ],
                ),
            );
            PotentialProblem::new(b, DomainKind::Interior).unwrap()
        };
        let net = zero_net();
        let r1 = make(1.0).assemble(&rule(10)).unwrap().residuals(&net);
        let r2 = make(2.0).assemble(&rule(10)).unwrap().residuals(&net);
        for (a, b) in r1.iter().zip(&r2) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn table_matches_direct_integration() {
        let b = boundary(
            LoopKind::Outer,
            rectangle_pieces(
                Vec2::new(-1.0, -0.5),
                Vec2::new(1.0, 0.5),
                [4, 2, 4, 2],
                [
                    dirichlet(|x| x.x1),
                    BoundaryCondition::Neumann(BoundaryData::scalar(|x, _| x.x2)),
                    dirichlet(|x| x.x1 * x.x1),
                    BoundaryCondition::Neumann(BoundaryData::scalar(|_, _| 0.3)),
                ],
            ),
        );
        let mut geos = vec![b];
        geos.push(boundary(LoopKind::Outer, flower_pieces(4, dirichlet(|x| x.x1))));
        let net = NetworkParams::init_xavier(Architecture::new(8, 1), 3);
        let q = rule(10);
        for b in geos {
            let p = PotentialProblem::new(b, DomainKind::Interior).unwrap();
            let table = p.assemble(&q).unwrap().residuals(&net);
            for (i, t) in table.iter().enumerate() {
                let d = residual(&p, &net, &q, i).unwrap();
                assert!((t - d).abs() <= 1e-12 * (1.0 + d.abs()), "source {i}: {t} vs {d}");
            }
        }
    }

    #[test]
    fn boundary_unknowns_routing() {
        let seg = Segment::new(
            crate::geometry::Curve::Line { start: Vec2::new(0.0, 1.0), end: Vec2::new(0.0, -1.0) },
            0,
            dirichlet(|_| 0.0),
        );
        // right perp of (0, −2) is (−1, 0)·… normalised: n = (−1, 0)
        let lin = FnField(|x: Vec2| (vec![x.x1], vec![[1.0, 0.0]]));
        assert_eq!(boundary_unknowns(&lin, Vec2::new(0.0, 0.3), &seg).unwrap(), -1.0);
        assert_eq!(boundary_unknowns(&zero_net(), Vec2::new(0.0, 0.3), &seg).unwrap(), 0.0);
        let neu = Segment { bc: BoundaryCondition::Neumann(BoundaryData::constant([0.0; 2])), ..seg.clone() };
        assert_eq!(boundary_unknowns(&lin, Vec2::new(2.0, 0.3), &neu).unwrap(), 2.0);
        let itf = Segment { bc: BoundaryCondition::Interface, ..seg };
        assert!(boundary_unknowns(&lin, Vec2::ZERO, &itf).is_err());
    }

    #[test]
    fn flux_matches_finite_difference() {
        let net = NetworkParams::init_xavier(Architecture::new(12, 1), 7);
        let b = boundary(LoopKind::Outer, flower_pieces(4, dirichlet(|_| 0.0)));
        for seg in &b.segments {
            let p = seg.point(0.3);
            let h = 1e-6;
            let fd = (net.forward(p.x + p.normal * h)[0] - net.forward(p.x - p.normal * h)[0]) / (2.0 * h);
            let q = boundary_unknowns(&net, p.x, seg).unwrap();
            assert!((q - fd).abs() <= 1e-6 * fd.abs().max(1e-3), "{q} vs {fd}");
        }
    }

    #[test]
    fn interface_rejected() {
        let b = boundary(LoopKind::Outer, vec![circle_piece(Vec2::ZERO, 1.0, LoopKind::Outer, 8, BoundaryCondition::Interface)]);
        assert!(PotentialProblem::new(b, DomainKind::Interior).is_err());
    }

    #[test]
    fn loss_invariants() {
        let b = boundary(LoopKind::Outer, vec![circle_piece(Vec2::ZERO, 1.0, LoopKind::Outer, 1, dirichlet(|x| x.x1 + 0.2))]);
        let p = PotentialProblem::new(b, DomainKind::Interior).unwrap();
        let net = NetworkParams::init_xavier(Architecture::new(6, 1), 1);
        let r = residual(&p, &net, &rule(10), 0).unwrap();
        let l = loss(&p, &net, &rule(10)).unwrap();
        assert!((l - r * r).abs() <= 1e-12 * l.max(1e-30));

        // reversing segment order permutes residuals but leaves the loss alone
        let b = boundary(LoopKind::Outer, flower_pieces(3, dirichlet(flower_exact)));
        let p = PotentialProblem::new(b.clone(), DomainKind::Interior).unwrap();
        let mut rev = b;
        rev.segments.reverse();
        let q = PotentialProblem { boundary: rev, kind: DomainKind::Interior };
        let (l1, l2) = (loss(&p, &net, &rule(10)).unwrap(), loss(&q, &net, &rule(10)).unwrap());
        assert!((l1 - l2).abs() <= 1e-13 * l1);
    }

    #[test]
    fn interior_constant_and_plug_in() {
        let b = boundary(LoopKind::Outer, flower_pieces(20, dirichlet(|_| 1.0)));
        let p = PotentialProblem::new(b, DomainKind::Interior).unwrap();
        for y in [Vec2::ZERO, Vec2::new(0.5, 0.7), Vec2::new(-1.0, 0.2)] {
            let v = interior_value(&p, &zero_net(), &rule(10), y, 1).unwrap();
            assert!((v.value[0] - 1.0).abs() < 1e-6);
            assert!(!v.near_boundary);
        }
        let b = boundary(LoopKind::Outer, flower_pieces(20, dirichlet(flower_exact)));
        let p = PotentialProblem::new(b, DomainKind::Interior).unwrap();
        for y in [Vec2::ZERO, Vec2::new(1.2, 0.4), Vec2::new(-0.3, -1.1)] {
            let v = interior_value(&p, &flower_field(), &rule(10), y, 1).unwrap();
            assert!((v.value[0] - flower_exact(y)).abs() < 1e-3);
        }
    }

    #[test]
    fn exterior_perturbation_plug_in() {
        let a: f64 = 1.5;
        let q = BoundaryCondition::Neumann(BoundaryData::scalar(|_, n| -3.0 * n.x1));
        let b = boundary(LoopKind::Hole, vec![circle_piece(Vec2::ZERO, a, LoopKind::Hole, 40, q)]);
        let p = PotentialProblem::new(b, DomainKind::Exterior).unwrap();
        let exact = FnField(move |x: Vec2| {
            let r2 = x.norm_sq();
            let c = a * a * 3.0;
            (vec![c * x.x1 / r2], vec![[c * (r2 - 2.0 * x.x1 * x.x1) / (r2 * r2), -2.0 * c * x.x1 * x.x2 / (r2 * r2)]])
        });
        let r = p.assemble(&rule(10)).unwrap().residuals(&exact);
        assert!(r.iter().all(|v| v.abs() < 1e-3));
        let v = interior_value(&p, &exact, &rule(10), Vec2::new(3.0, 0.0), 1).unwrap();
        assert!((v.value[0] - 2.25).abs() < 1e-4, "{}", v.value[0]);
    }

    #[test]
    fn margin_flag() {
        let b = boundary(LoopKind::Outer, vec![circle_piece(Vec2::ZERO, 1.0, LoopKind::Outer, 16, dirichlet(|_| 1.0))]);
        let p = PotentialProblem::new(b, DomainKind::Interior).unwrap();
        let v = interior_value(&p, &zero_net(), &rule(10), Vec2::new(0.99, 0.0), 1).unwrap();
        assert!(v.near_boundary);
    }
}
