//! Boundaries as ordered parametric segments.
//!
//! Every segment maps the local coordinate `ξ ∈ [−1, 1]` onto a line piece
//! or a circular arc. The source point of a segment is its `ξ = 0` image, so
//! geometric corners always fall on segment ends. Normals are the right-hand
//! normal of the traversal direction: counter-clockwise loops around an
//! interior domain and clockwise loops around a hole both give normals that
//! point out of the computational domain.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

/// Point or vector in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Right-hand perpendicular `(v₂, −v₁)`.
    #[inline]
    pub fn right_perp(self) -> Self {
        Self::new(self.x2, -self.x1)
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn component(self, i: usize) -> f64 {
        match i {
            0 => self.x1,
            _ => self.x2,
        }
    }
}

impl Add for Vec2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Vec2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.x1 * s, self.x2 * s)
    }
}

impl Neg for Vec2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// Prescribed boundary datum `(x, n) ↦ value`. Scalar problems use slot 0.
#[derive(Clone)]
pub struct BoundaryData(Arc<dyn Fn(Vec2, Vec2) -> [f64; 2] + Send + Sync>);

impl BoundaryData {
    pub fn new(f: impl Fn(Vec2, Vec2) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn scalar(f: impl Fn(Vec2, Vec2) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(move |x, n| [f(x, n), 0.0])
    }

    pub fn constant(value: [f64; 2]) -> Self {
        Self::new(move |_, _| value)
    }

    #[inline]
    pub fn eval(&self, x: Vec2, n: Vec2) -> [f64; 2] {
        (self.0)(x, n)
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundaryData(..)")
    }
}

/// Boundary-condition tag of a segment.
#[derive(Clone, Debug)]
pub enum BoundaryCondition {
    /// Value prescribed (`ū` or `ū_α`); the normal derivative or traction is unknown.
    Dirichlet(BoundaryData),
    /// Flux or traction prescribed (`q̄` or `t̄_α`); the value is unknown.
    Neumann(BoundaryData),
    /// Material interface between two regions; value and traction both unknown.
    Interface,
}

impl BoundaryCondition {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Dirichlet(_) => "dirichlet",
            Self::Neumann(_) => "neumann",
            Self::Interface => "interface",
        }
    }
}

/// Geometric primitive parametrised over `ξ ∈ [−1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Curve {
    Line { start: Vec2, end: Vec2 },
    /// Angles in radians; `end_angle < start_angle` traverses clockwise.
    Arc { center: Vec2, radius: f64, start_angle: f64, end_angle: f64 },
}

impl Curve {
    pub fn point(&self, xi: f64) -> Vec2 {
        match *self {
            Curve::Line { start, end } => start + (end - start) * (0.5 * (xi + 1.0)),
            Curve::Arc { center, radius, start_angle, end_angle } => {
                let phi = 0.5 * (start_angle + end_angle) + 0.5 * (end_angle - start_angle) * xi;
                center + Vec2::from_polar(radius, phi)
            }
        }
    }

    /// `dx/dξ`.
    pub fn derivative(&self, xi: f64) -> Vec2 {
        match *self {
            Curve::Line { start, end } => (end - start) * 0.5,
            Curve::Arc { radius, start_angle, end_angle, .. } => {
                let half = 0.5 * (end_angle - start_angle);
                let phi = 0.5 * (start_angle + end_angle) + half * xi;
                Vec2::new(-phi.sin(), phi.cos()) * (radius * half)
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Curve::Line { start, end } => (end - start).norm(),
            Curve::Arc { radius, start_angle, end_angle, .. } => radius * (end_angle - start_angle).abs(),
        }
    }

    /// Splits the curve into `k` equal-parameter pieces.
    pub fn split(&self, k: usize) -> Vec<Curve> {
        (0..k)
            .map(|i| {
                let s = i as f64 / k as f64;
                let e = (i + 1) as f64 / k as f64;
                match *self {
                    Curve::Line { start, end } => Curve::Line {
                        start: start + (end - start) * s,
                        end: start + (end - start) * e,
                    },
                    Curve::Arc { center, radius, start_angle, end_angle } => Curve::Arc {
                        center,
                        radius,
                        start_angle: start_angle + (end_angle - start_angle) * s,
                        end_angle: start_angle + (end_angle - start_angle) * e,
                    },
                }
            })
            .collect()
    }

    pub fn reversed(&self) -> Curve {
        match *self {
            Curve::Line { start, end } => Curve::Line { start: end, end: start },
            Curve::Arc { center, radius, start_angle, end_angle } => {
                Curve::Arc { center, radius, start_angle: end_angle, end_angle: start_angle }
            }
        }
    }
}

/// Position, Jacobian and outward normal at one local coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentPoint {
    pub xi: f64,
    pub x: Vec2,
    pub jacobian: f64,
    pub normal: Vec2,
}

/// One boundary piece carrying its source point at `ξ = 0`.
#[derive(Clone, Debug)]
pub struct Segment {
    pub curve: Curve,
    pub region_id: usize,
    pub bc: BoundaryCondition,
}

impl Segment {
    pub fn new(curve: Curve, region_id: usize, bc: BoundaryCondition) -> Self {
        Self { curve, region_id, bc }
    }

    /// Arc half-length `a`; exact for lines and arcs.
    pub fn half_arc(&self) -> f64 {
        0.5 * self.curve.length()
    }

    pub fn source_point(&self) -> Vec2 {
        self.curve.point(0.0)
    }

    pub fn point(&self, xi: f64) -> SegmentPoint {
        let x = self.curve.point(xi);
        let d = self.curve.derivative(xi);
        let jacobian = d.norm();
        SegmentPoint { xi, x, jacobian, normal: d.right_perp() * (1.0 / jacobian) }
    }

    pub fn subdivide(&self, k: usize) -> Vec<Segment> {
        self.curve
            .split(k)
            .into_iter()
            .map(|curve| Segment { curve, region_id: self.region_id, bc: self.bc.clone() })
            .collect()
    }
}

/// Evaluates `segment_point` without going through a [`Segment`].
pub fn segment_point(seg: &Segment, xi: f64) -> SegmentPoint {
    seg.point(xi)
}

/// Role of a loop relative to the computational domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    /// Closed loop enclosing the domain (counter-clockwise).
    Outer,
    /// Closed loop around a hole or the obstacle of an exterior problem (clockwise).
    Hole,
    /// Open loaded patch on a half-plane surface.
    Open,
}

/// One piece of a loop description.
#[derive(Clone, Debug)]
pub struct PieceSpec {
    pub curve: Curve,
    pub segments: usize,
    pub bc: BoundaryCondition,
}

#[derive(Clone, Debug)]
pub struct LoopSpec {
    pub kind: LoopKind,
    pub region_id: usize,
    pub pieces: Vec<PieceSpec>,
}

/// Geometric description consumed by [`build_boundary`].
#[derive(Clone, Debug, Default)]
pub struct GeometrySpec {
    pub loops: Vec<LoopSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopRange {
    pub kind: LoopKind,
    pub start: usize,
    pub end: usize,
}

impl LoopRange {
    pub fn closed(&self) -> bool {
        self.kind != LoopKind::Open
    }
}

#[derive(Clone, Debug, Default)]
pub struct Boundary {
    pub segments: Vec<Segment>,
    pub loops: Vec<LoopRange>,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("loop {loop_index} piece {piece}: segment count must be at least 1")]
    NoSegments { loop_index: usize, piece: usize },
    #[error("loop {loop_index} piece {piece}: zero-length edge")]
    ZeroLength { loop_index: usize, piece: usize },
    #[error("loop {loop_index} piece {piece}: radius must be positive, got {radius}")]
    BadRadius { loop_index: usize, piece: usize, radius: f64 },
    #[error("loop {loop_index}: piece {piece} does not start where the previous one ends (gap {gap:.3e})")]
    Discontinuous { loop_index: usize, piece: usize, gap: f64 },
    #[error("loop {loop_index}: {kind:?} loop has the wrong orientation (signed area {area:.6})")]
    Orientation { loop_index: usize, kind: LoopKind, area: f64 },
    #[error("loop {loop_index} is empty")]
    EmptyLoop { loop_index: usize },
    #[error("loop {loop_index}: non-finite coordinates")]
    NonFinite { loop_index: usize },
}

const CHAIN_TOL: f64 = 1e-9;

/// Builds a boundary from loop descriptions, validating each piece.
pub fn build_boundary(spec: &GeometrySpec) -> Result<Boundary, GeometryError> {
    let mut boundary = Boundary::default();
    for (li, lp) in spec.loops.iter().enumerate() {
        if lp.pieces.is_empty() {
            return Err(GeometryError::EmptyLoop { loop_index: li });
        }
        let start = boundary.segments.len();
        for (pi, piece) in lp.pieces.iter().enumerate() {
            if piece.segments == 0 {
                return Err(GeometryError::NoSegments { loop_index: li, piece: pi });
            }
            match piece.curve {
                Curve::Arc { radius, .. } if !(radius > 0.0) => {
                    return Err(GeometryError::BadRadius { loop_index: li, piece: pi, radius });
                }
                Curve::Line { start, end } if !(start.is_finite() && end.is_finite()) => {
                    return Err(GeometryError::NonFinite { loop_index: li });
                }
                _ => {}
            }
            if !(piece.curve.length() > 0.0) || !piece.curve.length().is_finite() {
                return Err(GeometryError::ZeroLength { loop_index: li, piece: pi });
            }
            if pi > 0 {
                let prev = lp.pieces[pi - 1].curve.point(1.0);
                let gap = (piece.curve.point(-1.0) - prev).norm();
                if gap > CHAIN_TOL {
                    return Err(GeometryError::Discontinuous { loop_index: li, piece: pi, gap });
                }
            }
            for curve in piece.curve.split(piece.segments) {
                boundary.segments.push(Segment::new(curve, lp.region_id, piece.bc.clone()));
            }
        }
        if lp.kind != LoopKind::Open {
            let first = lp.pieces[0].curve.point(-1.0);
            let last = lp.pieces[lp.pieces.len() - 1].curve.point(1.0);
            let gap = (first - last).norm();
            if gap > CHAIN_TOL {
                return Err(GeometryError::Discontinuous { loop_index: li, piece: 0, gap });
            }
            let area = signed_area(&boundary.segments[start..]);
            let ok = match lp.kind {
                LoopKind::Outer => area > 0.0,
                LoopKind::Hole => area < 0.0,
                LoopKind::Open => true,
            };
            if !ok {
                return Err(GeometryError::Orientation { loop_index: li, kind: lp.kind, area });
            }
        }
        boundary.loops.push(LoopRange { kind: lp.kind, start, end: boundary.segments.len() });
    }
    Ok(boundary)
}

/// `½∮(x₁ dx₂ − x₂ dx₁)` by 10-point Gauss on each segment.
fn signed_area(segments: &[Segment]) -> f64 {
    let rule = crate::quadrature::QuadratureRule::gauss_legendre(10).expect("valid order");
    segments
        .iter()
        .map(|s| {
            rule.iter()
                .map(|(xi, w)| {
                    let x = s.curve.point(xi);
                    let d = s.curve.derivative(xi);
                    0.5 * w * (x.x1 * d.x2 - x.x2 * d.x1)
                })
                .sum::<f64>()
        })
        .sum()
}

impl Boundary {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn source_points(&self) -> Vec<Vec2> {
        self.segments.iter().map(Segment::source_point).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.curve.length()).sum()
    }

    /// Same boundary with every segment split into `k` pieces.
    pub fn refined(&self, k: usize) -> Boundary {
        let k = k.max(1);
        Boundary {
            segments: self.segments.iter().flat_map(|s| s.subdivide(k)).collect(),
            loops: self
                .loops
                .iter()
                .map(|l| LoopRange { kind: l.kind, start: l.start * k, end: l.end * k })
                .collect(),
        }
    }

    /// Shortest distance from `p` to the boundary (sampled, then refined on the best segment).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.segments.iter().map(|s| distance_to_curve(&s.curve, p)).fold(f64::INFINITY, f64::min)
    }
}

fn distance_to_curve(curve: &Curve, p: Vec2) -> f64 {
    match *curve {
        Curve::Line { start, end } => {
            let d = end - start;
            let t = ((p - start).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
            (start + d * t - p).norm()
        }
        Curve::Arc { center, radius, start_angle, end_angle } => {
            let v = p - center;
            let ang = v.x2.atan2(v.x1);
            let (lo, hi) = if start_angle <= end_angle {
                (start_angle, end_angle)
            } else {
                (end_angle, start_angle)
            };
            // bring the polar angle into [lo, lo + 2π)
            let mut a = ang;
            while a < lo {
                a += 2.0 * PI;
            }
            while a >= lo + 2.0 * PI {
                a -= 2.0 * PI;
            }
            if a <= hi {
                (v.norm() - radius).abs()
            } else {
                let e1 = center + Vec2::from_polar(radius, lo);
                let e2 = center + Vec2::from_polar(radius, hi);
                (e1 - p).norm().min((e2 - p).norm())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Shape helpers used by the benchmarks and the CLI.

/// Full circle as one arc piece.
pub fn circle_piece(center: Vec2, radius: f64, kind: LoopKind, segments: usize, bc: BoundaryCondition) -> PieceSpec {
    let (s, e) = match kind {
        LoopKind::Hole => (2.0 * PI, 0.0),
        _ => (0.0, 2.0 * PI),
    };
    PieceSpec { curve: Curve::Arc { center, radius, start_angle: s, end_angle: e }, segments, bc }
}

/// Five unit semicircles erected outward on the edges of a regular pentagon
/// of side 2 centred at the origin.
pub fn flower_pieces(segments_per_petal: usize, bc: BoundaryCondition) -> Vec<PieceSpec> {
    let petals = 5;
    let apothem = 1.0 / (PI / petals as f64).tan();
    (0..petals)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / petals as f64;
            PieceSpec {
                curve: Curve::Arc {
                    center: Vec2::from_polar(apothem, phi),
                    radius: 1.0,
                    start_angle: phi - 0.5 * PI,
                    end_angle: phi + 0.5 * PI,
                },
                segments: segments_per_petal,
                bc: bc.clone(),
            }
        })
        .collect()
}

/// Counter-clockwise axis-aligned rectangle `[x0, x1] × [y0, y1]`, edges in the
/// order bottom, right, top, left.
pub fn rectangle_pieces(
    lower: Vec2,
    upper: Vec2,
    segments: [usize; 4],
    bcs: [BoundaryCondition; 4],
) -> Vec<PieceSpec> {
    let c = [
        lower,
        Vec2::new(upper.x1, lower.x2),
        upper,
        Vec2::new(lower.x1, upper.x2),
    ];
    let [b0, b1, b2, b3] = bcs;
    let bcs = [b0, b1, b2, b3];
    (0..4)
        .zip(bcs)
        .map(|(i, bc)| PieceSpec {
            curve: Curve::Line { start: c[i], end: c[(i + 1) % 4] },
            segments: segments[i],
            bc,
        })
        .collect()
}
