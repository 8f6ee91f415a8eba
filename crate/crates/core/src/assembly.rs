//! Shared boundary-integral machinery for the potential and elastic solvers.
//!
//! A problem is reduced to a linear map from *slots* (scalar unknowns read
//! off the network at evaluation points) to residuals:
//! `R = M·u(θ) + k`. The kernel tables `M` and the known-data vector `k`
//! are built once; training only re-evaluates the network.
//!
//! Potential problems are the `n_u = 1` case: the value channel is `φ`, the
//! derivative channel is the flux `∂φ/∂n`, `us = u^s` and `ts = ∂u^s/∂n`.

use std::collections::HashMap;

use thiserror::Error;

use crate::autodiff::{Matrix, Slot};
use crate::geometry::{Boundary, BoundaryCondition, Curve, Segment, Vec2};
use crate::kernels::{
    halfplane_parts, halfplane_surface_log_coefficient, kelvin_log_coefficient, kelvin_parts, laplace_parts,
    KernelError, Material,
};
use crate::network::NetworkParams;
use crate::quadrature::{integrate_cauchy, integrate_regular, integrate_weak_log, weak_log_weights, QuadratureError, QuadratureRule};

/// Default clearance between interior evaluation points and the boundary.
pub const DEFAULT_MARGIN: f64 = 0.03;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

/// Fundamental solution used by one region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelSpec {
    Laplace,
    Kelvin(Material),
    HalfPlane(Material),
}

/// Kernel values in the common `2 × 2` layout; scalar kernels use `[0][0]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct KernelValue {
    pub us: [[f64; 2]; 2],
    pub ts: [[f64; 2]; 2],
}

impl KernelSpec {
    pub fn n_u(&self) -> usize {
        match self {
            KernelSpec::Laplace => 1,
            _ => 2,
        }
    }

    pub(crate) fn eval(&self, x: Vec2, y: Vec2, n: Vec2, flat: bool) -> Result<KernelValue, KernelError> {
        let r = x - y;
        let d = r.norm();
        if d < crate::kernels::COINCIDENT_TOL {
            return Err(KernelError::Coincident(d));
        }
        let drdn = if flat { 0.0 } else { r.dot(n) / d };
        Ok(match self {
            KernelSpec::Laplace => {
                let k = laplace_parts(d, drdn);
                KernelValue { us: [[k.us, 0.0], [0.0, 0.0]], ts: [[k.dusdn, 0.0], [0.0, 0.0]] }
            }
            KernelSpec::Kelvin(m) => {
                let k = kelvin_parts(r, d, n, drdn, m);
                KernelValue { us: k.us, ts: k.ts }
            }
            KernelSpec::HalfPlane(m) => {
                let k = halfplane_parts(x, y, r, d, n, drdn, m)?;
                KernelValue { us: k.us, ts: k.ts }
            }
        })
    }

    /// Coefficient `A` of `ln r` on the diagonal of `us` for a source at `y`
    /// on the boundary.
    pub fn log_coefficient(&self, y: Vec2) -> f64 {
        match self {
            KernelSpec::Laplace => -1.0 / (2.0 * std::f64::consts::PI),
            KernelSpec::Kelvin(m) => kelvin_log_coefficient(m),
            KernelSpec::HalfPlane(m) if y.x1.abs() < 1e-12 => halfplane_surface_log_coefficient(m),
            KernelSpec::HalfPlane(m) => kelvin_log_coefficient(m),
        }
    }

    /// Free-term coefficient at a smooth boundary point.
    pub fn free_term(&self, y: Vec2) -> f64 {
        match self {
            // image terms remove the jump across the free surface
            KernelSpec::HalfPlane(_) if y.x1.abs() < 1e-12 => 1.0,
            _ => 0.5,
        }
    }

    pub fn material(&self) -> Option<&Material> {
        match self {
            KernelSpec::Laplace => None,
            KernelSpec::Kelvin(m) | KernelSpec::HalfPlane(m) => Some(m),
        }
    }
}

/// One region of a (possibly multi-region) problem.
#[derive(Clone, Debug)]
pub struct RegionSpec {
    pub id: usize,
    pub kernel: KernelSpec,
    /// Boundary segments of this region.
    pub segments: Vec<usize>,
    /// `+1` if the segment normal points out of this region, `−1` otherwise.
    pub signs: Vec<f64>,
    /// Loss weight of each squared residual of this region.
    pub weight: f64,
}

/// Material interface shared by two regions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceSpec {
    /// Material used to evaluate the interface traction.
    pub material: Material,
    /// Orientation of the reference normal relative to the segment normal.
    pub normal_sign: f64,
}

/// Problem description consumed by the assembly routines.
#[derive(Clone, Debug)]
pub struct BieSystem {
    pub boundary: Boundary,
    pub n_u: usize,
    pub regions: Vec<RegionSpec>,
    pub interface: Option<InterfaceSpec>,
}

/// Which quantity a derivative slot carries.
#[derive(Clone, Copy, Debug, PartialEq)]
enum DerivKind {
    Flux,
    Traction(Material),
}

/// Coefficients of the derivative channel `comp` over the network streams.
fn deriv_terms(kind: DerivKind, comp: usize, n: Vec2, n_u: usize) -> Vec<(u8, u8, f64)> {
    match kind {
        DerivKind::Flux => vec![(1, 0, n.x1), (2, 0, n.x2)],
        DerivKind::Traction(m) => {
            let g = m.shear_modulus();
            let lam = m.lame_lambda();
            let nn = [n.x1, n.x2];
            let mut terms = Vec::with_capacity(4);
            for k in 0..n_u {
                for j in 0..2 {
                    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let c = g * (d(comp, k) * nn[j] + d(comp, j) * nn[k]) + lam * d(k, j) * nn[comp];
                    if c != 0.0 {
                        terms.push((1 + j as u8, k as u8, c));
                    }
                }
            }
            terms
        }
    }
}

/// Derivative channel at a boundary point, from the network Jacobian.
pub(crate) fn deriv_from_jacobian(kind_material: Option<&Material>, jac: &[[f64; 2]], n: Vec2) -> [f64; 2] {
    match kind_material {
        None => [jac[0][0] * n.x1 + jac[0][1] * n.x2, 0.0],
        Some(m) => {
            let s = m.stress([jac[0], jac[1]]);
            [s[0][0] * n.x1 + s[0][1] * n.x2, s[1][0] * n.x1 + s[1][1] * n.x2]
        }
    }
}

impl BieSystem {
    pub fn points_per_segment(rule: &QuadratureRule) -> usize {
        rule.order() + 1
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        if self.regions.is_empty() {
            return Err(AssemblyError::Invalid("no regions".into()));
        }
        for r in &self.regions {
            if r.kernel.n_u() != self.n_u {
                return Err(AssemblyError::Invalid("kernel and unknown dimension disagree".into()));
            }
            if r.segments.len() != r.signs.len() {
                return Err(AssemblyError::Invalid("region signs and segments differ in length".into()));
            }
            if r.segments.iter().any(|&s| s >= self.boundary.len()) {
                return Err(AssemblyError::Invalid("region references a missing segment".into()));
            }
        }
        for s in &self.boundary.segments {
            if matches!(s.bc, BoundaryCondition::Interface) && self.interface.is_none() {
                return Err(AssemblyError::Invalid(
                    "interface segments need a second region and an interface material".into(),
                ));
            }
        }
        Ok(())
    }

    fn deriv_kind(&self, region: &RegionSpec, seg: &Segment) -> (DerivKind, f64) {
        match (&seg.bc, self.interface) {
            (BoundaryCondition::Interface, Some(i)) => (DerivKind::Traction(i.material), i.normal_sign),
            _ => match region.kernel.material() {
                None => (DerivKind::Flux, 1.0),
                Some(m) => (DerivKind::Traction(*m), 1.0),
            },
        }
    }

    /// Network evaluation points: quadrature nodes then the source point of
    /// every segment.
    pub fn evaluation_points(&self, rule: &QuadratureRule) -> Vec<Vec2> {
        let mut pts = Vec::with_capacity(self.boundary.len() * (rule.order() + 1));
        for s in &self.boundary.segments {
            for &xi in &rule.nodes {
                pts.push(s.curve.point(xi));
            }
            pts.push(s.source_point());
        }
        pts
    }

    /// Source points as `(region index, segment index)` in row order.
    pub fn sources(&self) -> Vec<(usize, usize)> {
        self.regions
            .iter()
            .enumerate()
            .flat_map(|(ri, r)| r.segments.iter().map(move |&s| (ri, s)))
            .collect()
    }
}

/// Precomputed linear residual map.
#[derive(Clone, Debug)]
pub struct Assembly {
    pub n_u: usize,
    pub points: Vec<Vec2>,
    pub slots: Vec<Slot>,
    pub matrix: Matrix,
    /// Known-data part `k` of `R = M u + k`.
    pub known: Vec<f64>,
    /// `−k`, the target of the least-squares loss.
    pub target: Vec<f64>,
    pub weights: Vec<f64>,
    /// `(region index, segment index, component)` per row.
    pub rows: Vec<(usize, usize, usize)>,
}

/// Value or slot reference for one channel at one point.
enum Channel {
    Known(f64),
    Slot(usize, f64),
}

struct Builder<'s> {
    sys: &'s BieSystem,
    rule: &'s QuadratureRule,
    slots: Vec<Slot>,
    index: HashMap<(usize, u8, u8), usize>,
    points_per_seg: usize,
}

impl<'s> Builder<'s> {
    fn slot(&mut self, point: usize, kind: u8, comp: usize, terms: impl FnOnce() -> Vec<(u8, u8, f64)>) -> usize {
        let key = (point, kind, comp as u8);
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.slots.len();
        self.slots.push(Slot { point, terms: terms() });
        self.index.insert(key, i);
        i
    }

    /// Value channel `comp` on segment `j` at local point `q` (`q == n_g` is the source).
    fn value(&mut self, j: usize, q: usize, x: Vec2, n: Vec2, comp: usize) -> Channel {
        let seg = &self.sys.boundary.segments[j];
        match &seg.bc {
            BoundaryCondition::Dirichlet(d) => Channel::Known(d.eval(x, n)[comp]),
            _ => {
                let p = j * self.points_per_seg + q;
                Channel::Slot(self.slot(p, 0, comp, || vec![(0, comp as u8, 1.0)]), 1.0)
            }
        }
    }

    /// Derivative channel `comp` seen from `region` with outward sign `sg`.
    fn deriv(&mut self, region: &RegionSpec, sg: f64, j: usize, q: usize, x: Vec2, n: Vec2, comp: usize) -> Channel {
        let seg = &self.sys.boundary.segments[j];
        match &seg.bc {
            BoundaryCondition::Neumann(d) => Channel::Known(sg * d.eval(x, n)[comp]),
            _ => {
                let (kind, ref_sign) = self.sys.deriv_kind(region, seg);
                let p = j * self.points_per_seg + q;
                let n_u = self.sys.n_u;
                let s = self.slot(p, 1, comp, || deriv_terms(kind, comp, n * ref_sign, n_u));
                Channel::Slot(s, sg * ref_sign)
            }
        }
    }
}

/// Builds `M`, `k` and row weights for every source point of every region.
pub fn assemble(sys: &BieSystem, rule: &QuadratureRule) -> Result<Assembly, AssemblyError> {
    sys.validate()?;
    rule.require_even()?;
    let n_u = sys.n_u;
    let ng = rule.order();
    let mut b = Builder { sys, rule, slots: Vec::new(), index: HashMap::new(), points_per_seg: ng + 1 };
    let mut rows_coef: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut known = Vec::new();
    let mut weights = Vec::new();
    let mut rows = Vec::new();

    for (ri, region) in sys.regions.iter().enumerate() {
        for &si in &region.segments {
            let src = &sys.boundary.segments[si];
            let y = src.source_point();
            let y_pt = src.point(0.0);
            let a = src.half_arc();
            let c = region.kernel.free_term(y);
            let alog = region.kernel.log_coefficient(y);
            let (alpha, alpha0) = weak_log_weights(a, b.rule)?;
            let sign_i = sign_of(region, si);
            for comp in 0..n_u {
                let mut coef: Vec<(usize, f64)> = Vec::new();
                let mut k = 0.0;
                let add = |ch: Channel, w: f64, coef: &mut Vec<(usize, f64)>, k: &mut f64| match ch {
                    Channel::Known(v) => *k += w * v,
                    Channel::Slot(s, m) => coef.push((s, w * m)),
                };
                // free term
                let ch = b.value(si, ng, y, y_pt.normal, comp);
                add(ch, c, &mut coef, &mut k);
                for (jj, &j) in region.segments.iter().enumerate() {
                    let sg = region.signs[jj];
                    let seg = &sys.boundary.segments[j];
                    let singular = j == si;
                    let flat = singular && matches!(seg.curve, Curve::Line { .. });
                    for q in 0..ng {
                        let (xi, w) = (rule.nodes[q], rule.weights[q]);
                        let p = seg.point(xi);
                        let n = p.normal * sg;
                        let kv = region.kernel.eval(p.x, y, n, flat)?;
                        let wj = w * p.jacobian;
                        for beta in 0..n_u {
                            let ch = b.value(j, q, p.x, p.normal, beta);
                            add(ch, kv.ts[comp][beta] * wj, &mut coef, &mut k);
                            let mut us = kv.us[comp][beta];
                            if singular && beta == comp {
                                us -= alog * (a * xi).abs().ln();
                            }
                            let ch = b.deriv(region, sg, j, q, p.x, p.normal, beta);
                            add(ch, -us * wj, &mut coef, &mut k);
                        }
                        if singular {
                            let ch = b.deriv(region, sg, j, q, p.x, p.normal, comp);
                            add(ch, -alog * alpha[q] * p.jacobian / a, &mut coef, &mut k);
                        }
                    }
                    if singular {
                        let ch = b.deriv(region, sign_i, si, ng, y, y_pt.normal, comp);
                        add(ch, -alog * alpha0 * y_pt.jacobian / a, &mut coef, &mut k);
                    }
                }
                rows_coef.push(coef);
                known.push(k);
                weights.push(region.weight);
                rows.push((ri, si, comp));
            }
        }
    }
    let mut matrix = Matrix::zeros(rows_coef.len(), b.slots.len());
    for (r, coef) in rows_coef.iter().enumerate() {
        let row = matrix.row_mut(r);
        for &(s, v) in coef {
            row[s] += v;
        }
    }
    let target = known.iter().map(|v| -v).collect();
    Ok(Assembly { n_u, points: sys.evaluation_points(rule), slots: b.slots, matrix, known, target, weights, rows })
}

fn sign_of(region: &RegionSpec, seg: usize) -> f64 {
    region.segments.iter().position(|&s| s == seg).map(|i| region.signs[i]).unwrap_or(1.0)
}

/// Anything that supplies values and spatial Jacobians at a point: the
/// network, or a closed-form field substituted for it in tests.
pub trait Field {
    fn eval(&self, x: Vec2) -> (Vec<f64>, Vec<[f64; 2]>);
}

impl Field for NetworkParams {
    fn eval(&self, x: Vec2) -> (Vec<f64>, Vec<[f64; 2]>) {
        self.forward_with_spatial_grad(x)
    }
}

/// Wraps a closure as a [`Field`].
pub struct FnField<F>(pub F);

impl<F: Fn(Vec2) -> (Vec<f64>, Vec<[f64; 2]>)> Field for FnField<F> {
    fn eval(&self, x: Vec2) -> (Vec<f64>, Vec<[f64; 2]>) {
        (self.0)(x)
    }
}

/// Slot values from plain field evaluations.
pub fn evaluate_slots(field: &dyn Field, points: &[Vec2], slots: &[Slot]) -> Vec<f64> {
    let evals: Vec<_> = points.iter().map(|p| field.eval(*p)).collect();
    slots
        .iter()
        .map(|s| {
            let (v, jac) = &evals[s.point];
            s.terms
                .iter()
                .map(|&(st, comp, c)| {
                    let x = match st {
                        0 => v[comp as usize],
                        j => jac[comp as usize][j as usize - 1],
                    };
                    c * x
                })
                .sum()
        })
        .collect()
}

impl Assembly {
    /// `R = M u + k` for the given parameters.
    pub fn residuals(&self, field: &dyn Field) -> Vec<f64> {
        let u = evaluate_slots(field, &self.points, &self.slots);
        self.matrix.matvec(&u).iter().zip(&self.known).map(|(a, b)| a + b).collect()
    }

    /// `Σ w_r R_r²`.
    pub fn loss(&self, field: &dyn Field) -> f64 {
        self.residuals(field).iter().zip(&self.weights).map(|(r, w)| w * r * r).sum()
    }

    /// Residual vectors grouped per source point (`n_u` entries each).
    pub fn residuals_per_source(&self, field: &dyn Field) -> Vec<Vec<f64>> {
        self.residuals(field).chunks(self.n_u).map(|c| c.to_vec()).collect()
    }
}

// ---------------------------------------------------------------------------
// Direct evaluation without tables.

/// Channel values along the boundary given by a network (or any closure).
pub(crate) struct FieldSource<'a> {
    pub sys: &'a BieSystem,
    pub field: &'a dyn Field,
}

impl FieldSource<'_> {
    fn value(&self, seg: &Segment, x: Vec2, n: Vec2) -> [f64; 2] {
        match &seg.bc {
            BoundaryCondition::Dirichlet(d) => d.eval(x, n),
            _ => {
                let (v, _) = self.field.eval(x);
                [v[0], v.get(1).copied().unwrap_or(0.0)]
            }
        }
    }

    fn deriv(&self, region: &RegionSpec, sg: f64, seg: &Segment, x: Vec2, n: Vec2) -> [f64; 2] {
        match &seg.bc {
            BoundaryCondition::Neumann(d) => {
                let t = d.eval(x, n);
                [sg * t[0], sg * t[1]]
            }
            _ => {
                let (kind, ref_sign) = self.sys.deriv_kind(region, seg);
                let (_, jac) = self.field.eval(x);
                let m = match kind {
                    DerivKind::Flux => None,
                    DerivKind::Traction(m) => Some(m),
                };
                let t = deriv_from_jacobian(m.as_ref(), &jac, n * ref_sign);
                [sg * ref_sign * t[0], sg * ref_sign * t[1]]
            }
        }
    }
}

/// Residual at one source point computed segment by segment with the
/// quadrature routines, without any precomputed table.
pub fn residual_direct(
    sys: &BieSystem,
    field: &dyn Field,
    rule: &QuadratureRule,
    region_index: usize,
    source_segment: usize,
) -> Result<Vec<f64>, AssemblyError> {
    let region = &sys.regions[region_index];
    let f = FieldSource { sys, field };
    let src = &sys.boundary.segments[source_segment];
    let y = src.source_point();
    let yp = src.point(0.0);
    let c = region.kernel.free_term(y);
    let alog = region.kernel.log_coefficient(y);
    let a = src.half_arc();
    let mut out = vec![0.0; sys.n_u];
    let uy = f.value(src, y, yp.normal);
    for comp in 0..sys.n_u {
        let mut r = c * uy[comp];
        for (jj, &j) in region.segments.iter().enumerate() {
            let sg = region.signs[jj];
            let seg = &sys.boundary.segments[j];
            let singular = j == source_segment;
            let flat = singular && matches!(seg.curve, Curve::Line { .. });
            let err = std::cell::RefCell::new(None);
            let kern = |x: Vec2, n: Vec2| match region.kernel.eval(x, y, n * sg, flat) {
                Ok(k) => k,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    KernelValue { us: [[0.0; 2]; 2], ts: [[0.0; 2]; 2] }
                }
            };
            if singular {
                // double layer as a principal value in ξ
                let ts_part = integrate_cauchy(rule, |xi| {
                    let p = seg.point(xi);
                    let kv = kern(p.x, p.normal);
                    let u = f.value(seg, p.x, p.normal);
                    xi * p.jacobian * (0..sys.n_u).map(|b| kv.ts[comp][b] * u[b]).sum::<f64>()
                })?;
                // single layer: log part in the arc coordinate plus a regular remainder
                let log_part = integrate_weak_log(
                    seg,
                    rule,
                    |t| {
                        let p = seg.point(t / a);
                        alog * f.deriv(region, sg, seg, p.x, p.normal)[comp] * p.jacobian / a
                    },
                    alog * f.deriv(region, sg, seg, y, yp.normal)[comp] * yp.jacobian / a,
                )?;
                let rem = integrate_regular(seg, rule, |p| {
                    let kv = kern(p.x, p.normal);
                    let t = f.deriv(region, sg, seg, p.x, p.normal);
                    (0..sys.n_u)
                        .map(|b| {
                            let mut us = kv.us[comp][b];
                            if b == comp {
                                us -= alog * (a * p.xi).abs().ln();
                            }
                            us * t[b]
                        })
                        .sum::<f64>()
                })?;
                r += ts_part - log_part - rem;
            } else {
                let v = integrate_regular(seg, rule, |p| {
                    let kv = kern(p.x, p.normal);
                    let u = f.value(seg, p.x, p.normal);
                    let t = f.deriv(region, sg, seg, p.x, p.normal);
                    (0..sys.n_u).map(|b| kv.ts[comp][b] * u[b] - kv.us[comp][b] * t[b]).sum::<f64>()
                })?;
                r += v;
            }
            if let Some(e) = err.into_inner() {
                return Err(e.into());
            }
        }
        out[comp] = r;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Interior reconstruction.

/// Boundary values sampled on a (possibly refined) boundary, ready for the
/// representation formula.
#[derive(Clone, Debug)]
pub struct BoundaryTrace {
    pub n_u: usize,
    /// Per region: nodes `(x, region-outward normal, w·J, u, t)`.
    regions: Vec<(KernelSpec, Vec<TraceNode>)>,
    boundary: Boundary,
}

#[derive(Clone, Copy, Debug)]
struct TraceNode {
    x: Vec2,
    n: Vec2,
    wj: f64,
    u: [f64; 2],
    t: [f64; 2],
}

/// Interior value with a flag for points inside the clearance band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorValue {
    pub value: [f64; 2],
    pub near_boundary: bool,
}

impl BoundaryTrace {
    /// Samples the boundary with every segment split `refine` times.
    pub fn new(sys: &BieSystem, field: &dyn Field, rule: &QuadratureRule, refine: usize) -> Result<Self, AssemblyError> {
        sys.validate()?;
        let f = FieldSource { sys, field };
        let refine = refine.max(1);
        let mut regions = Vec::new();
        for region in &sys.regions {
            let mut nodes = Vec::new();
            for (jj, &j) in region.segments.iter().enumerate() {
                let sg = region.signs[jj];
                for piece in sys.boundary.segments[j].subdivide(refine) {
                    for (xi, w) in rule.iter() {
                        let p = piece.point(xi);
                        nodes.push(TraceNode {
                            x: p.x,
                            n: p.normal * sg,
                            wj: w * p.jacobian,
                            u: f.value(&piece, p.x, p.normal),
                            t: f.deriv(region, sg, &piece, p.x, p.normal),
                        });
                    }
                }
            }
            regions.push((region.kernel, nodes));
        }
        Ok(Self { n_u: sys.n_u, regions, boundary: sys.boundary.refined(refine) })
    }

    /// `u(y) = ∫ u^s t − ∫ t^s u` over the boundary of `region`.
    pub fn value_in_region(&self, region: usize, y: Vec2, margin: f64) -> Result<InteriorValue, AssemblyError> {
        let (kernel, nodes) = &self.regions[region];
        let mut v = [0.0; 2];
        for nd in nodes {
            let kv = kernel.eval(nd.x, y, nd.n, false)?;
            for comp in 0..self.n_u {
                for b in 0..self.n_u {
                    v[comp] += nd.wj * (kv.us[comp][b] * nd.t[b] - kv.ts[comp][b] * nd.u[b]);
                }
            }
        }
        Ok(InteriorValue { value: v, near_boundary: self.boundary.distance_to(y) < margin })
    }

    /// Region containing `y`: the last region whose closed boundary winds
    /// around it, else the first region.
    pub fn region_of(&self, y: Vec2) -> usize {
        for (ri, (_, nodes)) in self.regions.iter().enumerate().skip(1).rev() {
            // −∮ ∂G/∂n over the region's boundary is 1 inside, 0 outside
            let mut s = 0.0;
            for nd in nodes {
                let r = nd.x - y;
                s += nd.wj * r.dot(nd.n) / (2.0 * std::f64::consts::PI * r.norm_sq());
            }
            if s > 0.5 {
                return ri;
            }
        }
        0
    }

    pub fn value(&self, y: Vec2, margin: f64) -> Result<InteriorValue, AssemblyError> {
        self.value_in_region(self.region_of(y), y, margin)
    }
}
