//! Constant-element collocation BEM: one unknown value or derivative per
//! element, collocation at the element midpoint, dense solve.

use crate::assembly::{AssemblyError, BieSystem, KernelSpec};
use crate::geometry::{BoundaryCondition, Curve, Segment, Vec2};
use crate::quadrature::QuadratureRule;

/// Orders used for off-diagonal, near-field and diagonal element integrals.
const FAR_ORDER: usize = 8;
const NEAR_SPLIT: usize = 8;
const DIAG_ORDER: usize = 32;

/// Element integrals `G = ∫ u^s dΓ` and `H = ∫ t^s dΓ` for a constant density.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ElementIntegrals {
    pub g: [[f64; 2]; 2],
    pub h: [[f64; 2]; 2],
}

/// Per-element solution. `deriv` is the flux or traction with respect to
/// the stored segment normal.
#[derive(Clone, Debug)]
pub struct BemSolution {
    pub n_u: usize,
    pub midpoints: Vec<Vec2>,
    pub value: Vec<[f64; 2]>,
    pub deriv: Vec<[f64; 2]>,
}

fn rule(n: usize) -> QuadratureRule {
    QuadratureRule::gauss_legendre(n).expect("fixed order")
}

/// Integrates the kernel of `kernel` over element `seg` (normal scaled by
/// `sign`) for the collocation point `y`. `own` marks the singular case.
pub fn element_integrals(
    kernel: &KernelSpec,
    seg: &Segment,
    sign: f64,
    y: Vec2,
    own: bool,
) -> Result<ElementIntegrals, AssemblyError> {
    let mut out = ElementIntegrals::default();
    if own {
        let a = seg.half_arc();
        let flat = matches!(seg.curve, Curve::Line { .. });
        let alog = kernel.log_coefficient(y);
        // ∫ A ln|aξ| J dξ with J = a on lines and arcs alike
        let log_part = alog * 2.0 * a * (a.ln() - 1.0);
        let r = rule(DIAG_ORDER);
        for (xi, w) in r.iter() {
            let p = seg.point(xi);
            let k = kernel.eval(p.x, y, p.normal * sign, flat)?;
            let wj = w * p.jacobian;
            for i in 0..2 {
                for j in 0..2 {
                    let mut us = k.us[i][j];
                    if i == j {
                        us -= alog * (a * xi).abs().ln();
                    }
                    out.g[i][j] += wj * us;
                    // symmetric nodes: the odd 1/r part cancels pairwise
                    out.h[i][j] += wj * k.ts[i][j];
                }
            }
        }
        out.g[0][0] += log_part;
        out.g[1][1] += log_part;
        return Ok(out);
    }
    let len = seg.curve.length();
    let near = (seg.source_point() - y).norm() < 3.0 * len;
    let pieces = if near { seg.subdivide(NEAR_SPLIT) } else { vec![seg.clone()] };
    let r = rule(FAR_ORDER);
    for piece in &pieces {
        for (xi, w) in r.iter() {
            let p = piece.point(xi);
            let k = kernel.eval(p.x, y, p.normal * sign, false)?;
            let wj = w * p.jacobian;
            for i in 0..2 {
                for j in 0..2 {
                    out.g[i][j] += wj * k.us[i][j];
                    out.h[i][j] += wj * k.ts[i][j];
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy)]
struct Unknowns {
    value: Option<usize>,
    deriv: Option<usize>,
}

/// Solves `sys` with one constant element per segment.
pub fn bem_solve(sys: &BieSystem) -> Result<BemSolution, AssemblyError> {
    sys.validate()?;
    let segs = &sys.boundary.segments;
    if segs.len() < 8 {
        return Err(AssemblyError::Invalid(format!("at least 8 elements required, got {}", segs.len())));
    }
    let n_u = sys.n_u;
    let mids: Vec<Vec2> = segs.iter().map(Segment::source_point).collect();
    let normals: Vec<Vec2> = segs.iter().map(|s| s.point(0.0).normal).collect();

    let mut next = 0;
    let mut take = |n: usize| {
        let i = next;
        next += n;
        i
    };
    let layout: Vec<Unknowns> = segs
        .iter()
        .map(|s| match s.bc {
            BoundaryCondition::Dirichlet(_) => Unknowns { value: None, deriv: Some(take(n_u)) },
            BoundaryCondition::Neumann(_) => Unknowns { value: Some(take(n_u)), deriv: None },
            BoundaryCondition::Interface => Unknowns { value: Some(take(n_u)), deriv: Some(take(n_u)) },
        })
        .collect();
    let n_el = next;
    let rows: usize = sys.regions.iter().map(|r| r.segments.len() * n_u).sum();
    if rows != n_el {
        return Err(AssemblyError::Invalid(format!("{rows} equations for {n_el} unknowns")));
    }
    // Scalar problems carry an extra constant `C` in every row and the
    // zero-net-flux row whenever some flux is unknown; this removes the
    // degenerate scale (unit circle).
    let augment = n_u == 1 && sys.regions.len() == 1 && layout.iter().any(|l| l.deriv.is_some());
    let n = if augment { n_el + 1 } else { n_el };
    let known_value = |j: usize| match &segs[j].bc {
        BoundaryCondition::Dirichlet(d) => d.eval(mids[j], normals[j]),
        _ => [0.0; 2],
    };
    let known_deriv = |j: usize| match &segs[j].bc {
        BoundaryCondition::Neumann(d) => d.eval(mids[j], normals[j]),
        _ => [0.0; 2],
    };

    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    let mut row = 0;
    for region in &sys.regions {
        for &i in &region.segments {
            let y = mids[i];
            let c = region.kernel.free_term(y);
            for (jj, &j) in region.segments.iter().enumerate() {
                let sg = region.signs[jj];
                let e = element_integrals(&region.kernel, &segs[j], sg, y, i == j)?;
                for comp in 0..n_u {
                    let r = row + comp;
                    for beta in 0..n_u {
                        let mut h = e.h[comp][beta];
                        if i == j && comp == beta {
                            h += c;
                        }
                        // value channel
                        match layout[j].value {
                            Some(col) => a[r * n + col + beta] += h,
                            None => b[r] -= h * known_value(j)[beta],
                        }
                        // region-outward derivative = sg × stored-normal derivative
                        let g = -e.g[comp][beta] * sg;
                        match layout[j].deriv {
                            Some(col) => a[r * n + col + beta] += g,
                            None => b[r] -= g * known_deriv(j)[beta],
                        }
                    }
                }
            }
            if augment {
                a[row * n + n_el] = 1.0;
            }
            row += n_u;
        }
    }
    if augment {
        let region = &sys.regions[0];
        for (jj, &j) in region.segments.iter().enumerate() {
            let w = region.signs[jj] * segs[j].curve.length();
            match layout[j].deriv {
                Some(col) => a[row * n + col] += w,
                None => b[row] -= w * known_deriv(j)[0],
            }
        }
    }
    let x = lu_solve(a, n, b)?;
    let mut value = Vec::with_capacity(segs.len());
    let mut deriv = Vec::with_capacity(segs.len());
    for (j, l) in layout.iter().enumerate() {
        let read = |o: Option<usize>, known: [f64; 2]| match o {
            Some(c) => {
                let mut v = [0.0; 2];
                v[..n_u].copy_from_slice(&x[c..c + n_u]);
                v
            }
            None => known,
        };
        value.push(read(l.value, known_value(j)));
        deriv.push(read(l.deriv, known_deriv(j)));
    }
    Ok(BemSolution { n_u, midpoints: mids, value, deriv })
}

/// Dense Gaussian elimination with partial pivoting (row-major `a`).
pub fn lu_solve(mut a: Vec<f64>, n: usize, mut b: Vec<f64>) -> Result<Vec<f64>, AssemblyError> {
    if a.len() != n * n || b.len() != n {
        return Err(AssemblyError::Invalid("dimension mismatch in dense solve".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(AssemblyError::Invalid("singular system".into()));
    }
    for k in 0..n {
        let (p, pv) = (k..n).map(|i| (i, a[i * n + k].abs())).fold((k, -1.0), |m, v| if v.1 > m.1 { v } else { m });
        if pv <= 1e-13 * scale {
            return Err(AssemblyError::Invalid(format!("singular system (pivot {pv:e} at column {k})")));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let d = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            if f != 0.0 {
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k * n + k];
    }
    Ok(x)
}

impl BemSolution {
    /// Representation formula over the elements of `sys` region `region`.
    pub fn interior(&self, sys: &BieSystem, region: usize, y: Vec2) -> Result<[f64; 2], AssemblyError> {
        let reg = &sys.regions[region];
        let mut v = [0.0; 2];
        for (jj, &j) in reg.segments.iter().enumerate() {
            let sg = reg.signs[jj];
            let e = element_integrals(&reg.kernel, &sys.boundary.segments[j], sg, y, false)?;
            for a in 0..self.n_u {
                for b in 0..self.n_u {
                    v[a] += e.g[a][b] * sg * self.deriv[j][b] - e.h[a][b] * self.value[j][b];
                }
            }
        }
        Ok(v)
    }

    /// `x1,x2,value...,deriv...` rows for regression snapshots.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(if self.n_u == 1 { "x1,x2,value,deriv\n" } else { "x1,x2,u1,u2,t1,t2\n" });
        for (k, m) in self.midpoints.iter().enumerate() {
            if self.n_u == 1 {
                s.push_str(&format!("{},{},{},{}\n", m.x1, m.x2, self.value[k][0], self.deriv[k][0]));
            } else {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    m.x1, m.x2, self.value[k][0], self.value[k][1], self.deriv[k][0], self.deriv[k][1]
                ));
            }
        }
        s
    }
}
