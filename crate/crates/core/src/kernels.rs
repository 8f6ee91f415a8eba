//! Fundamental solutions: 2D Laplace, Kelvin (full plane), the elastic half
//! plane (Kelvin plus image terms) and the Flamant surface load.
//!
//! Conventions: `x` is the field point, `y` the source (load) point and
//! `r = x − y`. Elastic kernels are indexed load direction first, so
//! `us[l][k]` is the `k`-th displacement at `x` caused by a unit force along
//! `l` at `y`. Half-plane coordinates measure depth along `x₁ ≥ 0` with the
//! free surface at `x₁ = 0`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::dual::{Dual2, Scalar};
use crate::geometry::Vec2;

/// Distances below this are treated as coincident points.
pub const COINCIDENT_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("coincident field and source points (|r| = {0:e}); use the regularized path")]
    Coincident(f64),
    #[error("point {0} lies outside the half-plane x1 >= 0")]
    OutsideHalfPlane(Vec2),
    #[error("invalid material: {0}")]
    Material(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneCondition {
    PlaneStrain,
    PlaneStress,
}

/// Isotropic linear-elastic material.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Material {
    pub young: f64,
    pub poisson: f64,
    pub plane: PlaneCondition,
}

impl Material {
    pub fn new(young: f64, poisson: f64, plane: PlaneCondition) -> Result<Self, KernelError> {
        let m = Self { young, poisson, plane };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if !(self.young > 0.0 && self.young.is_finite()) {
            return Err(KernelError::Material(format!("Young's modulus must be positive, got {}", self.young)));
        }
        if !(self.poisson > -1.0 && self.poisson < 0.5) {
            return Err(KernelError::Material(format!(
                "Poisson ratio must lie in (-1, 0.5), got {}",
                self.poisson
            )));
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    /// Poisson ratio entering the plane-strain form of kernels and Hooke's law.
    pub fn kernel_nu(&self) -> f64 {
        match self.plane {
            PlaneCondition::PlaneStrain => self.poisson,
            PlaneCondition::PlaneStress => self.poisson / (1.0 + self.poisson),
        }
    }

    /// `λ = 2Gν/(1 − 2ν)` with the effective ratio.
    pub fn lame_lambda(&self) -> f64 {
        let nu = self.kernel_nu();
        2.0 * self.shear_modulus() * nu / (1.0 - 2.0 * nu)
    }

    /// `σ = 2Gε + λ tr(ε) I` from a displacement gradient `grad[k][j] = ∂u_k/∂x_j`.
    pub fn stress(&self, grad: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let g = self.shear_modulus();
        let lam = self.lame_lambda();
        let tr = grad[0][0] + grad[1][1];
        let e12 = 0.5 * (grad[0][1] + grad[1][0]);
        [
            [2.0 * g * grad[0][0] + lam * tr, 2.0 * g * e12],
            [2.0 * g * e12, 2.0 * g * grad[1][1] + lam * tr],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialKernel {
    pub us: f64,
    pub dusdn: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticKernel {
    pub us: [[f64; 2]; 2],
    pub ts: [[f64; 2]; 2],
}

fn separation(x: Vec2, y: Vec2) -> Result<(Vec2, f64), KernelError> {
    let r = x - y;
    let d = r.norm();
    if d < COINCIDENT_TOL {
        return Err(KernelError::Coincident(d));
    }
    Ok((r, d))
}

/// Laplace kernel `u^s = −ln r/(2π)`, `∂u^s/∂n = −(r·n)/(2π r²)`.
pub fn laplace_kernel(x: Vec2, y: Vec2, n: Vec2) -> Result<PotentialKernel, KernelError> {
    let (r, d) = separation(x, y)?;
    Ok(laplace_parts(d, r.dot(n) / d))
}

/// Same kernel from the distance and `∂r/∂n`; assembly passes an exact zero
/// for `∂r/∂n` on flat source segments.
pub(crate) fn laplace_parts(d: f64, drdn: f64) -> PotentialKernel {
    PotentialKernel { us: -d.ln() / (2.0 * PI), dusdn: -drdn / (2.0 * PI * d) }
}

/// Kelvin point-load solution in plane-strain form with the material's
/// effective Poisson ratio.
pub fn kelvin_kernel(x: Vec2, y: Vec2, n: Vec2, mat: &Material) -> Result<ElasticKernel, KernelError> {
    let (r, d) = separation(x, y)?;
    Ok(kelvin_parts(r, d, n, r.dot(n) / d, mat))
}

pub(crate) fn kelvin_parts(r: Vec2, d: f64, n: Vec2, drdn: f64, mat: &Material) -> ElasticKernel {
    let nu = mat.kernel_nu();
    let g = mat.shear_modulus();
    let cu = 1.0 / (8.0 * PI * g * (1.0 - nu));
    let ct = -1.0 / (4.0 * PI * (1.0 - nu) * d);
    let rr = [r.x1 / d, r.x2 / d];
    let nn = [n.x1, n.x2];
    let lnr = d.ln();
    let mut us = [[0.0; 2]; 2];
    let mut ts = [[0.0; 2]; 2];
    for l in 0..2 {
        for k in 0..2 {
            let delta = if l == k { 1.0 } else { 0.0 };
            us[l][k] = cu * (-(3.0 - 4.0 * nu) * lnr * delta + rr[l] * rr[k]);
            ts[l][k] = ct
                * (drdn * ((1.0 - 2.0 * nu) * delta + 2.0 * rr[l] * rr[k])
                    - (1.0 - 2.0 * nu) * (rr[l] * nn[k] - rr[k] * nn[l]));
        }
    }
    ElasticKernel { us, ts }
}

/// Coefficient of `ln r` on the diagonal of the Kelvin displacement kernel.
pub fn kelvin_log_coefficient(mat: &Material) -> f64 {
    let nu = mat.kernel_nu();
    -(3.0 - 4.0 * nu) / (8.0 * PI * mat.shear_modulus() * (1.0 - nu))
}

/// Coefficient of `ln r` on the diagonal of the half-plane displacement
/// kernel when source and field both lie on the free surface.
pub fn halfplane_surface_log_coefficient(mat: &Material) -> f64 {
    let nu = mat.kernel_nu();
    -(1.0 - nu) / (PI * mat.shear_modulus())
}

/// Image part of the half-plane displacement kernel, generic so that it can
/// be differentiated in `x` with [`Dual2`].
fn halfplane_aux<S: Scalar>(x1: S, x2: S, y: Vec2, nu: f64, kd: f64) -> [[S; 2]; 2] {
    let c = y.x1;
    let cs = S::cst(c);
    let r1 = x1 - cs;
    let r2 = x2 - S::cst(y.x2);
    let big_r1 = x1 + cs;
    let big_r2 = r2;
    let rsq = big_r1 * big_r1 + big_r2 * big_r2;
    let r4 = rsq * rsq;
    let ln_r = S::cst(0.5) * rsq.ln();
    let theta = big_r2.atan2(big_r1);
    let a = 8.0 * (1.0 - nu) * (1.0 - nu) - (3.0 - 4.0 * nu);
    let k34 = S::cst(3.0 - 4.0 * nu);
    let cx = cs * x1;
    let four = S::cst(4.0);
    let two = S::cst(2.0);
    let kd = S::cst(kd);
    let tcoef = S::cst(4.0 * (1.0 - nu) * (1.0 - 2.0 * nu));
    let u11 = kd * (-(S::cst(a) * ln_r) + (k34 * big_r1 * big_r1 - two * cx) / rsq + four * cx * big_r1 * big_r1 / r4);
    let u12 = kd * (k34 * r1 * r2 / rsq + four * cx * big_r1 * r2 / r4 - tcoef * theta);
    let u21 = kd * (k34 * r1 * r2 / rsq - four * cx * big_r1 * r2 / r4 + tcoef * theta);
    let u22 = kd * (-(S::cst(a) * ln_r) + (k34 * r2 * r2 + two * cx) / rsq - four * cx * r2 * r2 / r4);
    [[u11, u12], [u21, u22]]
}

/// Half-plane fundamental solution: Kelvin plus the image terms that make
/// the surface `x₁ = 0` traction free.
pub fn halfplane_kernel(x: Vec2, y: Vec2, n: Vec2, mat: &Material) -> Result<ElasticKernel, KernelError> {
    let (r, d) = separation(x, y)?;
    halfplane_parts(x, y, r, d, n, r.dot(n) / d, mat)
}

pub(crate) fn halfplane_parts(
    x: Vec2,
    y: Vec2,
    r: Vec2,
    d: f64,
    n: Vec2,
    drdn: f64,
    mat: &Material,
) -> Result<ElasticKernel, KernelError> {
    // Tiny negative depths come from round-off on the surface.
    for p in [x, y] {
        if p.x1 < -1e-12 {
            return Err(KernelError::OutsideHalfPlane(p));
        }
    }
    let x = Vec2::new(x.x1.max(0.0), x.x2);
    let y = Vec2::new(y.x1.max(0.0), y.x2);
    let mut k = kelvin_parts(r, d, n, drdn, mat);
    let nu = mat.kernel_nu();
    let g = mat.shear_modulus();
    let kd = 1.0 / (8.0 * PI * (1.0 - nu) * g);
    let aux = halfplane_aux(Dual2::variable(x.x1, 0), Dual2::variable(x.x2, 1), y, nu, kd);
    for l in 0..2 {
        let grad = [aux[l][0].tangents, aux[l][1].tangents];
        let s = mat.stress(grad);
        for kk in 0..2 {
            k.us[l][kk] += aux[l][kk].value;
            k.ts[l][kk] += s[kk][0] * n.x1 + s[kk][1] * n.x2;
        }
    }
    Ok(k)
}

/// Displacement at `y` due to a unit load pressing into the half-plane at
/// the surface point `x`; `θ` is the angle of `y − x` from the inward normal.
pub fn flamant_displacement(x: Vec2, y: Vec2, mat: &Material) -> Result<[f64; 2], KernelError> {
    let (r, d) = separation(y, x)?;
    let nu = mat.kernel_nu();
    let g = mat.shear_modulus();
    let theta = r.x2.atan2(r.x1);
    let (s, c) = theta.sin_cos();
    let f = -1.0 / (2.0 * PI * g);
    Ok([
        f * (2.0 * (1.0 - nu) * d.ln() - c * c),
        f * ((1.0 - 2.0 * nu) * theta - c * s),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat() -> Material {
        Material::new(1.0, 0.3, PlaneCondition::PlaneStrain).unwrap()
    }

    #[test]
    fn laplace_examples() {
        let k = laplace_kernel(Vec2::new(1.0, 0.0), Vec2::ZERO, Vec2::new(0.0, 1.0)).unwrap();
        assert_eq!(k.us, 0.0);
        assert_eq!(k.dusdn, 0.0);
        assert!(matches!(laplace_kernel(Vec2::ZERO, Vec2::ZERO, Vec2::new(1.0, 0.0)), Err(KernelError::Coincident(_))));
        let a = laplace_kernel(Vec2::new(0.3, 0.2), Vec2::new(-1.0, 0.7), Vec2::new(1.0, 0.0)).unwrap();
        let b = laplace_kernel(Vec2::new(-1.0, 0.7), Vec2::new(0.3, 0.2), Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(a.us, b.us);
    }

    #[test]
    fn laplace_is_harmonic() {
        let y = Vec2::new(0.2, -0.1);
        let h = 1e-3;
        let u = |p: Vec2| laplace_kernel(p, y, Vec2::new(1.0, 0.0)).unwrap().us;
        for p in [Vec2::new(1.0, 0.5), Vec2::new(-0.7, 0.9), Vec2::new(0.3, -1.2)] {
            let lap = (u(p + Vec2::new(h, 0.0)) + u(p - Vec2::new(h, 0.0)) + u(p + Vec2::new(0.0, h))
                + u(p - Vec2::new(0.0, h))
                - 4.0 * u(p))
                / (h * h);
            assert!(lap.abs() < 1e-6, "{lap}");
        }
    }

    #[test]
    fn laplace_normal_derivative_matches_gradient() {
        let y = Vec2::new(0.2, -0.1);
        let x = Vec2::new(1.1, 0.4);
        let n = Vec2::new(0.6, 0.8);
        let h = 1e-6;
        let fd = (laplace_kernel(x + n * h, y, n).unwrap().us - laplace_kernel(x - n * h, y, n).unwrap().us) / (2.0 * h);
        assert!((fd - laplace_kernel(x, y, n).unwrap().dusdn).abs() < 1e-9);
    }

    #[test]
    fn material_validation() {
        assert!(Material::new(0.0, 0.3, PlaneCondition::PlaneStrain).is_err());
        assert!(Material::new(1.0, 0.5, PlaneCondition::PlaneStrain).is_err());
        assert!(Material::new(1.0, -1.0, PlaneCondition::PlaneStress).is_err());
        let m = Material::new(1.0, 0.3, PlaneCondition::PlaneStress).unwrap();
        assert!((m.kernel_nu() - 0.3 / 1.3).abs() < 1e-15);
        assert!((m.shear_modulus() - 1.0 / 2.6).abs() < 1e-15);
    }

    #[test]
    fn plane_stress_hooke_has_no_transverse_stress() {
        // uniaxial stress state: ε₁₁ = 1/E, ε₂₂ = −ν/E
        let m = Material::new(2.0, 0.25, PlaneCondition::PlaneStress).unwrap();
        let s = m.stress([[0.5, 0.0], [0.0, -0.125]]);
        assert!((s[0][0] - 1.0).abs() < 1e-14);
        assert!(s[1][1].abs() < 1e-14);
    }

    #[test]
    fn kelvin_symmetry_and_incompressible_limit() {
        let m = mat();
        let x = Vec2::new(0.4, 1.3);
        let y = Vec2::new(-0.5, 0.2);
        let n = Vec2::new(0.0, 1.0);
        let a = kelvin_kernel(x, y, n, &m).unwrap();
        let b = kelvin_kernel(y, x, n, &m).unwrap();
        assert_eq!(a.us[0][1], a.us[1][0]);
        for l in 0..2 {
            for k in 0..2 {
                assert_eq!(a.us[l][k], b.us[k][l]);
            }
        }
        // the antisymmetric traction term carries the factor 1 − 2ν
        let near = Material { young: 1.0, poisson: 0.5 - 1e-12, plane: PlaneCondition::PlaneStrain };
        let k = kelvin_kernel(x, y, n, &near).unwrap();
        assert!((k.ts[0][1] - k.ts[1][0]).abs() < 1e-10);
    }

    fn fd_stress(u: impl Fn(Vec2) -> [f64; 2], x: Vec2, m: &Material, h: f64) -> [[f64; 2]; 2] {
        let mut grad = [[0.0; 2]; 2];
        for j in 0..2 {
            let e = if j == 0 { Vec2::new(h, 0.0) } else { Vec2::new(0.0, h) };
            let up = u(x + e);
            let dn = u(x - e);
            for k in 0..2 {
                grad[k][j] = (up[k] - dn[k]) / (2.0 * h);
            }
        }
        m.stress(grad)
    }

    #[test]
    fn kelvin_traction_is_hooke_of_displacement() {
        for m in [mat(), Material::new(3.0, 0.2, PlaneCondition::PlaneStress).unwrap()] {
            let y = Vec2::new(0.1, -0.3);
            let x = Vec2::new(0.9, 0.5);
            let n = Vec2::new(0.28, -0.96);
            let k = kelvin_kernel(x, y, n, &m).unwrap();
            for l in 0..2 {
                let s = fd_stress(|p| kelvin_kernel(p, y, n, &m).unwrap().us[l], x, &m, 1e-5);
                for kk in 0..2 {
                    let t = s[kk][0] * n.x1 + s[kk][1] * n.x2;
                    assert!((t - k.ts[l][kk]).abs() < 1e-8, "{l}{kk}: {t} vs {}", k.ts[l][kk]);
                }
            }
        }
    }

    #[test]
    fn kelvin_stress_is_in_equilibrium() {
        let m = mat();
        let y = Vec2::new(0.0, 0.0);
        let h = 1e-3;
        for x in [Vec2::new(0.8, 0.3), Vec2::new(-0.5, 1.1)] {
            for l in 0..2 {
                let sigma = |p: Vec2| fd_stress(|q| kelvin_kernel(q, y, Vec2::new(1.0, 0.0), &m).unwrap().us[l], p, &m, 1e-5);
                let sx = [sigma(x + Vec2::new(h, 0.0)), sigma(x - Vec2::new(h, 0.0))];
                let sy = [sigma(x + Vec2::new(0.0, h)), sigma(x - Vec2::new(0.0, h))];
                for k in 0..2 {
                    let div = (sx[0][k][0] - sx[1][k][0]) / (2.0 * h) + (sy[0][k][1] - sy[1][k][1]) / (2.0 * h);
                    assert!(div.abs() < 1e-5, "{div}");
                }
            }
        }
    }

    #[test]
    fn halfplane_surface_is_traction_free() {
        let m = mat();
        let n = Vec2::new(-1.0, 0.0);
        for y in [Vec2::new(0.0, 0.3), Vec2::new(0.7, -0.2), Vec2::new(2.0, 1.0)] {
            for x2 in [-3.0, -1.1, -0.05, 0.6, 2.5] {
                let x = Vec2::new(0.0, x2);
                let k = halfplane_kernel(x, y, n, &m).unwrap();
                for l in 0..2 {
                    for kk in 0..2 {
                        assert!(k.ts[l][kk].abs() < 1e-10, "{y} {x2}: {:?}", k.ts);
                    }
                }
            }
        }
    }

    #[test]
    fn halfplane_traction_matches_displacement_derivative() {
        let m = mat();
        let y = Vec2::new(0.6, 0.1);
        let x = Vec2::new(1.3, -0.4);
        let n = Vec2::new(0.6, 0.8);
        let k = halfplane_kernel(x, y, n, &m).unwrap();
        for l in 0..2 {
            let s = fd_stress(|p| halfplane_kernel(p, y, n, &m).unwrap().us[l], x, &m, 1e-5);
            for kk in 0..2 {
                let t = s[kk][0] * n.x1 + s[kk][1] * n.x2;
                assert!((t - k.ts[l][kk]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn halfplane_rejects_points_above_surface() {
        let m = mat();
        let r = halfplane_kernel(Vec2::new(-0.5, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), &m);
        assert!(matches!(r, Err(KernelError::OutsideHalfPlane(_))));
    }

    #[test]
    fn halfplane_image_part_flattens_with_depth() {
        // far from the surface the image terms vary slowly near the source
        let m = mat();
        let n = Vec2::new(1.0, 0.0);
        let mut prev = f64::INFINITY;
        for c in [2.0, 8.0, 32.0, 128.0] {
            let y = Vec2::new(c, 0.0);
            let a = Vec2::new(c + 0.3, 0.1);
            let b = Vec2::new(c - 0.2, -0.25);
            let diff = |p: Vec2| {
                let h = halfplane_kernel(p, y, n, &m).unwrap().us;
                let k = kelvin_kernel(p, y, n, &m).unwrap().us;
                [h[0][0] - k[0][0], h[0][1] - k[0][1], h[1][0] - k[1][0], h[1][1] - k[1][1]]
            };
            let (da, db) = (diff(a), diff(b));
            let d = (0..4).map(|i| (da[i] - db[i]).abs()).fold(0.0, f64::max);
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn halfplane_no_nan_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let m = mat();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x = Vec2::new(0.0, rng.gen_range(-1.0..1.0));
            let y = Vec2::new(rng.gen_range(0.0..2.0), rng.gen_range(-1.0..1.0));
            if (x - y).norm() < 1e-6 {
                continue;
            }
            let k = halfplane_kernel(x, y, Vec2::new(-1.0, 0.0), &m).unwrap();
            assert!(k.us.iter().flatten().chain(k.ts.iter().flatten()).all(|v| v.is_finite()));
        }
    }

    #[test]
    fn halfplane_surface_source_reproduces_flamant() {
        // reciprocity: displacement at y from a normal surface load at x
        let m = mat();
        let x = Vec2::new(0.0, 0.2);
        for y in [Vec2::new(0.0, 1.0), Vec2::new(0.0, -0.4), Vec2::new(0.8, 0.5), Vec2::new(1.5, -1.0)] {
            let k = halfplane_kernel(y, x, Vec2::new(-1.0, 0.0), &m).unwrap();
            let f = flamant_displacement(x, y, &m).unwrap();
            assert!((k.us[0][0] - f[0]).abs() < 1e-13, "{y}");
            assert!((k.us[0][1] - f[1]).abs() < 1e-13, "{y}");
        }
    }

    #[test]
    fn surface_log_coefficient() {
        let m = mat();
        let y = Vec2::new(0.0, 0.0);
        let u = |t: f64| halfplane_kernel(Vec2::new(0.0, t), y, Vec2::new(-1.0, 0.0), &m).unwrap().us;
        let (a, b) = (u(0.01), u(0.02));
        let coef = halfplane_surface_log_coefficient(&m);
        assert!(((b[0][0] - a[0][0]) / 2f64.ln() - coef).abs() < 1e-12);
        assert!(((b[1][1] - a[1][1]) / 2f64.ln() - coef).abs() < 1e-12);
    }

    #[test]
    fn flamant_examples() {
        let m = mat();
        let g = m.shear_modulus();
        let u = flamant_displacement(Vec2::ZERO, Vec2::new(1.0, 0.0), &m).unwrap();
        assert!((u[0] - 1.0 / (2.0 * PI * g)).abs() < 1e-15);
        assert_eq!(u[1], 0.0);
        let p = flamant_displacement(Vec2::ZERO, Vec2::new(0.5, 0.7), &m).unwrap();
        let q = flamant_displacement(Vec2::ZERO, Vec2::new(0.5, -0.7), &m).unwrap();
        assert!((p[0] - q[0]).abs() < 1e-15);
        assert!((p[1] + q[1]).abs() < 1e-15);
    }
}
