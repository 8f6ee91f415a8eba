//! Elastostatic problems: the network approximates the displacement
//! `φ(x; θ) ∈ ℝ²`; tractions come from Hooke's law applied to its Jacobian.

use crate::assembly::{
    assemble, deriv_from_jacobian, residual_direct, Assembly, AssemblyError, BieSystem, BoundaryTrace, Field,
    InteriorValue, InterfaceSpec, KernelSpec, RegionSpec, DEFAULT_MARGIN,
};
use crate::geometry::{Boundary, BoundaryCondition, Vec2};
use crate::kernels::Material;
use crate::quadrature::QuadratureRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    FullPlane,
    HalfPlane,
}

/// One elastic region: the segments bounding it and their orientation.
#[derive(Clone, Debug)]
pub struct ElasticRegion {
    pub material: Material,
    pub segments: Vec<usize>,
    /// `+1` where the stored segment normal points out of this region.
    pub signs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ElasticProblem {
    pub boundary: Boundary,
    pub regions: Vec<ElasticRegion>,
    pub kernel: KernelKind,
    /// Weight of the inclusion residuals in the two-region loss.
    pub beta: f64,
    /// Material whose Hooke law evaluates the interface traction.
    pub interface_material: Option<Material>,
}

impl ElasticProblem {
    /// Single region bounded by every segment, normals already outward.
    pub fn single(boundary: Boundary, material: Material, kernel: KernelKind) -> Result<Self, AssemblyError> {
        let n = boundary.len();
        let p = Self {
            boundary,
            regions: vec![ElasticRegion { material, segments: (0..n).collect(), signs: vec![1.0; n] }],
            kernel,
            beta: 1.0,
            interface_material: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Matrix with one inclusion. Interface segments are stored once with
    /// their normal pointing out of the matrix (into the inclusion); the
    /// interface traction is evaluated with the inclusion material.
    pub fn with_inclusion(
        boundary: Boundary,
        matrix: Material,
        inclusion: Material,
        beta: f64,
    ) -> Result<Self, AssemblyError> {
        let n = boundary.len();
        let iface: Vec<usize> =
            (0..n).filter(|&i| matches!(boundary.segments[i].bc, BoundaryCondition::Interface)).collect();
        let p = Self {
            regions: vec![
                ElasticRegion { material: matrix, segments: (0..n).collect(), signs: vec![1.0; n] },
                ElasticRegion { material: inclusion, signs: vec![-1.0; iface.len()], segments: iface },
            ],
            boundary,
            kernel: KernelKind::FullPlane,
            beta,
            interface_material: Some(inclusion),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        if self.boundary.is_empty() {
            return Err(AssemblyError::Invalid("elastic problem without segments".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(AssemblyError::Invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if self.regions.is_empty() || self.regions.len() > 2 {
            return Err(AssemblyError::Invalid("one or two regions are supported".into()));
        }
        for r in &self.regions {
            r.material.validate()?;
            if r.segments.is_empty() {
                return Err(AssemblyError::Invalid("region without segments".into()));
            }
        }
        let has_iface = self.boundary.segments.iter().any(|s| matches!(s.bc, BoundaryCondition::Interface));
        if has_iface && (self.regions.len() != 2 || self.interface_material.is_none()) {
            return Err(AssemblyError::Invalid("interface segments need two regions".into()));
        }
        if self.regions.len() == 2 && self.kernel == KernelKind::HalfPlane {
            return Err(AssemblyError::Invalid("two-region problems use the full-plane kernel".into()));
        }
        Ok(())
    }

    fn kernel_spec(&self, m: Material) -> KernelSpec {
        match self.kernel {
            KernelKind::FullPlane => KernelSpec::Kelvin(m),
            KernelKind::HalfPlane => KernelSpec::HalfPlane(m),
        }
    }

    /// Source counts per region.
    pub fn source_counts(&self) -> Vec<usize> {
        self.regions.iter().map(|r| r.segments.len()).collect()
    }

    pub fn system(&self) -> BieSystem {
        // the matrix region already contains the interface sources: N₁ + N₂
        let counts = self.source_counts();
        let regions = self
            .regions
            .iter()
            .enumerate()
            .map(|(i, r)| RegionSpec {
                id: i,
                kernel: self.kernel_spec(r.material),
                segments: r.segments.clone(),
                signs: r.signs.clone(),
                weight: if i == 0 { 1.0 } else { self.beta } / counts[i] as f64,
            })
            .collect();
        BieSystem {
            boundary: self.boundary.clone(),
            n_u: 2,
            regions,
            interface: self.interface_material.map(|material| InterfaceSpec { material, normal_sign: -1.0 }),
        }
    }

    pub fn assemble(&self, rule: &QuadratureRule) -> Result<Assembly, AssemblyError> {
        self.validate()?;
        assemble(&self.system(), rule)
    }
}

/// `t = σ(ε(∇φ))·n`.
pub fn traction_from_net(field: &dyn Field, x: Vec2, n: Vec2, mat: &Material) -> Result<[f64; 2], AssemblyError> {
    mat.validate()?;
    let (_, jac) = field.eval(x);
    if jac.len() < 2 {
        return Err(AssemblyError::Invalid("displacement field must have two components".into()));
    }
    Ok(deriv_from_jacobian(Some(mat), &jac, n))
}

/// Residual at the source point of `source` for a single-region problem.
pub fn residual_elastic(
    problem: &ElasticProblem,
    field: &dyn Field,
    rule: &QuadratureRule,
    source: usize,
) -> Result<[f64; 2], AssemblyError> {
    if problem.regions.len() != 1 {
        return Err(AssemblyError::Invalid("use residual_multidomain for two-region problems".into()));
    }
    residual_multidomain(problem, field, rule, source, 1)
}

/// Residual of region `region_id` (1 = matrix, 2 = inclusion) at the source
/// point of `source`.
pub fn residual_multidomain(
    problem: &ElasticProblem,
    field: &dyn Field,
    rule: &QuadratureRule,
    source: usize,
    region_id: usize,
) -> Result<[f64; 2], AssemblyError> {
    if region_id == 0 || region_id > problem.regions.len() {
        return Err(AssemblyError::Invalid(format!("region {region_id} does not exist")));
    }
    rule.require_even()?;
    let ri = region_id - 1;
    if !problem.regions[ri].segments.contains(&source) {
        return Err(AssemblyError::Invalid(format!("segment {source} does not bound region {region_id}")));
    }
    let r = residual_direct(&problem.system(), field, rule, ri, source)?;
    Ok([r[0], r[1]])
}

/// `(1/(N₁+N₂)) Σ‖R^M‖² + (β/N₂) Σ‖R^I‖²`; a single region reduces to the mean.
pub fn loss_multidomain(problem: &ElasticProblem, field: &dyn Field, rule: &QuadratureRule) -> Result<f64, AssemblyError> {
    Ok(problem.assemble(rule)?.loss(field))
}

/// Somigliana identity over the boundary of the region containing `y`.
pub fn interior_displacement(
    problem: &ElasticProblem,
    field: &dyn Field,
    rule: &QuadratureRule,
    y: Vec2,
    refine: usize,
) -> Result<InteriorValue, AssemblyError> {
    let trace = BoundaryTrace::new(&problem.system(), field, rule, refine)?;
    trace.value(y, DEFAULT_MARGIN)
}
