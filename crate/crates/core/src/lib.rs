//! Boundary-integral neural networks for 2D potential and elasticity
//! problems.
//!
//! A small residual network is trained so that its boundary trace satisfies
//! the boundary integral equation at one source point per segment. Interior
//! values follow from the integral representation. See the guide in `book/`
//! for a walk-through.
//!
//! ```
//! use binn::benchmarks::make_flower;
//! use binn::quadrature::QuadratureRule;
//!
//! let bench = make_flower();
//! let asm = bench.problem.assemble(&QuadratureRule::gauss_legendre(10).unwrap()).unwrap();
//! assert!(asm.loss(&bench.reference_field().unwrap()) < 1e-10);
//! ```

pub mod assembly;
pub mod autodiff;
pub mod benchmarks;
pub mod bie_elastic;
pub mod bie_potential;
pub mod dual;
pub mod geometry;
pub mod kernels;
pub mod network;
pub mod oracle;
pub mod quadrature;
pub mod training;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/quadrature.md")]
    mod quadrature {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/residuals.md")]
    mod residuals {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/interior.md")]
    mod interior {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
