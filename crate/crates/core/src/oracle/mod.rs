//! Independent references: adaptive quadrature and a constant-element
//! collocation BEM.

mod adaptive;

pub use adaptive::{adaptive, adaptive_integral, adaptive_tol, OracleError, Singularity, ORACLE_TOL};

mod bem;

pub use bem::{bem_solve, element_integrals, lu_solve, BemSolution, ElementIntegrals};
