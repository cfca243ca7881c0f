//! Numerical and combinatorial tools for Cauchy-Riemann operators on the
//! strip and half-cylinder: Conley-Zehnder indices, kernel computation,
//! orientation signs under unitary conjugation, spin lifts of loops in
//! `SO(n)`, and twisted chain complexes.

pub mod analytic_oracles;
pub mod cr_operator;
pub mod error;
pub mod field;
pub mod linalg;
pub mod orientation;
pub mod spin_lift;
pub mod symplectic_path;
pub mod twisted_complex;
pub mod unitary;

pub use error::{Error, Result};
pub use field::{Domain, OperatorField, SharedField};
pub use linalg::C64;
pub use orientation::{conjugation_sign, predict_sign, transport_orientation, OperatorPath};
pub use spin_lift::{delta_sign, lifts_to_spin, winding_number, SoLoop};
pub use symplectic_path::{
    conley_zehnder_index, integrate_symplectic_path, is_nondegenerate, CzConvention, CzIndex,
    SymmetricLoop, SymplecticPath,
};
pub use twisted_complex::{
    boundary_matrices, check_boundary_squared, gauge_transform, homology, verify_chain_map,
    ComplexDatum, Edge, Generator, IntegerHomology,
};
pub use unitary::{SharedUnitary, UnitaryField};
