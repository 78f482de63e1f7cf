//! Tensor-product state spaces, pure states and local operators.

mod operator;
mod space;
mod state;

pub use operator::{Operator, UNITARY_TOL};
pub use space::{make_product_space, Blocks, FactorSpace, ProductSpace, BLANK};
pub use state::{
    apply_unitary, basis_state, expand_in_basis, inner_product, superpose, BasisComponent,
    StateVector, NORM_TOL,
};
