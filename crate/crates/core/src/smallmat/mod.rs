//! Dense linear algebra and `so(n)` machinery for small matrices.

mod eigen;
mod lie;
mod mat;
mod rotation;

pub use eigen::{inv_sqrt_spd, sym_eigen, SymEigen};
pub use lie::{
    bracket, closure_under_brackets, invariant_blocks, wedge, wedge_orthonormal, InvariantBlocks,
    SkewEndo, SpanBasis,
};
pub use mat::{axpy, basis_vector, dot, norm, Mat};
pub use rotation::{expm, rotation_exp, rotation_log};
