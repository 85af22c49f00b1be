//! Restricted holonomy of hypersurfaces in spaces of constant curvature.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`modelspace`] evaluates an immersion chart into a sphere, hyperboloid
//!    or Euclidean model and produces finite-difference jets;
//! 2. [`curvature`] turns jets into the induced metric, Christoffel symbols,
//!    shape operator and curvature operator `R(X,Y) = ν X∧Y + AX∧AY`;
//! 3. [`holonomy`] closes the curvature endomorphisms under brackets and names
//!    the resulting subgroup of `SO(n)`;
//! 4. [`theoremcheck`] verifies the structural consequences of the two
//!    non-generic cases (local products of space forms).
//!
//! [`catalog`] provides closed-form charts with known answers.

// comparisons are negated on purpose so that NaN fails every range check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod curvature;
pub mod error;
pub mod holonomy;
pub mod modelspace;
pub mod smallmat;
pub mod theoremcheck;

pub use error::{GeomError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/space-forms.md")]
    mod space_forms {}
    #[doc = include_str!("../../../book/src/shape-operator.md")]
    mod shape_operator {}
    #[doc = include_str!("../../../book/src/holonomy.md")]
    mod holonomy {}
    #[doc = include_str!("../../../book/src/products.md")]
    mod products {}
    #[doc = include_str!("../../../book/src/identities.md")]
    mod identities {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
