//! Computational companion for duality of real K-theory.
//!
//! The crate is organised bottom-up:
//!
//! * [`intlin`]: exact integer linear algebra (Smith normal form, kernels,
//!   cokernels, subquotients, `Hom(-, Z)` and `Ext^1(-, Z)`).
//! * [`groupcoh`]: cohomology, homology and Tate cohomology of `C2`, and the
//!   cohomology of `Z_2^x` with coefficients in 2-adic modules.
//! * [`sseq`]: a small bigraded spectral sequence engine.
//! * [`ktheory`]: the homotopy fixed point, Tate and homotopy orbit spectral
//!   sequences for `KU` with complex conjugation, cell diagrams, and the
//!   Anderson dual spectral sequence.
//! * [`anderson`]: Anderson duality on homotopy groups and shift detection.
//! * [`picard`]: finite models of continuous functions on `Z_2^x/{±1}` and
//!   the operators behind the exotic `K(1)`-local Picard element.
//! * [`chart`]: ASCII and SVG rendering of spectral sequence pages.

pub mod anderson;
pub mod chart;
pub mod decimal;
pub mod error;
pub mod groupcoh;
pub mod intlin;
pub mod ktheory;
pub mod picard;
pub mod sseq;

pub use error::{Error, Result};
