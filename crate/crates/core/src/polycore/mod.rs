//! Exact integer-polynomial arithmetic.

pub mod discriminant;
pub mod factor;
pub mod mahler;
pub mod poly;
pub mod realroots;
pub mod roots;

pub use factor::{factor_cubic, is_irreducible, CubicFactorization, FactorPair};
pub use mahler::{mahler_bounds, mahler_measure, product_height_ratio};
pub use poly::IntPoly;
pub use roots::{roots, Root, RootSet};
