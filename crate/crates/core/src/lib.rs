pub mod constraints;
pub mod fd;
pub mod lang;
pub mod models;
pub mod protocol;
pub mod scalar;
pub mod session;
pub mod tree;

/// Floating-point layout coordinates.
pub type Real = f64;
/// Exact layout coordinates.
pub type Exact = num_rational::Rational64;
pub type Point = tree::LayoutPoint<Real>;
pub type Rect = tree::LayoutRect<Real>;
pub type ExactPoint = tree::LayoutPoint<Exact>;
pub type ExactRect = tree::LayoutRect<Exact>;
