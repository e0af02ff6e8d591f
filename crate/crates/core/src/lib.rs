//! Basic HydLa: parsing, simulation and semantics checking of hybrid
//! constraint programs.

pub mod checker;
pub mod cli;
pub mod constraint;
pub mod io;
pub mod mpoly;
pub mod poly;
pub mod program;
pub mod roots;
pub mod scalar;
pub mod syntax;
pub mod simulator;
pub mod solver;
pub mod trajectory;

pub use poly::UPoly;
pub use scalar::Scalar;

pub type Rational = num_rational::BigRational;
pub type Poly = UPoly<Rational>;
pub type PolyF64 = UPoly<f64>;
pub type PolyF32 = UPoly<f32>;
