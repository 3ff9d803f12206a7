//! Numerical laboratory for foliated cycles of laminations by holomorphic
//! graphs: transverse measures, rescaled self-intersection masses, Lelong
//! numbers and intersection arithmetic on model cohomology rings.

pub mod cohomology;
pub mod cycle;
pub mod density;
pub mod lamination;
pub mod numerics;
pub mod scenarios;

pub use numerics::C64;
