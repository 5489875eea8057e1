//! Modular invariants of 2x2 matrix groups acting by `M -> g M g^t`.

pub mod gf;
pub mod linalg;
pub mod mpoly;
pub mod groups;
pub mod invgen;
pub mod grobner;
pub mod structure;
