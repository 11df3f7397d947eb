//! Full-RNS CKKS primitives, the 3D-NTT dataflow, and the BTS parameter model.

pub mod arith;
pub mod heops;
pub mod params;
pub mod rns;
pub mod transform;
