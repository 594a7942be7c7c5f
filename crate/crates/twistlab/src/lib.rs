//! Numerical dynamics on the closed annulus: rotation numbers, rotation
//! sets, twist intervals, mode locking, invariant-curve diagnostics, and
//! the elliptic billiard map, with a zoo of built-in example families.

pub mod annulus;
pub mod billiard;
pub mod circle;
pub mod cover;
pub mod curves;
pub mod families;
mod util;

pub use util::SplitMix64;
