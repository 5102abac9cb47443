//! Arithmetic invariants governing totally geodesic surfaces in arithmetic
//! hyperbolic 3-manifolds whose invariant trace field is imaginary quadratic.

pub mod arith;
pub mod census;
pub mod covolume;
pub mod family;
pub mod geodesic;
pub mod quadfield;
pub mod quatalg;
pub mod validated;
