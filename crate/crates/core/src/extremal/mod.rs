//! Sign-permutation orbits `V_{r,l}`, the averaging lower bound, and the
//! per-band lower-bound witnesses with vertex-by-vertex inclusion checks.

mod group;
mod orbit;
mod prop1;
mod witness;

pub use group::{apply_gamma, e_matrix, SignedPermutation};
pub use orbit::{
    orbit_patterns, orbit_vertices, Enumeration, VertexFamily, VertexPattern, DEFAULT_SAMPLES,
    ENUMERATION_CAP,
};
pub use prop1::{averaging_bound, proposition1_lower_bound};
pub use witness::{
    build_witness, build_witness_with, solve_alpha, verify_witness, verify_witness_detailed,
    Rounding, Verification, Witness, WitnessDocument, WitnessParams, WITNESS_VERSION,
};

