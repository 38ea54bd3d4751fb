//! Certification of second-order optimality conditions at candidate points of
//! nonlinear programs.
//!
//! The crate checks, for a problem `min f(x) s.t. h(x) = 0, g(x) <= 0` and a
//! feasible point `x*`, whether some single Lagrange multiplier makes the
//! Hessian of the Lagrangian positive semidefinite on the critical subspace
//! (the weak second-order condition), and constructs that multiplier when
//! the active Jacobian gains at most one rank near `x*`.

pub mod expr;
pub mod linalg;
pub mod model;
pub mod multipliers;
pub mod secondorder;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for sample `index` of a run seeded with `seed`; samples are
/// independent of each other and of evaluation order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
pub mod conjecture;
