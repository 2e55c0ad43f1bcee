//! RIS phase optimizers for fixed powers.
//!
//! - [`sdr`]: lift `Φ_vec Φ_vecᴴ` to a PSD matrix, run generalized
//!   Dinkelbach iterations on the relaxed max-min problem, then round back
//!   to unit modulus (principal eigenvector or Gaussian randomization).
//! - [`lse`]: projected gradient on the phase angles minimizing the
//!   log-sum-exp surrogate `log Σ_k exp(1/ρ_k)` of the minimum SINR.
//! - [`quantized`]: randomized coordinate search over a `2^B`-level grid.
//!
//! Every optimizer returns a phase that is never worse than its input
//! under the objective it is handed.

pub mod lse;
pub mod quadratic;
pub mod quantized;
pub mod sdr;

pub use lse::{
    lse_gradient_phase, lse_gradient_phase_scored, lse_objective, rho_derivative, LseOutcome,
    LseParams,
};
pub use quadratic::{build_quadratic_forms, QuadraticFormSet};
pub use quantized::{quantized_heuristic_phase, QuantOutcome, QuantParams};
pub use sdr::{sdr_dinkelbach_phase, LiftedMatrix, SdrOutcome, SdrParams};
