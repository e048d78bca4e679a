//! Sensitivity of the de-embed structures to `l_0`, first-order propagation
//! of measurement uncertainty into `rho_c`, and Monte Carlo checks of both.

mod monte_carlo;
mod propagate;

pub use monte_carlo::{analytic_prediction, monte_carlo, Baseline, McConfig, McOutcome, McSource, McSummary, Perturb, MIN_TRIALS};
pub use propagate::{
    error_terms, propagate_error, sensitivity_l0_hrtlm, sensitivity_l0_rltlm, sensitivity_l0_rltlm_fd, sensitivity_ratio,
    sheet_weights, PropagationForm, SlopeUncertainty, UncertaintyBudget,
};
