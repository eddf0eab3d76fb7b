//! Situational empowerment: the variational lower bound of the mutual
//! information between actions and next states given `(s, c)`, its
//! analytic maximizer, EM optimization on tabular problems, and the two
//! losses that transport the idea to function approximators — the
//! hierarchical inverse-model loss and the empowerment regularizer.

mod losses;
mod tabular;

pub use losses::{empowerment_reg_loss, inverse_loss, log_omega, EmpowermentSample};
pub use tabular::{
    analytic_w_star, em_optimize, exact_situational_mi, value_iteration,
    variational_bound_exact, variational_bound_sampled, EmConfig, EmOutcome, TabularMdp,
};
