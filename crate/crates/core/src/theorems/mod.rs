//! Numerical certificates for the model's claims and the suite that runs
//! them against a scenario.

mod certificate;
mod convergence;
mod frontier;
mod optimality;
mod pareto;
mod structure;
mod suite;

pub use certificate::{CertificateBuilder, CheckCertificate, Witness};
pub use convergence::{
    bounded_error_certificate, check_bounded_error, check_convergence_rate,
    check_utility_convergence, fit_log_slope, gap_series, ideal_and_delivered, GapSeries, RateFit,
    RATE_TOL,
};
pub use frontier::{
    check_frontier_expansion, check_full_employment_value, frontier_certificate,
    frontier_supremum_series, full_employment_certificate, DimensionAdd, DiscoveryStep,
    FrontierState,
};
pub use optimality::{
    attainable_levels, attainable_supremum, check_asymptotic_optimality, TOL_OPT,
};
pub use pareto::{
    check_pareto_family, check_pareto_family_with, find_pareto_improvement, pareto_family,
    pareto_gain, resolved_pareto_gain, ParetoImprovement, ResolvedGain,
};
pub use structure::{
    check_irreversibility, check_meaning_irreducibility, meaning_suprema, rollback_utility,
    Rollback,
};
pub use suite::{
    check_hamiltonian_dominance_with, check_holder_with, check_lq_oracle, check_norm_axioms_with,
    check_pontryagin_gradient_with, check_sweep_monotonicity, lq_problem, run_suite, select_checks,
    SuiteReport, CHECK_NAMES,
};
