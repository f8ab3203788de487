//! Experiment harness: synthetic problems, coverage runs, and posterior
//! optimization, all with exact population quantities and deterministic
//! per-trial random streams.

mod experiment;
mod optimize;
mod presets;
mod problem;

pub use experiment::{
    anytime_coverage_experiment, coverage_bound_ids, coverage_experiment,
    coverage_experiment_multi, post_hoc_lambda_coverage, tightness_table, wilson_interval,
    AnytimeMode, CoverageReport, TightnessRow, WILSON_Z99,
};
pub use optimize::{alternating_optimize, certificate_at_posterior, OptimizeOutcome};
pub use presets::{preset, PRESET_NAMES};
pub use problem::{
    apply_rule, draw_dataset, exact_quantities, exact_quantities_from_counts, gibbs_posterior,
    trial_rng, DiscreteProblem, ExactQuantities, Outcome, PosteriorRule,
};
