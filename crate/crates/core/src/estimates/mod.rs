//! Empirical checks of the linear and multilinear space-time estimates.
//!
//! Each case pairs a left-hand norm of a product expression with the product
//! of input norms on the right; ratios are sampled over random, structured and
//! adversarial ensembles and summarized per grid.

mod cases;
mod ensembles;
mod suite;

pub use cases::{
    evaluate, evaluate_prepared, linf_t_hs, prod_eq, schematic_null_form, snapshot, CaseId, Evaluation, Exponents,
    Prepared,
};
pub use ensembles::{
    cone_concentration, cone_sample, draw_inputs, draw_inputs_with, free_wave_sample, plane_wave_sample,
    random_band_sample, random_direction, timeband_sample, Band, EnsembleKind, EnsembleSpec,
};
pub use suite::{adversarial_search, run_suite, CaseSummary, GrowthCheck, RatioRecord, SuiteReport, GROWTH_LIMIT};
