//! Ergodic-rate analysis of a single-antenna downlink rate-splitting multiple
//! access (RSMA) system with imperfect channel estimation at the receivers,
//! imperfect successive interference cancellation and transceiver hardware
//! impairments.
//!
//! The crate pairs every closed-form metric with an independent Monte-Carlo
//! estimator:
//!
//! * [`model`] holds the scenario description, path-loss and estimation-error
//!   statistics and the closed-form coefficients,
//! * [`specfun`] provides the incomplete-gamma kernel (including negative
//!   orders) the closed forms need,
//! * [`analytic`] evaluates ergodic rate, sum rate, energy efficiency and
//!   Jain's fairness index in closed form,
//! * [`montecarlo`] samples Nakagami-m fading and estimates the same
//!   expectations with standard errors,
//! * [`noma`] is the two-user power-domain NOMA baseline used for comparison.

pub mod analytic;
mod error;
pub mod model;
pub mod montecarlo;
pub mod noma;
pub mod specfun;

pub use analytic::{
    common_rate, energy_efficiency, ergodic_rate, jains_fairness, private_rate, rate_kernel,
    rate_report, sum_rate, FairnessReport, ImpairmentFlags, RateReport, UserRate,
};
pub use error::{Error, Result};
pub use model::{
    derive_link_stats, instantaneous_sinr, rsma_coefficients, validate_config, CoefficientSet,
    LinkStats, Stream, SystemConfig,
};
pub use montecarlo::{
    mc_full_model_rate, mc_full_model_rates, mc_stream_rate, mc_stream_rates, mc_user_rate,
    mc_user_rates_all, FullModelEstimate, McEstimate, McMode, RatePair,
};
pub use noma::{mc_noma_rate, noma_ergodic_rate, noma_rates, noma_sinr, NomaConfig, NomaRole};
pub use specfun::{exp_scaled_upper_gamma, expint_e1, ln_gamma, upper_incomplete_gamma};

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}
