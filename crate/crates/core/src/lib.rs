//! Hierarchical Bayesian models of Atlantic tropical-cyclone activity.
//!
//! Two models share the ingestion, distribution and sampler layers:
//!
//! * [`seasonal`]: per intensity group and season, the storm count
//!   (negative binomial or Poisson with a log link on climate covariates),
//!   the number of damaging storms (binomial), and the season's total
//!   damage (zero-inflated lognormal).
//! * [`cyclone`]: per damaging storm, a hierarchy of three GEV
//!   regressions for log minimum pressure, log peak wind and log damage,
//!   conditioned on standardized mean track latitude.

pub mod cyclone;
pub mod distributions;
pub mod ingest;
pub mod mcmc;
pub mod optimize;
pub mod par;
pub mod rng;
pub mod seasonal;
pub mod stats;
