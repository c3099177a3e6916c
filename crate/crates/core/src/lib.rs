//! Hidden-variable spectrograph model of a Clauser-Horne Bell experiment.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every algorithm of the
//! pipeline: hidden-variable models discretised into spectrograph channels,
//! closed-form Eberhardt-state predictions, seeded Monte Carlo generation of
//! time-tagged detections, per-channel coincidence matching, and the count-level
//! analysis of the CH statistic `J` together with the spectrograph bound.
//!
//! File formats, the command line and parallel drivers live in the `hvspec`
//! companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analyze;
pub mod coincidence;
mod error;
pub mod model;
pub mod qm_oracle;
pub mod random;
pub mod simulate;

pub use crate::{
    analyze::{
        audit_features, ch_algebraic_check, ch_j_from_counts, correction_term, expected_terms,
        gamma_partition, max_j_under_realism, spectrograph_inequality, AuditReport, CountTable,
        GammaPartition, JEstimate, JReport, SinglesTable,
    },
    coincidence::{aggregate, brute_force_match, match_events, ChannelCounts, MatchResult},
    error::Error,
    model::{
        Angle, ChannelDistribution, HiddenVariableModel, OutcomeProbs, SettingPair, SettingsQuad,
        SpectrographConfig,
    },
    qm_oracle::{ChTerms, EberhardtState, QmJReport},
    simulate::{run_experiment, run_full, DetectionEvent, RunRecord, Station, TimingConfig},
};

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Tolerance used for every probability normalisation check.
pub const PROB_TOLERANCE: f64 = 1e-12;
