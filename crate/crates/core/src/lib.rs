//! Capacity regions of the two-user Gaussian broadcast channel with noisy
//! feedback from the receivers.
//!
//! The crate decides whether feedback enlarges the capacity region of a given
//! channel ([`classifier`]), evaluates the no-feedback and partial-feedback
//! frontiers ([`regions`]), analyses a two-slot zero-forcing feedback scheme
//! in closed form ([`zf_scheme`], [`lowpower`]), searches for explicit rate
//! pairs beyond the no-feedback region ([`search`]) and simulates the scheme
//! symbol by symbol ([`montecarlo`]).

pub mod classifier;
pub mod cli;
pub mod error;
pub mod lowpower;
pub mod model;
pub mod montecarlo;
pub mod optim;
pub mod regions;
pub mod search;
pub mod zf_scheme;

pub use classifier::{classify, sweep_onesided_rx1, SweepGrid};
pub use error::{Error, Result};
pub use lowpower::{certify, LowPowerCertificate};
pub use model::{
    canonicalize, validate, BoundarySample, ChannelParams, Classification, RatePair, SchemeParams,
    Verdict,
};
pub use montecarlo::{simulate, simulate_vs_analytic, SimReport};
pub use regions::{excess_rate, sample_boundary, RegionKind};
pub use search::{search_enlargement, verify_witness, EnlargementWitness, SearchBudget, SearchOutcome};
pub use zf_scheme::{bootstrap_rates, derive, scheme_rates, DerivedScheme};
