//! Tag and hashtag recommendation based on human memory activation.
//!
//! The recommenders score tags with the ACT-R activation equation: a
//! base-level term that rewards frequent and recent use under power-law
//! forgetting, plus an associative term that primes tags related to the
//! target resource. Around them sit popularity and collaborative filtering
//! baselines, a leave-newest-out evaluation harness, and a reuse analysis
//! that compares power-law and exponential decay.

pub mod activation;
pub mod analysis;
pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod hashtag;
pub mod recommenders;
pub mod synth;

pub use activation::{base_level, DecayParams};
pub use data::{Folksonomy, Post, SocialGraph, SplitSpec, TweetRecord};
pub use error::{DataError, Error, Result};
pub use recommenders::{recommend, Algorithm, Query, RecParams, ScoredList, Scores};
