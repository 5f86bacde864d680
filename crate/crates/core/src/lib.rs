//! Bus evacuation orienteering.
//!
//! A fleet of `K` identical buses of capacity `C` starts at a safe depot
//! (node `0`) and collects evacuees from nodes `1..=n` within a time horizon
//! `T`. Unlike the capacitated team orienteering problem a bus may return to
//! the depot any number of times to unload, so a single vehicle route is a
//! sequence of depot-to-depot subtours whose total duration is bounded by `T`.
//!
//! This crate holds everything that does not need an operating system:
//!
//! - [`instance`]: the data model, feasibility checking and the
//!   orienteering reduction helpers.
//! - [`roadnet`]: shortest travel times on road graphs, instance sampling,
//!   hazard zones and stochastic realizations.
//! - [`mdp`]: the sequential decision process with exact action masking.
//! - [`greedy`]: the prize-per-time greedy constructor.
//! - [`exact`]: depth-first branch-and-bound and the MILP emitter.
//! - [`policy`]: edge/state features, a linear softmax rollout policy,
//!   multi-start evaluation and REINFORCE training.
//!
//! All travel times are integer milliseconds. The crate is `no_std` (with
//! `alloc`) when built without the default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod exact;
pub mod greedy;
pub mod instance;
pub mod mdp;
mod nodeset;
pub mod policy;
pub mod rng;
pub mod roadnet;

pub use instance::{BeopInstance, FeasibilityReport, Millis, Solution, Tour};
pub use mdp::MdpState;
pub use nodeset::NodeSet;
