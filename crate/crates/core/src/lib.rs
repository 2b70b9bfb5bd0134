// SPDX-License-Identifier: Apache-2.0

//! Prefix-adder synthesis.
//!
//! The flow runs in two phases. Phase I shapes the backbone, the tree that
//! computes the MSB carry, by regrouping adjacent subtrees; the space of
//! backbones can be explored exhaustively with an e-graph. The backbone is
//! then completed into a full adder and Phase II refines it locally with
//! level, fanout and cloning edits under a fanout-aware timing model.

pub mod backbone;
pub mod dataio;
pub mod error;
pub mod esat;
pub mod graph;
pub mod pipeline;
pub mod policy;
pub mod refine;
pub mod timing;

pub use backbone::{Backbone, Completion, RegroupCandidate};
pub use error::{Error, Result};
pub use graph::{NodeId, Parents, PrefixGraph};
pub use timing::{ArrivalProfile, DelayModel, TimingReport};
