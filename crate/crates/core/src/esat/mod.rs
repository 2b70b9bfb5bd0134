// SPDX-License-Identifier: Apache-2.0

//! Backbone exploration by equality saturation.
//!
//! Backbones are expressions over one associative operator. Saturating the
//! serial expression under associativity yields an e-graph whose root class
//! holds every full binary tree over the leaves; extraction then picks one
//! by arrival cost.

mod egraph;
mod expr;
mod extract;
mod space;
mod trace;

pub use egraph::{saturate, ClassId, EGraph, ENode, Limits, SaturationReport, StopReason};
pub use expr::BackboneExpr;
pub use extract::{extract_optimal, extract_perturbed, Extraction};
pub use space::{backbone_count, catalan, independent_space, log10};
pub use trace::{completion_level_gap, derive_trace, filter_low_deficiency, RegroupTrace};
