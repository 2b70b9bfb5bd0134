// SPDX-License-Identifier: Apache-2.0

//! End-to-end flows: synthesis of one adder, target sweeps and training
//! sample generation.

use std::collections::BTreeSet;

use crate::backbone::Backbone;
use crate::dataio::{synthesize_samples, TrainingSample};
use crate::error::{Error, Result};
use crate::esat::{
    derive_trace, extract_optimal, extract_perturbed, filter_low_deficiency, saturate,
    BackboneExpr, EGraph, Limits, RegroupTrace,
};
use crate::graph::{theoretical_min_level, PrefixGraph};
use crate::policy::{run_phase1, run_phase2, LoopConfig, OptimizationTrace, Policy, TraceStep};
use crate::timing::{backbone_cost, pareto_sweep, ArrivalProfile, DelayModel, SweepRow};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    pub width: usize,
    pub profile: ArrivalProfile,
    pub model: DelayModel,
    /// Target delay. `None` uses the balanced backbone's cost.
    pub target: Option<f64>,
    pub max_iterations: usize,
}

impl SynthesisConfig {
    pub fn new(width: usize, profile: ArrivalProfile) -> Self {
        Self {
            width,
            profile,
            model: DelayModel::default(),
            target: None,
            max_iterations: 64,
        }
    }

    pub fn resolved_target(&self) -> Result<f64> {
        match self.target {
            Some(t) => Ok(t),
            None => default_target(self.width, &self.profile, &self.model),
        }
    }
}

/// Cost of the balanced backbone.
pub fn default_target(width: usize, profile: &ArrivalProfile, model: &DelayModel) -> Result<f64> {
    backbone_cost(&Backbone::balanced(width)?, profile, model)
}

#[derive(Debug, Clone)]
pub struct SynthesisOutcome {
    pub target: f64,
    pub backbone: Backbone,
    /// The completed graph before refinement.
    pub completed: PrefixGraph,
    pub auxiliary: usize,
    pub graph: PrefixGraph,
    pub phase1: OptimizationTrace,
    pub phase2: OptimizationTrace,
    pub row: SweepRow,
}

impl SynthesisOutcome {
    /// Both phases as one call list.
    pub fn trace_text(&self) -> String {
        self.phase1.to_text() + &self.phase2.to_text()
    }
}

/// Phase I trace followed by a partial Phase II trace.
fn joined(phase1: &OptimizationTrace, phase2: OptimizationTrace) -> OptimizationTrace {
    let mut steps = phase1.steps.clone();
    if let Some(f) = &phase1.finish {
        steps.push(TraceStep {
            iteration: phase1.len() + 1,
            call: f.clone(),
            feedback: String::new(),
        });
    }
    steps.extend(phase2.steps);
    OptimizationTrace {
        steps,
        finish: phase2.finish,
        rejected: phase1.rejected + phase2.rejected,
    }
}

/// Backbone search, completion and refinement with one policy.
pub fn synthesize<P: Policy + ?Sized>(
    config: &SynthesisConfig,
    policy: &mut P,
) -> Result<SynthesisOutcome> {
    let target = config.resolved_target()?;
    let loop_cfg = LoopConfig::new(target, config.max_iterations).with_model(config.model);
    let p1 = run_phase1(config.width, &config.profile, &loop_cfg, policy)?;
    let completion = p1.backbone.complete();
    let p2 = match run_phase2(&completion.graph, &config.profile, &loop_cfg, policy) {
        Ok(p2) => p2,
        Err(Error::PolicyAbort { reason, trace }) => {
            return Err(Error::PolicyAbort {
                reason: format!("phase 2: {reason}"),
                trace: Box::new(joined(&p1.trace, *trace)),
            })
        }
        Err(e) => return Err(e),
    };
    let row = SweepRow::evaluate(&p2.graph, target, &config.profile, &config.model)?;
    Ok(SynthesisOutcome {
        target,
        auxiliary: completion.auxiliary.len(),
        completed: completion.graph,
        backbone: p1.backbone,
        graph: p2.graph,
        phase1: p1.trace,
        phase2: p2.trace,
        row,
    })
}

/// `count` targets from the serial backbone's cost down to the level lower
/// bound, loosest first.
pub fn sweep_targets(
    width: usize,
    profile: &ArrivalProfile,
    model: &DelayModel,
    count: usize,
) -> Result<Vec<f64>> {
    let hi = backbone_cost(&Backbone::serial(width)?, profile, model)?;
    let latest = profile.times().iter().copied().fold(0.0, f64::max);
    let lo = latest + theoretical_min_level(width) as f64 * model.step();
    Ok(match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => (0..count)
            .map(|i| hi + (lo - hi) * i as f64 / (count - 1) as f64)
            .collect(),
    })
}

/// Synthesizes one design per target with a fresh policy each time.
pub fn sweep<P: Policy>(
    config: &SynthesisConfig,
    targets: &[f64],
    mut make_policy: impl FnMut() -> P,
) -> Result<Vec<SweepRow>> {
    pareto_sweep(
        |t| {
            let cfg = SynthesisConfig {
                target: Some(t),
                ..config.clone()
            };
            Ok(synthesize(&cfg, &mut make_policy())?.graph)
        },
        targets,
        &config.profile,
        &config.model,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatagenConfig {
    pub samples: usize,
    pub eps_scale: f64,
    pub threshold: usize,
    pub limits: Limits,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            eps_scale: 1.0,
            threshold: 0,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatagenOutcome {
    pub samples: Vec<TrainingSample>,
    /// Distinct backbones extracted.
    pub generated: usize,
    /// Dropped by the deficiency filter.
    pub filtered: usize,
    pub kept: usize,
    pub diagnostics: Vec<String>,
}

/// Saturated e-graph of all backbones of `width` bits.
pub fn saturated_space(width: usize, limits: Limits) -> Result<EGraph> {
    saturate(&BackboneExpr::serial(width)?, limits)
}

/// Extraction for one seed: seed 0 is the optimum, others are perturbed.
pub fn extract_for_seed(
    g: &EGraph,
    profile: &ArrivalProfile,
    model: &DelayModel,
    seed: u64,
    eps_scale: f64,
) -> Result<BackboneExpr> {
    Ok(if seed == 0 {
        extract_optimal(g, profile, model)?.expr
    } else {
        extract_perturbed(g, profile, model, seed, eps_scale)?.expr
    })
}

/// Filters extracted backbones, derives their regroup traces and builds the
/// training records. Duplicates are dropped, first occurrence wins.
pub fn assemble_samples(
    extracted: &[BackboneExpr],
    profile: &ArrivalProfile,
    model: &DelayModel,
    threshold: usize,
) -> Result<DatagenOutcome> {
    let mut seen = BTreeSet::new();
    let unique: Vec<BackboneExpr> = extracted
        .iter()
        .filter(|e| seen.insert(e.to_string()))
        .cloned()
        .collect();
    let kept = filter_low_deficiency(&unique, threshold);
    let traces = kept
        .iter()
        .map(|e| derive_trace(&e.to_backbone()?))
        .collect::<Result<Vec<RegroupTrace>>>()?;
    let (samples, diagnostics) = synthesize_samples(&traces, profile, model);
    Ok(DatagenOutcome {
        generated: unique.len(),
        filtered: unique.len() - kept.len(),
        kept: samples.len(),
        samples,
        diagnostics,
    })
}

/// Sequential sample generation over seeds `0..samples`.
pub fn generate_samples(
    width: usize,
    profile: &ArrivalProfile,
    model: &DelayModel,
    config: &DatagenConfig,
) -> Result<DatagenOutcome> {
    if config.samples == 0 {
        return assemble_samples(&[], profile, model, config.threshold);
    }
    let g = saturated_space(width, config.limits)?;
    let extracted = (0..config.samples as u64)
        .map(|s| extract_for_seed(&g, profile, model, s, config.eps_scale))
        .collect::<Result<Vec<_>>>()?;
    assemble_samples(&extracted, profile, model, config.threshold)
}
