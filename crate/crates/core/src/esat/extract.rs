// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::egraph::{ClassId, EGraph, ENode};
use super::expr::BackboneExpr;
use crate::error::Result;
use crate::timing::{ArrivalCost, ArrivalProfile, DelayModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub expr: BackboneExpr,
    /// Unperturbed arrival cost of `expr`.
    pub cost: f64,
    /// Set when the e-graph was not saturated.
    pub warning: Option<String>,
}

/// Minimum-arrival tree in the root class.
///
/// Among equal-cost choices the one whose upper operand is cheaper wins,
/// then the one with the lower split point.
pub fn extract_optimal(
    g: &EGraph,
    profile: &ArrivalProfile,
    model: &DelayModel,
) -> Result<Extraction> {
    extract_with(g, profile, model, |_| 0.0)
}

/// Like [`extract_optimal`] but every e-node's cost gets additive noise drawn
/// from `U[0, eps_scale * (d + lambda)]`. `eps_scale = 0` gives the optimum.
pub fn extract_perturbed(
    g: &EGraph,
    profile: &ArrivalProfile,
    model: &DelayModel,
    seed: u64,
    eps_scale: f64,
) -> Result<Extraction> {
    if !(eps_scale >= 0.0 && eps_scale.is_finite()) {
        return Err(crate::Error::InvalidArgument(format!(
            "perturbation scale must be finite and non-negative, got {eps_scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = eps_scale * model.step();
    extract_with(g, profile, model, move |_| rng.random::<f64>() * span)
}

fn extract_with(
    g: &EGraph,
    profile: &ArrivalProfile,
    model: &DelayModel,
    mut noise: impl FnMut(&ENode) -> f64,
) -> Result<Extraction> {
    let (msb, _) = g.range(g.root());
    profile.ensure_width(msb + 1)?;
    let step = model.step();

    let mut best: HashMap<ClassId, (f64, ENode)> = HashMap::new();
    for id in g.class_ids() {
        let mut pick: Option<((f64, f64, usize), ENode)> = None;
        for n in g.nodes(id) {
            let key = match *n {
                ENode::Leaf(i) => (profile.at(i) + noise(n), 0.0, i),
                ENode::Op { high, low } => {
                    let h = best[&g.find(high)].0;
                    let l = best[&g.find(low)].0;
                    (h.max(l) + step + noise(n), h, g.range(high).1)
                }
            };
            let better = match &pick {
                None => true,
                Some((k, _)) => cmp_key(&key, k) == Ordering::Less,
            };
            if better {
                pick = Some((key, *n));
            }
        }
        let (key, node) = pick.expect("classes are never empty");
        best.insert(id, (key.0, node));
    }

    let expr = build(g, &best, g.root());
    let cost = expr.arrival_cost(profile, model);
    let warning = (!g.is_saturated())
        .then(|| "e-graph is not saturated; extraction covers only the represented trees".into());
    Ok(Extraction {
        expr,
        cost,
        warning,
    })
}

fn cmp_key(a: &(f64, f64, usize), b: &(f64, f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.cmp(&b.2))
}

fn build(g: &EGraph, best: &HashMap<ClassId, (f64, ENode)>, id: ClassId) -> BackboneExpr {
    match best[&g.find(id)].1 {
        ENode::Leaf(i) => BackboneExpr::Leaf(i),
        ENode::Op { high, low } => BackboneExpr::op(build(g, best, high), build(g, best, low)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esat::{saturate, Limits};

    fn sat(n: usize) -> EGraph {
        saturate(&BackboneExpr::serial(n).unwrap(), Limits::default()).unwrap()
    }

    #[test]
    fn late_msb_prefers_low_pair_first() {
        let p = ArrivalProfile::new(vec![0.0, 0.0, 2.0]).unwrap();
        let x = extract_optimal(&sat(3), &p, &DelayModel::unit()).unwrap();
        assert_eq!(x.expr.to_string(), "(o (o i0 i1) i2)");
        assert_eq!(x.cost, 3.0);
        assert!(x.warning.is_none());
    }

    #[test]
    fn uniform_four_is_balanced() {
        let x = extract_optimal(
            &sat(4),
            &ArrivalProfile::uniform(4, 0.0),
            &DelayModel::unit(),
        )
        .unwrap();
        assert_eq!(x.expr.to_string(), "(o (o i0 i1) (o i2 i3))");
        assert_eq!(x.cost, 2.0);
    }

    #[test]
    fn zero_noise_matches_optimum() {
        let g = sat(8);
        let p = ArrivalProfile::random(8, 0.3, 4);
        let m = DelayModel::default();
        let opt = extract_optimal(&g, &p, &m).unwrap();
        for seed in 0..10 {
            assert_eq!(extract_perturbed(&g, &p, &m, seed, 0.0).unwrap(), opt);
        }
    }

    #[test]
    fn perturbation_is_seeded() {
        let g = sat(8);
        let p = ArrivalProfile::uniform(8, 0.0);
        let m = DelayModel::default();
        let a = extract_perturbed(&g, &p, &m, 11, 1.0).unwrap();
        let b = extract_perturbed(&g, &p, &m, 11, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(extract_perturbed(&g, &p, &m, 1, -1.0).is_err());
    }

    #[test]
    fn unsaturated_graph_warns() {
        let g = EGraph::from_expr(&BackboneExpr::serial(5).unwrap()).unwrap();
        let x = extract_optimal(&g, &ArrivalProfile::uniform(5, 0.0), &DelayModel::unit()).unwrap();
        assert!(x.warning.is_some());
        assert_eq!(x.expr, BackboneExpr::serial(5).unwrap());
    }
}
