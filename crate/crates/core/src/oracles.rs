//! Exact and greedy baselines for small instances.

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::error::CoreError;
use crate::function::SetFunction;
use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::set::{ElementId, ElementSet};
use crate::trees::{Metric, VertexId};

pub const BRUTE_FORCE_CAP: usize = 20;
pub const STEINER_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptMethod {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub set: ElementSet,
    pub cost: Rational,
    pub method: OptMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeOpt {
    pub edges: Vec<(VertexId, VertexId)>,
    pub cost: Rational,
}

/// Greedy by marginal value per unit cost, lowest id on ties.
pub fn offline_greedy<F: SetFunction + ?Sized>(f: &F, ground: &GroundSet) -> OptResult {
    let target = f.total();
    let mut set = ElementSet::new();
    let mut value = Rational::ZERO;
    while value < target {
        let mut best: Option<(Rational, ElementId)> = None;
        for e in (0..ground.len()).filter(|&e| !set.contains(e)) {
            let ratio = (f.eval(&set.with(e)) - value) / ground.cost(e);
            if ratio.is_positive() && best.is_none_or(|(b, _)| ratio > b) {
                best = Some((ratio, e));
            }
        }
        let (_, e) = best.expect("a monotone function reaches its total value");
        set.insert(e);
        value = f.eval(&set);
    }
    OptResult {
        cost: ground.cost_of(&set),
        set,
        method: OptMethod::Greedy,
    }
}

/// Minimum-cost set with full value, by branch and bound seeded with the greedy cost.
pub fn brute_force_cover<F: SetFunction + ?Sized>(
    f: &F,
    ground: &GroundSet,
) -> Result<OptResult, CoreError> {
    let n = ground.len();
    if n > BRUTE_FORCE_CAP {
        return Err(CoreError::VerificationCapExceeded {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let greedy = offline_greedy(f, ground);
    let mut order: Vec<ElementId> = (0..n).collect();
    order.sort_by_key(|&e| (ground.cost(e), e));
    let mut search = Search {
        f,
        ground,
        order: &order,
        target: f.total(),
        best: greedy.set.clone(),
        best_cost: greedy.cost,
    };
    search.go(0, ElementSet::new(), Rational::ZERO, Rational::ZERO);
    Ok(OptResult {
        set: search.best,
        cost: search.best_cost,
        method: OptMethod::Exhaustive,
    })
}

struct Search<'a, F: ?Sized> {
    f: &'a F,
    ground: &'a GroundSet,
    order: &'a [ElementId],
    target: Rational,
    best: ElementSet,
    best_cost: Rational,
}

impl<F: SetFunction + ?Sized> Search<'_, F> {
    fn go(&mut self, i: usize, set: ElementSet, value: Rational, cost: Rational) {
        if value == self.target {
            if cost < self.best_cost {
                self.best = set;
                self.best_cost = cost;
            }
            return;
        }
        if i == self.order.len() || cost >= self.best_cost {
            return;
        }
        let rest: ElementSet = self.order[i..].iter().copied().collect();
        if self.f.eval(&set.union(&rest)) < self.target {
            return;
        }
        let e = self.order[i];
        let with = set.with(e);
        let v = self.f.eval(&with);
        if v > value {
            self.go(i + 1, with, v, cost + self.ground.cost(e));
        }
        self.go(i + 1, set, value, cost);
    }
}

/// Kruskal over the complete graph on `vertices`.
pub fn exact_mst(metric: &Metric, vertices: &[VertexId]) -> TreeOpt {
    let mut pairs: Vec<(Rational, VertexId, VertexId)> = Vec::new();
    for (i, &u) in vertices.iter().enumerate() {
        for &v in &vertices[i + 1..] {
            pairs.push((metric.dist(u, v), u.min(v), u.max(v)));
        }
    }
    pairs.sort();
    let mut uf = UnionFind::<usize>::new(metric.len());
    let mut edges = Vec::new();
    let mut cost = Rational::ZERO;
    for (d, u, v) in pairs {
        if uf.union(u, v) {
            edges.push((u, v));
            cost = cost + d;
        }
    }
    TreeOpt { edges, cost }
}

/// Minimum Steiner tree of `terminals`, with every other metric point available.
pub fn exact_steiner(metric: &Metric, terminals: &[VertexId]) -> Result<TreeOpt, CoreError> {
    if metric.len() > STEINER_CAP {
        return Err(CoreError::VerificationCapExceeded {
            n: metric.len(),
            cap: STEINER_CAP,
        });
    }
    let extra: Vec<VertexId> = (0..metric.len())
        .filter(|v| !terminals.contains(v))
        .collect();
    let mut best = exact_mst(metric, terminals);
    for mask in 1u32..(1 << extra.len()) {
        let mut vs = terminals.to_vec();
        vs.extend(
            extra
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &v)| v),
        );
        let tree = exact_mst(metric, &vs);
        if tree.cost < best.cost {
            best = tree;
        }
    }
    Ok(best)
}
