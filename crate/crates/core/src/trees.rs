//! Online metric spanning trees and fully-dynamic Steiner trees on top of the
//! cost-ratio engine. Elements are edges of the complete graph over the live
//! vertices and the coverage function is the graphic-matroid rank.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dynamic::{default_gamma, AuditTally};
use crate::error::{CoreError, RunError};
use crate::function::SubmodularFunction;
use crate::ground::GroundSet;
use crate::permutation::{MffMode, Move, MoveCap, PermutationEngine};
use crate::potentials::{audit_event, AtomicEvent, AuditParams, PotentialSpec, PowerLaw};
use crate::rational::Rational;
use crate::set::{ElementId, ElementSet};

pub type VertexId = usize;

/// A finite metric with exact rational distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    dist: Vec<Vec<Rational>>,
}

impl Metric {
    /// Euclidean distances between `points`, rounded to six decimals.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, CoreError> {
        let n = points.len();
        let mut dist = vec![vec![Rational::ZERO; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                if points[i].len() != points[j].len() {
                    return Err(CoreError::InvalidFunction(
                        "points have different dimensions".into(),
                    ));
                }
                let d: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let d = Rational::round_from_f64(d, 6);
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        Self::from_matrix(dist)
    }

    /// Validates symmetry, positivity and the triangle inequality.
    pub fn from_matrix(dist: Vec<Vec<Rational>>) -> Result<Self, CoreError> {
        let n = dist.len();
        let bad = |msg: String| Err(CoreError::InvalidFunction(msg));
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return bad(format!(
                    "distance row {i} has {} entries, expected {n}",
                    row.len()
                ));
            }
            if !row[i].is_zero() {
                return bad(format!("d({i},{i}) must be 0"));
            }
            for j in 0..n {
                if dist[i][j] != dist[j][i] {
                    return bad(format!("d({i},{j}) != d({j},{i})"));
                }
                if i != j && !dist[i][j].is_positive() {
                    return bad(format!("d({i},{j}) must be positive"));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] {
                        return bad(format!("triangle inequality fails for ({i},{j},{k})"));
                    }
                }
            }
        }
        Ok(Metric { dist })
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn dist(&self, u: VertexId, v: VertexId) -> Rational {
        self.dist[u][v]
    }

    fn pair_distances(&self) -> impl Iterator<Item = Rational> + '_ {
        (0..self.len()).flat_map(move |i| (i + 1..self.len()).map(move |j| self.dist[i][j]))
    }

    pub fn dmin(&self) -> Rational {
        self.pair_distances().min().unwrap_or(Rational::ONE)
    }

    pub fn dmax(&self) -> Rational {
        self.pair_distances().max().unwrap_or(Rational::ONE)
    }

    /// `D`, the ratio of the largest to the smallest distance.
    pub fn aspect_ratio(&self) -> f64 {
        (self.dmax() / self.dmin()).to_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeMode {
    Mst,
    Steiner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexEvent {
    Arrive,
    Depart,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeStepRecord {
    pub t: usize,
    pub event: VertexEvent,
    pub vertex: VertexId,
    pub edges: Vec<(VertexId, VertexId)>,
    pub cost: Rational,
    pub terminals: Vec<VertexId>,
    pub steiner: Vec<VertexId>,
    pub recourse: usize,
    pub cumulative_recourse: usize,
    pub joins: usize,
    pub swaps: usize,
    pub gamma_moves: usize,
    pub cleanups: usize,
    pub potential: f64,
    pub audit_failures: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TreeTotals {
    pub arrivals: usize,
    pub departures: usize,
    pub recourse: usize,
    pub joins: usize,
    pub swaps: usize,
    pub gamma_moves: usize,
    pub cleanups: usize,
}

/// Maintains a spanning (or Steiner) tree of the current terminals.
#[derive(Debug)]
pub struct TreeMaintainer {
    metric: Metric,
    mode: TreeMode,
    gamma: Rational,
    engine: PermutationEngine,
    edges: Vec<Option<(VertexId, VertexId)>>,
    edge_of: BTreeMap<(VertexId, VertexId), ElementId>,
    live: BTreeSet<VertexId>,
    terminals: BTreeSet<VertexId>,
    seen: BTreeSet<VertexId>,
    rank: SubmodularFunction,
    spec: PotentialSpec,
    params: AuditParams,
    tally: AuditTally,
    totals: TreeTotals,
    solution: ElementSet,
    move_cap: Option<usize>,
}

fn key(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    (u.min(v), u.max(v))
}

impl TreeMaintainer {
    /// `γ = e²`, with `h` chosen from the aspect ratio of the whole metric.
    pub fn new(metric: Metric, mode: TreeMode) -> Result<Self, RunError> {
        Self::with_gamma(metric, mode, default_gamma(MffMode::CostRatio))
    }

    pub fn with_gamma(metric: Metric, mode: TreeMode, gamma: Rational) -> Result<Self, RunError> {
        let g = gamma.to_f64();
        let h = PowerLaw::for_cost_spread(metric.aspect_ratio(), g)?;
        let spec = PotentialSpec::PowerLaw(h);
        let params = AuditParams {
            gamma: g,
            fmin: 1.0,
            cmin: metric.dmin().to_f64(),
            cmax: metric.dmax().to_f64(),
        };
        let rank = SubmodularFunction::graphic_rank(0, metric.len(), Vec::new())?;
        Ok(TreeMaintainer {
            engine: PermutationEngine::new(MffMode::CostRatio, &GroundSet::unit(0)),
            tally: AuditTally::new(&spec, &params),
            metric,
            mode,
            gamma,
            edges: Vec::new(),
            edge_of: BTreeMap::new(),
            live: BTreeSet::new(),
            terminals: BTreeSet::new(),
            seen: BTreeSet::new(),
            rank,
            spec,
            params,
            totals: TreeTotals::default(),
            solution: ElementSet::new(),
            move_cap: std::env::var(crate::dynamic::MOVE_CAP_ENV)
                .ok()
                .and_then(|v| v.parse().ok()),
        })
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn gamma(&self) -> Rational {
        self.gamma
    }

    pub fn power_law(&self) -> PowerLaw {
        match self.spec {
            PotentialSpec::PowerLaw(h) => h,
            _ => unreachable!("trees audit the power-law potential"),
        }
    }

    pub fn tally(&self) -> &AuditTally {
        &self.tally
    }

    pub fn totals(&self) -> &TreeTotals {
        &self.totals
    }

    pub fn terminals(&self) -> &BTreeSet<VertexId> {
        &self.terminals
    }

    pub fn live(&self) -> &BTreeSet<VertexId> {
        &self.live
    }

    /// Current tree edges as vertex pairs.
    pub fn tree_edges(&self) -> Vec<(VertexId, VertexId)> {
        self.solution
            .iter()
            .map(|e| self.edges[e].expect("solution edges are live"))
            .collect()
    }

    pub fn cost(&self) -> Rational {
        self.tree_edges()
            .iter()
            .map(|&(u, v)| self.metric.dist(u, v))
            .sum()
    }

    fn refresh_rank(&mut self) {
        self.rank = SubmodularFunction::graphic_rank(
            self.edges.len(),
            self.metric.len(),
            self.edges.clone(),
        )
        .expect("edge endpoints are metric vertices");
    }

    /// Rebuilds the engine against the current rank function and audits the change.
    fn rebuild(
        &mut self,
        t: usize,
        before: &crate::permutation::Snapshot,
        ev: AtomicEvent,
    ) -> (usize, usize) {
        self.refresh_rank();
        let (joined, _) = self.engine.rebuild(&self.rank);
        let a = audit_event(
            &self.spec,
            before,
            &self.engine.snapshot(),
            ev,
            &self.params,
        );
        let failed = usize::from(!a.pass);
        self.tally.record(t, a);
        (joined.len(), failed)
    }

    fn degree(&self, v: VertexId) -> Vec<(ElementId, VertexId)> {
        self.engine
            .solution()
            .iter()
            .filter_map(|e| {
                let (a, b) = self.edges[e]?;
                (a == v || b == v).then_some((e, if a == v { b } else { a }))
            })
            .collect()
    }

    fn drop_vertex_edges(&mut self, v: VertexId) {
        let incident: Vec<ElementId> = self
            .live
            .iter()
            .filter(|&&u| u != v)
            .map(|&u| self.edge_of[&key(u, v)])
            .collect();
        for e in incident {
            self.engine
                .remove_element(e)
                .expect("live edges are in the permutation");
            let (a, b) = self.edges[e].take().expect("edge is live");
            self.edge_of.remove(&key(a, b));
        }
        self.live.remove(&v);
    }

    /// Shortcuts degree-2 Steiner vertices and deletes degree-0/1 ones until none remain.
    fn clean_steiner(&mut self, t: usize) -> (usize, usize, usize) {
        let (mut ops, mut joins, mut failed) = (0, 0, 0);
        loop {
            let steiner: Vec<VertexId> = self.live.difference(&self.terminals).copied().collect();
            let pick = |want: &dyn Fn(usize) -> bool| {
                steiner
                    .iter()
                    .copied()
                    .find(|&v| want(self.degree(v).len()))
            };
            let before = self.engine.snapshot();
            if let Some(v) = pick(&|d| d == 2) {
                let mut nbrs = self.degree(v);
                nbrs.sort_by_key(|&(e, _)| self.engine.position(e));
                let ((first, u1), (_, u2)) = (nbrs[0], nbrs[1]);
                let shortcut = self.edge_of[&key(u1, u2)];
                let at = self.engine.position(first).expect("tree edge is placed");
                self.engine
                    .relocate(shortcut, at)
                    .expect("shortcut edge is placed");
                self.drop_vertex_edges(v);
            } else if let Some(v) = pick(&|d| d <= 1) {
                self.drop_vertex_edges(v);
            } else {
                return (ops, joins, failed);
            }
            let (j, f) = self.rebuild(t, &before, AtomicEvent::Cleanup);
            ops += 1;
            joins += j;
            failed += f;
        }
    }

    fn cap(&self) -> MoveCap {
        let n = self.engine.len().max(1);
        let gamma_moves = self.move_cap.unwrap_or_else(|| {
            let phi = self
                .spec
                .evaluate(MffMode::CostRatio, &self.engine.snapshot())
                .unwrap_or(0.0);
            10 * (phi / self.spec.move_decrease(&self.params)).ceil() as usize + 10
        });
        MoveCap {
            gamma_moves,
            swaps: 10 * n * n,
        }
    }

    fn check_vertex(&self, v: VertexId, t: usize) -> Result<(), RunError> {
        if v >= self.metric.len() {
            return Err(RunError::InvalidEvent {
                t,
                reason: format!("vertex {v} is not in the metric"),
            });
        }
        Ok(())
    }

    pub fn arrive(&mut self, t: usize, v: VertexId) -> Result<TreeStepRecord, RunError> {
        self.check_vertex(v, t)?;
        if self.seen.contains(&v) {
            return Err(RunError::InvalidEvent {
                t,
                reason: format!("vertex {v} has already arrived once"),
            });
        }
        self.seen.insert(v);
        let before = self.engine.snapshot();
        for &u in &self.live {
            let e = self.edges.len();
            self.edges.push(Some(key(u, v)));
            self.edge_of.insert(key(u, v), e);
            self.engine.push_element(e, self.metric.dist(u, v))?;
        }
        self.live.insert(v);
        self.terminals.insert(v);
        self.totals.arrivals += 1;
        let (joins, failed) = self.rebuild(t, &before, AtomicEvent::Insert { g_total: 1.0 });
        self.settle(t, VertexEvent::Arrive, v, joins, failed, 0)
    }

    pub fn depart(&mut self, t: usize, v: VertexId) -> Result<TreeStepRecord, RunError> {
        self.check_vertex(v, t)?;
        if self.mode == TreeMode::Mst {
            return Err(RunError::InvalidEvent {
                t,
                reason: "spanning-tree mode has no departures".into(),
            });
        }
        if !self.terminals.remove(&v) {
            return Err(RunError::InvalidEvent {
                t,
                reason: format!("vertex {v} is not an active terminal"),
            });
        }
        self.totals.departures += 1;
        let (ops, joins, failed) = self.clean_steiner(t);
        self.settle(t, VertexEvent::Depart, v, joins, failed, ops)
    }

    /// Local search to a fixed point, cleaning Steiner vertices after every move.
    fn settle(
        &mut self,
        t: usize,
        event: VertexEvent,
        vertex: VertexId,
        mut joins: usize,
        mut failed: usize,
        mut cleanups: usize,
    ) -> Result<TreeStepRecord, RunError> {
        let cap = self.cap();
        let (mut swaps, mut gamma_moves) = (0usize, 0usize);
        loop {
            let before = self.engine.snapshot();
            let Some(out) = self.engine.step(&self.rank, self.gamma)? else {
                break;
            };
            let ev = match out.mv {
                Move::Swap { .. } => {
                    swaps += 1;
                    AtomicEvent::Swap
                }
                Move::Gamma(_) => {
                    gamma_moves += 1;
                    AtomicEvent::GammaMove
                }
            };
            joins += out.joined.len();
            let a = audit_event(
                &self.spec,
                &before,
                &self.engine.snapshot(),
                ev,
                &self.params,
            );
            failed += usize::from(!a.pass);
            self.tally.record(t, a);
            if self.mode == TreeMode::Steiner {
                let (ops, j, f) = self.clean_steiner(t);
                cleanups += ops;
                joins += j;
                failed += f;
            }
            if gamma_moves > cap.gamma_moves || swaps > cap.swaps.saturating_mul(gamma_moves + 1) {
                return Err(crate::error::EngineError::NonTermination {
                    moves: swaps + gamma_moves,
                    cap: cap.gamma_moves,
                    dump: self.engine.dump(),
                }
                .into());
            }
        }
        if !self.is_valid_tree() {
            return Err(RunError::Infeasible { t });
        }
        let solution = self.engine.solution();
        let recourse = solution.symmetric_difference_len(&self.solution);
        self.solution = solution;
        let totals = &mut self.totals;
        totals.recourse += recourse;
        totals.joins += joins;
        totals.swaps += swaps;
        totals.gamma_moves += gamma_moves;
        totals.cleanups += cleanups;
        Ok(TreeStepRecord {
            t,
            event,
            vertex,
            edges: self.tree_edges(),
            cost: self.cost(),
            terminals: self.terminals.iter().copied().collect(),
            steiner: self.live.difference(&self.terminals).copied().collect(),
            recourse,
            cumulative_recourse: self.totals.recourse,
            joins,
            swaps,
            gamma_moves,
            cleanups,
            potential: self
                .spec
                .evaluate(MffMode::CostRatio, &self.engine.snapshot())
                .unwrap_or(f64::NAN),
            audit_failures: failed,
        })
    }

    /// The solution is a spanning tree of the live vertices, and every Steiner
    /// vertex has degree at least 3.
    pub fn is_valid_tree(&self) -> bool {
        let edges: Vec<(VertexId, VertexId)> = self
            .engine
            .solution()
            .iter()
            .map(|e| self.edges[e].expect("solution edges are live"))
            .collect();
        let mut uf = petgraph::unionfind::UnionFind::<usize>::new(self.metric.len());
        for &(u, v) in &edges {
            if !uf.union(u, v) {
                return false;
            }
        }
        let connected = self
            .live
            .iter()
            .all(|&v| self.live.first().is_none_or(|&r| uf.equiv(r, v)));
        let spanning = edges.len() + 1 == self.live.len().max(1);
        let steiner_ok = self
            .live
            .difference(&self.terminals)
            .all(|&v| self.degree(v).len() >= 3);
        connected && spanning && steiner_ok
    }

    /// Recourse budget `2 (A + Dep + A · (cmax/cmin)^δ / ε)` from the power-law potential.
    pub fn recourse_budget(&self) -> f64 {
        let h = self.power_law();
        let a = self.totals.arrivals as f64;
        let dep = self.totals.departures as f64;
        let per_arrival = (self.params.cmax / self.params.cmin).powf(h.delta) / h.epsilon;
        2.0 * (a + dep + a * per_arrival)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Metric {
        Metric::from_points(&xs.iter().map(|&x| vec![x, 0.0]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn second_vertex_gets_the_edge() {
        let mut tm = TreeMaintainer::new(line(&[0.0, 1.0, 3.0]), TreeMode::Mst).unwrap();
        let r = tm.arrive(0, 0).unwrap();
        assert_eq!(r.recourse, 0);
        let r = tm.arrive(1, 1).unwrap();
        assert_eq!(r.recourse, 1);
        assert_eq!(r.edges, vec![(0, 1)]);
        assert!(matches!(
            tm.arrive(2, 1),
            Err(RunError::InvalidEvent { .. })
        ));
        assert!(matches!(
            tm.depart(2, 1),
            Err(RunError::InvalidEvent { .. })
        ));
    }

    #[test]
    fn leaf_terminal_departure_deletes_it() {
        let mut tm = TreeMaintainer::new(line(&[0.0, 1.0, 2.0]), TreeMode::Steiner).unwrap();
        for v in 0..3 {
            tm.arrive(v, v).unwrap();
        }
        let r = tm.depart(3, 2).unwrap();
        assert_eq!(r.edges, vec![(0, 1)]);
        assert!(r.steiner.is_empty());
        assert!(tm.tally().failed == 0);
    }

    #[test]
    fn middle_terminal_departure_shortcuts() {
        let mut tm = TreeMaintainer::new(line(&[1.0, 0.0, 2.0]), TreeMode::Steiner).unwrap();
        for v in 0..3 {
            tm.arrive(v, v).unwrap();
        }
        let mut before = tm.tree_edges();
        before.sort();
        assert_eq!(before, vec![(0, 1), (0, 2)]);
        let r = tm.depart(3, 0).unwrap();
        assert_eq!(r.edges, vec![(1, 2)]);
        assert_eq!(r.cleanups, 1);
        assert_eq!(r.cost, 2);
        assert!(r.steiner.is_empty());
        assert_eq!(tm.tally().failed, 0);
    }

    #[test]
    fn metric_validation() {
        let r = |x: i64| Rational::from(x);
        assert!(Metric::from_matrix(vec![vec![r(0), r(1)], vec![r(2), r(0)]]).is_err());
        let bad = vec![
            vec![r(0), r(1), r(5)],
            vec![r(1), r(0), r(1)],
            vec![r(5), r(1), r(0)],
        ];
        assert!(Metric::from_matrix(bad).is_err());
        let m = line(&[0.0, 1.0, 4.0]);
        assert_eq!(m.aspect_ratio(), 4.0);
    }
}
