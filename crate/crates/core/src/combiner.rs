//! Routes each function by junta arity to a randomized junta child or to the
//! general local-search child, and maintains the union of their solutions.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::active::FunctionId;
use crate::dynamic::{greedy_factor, Action, CoverConfig, DynamicCover, Event, EventKind};
use crate::error::RunError;
use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::rjunta::JuntaState;
use crate::set::{ElementId, ElementSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Child {
    /// Arity in `[2^ℓ, 2^{ℓ+1})`.
    Bucket(u32),
    General,
}

#[derive(Debug, Clone, Serialize)]
pub struct CombinedRecord {
    pub t: usize,
    pub kind: EventKind,
    pub function: FunctionId,
    pub child: Child,
    pub solution: Vec<ElementId>,
    pub cost: Rational,
    pub recourse: usize,
    pub child_recourse: usize,
    pub cumulative_recourse: usize,
    /// Competitive factor of the children currently holding functions.
    pub factor: f64,
}

#[derive(Debug)]
pub struct BucketRouter {
    ground: GroundSet,
    buckets: Vec<JuntaState>,
    general: DynamicCover,
    general_used: bool,
    general_fmax: Rational,
    assignment: BTreeMap<FunctionId, Child>,
    counts: Vec<u32>,
    solution: ElementSet,
    recourse: usize,
}

/// `⌈log₂ log₂(F/fmin)⌉`, the number of arity buckets, or 0 when `F/fmin ≤ 2`.
pub fn bucket_count(f_total: Rational, fmin: Rational) -> u32 {
    let rho = (f_total / fmin).to_f64().log2();
    if rho <= 1.0 {
        0
    } else {
        rho.log2().ceil() as u32
    }
}

impl BucketRouter {
    /// `f_total` is the declared bound on `f(𝒩)` used to size the buckets.
    pub fn new(
        ground: GroundSet,
        general: CoverConfig,
        f_total: Rational,
        seed: u64,
    ) -> Result<Self, RunError> {
        let levels = bucket_count(f_total, general.fmin);
        let buckets = (0..levels)
            .map(|l| JuntaState::new(ground.clone(), seed.wrapping_add(u64::from(l))))
            .collect();
        Ok(BucketRouter {
            general: DynamicCover::new(ground.clone(), general)?,
            counts: vec![0; ground.len()],
            ground,
            buckets,
            general_used: false,
            general_fmax: Rational::ZERO,
            assignment: BTreeMap::new(),
            solution: ElementSet::new(),
            recourse: 0,
        })
    }

    pub fn levels(&self) -> u32 {
        self.buckets.len() as u32
    }

    pub fn solution(&self) -> &ElementSet {
        &self.solution
    }

    pub fn general(&self) -> &DynamicCover {
        &self.general
    }

    pub fn bucket(&self, l: u32) -> Option<&JuntaState> {
        self.buckets.get(l as usize)
    }

    pub fn general_used(&self) -> bool {
        self.general_used
    }

    pub fn assignment(&self, id: FunctionId) -> Option<Child> {
        self.assignment.get(&id).copied()
    }

    pub fn route_arity(&self, arity: Option<usize>) -> Child {
        match arity {
            Some(a) if a >= 1 && a < 1 << self.buckets.len() => {
                Child::Bucket(usize::BITS - 1 - a.leading_zeros())
            }
            _ => Child::General,
        }
    }

    fn child_solution(&self, c: Child) -> ElementSet {
        match c {
            Child::Bucket(l) => self.buckets[l as usize].solution().clone(),
            Child::General => self.general.solution().clone(),
        }
    }

    /// `Σ 2^{ℓ+1}` over nonempty buckets, plus the greedy factor if the general child holds functions.
    pub fn factor(&self) -> f64 {
        let buckets: f64 = self
            .buckets
            .iter()
            .enumerate()
            .filter(|(_, b)| b.functions().next().is_some())
            .map(|(l, _)| f64::from(1u32 << (l + 1)))
            .sum();
        let general = if self.general.active().is_empty() {
            0.0
        } else {
            let p = self.general.params();
            greedy_factor(p.gamma, self.general_fmax.to_f64(), p.fmin)
        };
        buckets + general
    }

    pub fn step(&mut self, ev: Event) -> Result<CombinedRecord, RunError> {
        let t = ev.t;
        let (kind, id, child) = match &ev.action {
            Action::Insert(id, g) => {
                if self.assignment.contains_key(id) {
                    return Err(RunError::InvalidEvent {
                        t,
                        reason: format!("function {id} is already live"),
                    });
                }
                (EventKind::Insert, *id, self.route_arity(g.junta_arity()))
            }
            Action::Delete(id) => match self.assignment.get(id) {
                Some(c) => (EventKind::Delete, *id, *c),
                None => {
                    return Err(RunError::InvalidEvent {
                        t,
                        reason: format!("function {id} is not live"),
                    })
                }
            },
        };
        let before = self.child_solution(child);
        let child_recourse = match child {
            Child::Bucket(l) => self.buckets[l as usize].step(ev)?.recourse,
            Child::General => {
                self.general_used = true;
                let rec = self.general.step(ev)?;
                self.general_fmax = rec.fmax;
                rec.recourse
            }
        };
        match kind {
            EventKind::Insert => self.assignment.insert(id, child),
            EventKind::Delete => self.assignment.remove(&id),
        };
        let after = self.child_solution(child);
        let old = self.solution.clone();
        for e in before.difference(&after).iter() {
            self.counts[e] -= 1;
            if self.counts[e] == 0 {
                self.solution.remove(e);
            }
        }
        for e in after.difference(&before).iter() {
            self.counts[e] += 1;
            self.solution.insert(e);
        }
        let recourse = old.symmetric_difference_len(&self.solution);
        self.recourse += recourse;
        Ok(CombinedRecord {
            t,
            kind,
            function: id,
            child,
            solution: self.solution.iter().collect(),
            cost: self.ground.cost_of(&self.solution),
            recourse,
            child_recourse,
            cumulative_recourse: self.recourse,
            factor: self.factor(),
        })
    }

    /// Every live function is covered by the union.
    pub fn covers_all(&self) -> bool {
        use crate::function::SetFunction;
        self.general.active().covers(&self.solution)
            && self
                .buckets
                .iter()
                .all(|b| b.functions().all(|(_, g)| g.covers(&self.solution)))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::function::SubmodularFunction;
    use crate::permutation::MffMode;

    fn ins(t: usize, id: u64, g: SubmodularFunction) -> Event {
        Event {
            t,
            action: Action::Insert(FunctionId(id), Arc::new(g)),
        }
    }

    fn router(n: usize, f_total: i64) -> BucketRouter {
        BucketRouter::new(
            GroundSet::unit(n),
            CoverConfig::new(MffMode::CostRatio),
            Rational::from(f_total),
            5,
        )
        .unwrap()
    }

    #[test]
    fn bucket_levels() {
        assert_eq!(bucket_count(Rational::from(2i64), Rational::ONE), 0);
        assert_eq!(bucket_count(Rational::from(16i64), Rational::ONE), 2);
        assert_eq!(bucket_count(Rational::from(1i64 << 20), Rational::ONE), 5);
        let r = router(4, 1 << 20);
        assert_eq!(r.route_arity(Some(1)), Child::Bucket(0));
        assert_eq!(r.route_arity(Some(3)), Child::Bucket(1));
        assert_eq!(r.route_arity(Some(31)), Child::Bucket(4));
        assert_eq!(r.route_arity(Some(32)), Child::General);
        assert_eq!(r.route_arity(None), Child::General);
    }

    #[test]
    fn small_juntas_never_reach_general() {
        let mut r = router(6, 1 << 20);
        for i in 0..6u64 {
            let g =
                SubmodularFunction::indicator(6, vec![i as usize, ((i + 1) % 6) as usize]).unwrap();
            r.step(ins(i as usize, i, g)).unwrap();
            assert!(r.covers_all());
        }
        r.step(Event {
            t: 6,
            action: Action::Delete(FunctionId(2)),
        })
        .unwrap();
        assert!(r.covers_all());
        assert!(!r.general_used());
    }

    #[test]
    fn disjoint_children_add_costs() {
        let mut r = router(4, 1 << 20);
        r.step(ins(
            0,
            0,
            SubmodularFunction::indicator(4, vec![0]).unwrap(),
        ))
        .unwrap();
        let g = SubmodularFunction::coverage(4, &[vec![], vec![], vec![7], vec![]]).unwrap();
        let rec = r.step(ins(1, 1, g)).unwrap();
        assert_eq!(rec.child, Child::General);
        assert_eq!(rec.solution, vec![0, 2]);
        assert_eq!(rec.cost, 2);
        assert!(rec.factor > 2.0);
    }

    #[test]
    fn shared_element_leaves_with_last_holder() {
        let mut r = router(2, 1 << 20);
        r.step(ins(
            0,
            0,
            SubmodularFunction::indicator(2, vec![0]).unwrap(),
        ))
        .unwrap();
        let g = SubmodularFunction::coverage(2, &[vec![1], vec![]]).unwrap();
        let rec = r.step(ins(1, 1, g)).unwrap();
        assert_eq!(rec.recourse, 0);
        let rec = r
            .step(Event {
                t: 2,
                action: Action::Delete(FunctionId(0)),
            })
            .unwrap();
        assert_eq!(rec.recourse, 0);
        assert_eq!(rec.child_recourse, 1);
        assert_eq!(rec.solution, vec![0]);
    }
}
