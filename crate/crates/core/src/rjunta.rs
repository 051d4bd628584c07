//! Randomized fully-dynamic cover for juntas: each uncovered function probes
//! elements of its support with probability inversely proportional to cost.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::active::FunctionId;
use crate::dynamic::{Action, Event, EventKind};
use crate::error::RunError;
use crate::function::{SetFunction, SubmodularFunction};
use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::set::{ElementId, ElementSet};

#[derive(Debug, Clone)]
struct Live {
    g: Arc<SubmodularFunction>,
    support: ElementSet,
    assigned: ElementSet,
}

#[derive(Debug, Clone, Serialize)]
pub struct JuntaRecord {
    pub t: usize,
    pub kind: EventKind,
    pub function: FunctionId,
    pub g_total: Rational,
    pub solution: Vec<ElementId>,
    pub cost: Rational,
    pub recourse: usize,
    pub cumulative_recourse: usize,
    pub probes: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct JuntaTotals {
    pub probes: usize,
    pub recourse: usize,
    pub sum_g: Rational,
}

/// State of one randomized run.
#[derive(Debug, Clone)]
pub struct JuntaState {
    ground: GroundSet,
    solution: ElementSet,
    live: BTreeMap<FunctionId, Live>,
    order: Vec<FunctionId>,
    rng: ChaCha8Rng,
    totals: JuntaTotals,
}

impl JuntaState {
    pub fn new(ground: GroundSet, seed: u64) -> Self {
        JuntaState {
            ground,
            solution: ElementSet::new(),
            live: BTreeMap::new(),
            order: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            totals: JuntaTotals::default(),
        }
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn solution(&self) -> &ElementSet {
        &self.solution
    }

    pub fn totals(&self) -> &JuntaTotals {
        &self.totals
    }

    pub fn cost(&self) -> Rational {
        self.ground.cost_of(&self.solution)
    }

    /// `U_g` for a live function.
    pub fn responsibility(&self, id: FunctionId) -> Option<&ElementSet> {
        self.live.get(&id).map(|l| &l.assigned)
    }

    /// Live functions in arrival order.
    pub fn functions(&self) -> impl Iterator<Item = (FunctionId, &Arc<SubmodularFunction>)> + '_ {
        self.order.iter().map(|id| (*id, &self.live[id].g))
    }

    fn covered(&self, id: FunctionId) -> bool {
        let l = &self.live[&id];
        l.g.covers(&self.solution.intersection(&l.support))
    }

    /// Samples one uncovered support element of `id` and assigns it.
    pub fn probe(&mut self, id: FunctionId) -> Result<ElementId, RunError> {
        let l = &self.live[&id];
        let candidates: Vec<ElementId> = l.support.difference(&self.solution).iter().collect();
        if candidates.is_empty() {
            return Err(RunError::EmptyProbe(id));
        }
        let weights = candidates
            .iter()
            .map(|&u| self.ground.cost(u).recip().to_f64());
        let dist = WeightedIndex::new(weights).expect("costs are positive");
        let u = candidates[dist.sample(&mut self.rng)];
        self.solution.insert(u);
        self.live
            .get_mut(&id)
            .expect("probed function is live")
            .assigned
            .insert(u);
        self.totals.probes += 1;
        Ok(u)
    }

    fn cover(&mut self, id: FunctionId) -> Result<usize, RunError> {
        let mut probes = 0;
        while !self.covered(id) {
            self.probe(id)?;
            probes += 1;
        }
        Ok(probes)
    }

    pub fn on_arrival(
        &mut self,
        t: usize,
        id: FunctionId,
        g: Arc<SubmodularFunction>,
    ) -> Result<usize, RunError> {
        let support: ElementSet = match g.junta_support() {
            Some(v) => v.iter().copied().collect(),
            None => return Err(RunError::NotAJunta(id)),
        };
        if self.live.contains_key(&id) {
            return Err(RunError::InvalidEvent {
                t,
                reason: format!("function {id} is already live"),
            });
        }
        if g.ground_size() != self.ground.len() {
            return Err(RunError::InvalidEvent {
                t,
                reason: format!(
                    "function {id} has ground size {}, expected {}",
                    g.ground_size(),
                    self.ground.len()
                ),
            });
        }
        self.totals.sum_g += g.total();
        self.live.insert(
            id,
            Live {
                g,
                support,
                assigned: ElementSet::new(),
            },
        );
        self.order.push(id);
        self.cover(id)
    }

    pub fn on_departure(&mut self, t: usize, id: FunctionId) -> Result<usize, RunError> {
        let Some(gone) = self.live.remove(&id) else {
            return Err(RunError::InvalidEvent {
                t,
                reason: format!("function {id} is not live"),
            });
        };
        self.order.retain(|&x| x != id);
        self.totals.sum_g += gone.g.total();
        for u in gone.assigned.iter() {
            self.solution.remove(u);
        }
        let mut probes = 0;
        for g in self.order.clone() {
            probes += self.cover(g)?;
        }
        Ok(probes)
    }

    pub fn step(&mut self, ev: Event) -> Result<JuntaRecord, RunError> {
        let before = self.solution.clone();
        let (kind, function, g_total, probes) = match ev.action {
            Action::Insert(id, g) => {
                let total = g.total();
                (EventKind::Insert, id, total, self.on_arrival(ev.t, id, g)?)
            }
            Action::Delete(id) => {
                let total = self
                    .live
                    .get(&id)
                    .map(|l| l.g.total())
                    .unwrap_or(Rational::ZERO);
                (EventKind::Delete, id, total, self.on_departure(ev.t, id)?)
            }
        };
        let recourse = before.symmetric_difference_len(&self.solution);
        self.totals.recourse += recourse;
        Ok(JuntaRecord {
            t: ev.t,
            kind,
            function,
            g_total,
            solution: self.solution.iter().collect(),
            cost: self.cost(),
            recourse,
            cumulative_recourse: self.totals.recourse,
            probes,
        })
    }

    /// `S` is the disjoint union of the `U_g`, each inside its support, and
    /// every live function is covered.
    pub fn check_invariants(&self) -> bool {
        let mut union = ElementSet::new();
        for (id, l) in &self.live {
            if !l.assigned.is_subset(&l.support)
                || !union.intersection(&l.assigned).is_empty()
                || !self.covered(*id)
            {
                return false;
            }
            union.union_with(&l.assigned);
        }
        union == self.solution
    }
}
