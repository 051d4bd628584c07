//! The set of live functions whose sum is the current coverage requirement.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::function::SubmodularFunction;
use crate::rational::Rational;
use crate::set::ElementSet;
use crate::SetFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionId(pub u64);

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Live functions keyed by id, remembering arrival order. Evaluates as the
/// sum of its members.
#[derive(Debug, Clone)]
pub struct ActiveSet {
    ground_size: usize,
    live: BTreeMap<FunctionId, Arc<SubmodularFunction>>,
    order: Vec<FunctionId>,
    total: Rational,
}

impl ActiveSet {
    pub fn new(ground_size: usize) -> Self {
        ActiveSet {
            ground_size,
            live: BTreeMap::new(),
            order: Vec::new(),
            total: Rational::ZERO,
        }
    }

    pub fn insert(&mut self, id: FunctionId, g: Arc<SubmodularFunction>) -> Result<(), CoreError> {
        if g.ground_size() != self.ground_size {
            return Err(CoreError::GroundSizeMismatch {
                expected: self.ground_size,
                found: g.ground_size(),
            });
        }
        if self.live.contains_key(&id) {
            return Err(CoreError::DuplicateFunction(id));
        }
        self.total += g.total();
        self.live.insert(id, g);
        self.order.push(id);
        Ok(())
    }

    pub fn remove(&mut self, id: FunctionId) -> Result<Arc<SubmodularFunction>, CoreError> {
        let g = self
            .live
            .remove(&id)
            .ok_or(CoreError::UnknownFunction(id))?;
        self.order.retain(|&x| x != id);
        self.total -= g.total();
        Ok(g)
    }

    pub fn get(&self, id: FunctionId) -> Option<&Arc<SubmodularFunction>> {
        self.live.get(&id)
    }

    pub fn contains(&self, id: FunctionId) -> bool {
        self.live.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    /// Live functions in arrival order.
    pub fn iter(&self) -> impl Iterator<Item = (FunctionId, &Arc<SubmodularFunction>)> + '_ {
        self.order.iter().map(|id| (*id, &self.live[id]))
    }

    /// The sum as a standalone function.
    pub fn to_sum(&self) -> SubmodularFunction {
        let parts = self.order.iter().map(|id| self.live[id].clone()).collect();
        SubmodularFunction::sum(self.ground_size, parts).expect("members share the ground size")
    }
}

impl SetFunction for ActiveSet {
    fn ground_size(&self) -> usize {
        self.ground_size
    }

    fn eval(&self, s: &ElementSet) -> Rational {
        self.live.values().map(|g| g.eval(s)).sum()
    }

    fn total(&self) -> Rational {
        self.total
    }

    fn covers(&self, s: &ElementSet) -> bool {
        self.live.values().all(|g| g.covers(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(n: usize, a: usize, b: usize) -> Arc<SubmodularFunction> {
        Arc::new(SubmodularFunction::indicator(n, vec![a, b]).unwrap())
    }

    #[test]
    fn sum_tracks_members() {
        let mut g = ActiveSet::new(3);
        g.insert(FunctionId(1), edge(3, 0, 1)).unwrap();
        g.insert(FunctionId(2), edge(3, 1, 2)).unwrap();
        assert_eq!(g.total(), 2);
        assert_eq!(g.eval(&ElementSet::singleton(1)), 2);
        assert!(g.covers(&ElementSet::singleton(1)));
        assert_eq!(g.to_sum().eval(&ElementSet::singleton(0)), 1);
        assert_eq!(
            g.insert(FunctionId(1), edge(3, 0, 2)),
            Err(CoreError::DuplicateFunction(FunctionId(1)))
        );
        g.remove(FunctionId(1)).unwrap();
        assert_eq!(g.total(), 1);
        assert!(g.remove(FunctionId(1)).is_err());
        assert_eq!(
            g.iter().map(|(id, _)| id).collect::<Vec<_>>(),
            vec![FunctionId(2)]
        );
    }

    #[test]
    fn rejects_foreign_ground_size() {
        let mut g = ActiveSet::new(3);
        assert!(g.insert(FunctionId(0), edge(4, 0, 1)).is_err());
    }
}
