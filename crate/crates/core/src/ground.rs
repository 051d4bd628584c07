//! The ground set and its cost vector.

use crate::error::CoreError;
use crate::rational::Rational;
use crate::set::{ElementId, ElementSet};

/// Elements `0..n` with strictly positive costs.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSet {
    costs: Vec<Rational>,
}

impl GroundSet {
    pub fn new(costs: Vec<Rational>) -> Result<Self, CoreError> {
        if let Some((element, &cost)) = costs.iter().enumerate().find(|(_, c)| !c.is_positive()) {
            return Err(CoreError::NonPositiveCost { element, cost });
        }
        Ok(GroundSet { costs })
    }

    pub fn unit(n: usize) -> Self {
        GroundSet {
            costs: vec![Rational::ONE; n],
        }
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn cost(&self, e: ElementId) -> Rational {
        self.costs[e]
    }

    pub fn costs(&self) -> &[Rational] {
        &self.costs
    }

    pub fn cost_of(&self, s: &ElementSet) -> Rational {
        s.iter().map(|e| self.costs[e]).sum()
    }

    pub fn cmax(&self) -> Rational {
        self.costs.iter().copied().max().unwrap_or(Rational::ONE)
    }

    pub fn cmin(&self) -> Rational {
        self.costs.iter().copied().min().unwrap_or(Rational::ONE)
    }

    pub fn is_unit(&self) -> bool {
        self.costs.iter().all(|&c| c == Rational::ONE)
    }

    /// Appends an element and returns its id.
    pub fn push(&mut self, cost: Rational) -> Result<ElementId, CoreError> {
        if !cost.is_positive() {
            return Err(CoreError::NonPositiveCost {
                element: self.costs.len(),
                cost,
            });
        }
        self.costs.push(cost);
        Ok(self.costs.len() - 1)
    }

    pub fn check(&self, e: ElementId) -> Result<(), CoreError> {
        if e < self.costs.len() {
            Ok(())
        } else {
            Err(CoreError::UnknownElement {
                element: e,
                ground_size: self.costs.len(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_costs() {
        let err = GroundSet::new(vec![Rational::ONE, Rational::ZERO]).unwrap_err();
        assert_eq!(
            err,
            CoreError::NonPositiveCost {
                element: 1,
                cost: Rational::ZERO
            }
        );
        assert!(GroundSet::new(vec![Rational::from(-1i64)]).is_err());
    }

    #[test]
    fn cost_extremes() {
        let g = GroundSet::new(vec![
            Rational::from(3i64),
            Rational::new(1, 2),
            Rational::ONE,
        ])
        .unwrap();
        assert_eq!(g.cmax(), 3);
        assert_eq!(g.cmin(), Rational::new(1, 2));
        assert_eq!(
            g.cost_of(&ElementSet::from_iter([0usize, 1])),
            Rational::new(7, 2)
        );
        assert!(!g.is_unit());
    }
}
