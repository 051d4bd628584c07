//! Value oracles for monotone submodular functions.
//!
//! Every function is normalized so that `f(∅) = 0` and is defined on a dense
//! ground set `0..ground_size`. Elements a function does not mention simply
//! contribute nothing.

use std::collections::BTreeMap;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;

use crate::error::CoreError;
use crate::rational::Rational;
use crate::set::{ElementId, ElementSet};

/// Anything with a value oracle over `0..ground_size`.
pub trait SetFunction {
    fn ground_size(&self) -> usize;

    /// `f(S)`. Elements at or beyond `ground_size` are ignored.
    fn eval(&self, s: &ElementSet) -> Rational;

    /// `f(𝒩)`.
    fn total(&self) -> Rational {
        self.eval(&ElementSet::full(self.ground_size()))
    }

    /// Whether `S` is a feasible cover, i.e. `f(S) = f(𝒩)`.
    fn covers(&self, s: &ElementSet) -> bool {
        self.eval(s) == self.total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    Coverage,
    WeightedCoverage,
    GraphicMatroidRank,
    Junta,
    Modular,
    Sum,
    Contraction,
}

#[derive(Debug, Clone)]
enum Repr {
    Coverage {
        /// Dense item indices covered by each element.
        items: Vec<Vec<u32>>,
        item_weights: Option<Vec<Rational>>,
    },
    Modular(Vec<Rational>),
    GraphicRank {
        vertices: usize,
        edges: Vec<Option<(usize, usize)>>,
    },
    Junta {
        support: Vec<ElementId>,
        table: Vec<Rational>,
    },
    Sum(Vec<Arc<SubmodularFunction>>),
    Contraction {
        base: Arc<SubmodularFunction>,
        on: ElementSet,
        base_on: Rational,
    },
}

#[derive(Debug, Clone)]
pub struct SubmodularFunction {
    ground_size: usize,
    repr: Repr,
    total: Rational,
}

impl SubmodularFunction {
    fn build(ground_size: usize, repr: Repr) -> Self {
        let mut f = SubmodularFunction {
            ground_size,
            repr,
            total: Rational::ZERO,
        };
        f.total = f.eval_repr(&ElementSet::full(ground_size));
        f
    }

    /// Unweighted set coverage: element `e` covers the items in `sets[e]`.
    pub fn coverage(ground_size: usize, sets: &[Vec<u64>]) -> Result<Self, CoreError> {
        Self::weighted_coverage(ground_size, sets, &[])
    }

    /// Coverage where item weights default to 1 unless listed in `weights`.
    pub fn weighted_coverage(
        ground_size: usize,
        sets: &[Vec<u64>],
        weights: &[(u64, Rational)],
    ) -> Result<Self, CoreError> {
        if sets.len() > ground_size {
            return Err(CoreError::InvalidFunction(format!(
                "coverage lists {} elements on a ground set of {ground_size}",
                sets.len()
            )));
        }
        let mut weight_of = BTreeMap::new();
        for &(item, w) in weights {
            if w.is_negative() {
                return Err(CoreError::InvalidFunction(format!(
                    "item {item} has negative weight {w}"
                )));
            }
            if let Some(prev) = weight_of.insert(item, w) {
                if prev != w {
                    return Err(CoreError::InvalidFunction(format!(
                        "item {item} has conflicting weights"
                    )));
                }
            }
        }
        let mut index: BTreeMap<u64, u32> = BTreeMap::new();
        let mut items = vec![Vec::new(); ground_size];
        for (e, set) in sets.iter().enumerate() {
            for &item in set {
                let next = index.len() as u32;
                let idx = *index.entry(item).or_insert(next);
                if !items[e].contains(&idx) {
                    items[e].push(idx);
                }
            }
        }
        let weighted = !weights.is_empty();
        let item_weights = weighted.then(|| {
            let mut w = vec![Rational::ONE; index.len()];
            for (item, &idx) in &index {
                if let Some(&v) = weight_of.get(item) {
                    w[idx as usize] = v;
                }
            }
            w
        });
        Ok(Self::build(
            ground_size,
            Repr::Coverage {
                items,
                item_weights,
            },
        ))
    }

    pub fn modular(weights: Vec<Rational>) -> Result<Self, CoreError> {
        if let Some((e, w)) = weights.iter().enumerate().find(|(_, w)| w.is_negative()) {
            return Err(CoreError::InvalidFunction(format!(
                "element {e} has negative weight {w}"
            )));
        }
        Ok(Self::build(weights.len(), Repr::Modular(weights)))
    }

    /// Rank function of the graphic matroid on `vertices` vertices, where
    /// element `e` is the edge `edges[e]` (or a loop-free absent edge if `None`).
    pub fn graphic_rank(
        ground_size: usize,
        vertices: usize,
        edges: Vec<Option<(usize, usize)>>,
    ) -> Result<Self, CoreError> {
        if edges.len() > ground_size {
            return Err(CoreError::InvalidFunction(
                "more edges than elements".into(),
            ));
        }
        for &(u, v) in edges.iter().flatten() {
            if u >= vertices || v >= vertices {
                return Err(CoreError::InvalidFunction(format!(
                    "edge ({u},{v}) has an unknown endpoint"
                )));
            }
        }
        Ok(Self::build(
            ground_size,
            Repr::GraphicRank { vertices, edges },
        ))
    }

    /// A function of `S ∩ support` given by its full truth table; bit `i` of
    /// the table index stands for `support[i]`. Shifted so `f(∅) = 0`.
    pub fn junta(
        ground_size: usize,
        support: Vec<ElementId>,
        table: Vec<Rational>,
    ) -> Result<Self, CoreError> {
        if support.len() > 20 {
            return Err(CoreError::InvalidFunction(
                "junta support larger than 20".into(),
            ));
        }
        if table.len() != 1 << support.len() {
            return Err(CoreError::InvalidFunction(format!(
                "junta over {} elements needs a table of {} entries, got {}",
                support.len(),
                1usize << support.len(),
                table.len()
            )));
        }
        let mut seen = ElementSet::new();
        for &e in &support {
            if e >= ground_size {
                return Err(CoreError::UnknownElement {
                    element: e,
                    ground_size,
                });
            }
            if !seen.insert(e) {
                return Err(CoreError::InvalidFunction(format!(
                    "element {e} repeated in junta support"
                )));
            }
        }
        let base = table[0];
        let table = table.into_iter().map(|v| v - base).collect();
        Ok(Self::build(ground_size, Repr::Junta { support, table }))
    }

    /// `g(S) = 1[S ∩ support ≠ ∅]`, the hitting-set constraint for one hyperedge.
    pub fn indicator(ground_size: usize, support: Vec<ElementId>) -> Result<Self, CoreError> {
        let table = (0..1usize << support.len())
            .map(|m| {
                if m == 0 {
                    Rational::ZERO
                } else {
                    Rational::ONE
                }
            })
            .collect();
        Self::junta(ground_size, support, table)
    }

    pub fn sum(ground_size: usize, parts: Vec<Arc<SubmodularFunction>>) -> Result<Self, CoreError> {
        if let Some(p) = parts.iter().find(|p| p.ground_size != ground_size) {
            return Err(CoreError::GroundSizeMismatch {
                expected: ground_size,
                found: p.ground_size,
            });
        }
        Ok(Self::build(ground_size, Repr::Sum(parts)))
    }

    /// The contraction `f_T(S) = f(S ∪ T) − f(T)`.
    pub fn contraction(base: Arc<SubmodularFunction>, on: ElementSet) -> Result<Self, CoreError> {
        base.check(&on)?;
        let base_on = base.eval(&on);
        let n = base.ground_size;
        Ok(Self::build(n, Repr::Contraction { base, on, base_on }))
    }

    pub fn kind(&self) -> FunctionKind {
        match &self.repr {
            Repr::Coverage {
                item_weights: None, ..
            } => FunctionKind::Coverage,
            Repr::Coverage {
                item_weights: Some(_),
                ..
            } => FunctionKind::WeightedCoverage,
            Repr::Modular(_) => FunctionKind::Modular,
            Repr::GraphicRank { .. } => FunctionKind::GraphicMatroidRank,
            Repr::Junta { .. } => FunctionKind::Junta,
            Repr::Sum(_) => FunctionKind::Sum,
            Repr::Contraction { .. } => FunctionKind::Contraction,
        }
    }

    /// Explicit influencing elements `V_g`, for junta functions only.
    pub fn junta_support(&self) -> Option<&[ElementId]> {
        match &self.repr {
            Repr::Junta { support, .. } => Some(support),
            _ => None,
        }
    }

    pub fn junta_arity(&self) -> Option<usize> {
        self.junta_support().map(<[_]>::len)
    }

    /// Elements with nonzero singleton value.
    pub fn influencing_elements(&self) -> ElementSet {
        (0..self.ground_size)
            .filter(|&e| !self.eval(&ElementSet::singleton(e)).is_zero())
            .collect()
    }

    fn check(&self, s: &ElementSet) -> Result<(), CoreError> {
        match s.max_element() {
            Some(e) if e >= self.ground_size => Err(CoreError::UnknownElement {
                element: e,
                ground_size: self.ground_size,
            }),
            _ => Ok(()),
        }
    }

    /// Checked `f(S)`.
    pub fn value(&self, s: &ElementSet) -> Result<Rational, CoreError> {
        self.check(s)?;
        Ok(self.eval(s))
    }

    /// `f(e | T) = f(T ∪ {e}) − f(T)`.
    pub fn marginal(&self, e: ElementId, t: &ElementSet) -> Result<Rational, CoreError> {
        self.check(&ElementSet::singleton(e))?;
        self.check(t)?;
        Ok(self.eval(&t.with(e)) - self.eval(t))
    }

    /// Conditional mutual coverage `I_f(A; B | C) = f_C(A) + f_C(B) − f_C(A ∪ B)`.
    pub fn mutual_coverage(
        &self,
        a: &ElementSet,
        b: &ElementSet,
        c: &ElementSet,
    ) -> Result<Rational, CoreError> {
        self.check(a)?;
        self.check(b)?;
        self.check(c)?;
        Ok(mutual_coverage_unchecked(self, a, b, c))
    }

    fn eval_repr(&self, s: &ElementSet) -> Rational {
        match &self.repr {
            Repr::Coverage {
                items,
                item_weights,
            } => {
                let mut covered = ElementSet::new();
                for e in s.iter().take_while(|&e| e < items.len()) {
                    for &i in &items[e] {
                        covered.insert(i as usize);
                    }
                }
                match item_weights {
                    None => Rational::from(covered.len()),
                    Some(w) => covered.iter().map(|i| w[i]).sum(),
                }
            }
            Repr::Modular(w) => s.iter().take_while(|&e| e < w.len()).map(|e| w[e]).sum(),
            Repr::GraphicRank { vertices, edges } => {
                let mut uf = UnionFind::<usize>::new(*vertices);
                let mut rank = 0usize;
                for e in s.iter().take_while(|&e| e < edges.len()) {
                    if let Some((u, v)) = edges[e] {
                        if uf.union(u, v) {
                            rank += 1;
                        }
                    }
                }
                Rational::from(rank)
            }
            Repr::Junta { support, table } => {
                let mask = support
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| s.contains(e))
                    .fold(0usize, |m, (i, _)| m | 1 << i);
                table[mask]
            }
            Repr::Sum(parts) => parts.iter().map(|p| p.eval(s)).sum(),
            Repr::Contraction { base, on, base_on } => base.eval(&s.union(on)) - *base_on,
        }
    }
}

impl SetFunction for SubmodularFunction {
    fn ground_size(&self) -> usize {
        self.ground_size
    }

    fn eval(&self, s: &ElementSet) -> Rational {
        self.eval_repr(s)
    }

    fn total(&self) -> Rational {
        self.total
    }

    fn covers(&self, s: &ElementSet) -> bool {
        match &self.repr {
            Repr::Sum(parts) => parts.iter().all(|p| p.covers(s)),
            _ => self.eval(s) == self.total,
        }
    }
}

/// `I_f(A; B | C)` without ground-set checks.
pub fn mutual_coverage_unchecked<F: SetFunction + ?Sized>(
    f: &F,
    a: &ElementSet,
    b: &ElementSet,
    c: &ElementSet,
) -> Rational {
    let ac = a.union(c);
    let bc = b.union(c);
    let abc = ac.union(b);
    f.eval(&ac) + f.eval(&bc) - f.eval(&abc) - f.eval(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[usize]) -> ElementSet {
        xs.iter().collect()
    }

    fn two_sets() -> SubmodularFunction {
        // a = {1,2}, b = {2,3}
        SubmodularFunction::coverage(2, &[vec![1, 2], vec![2, 3]]).unwrap()
    }

    #[test]
    fn coverage_value_and_marginal() {
        let f = two_sets();
        assert_eq!(f.value(&set(&[0, 1])).unwrap(), 3);
        assert_eq!(f.value(&ElementSet::new()).unwrap(), 0);
        assert_eq!(f.marginal(1, &set(&[0])).unwrap(), 1);
        assert_eq!(
            f.marginal(1, &ElementSet::new()).unwrap(),
            f.value(&set(&[1])).unwrap()
        );
        assert_eq!(
            f.mutual_coverage(&set(&[0]), &set(&[1]), &ElementSet::new())
                .unwrap(),
            1
        );
    }

    #[test]
    fn unknown_element_is_rejected() {
        let f = two_sets();
        assert!(matches!(
            f.value(&set(&[5])),
            Err(CoreError::UnknownElement { element: 5, .. })
        ));
        assert!(f.marginal(9, &ElementSet::new()).is_err());
    }

    #[test]
    fn triangle_rank_is_two() {
        let f =
            SubmodularFunction::graphic_rank(3, 3, vec![Some((0, 1)), Some((1, 2)), Some((0, 2))])
                .unwrap();
        assert_eq!(f.value(&set(&[0, 1, 2])).unwrap(), 2);
        // the closing edge is spanned by the other two
        assert_eq!(f.marginal(2, &set(&[0, 1])).unwrap(), 0);
    }

    #[test]
    fn disjoint_influence_has_zero_mutual_coverage() {
        let f = SubmodularFunction::coverage(3, &[vec![1], vec![2], vec![1, 3]]).unwrap();
        assert_eq!(
            f.mutual_coverage(&set(&[0]), &set(&[1]), &ElementSet::new())
                .unwrap(),
            0
        );
    }

    #[test]
    fn junta_is_normalized() {
        let f =
            SubmodularFunction::junta(3, vec![2], vec![Rational::from(5i64), Rational::from(7i64)])
                .unwrap();
        assert_eq!(f.eval(&ElementSet::new()), 0);
        assert_eq!(f.eval(&set(&[2])), 2);
        assert!(SubmodularFunction::junta(3, vec![1, 1], vec![Rational::ZERO; 4]).is_err());
        assert!(SubmodularFunction::junta(3, vec![1], vec![Rational::ZERO; 4]).is_err());
    }

    #[test]
    fn weighted_coverage_rejects_conflicts() {
        let w = [(1u64, Rational::from(2i64)), (1u64, Rational::from(3i64))];
        assert!(SubmodularFunction::weighted_coverage(2, &[vec![1]], &w).is_err());
        let w = [(1u64, Rational::new(5, 2))];
        let f = SubmodularFunction::weighted_coverage(2, &[vec![1, 2], vec![2]], &w).unwrap();
        assert_eq!(f.kind(), FunctionKind::WeightedCoverage);
        assert_eq!(f.total(), Rational::new(7, 2));
    }

    fn arb_coverage() -> impl Strategy<Value = SubmodularFunction> {
        prop::collection::vec(prop::collection::vec(0u64..8, 0..4), 6)
            .prop_map(|sets| SubmodularFunction::coverage(6, &sets).unwrap())
    }

    fn arb_rank() -> impl Strategy<Value = SubmodularFunction> {
        prop::collection::vec((0usize..5, 0usize..5), 6).prop_map(|edges| {
            SubmodularFunction::graphic_rank(6, 5, edges.into_iter().map(Some).collect()).unwrap()
        })
    }

    fn arb_function() -> impl Strategy<Value = SubmodularFunction> {
        prop_oneof![
            arb_coverage(),
            arb_rank(),
            prop::collection::vec(0i64..5, 6).prop_map(|w| SubmodularFunction::modular(
                w.into_iter().map(Rational::from).collect()
            )
            .unwrap()),
            prop::collection::vec(0usize..6, 1..4).prop_map(|mut v| {
                v.sort();
                v.dedup();
                SubmodularFunction::indicator(6, v).unwrap()
            }),
        ]
    }

    fn arb_set() -> impl Strategy<Value = ElementSet> {
        (0u64..64).prop_map(ElementSet::from_mask)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn monotone_on_random_pairs(f in arb_function(), a in arb_set(), b in arb_set()) {
            let small = a.intersection(&b);
            prop_assert!(f.eval(&small) <= f.eval(&a));
        }

        #[test]
        fn mutual_coverage_is_symmetric(f in arb_function(), a in arb_set(), b in arb_set(), c in arb_set()) {
            prop_assert_eq!(f.mutual_coverage(&a, &b, &c).unwrap(), f.mutual_coverage(&b, &a, &c).unwrap());
        }

        #[test]
        fn chain_rule(f in arb_function(), a in arb_set(), b1 in arb_set(), b2 in arb_set(), c in arb_set()) {
            let lhs = f.mutual_coverage(&a, &b1.union(&b2), &c).unwrap();
            let rhs = f.mutual_coverage(&a, &b1, &c).unwrap() + f.mutual_coverage(&a, &b2, &c.union(&b1)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn sum_is_pointwise(f in arb_function(), g in arb_function(), s in arb_set()) {
            let h = SubmodularFunction::sum(6, vec![Arc::new(f.clone()), Arc::new(g.clone())]).unwrap();
            prop_assert_eq!(h.eval(&s), f.eval(&s) + g.eval(&s));
            prop_assert_eq!(h.covers(&s), h.eval(&s) == h.total());
        }

        #[test]
        fn contraction_definition(f in arb_function(), t in arb_set(), s in arb_set()) {
            let ft = SubmodularFunction::contraction(Arc::new(f.clone()), t.clone()).unwrap();
            prop_assert_eq!(ft.eval(&s), f.eval(&s.union(&t)) - f.eval(&t));
        }
    }
}
