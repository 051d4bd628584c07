//! The permutation local search: an ordering of the ground set, the marginal
//! value each element receives from its position, and the swap and γ-move
//! operations that keep the ordering approximately greedy.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::set::{ElementId, ElementSet};
use crate::SetFunction;

/// How an element's value `mff_π` is derived from its position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MffMode {
    /// `f(π_i | π_{1:i-1})`.
    UnitCost,
    /// `f(π_i | π_{1:i-1}) / c(π_i)`.
    CostRatio,
    /// `Σ_j I(π_i; ψ_j | π_{1:i-1} ∪ ψ_{1:j-1}) / (c(π_i) c(ψ_j))` with `ψ`
    /// the elements in increasing cost order, ties by id.
    MutualAffinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaMove {
    pub element: ElementId,
    pub from: usize,
    pub to: usize,
    pub new_mff: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    /// The element at `position` swapped with its predecessor.
    Swap {
        position: usize,
    },
    Gamma(GammaMove),
}

/// A move together with the solution changes it caused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveOutcome {
    pub mv: Move,
    pub joined: Vec<ElementId>,
    pub left: Vec<ElementId>,
}

impl MoveOutcome {
    pub fn recourse(&self) -> usize {
        self.joined.len() + self.left.len()
    }
}

/// Per-position values in permutation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub order: Vec<ElementId>,
    pub mff: Vec<Rational>,
    pub marginal: Vec<Rational>,
    pub cost: Vec<Rational>,
}

impl Snapshot {
    pub fn solution(&self) -> ElementSet {
        self.order
            .iter()
            .zip(&self.mff)
            .filter(|(_, m)| m.is_positive())
            .map(|(&e, _)| e)
            .collect()
    }
}

/// Move limits for one call to [`PermutationEngine::stabilize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveCap {
    pub gamma_moves: usize,
    pub swaps: usize,
}

impl MoveCap {
    pub const UNLIMITED: MoveCap = MoveCap {
        gamma_moves: usize::MAX,
        swaps: usize::MAX,
    };
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StabilizeLog {
    pub swaps: usize,
    pub gamma_moves: usize,
    pub joined: usize,
    pub left: usize,
}

#[derive(Debug, Clone)]
pub struct PermutationEngine {
    mode: MffMode,
    costs: Vec<Rational>,
    pi: Vec<ElementId>,
    pos: Vec<Option<usize>>,
    mff: Vec<Rational>,
    marginal: Vec<Rational>,
    psi: Vec<ElementId>,
    psi_rank: Vec<usize>,
    min_positive_marginal: Option<Rational>,
}

impl PermutationEngine {
    /// An engine over every element of `ground`, initially in id order with
    /// all values zero. Call [`rebuild`](Self::rebuild) before use.
    pub fn new(mode: MffMode, ground: &GroundSet) -> Self {
        Self::with_order(mode, ground, (0..ground.len()).collect())
            .expect("identity order is valid")
    }

    pub fn with_order(
        mode: MffMode,
        ground: &GroundSet,
        order: Vec<ElementId>,
    ) -> Result<Self, EngineError> {
        let mut engine = PermutationEngine {
            mode,
            costs: ground.costs().to_vec(),
            pi: Vec::new(),
            pos: vec![None; ground.len()],
            mff: vec![Rational::ZERO; ground.len()],
            marginal: vec![Rational::ZERO; ground.len()],
            psi: Vec::new(),
            psi_rank: vec![usize::MAX; ground.len()],
            min_positive_marginal: None,
        };
        for e in order {
            if e >= ground.len() {
                return Err(EngineError::MissingElement(e));
            }
            if engine.pos[e].is_some() {
                return Err(EngineError::DuplicateElement(e));
            }
            engine.pos[e] = Some(engine.pi.len());
            engine.pi.push(e);
        }
        engine.rebuild_psi();
        Ok(engine)
    }

    pub fn mode(&self) -> MffMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn order(&self) -> &[ElementId] {
        &self.pi
    }

    pub fn position(&self, e: ElementId) -> Option<usize> {
        self.pos.get(e).copied().flatten()
    }

    pub fn cost(&self, e: ElementId) -> Rational {
        self.costs[e]
    }

    pub fn mff(&self, e: ElementId) -> Rational {
        self.mff[e]
    }

    pub fn mff_at(&self, i: usize) -> Rational {
        self.mff[self.pi[i]]
    }

    /// `f(e | elements before e)`, cached.
    pub fn marginal(&self, e: ElementId) -> Rational {
        self.marginal[e]
    }

    /// Smallest positive marginal value the engine has computed so far.
    pub fn min_positive_marginal(&self) -> Option<Rational> {
        self.min_positive_marginal
    }

    pub fn psi(&self) -> &[ElementId] {
        &self.psi
    }

    /// Elements with positive value.
    pub fn solution(&self) -> ElementSet {
        self.pi
            .iter()
            .copied()
            .filter(|&e| self.mff[e].is_positive())
            .collect()
    }

    pub fn in_solution(&self, e: ElementId) -> bool {
        self.mff[e].is_positive()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            order: self.pi.clone(),
            mff: self.pi.iter().map(|&e| self.mff[e]).collect(),
            marginal: self.pi.iter().map(|&e| self.marginal[e]).collect(),
            cost: self.pi.iter().map(|&e| self.costs[e]).collect(),
        }
    }

    fn rebuild_psi(&mut self) {
        let mut psi = self.pi.clone();
        psi.sort_by(|&a, &b| self.costs[a].cmp(&self.costs[b]).then(a.cmp(&b)));
        for r in self.psi_rank.iter_mut() {
            *r = usize::MAX;
        }
        for (j, &e) in psi.iter().enumerate() {
            self.psi_rank[e] = j;
        }
        self.psi = psi;
    }

    fn prefix(&self, i: usize) -> ElementSet {
        self.pi[..i].iter().collect()
    }

    /// `(marginal, mff)` of `u` if it sat directly after the elements of `prefix`.
    pub fn value_after<F: SetFunction + ?Sized>(
        &self,
        f: &F,
        u: ElementId,
        prefix: &ElementSet,
    ) -> (Rational, Rational) {
        let base = f.eval(prefix);
        let marginal = f.eval(&prefix.with(u)) - base;
        let mff = match self.mode {
            MffMode::UnitCost => marginal,
            MffMode::CostRatio => marginal / self.costs[u],
            MffMode::MutualAffinity => {
                if marginal.is_zero() {
                    Rational::ZERO
                } else {
                    self.affinity_row(f, u, prefix)
                        .into_iter()
                        .map(|(w, a)| a / (self.costs[u] * self.costs[w]))
                        .sum()
                }
            }
        };
        (marginal, mff)
    }

    /// Nonzero affinities `I(u; ψ_j | prefix ∪ ψ_{1:j-1})`, keyed by `ψ_j`.
    pub fn affinity_row<F: SetFunction + ?Sized>(
        &self,
        f: &F,
        u: ElementId,
        prefix: &ElementSet,
    ) -> Vec<(ElementId, Rational)> {
        let mut row = Vec::new();
        let mut cond = prefix.clone();
        let mut f_cond = f.eval(&cond);
        let last = self.psi_rank[u];
        for &w in &self.psi[..=last] {
            if !prefix.contains(w) {
                let with_u = cond.with(u);
                let a = if w == u {
                    f.eval(&with_u) - f_cond
                } else {
                    f.eval(&with_u) + f.eval(&cond.with(w)) - f.eval(&with_u.with(w)) - f_cond
                };
                if !a.is_zero() {
                    row.push((w, a));
                }
                cond.insert(w);
                f_cond = f.eval(&cond);
            }
        }
        row
    }

    fn note_marginal(&mut self, m: Rational) {
        if m.is_positive() && self.min_positive_marginal.is_none_or(|b| m < b) {
            self.min_positive_marginal = Some(m);
        }
    }

    fn recompute_range<F: SetFunction + ?Sized>(&mut self, f: &F, lo: usize, hi: usize) {
        let mut prefix = self.prefix(lo);
        for i in lo..=hi.min(self.pi.len().saturating_sub(1)) {
            let e = self.pi[i];
            let (m, v) = self.value_after(f, e, &prefix);
            self.note_marginal(m);
            self.marginal[e] = m;
            self.mff[e] = v;
            prefix.insert(e);
        }
    }

    /// Recomputes every cached value after `f` changed. Returns the elements
    /// that joined and left the solution.
    pub fn rebuild<F: SetFunction + ?Sized>(&mut self, f: &F) -> (Vec<ElementId>, Vec<ElementId>) {
        let before = self.solution();
        if !self.pi.is_empty() {
            self.recompute_range(f, 0, self.pi.len() - 1);
        }
        let after = self.solution();
        (
            after.difference(&before).iter().collect(),
            before.difference(&after).iter().collect(),
        )
    }

    /// First position `i` (from the head) with `mff(π_i) > mff(π_{i-1})`.
    pub fn find_swap(&self) -> Option<usize> {
        (1..self.pi.len()).find(|&i| self.mff_at(i) > self.mff_at(i - 1))
    }

    pub fn apply_swap<F: SetFunction + ?Sized>(
        &mut self,
        f: &F,
        i: usize,
    ) -> Result<MoveOutcome, EngineError> {
        if i == 0 || i >= self.pi.len() || self.mff_at(i) <= self.mff_at(i - 1) {
            return Err(EngineError::IllegalSwap { position: i });
        }
        let touched = [self.pi[i - 1], self.pi[i]];
        let was: Vec<bool> = touched.iter().map(|&e| self.in_solution(e)).collect();
        self.pi.swap(i - 1, i);
        self.pos[self.pi[i - 1]] = Some(i - 1);
        self.pos[self.pi[i]] = Some(i);
        self.recompute_range(f, i - 1, i);
        Ok(self.outcome(Move::Swap { position: i }, &touched, &was))
    }

    fn outcome(&self, mv: Move, touched: &[ElementId], was: &[bool]) -> MoveOutcome {
        let mut joined = Vec::new();
        let mut left = Vec::new();
        for (&e, &w) in touched.iter().zip(was) {
            match (w, self.in_solution(e)) {
                (false, true) => joined.push(e),
                (true, false) => left.push(e),
                _ => {}
            }
        }
        MoveOutcome { mv, joined, left }
    }

    /// First legal γ-move, scanning movers from the tail and targets from the head.
    pub fn find_gamma_move<F: SetFunction + ?Sized>(
        &mut self,
        f: &F,
        gamma: Rational,
    ) -> Option<GammaMove> {
        let n = self.pi.len();
        for q in (1..n).rev() {
            let u = self.pi[q];
            // threshold[p] = γ · max mff over positions p..q-1
            let mut threshold = vec![Rational::ZERO; q];
            let mut running = Rational::ZERO;
            for p in (0..q).rev() {
                running = running.max(self.mff_at(p));
                threshold[p] = gamma * running;
            }
            let upper = self.singleton_bound(f, u);
            let mut prefix = ElementSet::new();
            for p in 0..q {
                if threshold[p] <= upper {
                    let (m, v) = self.value_after(f, u, &prefix);
                    self.note_marginal(m);
                    if v.is_positive() && v >= threshold[p] {
                        return Some(GammaMove {
                            element: u,
                            from: q,
                            to: p,
                            new_mff: v,
                        });
                    }
                }
                prefix.insert(self.pi[p]);
            }
        }
        None
    }

    /// An upper bound on `mff` of `u` at any position, valid for submodular `f`.
    fn singleton_bound<F: SetFunction + ?Sized>(&self, f: &F, u: ElementId) -> Rational {
        let single = f.eval(&ElementSet::singleton(u));
        match self.mode {
            MffMode::UnitCost => single,
            MffMode::CostRatio => single / self.costs[u],
            // affinities sum to the marginal and every partner costs at least cmin
            MffMode::MutualAffinity => {
                let cheapest = self.psi.first().map_or(Rational::ONE, |&w| self.costs[w]);
                single / (self.costs[u] * cheapest)
            }
        }
    }

    pub fn apply_gamma_move<F: SetFunction + ?Sized>(
        &mut self,
        f: &F,
        mv: GammaMove,
        gamma: Rational,
    ) -> Result<MoveOutcome, EngineError> {
        let illegal = EngineError::IllegalMove {
            element: mv.element,
            from: mv.from,
            to: mv.to,
        };
        if mv.to >= mv.from || mv.from >= self.pi.len() || self.pi[mv.from] != mv.element {
            return Err(illegal);
        }
        let (_, v) = self.value_after(f, mv.element, &self.prefix(mv.to));
        let jumped_max = (mv.to..mv.from)
            .map(|i| self.mff_at(i))
            .max()
            .unwrap_or(Rational::ZERO);
        if !v.is_positive() || v < gamma * jumped_max {
            return Err(illegal);
        }
        let touched: Vec<ElementId> = self.pi[mv.to..=mv.from].to_vec();
        let was: Vec<bool> = touched.iter().map(|&e| self.in_solution(e)).collect();
        let u = self.pi.remove(mv.from);
        self.pi.insert(mv.to, u);
        for i in mv.to..=mv.from {
            self.pos[self.pi[i]] = Some(i);
        }
        self.recompute_range(f, mv.to, mv.from);
        Ok(self.outcome(Move::Gamma(GammaMove { new_mff: v, ..mv }), &touched, &was))
    }

    /// One local move: a swap if any, otherwise a γ-move if any.
    pub fn step<F: SetFunction + ?Sized>(
        &mut self,
        f: &F,
        gamma: Rational,
    ) -> Result<Option<MoveOutcome>, EngineError> {
        if let Some(i) = self.find_swap() {
            return self.apply_swap(f, i).map(Some);
        }
        match self.find_gamma_move(f, gamma) {
            Some(mv) => self.apply_gamma_move(f, mv, gamma).map(Some),
            None => Ok(None),
        }
    }

    /// Applies moves until none is legal. `observe` sees each move with the
    /// states before and after it.
    pub fn stabilize<F, O>(
        &mut self,
        f: &F,
        gamma: Rational,
        cap: MoveCap,
        mut observe: O,
    ) -> Result<StabilizeLog, EngineError>
    where
        F: SetFunction + ?Sized,
        O: FnMut(&MoveOutcome, &Snapshot, &Snapshot),
    {
        let mut log = StabilizeLog::default();
        loop {
            let before = self.snapshot();
            let Some(out) = self.step(f, gamma)? else {
                return Ok(log);
            };
            match out.mv {
                Move::Swap { .. } => log.swaps += 1,
                Move::Gamma(_) => log.gamma_moves += 1,
            }
            log.joined += out.joined.len();
            log.left += out.left.len();
            observe(&out, &before, &self.snapshot());
            let swap_cap = cap.swaps.saturating_mul(log.gamma_moves + 1);
            if log.gamma_moves > cap.gamma_moves || log.swaps > swap_cap {
                return Err(EngineError::NonTermination {
                    moves: log.gamma_moves + log.swaps,
                    cap: cap.gamma_moves,
                    dump: self.dump(),
                });
            }
        }
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        for &e in &self.pi {
            let _ = write!(s, "{e}:{} ", self.mff[e]);
        }
        s.trim_end().to_string()
    }

    /// Positions whose cached values differ from a from-scratch recomputation.
    pub fn audit<F: SetFunction + ?Sized>(&self, f: &F) -> Vec<usize> {
        let mut bad = Vec::new();
        let mut prefix = ElementSet::new();
        for (i, &e) in self.pi.iter().enumerate() {
            let (m, v) = self.value_after(f, e, &prefix);
            if m != self.marginal[e] || v != self.mff[e] {
                bad.push(i);
            }
            prefix.insert(e);
        }
        bad
    }

    /// Appends a new element at the tail with value zero. Call
    /// [`rebuild`](Self::rebuild) afterwards.
    pub fn push_element(&mut self, e: ElementId, cost: Rational) -> Result<(), EngineError> {
        self.place_element(e, cost, self.pi.len())
    }

    /// Inserts a new element at position `at`.
    pub fn place_element(
        &mut self,
        e: ElementId,
        cost: Rational,
        at: usize,
    ) -> Result<(), EngineError> {
        if self.position(e).is_some() {
            return Err(EngineError::DuplicateElement(e));
        }
        assert!(cost.is_positive(), "element cost must be positive");
        if e >= self.costs.len() {
            self.costs.resize(e + 1, Rational::ONE);
            self.pos.resize(e + 1, None);
            self.mff.resize(e + 1, Rational::ZERO);
            self.marginal.resize(e + 1, Rational::ZERO);
            self.psi_rank.resize(e + 1, usize::MAX);
        }
        self.costs[e] = cost;
        self.mff[e] = Rational::ZERO;
        self.marginal[e] = Rational::ZERO;
        let at = at.min(self.pi.len());
        self.pi.insert(at, e);
        for i in at..self.pi.len() {
            self.pos[self.pi[i]] = Some(i);
        }
        self.rebuild_psi();
        Ok(())
    }

    /// Removes an element; later positions shift up.
    pub fn remove_element(&mut self, e: ElementId) -> Result<usize, EngineError> {
        let at = self.position(e).ok_or(EngineError::MissingElement(e))?;
        self.pi.remove(at);
        self.pos[e] = None;
        self.mff[e] = Rational::ZERO;
        self.marginal[e] = Rational::ZERO;
        for i in at..self.pi.len() {
            self.pos[self.pi[i]] = Some(i);
        }
        self.rebuild_psi();
        Ok(at)
    }

    /// Moves an existing element to position `to` without any legality check.
    pub fn relocate(&mut self, e: ElementId, to: usize) -> Result<(), EngineError> {
        let from = self.position(e).ok_or(EngineError::MissingElement(e))?;
        self.pi.remove(from);
        let to = to.min(self.pi.len());
        self.pi.insert(to, e);
        for i in from.min(to)..=from.max(to) {
            self.pos[self.pi[i]] = Some(i);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::SubmodularFunction;

    fn r(x: i64) -> Rational {
        Rational::from(x)
    }

    #[test]
    fn single_edge_goes_to_first_hitter() {
        let g = SubmodularFunction::indicator(3, vec![0, 1]).unwrap();
        let mut eng = PermutationEngine::new(MffMode::UnitCost, &GroundSet::unit(3));
        eng.rebuild(&g);
        assert_eq!(eng.snapshot().mff, vec![r(1), r(0), r(0)]);
        assert_eq!(eng.solution(), ElementSet::singleton(0));
    }

    #[test]
    fn empty_function_has_zero_values() {
        let g = SubmodularFunction::modular(vec![Rational::ZERO; 3]).unwrap();
        let mut eng = PermutationEngine::new(MffMode::CostRatio, &GroundSet::unit(3));
        eng.rebuild(&g);
        assert!(eng.solution().is_empty());
        assert_eq!(eng.step(&g, r(2)).unwrap(), None);
    }

    #[test]
    fn swap_exchanges_shared_item() {
        // a = {1,2}, b = {2,3,4}; order (a, b) gives (2, 2), so give b one more item
        let f = SubmodularFunction::coverage(2, &[vec![1, 2], vec![2, 3, 4]]).unwrap();
        let mut eng = PermutationEngine::new(MffMode::UnitCost, &GroundSet::unit(2));
        eng.rebuild(&f);
        assert_eq!(eng.snapshot().mff, vec![r(2), r(2)]);
        assert_eq!(eng.find_swap(), None);

        let f = SubmodularFunction::coverage(2, &[vec![1, 2], vec![2, 3, 4, 5]]).unwrap();
        eng.rebuild(&f);
        assert_eq!(eng.find_swap(), Some(1));
        let out = eng.apply_swap(&f, 1).unwrap();
        assert_eq!(out.recourse(), 0);
        assert_eq!(eng.order(), &[1, 0]);
        assert_eq!(eng.snapshot().mff, vec![r(4), r(1)]);
        assert!(eng.audit(&f).is_empty());
        assert_eq!(
            eng.apply_swap(&f, 1),
            Err(EngineError::IllegalSwap { position: 1 })
        );
    }

    #[test]
    fn gamma_move_threshold() {
        // Jumped elements each hold one item; the tail element covers all three.
        let f =
            SubmodularFunction::coverage(4, &[vec![1], vec![2], vec![3], vec![1, 2, 3]]).unwrap();
        let mut eng = PermutationEngine::new(MffMode::UnitCost, &GroundSet::unit(4));
        eng.rebuild(&f);
        let mv = eng.find_gamma_move(&f, r(2)).unwrap();
        assert_eq!(
            mv,
            GammaMove {
                element: 3,
                from: 3,
                to: 0,
                new_mff: r(3)
            }
        );

        let e2 = Rational::ceil_from_f64(std::f64::consts::E.powi(2), 12);
        assert_eq!(eng.find_gamma_move(&f, e2), None);

        let out = eng.apply_gamma_move(&f, mv, r(2)).unwrap();
        assert_eq!(out.joined, vec![3]);
        let mut left = out.left.clone();
        left.sort();
        assert_eq!(left, vec![0, 1, 2]);
        assert!(eng.audit(&f).is_empty());
        assert_eq!(eng.solution(), ElementSet::singleton(3));
    }

    #[test]
    fn illegal_gamma_move_is_rejected() {
        let f = SubmodularFunction::coverage(2, &[vec![1], vec![1, 2]]).unwrap();
        let mut eng = PermutationEngine::new(MffMode::UnitCost, &GroundSet::unit(2));
        eng.rebuild(&f);
        let mv = GammaMove {
            element: 1,
            from: 1,
            to: 0,
            new_mff: r(2),
        };
        assert!(matches!(
            eng.apply_gamma_move(&f, mv, r(3)),
            Err(EngineError::IllegalMove { .. })
        ));
    }

    #[test]
    fn affinity_mode_prefers_cheap_partner() {
        let ground = GroundSet::new(vec![r(1), r(10)]).unwrap();
        let f = SubmodularFunction::coverage(2, &[vec![1], vec![1]]).unwrap();
        let mut eng =
            PermutationEngine::with_order(MffMode::MutualAffinity, &ground, vec![1, 0]).unwrap();
        eng.rebuild(&f);
        assert_eq!(eng.psi(), &[0, 1]);
        // the expensive element's coverage is shared with the cheap one: 1/(10·1)
        assert_eq!(eng.mff(1), Rational::new(1, 10));
        assert_eq!(eng.mff(0), Rational::ZERO);
        eng.stabilize(&f, r(5), MoveCap::UNLIMITED, |_, _, _| {})
            .unwrap();
        assert_eq!(eng.solution(), ElementSet::singleton(0));
        assert_eq!(eng.mff(0), r(1));
    }

    #[test]
    fn element_insertion_and_removal() {
        let mut eng = PermutationEngine::new(MffMode::CostRatio, &GroundSet::unit(2));
        eng.place_element(5, r(2), 1).unwrap();
        assert_eq!(eng.order(), &[0, 5, 1]);
        assert_eq!(
            eng.push_element(5, r(1)),
            Err(EngineError::DuplicateElement(5))
        );
        assert_eq!(eng.remove_element(0).unwrap(), 0);
        assert_eq!(eng.order(), &[5, 1]);
        eng.relocate(1, 0).unwrap();
        assert_eq!(eng.order(), &[1, 5]);
        assert_eq!(eng.position(5), Some(1));
    }

    #[test]
    fn circuit_breaker_trips() {
        let f = SubmodularFunction::coverage(3, &[vec![1], vec![1, 2], vec![1, 2, 3]]).unwrap();
        let mut eng = PermutationEngine::new(MffMode::UnitCost, &GroundSet::unit(3));
        eng.rebuild(&f);
        let cap = MoveCap {
            gamma_moves: 0,
            swaps: 0,
        };
        assert!(matches!(
            eng.stabilize(&f, r(2), cap, |_, _, _| {}),
            Err(EngineError::NonTermination { .. })
        ));
    }
}
