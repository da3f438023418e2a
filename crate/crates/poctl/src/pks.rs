//! Finite possibilistic Kripke structures, lasso paths, and the brute-force
//! possibility-measure oracle that grounds the fixpoint model checker.

use crate::rat::{self, Rat};
use std::collections::BTreeSet;
use thiserror::Error;

/// A finite possibilistic Kripke structure. `p[s][t]` is the transition
/// possibility, `init[s]` the initial possibility, `labels[s]` the atoms
/// holding at state `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pks {
    pub states: Vec<String>,
    pub p: Vec<Vec<Rat>>,
    pub init: Vec<Rat>,
    pub atoms: Vec<String>,
    pub labels: Vec<BTreeSet<String>>,
}

impl Pks {
    pub fn new(states: Vec<String>) -> Pks {
        let n = states.len();
        Pks {
            states,
            p: vec![vec![rat::zero(); n]; n],
            init: vec![rat::zero(); n],
            atoms: Vec::new(),
            labels: vec![BTreeSet::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn set_trans(&mut self, s: usize, t: usize, v: Rat) {
        self.p[s][t] = v;
    }

    pub fn add_label(&mut self, s: usize, atom: &str) {
        if !self.atoms.iter().any(|a| a == atom) {
            self.atoms.push(atom.to_string());
        }
        self.labels[s].insert(atom.to_string());
    }

    pub fn has_atom(&self, s: usize, atom: &str) -> bool {
        self.labels[s].contains(atom)
    }

    /// Row maximum equals 1 for every state, and the initial distribution
    /// (when not all-zero) attains 1.
    pub fn is_normal(&self) -> bool {
        self.states.iter().enumerate().all(|(s, _)| {
            self.p[s].iter().max().map(|m| *m == rat::one()).unwrap_or(false)
        })
    }

    /// Every state has some successor with positive possibility.
    pub fn is_total(&self) -> bool {
        (0..self.len()).all(|s| self.p[s].iter().any(|v| *v > rat::zero()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Row maximum below 1 at this state.
    NotNormal(String),
    /// No positive outgoing transition at this state.
    NotTotal(String),
    /// Initial distribution does not attain 1.
    InitNotNormal,
    /// A transition or initial value outside [0,1].
    ValueOutOfRange(String),
}

/// Checks the PKS invariants; an empty list means the structure is valid.
/// Normality (and initial normality, when some initial value is positive) is
/// only demanded when `require_normal` is set; totality always is.
pub fn validate(m: &Pks, require_normal: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    for s in 0..m.len() {
        for t in 0..m.len() {
            if !rat::in_unit(m.p[s][t]) {
                out.push(Violation::ValueOutOfRange(format!(
                    "trans {} -> {}",
                    m.states[s], m.states[t]
                )));
            }
        }
        if !rat::in_unit(m.init[s]) {
            out.push(Violation::ValueOutOfRange(format!("init {}", m.states[s])));
        }
        let row_max = m.p[s].iter().max().cloned().unwrap_or_else(rat::zero);
        if require_normal && row_max != rat::one() {
            out.push(Violation::NotNormal(m.states[s].clone()));
        }
        if row_max == rat::zero() {
            out.push(Violation::NotTotal(m.states[s].clone()));
        }
    }
    if require_normal {
        let init_max = m.init.iter().max().cloned().unwrap_or_else(rat::zero);
        if init_max != rat::zero() && init_max != rat::one() {
            out.push(Violation::InitNotNormal);
        }
    }
    out
}

/// Adds a trap state to restore normality: every non-normal state gets a
/// possibility-1 edge to the trap, which self-loops with an empty label.
/// Normal inputs are returned unchanged.
pub fn trap_complete(m: &Pks) -> Pks {
    let deficient: Vec<usize> = (0..m.len())
        .filter(|s| m.p[*s].iter().max().map(|mx| *mx != rat::one()).unwrap_or(true))
        .collect();
    if deficient.is_empty() && !m.is_empty() {
        return m.clone();
    }
    let mut out = m.clone();
    let mut trap_name = "trap".to_string();
    while out.states.iter().any(|s| *s == trap_name) {
        trap_name.push('_');
    }
    out.states.push(trap_name);
    let n = out.states.len();
    for row in &mut out.p {
        row.push(rat::zero());
    }
    out.p.push(vec![rat::zero(); n]);
    out.init.push(rat::zero());
    out.labels.push(BTreeSet::new());
    for s in deficient {
        out.p[s][n - 1] = rat::one();
    }
    out.p[n - 1][n - 1] = rat::one();
    out
}

/// A finitely represented infinite path: `prefix . cycle^omega`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<usize>,
    pub cycle: Vec<usize>,
}

impl Lasso {
    pub fn first(&self) -> usize {
        *self.prefix.first().unwrap_or(&self.cycle[0])
    }

    /// State at position `i` of the denoted infinite path.
    pub fn at(&self, i: usize) -> usize {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// Number of positions after which the path repeats.
    pub fn period_start(&self) -> usize {
        self.prefix.len()
    }

    pub fn span(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PksError {
    #[error("lasso steps through a zero-possibility transition at position {0}")]
    InvalidLasso(usize),
    #[error("oracle horizon {horizon} is smaller than the state count {states}")]
    HorizonTooSmall { horizon: usize, states: usize },
}

/// Possibility of the lasso path: the minimum transition possibility along
/// prefix, seam and cycle, optionally min-ed with the initial possibility.
pub fn path_possibility(m: &Pks, lasso: &Lasso, use_initial: bool) -> Result<Rat, PksError> {
    assert!(!lasso.cycle.is_empty(), "lasso cycle must be nonempty");
    let mut val = if use_initial { m.init[lasso.first()] } else { rat::one() };
    let span = lasso.span();
    for i in 0..span {
        let from = lasso.at(i);
        let to = lasso.at(i + 1);
        let step = m.p[from][to];
        if step == rat::zero() {
            return Err(PksError::InvalidLasso(i));
        }
        if step < val {
            val = step;
        }
    }
    Ok(val)
}

/// Path shapes over already-evaluated state sets, as consumed by the oracle
/// and by the fixpoint evaluator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathSets {
    Next(Vec<bool>),
    Until(Vec<bool>, Vec<bool>),
    BoundedUntil(Vec<bool>, Vec<bool>, u32),
    Release(Vec<bool>, Vec<bool>),
    Eventually(Vec<bool>),
    Always(Vec<bool>),
    BoundedAlways(Vec<bool>, u32),
}

/// Whether the lasso path satisfies the shape. Witness positions for
/// until/eventually/release only need to be searched within one period.
pub fn lasso_satisfies(lasso: &Lasso, shape: &PathSets) -> bool {
    let span = lasso.span();
    let inset = |set: &Vec<bool>, i: usize| set[lasso.at(i)];
    match shape {
        PathSets::Next(a) => inset(a, 1),
        PathSets::Until(a, b) => (0..span)
            .any(|k| inset(b, k) && (0..k).all(|i| inset(a, i))),
        PathSets::BoundedUntil(a, b, n) => (0..span)
            .filter(|k| *k as u64 <= *n as u64)
            .any(|k| inset(b, k) && (0..k).all(|i| inset(a, i))),
        PathSets::Release(a, b) => {
            let all_b = (0..span).all(|i| inset(b, i));
            all_b
                || (0..span).any(|k| inset(a, k) && (0..=k).all(|i| inset(b, i)))
        }
        PathSets::Eventually(a) => (0..span).any(|k| inset(a, k)),
        PathSets::Always(a) => (0..span).all(|i| inset(a, i)),
        PathSets::BoundedAlways(a, n) => {
            let limit = std::cmp::min(*n as usize, span - 1);
            (0..=limit).all(|i| inset(a, i))
        }
    }
}

/// Ground-truth possibility of `{ paths from s satisfying the shape }`,
/// computed by enumerating every lasso with prefix length at most `horizon`
/// and cycle length at most `|S|`. The supremum over paths is attained on
/// such a lasso because `P` takes finitely many values.
pub fn event_possibility_oracle(
    m: &Pks,
    s: usize,
    shape: &PathSets,
    horizon: usize,
) -> Result<Rat, PksError> {
    if horizon < m.len() {
        return Err(PksError::HorizonTooSmall { horizon, states: m.len() });
    }
    let n = m.len();
    let mut best = rat::zero();

    // Depth-first over prefixes; for each prefix end, enumerate cycles.
    fn cycles(
        m: &Pks,
        prefix: &mut Vec<usize>,
        cycle: &mut Vec<usize>,
        start: usize,
        shape: &PathSets,
        best: &mut Rat,
    ) {
        let n = m.len();
        let last = *cycle.last().unwrap();
        // close the cycle
        if m.p[last][start] > rat::zero() {
            let lasso = Lasso { prefix: prefix.clone(), cycle: cycle.clone() };
            if lasso_satisfies(&lasso, shape) {
                if let Ok(v) = path_possibility(m, &lasso, false) {
                    if v > *best {
                        *best = v;
                    }
                }
            }
        }
        if cycle.len() == n {
            return;
        }
        for t in 0..n {
            if m.p[last][t] > rat::zero() {
                cycle.push(t);
                cycles(m, prefix, cycle, start, shape, best);
                cycle.pop();
            }
        }
    }

    fn prefixes(
        m: &Pks,
        prefix: &mut Vec<usize>,
        horizon: usize,
        shape: &PathSets,
        best: &mut Rat,
    ) {
        let n = m.len();
        let last = *prefix.last().unwrap();
        // start a cycle at any successor of the prefix end
        for c0 in 0..n {
            if m.p[last][c0] > rat::zero() {
                let mut cycle = vec![c0];
                cycles(m, prefix, &mut cycle, c0, shape, best);
            }
        }
        if prefix.len() < horizon {
            for t in 0..n {
                if m.p[last][t] > rat::zero() {
                    prefix.push(t);
                    prefixes(m, prefix, horizon, shape, best);
                    prefix.pop();
                }
            }
        }
    }

    // lassos with empty prefix: cycle starts at s itself
    {
        let mut empty = Vec::new();
        let mut cycle = vec![s];
        cycles(m, &mut empty, &mut cycle, s, shape, &mut best);
    }
    if n > 0 {
        let mut prefix = vec![s];
        prefixes(m, &mut prefix, horizon, shape, &mut best);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    /// The three-state quotient structure: s -> u at 1/2, s -> t at 1,
    /// u and t self-loop at 1, t is labelled a.
    pub(crate) fn m_prime() -> Pks {
        let mut m = Pks::new(vec!["s".into(), "u".into(), "t".into()]);
        m.set_trans(0, 1, rat(1, 2));
        m.set_trans(0, 2, rat(1, 1));
        m.set_trans(1, 1, rat(1, 1));
        m.set_trans(2, 2, rat(1, 1));
        m.add_label(2, "a");
        m.init[0] = rat(1, 1);
        m
    }

    #[test]
    fn validate_m_prime_is_normal() {
        assert_eq!(validate(&m_prime(), true), vec![]);
    }

    #[test]
    fn validate_reports_violations() {
        let mut m = Pks::new(vec!["s".into()]);
        m.set_trans(0, 0, rat(7, 10));
        assert_eq!(validate(&m, true), vec![Violation::NotNormal("s".into())]);
        let empty_row = Pks::new(vec!["s".into()]);
        let v = validate(&empty_row, true);
        assert!(v.contains(&Violation::NotTotal("s".into())));
    }

    #[test]
    fn trap_completion() {
        let m = m_prime();
        assert_eq!(trap_complete(&m), m);

        let mut bad = Pks::new(vec!["s".into()]);
        bad.set_trans(0, 0, rat(1, 2));
        let fixed = trap_complete(&bad);
        assert_eq!(fixed.len(), 2);
        assert_eq!(fixed.p[0][1], rat(1, 1));
        assert_eq!(fixed.p[1][1], rat(1, 1));
        assert_eq!(fixed.p[1][0], rat(0, 1));
        assert!(fixed.labels[1].is_empty());
        assert!(fixed.is_normal() && fixed.is_total());
        // idempotent
        assert_eq!(trap_complete(&fixed), fixed);
        assert_eq!(validate(&trap_complete(&bad), true), vec![]);
    }

    #[test]
    fn path_possibility_on_m_prime() {
        let m = m_prime();
        let to_t = Lasso { prefix: vec![0], cycle: vec![2] };
        assert_eq!(path_possibility(&m, &to_t, false).unwrap(), rat(1, 1));
        let to_u = Lasso { prefix: vec![0], cycle: vec![1] };
        assert_eq!(path_possibility(&m, &to_u, false).unwrap(), rat(1, 2));
        let self_loop = Lasso { prefix: vec![], cycle: vec![2] };
        assert_eq!(path_possibility(&m, &self_loop, false).unwrap(), rat(1, 1));
        let broken = Lasso { prefix: vec![1], cycle: vec![2] };
        assert_eq!(
            path_possibility(&m, &broken, false),
            Err(PksError::InvalidLasso(0))
        );
    }

    #[test]
    fn oracle_on_m_prime_next() {
        let m = m_prime();
        let not_a = vec![true, true, false];
        let a = vec![false, false, true];
        // only the u branch falsifies next-a; its possibility is 1/2
        assert_eq!(
            event_possibility_oracle(&m, 0, &PathSets::Next(not_a), 3).unwrap(),
            rat(1, 2)
        );
        assert_eq!(
            event_possibility_oracle(&m, 0, &PathSets::Next(a), 3).unwrap(),
            rat(1, 1)
        );
    }

    #[test]
    fn oracle_eventually_true_is_one() {
        let m = m_prime();
        let all = vec![true; 3];
        for s in 0..3 {
            assert_eq!(
                event_possibility_oracle(&m, s, &PathSets::Eventually(all.clone()), 3).unwrap(),
                rat(1, 1)
            );
        }
        let none = vec![false; 3];
        assert_eq!(
            event_possibility_oracle(&m, 0, &PathSets::Eventually(none), 3).unwrap(),
            rat(0, 1)
        );
    }

    #[test]
    fn oracle_horizon_guard_and_stabilization() {
        let m = m_prime();
        let a = vec![false, false, true];
        assert!(matches!(
            event_possibility_oracle(&m, 0, &PathSets::Eventually(a.clone()), 2),
            Err(PksError::HorizonTooSmall { .. })
        ));
        let h1 = event_possibility_oracle(&m, 0, &PathSets::Eventually(a.clone()), 3).unwrap();
        let h2 = event_possibility_oracle(&m, 0, &PathSets::Eventually(a), 6).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn oracle_union_is_max() {
        // possibility measure axiom: Po(E1 ∪ E2) = max(Po(E1), Po(E2)),
        // exercised through next-shapes whose path sets union cleanly.
        let m = m_prime();
        let ea = vec![false, false, true];
        let eb = vec![false, true, false];
        let eab = vec![false, true, true];
        let va = event_possibility_oracle(&m, 0, &PathSets::Next(ea), 3).unwrap();
        let vb = event_possibility_oracle(&m, 0, &PathSets::Next(eb), 3).unwrap();
        let vab = event_possibility_oracle(&m, 0, &PathSets::Next(eab), 3).unwrap();
        assert_eq!(vab, std::cmp::max(va, vb));
    }
}
