//! Exact evaluation of `Po(s |= phi)` and `Ne(s |= phi)` on finite normal
//! PKSs via max-min fixpoints, and the induced satisfaction relation.
//!
//! The fixpoint formulation is a reconstruction: the source of truth for its
//! correctness is the lasso enumeration oracle in [`crate::pks`], which the
//! test suite compares against pointwise with exact rational equality.

use crate::formula::{Bound, Cmp, Formula, Path};
use crate::pks::{PathSets, Pks};
use crate::rat::{self, Rat};
use thiserror::Error;

/// Per-state possibility values. Every entry lies in `{0,1} ∪ range(P)`.
pub type ValueMap = Vec<Rat>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum McError {
    #[error("formula mentions atom `{0}` outside the model's AP")]
    UnknownAtom(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("model is not normal and total; trap-complete it first")]
    InvalidModel,
}

/// Evaluation options. With `unknown_atom_is_false`, atoms outside AP are
/// treated as false everywhere instead of raising `UnknownAtom`.
#[derive(Debug, Clone, Copy, Default)]
pub struct McOptions {
    pub unknown_atom_is_false: bool,
}

fn debug_assert_lattice(m: &Pks, v: &ValueMap) {
    if cfg!(debug_assertions) {
        for x in v {
            let ok = *x == rat::zero()
                || *x == rat::one()
                || m.p.iter().any(|row| row.contains(x));
            debug_assert!(ok, "fixpoint value {} escapes the model's value lattice", x);
        }
    }
}

fn max_min_step(m: &Pks, x: &ValueMap, s: usize) -> Rat {
    let mut best = rat::zero();
    for t in 0..m.len() {
        let v = std::cmp::min(m.p[s][t], x[t]);
        if v > best {
            best = v;
        }
    }
    best
}

fn until_values(m: &Pks, a: &[bool], b: &[bool]) -> ValueMap {
    let n = m.len();
    let mut x: ValueMap = (0..n).map(|s| if b[s] { rat::one() } else { rat::zero() }).collect();
    let mut rounds = 0usize;
    loop {
        let mut changed = false;
        let mut next = x.clone();
        for s in 0..n {
            if b[s] {
                continue;
            }
            if a[s] {
                let v = max_min_step(m, &x, s);
                if v != next[s] {
                    next[s] = v;
                    changed = true;
                }
            }
        }
        x = next;
        rounds += 1;
        if !changed {
            break;
        }
        debug_assert!(rounds <= bound_rounds(m), "until fixpoint failed to stabilize");
    }
    x
}

fn always_values(m: &Pks, a: &[bool]) -> ValueMap {
    let n = m.len();
    let mut x: ValueMap = (0..n).map(|s| if a[s] { rat::one() } else { rat::zero() }).collect();
    let mut rounds = 0usize;
    loop {
        let mut changed = false;
        let mut next = x.clone();
        for s in 0..n {
            if a[s] {
                let v = max_min_step(m, &x, s);
                if v != next[s] {
                    next[s] = v;
                    changed = true;
                }
            }
        }
        x = next;
        rounds += 1;
        if !changed {
            break;
        }
        debug_assert!(rounds <= bound_rounds(m), "always fixpoint failed to stabilize");
    }
    x
}

fn bound_rounds(m: &Pks) -> usize {
    let mut values: Vec<Rat> = m.p.iter().flatten().cloned().collect();
    values.sort();
    values.dedup();
    m.len() * (values.len() + 2) + 2
}

fn complement_set(a: &[bool]) -> Vec<bool> {
    a.iter().map(|x| !x).collect()
}

fn intersect(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

/// `sup { Po(pi) : pi from s satisfies the shape }`, per state.
pub fn po_path(m: &Pks, shape: &PathSets) -> ValueMap {
    let n = m.len();
    let v = match shape {
        PathSets::Next(a) => (0..n)
            .map(|s| {
                (0..n)
                    .filter(|t| a[*t])
                    .map(|t| m.p[s][t])
                    .max()
                    .unwrap_or_else(rat::zero)
            })
            .collect(),
        PathSets::Until(a, b) => until_values(m, a, b),
        PathSets::Eventually(a) => until_values(m, &vec![true; n], a),
        PathSets::Always(a) => always_values(m, a),
        PathSets::Release(a, b) => {
            let ab = intersect(a, b);
            let u = until_values(m, b, &ab);
            let g = always_values(m, b);
            u.into_iter().zip(g).map(|(x, y)| std::cmp::max(x, y)).collect()
        }
        PathSets::BoundedUntil(a, b, steps) => {
            let mut x: ValueMap =
                (0..n).map(|s| if b[s] { rat::one() } else { rat::zero() }).collect();
            for _ in 0..*steps {
                let next: ValueMap = (0..n)
                    .map(|s| {
                        if b[s] {
                            rat::one()
                        } else if a[s] {
                            max_min_step(m, &x, s)
                        } else {
                            rat::zero()
                        }
                    })
                    .collect();
                x = next;
            }
            x
        }
        PathSets::BoundedAlways(a, steps) => {
            let mut x: ValueMap =
                (0..n).map(|s| if a[s] { rat::one() } else { rat::zero() }).collect();
            for _ in 0..*steps {
                let next: ValueMap = (0..n)
                    .map(|s| if a[s] { max_min_step(m, &x, s) } else { rat::zero() })
                    .collect();
                x = next;
            }
            x
        }
    };
    debug_assert_lattice(m, &v);
    v
}

/// `Ne` value by duality: `1 - Po(complement of the path set)`.
pub fn ne_path(m: &Pks, shape: &PathSets) -> ValueMap {
    let po = match shape {
        PathSets::Next(a) => po_path(m, &PathSets::Next(complement_set(a))),
        PathSets::Until(a, b) => {
            po_path(m, &PathSets::Release(complement_set(a), complement_set(b)))
        }
        PathSets::Release(a, b) => {
            po_path(m, &PathSets::Until(complement_set(a), complement_set(b)))
        }
        PathSets::Eventually(a) => po_path(m, &PathSets::Always(complement_set(a))),
        PathSets::Always(a) => po_path(m, &PathSets::Eventually(complement_set(a))),
        PathSets::BoundedUntil(a, b, n) => {
            // not (A U<=n B) = (!B U<=n (!A & !B)) or []<=n !B
            let na = complement_set(a);
            let nb = complement_set(b);
            let u = po_path(m, &PathSets::BoundedUntil(nb.clone(), intersect(&na, &nb), *n));
            let g = po_path(m, &PathSets::BoundedAlways(nb, *n));
            u.into_iter().zip(g).map(|(x, y)| std::cmp::max(x, y)).collect()
        }
        PathSets::BoundedAlways(a, n) => {
            let na = complement_set(a);
            po_path(m, &PathSets::BoundedUntil(vec![true; m.len()], na, *n))
        }
    };
    po.into_iter().map(|v| rat::one() - v).collect()
}

fn eval_path_sets(m: &Pks, p: &Path, opts: McOptions) -> Result<PathSets, McError> {
    Ok(match p {
        Path::Next(a) => PathSets::Next(sat_states_with(m, a, opts)?),
        Path::Until(a, b) => {
            PathSets::Until(sat_states_with(m, a, opts)?, sat_states_with(m, b, opts)?)
        }
        Path::BoundedUntil(a, b, n) => PathSets::BoundedUntil(
            sat_states_with(m, a, opts)?,
            sat_states_with(m, b, opts)?,
            *n,
        ),
        Path::Release(a, b) => {
            PathSets::Release(sat_states_with(m, a, opts)?, sat_states_with(m, b, opts)?)
        }
        Path::Eventually(a) => PathSets::Eventually(sat_states_with(m, a, opts)?),
        Path::Always(a) => PathSets::Always(sat_states_with(m, a, opts)?),
        Path::BoundedAlways(a, n) => PathSets::BoundedAlways(sat_states_with(m, a, opts)?, *n),
    })
}

fn bound_holds(bound: &Bound, v: Rat) -> bool {
    match bound {
        Bound::Cmp(Cmp::Ge, r) => v >= *r,
        Bound::Cmp(Cmp::Gt, r) => v > *r,
        Bound::Cmp(Cmp::Le, r) => v <= *r,
        Bound::Cmp(Cmp::Lt, r) => v < *r,
        Bound::In(iv) => iv.contains(v),
    }
}

/// The set of states satisfying `f`, as a characteristic vector.
/// Requires a normal and total model (trap-complete first if needed).
pub fn sat_states(m: &Pks, f: &Formula) -> Result<Vec<bool>, McError> {
    if !m.is_normal() || !m.is_total() {
        return Err(McError::InvalidModel);
    }
    sat_states_with(m, f, McOptions::default())
}

pub fn sat_states_opts(m: &Pks, f: &Formula, opts: McOptions) -> Result<Vec<bool>, McError> {
    if !m.is_normal() || !m.is_total() {
        return Err(McError::InvalidModel);
    }
    sat_states_with(m, f, opts)
}

fn sat_states_with(m: &Pks, f: &Formula, opts: McOptions) -> Result<Vec<bool>, McError> {
    let n = m.len();
    Ok(match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(a) => {
            if !m.atoms.iter().any(|x| x == a) && !opts.unknown_atom_is_false {
                return Err(McError::UnknownAtom(a.clone()));
            }
            (0..n).map(|s| m.has_atom(s, a)).collect()
        }
        Formula::Not(a) => complement_set(&sat_states_with(m, a, opts)?),
        Formula::And(a, b) => {
            intersect(&sat_states_with(m, a, opts)?, &sat_states_with(m, b, opts)?)
        }
        Formula::Or(a, b) => {
            let x = sat_states_with(m, a, opts)?;
            let y = sat_states_with(m, b, opts)?;
            x.into_iter().zip(y).map(|(p, q)| p || q).collect()
        }
        Formula::Implies(a, b) => {
            let x = sat_states_with(m, a, opts)?;
            let y = sat_states_with(m, b, opts)?;
            x.into_iter().zip(y).map(|(p, q)| !p || q).collect()
        }
        Formula::Iff(a, b) => {
            let x = sat_states_with(m, a, opts)?;
            let y = sat_states_with(m, b, opts)?;
            x.into_iter().zip(y).map(|(p, q)| p == q).collect()
        }
        Formula::Po(bound, p) => {
            let values = po_path(m, &eval_path_sets(m, p, opts)?);
            values.into_iter().map(|v| bound_holds(bound, v)).collect()
        }
        Formula::Ne(bound, p) => {
            let values = ne_path(m, &eval_path_sets(m, p, opts)?);
            values.into_iter().map(|v| bound_holds(bound, v)).collect()
        }
    })
}

/// `M, s |= f` for a named state.
pub fn check(m: &Pks, state: &str, f: &Formula) -> Result<bool, McError> {
    let idx = m
        .state_index(state)
        .ok_or_else(|| McError::UnknownState(state.to_string()))?;
    Ok(sat_states(m, f)?[idx])
}

pub fn check_opts(m: &Pks, state: &str, f: &Formula, opts: McOptions) -> Result<bool, McError> {
    let idx = m
        .state_index(state)
        .ok_or_else(|| McError::UnknownState(state.to_string()))?;
    Ok(sat_states_opts(m, f, opts)?[idx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula as F;
    use crate::pks::event_possibility_oracle;
    use crate::rat::rat;

    fn m_prime() -> Pks {
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
    fn example_boundary_at_one_half() {
        let m = m_prime();
        let strict = F::ne(Cmp::Gt, rat(1, 2), F::next(F::atom("a")));
        let weak = F::ne(Cmp::Ge, rat(1, 2), F::next(F::atom("a")));
        assert_eq!(check(&m, "s", &strict).unwrap(), false);
        assert_eq!(check(&m, "s", &weak).unwrap(), true);
        assert_eq!(check(&m, "t", &F::atom("a")).unwrap(), true);
    }

    #[test]
    fn ne_value_on_m_prime_next() {
        let m = m_prime();
        let a_states = vec![false, false, true];
        let v = ne_path(&m, &PathSets::Next(a_states));
        assert_eq!(v[0], rat(1, 2));
    }

    #[test]
    fn trivially_true_everywhere() {
        let m = m_prime();
        assert_eq!(sat_states(&m, &F::True).unwrap(), vec![true; 3]);
    }

    #[test]
    fn one_state_always() {
        let mut m = Pks::new(vec!["s0".into()]);
        m.set_trans(0, 0, rat(1, 1));
        m.add_label(0, "a");
        let f = F::po(Cmp::Ge, rat(1, 1), F::always(F::atom("a")));
        assert_eq!(check(&m, "s0", &f).unwrap(), true);
    }

    #[test]
    fn until_fixture_against_oracle() {
        // s0{a} -1-> s0, s0 -1/2-> s1{a}, s1 -1-> s2{b}, s2 -1-> s2
        let mut m = Pks::new(vec!["s0".into(), "s1".into(), "s2".into()]);
        m.set_trans(0, 0, rat(1, 1));
        m.set_trans(0, 1, rat(1, 2));
        m.set_trans(1, 2, rat(1, 1));
        m.set_trans(2, 2, rat(1, 1));
        m.add_label(0, "a");
        m.add_label(1, "a");
        m.add_label(2, "b");
        let a = vec![true, true, false];
        let b = vec![false, false, true];
        let v = po_path(&m, &PathSets::Until(a.clone(), b.clone()));
        assert_eq!(v, vec![rat(1, 2), rat(1, 1), rat(1, 1)]);
        let g = po_path(&m, &PathSets::Always(a.clone()));
        assert_eq!(g[0], rat(1, 1));
        for s in 0..3 {
            let oracle =
                event_possibility_oracle(&m, s, &PathSets::Until(a.clone(), b.clone()), 3)
                    .unwrap();
            assert_eq!(v[s], oracle, "state {}", s);
        }
    }

    #[test]
    fn next_of_empty_set_is_zero() {
        let m = m_prime();
        let v = po_path(&m, &PathSets::Next(vec![false; 3]));
        assert_eq!(v, vec![rat(0, 1); 3]);
    }

    #[test]
    fn always_of_everything_is_one() {
        let m = m_prime();
        let v = ne_path(&m, &PathSets::Always(vec![true; 3]));
        assert_eq!(v, vec![rat(1, 1); 3]);
    }

    #[test]
    fn unknown_atom_handling() {
        let m = m_prime();
        assert_eq!(
            check(&m, "s", &F::atom("zzz")),
            Err(McError::UnknownAtom("zzz".into()))
        );
        let opts = McOptions { unknown_atom_is_false: true };
        assert_eq!(check_opts(&m, "s", &F::atom("zzz"), opts).unwrap(), false);
        assert_eq!(
            check(&m, "nope", &F::True),
            Err(McError::UnknownState("nope".into()))
        );
    }
}
