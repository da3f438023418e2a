//! PoCTL state formulas: AST, size metric, positive normal form, threshold
//! value sets, closure and the conjunctive/disjunctive/successor classification.

use crate::rat::{self, Rat};
use std::collections::BTreeSet;
use thiserror::Error;

/// Threshold comparison. Positive normal form restricts these to `Ge` and `Gt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Ge,
    Gt,
    Le,
    Lt,
}

/// A rational-bounded subinterval of `[0,1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, v: Rat) -> bool {
        let lo_ok = if self.lo_closed { v >= self.lo } else { v > self.lo };
        let hi_ok = if self.hi_closed { v <= self.hi } else { v < self.hi };
        lo_ok && hi_ok
    }
}

/// Threshold annotation of a `Po`/`Ne` operator: a single comparison or an interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    Cmp(Cmp, Rat),
    In(Interval),
}

/// Path shapes. Arguments are state formulas.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Path {
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    BoundedUntil(Box<Formula>, Box<Formula>, u32),
    Release(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    BoundedAlways(Box<Formula>, u32),
}

/// PoCTL state formulas. `Po`/`Ne` nodes fuse the modality with its path
/// operator, so each counts as a single node for the size metric.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Po(Bound, Path),
    Ne(Bound, Path),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("malformed threshold: {0}")]
    MalformedThreshold(String),
    #[error("formula is not in positive normal form")]
    NotPnf,
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn po(cmp: Cmp, r: Rat, path: Path) -> Formula {
        Formula::Po(Bound::Cmp(cmp, r), path)
    }

    pub fn ne(cmp: Cmp, r: Rat, path: Path) -> Formula {
        Formula::Ne(Bound::Cmp(cmp, r), path)
    }

    pub fn next(f: Formula) -> Path {
        Path::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Path {
        Path::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Path {
        Path::Release(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Path {
        Path::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Path {
        Path::Always(Box::new(f))
    }
}

/// Number of AST nodes, counting each `Po`/`Ne` together with its path
/// operator as one node. Thresholds and step bounds are data, not structure.
pub fn formula_size(f: &Formula) -> u64 {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => 1,
        Formula::Not(a) => 1 + formula_size(a),
        Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Implies(a, b)
        | Formula::Iff(a, b) => 1 + formula_size(a) + formula_size(b),
        Formula::Po(_, p) | Formula::Ne(_, p) => {
            1 + match p {
                Path::Next(a) | Path::Eventually(a) | Path::Always(a) | Path::BoundedAlways(a, _) => {
                    formula_size(a)
                }
                Path::Until(a, b) | Path::BoundedUntil(a, b, _) | Path::Release(a, b) => {
                    formula_size(a) + formula_size(b)
                }
            }
        }
    }
}

/// True iff negation occurs only on atoms, all thresholds are `>=`/`>` and
/// non-degenerate, and no derived operators (`->`, `<->`, bounded forms) remain.
pub fn is_pnf(f: &Formula) -> bool {
    fn path_ok(p: &Path) -> bool {
        match p {
            Path::Next(a) | Path::Eventually(a) | Path::Always(a) => is_pnf(a),
            Path::Until(a, b) | Path::Release(a, b) => is_pnf(a) && is_pnf(b),
            Path::BoundedUntil(..) | Path::BoundedAlways(..) => false,
        }
    }
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => true,
        Formula::Not(a) => matches!(**a, Formula::Atom(_)),
        Formula::And(a, b) | Formula::Or(a, b) => is_pnf(a) && is_pnf(b),
        Formula::Implies(..) | Formula::Iff(..) => false,
        Formula::Po(bound, p) | Formula::Ne(bound, p) => match bound {
            Bound::Cmp(Cmp::Ge, r) => *r > rat::zero() && path_ok(p),
            Bound::Cmp(Cmp::Gt, r) => *r < rat::one() && path_ok(p),
            _ => false,
        },
    }
}

fn check_thresholds(f: &Formula) -> Result<(), FormulaError> {
    fn check_bound(b: &Bound) -> Result<(), FormulaError> {
        match b {
            Bound::Cmp(_, r) => {
                if !rat::in_unit(*r) {
                    return Err(FormulaError::MalformedThreshold(format!(
                        "threshold {} lies outside [0,1]",
                        rat::fmt_rat(*r)
                    )));
                }
            }
            Bound::In(iv) => {
                if !rat::in_unit(iv.lo) || !rat::in_unit(iv.hi) {
                    return Err(FormulaError::MalformedThreshold(format!(
                        "interval bounds {} , {} lie outside [0,1]",
                        rat::fmt_rat(iv.lo),
                        rat::fmt_rat(iv.hi)
                    )));
                }
                if iv.is_empty() {
                    return Err(FormulaError::MalformedThreshold("empty interval".into()));
                }
            }
        }
        Ok(())
    }
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => Ok(()),
        Formula::Not(a) => check_thresholds(a),
        Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Implies(a, b)
        | Formula::Iff(a, b) => {
            check_thresholds(a)?;
            check_thresholds(b)
        }
        Formula::Po(bound, p) | Formula::Ne(bound, p) => {
            check_bound(bound)?;
            match p {
                Path::Next(a) | Path::Eventually(a) | Path::Always(a) | Path::BoundedAlways(a, _) => {
                    check_thresholds(a)
                }
                Path::Until(a, b) | Path::BoundedUntil(a, b, _) | Path::Release(a, b) => {
                    check_thresholds(a)?;
                    check_thresholds(b)
                }
            }
        }
    }
}

/// Preprocessing pass for `to_pnf`: decomposes interval thresholds into
/// conjunctions of one-sided ones, rewrites `<=`/`<` thresholds as negated
/// `>`/`>=`, expands `<->`, and unrolls the bounded path operators. The size
/// bound of `to_pnf` is stated relative to this pass's output.
pub fn decompose_intervals(f: &Formula) -> Formula {
    // Builds Q_bound(path) for Q in {Po, Ne} after bound rewriting.
    fn rebuild(is_po: bool, bound: &Bound, path: Path) -> Formula {
        let mk = |cmp: Cmp, r: Rat, p: Path| {
            if is_po {
                Formula::Po(Bound::Cmp(cmp, r), p)
            } else {
                Formula::Ne(Bound::Cmp(cmp, r), p)
            }
        };
        match bound {
            Bound::Cmp(Cmp::Ge, r) => mk(Cmp::Ge, *r, path),
            Bound::Cmp(Cmp::Gt, r) => mk(Cmp::Gt, *r, path),
            Bound::Cmp(Cmp::Le, r) => Formula::not(mk(Cmp::Gt, *r, path)),
            Bound::Cmp(Cmp::Lt, r) => Formula::not(mk(Cmp::Ge, *r, path)),
            Bound::In(iv) => {
                let lower = if iv.lo_closed {
                    mk(Cmp::Ge, iv.lo, path.clone())
                } else {
                    mk(Cmp::Gt, iv.lo, path.clone())
                };
                let upper = if iv.hi_closed {
                    Formula::not(mk(Cmp::Gt, iv.hi, path))
                } else {
                    Formula::not(mk(Cmp::Ge, iv.hi, path))
                };
                Formula::and(lower, upper)
            }
        }
    }

    // Unrolls a bounded operator per the fixpoint shape mirroring A6/A7.
    fn mk_modal(is_po: bool, cmp: Cmp, r: Rat, p: Path) -> Formula {
        if is_po {
            Formula::Po(Bound::Cmp(cmp, r), p)
        } else {
            Formula::Ne(Bound::Cmp(cmp, r), p)
        }
    }

    fn expand_bounded_until(
        is_po: bool,
        cmp: Cmp,
        r: Rat,
        a: &Formula,
        b: &Formula,
        n: u32,
    ) -> Formula {
        if n == 0 {
            return decompose_intervals(b);
        }
        let inner = expand_bounded_until(is_po, cmp, r, a, b, n - 1);
        let next_inner = mk_modal(is_po, cmp, r, Path::Next(Box::new(inner)));
        Formula::or(
            decompose_intervals(b),
            Formula::and(decompose_intervals(a), next_inner),
        )
    }

    fn expand_bounded_always(is_po: bool, cmp: Cmp, r: Rat, a: &Formula, n: u32) -> Formula {
        if n == 0 {
            return decompose_intervals(a);
        }
        let inner = expand_bounded_always(is_po, cmp, r, a, n - 1);
        let next_inner = mk_modal(is_po, cmp, r, Path::Next(Box::new(inner)));
        Formula::and(decompose_intervals(a), next_inner)
    }

    fn go_path(p: &Path) -> Option<Path> {
        Some(match p {
            Path::Next(a) => Path::Next(Box::new(decompose_intervals(a))),
            Path::Until(a, b) => Path::Until(
                Box::new(decompose_intervals(a)),
                Box::new(decompose_intervals(b)),
            ),
            Path::Release(a, b) => Path::Release(
                Box::new(decompose_intervals(a)),
                Box::new(decompose_intervals(b)),
            ),
            Path::Eventually(a) => Path::Eventually(Box::new(decompose_intervals(a))),
            Path::Always(a) => Path::Always(Box::new(decompose_intervals(a))),
            Path::BoundedUntil(..) | Path::BoundedAlways(..) => return None,
        })
    }

    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(a) => Formula::not(decompose_intervals(a)),
        Formula::And(a, b) => Formula::and(decompose_intervals(a), decompose_intervals(b)),
        Formula::Or(a, b) => Formula::or(decompose_intervals(a), decompose_intervals(b)),
        Formula::Implies(a, b) => {
            Formula::implies(decompose_intervals(a), decompose_intervals(b))
        }
        Formula::Iff(a, b) => {
            let a = decompose_intervals(a);
            let b = decompose_intervals(b);
            Formula::and(
                Formula::implies(a.clone(), b.clone()),
                Formula::implies(b, a),
            )
        }
        Formula::Po(bound, p) | Formula::Ne(bound, p) => {
            let is_po = matches!(f, Formula::Po(..));
            match p {
                Path::BoundedUntil(a, b, n) => match bound {
                    Bound::Cmp(cmp @ (Cmp::Ge | Cmp::Gt), r) => {
                        expand_bounded_until(is_po, *cmp, *r, a, b, *n)
                    }
                    // rewrite the bound first, then recurse to unroll
                    _ => decompose_intervals(&rebuild(is_po, bound, p.clone())),
                },
                Path::BoundedAlways(a, n) => match bound {
                    Bound::Cmp(cmp @ (Cmp::Ge | Cmp::Gt), r) => {
                        expand_bounded_always(is_po, *cmp, *r, a, *n)
                    }
                    _ => decompose_intervals(&rebuild(is_po, bound, p.clone())),
                },
                _ => rebuild(is_po, bound, go_path(p).unwrap()),
            }
        }
    }
}

/// Converts to positive normal form: derived operators expanded, negation
/// pushed to atoms via de Morgan and the `Po`/`Ne` dualities, degenerate
/// thresholds folded to constants. The result at most doubles the size of the
/// `decompose_intervals` output.
pub fn to_pnf(f: &Formula) -> Result<Formula, FormulaError> {
    check_thresholds(f)?;
    Ok(push(&decompose_intervals(f), false))
}

// Emits Po with degenerate-threshold folding.
fn emit_po(cmp: Cmp, r: Rat, path: Path) -> Formula {
    match cmp {
        Cmp::Ge if r == rat::zero() => Formula::True,
        Cmp::Gt if r == rat::one() => Formula::False,
        _ => Formula::Po(Bound::Cmp(cmp, r), path),
    }
}

fn emit_ne(cmp: Cmp, r: Rat, path: Path) -> Formula {
    match cmp {
        Cmp::Ge if r == rat::zero() => Formula::True,
        Cmp::Gt if r == rat::one() => Formula::False,
        _ => Formula::Ne(Bound::Cmp(cmp, r), path),
    }
}

// `neg` is the pending negation polarity. Input is decomposed (no intervals,
// Le/Lt, Iff or bounded operators outside of those introduced negations).
fn push(f: &Formula, neg: bool) -> Formula {
    match f {
        Formula::True => {
            if neg {
                Formula::False
            } else {
                Formula::True
            }
        }
        Formula::False => {
            if neg {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Atom(a) => {
            if neg {
                Formula::not(Formula::Atom(a.clone()))
            } else {
                Formula::Atom(a.clone())
            }
        }
        Formula::Not(a) => push(a, !neg),
        Formula::And(a, b) => {
            if neg {
                Formula::or(push(a, true), push(b, true))
            } else {
                Formula::and(push(a, false), push(b, false))
            }
        }
        Formula::Or(a, b) => {
            if neg {
                Formula::and(push(a, true), push(b, true))
            } else {
                Formula::or(push(a, false), push(b, false))
            }
        }
        Formula::Implies(a, b) => {
            if neg {
                Formula::and(push(a, false), push(b, true))
            } else {
                Formula::or(push(a, true), push(b, false))
            }
        }
        Formula::Iff(_, _) => unreachable!("decompose_intervals expands <->"),
        Formula::Po(bound, p) => push_modal(true, bound, p, neg),
        Formula::Ne(bound, p) => push_modal(false, bound, p, neg),
    }
}

fn push_modal(is_po: bool, bound: &Bound, p: &Path, neg: bool) -> Formula {
    let (cmp, r) = match bound {
        Bound::Cmp(c @ (Cmp::Ge | Cmp::Gt), r) => (*c, *r),
        Bound::Cmp(Cmp::Le, r) => {
            // Q_{<=r} = not Q_{>r}
            return push_modal(is_po, &Bound::Cmp(Cmp::Gt, *r), p, !neg);
        }
        Bound::Cmp(Cmp::Lt, r) => {
            return push_modal(is_po, &Bound::Cmp(Cmp::Ge, *r), p, !neg);
        }
        Bound::In(_) => unreachable!("decompose_intervals removes interval bounds"),
    };
    if !neg {
        let path = push_path(p, false);
        return if is_po {
            emit_po(cmp, r, path)
        } else {
            emit_ne(cmp, r, path)
        };
    }
    // not Po_{>=r}(phi) = Ne_{>1-r}(dual phi), and cyclic variants thereof.
    let dual_cmp = match cmp {
        Cmp::Ge => Cmp::Gt,
        Cmp::Gt => Cmp::Ge,
        _ => unreachable!(),
    };
    let dual_r = rat::complement(r);
    let dual_path = push_path(p, true);
    if is_po {
        emit_ne(dual_cmp, dual_r, dual_path)
    } else {
        emit_po(dual_cmp, dual_r, dual_path)
    }
}

fn push_path(p: &Path, neg: bool) -> Path {
    match (p, neg) {
        (Path::Next(a), _) => Path::Next(Box::new(push(a, neg))),
        (Path::Until(a, b), false) => {
            Path::Until(Box::new(push(a, false)), Box::new(push(b, false)))
        }
        (Path::Until(a, b), true) => {
            Path::Release(Box::new(push(a, true)), Box::new(push(b, true)))
        }
        (Path::Release(a, b), false) => {
            Path::Release(Box::new(push(a, false)), Box::new(push(b, false)))
        }
        (Path::Release(a, b), true) => {
            Path::Until(Box::new(push(a, true)), Box::new(push(b, true)))
        }
        (Path::Eventually(a), false) => Path::Eventually(Box::new(push(a, false))),
        (Path::Eventually(a), true) => Path::Always(Box::new(push(a, true))),
        (Path::Always(a), false) => Path::Always(Box::new(push(a, false))),
        (Path::Always(a), true) => Path::Eventually(Box::new(push(a, true))),
        (Path::BoundedUntil(..) | Path::BoundedAlways(..), _) => {
            unreachable!("decompose_intervals unrolls bounded operators")
        }
    }
}

/// Syntactic negation of a PNF formula, itself in PNF.
/// `negate_pnf(negate_pnf(f)) == f`.
pub fn negate_pnf(f: &Formula) -> Result<Formula, FormulaError> {
    if !is_pnf(f) {
        return Err(FormulaError::NotPnf);
    }
    Ok(negate_pnf_unchecked(f))
}

pub(crate) fn negate_pnf_unchecked(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Atom(_) => Formula::not(f.clone()),
        Formula::Not(a) => (**a).clone(),
        Formula::And(a, b) => {
            Formula::or(negate_pnf_unchecked(a), negate_pnf_unchecked(b))
        }
        Formula::Or(a, b) => {
            Formula::and(negate_pnf_unchecked(a), negate_pnf_unchecked(b))
        }
        Formula::Po(Bound::Cmp(cmp, r), p) => {
            let (c, r2) = negate_cmp(*cmp, *r);
            Formula::Ne(Bound::Cmp(c, r2), negate_path(p))
        }
        Formula::Ne(Bound::Cmp(cmp, r), p) => {
            let (c, r2) = negate_cmp(*cmp, *r);
            Formula::Po(Bound::Cmp(c, r2), negate_path(p))
        }
        _ => unreachable!("checked PNF"),
    }
}

fn negate_cmp(cmp: Cmp, r: Rat) -> (Cmp, Rat) {
    match cmp {
        Cmp::Ge => (Cmp::Gt, rat::complement(r)),
        Cmp::Gt => (Cmp::Ge, rat::complement(r)),
        _ => unreachable!("checked PNF"),
    }
}

fn negate_path(p: &Path) -> Path {
    match p {
        Path::Next(a) => Path::Next(Box::new(negate_pnf_unchecked(a))),
        Path::Until(a, b) => Path::Release(
            Box::new(negate_pnf_unchecked(a)),
            Box::new(negate_pnf_unchecked(b)),
        ),
        Path::Release(a, b) => Path::Until(
            Box::new(negate_pnf_unchecked(a)),
            Box::new(negate_pnf_unchecked(b)),
        ),
        Path::Eventually(a) => Path::Always(Box::new(negate_pnf_unchecked(a))),
        Path::Always(a) => Path::Eventually(Box::new(negate_pnf_unchecked(a))),
        Path::BoundedUntil(..) | Path::BoundedAlways(..) => unreachable!("checked PNF"),
    }
}

/// Classification of a PNF formula per the four formula types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaClass {
    Literal,
    Conjunctive(Formula, Formula),
    Disjunctive(Formula, Formula),
    Successor(Formula),
}

/// Table-of-types classification. Until/eventually formulas are disjunctive,
/// release/always conjunctive, next-formulas successor, the rest literals.
pub fn classify(f: &Formula) -> Result<FormulaClass, FormulaError> {
    if !is_pnf(f) {
        return Err(FormulaError::NotPnf);
    }
    Ok(classify_unchecked(f))
}

pub(crate) fn classify_unchecked(f: &Formula) -> FormulaClass {
    let wrap = |bound: &Bound, p: &Path, is_po: bool| {
        let inner = if is_po {
            Formula::Po(bound.clone(), p.clone())
        } else {
            Formula::Ne(bound.clone(), p.clone())
        };
        let next = Path::Next(Box::new(inner));
        if is_po {
            Formula::Po(bound.clone(), next)
        } else {
            Formula::Ne(bound.clone(), next)
        }
    };
    match f {
        Formula::True | Formula::False | Formula::Atom(_) | Formula::Not(_) => {
            FormulaClass::Literal
        }
        Formula::And(a, b) => FormulaClass::Conjunctive((**a).clone(), (**b).clone()),
        Formula::Or(a, b) => FormulaClass::Disjunctive((**a).clone(), (**b).clone()),
        Formula::Po(bound, p) | Formula::Ne(bound, p) => {
            let is_po = matches!(f, Formula::Po(..));
            match p {
                Path::Next(a) => FormulaClass::Successor((**a).clone()),
                Path::Until(a, b) => FormulaClass::Disjunctive(
                    (**b).clone(),
                    Formula::and((**a).clone(), wrap(bound, p, is_po)),
                ),
                Path::Eventually(a) => {
                    FormulaClass::Disjunctive((**a).clone(), wrap(bound, p, is_po))
                }
                Path::Release(a, b) => FormulaClass::Conjunctive(
                    (**b).clone(),
                    Formula::or((**a).clone(), wrap(bound, p, is_po)),
                ),
                Path::Always(a) => {
                    FormulaClass::Conjunctive((**a).clone(), wrap(bound, p, is_po))
                }
                _ => unreachable!("checked PNF"),
            }
        }
        Formula::Implies(..) | Formula::Iff(..) => unreachable!("checked PNF"),
    }
}

/// The finite ordered threshold sets `V` and `EV` with predecessor/successor
/// navigation. Always contains 0 and 1 and is closed under `r -> 1-r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdSet {
    values: Vec<Rat>,
}

impl ThresholdSet {
    fn from_set(set: BTreeSet<Rat>) -> ThresholdSet {
        ThresholdSet { values: set.into_iter().collect() }
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, r: Rat) -> bool {
        self.values.binary_search(&r).is_ok()
    }

    pub fn index_of(&self, r: Rat) -> Option<usize> {
        self.values.binary_search(&r).ok()
    }

    /// `r^-`: the next smaller element. Undefined at the minimum.
    pub fn pred(&self, r: Rat) -> Option<Rat> {
        let i = self.index_of(r)?;
        if i == 0 {
            None
        } else {
            Some(self.values[i - 1])
        }
    }

    /// `r^+`: the next larger element. Undefined at the maximum.
    pub fn succ(&self, r: Rat) -> Option<Rat> {
        let i = self.index_of(r)?;
        if i + 1 == self.values.len() {
            None
        } else {
            Some(self.values[i + 1])
        }
    }
}

fn collect_thresholds(f: &Formula, out: &mut BTreeSet<Rat>) {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => {}
        Formula::Not(a) => collect_thresholds(a, out),
        Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Implies(a, b)
        | Formula::Iff(a, b) => {
            collect_thresholds(a, out);
            collect_thresholds(b, out);
        }
        Formula::Po(bound, p) | Formula::Ne(bound, p) => {
            match bound {
                Bound::Cmp(_, r) => {
                    out.insert(*r);
                }
                Bound::In(iv) => {
                    out.insert(iv.lo);
                    out.insert(iv.hi);
                }
            }
            match p {
                Path::Next(a) | Path::Eventually(a) | Path::Always(a) | Path::BoundedAlways(a, _) => {
                    collect_thresholds(a, out)
                }
                Path::Until(a, b) | Path::BoundedUntil(a, b, _) | Path::Release(a, b) => {
                    collect_thresholds(a, out);
                    collect_thresholds(b, out);
                }
            }
        }
    }
}

/// `V(Λ)`: the thresholds of `Λ`, their complements, and `{0,1}`.
/// `EV(Λ)`: `V(Λ)` plus the midpoint of every adjacent pair.
pub fn value_sets(f: &Formula) -> (ThresholdSet, ThresholdSet) {
    let mut v = BTreeSet::new();
    collect_thresholds(f, &mut v);
    let complements: Vec<Rat> = v.iter().map(|r| rat::complement(*r)).collect();
    v.extend(complements);
    v.insert(rat::zero());
    v.insert(rat::one());
    let vs: Vec<Rat> = v.iter().copied().collect();
    let mut ev = v.clone();
    for w in vs.windows(2) {
        ev.insert(rat::midpoint(w[0], w[1]));
    }
    (ThresholdSet::from_set(v), ThresholdSet::from_set(ev))
}

/// Options for the closure computation. `ne_diamond_family` additionally
/// applies the threshold rules to `Ne(<> _)` formulas, the literal reading of
/// the closure definition; the default covers the next-formulas of both
/// modalities, which is what the tableau consistency arguments use.
#[derive(Debug, Clone, Copy)]
pub struct ClosureOptions {
    pub ne_diamond_family: bool,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions { ne_diamond_family: false }
    }
}

/// `cl(Λ)` and `ecl(Λ) = cl(Λ) ∪ {¬Φ : Φ ∈ cl(Λ)}`, both sorted canonically.
#[derive(Debug, Clone)]
pub struct Closure {
    pub origin: Formula,
    pub cl: Vec<Formula>,
    pub ecl: Vec<Formula>,
}

pub fn closure(f: &Formula) -> Result<Closure, FormulaError> {
    closure_with(f, ClosureOptions::default())
}

pub fn closure_with(f: &Formula, opts: ClosureOptions) -> Result<Closure, FormulaError> {
    if !is_pnf(f) {
        return Err(FormulaError::NotPnf);
    }
    let (v, _) = value_sets(f);
    let mut set: BTreeSet<Formula> = BTreeSet::new();
    let mut pending: Vec<Formula> = vec![f.clone()];
    while let Some(g) = pending.pop() {
        if !set.insert(g.clone()) {
            continue;
        }
        // (1) immediate subformulas
        match &g {
            Formula::Not(a) => pending.push((**a).clone()),
            Formula::And(a, b) | Formula::Or(a, b) => {
                pending.push((**a).clone());
                pending.push((**b).clone());
            }
            Formula::Po(_, p) | Formula::Ne(_, p) => match p {
                Path::Next(a) | Path::Eventually(a) | Path::Always(a) => {
                    pending.push((**a).clone())
                }
                Path::Until(a, b) | Path::Release(a, b) => {
                    pending.push((**a).clone());
                    pending.push((**b).clone());
                }
                _ => unreachable!("checked PNF"),
            },
            _ => {}
        }
        // (2)-(3) next-step unfoldings of until/release/eventually/always
        if let Formula::Po(bound, p) | Formula::Ne(bound, p) = &g {
            let is_po = matches!(g, Formula::Po(..));
            if !matches!(p, Path::Next(_)) {
                let next = Path::Next(Box::new(g.clone()));
                pending.push(if is_po {
                    Formula::Po(bound.clone(), next)
                } else {
                    Formula::Ne(bound.clone(), next)
                });
            }
        }
        // (4)-(6) threshold families over V(Λ)
        if let Formula::Po(Bound::Cmp(cmp, r), p) | Formula::Ne(Bound::Cmp(cmp, r), p) = &g {
            let is_po = matches!(g, Formula::Po(..));
            let in_family = matches!(p, Path::Next(_))
                || (opts.ne_diamond_family && !is_po && matches!(p, Path::Eventually(_)));
            if in_family {
                let mk = |c: Cmp, r2: Rat| -> Option<Formula> {
                    // degenerate thresholds are dropped
                    if (c == Cmp::Ge && r2 == rat::zero()) || (c == Cmp::Gt && r2 == rat::one()) {
                        return None;
                    }
                    Some(if is_po {
                        Formula::Po(Bound::Cmp(c, r2), p.clone())
                    } else {
                        Formula::Ne(Bound::Cmp(c, r2), p.clone())
                    })
                };
                for r2 in v.values() {
                    // (4): same comparison, any smaller-or-equal threshold in V
                    if *r2 <= *r {
                        pending.extend(mk(*cmp, *r2));
                    }
                    // (6): strict variants below a non-strict threshold
                    if *cmp == Cmp::Ge && *r2 < *r {
                        pending.extend(mk(Cmp::Gt, *r2));
                    }
                }
                // (5): the non-strict variant at the same threshold
                if *cmp == Cmp::Gt {
                    pending.extend(mk(Cmp::Ge, *r));
                }
            }
        }
    }
    let cl: Vec<Formula> = set.iter().cloned().collect();
    let mut ecl_set = set.clone();
    for g in &cl {
        ecl_set.insert(negate_pnf_unchecked(g));
    }
    Ok(Closure {
        origin: f.clone(),
        cl,
        ecl: ecl_set.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn a() -> Formula {
        Formula::atom("a")
    }

    fn b() -> Formula {
        Formula::atom("b")
    }

    /// Po_{>=1/2}(O Po_{>=1/3}(O ... Po_{>=1/n}(O a)...)), n-1 next operators.
    pub(crate) fn lambda_n(n: u32) -> Formula {
        let mut f = a();
        for k in (2..=n).rev() {
            f = Formula::po(Cmp::Ge, rat(1, k as i64), Formula::next(f));
        }
        f
    }

    #[test]
    fn size_counts_fused_nodes() {
        assert_eq!(formula_size(&a()), 1);
        assert_eq!(formula_size(&lambda_n(3)), 3);
        assert_eq!(formula_size(&Formula::not(Formula::and(a(), b()))), 4);
    }

    #[test]
    fn pnf_de_morgan() {
        let f = Formula::not(Formula::and(a(), b()));
        let g = to_pnf(&f).unwrap();
        assert_eq!(g, Formula::or(Formula::not(a()), Formula::not(b())));
        assert!(is_pnf(&g));
    }

    #[test]
    fn pnf_diamond_duality() {
        // not Po_{>=1/2}(<> a)  =  Ne_{>1/2}([] not a)
        let f = Formula::not(Formula::po(Cmp::Ge, rat(1, 2), Formula::eventually(a())));
        let g = to_pnf(&f).unwrap();
        assert_eq!(
            g,
            Formula::ne(Cmp::Gt, rat(1, 2), Formula::always(Formula::not(a())))
        );
    }

    #[test]
    fn pnf_interval_decomposition() {
        // Po_{[1/5,7/10]}(O a) = Po_{>=1/5}(O a) & Ne_{>=3/10}(O not a)
        let f = Formula::Po(
            Bound::In(Interval { lo: rat(1, 5), hi: rat(7, 10), lo_closed: true, hi_closed: true }),
            Formula::next(a()),
        );
        let g = to_pnf(&f).unwrap();
        assert_eq!(
            g,
            Formula::and(
                Formula::po(Cmp::Ge, rat(1, 5), Formula::next(a())),
                Formula::ne(Cmp::Ge, rat(3, 10), Formula::next(Formula::not(a()))),
            )
        );
    }

    #[test]
    fn pnf_rejects_bad_thresholds() {
        let f = Formula::po(Cmp::Ge, rat(3, 2), Formula::next(a()));
        assert!(matches!(to_pnf(&f), Err(FormulaError::MalformedThreshold(_))));
        let empty = Formula::Po(
            Bound::In(Interval { lo: rat(1, 2), hi: rat(1, 2), lo_closed: false, hi_closed: true }),
            Formula::next(a()),
        );
        assert!(matches!(to_pnf(&empty), Err(FormulaError::MalformedThreshold(_))));
    }

    #[test]
    fn value_sets_examples() {
        for n in 2..=8u32 {
            let (v, _) = value_sets(&lambda_n(n));
            assert_eq!(v.len(), (2 * n - 1) as usize, "V(Lambda_{})", n);
        }
        let (v, ev) = value_sets(&a());
        assert_eq!(v.values(), &[rat(0, 1), rat(1, 1)]);
        assert_eq!(ev.values(), &[rat(0, 1), rat(1, 2), rat(1, 1)]);

        let (v, ev) = value_sets(&Formula::ne(Cmp::Gt, rat(1, 2), Formula::next(a())));
        assert_eq!(v.values(), &[rat(0, 1), rat(1, 2), rat(1, 1)]);
        assert_eq!(
            ev.values(),
            &[rat(0, 1), rat(1, 4), rat(1, 2), rat(3, 4), rat(1, 1)]
        );
        // closure under complement
        for r in ev.values() {
            assert!(ev.contains(crate::rat::complement(*r)));
        }
    }

    #[test]
    fn threshold_set_navigation() {
        let (_, ev) = value_sets(&Formula::ne(Cmp::Gt, rat(1, 2), Formula::next(a())));
        assert_eq!(ev.pred(rat(1, 2)), Some(rat(1, 4)));
        assert_eq!(ev.succ(rat(3, 4)), Some(rat(1, 1)));
        assert_eq!(ev.pred(rat(0, 1)), None);
        assert_eq!(ev.succ(rat(1, 1)), None);
    }

    #[test]
    fn closure_literal_only() {
        let c = closure(&a()).unwrap();
        assert_eq!(c.cl, vec![a()]);
        assert_eq!(c.ecl, vec![a(), Formula::not(a())]);
    }

    #[test]
    fn closure_unfolds_eventually() {
        let f = Formula::po(Cmp::Ge, rat(1, 2), Formula::eventually(a()));
        let c = closure(&f).unwrap();
        let unfold = Formula::po(Cmp::Ge, rat(1, 2), Formula::next(f.clone()));
        assert!(c.cl.contains(&unfold));
    }

    #[test]
    fn closure_is_a_fixed_point() {
        let f = to_pnf(&Formula::not(Formula::po(
            Cmp::Ge,
            rat(1, 2),
            Formula::until(a(), b()),
        )))
        .unwrap();
        let c = closure(&f).unwrap();
        let set: std::collections::BTreeSet<_> = c.cl.iter().cloned().collect();
        assert!(set.contains(&f));
        // re-running the closure on any member stays inside the set
        for g in &c.cl {
            for h in &closure(g).unwrap().cl {
                assert!(set.contains(h), "closure not fixed: {:?} escapes via {:?}", g, h);
            }
        }
    }

    #[test]
    fn classify_table_rows() {
        let f = Formula::po(Cmp::Ge, rat(1, 2), Formula::until(a(), b()));
        let cls = classify(&f).unwrap();
        let expected_second = Formula::and(
            a(),
            Formula::po(Cmp::Ge, rat(1, 2), Formula::next(f.clone())),
        );
        assert_eq!(cls, FormulaClass::Disjunctive(b(), expected_second));

        let g = Formula::ne(Cmp::Gt, rat(1, 4), Formula::next(a()));
        assert_eq!(classify(&g).unwrap(), FormulaClass::Successor(a()));

        assert_eq!(classify(&Formula::not(a())).unwrap(), FormulaClass::Literal);

        let h = Formula::ne(Cmp::Ge, rat(1, 2), Formula::always(a()));
        let expected = FormulaClass::Conjunctive(
            a(),
            Formula::ne(Cmp::Ge, rat(1, 2), Formula::next(h.clone())),
        );
        assert_eq!(classify(&h).unwrap(), expected);
    }

    #[test]
    fn negate_pnf_examples() {
        let f = Formula::ne(Cmp::Gt, rat(1, 2), Formula::next(a()));
        assert_eq!(
            negate_pnf(&f).unwrap(),
            Formula::po(Cmp::Ge, rat(1, 2), Formula::next(Formula::not(a())))
        );
        assert_eq!(negate_pnf(&a()).unwrap(), Formula::not(a()));
        let g = Formula::po(Cmp::Ge, rat(1, 3), Formula::until(a(), b()));
        assert_eq!(
            negate_pnf(&g).unwrap(),
            Formula::ne(
                Cmp::Gt,
                rat(2, 3),
                Formula::release(Formula::not(a()), Formula::not(b()))
            )
        );
    }

    #[test]
    fn negate_pnf_is_an_involution() {
        let samples = vec![
            a(),
            Formula::True,
            Formula::not(b()),
            Formula::and(a(), Formula::or(b(), Formula::not(a()))),
            Formula::po(Cmp::Gt, rat(1, 3), Formula::release(a(), b())),
            Formula::ne(Cmp::Ge, rat(2, 3), Formula::eventually(Formula::and(a(), b()))),
            lambda_n(4),
        ];
        for f in samples {
            assert_eq!(negate_pnf(&negate_pnf(&f).unwrap()).unwrap(), f);
        }
    }

    #[test]
    fn ecl_growth_is_quadratic() {
        // |ecl(Lambda_n)| fits c*n^2: check the second difference is constant-ish
        let sizes: Vec<f64> = (2..=12u32)
            .map(|n| closure(&lambda_n(n)).unwrap().ecl.len() as f64)
            .collect();
        // least-squares fit of log size against log n
        let xs: Vec<f64> = (2..=12u32).map(|n| (n as f64).ln()).collect();
        let ys: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(
            (1.8..=2.2).contains(&slope),
            "fitted exponent {} outside [1.8, 2.2]; sizes {:?}",
            slope,
            sizes
        );
    }

    #[test]
    fn ne_diamond_family_flag_extends_closure() {
        let f = Formula::ne(Cmp::Gt, rat(1, 2), Formula::eventually(a()));
        let plain = closure(&f).unwrap();
        let extended =
            closure_with(&f, ClosureOptions { ne_diamond_family: true }).unwrap();
        assert!(extended.cl.len() > plain.cl.len());
        let variant = Formula::ne(Cmp::Ge, rat(1, 2), Formula::eventually(a()));
        assert!(extended.cl.contains(&variant));
        assert!(!plain.cl.contains(&variant));
    }

    #[test]
    fn bounded_until_expansion_base_cases() {
        let f = Formula::Po(
            Bound::Cmp(Cmp::Ge, rat(1, 2)),
            Path::BoundedUntil(Box::new(a()), Box::new(b()), 0),
        );
        assert_eq!(to_pnf(&f).unwrap(), b());
        let g = Formula::Po(
            Bound::Cmp(Cmp::Ge, rat(1, 2)),
            Path::BoundedUntil(Box::new(a()), Box::new(b()), 1),
        );
        let expected = Formula::or(
            b(),
            Formula::and(a(), Formula::po(Cmp::Ge, rat(1, 2), Formula::next(b()))),
        );
        assert_eq!(to_pnf(&g).unwrap(), expected);
    }
}
