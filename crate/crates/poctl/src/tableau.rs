//! Tableau-based satisfiability: maximal consistent subsets of `ecl(Λ)` as
//! nodes, possibility-weighted edges from the necessity obligations, deletion
//! and ranking rules, SAT/UNSAT verdicts, witness extraction and validity.

use crate::formula::{
    classify_unchecked, closure_with, is_pnf, negate_pnf_unchecked, to_pnf, value_sets,
    ClosureOptions, Cmp, Formula, FormulaClass, FormulaError, Path, ThresholdSet,
};
use crate::mc;
use crate::pks::Pks;
use crate::rat::{self, Rat};
use std::collections::HashMap;
use thiserror::Error;

pub const RANK_INF: u32 = u32::MAX;

/// Per-node rank for one eventuality; `RANK_INF` means not pseudo-fulfilled.
pub type RankMap = Vec<u32>;

#[derive(Debug, Error)]
pub enum TableauError {
    #[error("tableau would need {needed} nodes, over the capacity bound {cap}")]
    CapacityExceeded { needed: u128, cap: u64 },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("extracted witness failed model checking: {0}")]
    WitnessVerificationFailed(String),
    #[error("extracted witness is not a normal PKS")]
    NonNormalWitness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
}

/// Tuning knobs for `decide`: the node capacity bound and the closure reading.
#[derive(Debug, Clone, Copy)]
pub struct DecideConfig {
    pub node_cap: u64,
    pub closure: ClosureOptions,
}

impl Default for DecideConfig {
    fn default() -> Self {
        DecideConfig { node_cap: 1 << 22, closure: ClosureOptions::default() }
    }
}

// One successor-formula family: all Po-form next-formulas over a fixed inner
// argument, ordered by ascending strength. A node's choice for the family is
// the length of the true prefix, which bakes in the threshold monotonicity
// closure (AP1-AP3 within a label).
#[derive(Debug, Clone)]
struct Family {
    inner_idx: u32,
    entries: Vec<FamilyEntry>,
}

#[derive(Debug, Clone)]
struct FamilyEntry {
    cmp: Cmp,
    r: Rat,
    pos_idx: u32,
    // EV index of the admissible edge maximum when this entry is the weakest
    // false one and the target satisfies the inner formula.
    cap: u8,
}

/// An eventuality of `ecl(Λ)`: an until or eventually formula under `Po`/`Ne`.
#[derive(Debug, Clone)]
pub struct Eventuality {
    pub formula_idx: u32,
    pub existential: bool,
    pub cmp: Cmp,
    pub r: Rat,
    /// The promised component: `Ψ` for `Φ ⊔ Ψ`, the argument for `<>`.
    pub psi_idx: u32,
    /// The interior guard `Φ`; `None` for the eventually form.
    pub phi_idx: Option<u32>,
    /// Edge level for fulfillment paths, with strictness.
    pub level: Rat,
    pub level_strict: bool,
}

impl Eventuality {
    fn level_ok(&self, edge: Rat) -> bool {
        if self.level_strict {
            edge > self.level
        } else {
            edge >= self.level
        }
    }

    fn obligation_edge_ok(&self, cmp: Cmp, r: Rat, edge: Rat) -> bool {
        let _ = self;
        match cmp {
            Cmp::Ge => edge >= r,
            Cmp::Gt => edge > r,
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableauNode {
    label: Vec<u64>,
    fam_vals: Vec<u8>,
    inner_bits: u64,
}

impl TableauNode {
    fn has(&self, idx: u32) -> bool {
        self.label[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }
}

/// The tableau: all maximal propositionally consistent subsets of `ecl(Λ)`
/// with the closed-form edge possibilities, plus the shrinking alive set.
#[derive(Debug, Clone)]
pub struct Tableau {
    pub origin: Formula,
    ecl: Vec<Formula>,
    ecl_index: HashMap<Formula, u32>,
    pub v_set: ThresholdSet,
    pub ev_set: ThresholdSet,
    atoms: Vec<String>,
    families: Vec<Family>,
    nodes: Vec<TableauNode>,
    alive: Vec<bool>,
    lambda_idx: u32,
    eventualities: Vec<Eventuality>,
}

// Compiled truth evaluation over elementary choices. Slots are in dependency
// order, so one forward pass evaluates every ecl member.
enum SlotOp {
    Const(bool),
    AtomBit(u16),
    Entry { family: u16, entry: u8 },
    Not(u32),
    And(u32, u32),
    Or(u32, u32),
}

struct EvalPlan {
    slots: Vec<SlotOp>,
    ecl_slot: Vec<u32>,
    inner_slot: Vec<u32>,
}

struct PlanBuilder<'a> {
    atoms: &'a [String],
    entry_of: &'a HashMap<Formula, (u16, u8)>,
    slots: Vec<SlotOp>,
    memo: HashMap<Formula, u32>,
}

impl<'a> PlanBuilder<'a> {
    fn compile(&mut self, f: &Formula) -> u32 {
        if let Some(&id) = self.memo.get(f) {
            return id;
        }
        let op = match f {
            Formula::True => SlotOp::Const(true),
            Formula::False => SlotOp::Const(false),
            Formula::Atom(a) => {
                let k = self.atoms.iter().position(|x| x == a).expect("atom in ecl");
                SlotOp::AtomBit(k as u16)
            }
            Formula::Not(inner) => {
                let id = self.compile(inner);
                SlotOp::Not(id)
            }
            Formula::And(a, b) => {
                let x = self.compile(a);
                let y = self.compile(b);
                SlotOp::And(x, y)
            }
            Formula::Or(a, b) => {
                let x = self.compile(a);
                let y = self.compile(b);
                SlotOp::Or(x, y)
            }
            Formula::Po(_, Path::Next(_)) => {
                let (fam, e) = self.entry_of[f];
                SlotOp::Entry { family: fam, entry: e }
            }
            Formula::Ne(_, Path::Next(_)) => {
                let pos = negate_pnf_unchecked(f);
                let (fam, e) = self.entry_of[&pos];
                let id = self.slots.len() as u32;
                self.slots.push(SlotOp::Entry { family: fam, entry: e });
                SlotOp::Not(id)
            }
            Formula::Po(..) | Formula::Ne(..) => match classify_unchecked(f) {
                FormulaClass::Conjunctive(c1, c2) => {
                    let x = self.compile(&c1);
                    let y = self.compile(&c2);
                    SlotOp::And(x, y)
                }
                FormulaClass::Disjunctive(c1, c2) => {
                    let x = self.compile(&c1);
                    let y = self.compile(&c2);
                    SlotOp::Or(x, y)
                }
                _ => unreachable!("non-next modal formulas classify as conjunctive/disjunctive"),
            },
            Formula::Implies(..) | Formula::Iff(..) => unreachable!("PNF input"),
        };
        let id = self.slots.len() as u32;
        self.slots.push(op);
        self.memo.insert(f.clone(), id);
        id
    }
}

/// Builds the initial tableau for a PNF formula with non-degenerate
/// thresholds: node enumeration over the elementary choices, closed-form
/// edge possibilities.
pub fn build_tableau(lambda: &Formula, cfg: &DecideConfig) -> Result<Tableau, TableauError> {
    if !is_pnf(lambda) {
        return Err(FormulaError::NotPnf.into());
    }
    let (v_set, ev_set) = value_sets(lambda);
    let cl = closure_with(lambda, cfg.closure)?;
    let ecl = cl.ecl;
    let ecl_index: HashMap<Formula, u32> =
        ecl.iter().enumerate().map(|(i, f)| (f.clone(), i as u32)).collect();

    let mut atoms: Vec<String> = ecl
        .iter()
        .filter_map(|f| match f {
            Formula::Atom(a) => Some(a.clone()),
            _ => None,
        })
        .collect();
    atoms.sort();
    atoms.dedup();

    // group the Po-form next-formulas into threshold families
    let mut family_map: HashMap<Formula, Vec<(Cmp, Rat, u32)>> = HashMap::new();
    for (i, f) in ecl.iter().enumerate() {
        if let Formula::Po(crate::formula::Bound::Cmp(cmp, r), Path::Next(x)) = f {
            family_map.entry((**x).clone()).or_default().push((*cmp, *r, i as u32));
        }
    }
    let mut inner_args: Vec<Formula> = family_map.keys().cloned().collect();
    inner_args.sort();
    let mut families = Vec::new();
    for x in &inner_args {
        let mut entries = family_map.remove(x).unwrap();
        // ascending strength: by threshold, >= before > at the same threshold
        entries.sort_by(|a, b| (a.1, a.0 == Cmp::Gt).cmp(&(b.1, b.0 == Cmp::Gt)));
        let fam_entries: Vec<FamilyEntry> = entries
            .into_iter()
            .map(|(cmp, r, pos_idx)| {
                let cap = match cmp {
                    // false Po_{>=r}(O X) is Ne_{>1-r}(O !X): cap pred(r)
                    Cmp::Ge => ev_set.index_of(ev_set.pred(r).expect("r > 0 in EV")).unwrap(),
                    // false Po_{>r}(O X) is Ne_{>=1-r}(O !X): cap r
                    Cmp::Gt => ev_set.index_of(r).unwrap(),
                    _ => unreachable!(),
                } as u8;
                FamilyEntry { cmp, r, pos_idx, cap }
            })
            .collect();
        families.push(Family { inner_idx: ecl_index[x], entries: fam_entries });
    }
    if families.len() > 60 {
        return Err(TableauError::CapacityExceeded {
            needed: u128::MAX,
            cap: cfg.node_cap,
        });
    }

    // capacity check: product of family choices times atom assignments
    let mut needed: u128 = 1u128 << atoms.len().min(100);
    for fam in &families {
        needed = needed.saturating_mul(fam.entries.len() as u128 + 1);
    }
    if needed > cfg.node_cap as u128 {
        return Err(TableauError::CapacityExceeded { needed, cap: cfg.node_cap });
    }

    // compile the evaluation plan
    let mut entry_of: HashMap<Formula, (u16, u8)> = HashMap::new();
    for (fi, fam) in families.iter().enumerate() {
        for (ei, e) in fam.entries.iter().enumerate() {
            entry_of.insert(ecl[e.pos_idx as usize].clone(), (fi as u16, ei as u8));
        }
    }

    let mut builder = PlanBuilder {
        atoms: &atoms,
        entry_of: &entry_of,
        slots: Vec::new(),
        memo: HashMap::new(),
    };
    let ecl_slot: Vec<u32> = ecl.iter().map(|f| builder.compile(f)).collect();
    let inner_slot: Vec<u32> = families
        .iter()
        .map(|fam| builder.compile(&ecl[fam.inner_idx as usize]))
        .collect();
    let plan = EvalPlan { slots: builder.slots, ecl_slot, inner_slot };

    // enumerate nodes: atom assignment times family-value odometer
    let words = (ecl.len() + 63) / 64;
    let mut nodes = Vec::with_capacity(needed as usize);
    let mut fam_vals = vec![0u8; families.len()];
    let mut slot_vals = vec![false; plan.slots.len()];
    loop {
        for atom_bits in 0u64..(1u64 << atoms.len()) {
            for (i, op) in plan.slots.iter().enumerate() {
                slot_vals[i] = match op {
                    SlotOp::Const(b) => *b,
                    SlotOp::AtomBit(k) => atom_bits >> k & 1 == 1,
                    SlotOp::Entry { family, entry } => fam_vals[*family as usize] > *entry,
                    SlotOp::Not(x) => !slot_vals[*x as usize],
                    SlotOp::And(x, y) => slot_vals[*x as usize] && slot_vals[*y as usize],
                    SlotOp::Or(x, y) => slot_vals[*x as usize] || slot_vals[*y as usize],
                };
            }
            let mut label = vec![0u64; words];
            for (i, slot) in plan.ecl_slot.iter().enumerate() {
                if slot_vals[*slot as usize] {
                    label[i / 64] |= 1 << (i % 64);
                }
            }
            let mut inner_bits = 0u64;
            for (fi, slot) in plan.inner_slot.iter().enumerate() {
                if slot_vals[*slot as usize] {
                    inner_bits |= 1 << fi;
                }
            }
            // maximality sanity: each member or its negation, never both
            #[cfg(debug_assertions)]
            for (i, f) in ecl.iter().enumerate() {
                let neg = negate_pnf_unchecked(f);
                let j = ecl_index[&neg] as usize;
                let fi = label[i / 64] >> (i % 64) & 1 == 1;
                let fj = label[j / 64] >> (j % 64) & 1 == 1;
                debug_assert!(fi != fj, "label must decide {} exactly once", f);
            }
            nodes.push(TableauNode { label, fam_vals: fam_vals.clone(), inner_bits });
        }
        // odometer step
        let mut k = 0;
        loop {
            if k == families.len() {
                break;
            }
            if (fam_vals[k] as usize) < families[k].entries.len() {
                fam_vals[k] += 1;
                break;
            }
            fam_vals[k] = 0;
            k += 1;
        }
        if k == families.len() {
            break;
        }
    }

    // eventualities in canonical ecl order
    let mut eventualities = Vec::new();
    for (i, f) in ecl.iter().enumerate() {
        if let Formula::Po(crate::formula::Bound::Cmp(cmp, r), path)
        | Formula::Ne(crate::formula::Bound::Cmp(cmp, r), path) = f
        {
            let existential = matches!(f, Formula::Po(..));
            let (psi, phi) = match path {
                Path::Until(a, b) => ((**b).clone(), Some((**a).clone())),
                Path::Eventually(a) => ((**a).clone(), None),
                _ => continue,
            };
            let (level, level_strict) = if existential {
                (*r, *cmp == Cmp::Gt)
            } else {
                (rat::complement(*r), *cmp == Cmp::Ge)
            };
            eventualities.push(Eventuality {
                formula_idx: i as u32,
                existential,
                cmp: *cmp,
                r: *r,
                psi_idx: ecl_index[&psi],
                phi_idx: phi.map(|p| ecl_index[&p]),
                level,
                level_strict,
            });
        }
    }

    let lambda_idx = ecl_index[lambda];
    let alive = vec![true; nodes.len()];
    Ok(Tableau {
        origin: lambda.clone(),
        ecl,
        ecl_index,
        v_set,
        ev_set,
        atoms,
        families,
        nodes,
        alive,
        lambda_idx,
        eventualities,
    })
}

impl Tableau {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn alive(&self, s: usize) -> bool {
        self.alive[s]
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    pub fn ecl(&self) -> &[Formula] {
        &self.ecl
    }

    pub fn eventualities(&self) -> &[Eventuality] {
        &self.eventualities
    }

    pub fn label_contains(&self, node: usize, f: &Formula) -> bool {
        self.ecl_index.get(f).map(|i| self.nodes[node].has(*i)).unwrap_or(false)
    }

    pub fn label_formulas(&self, node: usize) -> Vec<Formula> {
        self.ecl
            .iter()
            .enumerate()
            .filter(|(i, _)| self.nodes[node].has(*i as u32))
            .map(|(_, f)| f.clone())
            .collect()
    }

    /// Closed-form edge possibility: 1 capped by every violated
    /// `Ne(O _)` obligation of `s` against `t`.
    pub fn edge(&self, s: usize, t: usize) -> Rat {
        self.ev_set.values()[self.edge_idx(s, t)]
    }

    fn edge_idx(&self, s: usize, t: usize) -> usize {
        let ns = &self.nodes[s];
        let nt = &self.nodes[t];
        let mut cap = (self.ev_set.len() - 1) as u8;
        for (fi, fam) in self.families.iter().enumerate() {
            if nt.inner_bits >> fi & 1 == 0 {
                continue;
            }
            let v = ns.fam_vals[fi] as usize;
            if v < fam.entries.len() {
                cap = cap.min(fam.entries[v].cap);
            }
        }
        cap as usize
    }

    /// Evaluation of the admissible-value set `D(s,t)` over `EV`: a value is
    /// admitted when every necessity obligation of `s` that constrains edges
    /// at that value is met by `t`. A violated `Ne_{>r}(O _)` rules out the
    /// values at or above `1-r`, a violated `Ne_{>=r}(O _)` those above
    /// `1-r`. Downward closed, always contains 0, and `max D(s,t)` equals
    /// the closed-form edge.
    pub fn d_set(&self, s: usize, t: usize) -> Vec<Rat> {
        let mut out = Vec::new();
        'vals: for &val in self.ev_set.values() {
            for f in &self.ecl {
                if let Formula::Ne(crate::formula::Bound::Cmp(cmp, r), Path::Next(x)) = f {
                    if self.label_contains_f(s, f) && !self.label_contains_f(t, x) {
                        let forbidden = match cmp {
                            Cmp::Gt => val >= rat::complement(*r),
                            Cmp::Ge => val > rat::complement(*r),
                            _ => unreachable!("PNF labels"),
                        };
                        if forbidden {
                            continue 'vals;
                        }
                    }
                }
            }
            out.push(val);
        }
        out
    }

    fn label_contains_f(&self, node: usize, f: &Formula) -> bool {
        self.nodes[node].has(self.ecl_index[f])
    }

    fn psi_holds(&self, evt: &Eventuality, node: usize) -> bool {
        self.nodes[node].has(evt.psi_idx)
    }

    fn guard_holds(&self, evt: &Eventuality, node: usize) -> bool {
        match evt.phi_idx {
            Some(i) => self.nodes[node].has(i),
            None => true,
        }
    }

    // Obligation families of `s` carrying an entry at exactly (cmp, r).
    fn exact_obligations(&self, s: usize, cmp: Cmp, r: Rat) -> Vec<usize> {
        let mut out = Vec::new();
        for (fi, fam) in self.families.iter().enumerate() {
            let v = self.nodes[s].fam_vals[fi] as usize;
            if fam.entries[..v].iter().any(|e| e.cmp == cmp && e.r == r) {
                out.push(fi);
            }
        }
        out
    }

    // Strongest true entry of each family in `s`: the per-family LC1 obligation.
    fn strongest_obligations(&self, s: usize) -> Vec<(usize, Cmp, Rat)> {
        let mut out = Vec::new();
        for (fi, fam) in self.families.iter().enumerate() {
            let v = self.nodes[s].fam_vals[fi] as usize;
            if v > 0 {
                let e = &fam.entries[v - 1];
                out.push((fi, e.cmp, e.r));
            }
        }
        out
    }

    /// Ranking for `Po_{~r}(Φ ⊔ Ψ)` / `Po_{~r}(<> Ψ)`: rank 1 at Ψ-nodes,
    /// then `1 + min` over the obligation successors above the threshold.
    /// Finite rank certifies a threshold-filtered fulfillment path.
    pub fn rank_existential(&self, evt: &Eventuality) -> RankMap {
        assert!(evt.existential);
        let n = self.nodes.len();
        let mut rank = vec![RANK_INF; n];
        let mut current: Vec<usize> = Vec::new();
        for s in 0..n {
            if self.alive[s] && self.psi_holds(evt, s) {
                rank[s] = 1;
                current.push(s);
            }
        }
        let mut k = 1u32;
        while !current.is_empty() {
            let mut next = Vec::new();
            for s in 0..n {
                if !self.alive[s] || rank[s] != RANK_INF || !self.guard_holds(evt, s) {
                    continue;
                }
                let obligations = self.exact_obligations(s, evt.cmp, evt.r);
                let hit = current.iter().any(|&t| {
                    let e = self.edge(s, t);
                    evt.obligation_edge_ok(evt.cmp, evt.r, e)
                        && obligations
                            .iter()
                            .any(|&fi| self.nodes[t].inner_bits >> fi & 1 == 1)
                });
                if hit {
                    rank[s] = k + 1;
                    next.push(s);
                }
            }
            current = next;
            k += 1;
        }
        rank
    }

    /// Ranking for `Ne_{~r}(Φ ⊔ Ψ)` / `Ne_{~r}(<> Ψ)`: rank 1 at Ψ-nodes,
    /// then `1 + max` over the binding obligations of the per-obligation
    /// minima. An obligation is binding when all of its witnesses sit at or
    /// above the fulfillment level; the implicit `true` obligation ranges
    /// over the possibility-1 successors.
    pub fn rank_universal(&self, evt: &Eventuality) -> RankMap {
        assert!(!evt.existential);
        let n = self.nodes.len();
        let mut rank = vec![RANK_INF; n];
        let alive_nodes: Vec<usize> = (0..n).filter(|s| self.alive[*s]).collect();

        // Per node: binding obligation list as (family or ONES, cmp, r).
        #[derive(Clone, Copy, PartialEq)]
        enum Ob {
            Fam(usize, Cmp, Rat),
            Ones,
        }
        let mut pending: Vec<Vec<Ob>> = vec![Vec::new(); n];
        let mut eligible = vec![false; n];
        for &s in &alive_nodes {
            if self.psi_holds(evt, s) {
                rank[s] = 1;
                continue;
            }
            if !self.guard_holds(evt, s) {
                continue;
            }
            eligible[s] = true;
            let mut obs = vec![Ob::Ones];
            for (fi, cmp, r) in self.strongest_obligations(s) {
                // binding iff every witness for the obligation is at level
                let mut binding = true;
                let mut any = false;
                for &t in &alive_nodes {
                    if self.nodes[t].inner_bits >> fi & 1 == 0 {
                        continue;
                    }
                    let e = self.edge(s, t);
                    if !evt.obligation_edge_ok(cmp, r, e) {
                        continue;
                    }
                    any = true;
                    if !evt.level_ok(e) {
                        binding = false;
                        break;
                    }
                }
                if binding || !any {
                    obs.push(Ob::Fam(fi, cmp, r));
                }
            }
            pending[s] = obs;
        }

        let mut filled: Vec<Vec<bool>> = pending.iter().map(|o| vec![false; o.len()]).collect();
        let mut remaining: Vec<usize> = pending.iter().map(|o| o.len()).collect();
        let mut current: Vec<usize> = (0..n).filter(|&s| rank[s] == 1).collect();
        let mut k = 1u32;
        while !current.is_empty() {
            let mut next = Vec::new();
            for s in 0..n {
                if !eligible[s] || rank[s] != RANK_INF {
                    continue;
                }
                for &t in &current {
                    let e = self.edge(s, t);
                    for (oi, ob) in pending[s].iter().enumerate() {
                        if filled[s][oi] {
                            continue;
                        }
                        let inside = match ob {
                            Ob::Ones => e == rat::one(),
                            Ob::Fam(fi, cmp, r) => {
                                self.nodes[t].inner_bits >> *fi & 1 == 1
                                    && evt.obligation_edge_ok(*cmp, *r, e)
                            }
                        };
                        if inside {
                            filled[s][oi] = true;
                            remaining[s] -= 1;
                        }
                    }
                }
                if remaining[s] == 0 && rank[s] == RANK_INF {
                    rank[s] = k + 1;
                    next.push(s);
                }
            }
            current = next;
            k += 1;
        }
        rank
    }

    /// Applies the deletion rules to a fixed point. Each sweep evaluates all
    /// rules against the pre-sweep alive set, then deletes: (2-1) drops nodes
    /// without a possibility-1 alive successor, (2-2) drops violations of the
    /// finite-case local consistency for possibility obligations, (2-3) drops
    /// nodes carrying an unfulfillable eventuality.
    pub fn prune(&mut self) {
        let n = self.nodes.len();
        let mut sweeps = 0usize;
        loop {
            let alive0 = self.alive.clone();
            let alive_nodes: Vec<usize> = (0..n).filter(|s| alive0[*s]).collect();
            let mut kill = vec![false; n];

            for &s in &alive_nodes {
                // (2-1): strengthened no-successor rule
                if !alive_nodes.iter().any(|&t| self.edge(s, t) == rat::one()) {
                    kill[s] = true;
                    continue;
                }
                // (2-2): each possibility obligation needs a live witness
                for (fi, cmp, r) in self.strongest_obligations(s) {
                    let ok = alive_nodes.iter().any(|&t| {
                        self.nodes[t].inner_bits >> fi & 1 == 1
                            && match cmp {
                                Cmp::Ge => self.edge(s, t) >= r,
                                Cmp::Gt => self.edge(s, t) > r,
                                _ => unreachable!(),
                            }
                    });
                    if !ok {
                        kill[s] = true;
                        break;
                    }
                }
            }
            // (2-3): eventuality pseudo-fulfillment via the rankings
            let evts = self.eventualities.clone();
            for evt in &evts {
                let rank = if evt.existential {
                    self.rank_existential(evt)
                } else {
                    self.rank_universal(evt)
                };
                for &s in &alive_nodes {
                    if self.nodes[s].has(evt.formula_idx) && rank[s] == RANK_INF {
                        kill[s] = true;
                    }
                }
            }

            let mut changed = false;
            for s in 0..n {
                if kill[s] && self.alive[s] {
                    self.alive[s] = false;
                    changed = true;
                }
            }
            sweeps += 1;
            debug_assert!(sweeps <= n + 1, "pruning failed to terminate");
            if !changed {
                break;
            }
        }
    }

    /// SAT iff some alive node carries the candidate formula.
    pub fn verdict(&self) -> Verdict {
        if (0..self.nodes.len()).any(|s| self.alive[s] && self.nodes[s].has(self.lambda_idx)) {
            Verdict::Sat
        } else {
            Verdict::Unsat
        }
    }
}

/// Decides satisfiability of an arbitrary PoCTL formula. PNF conversion is
/// internal; the final tableau is returned for inspection and extraction.
pub fn decide(f: &Formula, cfg: &DecideConfig) -> Result<(Verdict, Tableau), TableauError> {
    let pnf = to_pnf(f)?;
    let mut tab = build_tableau(&pnf, cfg)?;
    tab.prune();
    let v = tab.verdict();
    Ok((v, tab))
}

/// A verified model extracted from a satisfiable tableau.
#[derive(Debug, Clone)]
pub struct Witness {
    pub model: Pks,
    pub root: usize,
    /// Tableau node index backing each model state.
    pub provenance: Vec<usize>,
}

/// Splices fulfillment dags row by row, one row per eventuality, to build a
/// normal model of the formula, then verifies it with the model checker.
/// State count is bounded by `rows * alive nodes`.
pub fn extract_witness(tab: &Tableau, f: &Formula) -> Result<Witness, TableauError> {
    assert_eq!(tab.verdict(), Verdict::Sat, "extract_witness requires SAT");
    let n = tab.nodes.len();
    let alive_nodes: Vec<usize> = (0..n).filter(|s| tab.alive[*s]).collect();
    let rows = tab.eventualities.len().max(1);
    let ranks: Vec<RankMap> = tab
        .eventualities
        .iter()
        .map(|evt| {
            if evt.existential {
                tab.rank_existential(evt)
            } else {
                tab.rank_universal(evt)
            }
        })
        .collect();

    let root_node = *alive_nodes
        .iter()
        .find(|&&s| tab.nodes[s].has(tab.lambda_idx))
        .expect("SAT verdict implies a live candidate node");

    // Deterministic pick: minimal rank for the row's eventuality, then index.
    let pick_min = |cands: &[usize], rank: Option<&RankMap>| -> usize {
        *cands
            .iter()
            .min_by_key(|&&t| (rank.map(|r| r[t]).unwrap_or(0), t))
            .expect("candidate set is nonempty")
    };

    let mut state_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut edges: Vec<Vec<(usize, Rat)>> = Vec::new();
    let mut work: Vec<(usize, usize)> = Vec::new();
    let root_key = (0usize, root_node);
    state_of.insert(root_key, 0);
    order.push(root_key);
    edges.push(Vec::new());
    work.push(root_key);

    while let Some((row, u)) = work.pop() {
        let sid = state_of[&(row, u)];
        let evt = tab.eventualities.get(row);
        let rank = ranks.get(row);
        let next_row = (row + 1) % rows;
        let duty = evt
            .map(|e| tab.nodes[u].has(e.formula_idx) && !tab.psi_holds(e, u))
            .unwrap_or(false);
        let mut succs: Vec<(usize, usize)> = Vec::new(); // (target row, node)

        // one witness per possibility-obligation family (LC1)
        for (fi, cmp, r) in tab.strongest_obligations(u) {
            let cands: Vec<usize> = alive_nodes
                .iter()
                .copied()
                .filter(|&t| {
                    tab.nodes[t].inner_bits >> fi & 1 == 1
                        && match cmp {
                            Cmp::Ge => tab.edge(u, t) >= r,
                            Cmp::Gt => tab.edge(u, t) > r,
                            _ => unreachable!(),
                        }
                })
                .collect();
            debug_assert!(!cands.is_empty(), "LC1 holds on the pruned tableau");
            let mut pick = pick_min(&cands, rank);
            let mut target_row = next_row;
            if duty {
                let e = evt.unwrap();
                if !e.existential {
                    // in-row continuation along level edges must descend in rank
                    let rk = rank.unwrap();
                    if e.level_ok(tab.edge(u, pick)) {
                        if rk[pick] >= rk[u] && !tab.psi_holds(e, pick) {
                            let low: Vec<usize> = cands
                                .iter()
                                .copied()
                                .filter(|&t| !e.level_ok(tab.edge(u, t)))
                                .collect();
                            if !low.is_empty() {
                                pick = pick_min(&low, rank);
                            }
                        }
                        if e.level_ok(tab.edge(u, pick)) {
                            target_row = row;
                        }
                    }
                }
            }
            succs.push((target_row, pick));
        }

        // the fulfillment step for an existential duty stays in the row
        if duty {
            let e = evt.unwrap();
            if e.existential {
                let rk = rank.unwrap();
                let obligations = tab.exact_obligations(u, e.cmp, e.r);
                let cands: Vec<usize> = alive_nodes
                    .iter()
                    .copied()
                    .filter(|&t| {
                        let ed = tab.edge(u, t);
                        e.obligation_edge_ok(e.cmp, e.r, ed)
                            && obligations.iter().any(|&fi| tab.nodes[t].inner_bits >> fi & 1 == 1)
                    })
                    .collect();
                debug_assert!(!cands.is_empty(), "finite rank implies a fulfillment step");
                let pick = pick_min(&cands, rank);
                debug_assert!(rk[pick] < rk[u]);
                succs.push((row, pick));
            }
        }

        // possibility-1 successor for normality
        {
            let ones: Vec<usize> = alive_nodes
                .iter()
                .copied()
                .filter(|&t| tab.edge(u, t) == rat::one())
                .collect();
            debug_assert!(!ones.is_empty(), "rule (2-1) keeps a possibility-1 successor");
            let pick = pick_min(&ones, rank);
            let target_row = if duty && !evt.unwrap().existential { row } else { next_row };
            succs.push((target_row, pick));
        }

        for (trow, t) in succs {
            let key = (trow, t);
            let tid = *state_of.entry(key).or_insert_with(|| {
                let id = order.len();
                order.push(key);
                edges.push(Vec::new());
                work.push(key);
                id
            });
            let e = tab.edge(u, t);
            if !edges[sid].iter().any(|(x, _)| *x == tid) {
                edges[sid].push((tid, e));
            }
        }
    }

    // materialize the PKS
    let names: Vec<String> = order.iter().map(|(r, u)| format!("q{}_{}", r, u)).collect();
    let mut model = Pks::new(names);
    for a in &tab.atoms {
        if !model.atoms.contains(a) {
            model.atoms.push(a.clone());
        }
    }
    for (sid, (_, u)) in order.iter().enumerate() {
        for a in &tab.atoms {
            let idx = tab.ecl_index[&Formula::Atom(a.clone())];
            if tab.nodes[*u].has(idx) {
                model.labels[sid].insert(a.clone());
            }
        }
        for &(tid, e) in &edges[sid] {
            model.p[sid][tid] = e;
        }
    }
    model.init[0] = rat::one();

    if !model.is_normal() || !model.is_total() {
        return Err(TableauError::NonNormalWitness);
    }
    match mc::check(&model, &model.states[0].clone(), f) {
        Ok(true) => {}
        Ok(false) => {
            return Err(TableauError::WitnessVerificationFailed(format!(
                "model checker refutes {} at the extracted root",
                f
            )))
        }
        Err(e) => {
            return Err(TableauError::WitnessVerificationFailed(format!(
                "model checker error: {}",
                e
            )))
        }
    }
    let provenance = order.iter().map(|(_, u)| *u).collect();
    Ok(Witness { model, root: 0, provenance })
}

#[derive(Debug)]
pub enum Validity {
    Valid,
    Invalid(Box<Witness>),
}

/// Valid iff the negation is unsatisfiable; a countermodel is produced
/// otherwise.
pub fn check_valid(f: &Formula, cfg: &DecideConfig) -> Result<Validity, TableauError> {
    let neg = Formula::not(f.clone());
    let (verdict, tab) = decide(&neg, cfg)?;
    match verdict {
        Verdict::Unsat => Ok(Validity::Valid),
        Verdict::Sat => {
            let w = extract_witness(&tab, &neg)?;
            Ok(Validity::Invalid(Box::new(w)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn a() -> Formula {
        Formula::atom("a")
    }

    fn ne_gt_half_next_a() -> Formula {
        Formula::ne(Cmp::Gt, rat(1, 2), Formula::next(a()))
    }

    fn find_node(tab: &Tableau, want: &[Formula], reject: &[Formula]) -> usize {
        (0..tab.node_count())
            .find(|&s| {
                want.iter().all(|f| tab.label_contains(s, f))
                    && reject.iter().all(|f| !tab.label_contains(s, f))
            })
            .expect("no node with the requested label")
    }

    #[test]
    fn edge_caps_follow_the_ne_obligations() {
        let tab = build_tableau(&ne_gt_half_next_a(), &DecideConfig::default()).unwrap();
        assert_eq!(
            tab.ev_set.values(),
            &[rat(0, 1), rat(1, 4), rat(1, 2), rat(3, 4), rat(1, 1)]
        );
        let full_ne = [
            Formula::ne(Cmp::Gt, rat(1, 2), Formula::next(a())),
            Formula::ne(Cmp::Ge, rat(1, 2), Formula::next(a())),
            Formula::ne(Cmp::Gt, rat(0, 1), Formula::next(a())),
        ];
        let s = find_node(&tab, &full_ne, &[]);
        let t_not_a = find_node(&tab, &[Formula::not(a())], &[]);
        let t_a = find_node(&tab, &[a()], &[]);
        assert_eq!(tab.edge(s, t_not_a), rat(1, 4));
        assert_eq!(tab.edge(s, t_a), rat(1, 1));

        // d_set: the violated pair admits only {0, 1/4}
        assert_eq!(tab.d_set(s, t_not_a), vec![rat(0, 1), rat(1, 4)]);
        // a node whose whole Po family is true has no Ne obligations left,
        // so every EV value is admitted
        let free = find_node(
            &tab,
            &[Formula::po(Cmp::Ge, rat(1, 1), Formula::next(Formula::not(a())))],
            &[],
        );
        assert_eq!(tab.d_set(free, t_not_a).len(), tab.ev_set.len());
    }

    #[test]
    fn one_is_excluded_when_the_weakest_ge_obligation_fails() {
        // Ne_{>=1/2}(O a): the node carrying it loses possibility-1 edges to !a
        let f = Formula::ne(Cmp::Ge, rat(1, 2), Formula::next(a()));
        let tab = build_tableau(&f, &DecideConfig::default()).unwrap();
        let s = find_node(&tab, &[f.clone()], &[]);
        let t = find_node(&tab, &[Formula::not(a())], &[]);
        let d = tab.d_set(s, t);
        assert!(!d.contains(&rat(1, 1)));
        assert_eq!(*d.last().unwrap(), tab.edge(s, t));
    }

    #[test]
    fn atom_only_tableau_has_trivial_edges() {
        let tab = build_tableau(&a(), &DecideConfig::default()).unwrap();
        assert_eq!(tab.node_count(), 2);
        for s in 0..2 {
            for t in 0..2 {
                assert_eq!(tab.edge(s, t), rat(1, 1));
            }
        }
    }

    #[test]
    fn d_set_is_downward_closed_and_matches_the_closed_form() {
        let formulas = vec![
            ne_gt_half_next_a(),
            to_pnf(&Formula::not(Formula::po(
                Cmp::Ge,
                rat(1, 3),
                Formula::until(a(), Formula::atom("b")),
            )))
            .unwrap(),
            Formula::and(
                Formula::po(Cmp::Gt, rat(1, 4), Formula::next(Formula::atom("b"))),
                Formula::ne(Cmp::Ge, rat(3, 4), Formula::next(a())),
            ),
        ];
        for f in formulas {
            let tab = build_tableau(&f, &DecideConfig::default()).unwrap();
            for s in 0..tab.node_count() {
                for t in 0..tab.node_count() {
                    let d = tab.d_set(s, t);
                    assert!(d.contains(&rat(0, 1)), "0 in D(s,t)");
                    // downward closed within EV
                    for v in tab.ev_set.values() {
                        if *v <= *d.last().unwrap() {
                            assert!(d.contains(v), "gap below max in D(s,t)");
                        } else {
                            assert!(!d.contains(v));
                        }
                    }
                    assert_eq!(*d.last().unwrap(), tab.edge(s, t), "closed form = max D");
                }
            }
        }
    }

    #[test]
    fn freshly_built_tableau_satisfies_pc_and_lc0() {
        let f = to_pnf(&Formula::not(Formula::po(
            Cmp::Ge,
            rat(1, 2),
            Formula::until(a(), Formula::atom("b")),
        )))
        .unwrap();
        let tab = build_tableau(&f, &DecideConfig::default()).unwrap();
        // PC0 + PC1/PC2 via the classification
        for s in 0..tab.node_count() {
            for g in tab.label_formulas(s) {
                let neg = crate::formula::negate_pnf(&g).unwrap();
                assert!(!tab.label_contains(s, &neg), "PC0 violated");
                fn entails(tab: &Tableau, s: usize, f: &Formula) -> bool {
                    match f {
                        Formula::And(x, y) => entails(tab, s, x) && entails(tab, s, y),
                        Formula::Or(x, y) => entails(tab, s, x) || entails(tab, s, y),
                        Formula::True => true,
                        Formula::False => false,
                        _ => tab.label_contains(s, f),
                    }
                }
                match crate::formula::classify(&g).unwrap() {
                    FormulaClass::Conjunctive(c1, c2) => {
                        assert!(entails(&tab, s, &c1) && entails(&tab, s, &c2), "PC1");
                    }
                    FormulaClass::Disjunctive(c1, c2) => {
                        assert!(entails(&tab, s, &c1) || entails(&tab, s, &c2), "PC2");
                    }
                    _ => {}
                }
            }
        }
        // LC0-1' and LC0-2 on every pair
        for s in 0..tab.node_count() {
            for g in tab.label_formulas(s) {
                if let Formula::Ne(crate::formula::Bound::Cmp(cmp, r), Path::Next(x)) = &g {
                    for t in 0..tab.node_count() {
                        let e = tab.edge(s, t);
                        let forced = match cmp {
                            Cmp::Gt => e >= rat::complement(*r),
                            Cmp::Ge => e > rat::complement(*r),
                            _ => unreachable!(),
                        };
                        if forced {
                            assert!(tab.label_contains(t, x), "LC0 violated");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn decide_examples() {
        let cfg = DecideConfig::default();
        let (v, _) = decide(&Formula::and(a(), Formula::not(a())), &cfg).unwrap();
        assert_eq!(v, Verdict::Unsat);

        let (v, tab) = decide(&ne_gt_half_next_a(), &cfg).unwrap();
        assert_eq!(v, Verdict::Sat);
        let w = extract_witness(&tab, &ne_gt_half_next_a()).unwrap();
        // every successor of the root at possibility >= 1/2 is labelled a
        for t in 0..w.model.len() {
            if w.model.p[w.root][t] >= rat(1, 2) && w.model.p[w.root][t] > rat(0, 1) {
                assert!(w.model.has_atom(t, "a"));
            }
        }

        let contradiction = Formula::and(
            Formula::po(Cmp::Ge, rat(1, 1), Formula::next(a())),
            Formula::ne(Cmp::Ge, rat(1, 1), Formula::next(Formula::not(a()))),
        );
        let (v, _) = decide(&contradiction, &cfg).unwrap();
        assert_eq!(v, Verdict::Unsat);

        let diamond = Formula::and(
            Formula::po(Cmp::Ge, rat(1, 2), Formula::eventually(Formula::atom("b"))),
            Formula::ne(Cmp::Ge, rat(1, 1), Formula::always(Formula::not(Formula::atom("b")))),
        );
        let (v, _) = decide(&diamond, &cfg).unwrap();
        assert_eq!(v, Verdict::Unsat);
    }

    #[test]
    fn prune_keeps_a_candidate_for_the_example_formula() {
        let cfg = DecideConfig::default();
        let mut tab = build_tableau(&ne_gt_half_next_a(), &cfg).unwrap();
        tab.prune();
        assert_eq!(tab.verdict(), Verdict::Sat);
    }

    #[test]
    fn witness_for_plain_atom_is_a_self_loop() {
        let cfg = DecideConfig::default();
        let (v, tab) = decide(&a(), &cfg).unwrap();
        assert_eq!(v, Verdict::Sat);
        let w = extract_witness(&tab, &a()).unwrap();
        assert_eq!(w.model.len(), 1);
        assert_eq!(w.model.p[0][0], rat(1, 1));
        assert!(w.model.has_atom(0, "a"));
    }

    #[test]
    fn rank_existential_examples() {
        // Po_{>=1/2}(a U b): b-nodes rank 1, a-nodes one step above their witness
        let f = Formula::po(Cmp::Ge, rat(1, 2), Formula::until(a(), Formula::atom("b")));
        let mut tab = build_tableau(&f, &DecideConfig::default()).unwrap();
        tab.prune();
        let evt = tab
            .eventualities()
            .iter()
            .find(|e| e.existential)
            .cloned()
            .unwrap();
        let rank = tab.rank_existential(&evt);
        for s in 0..tab.node_count() {
            if !tab.alive(s) {
                continue;
            }
            if tab.label_contains(s, &Formula::atom("b")) {
                assert_eq!(rank[s], 1);
            }
            if tab.label_contains(s, &f) && !tab.label_contains(s, &Formula::atom("b")) {
                assert!(rank[s] >= 2 && rank[s] != RANK_INF);
            }
            if !tab.label_contains(s, &Formula::atom("b"))
                && !tab.label_contains(s, &a())
            {
                assert_eq!(rank[s], RANK_INF, "update requires the guard");
            }
        }
    }

    #[test]
    fn rank_universal_examples() {
        let f = Formula::ne(Cmp::Gt, rat(1, 2), Formula::until(a(), Formula::atom("b")));
        let mut tab = build_tableau(&f, &DecideConfig::default()).unwrap();
        tab.prune();
        let evt = tab
            .eventualities()
            .iter()
            .find(|e| !e.existential)
            .cloned()
            .unwrap();
        let rank = tab.rank_universal(&evt);
        for s in 0..tab.node_count() {
            if !tab.alive(s) {
                continue;
            }
            if tab.label_contains(s, &Formula::atom("b")) {
                assert_eq!(rank[s], 1);
            }
            if tab.label_contains(s, &f) {
                assert_ne!(rank[s], RANK_INF, "alive carriers are fulfilled");
            }
        }
    }

    #[test]
    fn check_valid_examples() {
        let cfg = DecideConfig::default();
        // AP1 instance
        let ap1 = Formula::implies(
            Formula::po(Cmp::Gt, rat(1, 2), Formula::next(a())),
            Formula::po(Cmp::Ge, rat(1, 2), Formula::next(a())),
        );
        assert!(matches!(check_valid(&ap1, &cfg).unwrap(), Validity::Valid));

        match check_valid(&a(), &cfg).unwrap() {
            Validity::Invalid(w) => assert!(!w.model.has_atom(w.root, "a")),
            Validity::Valid => panic!("a plain atom is not valid"),
        }

        // A6 instance with Phi=a, Psi=b, >= 1/2
        let until = Formula::po(Cmp::Ge, rat(1, 2), Formula::until(a(), Formula::atom("b")));
        let a6 = Formula::implies(
            Formula::or(
                Formula::atom("b"),
                Formula::and(
                    a(),
                    Formula::po(Cmp::Ge, rat(1, 2), Formula::next(until.clone())),
                ),
            ),
            until,
        );
        assert!(matches!(check_valid(&a6, &cfg).unwrap(), Validity::Valid));
    }

    #[test]
    fn pruning_shrinks_monotonically() {
        let f = to_pnf(&Formula::not(Formula::po(
            Cmp::Ge,
            rat(1, 2),
            Formula::until(a(), Formula::atom("b")),
        )))
        .unwrap();
        let mut tab = build_tableau(&f, &DecideConfig::default()).unwrap();
        let before = tab.alive_count();
        tab.prune();
        assert!(tab.alive_count() <= before);
    }

    #[test]
    fn capacity_bound_is_enforced() {
        let f = ne_gt_half_next_a();
        let cfg = DecideConfig { node_cap: 2, ..DecideConfig::default() };
        assert!(matches!(
            build_tableau(&f, &cfg),
            Err(TableauError::CapacityExceeded { .. })
        ));
    }
}
