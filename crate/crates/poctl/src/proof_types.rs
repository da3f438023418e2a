//! Proof script data: numbered lines of formulas with justifications.

use crate::formula::{Cmp, Formula};
use crate::rat::Rat;

/// Identifier of an axiom scheme of AxSys_PoCTL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxiomId {
    A1,
    A2,
    A3a,
    A3b,
    A4a,
    A4b,
    A5,
    A6,
    A7,
    A8,
    A9,
    A10,
    A11,
    Ap1,
    Ap2,
    Ap3,
}

impl AxiomId {
    pub const ALL: [AxiomId; 16] = [
        AxiomId::A1,
        AxiomId::A2,
        AxiomId::A3a,
        AxiomId::A3b,
        AxiomId::A4a,
        AxiomId::A4b,
        AxiomId::A5,
        AxiomId::A6,
        AxiomId::A7,
        AxiomId::A8,
        AxiomId::A9,
        AxiomId::A10,
        AxiomId::A11,
        AxiomId::Ap1,
        AxiomId::Ap2,
        AxiomId::Ap3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxiomId::A1 => "A1",
            AxiomId::A2 => "A2",
            AxiomId::A3a => "A3a",
            AxiomId::A3b => "A3b",
            AxiomId::A4a => "A4a",
            AxiomId::A4b => "A4b",
            AxiomId::A5 => "A5",
            AxiomId::A6 => "A6",
            AxiomId::A7 => "A7",
            AxiomId::A8 => "A8",
            AxiomId::A9 => "A9",
            AxiomId::A10 => "A10",
            AxiomId::A11 => "A11",
            AxiomId::Ap1 => "AP1",
            AxiomId::Ap2 => "AP2",
            AxiomId::Ap3 => "AP3",
        }
    }

    pub fn from_name(s: &str) -> Option<AxiomId> {
        AxiomId::ALL.iter().copied().find(|a| a.name() == s)
    }
}

/// Justification of a proof line. `Pcons` and `Repl` are the two flagged
/// extension rules; strict checking rejects them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Axiom(AxiomId),
    Assume,
    /// `Mp(i, j)`: line `i` is `line j -> this line`.
    Mp(u32, u32),
    /// `Ne_{cmp r}(O premise)` from a theorem premise.
    NecNext(Cmp, Rat, u32),
    /// `Ne_{cmp r}([] premise)` from a theorem premise.
    NecAlw(Cmp, Rat, u32),
    /// Propositional consequence of the cited lines.
    Pcons(Vec<u32>),
    /// `Repl(i, j)`: line `j` proves an equivalence used to rewrite line `i`.
    Repl(u32, u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofLine {
    pub index: u32,
    pub formula: Formula,
    pub just: Justification,
}

/// A proof script: assumption set followed by strictly increasing,
/// justification-backed lines.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProofScript {
    pub assumptions: Vec<Formula>,
    pub lines: Vec<ProofLine>,
}
