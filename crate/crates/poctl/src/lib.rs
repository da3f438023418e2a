//! PoCTL toolkit: satisfiability via tableau, exact max-min model checking
//! over finite possibilistic Kripke structures, witness extraction, and a
//! Hilbert-style proof checker.

pub mod formula;
pub mod mc;
pub mod pks;
pub mod proof_types;
pub mod syntax;
pub mod tableau;
pub mod rat;
