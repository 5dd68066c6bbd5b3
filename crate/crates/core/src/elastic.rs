//! Elastic automata: every unary move on the blank letter is a self-loop.

use crate::heap::Letter;
use crate::qsda::Qsda;

/// Whether every unary transition on the blank letter loops.
pub fn is_elastic(a: &Qsda) -> bool {
    a.transitions()
        .iter()
        .all(|t| !(t.letter == Letter::BLANK && t.children.len() == 1) || t.children[0] == t.target)
}

/// The least elastic automaton above `a`: a powerset construction that
/// closes every set under blank successors and turns blank moves into
/// loops. Formulas of merged states are joined.
pub fn elastify(a: &Qsda) -> Qsda {
    if a.is_empty() {
        return a.clone();
    }
    a.to_nfa(0)
        .determinize_elastic()
        .expect("states of a valid automaton agree on types along blank moves")
        .minimize()
}

/// Join in the elastic sub-lattice.
pub fn ejoin(a: &Qsda, b: &Qsda) -> Qsda {
    let j = a.lattice_join(b);
    if is_elastic(&j) {
        j
    } else {
        elastify(&j)
    }
}
