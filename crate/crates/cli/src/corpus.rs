//! The benchmark programs, embedded at build time.

pub struct Entry {
    pub name: &'static str,
    pub source: &'static str,
    /// Part of the required gate, as opposed to a stretch program.
    pub required: bool,
    /// Reference iteration count, when the program has a loop.
    pub reference_iterations: Option<usize>,
    /// Reference number of universal variables.
    pub reference_universals: usize,
}

macro_rules! entry {
    ($name:literal, $req:expr, $iters:expr, $ny:expr) => {
        Entry {
            name: $name,
            source: include_str!(concat!("../../../corpus/", $name, ".hp")),
            required: $req,
            reference_iterations: $iters,
            reference_universals: $ny,
        }
    };
}

pub const CORPUS: &[Entry] = &[
    entry!("init", true, Some(4), 1),
    entry!("add-head", true, None, 1),
    entry!("add-tail", true, Some(4), 1),
    entry!("delete-head", true, None, 1),
    entry!("max", true, Some(4), 1),
    entry!("fold-split", true, Some(4), 1),
    entry!("concat", true, Some(5), 1),
    entry!("sorted-find", true, Some(5), 2),
    entry!("sorted-insert", true, Some(6), 2),
    entry!("sorted-reverse", true, Some(5), 2),
    entry!("gslist-prepend", true, None, 0),
    entry!("gslist-reverse", true, Some(3), 0),
    entry!("gslist-custom-find", true, Some(4), 1),
    entry!("gslist-insert-sorted", true, Some(6), 2),
    entry!("bubble-sort", false, Some(18), 2),
    entry!("expressOS-lookup-prev", false, Some(6), 2),
];

/// Why the stretch programs sit outside the required gate.
pub const STRETCH_NOTE: &str = "\nStretch programs, outside the required gate: bubble-sort nests two loops and its \
inner header is visited across every outer round; expressOS-lookup-prev builds the largest automata of the \
Sort programs per header visit.\n";

pub fn find(name: &str) -> Option<&'static Entry> {
    CORPUS.iter().find(|e| e.name == name)
}

pub fn required() -> impl Iterator<Item = &'static Entry> {
    CORPUS.iter().filter(|e| e.required)
}
