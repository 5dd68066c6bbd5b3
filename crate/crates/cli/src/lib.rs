//! Driver code shared by the `qsda-analyzer` binary and its tests: the
//! embedded benchmark corpus, program preparation and report types.

pub mod corpus;

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use qsda::engine::{analyze, AnalysisState, EngineConfig, EngineError};
use qsda::heap::Signature;
use qsda::lang::{load, AssertAt, ParseError, Program};
use qsda::oracle::{enumerate_initial_heaps, soundness_sweep, OracleConfig, SweepReport};
use qsda::qsda::Qsda;
use qsda::strandout::{check_assertion, precondition, PropertySpec, StrandError, Verdict};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Strand(#[from] StrandError),
    #[error("{0}")]
    Engine(#[from] EngineError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

/// A desugared program with its signature and entry automaton.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub name: String,
    pub program: Program,
    pub sig: Arc<Signature>,
    pub pre: Qsda,
    /// Pointer and data variables as written, before desugaring.
    pub npv: usize,
    pub ndv: usize,
}

/// Parses `text` and builds the precondition. `universals` overrides the
/// program's `@universals` line.
pub fn prepare(name: &str, text: &str, universals: Option<usize>) -> Result<Prepared, CliError> {
    let raw = qsda::lang::parse(text)?;
    let program = load(text)?;
    let ny = universals.or(program.universals).unwrap_or(0);
    let sig = Arc::new(Signature::new(&program.pointers[1..], ny));
    let pre = precondition(&program, sig.clone())?;
    Ok(Prepared {
        name: name.to_string(),
        npv: raw.pointers.len() - 1,
        ndv: raw.data_vars.len(),
        program,
        sig,
        pre,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AssertionResult {
    pub at: String,
    pub property: String,
    pub verdict: Verdict,
}

/// One row of the benchmark table.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub program: String,
    pub pv: usize,
    pub y: usize,
    pub dv: usize,
    pub properties: Vec<String>,
    /// Most visits of a loop header; `None` for loop-free programs.
    pub iterations: Option<usize>,
    /// Visits of each loop header, outermost first.
    pub header_visits: Vec<usize>,
    pub max_states: usize,
    pub seconds: f64,
    pub assertions: Vec<AssertionResult>,
}

impl CheckReport {
    /// `-` without loops, otherwise the header visits joined by `/`.
    pub fn iter_text(&self) -> String {
        if self.header_visits.is_empty() {
            return "-".into();
        }
        self.header_visits.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("/")
    }

    pub fn all_proved(&self) -> bool {
        self.assertions.iter().all(|a| a.verdict.is_proved())
    }
}

fn at_name(at: AssertAt, p: &Program) -> String {
    match at {
        AssertAt::Exit => "exit".into(),
        AssertAt::Pc(pc) => (pc - p.prologue).to_string(),
    }
}

/// Runs the analysis and checks every assertion of the program.
pub fn check(prep: &Prepared, opts: &EngineConfig) -> Result<(AnalysisState, CheckReport), CliError> {
    let start = Instant::now();
    let st = analyze(&prep.program, &prep.pre, opts)?;
    let mut assertions = Vec::new();
    let mut properties: Vec<String> = Vec::new();
    for a in &prep.program.asserts {
        let spec = PropertySpec::from_annot(&a.prop, &prep.sig)?;
        let verdict = check_assertion(&st.inv[st.cfg.node_of(a.at)], &spec)?;
        if !properties.contains(&spec.name().to_string()) {
            properties.push(spec.name().to_string());
        }
        assertions.push(AssertionResult { at: at_name(a.at, &prep.program), property: spec.render(&prep.sig), verdict });
    }
    let seconds = start.elapsed().as_secs_f64();
    let report = CheckReport {
        program: prep.name.clone(),
        pv: prep.npv,
        y: prep.sig.ny(),
        dv: prep.ndv,
        properties,
        iterations: (!st.cfg.loop_headers.is_empty()).then(|| st.max_iterations()),
        header_visits: st.iterations.iter().map(|&(_, k)| k).collect(),
        max_states: st.max_states,
        seconds,
        assertions,
    };
    Ok((st, report))
}

/// Concrete runs from every small precondition heap against the inferred
/// invariants.
pub fn sweep(prep: &Prepared, st: &AnalysisState, oc: &OracleConfig) -> (SweepReport, Duration) {
    let start = Instant::now();
    let init = enumerate_initial_heaps(&prep.pre, oc);
    let rep = soundness_sweep(&st.cfg, &st.inv, &init, oc);
    (rep, start.elapsed())
}

/// Renders benchmark rows as a plain-text table.
pub fn render_table(rows: &[CheckReport]) -> String {
    let mut out = format!(
        "{:<24} {:>3} {:>2} {:>3}  {:<18} {:>5} {:>9} {:>8}  {}\n",
        "Program", "#PV", "#Y", "#DV", "Property checked", "#Iter", "Max. size", "Time (s)", "Result"
    );
    for r in rows {
        let iters = r.iter_text();
        let status = if r.all_proved() { "proved" } else { "unknown" };
        out += &format!(
            "{:<24} {:>3} {:>2} {:>3}  {:<18} {:>5} {:>9} {:>8.2}  {}\n",
            r.program,
            r.pv,
            r.y,
            r.dv,
            r.properties.join(", "),
            iters,
            r.max_states,
            r.seconds,
            status
        );
    }
    out
}
