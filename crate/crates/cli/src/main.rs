use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qsda::engine::EngineConfig;
use qsda::lang::AssertAt;
use qsda::oracle::OracleConfig;
use qsda::strandout::emit_formula;
use qsda_analyzer::{check, corpus, prepare, render_table, sweep, CheckReport, CliError, Prepared};

#[derive(Parser)]
#[command(name = "qsda-analyzer", version, about = "Shape and data invariants for list programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the inferred invariant of every program point.
    Analyze(Common),
    /// Check the `@assert` annotations; exit 1 if one is not proved.
    Check(Common),
    /// Print the quantified formula of the invariant at one point.
    Emit {
        #[command(flatten)]
        common: Common,
        /// Program counter, or `exit`.
        #[arg(long, default_value = "exit")]
        at: String,
    },
    /// Compare concrete runs on small heaps with the inferred invariants.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        max_nodes: usize,
        /// Inclusive range of data values, `lo..hi`.
        #[arg(long, default_value = "0..3")]
        data_range: String,
        #[arg(long, default_value_t = 200)]
        fuel: usize,
    },
    /// Run a directory of programs, or the built-in corpus, and tabulate.
    Bench {
        /// Directory of `.hp` files; the built-in corpus when omitted.
        dir: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the stretch programs of the built-in corpus.
        #[arg(long)]
        required_only: bool,
    },
}

#[derive(Args)]
struct Common {
    /// A program file, or the name of a built-in corpus program.
    program: String,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EngineArgs {
    /// Number of universal variables, overriding `@universals`.
    #[arg(long)]
    universals: Option<usize>,
    #[arg(long, default_value_t = 2)]
    widen_delay: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long)]
    strengthen_after_join: bool,
}

impl EngineArgs {
    fn config(&self) -> EngineConfig {
        EngineConfig {
            widen_delay: self.widen_delay,
            max_iter: self.max_iter,
            strengthen_after_join: self.strengthen_after_join,
            trace: false,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

fn load_program(arg: &str, universals: Option<usize>) -> Result<Prepared, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: arg.into(), source })?;
        let name = path.file_stem().map_or(arg.to_string(), |s| s.to_string_lossy().into_owned());
        return prepare(&name, &text, universals);
    }
    match corpus::find(arg) {
        Some(e) => prepare(e.name, e.source, universals),
        None => Err(CliError::Usage(format!("no such file or corpus program: {arg}"))),
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn parse_range(s: &str) -> Result<(i64, i64), CliError> {
    let bad = || CliError::Usage(format!("bad data range `{s}`, expected lo..hi"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn report_text(r: &CheckReport) -> String {
    let mut s = String::new();
    for a in &r.assertions {
        match &a.verdict {
            qsda::strandout::Verdict::Proved => s += &format!("{} at {}: proved\n", a.property, a.at),
            qsda::strandout::Verdict::Unknown(why) => s += &format!("{} at {}: unknown ({why})\n", a.property, a.at),
        }
    }
    let iters = r.iter_text();
    s += &format!("iterations {iters}, max states {}, {:.2}s\n", r.max_states, r.seconds);
    s
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Analyze(c) => {
            let prep = load_program(&c.program, c.engine.universals)?;
            let (st, _) = check(&prep, &c.engine.config())?;
            let text = match c.format {
                Format::Json => {
                    let nodes: Vec<serde_json::Value> = (0..st.cfg.nodes.len())
                        .map(|v| serde_json::json!({ "node": st.cfg.node_name(v), "invariant": st.inv[v].to_json() }))
                        .collect();
                    serde_json::to_string_pretty(&nodes).expect("serializable") + "\n"
                }
                Format::Dot => st.cfg.to_dot(&prep.program),
                Format::Text => {
                    let mut s = String::new();
                    for v in st.cfg.rpo(st.cfg.entry) {
                        s += &format!("== {} ==\n{}\n", st.cfg.node_name(v), st.inv[v].render());
                    }
                    s
                }
            };
            write_out(&c.out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check(c) => {
            let prep = load_program(&c.program, c.engine.universals)?;
            let (_, rep) = check(&prep, &c.engine.config())?;
            let text = match c.format {
                Format::Json => serde_json::to_string_pretty(&rep).expect("serializable") + "\n",
                _ => report_text(&rep),
            };
            write_out(&c.out, &text)?;
            Ok(if rep.all_proved() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Emit { common: c, at } => {
            let prep = load_program(&c.program, c.engine.universals)?;
            let (st, _) = check(&prep, &c.engine.config())?;
            let at = if at == "exit" {
                AssertAt::Exit
            } else {
                let pc: usize = at.parse().map_err(|_| CliError::Usage(format!("bad program point `{at}`")))?;
                AssertAt::Pc(pc + prep.program.prologue)
            };
            let node = st.cfg.node_of(at);
            let inv = emit_formula(&st.inv[node])?;
            let text = match c.format {
                Format::Json => serde_json::to_string_pretty(&inv.to_json()).expect("serializable") + "\n",
                _ => inv.render(),
            };
            write_out(&c.out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Oracle { common: c, max_nodes, data_range, fuel } => {
            let (data_lo, data_hi) = parse_range(&data_range)?;
            let prep = load_program(&c.program, c.engine.universals)?;
            let (st, _) = check(&prep, &c.engine.config())?;
            let oc = OracleConfig { max_nodes, data_lo, data_hi, fuel, seed: 0 };
            let (rep, took) = sweep(&prep, &st, &oc);
            let text = match c.format {
                Format::Json => serde_json::to_string_pretty(&rep).expect("serializable") + "\n",
                _ => {
                    let mut s = format!(
                        "{} initial heaps, {} configurations, {} violations, {:.2}s\n",
                        rep.initial_heaps,
                        rep.configurations,
                        rep.violations.len(),
                        took.as_secs_f64()
                    );
                    for v in rep.violations.iter().take(10) {
                        s += &format!("violation at {}: {}\n", v.node_name, v.heap);
                    }
                    for e in &rep.errors {
                        s += &format!("error: {e}\n");
                    }
                    s
                }
            };
            write_out(&c.out, &text)?;
            Ok(if rep.violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Bench { dir, engine, format, out, required_only } => {
            let mut progs = Vec::new();
            match &dir {
                Some(d) => {
                    let mut files: Vec<PathBuf> = std::fs::read_dir(d)
                        .map_err(|source| CliError::Io { path: d.display().to_string(), source })?
                        .filter_map(|e| e.ok().map(|e| e.path()))
                        .filter(|p| p.extension().is_some_and(|x| x == "hp"))
                        .collect();
                    files.sort();
                    for f in files {
                        progs.push(load_program(&f.display().to_string(), engine.universals)?);
                    }
                }
                None => {
                    for e in corpus::CORPUS.iter().filter(|e| e.required || !required_only) {
                        progs.push(prepare(e.name, e.source, engine.universals)?);
                    }
                }
            }
            let mut rows = Vec::new();
            let mut failed = false;
            for p in &progs {
                match check(p, &engine.config()) {
                    Ok((_, r)) => {
                        failed |= !r.all_proved();
                        rows.push(r);
                    }
                    Err(e) => {
                        failed = true;
                        eprintln!("{}: {e}", p.name);
                    }
                }
            }
            let builtin = dir.is_none();
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&rows).expect("serializable") + "\n",
                _ if builtin && !required_only => render_table(&rows) + corpus::STRETCH_NOTE,
                _ => render_table(&rows),
            };
            write_out(&out, &text)?;
            Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
