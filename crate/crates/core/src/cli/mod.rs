//! Command-line front end.
//!
//! Exit status: 0 when every verdict is positive, 1 when one is negative,
//! 2 when one is inconclusive and none negative, 3 on usage or input errors.

pub mod dsl;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::catalog::{self, verify_paper, Scope, SubCheck, SystemId};
use crate::error::{Error, Result};
use crate::expr::{coeff, ConstraintSet, Poly, RatFn, DEFAULT_SEED};
use crate::invariance::{determining_system, lie_check, qcond_check, InvarianceReport, Mode, Verdict};
use crate::jet::PdeSystem;
use crate::reduction::{apply_ansatz, verify_reduction, Ansatz};
use crate::symmetry::{equivalent_families, equivalent_mod_group, indeps_of, is_involutive, OperatorFamily};
use dsl::Document;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

const USER: &str = "user input";

#[derive(Parser, Debug)]
#[command(
    name = "symcheck",
    version,
    about = "Exact Lie and conditional symmetry checks for PDE systems"
)]
struct Cli {
    /// Seed for the randomized zero test [env: SYMSEED]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Emit a JSON report instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Print structure functions, reduced equations and timings
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Input {
    /// DSL file
    file: Option<PathBuf>,
    /// Catalog system, theorem operator or reduction id
    #[arg(long)]
    catalog: Option<String>,
    /// Extra operator `NAME = expr` or bare `expr`
    #[arg(long = "op")]
    ops: Vec<String>,
    /// Extra function declaration `g(t, x2)`
    #[arg(long = "ufn")]
    ufns: Vec<String>,
    /// Extra side condition `lhs = rhs`
    #[arg(long = "constraint")]
    constraints: Vec<String>,
    /// Extra expression declared nonvanishing
    #[arg(long = "nonzero")]
    nonzero: Vec<String>,
    /// Families or operators to check, by name
    #[arg(long = "family")]
    families: Vec<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Lie,
    Qcond,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classical invariance of each operator
    CheckLie(Input),
    /// Conditional invariance of each family
    CheckQcond(Input),
    /// Involutivity of each family
    Involutive(Input),
    /// Whether two families are equivalent
    Equiv(Input),
    /// Whether the first family is equivalent to the image of the second
    EquivMod {
        #[command(flatten)]
        input: Input,
        /// Map declared with `map NAME: ...`
        #[arg(long)]
        map: String,
    },
    /// Substitute an ansatz and compare with the expected reduction
    Reduce(Input),
    /// Determining equations of an operator template
    Determining {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "lie")]
        mode: ModeArg,
    },
    /// Run the built-in verification suite
    PaperVerify {
        /// all, lie, theorem1, theorem2, theorem3-lie or lemmas
        scope: String,
    },
    /// Parse a DSL file and report errors
    ParseOnly { file: PathBuf },
}

/// Everything a command needs, from a file, a catalog id and flags.
struct Loaded {
    doc: Document,
    system: Option<PdeSystem>,
    /// Families from the catalog, with their provenance.
    catalog_families: Vec<(OperatorFamily, String)>,
    reduction: Option<catalog::ReductionCase>,
}

impl Loaded {
    fn system(&self) -> Result<&PdeSystem> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::Invalid("no system given: use `eq` statements or --catalog".into()))
    }

    fn constraints(&self) -> ConstraintSet {
        self.doc.constraints.clone()
    }

    /// The families to check, with provenance.
    fn families(&self, names: &[String]) -> Result<Vec<(OperatorFamily, String)>> {
        if !names.is_empty() {
            return names
                .iter()
                .map(|n| {
                    self.catalog_families
                        .iter()
                        .find(|(f, _)| f.name == *n)
                        .cloned()
                        .or_else(|| self.doc.family(n).map(|f| (f, USER.to_string())))
                        .ok_or_else(|| Error::Invalid(format!("no family or operator named `{n}`")))
                })
                .collect();
        }
        let mut out = self.catalog_families.clone();
        if self.doc.families.is_empty() {
            out.extend(
                self.doc
                    .ops
                    .iter()
                    .map(|q| (OperatorFamily::single(q.clone()), USER.to_string())),
            );
        } else {
            out.extend(self.doc.families.iter().map(|f| (f.clone(), USER.to_string())));
        }
        if out.is_empty() {
            return Err(Error::Invalid(
                "no operator given: use `op` statements, --op or --catalog".into(),
            ));
        }
        Ok(out)
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn load(input: &Input) -> Result<Loaded> {
    let mut doc = Document::default();
    let mut system = None;
    let mut catalog_families = Vec::new();
    let mut reduction = None;
    if let Some(id) = &input.catalog {
        if let Ok(sid) = SystemId::parse(id) {
            doc = Document::new(sid.context());
            system = Some(sid.system()?);
        } else if let Ok(op) = catalog::operator(id) {
            doc = Document::new(SystemId::parse(&op.system.id)?.context());
            doc.constraints = op.constraints.clone();
            doc.chart = op.chart.clone();
            catalog_families.push((op.family.clone().named(&op.id), op.paper_ref.clone()));
            system = Some(op.system);
        } else {
            let case = catalog::reduction_case(id)?;
            system = Some(case.system.clone());
            reduction = Some(case);
        }
    }
    if let Some(path) = &input.file {
        doc.extend(&read(path)?)?;
    }
    for u in &input.ufns {
        doc.statement_str(&format!("ufn {u}"))?;
    }
    for c in &input.constraints {
        doc.statement_str(&format!("constraint {c}"))?;
    }
    for n in &input.nonzero {
        doc.statement_str(&format!("nonzero {n}"))?;
    }
    for (i, o) in input.ops.iter().enumerate() {
        let named = match o.split_once('=') {
            Some((name, _)) if dsl_name(name.trim()) => o.clone(),
            _ => format!("Q{} = {o}", i + 1),
        };
        doc.statement_str(&format!("op {named}"))?;
    }
    if let Some(s) = doc.system()? {
        system = Some(s);
    }
    Ok(Loaded {
        doc,
        system,
        catalog_families,
        reduction,
    })
}

fn dsl_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic()) && cs.all(|c| c.is_ascii_alphanumeric())
}

trait Named {
    fn named(self, name: &str) -> Self;
}

impl Named for OperatorFamily {
    fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

fn sub_check(check: &str, paper_ref: &str, seed: u64) -> SubCheck {
    SubCheck {
        check: check.to_string(),
        paper_ref: paper_ref.to_string(),
        verdict: "pass".into(),
        residuals: Vec::new(),
        witness: None,
        seed,
    }
}

fn from_report(check: &str, paper_ref: &str, r: &InvarianceReport, seed: u64) -> SubCheck {
    let mut s = sub_check(check, paper_ref, seed);
    s.verdict = r.verdict.label().into();
    s.residuals = r.nonzero().map(|x| format!("{}: {}", x.label, x.value)).collect();
    match &r.verdict {
        Verdict::NotInvariant { witness } if !witness.is_empty() => {
            s.witness = Some(witness.iter().cloned().collect::<BTreeMap<_, _>>());
        }
        Verdict::Inconclusive(msg) => s.residuals.push(msg.clone()),
        _ => {}
    }
    s
}

/// Records an evaluation error as a failed or inconclusive check.
fn from_error(check: &str, paper_ref: &str, e: Error, seed: u64) -> SubCheck {
    let mut s = sub_check(check, paper_ref, seed);
    s.verdict = if matches!(e, Error::Inconclusive(_)) {
        "inconclusive"
    } else {
        "fail"
    }
    .into();
    s.residuals.push(e.to_string());
    s
}

fn verdict_check(check: &str, paper_ref: &str, r: Result<(bool, Vec<String>)>, seed: u64) -> SubCheck {
    match r {
        Ok((ok, detail)) => {
            let mut s = sub_check(check, paper_ref, seed);
            if !ok {
                s.verdict = "fail".into();
            }
            s.residuals = detail;
            s
        }
        Err(e) => from_error(check, paper_ref, e, seed),
    }
}

#[derive(Serialize)]
struct CommandReport<'a> {
    command: &'a str,
    seed: u64,
    checks: &'a [SubCheck],
}

fn exit_code(checks: &[SubCheck]) -> i32 {
    if checks.iter().any(|c| c.verdict == "fail") {
        EXIT_FAIL
    } else if checks.iter().any(|c| c.verdict == "inconclusive") {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_PASS
    }
}

fn print_checks(out: &mut dyn Write, command: &str, checks: &[SubCheck], info: &[String], json: bool, seed: u64) {
    if json {
        let r = CommandReport { command, seed, checks };
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&r).expect("report serializes"));
        return;
    }
    for line in info {
        let _ = writeln!(out, "{line}");
    }
    for c in checks {
        let _ = writeln!(out, "{}: {}", c.check, c.verdict);
        for r in &c.residuals {
            let _ = writeln!(out, "  {r}");
        }
        if let Some(w) = &c.witness {
            let pts: Vec<String> = w.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            let _ = writeln!(out, "  nonzero at {}", pts.join(", "));
        }
    }
}

struct Outcome {
    checks: Vec<SubCheck>,
    info: Vec<String>,
}

fn check_lie(l: &Loaded, names: &[String], seed: u64) -> Result<Outcome> {
    let sys = l.system()?;
    let mut checks = Vec::new();
    for (f, paper_ref) in l.families(names)? {
        for q in &f.members {
            let check = format!("lie:{}:{}", sys.id, q.name);
            checks.push(match lie_check(sys, q, &l.constraints(), seed) {
                Ok(r) => from_report(&check, &paper_ref, &r, seed),
                Err(e) => from_error(&check, &paper_ref, e, seed),
            });
        }
    }
    Ok(Outcome {
        checks,
        info: Vec::new(),
    })
}

fn check_qcond(l: &Loaded, names: &[String], seed: u64) -> Result<Outcome> {
    let sys = l.system()?;
    let mut checks = Vec::new();
    for (f, paper_ref) in l.families(names)? {
        let check = format!("qcond:{}:{}", sys.id, f.name);
        checks.push(match qcond_check(sys, &f, &l.constraints(), &l.doc.chart, seed) {
            Ok(r) => from_report(&check, &paper_ref, &r, seed),
            Err(e) => from_error(&check, &paper_ref, e, seed),
        });
    }
    Ok(Outcome {
        checks,
        info: Vec::new(),
    })
}

fn involutive(l: &Loaded, names: &[String], seed: u64, verbose: bool) -> Result<Outcome> {
    let indeps = match &l.system {
        Some(s) => indeps_of(&s.space),
        None => l.doc.indeps.iter().map(|s| crate::expr::name(s)).collect(),
    };
    let mut checks = Vec::new();
    let mut info = Vec::new();
    for (f, paper_ref) in l.families(names)? {
        let r = is_involutive(&f, &indeps, &l.constraints()).map(|z| {
            if let (Some(z), true) = (&z, verbose) {
                for ((s, p), row) in z {
                    let cs: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                    info.push(format!("{}: [Q{}, Q{}] = ({})", f.name, s + 1, p + 1, cs.join(", ")));
                }
            }
            let detail = if z.is_some() {
                Vec::new()
            } else {
                vec!["commutator leaves the span".to_string()]
            };
            (z.is_some(), detail)
        });
        checks.push(verdict_check(&format!("involutive:{}", f.name), &paper_ref, r, seed));
    }
    Ok(Outcome { checks, info })
}

fn two_families(l: &Loaded, names: &[String]) -> Result<[(OperatorFamily, String); 2]> {
    let fs = l.families(names)?;
    match <[(OperatorFamily, String); 2]>::try_from(fs) {
        Ok(pair) => Ok(pair),
        Err(v) => Err(Error::Invalid(format!(
            "expected exactly two families, found {}",
            v.len()
        ))),
    }
}

fn equiv(l: &Loaded, names: &[String], seed: u64) -> Result<Outcome> {
    let [(a, _), (b, _)] = two_families(l, names)?;
    let sys = l.system()?;
    let r = equivalent_families(&a, &b, &indeps_of(&sys.space), &l.constraints()).map(|ok| (ok, Vec::new()));
    Ok(Outcome {
        checks: vec![verdict_check(&format!("equiv:{}~{}", a.name, b.name), USER, r, seed)],
        info: Vec::new(),
    })
}

fn equiv_mod(l: &Loaded, names: &[String], map: &str, seed: u64) -> Result<Outcome> {
    let [(a, _), (b, _)] = two_families(l, names)?;
    let g = l
        .doc
        .map(map)
        .ok_or_else(|| Error::Invalid(format!("no map named `{map}`")))?;
    let sys = l.system()?;
    let r = equivalent_mod_group(&a, &b, g, &indeps_of(&sys.space), &l.constraints()).map(|ok| (ok, Vec::new()));
    Ok(Outcome {
        checks: vec![verdict_check(
            &format!("equiv-mod:{}~Ad({map}){}", a.name, b.name),
            USER,
            r,
            seed,
        )],
        info: Vec::new(),
    })
}

fn reduce(l: &Loaded, seed: u64) -> Result<Outcome> {
    let (sys, ansatz, expected, check, paper_ref): (&PdeSystem, Ansatz, Vec<RatFn>, String, String) =
        match (&l.reduction, l.doc.ansatz()) {
            (Some(case), _) => (
                &case.system,
                case.ansatz.clone(),
                case.expected.clone(),
                case.id.clone(),
                case.paper_ref.clone(),
            ),
            (None, Some(a)) => (l.system()?, a, l.doc.expect.clone(), "reduce:input".into(), USER.into()),
            (None, None) => {
                return Err(Error::Invalid(
                    "no ansatz given: use `set` statements or --catalog".into(),
                ))
            }
        };
    let mut info = Vec::new();
    let reduced = match apply_ansatz(sys, &ansatz) {
        Ok(r) => r,
        Err(e) => {
            return Ok(Outcome {
                checks: vec![from_error(&check, &paper_ref, e, seed)],
                info,
            })
        }
    };
    for r in &reduced {
        if !r.equation.is_zero() {
            info.push(format!("{} = 0", r.equation));
        }
    }
    let r = if expected.is_empty() {
        Ok((true, Vec::new()))
    } else {
        verify_reduction(sys, &ansatz, &expected).map(|ok| {
            let detail = if ok { Vec::new() } else { info.clone() };
            (ok, detail)
        })
    };
    Ok(Outcome {
        checks: vec![verdict_check(&check, &paper_ref, r, seed)],
        info,
    })
}

fn determining(l: &Loaded, names: &[String], mode: ModeArg, seed: u64) -> Result<Outcome> {
    let sys = l.system()?;
    let mut checks = Vec::new();
    let mut info = Vec::new();
    let m = match mode {
        ModeArg::Lie => Mode::Lie,
        ModeArg::Qcond => Mode::QCond,
    };
    for (f, paper_ref) in l.families(names)? {
        for q in &f.members {
            let check = format!("determining:{}:{}", sys.id, q.name);
            let r = determining_system(sys, q, m, &l.constraints(), &l.doc.chart).map(|eqs| {
                let lines: Vec<String> = eqs
                    .iter()
                    .map(|d| {
                        let mono = RatFn::from_poly(Poly::term(d.monomial.clone(), coeff(1)));
                        format!("[{mono}] {} = 0", d.coefficient)
                    })
                    .collect();
                info.extend(lines.iter().map(|s| format!("{}: {s}", q.name)));
                (eqs.is_empty(), lines)
            });
            checks.push(verdict_check(&check, &paper_ref, r, seed));
        }
    }
    Ok(Outcome { checks, info })
}

fn seed_from(flag: Option<u64>) -> std::result::Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("SYMSEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("SYMSEED must be an unsigned integer, found `{v}`")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Runs the tool on `argv` (including the program name), writing reports
/// to `out` and diagnostics to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_PASS {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let seed = match seed_from(cli.seed) {
        Ok(s) => s,
        Err(m) => {
            let _ = writeln!(err, "error: {m}");
            return EXIT_USAGE;
        }
    };
    let start = std::time::Instant::now();
    let (name, result) = match &cli.command {
        Command::PaperVerify { scope } => {
            let Some(sc) = Scope::parse(scope) else {
                let _ = writeln!(err, "error: unknown scope `{scope}`");
                return EXIT_USAGE;
            };
            let report = verify_paper(sc, seed);
            if cli.json {
                let _ = writeln!(out, "{}", report.to_json());
            } else {
                let _ = writeln!(out, "{report}");
            }
            return exit_code(&report.checks);
        }
        Command::ParseOnly { file } => {
            let r = read(file)
                .and_then(|s| Document::parse(&s))
                .and_then(|d| d.system().map(|s| (d, s)));
            return match r {
                Ok((d, s)) => {
                    if let Some(s) = s {
                        let _ = writeln!(out, "{s}");
                    }
                    let _ = writeln!(
                        out,
                        "{} equation(s), {} operator(s), {} family(ies), {} constraint(s)",
                        d.equations.len(),
                        d.ops.len(),
                        d.families.len(),
                        d.constraints.rules().len()
                    );
                    EXIT_PASS
                }
                Err(e) => {
                    let _ = writeln!(err, "{}: {e}", file.display());
                    EXIT_USAGE
                }
            };
        }
        Command::CheckLie(i) => ("check-lie", load(i).and_then(|l| check_lie(&l, &i.families, seed))),
        Command::CheckQcond(i) => ("check-qcond", load(i).and_then(|l| check_qcond(&l, &i.families, seed))),
        Command::Involutive(i) => (
            "involutive",
            load(i).and_then(|l| involutive(&l, &i.families, seed, cli.verbose)),
        ),
        Command::Equiv(i) => ("equiv", load(i).and_then(|l| equiv(&l, &i.families, seed))),
        Command::EquivMod { input, map } => (
            "equiv-mod",
            load(input).and_then(|l| equiv_mod(&l, &input.families, map, seed)),
        ),
        Command::Reduce(i) => ("reduce", load(i).and_then(|l| reduce(&l, seed))),
        Command::Determining { input, mode } => (
            "determining",
            load(input).and_then(|l| determining(&l, &input.families, *mode, seed)),
        ),
    };
    match result {
        Ok(o) => {
            let mut info = o.info;
            if cli.verbose {
                info.push(format!("elapsed {:?}", start.elapsed()));
            }
            print_checks(out, name, &o.checks, &info, cli.json, seed);
            exit_code(&o.checks)
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
