use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::theorems::generic_chart;
use super::{
    algebra, class2_ansatz, class3_ansatz, euler_ansatz, euler_operator, family_ansatz, lambda_mixing_chart, lhe,
    navier_stokes, qtilde0, qtilde1, qtilde2, system, ReductionCase, TheoremOperator,
};
use crate::error::{Error, Result};
use crate::expr::{ratio, RatFn, Symbol};
use crate::invariance::{lie_check, qcond_check, InvarianceReport, Verdict};
use crate::reduction::{phi_family, verify_reduction, PhiFamily};
use crate::symmetry::{flow, pushforward_family, Chart, OperatorFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    All,
    Lie,
    Theorem1,
    Theorem2,
    Theorem3Lie,
    Lemmas,
}

impl Scope {
    pub const ALL: [Scope; 6] = [
        Scope::All,
        Scope::Lie,
        Scope::Theorem1,
        Scope::Theorem2,
        Scope::Theorem3Lie,
        Scope::Lemmas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Lie => "lie",
            Scope::Theorem1 => "theorem1",
            Scope::Theorem2 => "theorem2",
            Scope::Theorem3Lie => "theorem3-lie",
            Scope::Lemmas => "lemmas",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Scope::ALL.into_iter().find(|x| x.name() == s)
    }

    fn includes(self, part: Scope) -> bool {
        self == Scope::All || self == part
    }
}

/// One line of a report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubCheck {
    pub check: String,
    pub paper_ref: String,
    pub verdict: String,
    pub residuals: Vec<String>,
    pub witness: Option<BTreeMap<String, String>>,
    pub seed: u64,
}

impl SubCheck {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PaperReport {
    pub scope: String,
    pub seed: u64,
    pub checks: Vec<SubCheck>,
    pub not_verified: Vec<String>,
}

impl PaperReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(SubCheck::passed)
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == "fail")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for PaperReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<13} {}  [{}]", c.verdict, c.check, c.paper_ref)?;
            for r in &c.residuals {
                writeln!(f, "              {r}")?;
            }
        }
        for n in &self.not_verified {
            writeln!(f, "cited        {n}")?;
        }
        let pass = self.checks.iter().filter(|c| c.passed()).count();
        write!(f, "{pass}/{} sub-checks pass (seed {})", self.checks.len(), self.seed)
    }
}

#[derive(Default)]
struct Tally {
    fail: bool,
    inconclusive: bool,
    residuals: Vec<String>,
    witness: Option<BTreeMap<String, String>>,
}

impl Tally {
    fn report(&mut self, r: &InvarianceReport) {
        match &r.verdict {
            Verdict::Invariant => {}
            Verdict::NotInvariant { witness } => {
                self.fail = true;
                for res in r.nonzero() {
                    self.residuals
                        .push(format!("{} / {}: {}", r.system, res.label, res.value));
                }
                if self.witness.is_none() && !witness.is_empty() {
                    self.witness = Some(witness.iter().cloned().collect());
                }
            }
            Verdict::Inconclusive(why) => {
                self.inconclusive = true;
                self.residuals.push(format!("{} / {}: {why}", r.system, r.family));
            }
        }
    }

    fn outcome(&mut self, what: &str, r: Result<InvarianceReport>) {
        match r {
            Ok(r) => self.report(&r),
            Err(e) => self.error(what, e),
        }
    }

    fn expect(&mut self, what: &str, r: Result<bool>) {
        match r {
            Ok(true) => {}
            Ok(false) => {
                self.fail = true;
                self.residuals.push(format!("{what}: mismatch"));
            }
            Err(e) => self.error(what, e),
        }
    }

    fn error(&mut self, what: &str, e: Error) {
        if matches!(e, Error::Inconclusive(_)) {
            self.inconclusive = true;
        } else {
            self.fail = true;
        }
        self.residuals.push(format!("{what}: {e}"));
    }

    fn finish(self, check: &str, paper_ref: &str, seed: u64) -> SubCheck {
        let verdict = if self.fail {
            "fail"
        } else if self.inconclusive {
            "inconclusive"
        } else {
            "pass"
        };
        SubCheck {
            check: check.to_string(),
            paper_ref: paper_ref.to_string(),
            verdict: verdict.to_string(),
            residuals: self.residuals,
            witness: self.witness,
            seed,
        }
    }
}

type Task = Box<dyn Fn(u64) -> SubCheck + Send + Sync>;

fn failed_setup(check: &str, paper_ref: &str, e: Error, seed: u64) -> SubCheck {
    let mut t = Tally::default();
    t.error("setup", e);
    t.finish(check, paper_ref, seed)
}

fn lie_tasks(out: &mut Vec<Task>, id: &'static str, prefix: &'static str, paper_ref: &'static str) {
    let names: Vec<String> = match algebra(id) {
        Ok(gs) => gs.into_iter().map(|g| g.field.name).collect(),
        Err(e) => {
            out.push(Box::new(move |seed| {
                failed_setup(&format!("{prefix}:{id}"), paper_ref, e.clone(), seed)
            }));
            return;
        }
    };
    for name in names {
        out.push(Box::new(move |seed| {
            let check = format!("{prefix}:{id}:{name}");
            let mut t = Tally::default();
            let run = || -> Result<InvarianceReport> {
                let sys = system(id)?;
                let g = algebra(id)?
                    .into_iter()
                    .find(|g| g.field.name == name)
                    .ok_or_else(|| Error::UnknownId(name.clone()))?;
                lie_check(&sys, &g.field, &g.constraints, seed)
            };
            t.outcome(&name, run());
            t.finish(&check, paper_ref, seed)
        }));
    }
}

fn qcond(t: &mut Tally, op: &TheoremOperator, seed: u64) {
    t.outcome(
        &op.id,
        qcond_check(&op.system, &op.family, &op.constraints, &op.chart, seed),
    );
}

fn reduction(t: &mut Tally, case: Result<ReductionCase>) {
    match case {
        Ok(c) => t.expect(&c.id, verify_reduction(&c.system, &c.ansatz, &c.expected)),
        Err(e) => t.error("ansatz", e),
    }
}

const DIMS: [usize; 2] = [2, 3];

fn theorem1_tasks(out: &mut Vec<Task>) {
    out.push(Box::new(|seed| {
        let mut t = Tally::default();
        for n in DIMS {
            match qtilde0(n) {
                Ok(ops) => ops.iter().for_each(|op| qcond(&mut t, op, seed)),
                Err(e) => t.error("setup", e),
            }
        }
        t.finish("thm1:Qtilde0", "Lie generators with nonzero xi, heat equation", seed)
    }));
    out.push(Box::new(|seed| {
        let mut t = Tally::default();
        for n in DIMS {
            match qtilde1(n) {
                Ok(op) => qcond(&mut t, &op, seed),
                Err(e) => t.error("setup", e),
            }
        }
        t.finish("thm1:Qtilde1", "Q = d_n + (g_n/g) u d_u, g_t = g_nn", seed)
    }));
    out.push(Box::new(|seed| {
        let mut t = Tally::default();
        for n in DIMS {
            match qtilde2(n) {
                Ok(op) => qcond(&mut t, &op, seed),
                Err(e) => t.error("setup", e),
            }
        }
        t.finish(
            "thm1:Qtilde2",
            "Q = d_theta + phi(theta) u d_u, phi'' + 2 phi phi' = 0",
            seed,
        )
    }));
    out.push(Box::new(|seed| {
        let mut t = Tally::default();
        DIMS.into_iter().for_each(|n| reduction(&mut t, class2_ansatz(n)));
        t.finish("thm1:class2", "u = g(t, x_n) v, v_t = v_ii", seed)
    }));
    out.push(Box::new(|seed| {
        let mut t = Tally::default();
        DIMS.into_iter().for_each(|n| reduction(&mut t, class3_ansatz(n)));
        t.finish(
            "thm1:class3",
            "u = exp(int phi) v, v_t = v_rr + v_r/r - lambda v/r^2 + v_ss",
            seed,
        )
    }));
    for fam in PhiFamily::ALL {
        out.push(Box::new(move |seed| {
            let mut t = Tally::default();
            let kappa = RatFn::symbol(Symbol::param("kappa"));
            t.expect("certificates", phi_family(fam, &kappa).map(|_| true));
            DIMS.into_iter()
                .for_each(|n| reduction(&mut t, family_ansatz(n, fam, &kappa)));
            let paper_ref = match fam {
                PhiFamily::A => "phi = -kappa tan(kappa theta), lambda = kappa^2",
                PhiFamily::B => "phi = kappa tanh(kappa theta), lambda = -kappa^2",
                PhiFamily::C => "phi = kappa coth(kappa theta), lambda = -kappa^2",
                PhiFamily::D => "phi = 1/theta, lambda = 0",
            };
            t.finish(&format!("thm1:Qtilde2:family={}", fam.id()), paper_ref, seed)
        }));
    }
}

fn theorem2_tasks(out: &mut Vec<Task>) {
    out.push(Box::new(|seed| {
        let mut t = Tally::default();
        match euler_operator() {
            Ok(op) => qcond(&mut t, &op, seed),
            Err(e) => t.error("setup", e),
        }
        t.finish(
            "thm2:Qtilde",
            "Q = d_3 + zeta d_u3 + chi x3 d_p, zeta_3 + zeta zeta_u3 = 0, zeta_t - (u3 zeta + chi x3) zeta_u3 + zeta^2 + chi = 0",
            seed,
        )
    }));
    out.push(Box::new(|seed| {
        let mut t = Tally::default();
        reduction(&mut t, euler_ansatz());
        t.finish("thm2:reduction", "u3 = x3 v3 + psi(t, v3), p = q + chi x3^2/2", seed)
    }));
}

type Builder = fn() -> Result<TheoremOperator>;

/// Operator families used for the closure properties.
fn closure_families() -> Vec<(&'static str, Builder)> {
    vec![
        ("thm1:Qtilde1:n=2", || qtilde1(2)),
        ("thm1:Qtilde1:n=3", || qtilde1(3)),
        ("thm1:Qtilde2:n=2", || qtilde2(2)),
        ("thm1:Qtilde2:n=3", || qtilde2(3)),
        ("thm2:Qtilde", euler_operator),
        ("lhe:n=2:{dt,d1}", translations),
    ]
}

/// The two-member family `{d/dt, d/dx1}` on the planar heat equation.
fn translations() -> Result<TheoremOperator> {
    let gens = algebra("lhe:n=2")?;
    let pick = |n: &str| gens.iter().find(|g| g.field.name == n).map(|g| g.field.clone());
    let members = vec![pick("dt").expect("dt"), pick("d1").expect("d1")];
    Ok(TheoremOperator {
        id: "lhe:n=2:{dt,d1}".into(),
        paper_ref: "two-member family of translations".into(),
        system: lhe(2)?,
        family: OperatorFamily::new("{dt,d1}", members),
        constraints: Default::default(),
        chart: Chart::new(),
        closure: gens,
    })
}

pub const MIXINGS: u64 = 20;

/// Rational parameters for the adjoint closure, besides the symbolic one.
pub fn closure_parameters() -> Vec<RatFn> {
    vec![
        RatFn::symbol(Symbol::param("eps")),
        RatFn::constant(ratio(1, 2)),
        RatFn::constant(ratio(-1, 3)),
        RatFn::constant(ratio(2, 1)),
    ]
}

fn mixing_vars(op: &TheoremOperator) -> Vec<Symbol> {
    let mut v = vec![Symbol::indep(&op.system.space.indeps[1])];
    v.push(Symbol::dep(&op.system.space.deps[0]));
    v
}

/// `lambda`-mixed copies of `op` pass the conditional check.
pub fn mixing_closure(op: &TheoremOperator, seed: u64, k: u64) -> Result<InvarianceReport> {
    let (lambda, ch) = lambda_mixing_chart(seed.wrapping_add(k), op.family.len(), &mixing_vars(op))?;
    let mixed = op.family.mixed(&lambda);
    qcond_check(&op.system, &mixed, &op.constraints, &op.chart.merged(&ch), seed)
}

/// The image of `op` under the flow of generator `g` at `eps` passes the
/// conditional check.
pub fn adjoint_closure(op: &TheoremOperator, g: usize, eps: &RatFn, seed: u64) -> Result<InvarianceReport> {
    let gen = &op.closure[g];
    let map = flow(&gen.field, eps)?;
    let image = pushforward_family(&map, &op.family)?;
    let c = op.constraints.merged(&gen.constraints);
    let ch = op.chart.merged(&generic_chart(gen, eps)?);
    qcond_check(&op.system, &image, &c, &ch, seed)
}

fn lemma_tasks(out: &mut Vec<Task>) {
    for (id, make) in closure_families() {
        out.push(Box::new(move |seed| {
            let mut t = Tally::default();
            match make() {
                Ok(op) => (0..MIXINGS).for_each(|k| t.outcome(&format!("mixing {k}"), mixing_closure(&op, seed, k))),
                Err(e) => t.error("setup", e),
            }
            t.finish(&format!("lemma:mixing:{id}"), "Q ~ lambda Q, det lambda != 0", seed)
        }));
        let count = make().map(|op| op.closure.len()).unwrap_or(0);
        for g in 0..count {
            out.push(Box::new(move |seed| {
                let mut t = Tally::default();
                let mut name = format!("#{g}");
                match make() {
                    Ok(op) => {
                        name = op.closure[g].field.name.clone();
                        for eps in closure_parameters() {
                            t.outcome(&format!("eps = {eps}"), adjoint_closure(&op, g, &eps, seed));
                        }
                    }
                    Err(e) => t.error("setup", e),
                }
                t.finish(&format!("lemma:adjoint:{id}:{name}"), "Q ~ Ad(exp(eps V)) Q", seed)
            }));
        }
    }
}

fn not_verified(scope: Scope) -> Vec<String> {
    let mut v = Vec::new();
    if scope.includes(Scope::Theorem1) {
        v.push("heat equation: completeness of the conditional-operator classification (cited, not verified)".into());
    }
    if scope.includes(Scope::Theorem2) {
        v.push("Euler equations: completeness of the conditional-operator classification (cited, not verified)".into());
    }
    if scope.includes(Scope::Theorem3Lie) {
        v.push("Navier-Stokes equations: absence of non-Lie conditional operators (cited, not verified)".into());
        v.push("Navier-Stokes equations: maximality of the listed algebra (cited, not verified)".into());
    }
    v
}

/// Runs every check in `scope` concurrently; the report order is fixed.
pub fn verify_paper(scope: Scope, seed: u64) -> PaperReport {
    let mut tasks: Vec<Task> = Vec::new();
    if scope.includes(Scope::Lie) {
        for id in ["lhe:n=1", "lhe:n=2", "lhe:n=3"] {
            lie_tasks(&mut tasks, id, "lie", "Lie generator of the heat equation");
        }
        lie_tasks(&mut tasks, "euler", "lie", "Lie generator of the Euler equations");
    }
    if scope.includes(Scope::Theorem1) {
        theorem1_tasks(&mut tasks);
    }
    if scope.includes(Scope::Theorem2) {
        theorem2_tasks(&mut tasks);
    }
    if scope.includes(Scope::Theorem3Lie) {
        if let Err(e) = navier_stokes(None) {
            tasks.push(Box::new(move |seed| failed_setup("thm3:lie", "A(NS)", e.clone(), seed)));
        } else {
            lie_tasks(&mut tasks, "ns", "thm3:lie", "A(NS) generator, symbolic nu");
        }
    }
    if scope.includes(Scope::Lemmas) {
        lemma_tasks(&mut tasks);
    }
    let checks: Vec<SubCheck> = tasks.par_iter().map(|t| t(seed)).collect();
    PaperReport {
        scope: scope.name().to_string(),
        seed,
        checks,
        not_verified: not_verified(scope),
    }
}
