//! Lowering circuits to step programs.
//!
//! Three backends share the per-gate tables in [`lower_gate`]:
//!
//! * `formula`: (2,0) rules, one copy of everything, formulas only.
//! * `exp`: (2,0) rules, every addition for gate `g` scaled by its demand.
//! * `catalyst`: (2,0) and (2,1) rules, `dx`/`dy` deleters clean each level.
//!
//! A level's steps are its gate phases followed by the conversion of the
//! level's outputs into input species for the next level.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, DemandMap, GateId, GateKind};
use crate::crn::{Alphabet, Configuration, Rule, RuleFamily, SpeciesName};
use crate::engine::{EngineError, InputEncoding, OutputDecoding, RunResult, StepProgram};

/// Bound constants checked against every compiled program.
pub const SPECIES_FACTOR: u64 = 8;
pub const VOLUME_FACTOR: u64 = 8;
pub const RESIDENT_FACTOR: u64 = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("circuit `{0}` is not a formula")]
    NotFormula(String),
    #[error("gate kind {0} has no lowering")]
    UnsupportedKind(GateKind),
    #[error("multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("species counts for gate {0} overflow")]
    CountOverflow(GateId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Formula,
    Exp,
    Catalyst,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Formula, Backend::Exp, Backend::Catalyst];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Formula => "formula",
            Backend::Exp => "exp",
            Backend::Catalyst => "catalyst",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "formula" => Ok(Backend::Formula),
            "exp" => Ok(Backend::Exp),
            "catalyst" => Ok(Backend::Catalyst),
            _ => Err(format!("unknown backend `{s}` (formula, exp, catalyst)")),
        }
    }
}

/// A rule over structured species names, before an alphabet exists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleSpec {
    pub reactants: Vec<SpeciesName>,
    pub products: Vec<SpeciesName>,
}

impl RuleSpec {
    fn void(a: SpeciesName, b: SpeciesName) -> Self {
        RuleSpec {
            reactants: vec![a, b],
            products: vec![],
        }
    }

    fn catalytic(catalyst: SpeciesName, target: SpeciesName) -> Self {
        RuleSpec {
            reactants: vec![catalyst, target],
            products: vec![catalyst],
        }
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[SpeciesName]| {
            if v.is_empty() {
                ".".to_string()
            } else {
                v.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" + ")
            }
        };
        write!(f, "{} -> {}", join(&self.reactants), join(&self.products))
    }
}

/// Additions and rules for one gate. `phases[k]` is added in the level's
/// `k`-th gate step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateLowering {
    pub phases: Vec<Vec<(SpeciesName, u64)>>,
    pub rules: Vec<RuleSpec>,
}

impl GateLowering {
    pub fn steps_used(&self) -> usize {
        self.phases.len()
    }

    /// All phases merged, in order of first appearance.
    pub fn additions(&self) -> Vec<(SpeciesName, u64)> {
        let mut out: Vec<(SpeciesName, u64)> = Vec::new();
        for (s, n) in self.phases.iter().flatten() {
            match out.iter_mut().find(|(t, _)| t == s) {
                Some(e) => e.1 += n,
                None => out.push((*s, *n)),
            }
        }
        out
    }
}

/// Distinct fan-in ids in first-occurrence order, with slot counts.
fn slots(fan_in: &[GateId]) -> Vec<(GateId, u64)> {
    let mut out: Vec<(GateId, u64)> = Vec::new();
    for &j in fan_in {
        match out.iter_mut().find(|(k, _)| *k == j) {
            Some(e) => e.1 += 1,
            None => out.push((j, 1)),
        }
    }
    out
}

pub fn lower_gate(
    kind: GateKind,
    i: GateId,
    fan_in: &[GateId],
    m: u64,
) -> Result<GateLowering, CompileError> {
    lower_gate_with(kind, i, fan_in, m, false)
}

/// With `intake`, a MAJ gate first claims exactly `slots * m` copies of each
/// input through per-wire species `y[j->i]`, so producers that also feed
/// other gates cannot over-supply its shared `a` species.
pub fn lower_gate_with(
    kind: GateKind,
    i: GateId,
    fan_in: &[GateId],
    m: u64,
    intake: bool,
) -> Result<GateLowering, CompileError> {
    use SpeciesName::*;
    if m == 0 {
        return Err(CompileError::ZeroMultiplicity);
    }
    let mul = |a: u64, b: u64| a.checked_mul(b).ok_or(CompileError::CountOverflow(i));
    let inputs = slots(fan_in);
    let mut rules = Vec::new();
    let phases = match kind {
        GateKind::And | GateKind::Or => {
            let and = kind == GateKind::And;
            let mut add = vec![(Y(i, and), m)];
            for &(j, k) in &inputs {
                add.push((YWire(j, i, !and), mul(k, m)?));
                if and {
                    rules.push(RuleSpec::void(X(j, true), YWire(j, i, false)));
                    rules.push(RuleSpec::void(X(j, false), Y(i, true)));
                } else {
                    rules.push(RuleSpec::void(X(j, true), Y(i, false)));
                    rules.push(RuleSpec::void(X(j, false), YWire(j, i, true)));
                }
            }
            vec![add]
        }
        GateKind::Not => {
            if fan_in.len() != 1 {
                return Err(CircuitError::Arity {
                    gate: i,
                    kind,
                    fan_in: fan_in.len(),
                    expected: "exactly 1",
                }
                .into());
            }
            let j = fan_in[0];
            rules.push(RuleSpec::void(X(j, true), Y(i, true)));
            rules.push(RuleSpec::void(X(j, false), Y(i, false)));
            vec![vec![(Y(i, true), m), (Y(i, false), m)]]
        }
        GateKind::Maj => {
            let n = fan_in.len() as u64;
            let padded = if n.is_multiple_of(2) { n + 1 } else { n };
            let half = padded / 2;
            let mut phases = Vec::new();
            if intake {
                let mut claim = Vec::new();
                for &(j, k) in &inputs {
                    claim.push((YWire(j, i, true), mul(k, m)?));
                    claim.push((YWire(j, i, false), mul(k, m)?));
                    rules.push(RuleSpec::void(X(j, true), YWire(j, i, false)));
                    rules.push(RuleSpec::void(X(j, false), YWire(j, i, true)));
                }
                phases.push(claim);
            }
            for &(j, _) in &inputs {
                let (t, f) = if intake {
                    (YWire(j, i, true), YWire(j, i, false))
                } else {
                    (X(j, true), X(j, false))
                };
                rules.push(RuleSpec::void(t, A(i, false)));
                rules.push(RuleSpec::void(f, A(i, true)));
            }
            rules.push(RuleSpec::void(A(i, true), B(i, false)));
            rules.push(RuleSpec::void(A(i, false), B(i, true)));
            rules.push(RuleSpec::void(A(i, true), Y(i, false)));
            rules.push(RuleSpec::void(A(i, false), Y(i, true)));
            phases.push(vec![
                (A(i, true), mul(n, m)?),
                (A(i, false), mul(padded, m)?),
            ]);
            let b = mul(half, m)?;
            phases.push(if b > 0 {
                vec![(B(i, true), b), (B(i, false), b)]
            } else {
                vec![]
            });
            phases.push(vec![(Y(i, true), m), (Y(i, false), m)]);
            phases
        }
        GateKind::Input | GateKind::ConstZero | GateKind::ConstOne => {
            return Err(CompileError::UnsupportedKind(kind));
        }
    };
    Ok(GateLowering { phases, rules })
}

/// Output species a gate's lowering leaves behind, true polarity first.
fn output_species(kind: GateKind, i: GateId, fan_in: &[GateId], intake: bool) -> Vec<SpeciesName> {
    use SpeciesName::*;
    let distinct: Vec<GateId> = slots(fan_in).into_iter().map(|(j, _)| j).collect();
    match kind {
        GateKind::And => std::iter::once(Y(i, true))
            .chain(distinct.iter().map(|&j| YWire(j, i, false)))
            .collect(),
        GateKind::Or => distinct
            .iter()
            .map(|&j| YWire(j, i, true))
            .chain(std::iter::once(Y(i, false)))
            .collect(),
        GateKind::Maj if intake => vec![Y(i, true), Y(i, false)],
        _ => vec![Y(i, true), Y(i, false)],
    }
}

/// Conversion of gate `i`'s output species into `copies` input species per
/// polarity. Catalytic conversion keeps the output species.
fn conversion(
    kind: GateKind,
    i: GateId,
    fan_in: &[GateId],
    intake: bool,
    copies: u64,
    catalytic: bool,
) -> GateLowering {
    use SpeciesName::*;
    let rules = output_species(kind, i, fan_in, intake)
        .into_iter()
        .map(|y| {
            let target = X(i, !y.value().unwrap());
            if catalytic {
                RuleSpec::catalytic(y, target)
            } else {
                RuleSpec::void(y, target)
            }
        })
        .collect();
    GateLowering {
        phases: vec![vec![(X(i, true), copies), (X(i, false), copies)]],
        rules,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub species: u64,
    pub steps: u64,
    /// Static volume bound for the (2,0) backends, per-level resident volume
    /// bound for the catalyst backend.
    pub volume: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompilationReport {
    pub backend: Backend,
    pub circuit: String,
    pub gates: usize,
    pub sources: usize,
    pub depth: usize,
    pub max_fan_out: usize,
    pub width: usize,
    pub species_count: usize,
    pub rule_count: usize,
    pub step_count: usize,
    pub static_volume: u64,
    pub buffers_inserted: usize,
    pub intake_gates: usize,
    pub input_multiplicity: BTreeMap<GateId, u64>,
    pub max_input_multiplicity: u64,
    pub bounds: Bounds,
    pub demand: DemandMap,
}

impl CompilationReport {
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| writeln!(out, "{k}={v}").unwrap();
        kv("backend", &self.backend);
        kv("circuit", &self.circuit);
        kv("gates", &self.gates);
        kv("sources", &self.sources);
        kv("depth", &self.depth);
        kv("max_fan_out", &self.max_fan_out);
        kv("width", &self.width);
        kv("species_count", &self.species_count);
        kv("rule_count", &self.rule_count);
        kv("step_count", &self.step_count);
        kv("static_volume", &self.static_volume);
        kv("buffers_inserted", &self.buffers_inserted);
        kv("intake_gates", &self.intake_gates);
        kv("max_input_multiplicity", &self.max_input_multiplicity);
        kv("bound.species", &self.bounds.species);
        kv("bound.steps", &self.bounds.steps);
        kv("bound.volume", &self.bounds.volume);
        for (g, m) in &self.input_multiplicity {
            kv(&format!("input_multiplicity.{g}"), m);
        }
        for (g, d) in &self.demand.demand {
            kv(&format!("demand.{g}"), d);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A compiled program together with the circuit it was built from (after
/// level alignment, for the catalyst backend) and the level each step
/// belongs to.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub program: StepProgram,
    pub report: CompilationReport,
    pub circuit: Circuit,
    pub step_level: Vec<usize>,
}

impl Compiled {
    /// Largest terminal volume among the steps of each level.
    pub fn resident_volumes(&self, run: &RunResult) -> Vec<u64> {
        let levels = self.step_level.iter().copied().max().map_or(0, |d| d + 1);
        let mut out = vec![0u64; levels];
        for (k, c) in run.per_step_terminal.iter().enumerate() {
            let l = self.step_level[k];
            out[l] = out[l].max(c.volume());
        }
        out
    }
}

#[derive(Default)]
struct Builder {
    names: Vec<SpeciesName>,
    index: HashMap<SpeciesName, usize>,
    rules: Vec<RuleSpec>,
    seen_rules: HashSet<RuleSpec>,
    steps: Vec<Vec<(SpeciesName, u64)>>,
    step_level: Vec<usize>,
}

impl Builder {
    fn species(&mut self, s: SpeciesName) -> usize {
        if let Some(&i) = self.index.get(&s) {
            return i;
        }
        self.index.insert(s, self.names.len());
        self.names.push(s);
        self.names.len() - 1
    }

    fn rule(&mut self, r: RuleSpec) {
        for &s in r.reactants.iter().chain(&r.products) {
            self.species(s);
        }
        if self.seen_rules.insert(r.clone()) {
            self.rules.push(r);
        }
    }

    fn open_steps(&mut self, count: usize, level: usize) -> usize {
        let first = self.steps.len();
        for _ in 0..count {
            self.steps.push(Vec::new());
            self.step_level.push(level);
        }
        first
    }

    fn add(&mut self, step: usize, s: SpeciesName, n: u64) {
        self.species(s);
        match self.steps[step].iter_mut().find(|(t, _)| *t == s) {
            Some(e) => e.1 += n,
            None => self.steps[step].push((s, n)),
        }
    }

    fn merge(&mut self, first_step: usize, lowering: GateLowering) {
        for (k, phase) in lowering.phases.into_iter().enumerate() {
            for (s, n) in phase {
                self.add(first_step + k, s, n);
            }
        }
        for r in lowering.rules {
            self.rule(r);
        }
    }
}

struct Plan<'a> {
    circuit: &'a Circuit,
    /// Copies of each gate's output species.
    mult: Vec<u64>,
    /// Copies of each gate's input species made available to consumers.
    copies: Vec<u64>,
    catalytic: bool,
}

impl Plan<'_> {
    fn intake(&self, i: usize) -> bool {
        let c = self.circuit;
        if c.gate(i).kind != GateKind::Maj {
            return false;
        }
        let fanin = c.fanin(i);
        slots(&fanin.iter().map(|&j| j as GateId).collect::<Vec<_>>())
            .into_iter()
            .any(|(j, k)| self.copies[j as usize] > k * self.mult[i])
    }

    fn fan_in_ids(&self, i: usize) -> Vec<GateId> {
        self.circuit.gate(i).inputs.clone()
    }
}

fn build(
    plan: Plan<'_>,
    backend: Backend,
    demand: DemandMap,
    buffers: usize,
) -> Result<Compiled, CompileError> {
    use SpeciesName::*;
    let c = plan.circuit;
    let levels = c.levels();
    let mut b = Builder::default();
    let intake: Vec<bool> = (0..c.gates().len()).map(|i| plan.intake(i)).collect();

    let fan_out_steps =
        |b: &mut Builder, level: usize, gates: &[usize]| -> Result<(), CompileError> {
            if plan.catalytic {
                let s = b.open_steps(5, level);
                b.add(s, Dx, 1);
                b.add(s + 1, Dx, 1);
                b.rule(RuleSpec::void(Dx, Dx));
                for &i in gates {
                    let g = c.gate(i);
                    let conv = if g.kind.is_source() {
                        source_conversion(g.id, plan.copies[i], true)
                    } else {
                        conversion(g.kind, g.id, &g.inputs, intake[i], plan.copies[i], true)
                    };
                    b.merge(s + 2, conv);
                }
                b.add(s + 3, Dy, 1);
                b.add(s + 4, Dy, 1);
                b.rule(RuleSpec::void(Dy, Dy));
            } else {
                let s = b.open_steps(1, level);
                for &i in gates {
                    let g = c.gate(i);
                    let conv = if g.kind.is_source() {
                        source_conversion(g.id, plan.copies[i], false)
                    } else {
                        conversion(g.kind, g.id, &g.inputs, intake[i], plan.copies[i], false)
                    };
                    b.merge(s, conv);
                }
            }
            Ok(())
        };

    // Source output species exist before any step so that their alphabet
    // position is stable.
    let mut encodings = Vec::new();
    for &i in &levels[0] {
        let g = c.gate(i);
        b.species(Y(g.id, true));
        b.species(Y(g.id, false));
    }
    fan_out_steps(&mut b, 0, &levels[0])?;

    for (level, gates) in levels.iter().enumerate().skip(1) {
        let lowerings: Vec<GateLowering> = gates
            .iter()
            .map(|&i| {
                let g = c.gate(i);
                lower_gate_with(g.kind, g.id, &plan.fan_in_ids(i), plan.mult[i], intake[i])
            })
            .collect::<Result<_, _>>()?;
        let phases = lowerings
            .iter()
            .map(GateLowering::steps_used)
            .max()
            .unwrap_or(0);
        let first = b.open_steps(phases, level);
        for l in lowerings {
            b.merge(first, l);
        }
        fan_out_steps(&mut b, level, gates)?;
    }

    if plan.catalytic {
        let targets: Vec<SpeciesName> = b
            .names
            .iter()
            .copied()
            .filter(|s| matches!(s, X(..) | A(..) | B(..)))
            .collect();
        for s in targets {
            b.rule(RuleSpec::catalytic(Dx, s));
        }
        let targets: Vec<SpeciesName> = b
            .names
            .iter()
            .copied()
            .filter(|s| matches!(s, Y(..) | YWire(..)))
            .collect();
        for s in targets {
            b.rule(RuleSpec::catalytic(Dy, s));
        }
    }

    let alphabet = Alphabet::new(b.names.iter().map(ToString::to_string))
        .expect("compiler species names are unique and well formed");
    let id = |s: SpeciesName| b.index[&s];
    let rules: Vec<Rule> = b
        .rules
        .iter()
        .map(|r| {
            let re: Vec<usize> = r.reactants.iter().map(|&s| id(s)).collect();
            let pr: Vec<usize> = r.products.iter().map(|&s| id(s)).collect();
            Rule::from_species(&re, &pr).expect("compiler rules have reactants")
        })
        .collect();
    let mut steps: Vec<Configuration> = b
        .steps
        .iter()
        .map(|st| {
            let sparse: Vec<(usize, u64)> = st.iter().map(|&(s, n)| (id(s), n)).collect();
            Configuration::from_sparse(alphabet.len(), &sparse)
        })
        .collect();

    let mut input_multiplicity = BTreeMap::new();
    for &i in &levels[0] {
        let g = c.gate(i);
        let m = plan.mult[i];
        match g.kind {
            GateKind::Input => {
                input_multiplicity.insert(g.id, m);
                encodings.push((
                    c.input_indices().iter().position(|&k| k == i).unwrap(),
                    InputEncoding {
                        gate: g.id,
                        zero: vec![(id(Y(g.id, false)), m)],
                        one: vec![(id(Y(g.id, true)), m)],
                    },
                ));
            }
            GateKind::ConstZero | GateKind::ConstOne => {
                let s = id(Y(g.id, g.kind == GateKind::ConstOne));
                steps[0].counts_mut()[s] += m;
            }
            _ => unreachable!("level 0 holds only sources"),
        }
    }
    encodings.sort_by_key(|(pos, _)| *pos);
    let inputs: Vec<InputEncoding> = encodings.into_iter().map(|(_, e)| e).collect();
    let outputs = c
        .outputs()
        .iter()
        .map(|&o| OutputDecoding {
            gate: o,
            zero: id(X(o, false)),
            one: id(X(o, true)),
        })
        .collect();

    let program = StepProgram::new(alphabet, rules, steps, inputs, outputs)?;
    let stats = c.stats();
    let g_total = stats.total_gates() as u64;
    let d = stats.depth as u64;
    let bounds = match backend {
        Backend::Formula => Bounds {
            species: SPECIES_FACTOR * g_total,
            steps: 4 * d + 2,
            volume: VOLUME_FACTOR * g_total,
        },
        Backend::Exp => Bounds {
            species: SPECIES_FACTOR * g_total,
            steps: 5 * d + 2,
            volume: (stats.max_fan_out as u64)
                .checked_pow(stats.depth as u32)
                .and_then(|p| p.checked_mul(VOLUME_FACTOR * g_total))
                .unwrap_or(u64::MAX),
        },
        Backend::Catalyst => Bounds {
            species: SPECIES_FACTOR * g_total,
            steps: 10 * d + 5,
            volume: RESIDENT_FACTOR * stats.width_with_sources as u64,
        },
    };
    let report = CompilationReport {
        backend,
        circuit: c.name().to_string(),
        gates: stats.gates,
        sources: stats.sources,
        depth: stats.depth,
        max_fan_out: stats.max_fan_out,
        width: stats.width_with_sources,
        species_count: program.alphabet().len(),
        rule_count: program.rules().len(),
        step_count: program.step_count(),
        static_volume: program.static_volume(),
        buffers_inserted: buffers,
        intake_gates: intake.iter().filter(|&&x| x).count(),
        max_input_multiplicity: input_multiplicity.values().copied().max().unwrap_or(0),
        input_multiplicity,
        bounds,
        demand,
    };
    Ok(Compiled {
        program,
        report,
        circuit: c.clone(),
        step_level: b.step_level,
    })
}

fn source_conversion(i: GateId, copies: u64, catalytic: bool) -> GateLowering {
    conversion(GateKind::Not, i, &[], false, copies, catalytic)
}

/// (2,0) program for a threshold formula with one copy of each species.
pub fn compile_formula(c: &Circuit) -> Result<Compiled, CompileError> {
    if !c.is_formula() {
        return Err(CompileError::NotFormula(c.name().to_string()));
    }
    let demand = c.demand_vector()?;
    let plan = Plan {
        circuit: c,
        mult: demand.clone(),
        copies: demand,
        catalytic: false,
    };
    build(plan, Backend::Formula, c.demand_analysis()?, 0)
}

/// (2,0) program for any circuit; every gate's counts are scaled by its
/// demand, and inputs are supplied with that many copies.
pub fn compile_circuit_exp(c: &Circuit) -> Result<Compiled, CompileError> {
    let demand = c.demand_vector()?;
    let plan = Plan {
        circuit: c,
        mult: demand.clone(),
        copies: demand,
        catalytic: false,
    };
    build(plan, Backend::Exp, c.demand_analysis()?, 0)
}

/// (2,0)+(2,1) program: each level's outputs are fanned out catalytically
/// and everything else is deleted before the next level.
pub fn compile_circuit_catalyst(c: &Circuit) -> Result<Compiled, CompileError> {
    let (aligned, buffers) = c.level_aligned();
    let n = aligned.gates().len();
    let copies: Vec<u64> = (0..n)
        .map(|i| aligned.fan_out(i) as u64 + aligned.output_multiplicity(i))
        .collect();
    let plan = Plan {
        circuit: &aligned,
        mult: vec![1; n],
        copies,
        catalytic: true,
    };
    let demand = DemandMap {
        demand: aligned.gates().iter().map(|g| (g.id, 1)).collect(),
    };
    build(plan, Backend::Catalyst, demand, buffers)
}

pub fn compile(c: &Circuit, backend: Backend) -> Result<Compiled, CompileError> {
    match backend {
        Backend::Formula => compile_formula(c),
        Backend::Exp => compile_circuit_exp(c),
        Backend::Catalyst => compile_circuit_catalyst(c),
    }
}

pub fn encode_input(p: &StepProgram, bits: &[bool]) -> Result<Configuration, EngineError> {
    p.encode_input(bits)
}

/// Every rule is a (2,0) true void rule, or with `catalyst` also a (2,1)
/// catalytic void rule.
pub fn rules_are_pure(p: &StepProgram, catalyst: bool) -> bool {
    p.rules().iter().all(|r| {
        let class = r.classify();
        match (class.size, class.family) {
            ((2, 0), RuleFamily::TrueVoid) => true,
            ((2, 1), RuleFamily::CatalyticVoid) => catalyst,
            _ => false,
        }
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DisciplineError {
    #[error("species `{0}` is outside the compiler grammar")]
    Foreign(String),
    #[error("rule `{0}` pairs species of unrelated gates")]
    Unrelated(String),
    #[error("gate {producer} completes at step {at} but its consumer {consumer} completes at step {consumer_at}")]
    Order {
        producer: GateId,
        consumer: GateId,
        at: usize,
        consumer_at: usize,
    },
}

/// Checks that each rule only relates species owned by one gate, or an input
/// species `x[j]` with species of a consumer of `j`, or a deleter with what
/// it deletes. Residual species therefore never meet rules of other gates.
pub fn check_species_discipline(c: &Circuit, p: &StepProgram) -> Result<(), DisciplineError> {
    use SpeciesName::*;
    let a = p.alphabet();
    let feeds = |j: GateId, i: GateId| {
        c.index_of(i)
            .is_some_and(|ii| c.gate(ii).inputs.contains(&j))
    };
    for r in p.rules() {
        let text = r.display(a).to_string();
        let mut names = Vec::new();
        for &(s, n) in r.reactants() {
            let name = a
                .structured(s)
                .ok_or_else(|| DisciplineError::Foreign(a.name(s).to_string()))?;
            for _ in 0..n {
                names.push(name);
            }
        }
        let ok = match names.as_slice() {
            [Dx, Dx] | [Dy, Dy] => true,
            [Dx, s] | [s, Dx] => matches!(s, X(..) | A(..) | B(..)),
            [Dy, s] | [s, Dy] => matches!(s, Y(..) | YWire(..)),
            [X(j, _), s] | [s, X(j, _)] if !matches!(s, X(..)) => {
                let owner = s.owner().unwrap();
                owner == *j || feeds(*j, owner)
            }
            [s, t] => !matches!(s, X(..)) && !matches!(t, X(..)) && s.owner() == t.owner(),
            _ => false,
        };
        if !ok {
            return Err(DisciplineError::Unrelated(text));
        }
    }
    Ok(())
}

/// Step at which each gate's output species are last added. Sources
/// complete at step 0.
pub fn completion_steps(c: &Circuit, p: &StepProgram) -> BTreeMap<GateId, usize> {
    use SpeciesName::*;
    let mut done: BTreeMap<GateId, usize> = c.gates().iter().map(|g| (g.id, 0)).collect();
    for (k, step) in p.steps().iter().enumerate() {
        for (s, _) in step.sparse() {
            if let Some(name @ (Y(..) | YWire(..) | A(..) | B(..))) = p.alphabet().structured(s) {
                if let Some(e) = done.get_mut(&name.owner().unwrap()) {
                    *e = (*e).max(k);
                }
            }
        }
    }
    done
}

/// Completion steps strictly increase along every wire.
pub fn check_completion_order(c: &Circuit, p: &StepProgram) -> Result<(), DisciplineError> {
    let done = completion_steps(c, p);
    for w in c.wires() {
        let (at, consumer_at) = (done[&w.producer], done[&w.consumer]);
        if at >= consumer_at {
            return Err(DisciplineError::Order {
                producer: w.producer,
                consumer: w.consumer,
                at,
                consumer_at,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::engine::{enumerate_terminals, Schedule};

    fn circuit(text: &str) -> Circuit {
        parse_circuit(text).unwrap()
    }

    fn additions(l: &[(SpeciesName, u64)]) -> Vec<String> {
        let mut v: Vec<String> = l.iter().map(|(s, n)| format!("{s}:{n}")).collect();
        v.sort();
        v
    }

    const INDEXING: &str = "circuit fig\ngate 1 INPUT\ngate 2 INPUT\ngate 3 INPUT\ngate 4 INPUT\n\
        gate 5 AND 1 2\ngate 6 AND 3 4\ngate 7 OR 5 6\noutputs 7\n";
    const FANOUT: &str = "circuit fo\ngate 1 INPUT\ngate 2 INPUT\ngate 3 AND 1 2\n\
        gate 4 NOT 3\ngate 5 NOT 3\noutputs 4 5\n";

    #[test]
    fn and_lowering_matches_table() {
        let l = lower_gate(GateKind::And, 4, &[1, 2, 3], 1).unwrap();
        assert_eq!(l.steps_used(), 1);
        assert_eq!(
            additions(&l.additions()),
            ["y[1->4]F:1", "y[2->4]F:1", "y[3->4]F:1", "y[4]T:1"]
        );
        let rules: Vec<String> = l.rules.iter().map(ToString::to_string).collect();
        assert!(rules.contains(&"x[1]T + y[1->4]F -> .".to_string()));
        assert!(rules.contains(&"x[3]F + y[4]T -> .".to_string()));
        assert_eq!(rules.len(), 6);
    }

    #[test]
    fn not_lowering_scales_with_multiplicity() {
        let l = lower_gate(GateKind::Not, 2, &[1], 3).unwrap();
        assert_eq!(additions(&l.additions()), ["y[2]F:3", "y[2]T:3"]);
        assert!(lower_gate(GateKind::Not, 2, &[1], 0).is_err());
        assert!(lower_gate(GateKind::Input, 2, &[], 1).is_err());
    }

    #[test]
    fn maj_lowering_matches_table() {
        let l = lower_gate(GateKind::Maj, 9, &[1, 2, 3], 1).unwrap();
        assert_eq!(l.steps_used(), 3);
        assert_eq!(additions(&l.phases[0]), ["a[9]F:3", "a[9]T:3"]);
        assert_eq!(additions(&l.phases[1]), ["b[9]F:1", "b[9]T:1"]);
        assert_eq!(additions(&l.phases[2]), ["y[9]F:1", "y[9]T:1"]);

        let even = lower_gate(GateKind::Maj, 9, &[1, 2], 2).unwrap();
        assert_eq!(additions(&even.phases[0]), ["a[9]F:6", "a[9]T:4"]);
        assert_eq!(additions(&even.phases[1]), ["b[9]F:2", "b[9]T:2"]);

        let intake = lower_gate_with(GateKind::Maj, 9, &[1, 1, 2], 1, true).unwrap();
        assert_eq!(intake.steps_used(), 4);
        assert_eq!(
            additions(&intake.phases[0]),
            ["y[1->9]F:2", "y[1->9]T:2", "y[2->9]F:1", "y[2->9]T:1"]
        );
    }

    #[test]
    fn indexing_formula_has_five_steps() {
        let c = circuit(INDEXING);
        let comp = compile_formula(&c).unwrap();
        let p = &comp.program;
        assert_eq!(p.step_count(), 5);
        let step = |k: usize| -> Vec<String> {
            let mut v: Vec<String> = p.steps()[k]
                .sparse()
                .into_iter()
                .map(|(s, n)| format!("{}:{n}", p.alphabet().name(s)))
                .collect();
            v.sort();
            v
        };
        assert_eq!(
            step(1),
            [
                "y[1->5]F:1",
                "y[2->5]F:1",
                "y[3->6]F:1",
                "y[4->6]F:1",
                "y[5]T:1",
                "y[6]T:1"
            ]
        );
        assert_eq!(step(3), ["y[5->7]T:1", "y[6->7]T:1", "y[7]F:1"]);
        assert_eq!(step(4), ["x[7]F:1", "x[7]T:1"]);
        let s0 = p.encode_input(&[true, false, false, true]).unwrap();
        assert_eq!(s0.volume(), 8 + 4);
        let run = p
            .run(&[true, false, false, true], Schedule::seeded(1))
            .unwrap();
        assert_eq!(run.decoded, Ok(vec![false]));
        assert!(rules_are_pure(p, false));
        check_species_discipline(&comp.circuit, p).unwrap();
        check_completion_order(&comp.circuit, p).unwrap();
    }

    #[test]
    fn single_gate_step_counts() {
        let and = circuit("circuit a\ngate 1 INPUT\ngate 2 INPUT\ngate 3 AND 1 2\noutputs 3\n");
        assert_eq!(compile_formula(&and).unwrap().program.step_count(), 3);
        let maj = circuit(
            "circuit m\ngate 1 INPUT\ngate 2 INPUT\ngate 3 INPUT\ngate 4 MAJ 1 2 3\noutputs 4\n",
        );
        assert_eq!(compile_formula(&maj).unwrap().program.step_count(), 5);
    }

    #[test]
    fn formula_backend_rejects_fan_out() {
        assert!(matches!(
            compile_formula(&circuit(FANOUT)),
            Err(CompileError::NotFormula(_))
        ));
    }

    #[test]
    fn exp_degenerates_to_formula() {
        let c = circuit(INDEXING);
        let f = compile_formula(&c).unwrap().program.to_text();
        let e = compile_circuit_exp(&c).unwrap().program.to_text();
        assert_eq!(f, e);
    }

    #[test]
    fn exp_fan_out_scales_inputs() {
        let c = circuit(
            "circuit and_fanout2\ngate 1 INPUT\ngate 2 INPUT\ngate 3 AND 1 2\n\
             gate 4 NOT 3\ngate 5 NOT 3\noutputs 4 5\n",
        );
        let comp = compile_circuit_exp(&c).unwrap();
        assert_eq!(comp.report.max_input_multiplicity, 2);
        let s0 = comp.program.encode_input(&[true, false]).unwrap();
        let a = comp.program.alphabet();
        assert_eq!(s0.get(a.id("y[1]T").unwrap()), 2);
        assert_eq!(s0.get(a.id("y[2]F").unwrap()), 2);
        for seed in 0..10 {
            let run = comp
                .program
                .run(&[true, false], Schedule::seeded(seed))
                .unwrap();
            assert_eq!(run.decoded, Ok(vec![true, true]));
        }
    }

    #[test]
    fn maj_step_two_post_condition() {
        // After the b step only the majority polarity survives, at least m copies.
        for (bits, majority) in [([true, true, false], true), ([false, true, false], false)] {
            let c = circuit("circuit m\ngate 1 INPUT\ngate 2 INPUT\ngate 3 INPUT\ngate 4 MAJ 1 2 3\noutputs 4\n");
            let comp = compile_formula(&c).unwrap();
            let p = &comp.program;
            let a = p.alphabet();
            for seed in 0..10 {
                let run = p.run(&bits, Schedule::seeded(seed)).unwrap();
                let after_b = &run.per_step_terminal[2];
                let (win, lose) = if majority {
                    ("a[4]T", "a[4]F")
                } else {
                    ("a[4]F", "a[4]T")
                };
                assert!(after_b.get(a.id(win).unwrap()) >= 1);
                assert_eq!(after_b.get(a.id(lose).unwrap()), 0);
            }
        }
    }

    #[test]
    fn catalyst_cleans_each_level() {
        let c = circuit(
            "circuit and_fanout2\ngate 1 INPUT\ngate 2 INPUT\ngate 3 AND 1 2\n\
             gate 4 NOT 3\ngate 5 NOT 3\noutputs 4 5\n",
        );
        let comp = compile_circuit_catalyst(&c).unwrap();
        let p = &comp.program;
        assert!(rules_are_pure(p, true));
        assert!(!rules_are_pure(p, false));
        let a = p.alphabet();
        let run = p.run(&[true, false], Schedule::seeded(4)).unwrap();
        assert_eq!(run.decoded, Ok(vec![true, true]));
        // Level 1 is steps 5..=10: gate step then five fan-out steps.
        let after = &run.per_step_terminal[10];
        assert_eq!(after.display(a).to_string(), "{x[3]F:2}");
        // A deleter only survives between its two additions.
        for d in ["dx", "dy"] {
            let d = a.id(d).unwrap();
            for (k, t) in run.per_step_terminal.iter().enumerate() {
                let paired =
                    p.steps()[k].get(d) == 1 && p.steps().get(k + 1).is_some_and(|s| s.get(d) == 1);
                assert_eq!(t.get(d), u64::from(paired), "step {k}");
            }
        }
        check_species_discipline(&comp.circuit, p).unwrap();
        check_completion_order(&comp.circuit, p).unwrap();
    }

    #[test]
    fn catalyst_inserts_buffers_for_skipping_wires() {
        let c = circuit(
            "circuit s\ngate 1 INPUT\ngate 2 INPUT\ngate 3 NOT 1\ngate 4 AND 3 2\noutputs 4\n",
        );
        let comp = compile_circuit_catalyst(&c).unwrap();
        assert_eq!(comp.report.buffers_inserted, 1);
        for bits in [[false, false], [false, true], [true, false], [true, true]] {
            let run = comp.program.run(&bits, Schedule::seeded(0)).unwrap();
            assert_eq!(run.decoded.unwrap(), c.evaluate(&bits).unwrap());
        }
    }

    #[test]
    fn constants_compile_like_inputs() {
        let c = circuit("circuit k\ngate 1 INPUT\ngate 2 CONST_ONE\ngate 3 AND 1 2\noutputs 3\n");
        for backend in Backend::ALL {
            let comp = compile(&c, backend).unwrap();
            for b in [false, true] {
                let run = comp.program.run(&[b], Schedule::seeded(2)).unwrap();
                assert_eq!(run.decoded, Ok(vec![b]), "{backend}");
            }
        }
        let only = circuit("circuit z\ngate 1 CONST_ZERO\ngate 2 NOT 1\noutputs 2\n");
        let comp = compile_formula(&only).unwrap();
        assert_eq!(
            comp.program.encode_input(&[]).unwrap(),
            comp.program.steps()[0]
        );
    }

    #[test]
    fn and_example_step_is_confluent() {
        let c = circuit(
            "circuit and3\ngate 1 INPUT\ngate 2 INPUT\ngate 3 INPUT\ngate 4 AND 1 2 3\noutputs 4\n",
        );
        let p = compile_formula(&c).unwrap().program;
        let a = p.alphabet();
        let entry = Configuration::parse(
            a,
            "x[1]T:1, x[2]T:1, x[3]F:1, y[4]T:1, y[1->4]F:1, y[2->4]F:1, y[3->4]F:1",
        )
        .unwrap();
        let term = enumerate_terminals(&entry, p.rules(), 1000).unwrap();
        assert_eq!(term.len(), 1);
        assert_eq!(term.first().unwrap().display(a).to_string(), "{y[3->4]F:1}");
    }

    #[test]
    fn report_forms() {
        let comp = compile_formula(&circuit(INDEXING)).unwrap();
        let kv = comp.report.to_key_value();
        assert!(kv.contains("backend=formula\n"));
        assert!(kv.contains("step_count=5\n"));
        let json: serde_json::Value = serde_json::from_str(&comp.report.to_json()).unwrap();
        assert_eq!(json["step_count"], 5);
        assert_eq!(json["backend"], "formula");
    }
}
