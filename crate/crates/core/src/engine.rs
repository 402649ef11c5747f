//! Step CRN programs and their execution: random maximal schedules for
//! throughput, exhaustive terminal enumeration for ground truth.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::GateId;
use crate::crn::{Alphabet, Configuration, CrnError, Rule, SpeciesId};

/// Default bound on stored configurations during exhaustive enumeration.
pub const DEFAULT_STATE_CAP: usize = 2_000_000;
/// Default bound on rule applications per step for rule sets that are not
/// purely void.
pub const DEFAULT_APPLICATION_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Crn(#[from] CrnError),
    #[error("expected {expected} input bits, got {got}")]
    Inputs { expected: usize, got: usize },
    #[error("step {step} exceeded the budget of {cap} rule applications")]
    Budget { step: usize, cap: u64 },
    #[error("exhaustive search exceeded {cap} stored configurations")]
    StateCap { cap: usize },
    #[error("step vector {step} has {len} entries, alphabet has {alphabet}")]
    StepLength {
        step: usize,
        len: usize,
        alphabet: usize,
    },
    #[error("program has no steps")]
    NoSteps,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    #[error("output {0} is ambiguous: both polarity species are present")]
    Ambiguous(GateId),
    #[error("output {0} is missing: neither polarity species is present")]
    Missing(GateId),
}

/// Species merged into the first step for one circuit input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputEncoding {
    pub gate: GateId,
    pub zero: Vec<(SpeciesId, u64)>,
    pub one: Vec<(SpeciesId, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputDecoding {
    pub gate: GateId,
    pub zero: SpeciesId,
    pub one: SpeciesId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepProgram {
    alphabet: Alphabet,
    rules: Vec<Rule>,
    steps: Vec<Configuration>,
    inputs: Vec<InputEncoding>,
    outputs: Vec<OutputDecoding>,
    index: RuleIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Repeatedly pick uniformly among applicable rules until terminal.
    #[default]
    RandomMaximal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub seed: u64,
    pub policy: Policy,
}

impl Schedule {
    pub fn seeded(seed: u64) -> Self {
        Schedule {
            seed,
            policy: Policy::RandomMaximal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub record_terminals: bool,
    pub trace: bool,
    /// `None` picks no cap for void rule sets and [`DEFAULT_APPLICATION_CAP`]
    /// otherwise.
    pub application_cap: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            record_terminals: true,
            trace: false,
            application_cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: usize,
    pub rule: usize,
    pub volume: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub final_config: Configuration,
    pub per_step_terminal: Vec<Configuration>,
    pub peak_volume: u64,
    pub step_count: usize,
    pub applications: u64,
    pub decoded: Result<Vec<bool>, DecodeError>,
    pub trace: Vec<TraceEvent>,
}

impl RunResult {
    /// Stable textual rendering, used for reproducibility checks and the CLI.
    pub fn render(&self, program: &StepProgram) -> String {
        let mut out = String::new();
        match &self.decoded {
            Ok(bits) => {
                let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                writeln!(out, "output: {s}").unwrap();
            }
            Err(e) => writeln!(out, "error: {e}").unwrap(),
        }
        writeln!(out, "peak_volume: {}", self.peak_volume).unwrap();
        writeln!(out, "steps: {}", self.step_count).unwrap();
        writeln!(out, "applications: {}", self.applications).unwrap();
        writeln!(
            out,
            "final: {}",
            self.final_config.display(program.alphabet())
        )
        .unwrap();
        for (k, c) in self.per_step_terminal.iter().enumerate() {
            writeln!(out, "terminal {k}: {}", c.display(program.alphabet())).unwrap();
        }
        for e in &self.trace {
            writeln!(out, "{}", program.trace_line(e)).unwrap();
        }
        out
    }
}

/// Reactant adjacency used to keep the applicable-rule set current after
/// each application without rescanning every rule.
#[derive(Debug, Clone, PartialEq, Eq)]
struct RuleIndex {
    by_reactant: Vec<Vec<u32>>,
    affected: Vec<Vec<u32>>,
    all_void: bool,
}

impl RuleIndex {
    fn new(species: usize, rules: &[Rule]) -> Self {
        let mut by_reactant = vec![Vec::new(); species];
        for (r, rule) in rules.iter().enumerate() {
            for &(s, _) in rule.reactants() {
                by_reactant[s].push(r as u32);
            }
        }
        let affected = rules
            .iter()
            .map(|rule| {
                let mut set: Vec<u32> = rule
                    .delta()
                    .iter()
                    .flat_map(|&(s, _)| by_reactant[s].iter().copied())
                    .collect();
                set.sort_unstable();
                set.dedup();
                set
            })
            .collect();
        RuleIndex {
            by_reactant,
            affected,
            all_void: rules.iter().all(Rule::is_void),
        }
    }
}

struct ActiveSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl ActiveSet {
    fn new(rules: usize) -> Self {
        ActiveSet {
            items: Vec::new(),
            pos: vec![ABSENT; rules],
        }
    }

    fn insert(&mut self, r: u32) {
        if self.pos[r as usize] == ABSENT {
            self.pos[r as usize] = self.items.len() as u32;
            self.items.push(r);
        }
    }

    fn remove(&mut self, r: u32) {
        let p = self.pos[r as usize];
        if p != ABSENT {
            let last = self.items.pop().unwrap();
            if last != r {
                self.items[p as usize] = last;
                self.pos[last as usize] = p;
            }
            self.pos[r as usize] = ABSENT;
        }
    }
}

struct StepOutcome {
    applications: u64,
    peak: u64,
}

/// Runs `counts` to a terminal configuration. Only rules listed in
/// `candidates` are checked initially, so callers must pass every rule that
/// could be applicable.
#[allow(clippy::too_many_arguments)]
fn run_to_terminal(
    rules: &[Rule],
    index: &RuleIndex,
    counts: &mut [u64],
    candidates: impl Iterator<Item = u32>,
    rng: &mut ChaCha8Rng,
    cap: Option<u64>,
    step: usize,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<StepOutcome, EngineError> {
    let mut active = ActiveSet::new(rules.len());
    for r in candidates {
        if rules[r as usize].applicable_unchecked(counts) {
            active.insert(r);
        }
    }
    let mut volume: u64 = counts.iter().sum();
    let mut peak = volume;
    let mut applications = 0u64;
    while !active.items.is_empty() {
        if let Some(cap) = cap {
            if applications >= cap {
                return Err(EngineError::Budget { step, cap });
            }
        }
        let pick = if active.items.len() == 1 {
            0
        } else {
            rng.random_range(0..active.items.len())
        };
        let r = active.items[pick] as usize;
        let rule = &rules[r];
        rule.apply_unchecked(counts);
        for &(_, d) in rule.delta() {
            volume = volume.wrapping_add_signed(d);
        }
        peak = peak.max(volume);
        applications += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceEvent {
                step,
                rule: r,
                volume,
            });
        }
        for &a in &index.affected[r] {
            if rules[a as usize].applicable_unchecked(counts) {
                active.insert(a);
            } else {
                active.remove(a);
            }
        }
    }
    Ok(StepOutcome { applications, peak })
}

/// Adds `additions` to `c` and runs `rules` to a terminal configuration.
pub fn run_step(
    c: &Configuration,
    additions: &Configuration,
    rules: &[Rule],
    schedule: Schedule,
) -> Result<Configuration, EngineError> {
    let mut next = c.clone();
    if additions.len() != c.len() {
        return Err(CrnError::AlphabetMismatch {
            config: c.len(),
            species: additions.len().saturating_sub(1),
        }
        .into());
    }
    next.add_assign(additions);
    for r in rules {
        r.applicable(&next)?;
    }
    let index = RuleIndex::new(c.len(), rules);
    let cap = (!index.all_void).then_some(DEFAULT_APPLICATION_CAP);
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    run_to_terminal(
        rules,
        &index,
        next.counts_mut(),
        0..rules.len() as u32,
        &mut rng,
        cap,
        0,
        None,
    )?;
    Ok(next)
}

fn enabled(rules: &[Rule], counts: &[u64]) -> Vec<usize> {
    (0..rules.len())
        .filter(|&r| rules[r].applicable_unchecked(counts))
        .collect()
}

/// Exact TERM set reachable from `c`, by depth-first search over the
/// rule-application graph with the count vector as memoization key.
pub fn enumerate_terminals(
    c: &Configuration,
    rules: &[Rule],
    state_cap: usize,
) -> Result<BTreeSet<Configuration>, EngineError> {
    for r in rules {
        r.applicable(c)?;
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut terminals = BTreeSet::new();
    let mut stack = vec![c.counts().to_vec()];
    seen.insert(c.counts().to_vec());
    while let Some(cur) = stack.pop() {
        let en = enabled(rules, &cur);
        if en.is_empty() {
            terminals.insert(Configuration::from_counts(cur));
            continue;
        }
        for r in en {
            let mut next = cur.clone();
            rules[r].apply_unchecked(&mut next);
            if !seen.contains(&next) {
                if seen.len() >= state_cap {
                    return Err(EngineError::StateCap { cap: state_cap });
                }
                seen.insert(next.clone());
                stack.push(next);
            }
        }
    }
    Ok(terminals)
}

/// Result of exhaustively running a whole program on one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramTerminals {
    pub terminals: BTreeSet<Configuration>,
    /// Size of the TERM set after each step.
    pub per_step: Vec<usize>,
    /// Largest volume at which any step was entered.
    pub max_entry_volume: u64,
}

impl StepProgram {
    pub fn new(
        alphabet: Alphabet,
        rules: Vec<Rule>,
        steps: Vec<Configuration>,
        inputs: Vec<InputEncoding>,
        outputs: Vec<OutputDecoding>,
    ) -> Result<Self, EngineError> {
        let n = alphabet.len();
        if steps.is_empty() {
            return Err(EngineError::NoSteps);
        }
        for (k, s) in steps.iter().enumerate() {
            if s.len() != n {
                return Err(EngineError::StepLength {
                    step: k,
                    len: s.len(),
                    alphabet: n,
                });
            }
        }
        let probe = Configuration::zeros(n);
        for r in &rules {
            r.applicable(&probe)?;
        }
        let check = |s: SpeciesId| -> Result<(), EngineError> {
            if s >= n {
                return Err(CrnError::AlphabetMismatch {
                    config: n,
                    species: s,
                }
                .into());
            }
            Ok(())
        };
        for e in &inputs {
            for &(s, _) in e.zero.iter().chain(&e.one) {
                check(s)?;
            }
        }
        for d in &outputs {
            check(d.zero)?;
            check(d.one)?;
        }
        let index = RuleIndex::new(n, &rules);
        Ok(StepProgram {
            alphabet,
            rules,
            steps,
            inputs,
            outputs,
            index,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn steps(&self) -> &[Configuration] {
        &self.steps
    }

    pub fn inputs(&self) -> &[InputEncoding] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[OutputDecoding] {
        &self.outputs
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Step 0 with the chosen encoding of every input merged in.
    pub fn encode_input(&self, bits: &[bool]) -> Result<Configuration, EngineError> {
        if bits.len() != self.inputs.len() {
            return Err(EngineError::Inputs {
                expected: self.inputs.len(),
                got: bits.len(),
            });
        }
        let mut s0 = self.steps[0].clone();
        for (enc, &b) in self.inputs.iter().zip(bits) {
            let chosen = if b { &enc.one } else { &enc.zero };
            for &(s, n) in chosen {
                s0.counts_mut()[s] += n;
            }
        }
        Ok(s0)
    }

    pub fn decode_output(&self, c: &Configuration) -> Result<Vec<bool>, DecodeError> {
        self.outputs
            .iter()
            .map(|d| match (c.get(d.zero) > 0, c.get(d.one) > 0) {
                (true, false) => Ok(false),
                (false, true) => Ok(true),
                (true, true) => Err(DecodeError::Ambiguous(d.gate)),
                (false, false) => Err(DecodeError::Missing(d.gate)),
            })
            .collect()
    }

    pub fn run(&self, bits: &[bool], schedule: Schedule) -> Result<RunResult, EngineError> {
        self.execute(bits, schedule, &RunOptions::default())
    }

    pub fn execute(
        &self,
        bits: &[bool],
        schedule: Schedule,
        opts: &RunOptions,
    ) -> Result<RunResult, EngineError> {
        let Policy::RandomMaximal = schedule.policy;
        let s0 = self.encode_input(bits)?;
        let cap = opts
            .application_cap
            .or((!self.index.all_void).then_some(DEFAULT_APPLICATION_CAP));
        let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
        let mut counts = vec![0u64; self.alphabet.len()];
        let mut per_step_terminal = Vec::new();
        let mut trace = Vec::new();
        let mut peak = 0u64;
        let mut applications = 0u64;
        let mut candidates: Vec<u32> = Vec::new();
        for (k, step) in self.steps.iter().enumerate() {
            let add = if k == 0 { &s0 } else { step };
            candidates.clear();
            for (s, &n) in add.counts().iter().enumerate() {
                if n > 0 {
                    counts[s] += n;
                    candidates.extend_from_slice(&self.index.by_reactant[s]);
                }
            }
            candidates.sort_unstable();
            candidates.dedup();
            let outcome = run_to_terminal(
                &self.rules,
                &self.index,
                &mut counts,
                candidates.iter().copied(),
                &mut rng,
                cap,
                k,
                opts.trace.then_some(&mut trace),
            )?;
            peak = peak.max(outcome.peak);
            applications += outcome.applications;
            if opts.record_terminals {
                per_step_terminal.push(Configuration::from_counts(counts.clone()));
            }
        }
        let final_config = Configuration::from_counts(counts);
        let decoded = self.decode_output(&final_config);
        Ok(RunResult {
            final_config,
            per_step_terminal,
            peak_volume: peak,
            step_count: self.steps.len(),
            applications,
            decoded,
            trace,
        })
    }

    /// Exhaustive TERM set of the whole program on one input.
    pub fn enumerate(
        &self,
        bits: &[bool],
        state_cap: usize,
    ) -> Result<ProgramTerminals, EngineError> {
        Ok(self
            .enumerate_capped(bits, state_cap, u64::MAX)?
            .expect("no volume cap"))
    }

    /// Like [`StepProgram::enumerate`], but gives up with `None` as soon as
    /// some step would be entered above `volume_cap`.
    pub fn enumerate_capped(
        &self,
        bits: &[bool],
        state_cap: usize,
        volume_cap: u64,
    ) -> Result<Option<ProgramTerminals>, EngineError> {
        let s0 = self.encode_input(bits)?;
        let mut frontier: BTreeSet<Configuration> = BTreeSet::new();
        frontier.insert(Configuration::zeros(self.alphabet.len()));
        let mut per_step = Vec::with_capacity(self.steps.len());
        let mut max_entry_volume = 0;
        for (k, step) in self.steps.iter().enumerate() {
            let add = if k == 0 { &s0 } else { step };
            let mut next = BTreeSet::new();
            for c in &frontier {
                let mut entry = c.clone();
                entry.add_assign(add);
                max_entry_volume = max_entry_volume.max(entry.volume());
                if max_entry_volume > volume_cap {
                    return Ok(None);
                }
                next.extend(enumerate_terminals(&entry, &self.rules, state_cap)?);
            }
            per_step.push(next.len());
            frontier = next;
        }
        Ok(Some(ProgramTerminals {
            terminals: frontier,
            per_step,
            max_entry_volume,
        }))
    }

    /// Largest volume any step can be entered at, assuming no rule fires:
    /// the total of all additions for the heaviest input choice.
    pub fn static_volume(&self) -> u64 {
        let steps: u64 = self.steps.iter().map(Configuration::volume).sum();
        let inputs: u64 = self
            .inputs
            .iter()
            .map(|e| {
                let z: u64 = e.zero.iter().map(|&(_, n)| n).sum();
                let o: u64 = e.one.iter().map(|&(_, n)| n).sum();
                z.max(o)
            })
            .sum();
        steps + inputs
    }

    pub fn trace_line(&self, e: &TraceEvent) -> String {
        format!(
            "step={} rule={} volume={}",
            e.step,
            self.rules[e.rule].display(&self.alphabet),
            e.volume
        )
    }

    fn fmt_terms(&self, terms: &[(SpeciesId, u64)]) -> String {
        terms
            .iter()
            .map(|&(s, n)| format!("{}={n}", self.alphabet.name(s)))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("alphabet:");
        for n in self.alphabet.names() {
            out.push(' ');
            out.push_str(n);
        }
        out.push_str("\nrules:\n");
        for r in &self.rules {
            writeln!(out, "{}", r.display(&self.alphabet)).unwrap();
        }
        for (k, s) in self.steps.iter().enumerate() {
            let body = self.fmt_terms(&s.sparse());
            if body.is_empty() {
                writeln!(out, "step {k}:").unwrap();
            } else {
                writeln!(out, "step {k}: {body}").unwrap();
            }
        }
        out.push_str("inputs:\n");
        for e in &self.inputs {
            writeln!(out, "{} 0: {}", e.gate, self.fmt_terms(&e.zero)).unwrap();
            writeln!(out, "{} 1: {}", e.gate, self.fmt_terms(&e.one)).unwrap();
        }
        out.push_str("outputs:\n");
        for d in &self.outputs {
            writeln!(
                out,
                "{}: {} {}",
                d.gate,
                self.alphabet.name(d.zero),
                self.alphabet.name(d.one)
            )
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, EngineError> {
        #[derive(PartialEq)]
        enum Section {
            Head,
            Rules,
            Steps,
            Inputs,
            Outputs,
        }
        let mut section = Section::Head;
        let mut alphabet: Option<Alphabet> = None;
        let mut rules = Vec::new();
        let mut steps: Vec<Configuration> = Vec::new();
        let mut inputs: Vec<InputEncoding> = Vec::new();
        let mut outputs = Vec::new();

        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let syntax = |message: String| EngineError::Syntax {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("alphabet:") {
                let a =
                    Alphabet::new(rest.split_whitespace()).map_err(|e| syntax(e.to_string()))?;
                alphabet = Some(a);
                section = Section::Head;
                continue;
            }
            let Some(a) = alphabet.as_ref() else {
                return Err(syntax("expected `alphabet:` first".into()));
            };
            let terms = |body: &str| -> Result<Vec<(SpeciesId, u64)>, EngineError> {
                Configuration::parse(a, body)
                    .map(|c| c.sparse())
                    .map_err(|e| syntax(e.to_string()))
            };
            if line == "rules:" {
                section = Section::Rules;
                continue;
            }
            if line == "inputs:" {
                section = Section::Inputs;
                continue;
            }
            if line == "outputs:" {
                section = Section::Outputs;
                continue;
            }
            if let Some(rest) = line.strip_prefix("step ") {
                let (num, body) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax("expected `step <n>: ...`".into()))?;
                let num: usize = num
                    .trim()
                    .parse()
                    .map_err(|_| syntax(format!("bad step number `{num}`")))?;
                if num != steps.len() {
                    return Err(syntax(format!(
                        "expected step {}, found {num}",
                        steps.len()
                    )));
                }
                steps.push(Configuration::from_sparse(a.len(), &terms(body)?));
                section = Section::Steps;
                continue;
            }
            match section {
                Section::Rules => {
                    rules.push(Rule::parse(a, line).map_err(|e| syntax(e.to_string()))?)
                }
                Section::Inputs => {
                    let (head, body) = line
                        .split_once(':')
                        .ok_or_else(|| syntax("expected `<gate> <bit>: ...`".into()))?;
                    let mut it = head.split_whitespace();
                    let (Some(g), Some(b), None) = (it.next(), it.next(), it.next()) else {
                        return Err(syntax("expected `<gate> <bit>: ...`".into()));
                    };
                    let gate: GateId = g.parse().map_err(|_| syntax(format!("bad gate `{g}`")))?;
                    let bit = match b {
                        "0" => false,
                        "1" => true,
                        _ => return Err(syntax(format!("bad bit `{b}`"))),
                    };
                    let t = terms(body)?;
                    if inputs.last().map(|e| e.gate) != Some(gate) || !bit {
                        inputs.push(InputEncoding {
                            gate,
                            zero: Vec::new(),
                            one: Vec::new(),
                        });
                    }
                    let e = inputs.last_mut().unwrap();
                    if bit {
                        e.one = t;
                    } else {
                        e.zero = t;
                    }
                }
                Section::Outputs => {
                    let (g, body) = line
                        .split_once(':')
                        .ok_or_else(|| syntax("expected `<gate>: <zero> <one>`".into()))?;
                    let gate: GateId = g
                        .trim()
                        .parse()
                        .map_err(|_| syntax(format!("bad gate `{g}`")))?;
                    let mut it = body.split_whitespace();
                    let (Some(z), Some(o), None) = (it.next(), it.next(), it.next()) else {
                        return Err(syntax("expected `<gate>: <zero> <one>`".into()));
                    };
                    outputs.push(OutputDecoding {
                        gate,
                        zero: a.id(z).map_err(|e| syntax(e.to_string()))?,
                        one: a.id(o).map_err(|e| syntax(e.to_string()))?,
                    });
                }
                Section::Head | Section::Steps => {
                    return Err(syntax(format!("unexpected line `{line}`")));
                }
            }
        }
        let alphabet = alphabet.ok_or(EngineError::Syntax {
            line: 0,
            message: "missing `alphabet:`".into(),
        })?;
        StepProgram::new(alphabet, rules, steps, inputs, outputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(a: &Alphabet, s: &str) -> Configuration {
        Configuration::parse(a, s).unwrap()
    }

    fn rules(a: &Alphabet, rs: &[&str]) -> Vec<Rule> {
        rs.iter().map(|r| Rule::parse(a, r).unwrap()).collect()
    }

    #[test]
    fn trivial_step_annihilates() {
        let a = Alphabet::new(["A", "B"]).unwrap();
        let out = run_step(
            &Configuration::zeros(2),
            &cfg(&a, "A:1, B:1"),
            &rules(&a, &["A + B -> ."]),
            Schedule::seeded(0),
        )
        .unwrap();
        assert_eq!(out.volume(), 0);
    }

    fn and_gate() -> (Alphabet, Vec<Rule>) {
        let a = Alphabet::new([
            "x[1]T", "x[1]F", "x[2]T", "x[2]F", "x[3]T", "x[3]F", "y[4]T", "y[1->4]F", "y[2->4]F",
            "y[3->4]F",
        ])
        .unwrap();
        let r = rules(
            &a,
            &[
                "x[1]T + y[1->4]F -> .",
                "x[2]T + y[2->4]F -> .",
                "x[3]T + y[3->4]F -> .",
                "x[1]F + y[4]T -> .",
                "x[2]F + y[4]T -> .",
                "x[3]F + y[4]T -> .",
            ],
        );
        (a, r)
    }

    #[test]
    fn and_gate_example_leaves_one_false_wire() {
        let (a, r) = and_gate();
        let c = cfg(&a, "x[1]T:1, x[2]T:1, x[3]F:1");
        let add = cfg(&a, "y[4]T:1, y[1->4]F:1, y[2->4]F:1, y[3->4]F:1");
        for seed in 0..20 {
            let out = run_step(&c, &add, &r, Schedule::seeded(seed)).unwrap();
            assert_eq!(out.display(&a).to_string(), "{y[3->4]F:1}");
        }
        let mut entry = c.clone();
        entry.add_assign(&add);
        let term = enumerate_terminals(&entry, &r, 1000).unwrap();
        assert_eq!(term.len(), 1);
        assert_eq!(
            term.first().unwrap().display(&a).to_string(),
            "{y[3->4]F:1}"
        );
    }

    #[test]
    fn or_gate_example_leaves_one_true_wire() {
        let a = Alphabet::new([
            "x[1]T", "x[1]F", "x[2]T", "x[2]F", "y[1]F", "y[1->1]T", "y[2->1]T",
        ])
        .unwrap();
        let r = rules(
            &a,
            &[
                "x[1]T + y[1]F -> .",
                "x[2]T + y[1]F -> .",
                "x[1]F + y[1->1]T -> .",
                "x[2]F + y[2->1]T -> .",
            ],
        );
        let c = cfg(&a, "x[1]F:1, x[2]T:1");
        let add = cfg(&a, "y[1->1]T:1, y[2->1]T:1, y[1]F:1");
        let out = run_step(&c, &add, &r, Schedule::seeded(3)).unwrap();
        assert_eq!(out.display(&a).to_string(), "{y[2->1]T:1}");
    }

    #[test]
    fn enumeration_examples() {
        let a = Alphabet::new(["A", "B", "C"]).unwrap();
        let r = rules(&a, &["A + B -> .", "A + C -> ."]);
        let term = enumerate_terminals(&cfg(&a, "A:1, B:1, C:1"), &r, 100).unwrap();
        let shown: Vec<String> = term.iter().map(|c| c.display(&a).to_string()).collect();
        assert_eq!(shown.len(), 2);
        assert!(shown.contains(&"{B:1}".to_string()));
        assert!(shown.contains(&"{C:1}".to_string()));

        let r = rules(&a, &["A + B -> ."]);
        let term = enumerate_terminals(&cfg(&a, "A:2, B:1"), &r, 100).unwrap();
        assert_eq!(term.len(), 1);
        assert_eq!(term.first().unwrap().display(&a).to_string(), "{A:1}");
    }

    #[test]
    fn state_cap_is_enforced() {
        let a = Alphabet::new(["A", "B", "C"]).unwrap();
        let r = rules(&a, &["A + B -> .", "A + C -> ."]);
        let err = enumerate_terminals(&cfg(&a, "A:6, B:6, C:6"), &r, 3).unwrap_err();
        assert_eq!(err, EngineError::StateCap { cap: 3 });
    }

    #[test]
    fn non_void_rules_hit_the_budget() {
        let a = Alphabet::new(["A", "B"]).unwrap();
        let r = rules(&a, &["A -> B", "B -> A"]);
        let err = run_step(
            &Configuration::zeros(2),
            &cfg(&a, "A:1"),
            &r,
            Schedule::seeded(0),
        )
        .unwrap_err();
        assert!(matches!(err, EngineError::Budget { .. }));
    }

    fn decode_program(a: &Alphabet) -> StepProgram {
        StepProgram::new(
            a.clone(),
            vec![],
            vec![Configuration::zeros(a.len())],
            vec![],
            vec![OutputDecoding {
                gate: 7,
                zero: a.id("y[7]F").unwrap(),
                one: a.id("y[7]T").unwrap(),
            }],
        )
        .unwrap()
    }

    #[test]
    fn decode_examples() {
        let a = Alphabet::new(["y[7]T", "y[7]F"]).unwrap();
        let p = decode_program(&a);
        assert_eq!(p.decode_output(&cfg(&a, "y[7]F:1")), Ok(vec![false]));
        assert_eq!(
            p.decode_output(&cfg(&a, "y[7]F:1, y[7]T:1")),
            Err(DecodeError::Ambiguous(7))
        );
        assert_eq!(p.decode_output(&cfg(&a, "")), Err(DecodeError::Missing(7)));
    }

    fn and_program() -> StepProgram {
        let (a, r) = and_gate();
        let mut steps = vec![Configuration::zeros(a.len())];
        steps.push(cfg(&a, "y[4]T:1, y[1->4]F:1, y[2->4]F:1, y[3->4]F:1"));
        let enc = |g: u32| InputEncoding {
            gate: g,
            zero: vec![(a.id(&format!("x[{g}]F")).unwrap(), 1)],
            one: vec![(a.id(&format!("x[{g}]T")).unwrap(), 1)],
        };
        StepProgram::new(
            a.clone(),
            r,
            steps,
            vec![enc(1), enc(2), enc(3)],
            vec![OutputDecoding {
                gate: 4,
                zero: a.id("y[3->4]F").unwrap(),
                one: a.id("y[4]T").unwrap(),
            }],
        )
        .unwrap()
    }

    #[test]
    fn program_text_round_trips() {
        let p = and_program();
        let text = p.to_text();
        let back = StepProgram::parse(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn runs_are_reproducible() {
        let p = and_program();
        let opts = RunOptions {
            trace: true,
            ..RunOptions::default()
        };
        let a = p
            .execute(&[true, false, true], Schedule::seeded(11), &opts)
            .unwrap();
        let b = p
            .execute(&[true, false, true], Schedule::seeded(11), &opts)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.render(&p), b.render(&p));
        assert_eq!(a.trace.len() as u64, a.applications);
        assert!(p.trace_line(&a.trace[0]).starts_with("step=1 rule="));
        assert!(a.peak_volume >= a.final_config.volume());
    }

    #[test]
    fn input_length_is_checked() {
        let p = and_program();
        assert_eq!(
            p.run(&[true], Schedule::seeded(0)).unwrap_err(),
            EngineError::Inputs {
                expected: 3,
                got: 1
            }
        );
    }
}
