//! Differential verification of compiled programs against direct circuit
//! evaluation, sampled and exhaustive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError};
use crate::engine::{EngineError, RunOptions, Schedule, StepProgram, DEFAULT_STATE_CAP};

pub const DEFAULT_ALL_CAP: usize = 12;
pub const DEFAULT_VOLUME_CAP: u64 = 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{inputs} inputs exceed the exhaustive-input cap of {cap}")]
    TooManyInputs { inputs: usize, cap: usize },
    #[error("program has {program} inputs, circuit has {circuit}")]
    InputMismatch { program: usize, circuit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    All,
    Random(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyConfig {
    pub inputs: InputMode,
    pub all_cap: usize,
    pub seeds: Vec<u64>,
    /// Exhaustive TERM enumeration for inputs whose step-entry volume stays
    /// within the cap.
    pub exhaustive: Option<u64>,
    pub state_cap: usize,
    pub input_seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            inputs: InputMode::All,
            all_cap: DEFAULT_ALL_CAP,
            seeds: (0..25).collect(),
            exhaustive: None,
            state_cap: DEFAULT_STATE_CAP,
            input_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub circuit: String,
    pub input: String,
    /// `None` when found by exhaustive enumeration.
    pub seed: Option<u64>,
    pub expected: String,
    pub got: String,
    pub terminal: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerifySummary {
    pub circuit: String,
    pub inputs: usize,
    pub runs: usize,
    pub passed: usize,
    pub failed: usize,
    pub exhaustive_checked: usize,
    pub exhaustive_skipped: usize,
    pub exhaustive_failed: usize,
    pub max_terminals: usize,
    pub counterexample: Option<Counterexample>,
}

impl VerifySummary {
    pub fn ok(&self) -> bool {
        self.failed == 0 && self.exhaustive_failed == 0
    }

    fn absorb(&mut self, other: VerifySummary) {
        self.inputs += other.inputs;
        self.runs += other.runs;
        self.passed += other.passed;
        self.failed += other.failed;
        self.exhaustive_checked += other.exhaustive_checked;
        self.exhaustive_skipped += other.exhaustive_skipped;
        self.exhaustive_failed += other.exhaustive_failed;
        self.max_terminals = self.max_terminals.max(other.max_terminals);
        if self.counterexample.is_none() {
            self.counterexample = other.counterexample;
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "circuit={} inputs={} runs={} passed={} failed={} exhaustive_checked={} exhaustive_skipped={} exhaustive_failed={} max_terminals={}\n",
            self.circuit,
            self.inputs,
            self.runs,
            self.passed,
            self.failed,
            self.exhaustive_checked,
            self.exhaustive_skipped,
            self.exhaustive_failed,
            self.max_terminals
        );
        if let Some(c) = &self.counterexample {
            let seed = c.seed.map_or("exhaustive".to_string(), |s| s.to_string());
            out.push_str(&format!(
                "counterexample: circuit={} input={} seed={} expected={} got={}\nterminal: {}\n",
                c.circuit, c.input, seed, c.expected, c.got, c.terminal
            ));
        }
        out
    }
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn all_assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..1 << n).map(move |v| (0..n).map(|i| v >> (n - 1 - i) & 1 == 1).collect())
}

fn assignments(n: usize, cfg: &VerifyConfig) -> Result<Vec<Vec<bool>>, VerifyError> {
    match cfg.inputs {
        InputMode::All => {
            if n > cfg.all_cap {
                return Err(VerifyError::TooManyInputs {
                    inputs: n,
                    cap: cfg.all_cap,
                });
            }
            Ok(all_assignments(n).collect())
        }
        InputMode::Random(count) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.input_seed);
            Ok((0..count)
                .map(|_| (0..n).map(|_| rng.random_bool(0.5)).collect())
                .collect())
        }
    }
}

fn check_input(
    circuit: &Circuit,
    program: &StepProgram,
    bits: &[bool],
    cfg: &VerifyConfig,
) -> Result<VerifySummary, VerifyError> {
    let expected = circuit.evaluate(bits)?;
    let mut s = VerifySummary {
        inputs: 1,
        ..VerifySummary::default()
    };
    let opts = RunOptions {
        record_terminals: false,
        ..RunOptions::default()
    };
    let counterexample = |seed, got: String, terminal: String| Counterexample {
        circuit: circuit.name().to_string(),
        input: bits_to_string(bits),
        seed,
        expected: bits_to_string(&expected),
        got,
        terminal,
    };
    for &seed in &cfg.seeds {
        let run = program.execute(bits, Schedule::seeded(seed), &opts)?;
        s.runs += 1;
        if run.decoded.as_ref() == Ok(&expected) {
            s.passed += 1;
        } else {
            s.failed += 1;
            if s.counterexample.is_none() {
                let got = match &run.decoded {
                    Ok(b) => bits_to_string(b),
                    Err(e) => e.to_string(),
                };
                let terminal = run.final_config.display(program.alphabet()).to_string();
                s.counterexample = Some(counterexample(Some(seed), got, terminal));
            }
        }
    }
    if let Some(cap) = cfg.exhaustive {
        match program.enumerate_capped(bits, cfg.state_cap, cap)? {
            None => s.exhaustive_skipped += 1,
            Some(t) => {
                s.exhaustive_checked += 1;
                s.max_terminals = t.terminals.len();
                let bad = t
                    .terminals
                    .iter()
                    .find(|c| program.decode_output(c).as_ref() != Ok(&expected));
                if let Some(c) = bad {
                    s.exhaustive_failed += 1;
                    if s.counterexample.is_none() {
                        let got = match program.decode_output(c) {
                            Ok(b) => bits_to_string(&b),
                            Err(e) => e.to_string(),
                        };
                        let terminal = c.display(program.alphabet()).to_string();
                        s.counterexample = Some(counterexample(None, got, terminal));
                    }
                }
            }
        }
    }
    Ok(s)
}

/// Runs every (input, seed) pair and compares the decoded outputs with the
/// circuit. Work is spread over the rayon pool; aggregation follows input
/// order, so the summary is deterministic.
pub fn verify_program(
    circuit: &Circuit,
    program: &StepProgram,
    cfg: &VerifyConfig,
) -> Result<VerifySummary, VerifyError> {
    let n = circuit.num_inputs();
    if program.inputs().len() != n {
        return Err(VerifyError::InputMismatch {
            program: program.inputs().len(),
            circuit: n,
        });
    }
    let inputs = assignments(n, cfg)?;
    let parts: Vec<Result<VerifySummary, VerifyError>> = inputs
        .par_iter()
        .map(|bits| check_input(circuit, program, bits, cfg))
        .collect();
    let mut total = VerifySummary {
        circuit: circuit.name().to_string(),
        ..VerifySummary::default()
    };
    for p in parts {
        total.absorb(p?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::compile::{compile, Backend};
    use crate::crn::Rule;

    const AND3: &str =
        "circuit and3\ngate 1 INPUT\ngate 2 INPUT\ngate 3 INPUT\ngate 4 AND 1 2 3\noutputs 4\n";

    #[test]
    fn assignment_order_is_msb_first() {
        let all: Vec<String> = all_assignments(2).map(|b| bits_to_string(&b)).collect();
        assert_eq!(all, ["00", "01", "10", "11"]);
    }

    #[test]
    fn compiled_and_verifies_exhaustively() {
        let c = parse_circuit(AND3).unwrap();
        let p = compile(&c, Backend::Formula).unwrap().program;
        let cfg = VerifyConfig {
            exhaustive: Some(DEFAULT_VOLUME_CAP),
            ..VerifyConfig::default()
        };
        let s = verify_program(&c, &p, &cfg).unwrap();
        assert!(s.ok(), "{}", s.to_text());
        assert_eq!(s.runs, 8 * 25);
        assert_eq!(s.exhaustive_checked, 8);
        assert!(s.max_terminals >= 1);
    }

    #[test]
    fn corrupted_program_yields_counterexample() {
        let c = parse_circuit(AND3).unwrap();
        let p = compile(&c, Backend::Formula).unwrap().program;
        // Dropping the rule that lets a false input delete y[4]T breaks AND.
        let a = p.alphabet().clone();
        let victim = Rule::parse(&a, "x[3]F + y[4]T -> .").unwrap();
        let rules: Vec<Rule> = p
            .rules()
            .iter()
            .filter(|r| **r != victim)
            .cloned()
            .collect();
        let broken = StepProgram::new(
            a,
            rules,
            p.steps().to_vec(),
            p.inputs().to_vec(),
            p.outputs().to_vec(),
        )
        .unwrap();
        let s = verify_program(&c, &broken, &VerifyConfig::default()).unwrap();
        assert!(!s.ok());
        let ce = s.counterexample.unwrap();
        assert_eq!(ce.input, "110");
        assert_eq!(ce.expected, "0");
    }

    #[test]
    fn random_mode_is_seeded() {
        let c = parse_circuit(AND3).unwrap();
        let p = compile(&c, Backend::Exp).unwrap().program;
        let cfg = VerifyConfig {
            inputs: InputMode::Random(5),
            seeds: vec![1, 2],
            ..VerifyConfig::default()
        };
        let a = verify_program(&c, &p, &cfg).unwrap();
        assert_eq!(a, verify_program(&c, &p, &cfg).unwrap());
        assert_eq!(a.runs, 10);
    }

    #[test]
    fn input_cap_is_enforced() {
        let c = parse_circuit(AND3).unwrap();
        let p = compile(&c, Backend::Formula).unwrap().program;
        let cfg = VerifyConfig {
            all_cap: 2,
            ..VerifyConfig::default()
        };
        assert_eq!(
            verify_program(&c, &p, &cfg).unwrap_err(),
            VerifyError::TooManyInputs { inputs: 3, cap: 2 }
        );
    }
}
