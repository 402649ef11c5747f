//! The `V_D` circuit family and its Fibonacci copy-count bound.
//!
//! `V_D = s^(D)` chains `D` copies of a 3-bit stage function `s` fixed on
//! five rows and free on the other three.

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, GateId, GateKind};
use crate::compile::{compile_circuit_exp, CompileError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LowerBoundError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("D must be at least 1")]
    ZeroDepth,
    #[error("row {0:03b} is constrained and cannot be completed")]
    Constrained(u8),
    #[error("bad completion `{0}`")]
    BadCompletion(String),
}

/// Rows are written `x1x2x3` with `x1` as the most significant bit.
pub const CONSTRAINED: [(u8, u8); 5] = [
    (0b111, 0b111),
    (0b011, 0b000),
    (0b101, 0b011),
    (0b110, 0b101),
    (0b000, 0b110),
];

pub const FREE_ROWS: [u8; 3] = [0b001, 0b010, 0b100];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SFunctionSpec {
    /// Outputs for rows `001`, `010`, `100`.
    pub completion: [u8; 3],
}

impl Default for SFunctionSpec {
    /// Identity on the free rows.
    fn default() -> Self {
        SFunctionSpec {
            completion: FREE_ROWS,
        }
    }
}

impl SFunctionSpec {
    /// Parses `001=001,010=010,100=100`; rows left out keep the identity.
    pub fn parse_completion(text: &str) -> Result<Self, LowerBoundError> {
        let mut spec = SFunctionSpec::default();
        let bad = || LowerBoundError::BadCompletion(text.to_string());
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (row, out) = item.split_once('=').ok_or_else(bad)?;
            let parse = |s: &str| {
                if s.len() == 3 {
                    u8::from_str_radix(s, 2).map_err(|_| bad())
                } else {
                    Err(bad())
                }
            };
            let (row, out) = (parse(row.trim())?, parse(out.trim())?);
            let slot = FREE_ROWS
                .iter()
                .position(|&r| r == row)
                .ok_or(LowerBoundError::Constrained(row))?;
            spec.completion[slot] = out;
        }
        Ok(spec)
    }

    pub fn eval(&self, x: u8) -> u8 {
        let x = x & 0b111;
        if let Some(&(_, y)) = CONSTRAINED.iter().find(|&&(r, _)| r == x) {
            return y;
        }
        let slot = FREE_ROWS.iter().position(|&r| r == x).unwrap();
        self.completion[slot]
    }

    pub fn iterate(&self, x: u8, d: usize) -> u8 {
        (0..d).fold(x, |v, _| self.eval(v))
    }
}

/// A product term over three variables: `mask` selects the variables present,
/// `value` their required polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Cube {
    mask: u8,
    value: u8,
}

impl Cube {
    fn covers(self, m: u8) -> bool {
        m & self.mask == self.value
    }

    fn contains(self, other: Cube) -> bool {
        self.mask & other.mask == self.mask && other.value & self.mask == self.value
    }
}

/// Minimum sum of products for a 3-variable on-set: prime implicants by
/// enumeration, essentials first, then greedy cover.
fn minimize(on: &[u8]) -> Vec<Cube> {
    let mut implicants = Vec::new();
    for mask in 0u8..8 {
        for value in 0u8..8 {
            if value & !mask != 0 {
                continue;
            }
            let c = Cube { mask, value };
            if (0u8..8).filter(|&m| c.covers(m)).all(|m| on.contains(&m)) {
                implicants.push(c);
            }
        }
    }
    let primes: Vec<Cube> = implicants
        .iter()
        .copied()
        .filter(|&c| !implicants.iter().any(|&d| d != c && d.contains(c)))
        .collect();
    let mut chosen: Vec<Cube> = Vec::new();
    for &m in on {
        let covering: Vec<Cube> = primes.iter().copied().filter(|c| c.covers(m)).collect();
        if covering.len() == 1 && !chosen.contains(&covering[0]) {
            chosen.push(covering[0]);
        }
    }
    loop {
        let left: Vec<u8> = on
            .iter()
            .copied()
            .filter(|&m| !chosen.iter().any(|c| c.covers(m)))
            .collect();
        if left.is_empty() {
            break;
        }
        let best = primes
            .iter()
            .copied()
            .filter(|c| !chosen.contains(c))
            .max_by_key(|c| {
                (
                    left.iter().filter(|&&m| c.covers(m)).count(),
                    c.mask.count_zeros(),
                )
            })
            .unwrap();
        chosen.push(best);
    }
    chosen.sort_by_key(|c| (c.mask, c.value));
    chosen
}

struct Builder {
    gates: Vec<Gate>,
    next: GateId,
}

impl Builder {
    fn gate(&mut self, kind: GateKind, inputs: Vec<GateId>) -> GateId {
        let id = self.next;
        self.next += 1;
        self.gates.push(Gate { id, kind, inputs });
        id
    }

    /// One stage: NOT level for negative literals, AND per product, OR per
    /// output bit.
    fn stage(&mut self, spec: &SFunctionSpec, x: [GateId; 3]) -> [GateId; 3] {
        let mut neg: [Option<GateId>; 3] = [None; 3];
        let covers: Vec<Vec<Cube>> = (0..3)
            .map(|bit| {
                let on: Vec<u8> = (0u8..8)
                    .filter(|&m| spec.eval(m) >> (2 - bit) & 1 == 1)
                    .collect();
                minimize(&on)
            })
            .collect();
        for cube in covers.iter().flatten() {
            for v in 0..3 {
                let b = 1 << (2 - v);
                if cube.mask & b != 0 && cube.value & b == 0 && neg[v].is_none() {
                    neg[v] = Some(self.gate(GateKind::Not, vec![x[v]]));
                }
            }
        }
        let mut out = [0; 3];
        for (bit, cubes) in covers.iter().enumerate() {
            out[bit] = if cubes.is_empty() {
                self.gate(GateKind::ConstZero, vec![])
            } else if cubes.len() == 1 && cubes[0].mask == 0 {
                self.gate(GateKind::ConstOne, vec![])
            } else {
                let products = cubes
                    .iter()
                    .map(|c| {
                        let lits = (0..3)
                            .filter(|v| c.mask & (1 << (2 - v)) != 0)
                            .map(|v| {
                                if c.value & (1 << (2 - v)) != 0 {
                                    x[v]
                                } else {
                                    neg[v].unwrap()
                                }
                            })
                            .collect();
                        self.gate(GateKind::And, lits)
                    })
                    .collect();
                self.gate(GateKind::Or, products)
            };
        }
        out
    }
}

/// Drops non-input gates that reach no output.
fn prune(gates: Vec<Gate>, outputs: &[GateId]) -> Vec<Gate> {
    let mut live: std::collections::HashSet<GateId> = outputs.iter().copied().collect();
    for g in gates.iter().rev() {
        if live.contains(&g.id) {
            live.extend(g.inputs.iter().copied());
        }
    }
    gates
        .into_iter()
        .filter(|g| g.kind == GateKind::Input || live.contains(&g.id))
        .collect()
}

/// `D` chained stages; inputs are gates 1, 2, 3 and the outputs are the
/// last stage's three bits.
pub fn build_vd(d: usize, spec: &SFunctionSpec) -> Result<Circuit, LowerBoundError> {
    if d == 0 {
        return Err(LowerBoundError::ZeroDepth);
    }
    let mut b = Builder {
        gates: (1..=3)
            .map(|id| Gate {
                id,
                kind: GateKind::Input,
                inputs: vec![],
            })
            .collect(),
        next: 4,
    };
    let mut x = [1, 2, 3];
    for _ in 0..d {
        x = b.stage(spec, x);
    }
    let gates = prune(b.gates, &x);
    Ok(Circuit::new(format!("v{d}"), gates, x.to_vec())?)
}

pub fn build_s_stage(spec: &SFunctionSpec) -> Result<Circuit, LowerBoundError> {
    build_vd(1, spec)
}

/// `a_0 = a_1 = 1`, `a_k = a_{k-1} + a_{k-2}`, for `k` in `0..=d`.
pub fn fibonacci(d: usize) -> Vec<u64> {
    let mut a = vec![1u64; d + 1];
    for k in 2..=d {
        a[k] = a[k - 1] + a[k - 2];
    }
    a
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CopyBounds {
    /// Bound on `C_k(x_{1,k})` from the two-term chain, `k = 0..=D`.
    pub chain: Vec<u64>,
    /// Bound on `C_k(x_{1,k})` when every stage inequality is propagated.
    pub full: Vec<u64>,
}

/// Propagates the stage inequalities from the output stage upward.
///
/// Per stage `k`: `x1 >= y1 + y2 + y3`, `x2 >= y1`, `x3 >= y2`, and the stage
/// outputs satisfy `y_{i,k} >= x_{i,k-1}`, with `y_{i,0} >= 1`. The chain
/// keeps only `x1_k >= x1_{k-1} + x2_{k-1}` and `x2_{k-1} >= x1_{k-2}`,
/// seeded with `C_0(x_{1,0}) >= 1` and `C_1(x_{1,1}) >= 1`.
pub fn min_copy_bounds(d: usize) -> CopyBounds {
    let mut chain_x1 = vec![1u64; d + 1];
    let mut chain_x2 = vec![1u64; d + 1];
    for k in 1..=d {
        chain_x2[k] = chain_x1[k - 1];
        if k >= 2 {
            chain_x1[k] = chain_x1[k - 1] + chain_x2[k - 1];
        }
    }

    let mut full = Vec::with_capacity(d + 1);
    let mut y = [1u64; 3];
    for _ in 0..=d {
        let x = [y[0] + y[1] + y[2], y[0], y[1]];
        full.push(x[0]);
        y = x;
    }
    CopyBounds {
        chain: chain_x1,
        full,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FibRow {
    pub d: usize,
    pub a_d: u64,
    pub demand: u64,
    pub static_volume: u64,
    pub gates: usize,
    pub depth: usize,
    pub pass: bool,
}

/// Compiles `V_D` with the exponential-volume backend and compares the
/// demand on input `x1` and the static volume with `a_D`.
pub fn verify_fib_growth(d: usize, spec: &SFunctionSpec) -> Result<FibRow, LowerBoundError> {
    let c = build_vd(d, spec)?;
    let comp = compile_circuit_exp(&c)?;
    let a_d = fibonacci(d)[d];
    let demand = comp.report.demand.get(1);
    let static_volume = comp.report.static_volume;
    let stats = c.stats();
    Ok(FibRow {
        d,
        a_d,
        demand,
        static_volume,
        gates: stats.gates,
        depth: stats.depth,
        pass: demand >= a_d && static_volume >= a_d,
    })
}
