//! Threshold circuits over the AND/OR/NOT/MAJ basis.
//!
//! A [`Circuit`] is an immutable, validated DAG of gates identified by
//! positive integer ids. Source gates are `INPUT` bits (ordered by declaration)
//! and the two constants. Everything the compilers need is derived once at
//! construction: topological order, depth levels, consumer lists and the wire
//! index.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type GateId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateKind {
    Input,
    ConstZero,
    ConstOne,
    And,
    Or,
    Not,
    Maj,
}

impl GateKind {
    pub fn is_source(self) -> bool {
        matches!(
            self,
            GateKind::Input | GateKind::ConstZero | GateKind::ConstOne
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::Input => "INPUT",
            GateKind::ConstZero => "CONST_ZERO",
            GateKind::ConstOne => "CONST_ONE",
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Not => "NOT",
            GateKind::Maj => "MAJ",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "INPUT" => GateKind::Input,
            "CONST_ZERO" | "CONST0" | "ZERO" => GateKind::ConstZero,
            "CONST_ONE" | "CONST1" | "ONE" => GateKind::ConstOne,
            "AND" => GateKind::And,
            "OR" => GateKind::Or,
            "NOT" => GateKind::Not,
            "MAJ" | "MAJORITY" => GateKind::Maj,
            other => return Err(format!("unknown gate kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateKind,
    #[serde(default)]
    pub inputs: Vec<GateId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid JSON netlist: {0}")]
    Json(String),
    #[error("gate id 0 is reserved; ids must be positive")]
    ZeroId,
    #[error("duplicate gate id {0}")]
    DuplicateGate(GateId),
    #[error("gate {gate} references undefined gate {missing}")]
    DanglingReference { gate: GateId, missing: GateId },
    #[error("gate {gate} ({kind}) has fan-in {fan_in}, {expected}")]
    Arity {
        gate: GateId,
        kind: GateKind,
        fan_in: usize,
        expected: &'static str,
    },
    #[error("cycle detected through gate {0}")]
    Cycle(GateId),
    #[error("circuit declares no outputs")]
    EmptyOutputs,
    #[error("output references undefined gate {0}")]
    UnknownOutput(GateId),
    #[error("gate {0} does not reach any output")]
    DeadGate(GateId),
    #[error("input assignment has {got} bits but the circuit has {expected} inputs")]
    Assignment { expected: usize, got: usize },
    #[error("demand of gate {0} overflows a 64-bit count")]
    DemandOverflow(GateId),
}

/// One producer-to-consumer connection. `slot` distinguishes repeated wires
/// between the same pair of gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wire {
    pub producer: GateId,
    pub consumer: GateId,
    pub slot: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    /// Non-source gate count.
    pub gates: usize,
    /// Source gate count (inputs and constants).
    pub sources: usize,
    pub depth: usize,
    pub max_fan_out: usize,
    /// Largest number of non-source gates sharing a depth level.
    pub width: usize,
    /// Largest number of gates on any level, source level included.
    pub width_with_sources: usize,
}

impl CircuitStats {
    pub fn total_gates(&self) -> usize {
        self.gates + self.sources
    }
}

/// Number of output-species copies each gate must produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandMap {
    pub demand: BTreeMap<GateId, u64>,
}

impl DemandMap {
    pub fn get(&self, id: GateId) -> u64 {
        self.demand.get(&id).copied().unwrap_or(0)
    }

    pub fn max(&self) -> u64 {
        self.demand.values().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JsonNetlist {
    name: String,
    gates: Vec<Gate>,
    outputs: Vec<GateId>,
}

#[derive(Debug, Clone)]
pub struct Circuit {
    name: String,
    gates: Vec<Gate>,
    outputs: Vec<GateId>,
    index: HashMap<GateId, usize>,
    fanin: Vec<Vec<usize>>,
    consumers: Vec<Vec<usize>>,
    topo: Vec<usize>,
    depth: Vec<usize>,
    inputs: Vec<usize>,
    output_count: Vec<u64>,
}

impl Circuit {
    pub fn new(
        name: impl Into<String>,
        gates: Vec<Gate>,
        outputs: Vec<GateId>,
    ) -> Result<Self, CircuitError> {
        let mut index = HashMap::with_capacity(gates.len());
        for (i, g) in gates.iter().enumerate() {
            if g.id == 0 {
                return Err(CircuitError::ZeroId);
            }
            if index.insert(g.id, i).is_some() {
                return Err(CircuitError::DuplicateGate(g.id));
            }
        }

        let mut fanin = Vec::with_capacity(gates.len());
        for g in &gates {
            let n = g.inputs.len();
            let bad = match g.kind {
                k if k.is_source() => (n != 0).then_some("expected 0"),
                GateKind::Not => (n != 1).then_some("expected exactly 1"),
                _ => (n == 0).then_some("expected at least 1"),
            };
            if let Some(expected) = bad {
                return Err(CircuitError::Arity {
                    gate: g.id,
                    kind: g.kind,
                    fan_in: n,
                    expected,
                });
            }
            let mut ins = Vec::with_capacity(n);
            for src in &g.inputs {
                match index.get(src) {
                    Some(&j) => ins.push(j),
                    None => {
                        return Err(CircuitError::DanglingReference {
                            gate: g.id,
                            missing: *src,
                        })
                    }
                }
            }
            fanin.push(ins);
        }

        if outputs.is_empty() {
            return Err(CircuitError::EmptyOutputs);
        }
        let mut output_count = vec![0u64; gates.len()];
        for o in &outputs {
            match index.get(o) {
                Some(&i) => output_count[i] += 1,
                None => return Err(CircuitError::UnknownOutput(*o)),
            }
        }

        let mut consumers = vec![Vec::new(); gates.len()];
        for (i, ins) in fanin.iter().enumerate() {
            for &j in ins {
                consumers[j].push(i);
            }
        }

        // Kahn's algorithm; declaration order breaks ties so the result is stable.
        let mut pending: Vec<usize> = fanin.iter().map(Vec::len).collect();
        let mut ready: std::collections::VecDeque<usize> =
            (0..gates.len()).filter(|&i| pending[i] == 0).collect();
        let mut topo = Vec::with_capacity(gates.len());
        while let Some(i) = ready.pop_front() {
            topo.push(i);
            for &c in &consumers[i] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    ready.push_back(c);
                }
            }
        }
        if topo.len() != gates.len() {
            let stuck = (0..gates.len()).find(|&i| pending[i] > 0).unwrap();
            return Err(CircuitError::Cycle(gates[stuck].id));
        }

        let mut depth = vec![0usize; gates.len()];
        for &i in &topo {
            depth[i] = fanin[i].iter().map(|&j| depth[j] + 1).max().unwrap_or(0);
        }

        let mut live = vec![false; gates.len()];
        for &i in topo.iter().rev() {
            live[i] = output_count[i] > 0 || consumers[i].iter().any(|&c| live[c]);
        }
        if let Some(i) = (0..gates.len()).find(|&i| !live[i]) {
            return Err(CircuitError::DeadGate(gates[i].id));
        }

        let inputs = (0..gates.len())
            .filter(|&i| gates[i].kind == GateKind::Input)
            .collect();

        Ok(Circuit {
            name: name.into(),
            gates,
            outputs,
            index,
            fanin,
            consumers,
            topo,
            depth,
            inputs,
            output_count,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, idx: usize) -> &Gate {
        &self.gates[idx]
    }

    pub fn outputs(&self) -> &[GateId] {
        &self.outputs
    }

    pub fn index_of(&self, id: GateId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Indices of the `INPUT` gates in the order input bits are assigned.
    pub fn input_indices(&self) -> &[usize] {
        &self.inputs
    }

    pub fn input_ids(&self) -> Vec<GateId> {
        self.inputs.iter().map(|&i| self.gates[i].id).collect()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn fanin(&self, idx: usize) -> &[usize] {
        &self.fanin[idx]
    }

    /// One entry per outgoing wire, so repeated wires appear repeatedly.
    pub fn consumers(&self, idx: usize) -> &[usize] {
        &self.consumers[idx]
    }

    pub fn fan_out(&self, idx: usize) -> usize {
        self.consumers[idx].len()
    }

    /// Number of times the gate is listed in `outputs`.
    pub fn output_multiplicity(&self, idx: usize) -> u64 {
        self.output_count[idx]
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn depth_of(&self, idx: usize) -> usize {
        self.depth[idx]
    }

    pub fn depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Gate indices grouped by depth; level 0 holds the sources.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut levels = vec![Vec::new(); self.depth() + 1];
        for &i in &self.topo {
            levels[self.depth[i]].push(i);
        }
        for level in &mut levels {
            level.sort_unstable();
        }
        levels
    }

    /// Every gate (sources included) has fan-out at most one and there is a
    /// single output.
    pub fn is_formula(&self) -> bool {
        self.outputs.len() == 1 && self.consumers.iter().all(|c| c.len() <= 1)
    }

    /// All wires, indexed in lexicographic `(producer, consumer, slot)` order.
    pub fn wires(&self) -> Vec<Wire> {
        let mut wires = Vec::new();
        for (ci, ins) in self.fanin.iter().enumerate() {
            let mut seen: HashMap<usize, usize> = HashMap::new();
            for &p in ins {
                let slot = seen.entry(p).or_insert(0);
                wires.push(Wire {
                    producer: self.gates[p].id,
                    consumer: self.gates[ci].id,
                    slot: *slot,
                    index: 0,
                });
                *slot += 1;
            }
        }
        wires.sort();
        for (k, w) in wires.iter_mut().enumerate() {
            w.index = k;
        }
        wires
    }

    pub fn wire_index(&self, producer: GateId, consumer: GateId, slot: usize) -> Option<usize> {
        self.wires()
            .into_iter()
            .find(|w| w.producer == producer && w.consumer == consumer && w.slot == slot)
            .map(|w| w.index)
    }

    /// Value of every gate, indexed like [`Circuit::gates`].
    pub fn evaluate_gates(&self, bits: &[bool]) -> Result<Vec<bool>, CircuitError> {
        if bits.len() != self.inputs.len() {
            return Err(CircuitError::Assignment {
                expected: self.inputs.len(),
                got: bits.len(),
            });
        }
        let mut value = vec![false; self.gates.len()];
        for (&i, &b) in self.inputs.iter().zip(bits) {
            value[i] = b;
        }
        for &i in &self.topo {
            let ins = &self.fanin[i];
            value[i] = match self.gates[i].kind {
                GateKind::Input => value[i],
                GateKind::ConstZero => false,
                GateKind::ConstOne => true,
                GateKind::And => ins.iter().all(|&j| value[j]),
                GateKind::Or => ins.iter().any(|&j| value[j]),
                GateKind::Not => !value[ins[0]],
                GateKind::Maj => {
                    let ones = ins.iter().filter(|&&j| value[j]).count();
                    majority(ones, ins.len())
                }
            };
        }
        Ok(value)
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<Vec<bool>, CircuitError> {
        let value = self.evaluate_gates(bits)?;
        Ok(self.outputs.iter().map(|o| value[self.index[o]]).collect())
    }

    pub fn stats(&self) -> CircuitStats {
        let levels = self.levels();
        let sources = self.gates.iter().filter(|g| g.kind.is_source()).count();
        CircuitStats {
            gates: self.gates.len() - sources,
            sources,
            depth: self.depth(),
            max_fan_out: self
                .consumers
                .iter()
                .map(Vec::len)
                .max()
                .unwrap_or(0)
                .max(1),
            width: levels
                .iter()
                .skip(1)
                .map(Vec::len)
                .max()
                .unwrap_or(0)
                .max(1),
            width_with_sources: levels.iter().map(Vec::len).max().unwrap_or(1),
        }
    }

    /// Backward pass: a gate must supply one copy per output designation plus
    /// the demand of every consumer wire.
    pub fn demand_analysis(&self) -> Result<DemandMap, CircuitError> {
        let demand = self.demand_vector()?;
        Ok(DemandMap {
            demand: self
                .gates
                .iter()
                .zip(demand)
                .map(|(g, d)| (g.id, d))
                .collect(),
        })
    }

    pub(crate) fn demand_vector(&self) -> Result<Vec<u64>, CircuitError> {
        let mut demand = vec![0u64; self.gates.len()];
        for &i in self.topo.iter().rev() {
            let mut d = self.output_count[i];
            for &c in &self.consumers[i] {
                d = d
                    .checked_add(demand[c])
                    .ok_or(CircuitError::DemandOverflow(self.gates[i].id))?;
            }
            demand[i] = d;
        }
        Ok(demand)
    }

    /// Returns an equivalent circuit in which every wire connects adjacent
    /// depth levels and every output sits on the deepest level. Skipping wires
    /// are routed through chains of fan-in-1 OR buffers, shared per producer.
    /// The second value is the number of buffers inserted.
    pub fn level_aligned(&self) -> (Circuit, usize) {
        let max_depth = self.depth();
        let mut next_id = self.gates.iter().map(|g| g.id).max().unwrap_or(0) + 1;
        let mut gates = self.gates.clone();
        // chain[p][k] = id of the gate carrying p's value at depth depth(p)+k.
        let mut chains: HashMap<usize, Vec<GateId>> = HashMap::new();
        let mut buffers = 0usize;

        let mut tap = |p: usize, at_depth: usize, gates: &mut Vec<Gate>| -> GateId {
            let base = self.depth[p];
            let chain = chains.entry(p).or_insert_with(|| vec![self.gates[p].id]);
            while base + chain.len() - 1 < at_depth {
                let prev = *chain.last().unwrap();
                gates.push(Gate {
                    id: next_id,
                    kind: GateKind::Or,
                    inputs: vec![prev],
                });
                chain.push(next_id);
                next_id += 1;
                buffers += 1;
            }
            chain[at_depth - base]
        };

        for i in 0..self.gates.len() {
            let d = self.depth[i];
            for k in 0..self.fanin[i].len() {
                let p = self.fanin[i][k];
                if self.depth[p] + 1 < d {
                    let id = tap(p, d - 1, &mut gates);
                    gates[i].inputs[k] = id;
                }
            }
        }
        let outputs: Vec<GateId> = self
            .outputs
            .iter()
            .map(|o| {
                let i = self.index[o];
                if self.depth[i] < max_depth {
                    tap(i, max_depth, &mut gates)
                } else {
                    *o
                }
            })
            .collect();

        let aligned = Circuit::new(self.name.clone(), gates, outputs)
            .expect("buffer insertion preserves validity");
        (aligned, buffers)
    }

    pub fn to_netlist(&self) -> String {
        let mut out = format!("circuit {}\n", self.name);
        for g in &self.gates {
            out.push_str(&format!("gate {} {}", g.id, g.kind));
            for i in &g.inputs {
                out.push_str(&format!(" {i}"));
            }
            out.push('\n');
        }
        out.push_str("outputs");
        for o in &self.outputs {
            out.push_str(&format!(" {o}"));
        }
        out.push('\n');
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&JsonNetlist {
            name: self.name.clone(),
            gates: self.gates.clone(),
            outputs: self.outputs.clone(),
        })
        .expect("netlist serializes")
    }
}

/// Majority with the even-fan-in padding convention: one extra false vote is
/// appended when `n` is even.
pub fn majority(ones: usize, n: usize) -> bool {
    let padded = if n.is_multiple_of(2) { n + 1 } else { n };
    2 * ones > padded
}

/// Parses either the line-oriented netlist or its JSON form, chosen by the
/// first non-whitespace byte.
pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    if text.trim_start().starts_with('{') {
        let net: JsonNetlist =
            serde_json::from_str(text).map_err(|e| CircuitError::Json(e.to_string()))?;
        return Circuit::new(net.name, net.gates, net.outputs);
    }

    let mut name = None;
    let mut gates = Vec::new();
    let mut outputs: Option<Vec<GateId>> = None;

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("");
        let mut tokens = tokenize(line);
        let Some((col, head)) = tokens.next() else {
            continue;
        };
        let syntax = |column: usize, message: String| CircuitError::Syntax {
            line: line_no,
            column,
            message,
        };
        let parse_id = |(column, tok): (usize, &str)| -> Result<GateId, CircuitError> {
            tok.parse::<GateId>()
                .map_err(|_| syntax(column, format!("expected gate id, found `{tok}`")))
        };

        match head {
            "circuit" => {
                if name.is_some() {
                    return Err(syntax(col, "duplicate `circuit` header".into()));
                }
                let (c, n) = tokens
                    .next()
                    .ok_or_else(|| syntax(col + head.len(), "missing circuit name".into()))?;
                if let Some((c2, extra)) = tokens.next() {
                    let _ = c;
                    return Err(syntax(c2, format!("unexpected token `{extra}`")));
                }
                name = Some(n.to_string());
            }
            "gate" => {
                if name.is_none() {
                    return Err(syntax(col, "`gate` before `circuit` header".into()));
                }
                if outputs.is_some() {
                    return Err(syntax(col, "`gate` after `outputs`".into()));
                }
                let id_tok = tokens
                    .next()
                    .ok_or_else(|| syntax(col + head.len(), "missing gate id".into()))?;
                let id = parse_id(id_tok)?;
                let (kc, kind_tok) = tokens
                    .next()
                    .ok_or_else(|| syntax(id_tok.0 + id_tok.1.len(), "missing gate kind".into()))?;
                let kind = kind_tok.parse::<GateKind>().map_err(|m| syntax(kc, m))?;
                let inputs = tokens.map(parse_id).collect::<Result<Vec<_>, _>>()?;
                gates.push(Gate { id, kind, inputs });
            }
            "outputs" => {
                if name.is_none() {
                    return Err(syntax(col, "`outputs` before `circuit` header".into()));
                }
                if outputs.is_some() {
                    return Err(syntax(col, "duplicate `outputs` line".into()));
                }
                outputs = Some(tokens.map(parse_id).collect::<Result<Vec<_>, _>>()?);
            }
            other => return Err(syntax(col, format!("unknown directive `{other}`"))),
        }
    }

    let name = name.ok_or(CircuitError::Syntax {
        line: 1,
        column: 1,
        message: "missing `circuit` header".into(),
    })?;
    Circuit::new(name, gates, outputs.unwrap_or_default())
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokenize(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0usize;
    std::iter::from_fn(move || {
        let trimmed = rest.trim_start();
        offset += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return None;
        }
        let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let tok = &trimmed[..end];
        let col = offset + 1;
        offset += end;
        rest = &trimmed[end..];
        Some((col, tok))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: &str = "circuit fig\n\
        gate 1 INPUT\ngate 2 INPUT\ngate 3 INPUT\ngate 4 INPUT\n\
        gate 5 AND 1 2\ngate 6 AND 3 4\ngate 7 OR 5 6\noutputs 7\n";

    fn gate(id: GateId, kind: GateKind, inputs: &[GateId]) -> Gate {
        Gate {
            id,
            kind,
            inputs: inputs.to_vec(),
        }
    }

    #[test]
    fn smallest_and() {
        let c = parse_circuit("circuit a\ngate 1 INPUT\ngate 2 INPUT\ngate 3 AND 1 2\noutputs 3\n")
            .unwrap();
        let s = c.stats();
        assert_eq!((s.gates, s.depth), (1, 1));
    }

    #[test]
    fn indexing_formula_stats() {
        let c = parse_circuit(FIG).unwrap();
        assert!(c.is_formula());
        let s = c.stats();
        assert_eq!((s.gates, s.depth, s.max_fan_out, s.width), (3, 2, 1, 2));
        assert_eq!(
            c.evaluate(&[true, false, false, true]).unwrap(),
            vec![false]
        );
    }

    #[test]
    fn not_arity_rejected() {
        let err =
            parse_circuit("circuit n\ngate 1 INPUT\ngate 2 INPUT\ngate 3 NOT 1 2\noutputs 3\n")
                .unwrap_err();
        assert!(matches!(
            err,
            CircuitError::Arity {
                gate: 3,
                fan_in: 2,
                ..
            }
        ));
    }

    #[test]
    fn structural_errors() {
        let dangling = Circuit::new("d", vec![gate(2, GateKind::And, &[9])], vec![2]);
        assert_eq!(
            dangling.unwrap_err(),
            CircuitError::DanglingReference {
                gate: 2,
                missing: 9
            }
        );
        let cyc = Circuit::new(
            "c",
            vec![gate(1, GateKind::And, &[2]), gate(2, GateKind::Or, &[1])],
            vec![2],
        );
        assert!(matches!(cyc.unwrap_err(), CircuitError::Cycle(_)));
        let empty = Circuit::new("e", vec![gate(1, GateKind::Input, &[])], vec![]);
        assert_eq!(empty.unwrap_err(), CircuitError::EmptyOutputs);
        let dead = Circuit::new(
            "x",
            vec![
                gate(1, GateKind::Input, &[]),
                gate(2, GateKind::Input, &[]),
                gate(3, GateKind::Not, &[1]),
            ],
            vec![3],
        );
        assert_eq!(dead.unwrap_err(), CircuitError::DeadGate(2));
        let dup = Circuit::new(
            "x",
            vec![gate(1, GateKind::Input, &[]), gate(1, GateKind::Input, &[])],
            vec![1],
        );
        assert_eq!(dup.unwrap_err(), CircuitError::DuplicateGate(1));
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse_circuit("circuit s\ngate 1 INPUT\ngate 2 XOR 1\noutputs 2\n").unwrap_err();
        assert_eq!(
            err,
            CircuitError::Syntax {
                line: 3,
                column: 8,
                message: "unknown gate kind `XOR`".into()
            }
        );
        let err = parse_circuit("circuit s\ngate x INPUT\n").unwrap_err();
        assert!(matches!(
            err,
            CircuitError::Syntax {
                line: 2,
                column: 6,
                ..
            }
        ));
        let err = parse_circuit("gate 1 INPUT\n").unwrap_err();
        assert!(matches!(
            err,
            CircuitError::Syntax {
                line: 1,
                column: 1,
                ..
            }
        ));
    }

    #[test]
    fn json_form_matches_text_form() {
        let c = parse_circuit(FIG).unwrap();
        let j = parse_circuit(&c.to_json()).unwrap();
        assert_eq!(c.gates(), j.gates());
        assert_eq!(c.outputs(), j.outputs());
        let again = parse_circuit(&c.to_netlist()).unwrap();
        assert_eq!(c.gates(), again.gates());
    }

    #[test]
    fn gate_semantics() {
        let and3 = Circuit::new(
            "a",
            vec![
                gate(1, GateKind::Input, &[]),
                gate(2, GateKind::Input, &[]),
                gate(3, GateKind::Input, &[]),
                gate(4, GateKind::And, &[1, 2, 3]),
                gate(5, GateKind::Maj, &[1, 2, 3]),
            ],
            vec![4, 5],
        )
        .unwrap();
        assert_eq!(
            and3.evaluate(&[true, true, false]).unwrap(),
            vec![false, true]
        );
        assert_eq!(
            and3.evaluate(&[true]).unwrap_err(),
            CircuitError::Assignment {
                expected: 3,
                got: 1
            }
        );
    }

    #[test]
    fn even_majority_pads_with_false() {
        assert!(!majority(1, 2));
        assert!(majority(2, 2));
        assert!(!majority(2, 4));
        assert!(majority(3, 4));
        assert!(majority(1, 1));
    }

    #[test]
    fn constants_evaluate_to_their_value() {
        let c = Circuit::new(
            "k",
            vec![
                gate(1, GateKind::ConstOne, &[]),
                gate(2, GateKind::ConstZero, &[]),
                gate(3, GateKind::Or, &[1, 2]),
                gate(4, GateKind::And, &[1, 2]),
            ],
            vec![3, 4],
        )
        .unwrap();
        assert_eq!(c.num_inputs(), 0);
        assert_eq!(c.evaluate(&[]).unwrap(), vec![true, false]);
    }

    #[test]
    fn not_fanout_three() {
        let c = Circuit::new(
            "nf",
            vec![
                gate(1, GateKind::Input, &[]),
                gate(2, GateKind::Not, &[1]),
                gate(3, GateKind::Or, &[2]),
                gate(4, GateKind::Or, &[2]),
                gate(5, GateKind::Or, &[2]),
            ],
            vec![3, 4, 5],
        )
        .unwrap();
        assert_eq!(c.stats().max_fan_out, 3);
        assert_eq!(c.demand_analysis().unwrap().get(2), 3);
    }

    #[test]
    fn demand_examples() {
        let c = parse_circuit(FIG).unwrap();
        assert!(c
            .demand_analysis()
            .unwrap()
            .demand
            .values()
            .all(|&d| d == 1));

        let fan = Circuit::new(
            "f",
            vec![
                gate(1, GateKind::Input, &[]),
                gate(2, GateKind::Input, &[]),
                gate(3, GateKind::And, &[1, 2]),
                gate(4, GateKind::Or, &[3]),
                gate(5, GateKind::Not, &[3]),
            ],
            vec![4, 5],
        )
        .unwrap();
        let d = fan.demand_analysis().unwrap();
        assert_eq!((d.get(3), d.get(1), d.get(2)), (2, 2, 2));
    }

    #[test]
    fn demand_doubles_per_level_of_binary_fanout() {
        // input -> g1 -> {g2, g2'} -> ... with every gate feeding two consumers.
        let mut gates = vec![gate(1, GateKind::Input, &[])];
        let mut frontier = vec![1];
        let mut next = 2;
        for _ in 0..3 {
            let mut layer = Vec::new();
            for &p in &frontier {
                for _ in 0..2 {
                    gates.push(gate(next, GateKind::Or, &[p]));
                    layer.push(next);
                    next += 1;
                }
            }
            frontier = layer;
        }
        let c = Circuit::new("chain", gates, frontier).unwrap();
        assert_eq!(c.stats().depth, 3);
        assert_eq!(c.demand_analysis().unwrap().get(1), 8);
    }

    #[test]
    fn duplicate_wires_get_distinct_slots() {
        let c = Circuit::new(
            "dup",
            vec![
                gate(1, GateKind::Input, &[]),
                gate(2, GateKind::And, &[1, 1]),
            ],
            vec![2],
        )
        .unwrap();
        let wires = c.wires();
        assert_eq!(wires.len(), 2);
        assert_eq!(c.wire_index(1, 2, 0), Some(0));
        assert_eq!(c.wire_index(1, 2, 1), Some(1));
        assert_eq!(c.demand_analysis().unwrap().get(1), 2);
        assert!(!c.is_formula());
    }

    #[test]
    fn level_alignment_buffers_skipping_wires() {
        let c = Circuit::new(
            "skip",
            vec![
                gate(1, GateKind::Input, &[]),
                gate(2, GateKind::Input, &[]),
                gate(3, GateKind::Not, &[1]),
                gate(4, GateKind::Not, &[3]),
                gate(5, GateKind::And, &[4, 2]),
            ],
            vec![5, 3],
        )
        .unwrap();
        let (aligned, inserted) = c.level_aligned();
        // 2 needs two buffers to reach depth 2, output 3 two more to reach depth 3.
        assert_eq!(inserted, 4);
        for i in 0..aligned.gates().len() {
            for &p in aligned.fanin(i) {
                assert_eq!(aligned.depth_of(p) + 1, aligned.depth_of(i));
            }
        }
        for o in aligned.outputs() {
            assert_eq!(aligned.depth_of(aligned.index_of(*o).unwrap()), 3);
        }
        for bits in 0..4u32 {
            let x = [bits & 1 == 1, bits & 2 == 2];
            assert_eq!(c.evaluate(&x).unwrap(), aligned.evaluate(&x).unwrap());
        }
    }
}
