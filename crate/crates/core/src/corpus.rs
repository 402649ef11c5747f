//! Seeded random circuit generation for differential testing.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateId, GateKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("empty range for {0}")]
    EmptyRange(&'static str),
    #[error("{0} must be at least {1}")]
    TooSmall(&'static str, usize),
    #[error("majority fraction {0} is outside [0, 1]")]
    Fraction(f64),
    #[error("no circuit satisfying the ranges found after {0} attempts")]
    Unsatisfiable(usize),
}

/// Ranges are inclusive. Fan-out range `1..=1` produces formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub depth: RangeInclusive<usize>,
    /// Non-source gates.
    pub gates: RangeInclusive<usize>,
    pub inputs: RangeInclusive<usize>,
    pub fan_in: RangeInclusive<usize>,
    pub fan_out: RangeInclusive<usize>,
    pub maj_fraction: f64,
    pub seed: u64,
    pub count: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            depth: 1..=4,
            gates: 1..=16,
            inputs: 1..=6,
            fan_in: 1..=3,
            fan_out: 1..=1,
            maj_fraction: 0.3,
            seed: 0,
            count: 10,
        }
    }
}

const ATTEMPTS: usize = 20_000;

impl CorpusSpec {
    pub fn is_formula(&self) -> bool {
        *self.fan_out.end() == 1
    }

    fn validate(&self) -> Result<(), CorpusError> {
        for (name, r) in [
            ("depth", &self.depth),
            ("gates", &self.gates),
            ("inputs", &self.inputs),
            ("fan-in", &self.fan_in),
            ("fan-out", &self.fan_out),
        ] {
            if r.is_empty() {
                return Err(CorpusError::EmptyRange(name));
            }
        }
        if *self.depth.start() < 1 {
            return Err(CorpusError::TooSmall("depth", 1));
        }
        if *self.inputs.start() < 1 {
            return Err(CorpusError::TooSmall("inputs", 1));
        }
        if *self.fan_in.start() < 1 {
            return Err(CorpusError::TooSmall("fan-in", 1));
        }
        if *self.fan_out.end() < 1 {
            return Err(CorpusError::TooSmall("fan-out", 1));
        }
        if *self.gates.end() < *self.depth.start() {
            return Err(CorpusError::EmptyRange("gates within depth"));
        }
        if !(0.0..=1.0).contains(&self.maj_fraction) {
            return Err(CorpusError::Fraction(self.maj_fraction));
        }
        Ok(())
    }

    fn accepts(&self, c: &Circuit) -> bool {
        let s = c.stats();
        self.depth.contains(&s.depth)
            && self.gates.contains(&s.gates)
            && self.inputs.contains(&c.num_inputs())
            && s.max_fan_out <= *self.fan_out.end()
            && (c.gates().len() == s.sources || s.max_fan_out >= *self.fan_out.start())
    }
}

fn pick_kind(rng: &mut ChaCha8Rng, maj_fraction: f64) -> GateKind {
    if rng.random_bool(maj_fraction) {
        GateKind::Maj
    } else {
        [GateKind::And, GateKind::Or, GateKind::Not][rng.random_range(0..3)]
    }
}

fn fan_in_for(kind: GateKind, rng: &mut ChaCha8Rng, range: &RangeInclusive<usize>) -> usize {
    if kind == GateKind::Not {
        1
    } else {
        rng.random_range(range.clone())
    }
}

enum Node {
    Leaf,
    Gate(GateKind, Vec<Node>),
}

fn tree(rng: &mut ChaCha8Rng, spec: &CorpusSpec, depth: usize, budget: &mut usize) -> Node {
    if depth == 0 || *budget == 0 {
        return Node::Leaf;
    }
    *budget -= 1;
    let kind = pick_kind(rng, spec.maj_fraction);
    let k = fan_in_for(kind, rng, &spec.fan_in);
    let deep = rng.random_range(0..k);
    let children = (0..k)
        .map(|slot| {
            let d = if slot == deep {
                depth - 1
            } else {
                rng.random_range(0..depth)
            };
            tree(rng, spec, d, budget)
        })
        .collect();
    Node::Gate(kind, children)
}

fn flatten_tree(root: &Node, name: String) -> Circuit {
    fn leaves(n: &Node) -> usize {
        match n {
            Node::Leaf => 1,
            Node::Gate(_, ch) => ch.iter().map(leaves).sum(),
        }
    }
    fn emit(
        n: &Node,
        next_input: &mut GateId,
        next_gate: &mut GateId,
        gates: &mut Vec<Gate>,
    ) -> GateId {
        match n {
            Node::Leaf => {
                let id = *next_input;
                *next_input += 1;
                id
            }
            Node::Gate(kind, ch) => {
                let inputs = ch
                    .iter()
                    .map(|c| emit(c, next_input, next_gate, gates))
                    .collect();
                let id = *next_gate;
                *next_gate += 1;
                gates.push(Gate {
                    id,
                    kind: *kind,
                    inputs,
                });
                id
            }
        }
    }
    let n = leaves(root) as GateId;
    let mut gates: Vec<Gate> = (1..=n)
        .map(|id| Gate {
            id,
            kind: GateKind::Input,
            inputs: vec![],
        })
        .collect();
    let (mut next_input, mut next_gate) = (1, n + 1);
    let out = emit(root, &mut next_input, &mut next_gate, &mut gates);
    Circuit::new(name, gates, vec![out]).expect("generated trees are valid formulas")
}

fn random_formula(rng: &mut ChaCha8Rng, spec: &CorpusSpec, name: String) -> Circuit {
    let depth = rng.random_range(spec.depth.clone());
    let mut budget = *spec.gates.end();
    let root = tree(rng, spec, depth, &mut budget);
    flatten_tree(&root, name)
}

fn random_dag(rng: &mut ChaCha8Rng, spec: &CorpusSpec, name: String) -> Option<Circuit> {
    let depth = rng.random_range(spec.depth.clone());
    let lo = (*spec.gates.start()).max(depth);
    let hi = *spec.gates.end();
    if lo > hi {
        return None;
    }
    let total = rng.random_range(lo..=hi);
    let mut per_level = vec![1usize; depth];
    for _ in depth..total {
        per_level[rng.random_range(0..depth)] += 1;
    }
    let n = rng.random_range(spec.inputs.clone());
    let max_out = *spec.fan_out.end();

    // Gate indices by level; index k has id k + 1 before compaction.
    let mut level_of = vec![0usize; n];
    let mut kinds = vec![GateKind::Input; n];
    let mut fanin: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut used = vec![0usize; n];
    let mut by_level: Vec<Vec<usize>> = vec![(0..n).collect()];
    for (l, &width) in per_level.iter().enumerate() {
        let level = l + 1;
        let mut here = Vec::new();
        for _ in 0..width {
            let kind = pick_kind(rng, spec.maj_fraction);
            let k = fan_in_for(kind, rng, &spec.fan_in);
            let prev: Vec<usize> = by_level[level - 1]
                .iter()
                .copied()
                .filter(|&p| used[p] < max_out)
                .collect();
            if prev.is_empty() {
                return None;
            }
            let fresh: Vec<usize> = prev.iter().copied().filter(|&p| used[p] == 0).collect();
            let first = if !fresh.is_empty() && rng.random_bool(0.8) {
                fresh[rng.random_range(0..fresh.len())]
            } else {
                prev[rng.random_range(0..prev.len())]
            };
            let mut ins = vec![first];
            let pool: Vec<usize> = (0..kinds.len())
                .filter(|&p| level_of[p] < level && used[p] < max_out && p != first)
                .collect();
            let unused: Vec<usize> = pool.iter().copied().filter(|&p| used[p] == 0).collect();
            for _ in 1..k {
                let src = if !unused.is_empty() && rng.random_bool(0.7) {
                    &unused
                } else {
                    &pool
                };
                let cand: Vec<usize> = src.iter().copied().filter(|p| !ins.contains(p)).collect();
                if cand.is_empty() {
                    break;
                }
                ins.push(cand[rng.random_range(0..cand.len())]);
            }
            for &p in &ins {
                used[p] += 1;
            }
            let idx = kinds.len();
            kinds.push(kind);
            level_of.push(level);
            fanin.push(ins);
            used.push(0);
            here.push(idx);
        }
        by_level.push(here);
    }

    // Drop unused inputs, then give every remaining gate a compact id.
    let keep: Vec<usize> = (0..kinds.len())
        .filter(|&i| kinds[i] != GateKind::Input || used[i] > 0)
        .collect();
    let mut id = vec![0 as GateId; kinds.len()];
    for (k, &i) in keep.iter().enumerate() {
        id[i] = k as GateId + 1;
    }
    let gates = keep
        .iter()
        .map(|&i| Gate {
            id: id[i],
            kind: kinds[i],
            inputs: fanin[i].iter().map(|&p| id[p]).collect(),
        })
        .collect();
    let outputs = keep
        .iter()
        .copied()
        .filter(|&i| kinds[i] != GateKind::Input && used[i] == 0)
        .map(|i| id[i])
        .collect();
    Circuit::new(name, gates, outputs).ok()
}

/// Generates `spec.count` circuits; the same spec always yields the same
/// circuits.
pub fn generate(spec: &CorpusSpec) -> Result<Vec<Circuit>, CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for k in 0..spec.count {
        let name = format!("gen_{}_{k:04}", spec.seed);
        let mut found = None;
        for _ in 0..ATTEMPTS {
            let candidate = if spec.is_formula() {
                Some(random_formula(&mut rng, spec, name.clone()))
            } else {
                random_dag(&mut rng, spec, name.clone())
            };
            if let Some(c) = candidate.filter(|c| spec.accepts(c)) {
                found = Some(c);
                break;
            }
        }
        out.push(found.ok_or(CorpusError::Unsatisfiable(ATTEMPTS))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = CorpusSpec {
            seed: 7,
            ..CorpusSpec::default()
        };
        let a: Vec<String> = generate(&spec)
            .unwrap()
            .iter()
            .map(Circuit::to_netlist)
            .collect();
        let b: Vec<String> = generate(&spec)
            .unwrap()
            .iter()
            .map(Circuit::to_netlist)
            .collect();
        assert_eq!(a.len(), 10);
        assert_eq!(a, b);
    }

    #[test]
    fn formulas_are_formulas() {
        let spec = CorpusSpec {
            count: 50,
            depth: 1..=5,
            gates: 1..=20,
            inputs: 1..=8,
            ..CorpusSpec::default()
        };
        for c in generate(&spec).unwrap() {
            assert!(c.is_formula(), "{}", c.to_netlist());
            let s = c.stats();
            assert!(s.depth <= 5 && s.gates <= 20 && c.num_inputs() <= 8);
        }
    }

    #[test]
    fn all_majority() {
        let spec = CorpusSpec {
            maj_fraction: 1.0,
            fan_out: 1..=3,
            ..CorpusSpec::default()
        };
        for c in generate(&spec).unwrap() {
            assert!(c
                .gates()
                .iter()
                .all(|g| g.kind.is_source() || g.kind == GateKind::Maj));
        }
    }

    #[test]
    fn circuits_respect_ranges() {
        let spec = CorpusSpec {
            depth: 4..=4,
            gates: 4..=12,
            fan_out: 1..=3,
            count: 30,
            seed: 3,
            ..CorpusSpec::default()
        };
        for c in generate(&spec).unwrap() {
            let s = c.stats();
            assert_eq!(s.depth, 4);
            assert!((1..=3).contains(&s.max_fan_out));
            assert!((4..=12).contains(&s.gates));
        }
    }

    #[test]
    fn contradictory_ranges_are_rejected() {
        #[allow(clippy::reversed_empty_ranges)]
        let spec = CorpusSpec {
            depth: 3..=2,
            ..CorpusSpec::default()
        };
        assert!(matches!(
            generate(&spec),
            Err(CorpusError::EmptyRange("depth"))
        ));
        let spec = CorpusSpec {
            maj_fraction: 1.5,
            ..CorpusSpec::default()
        };
        assert!(matches!(generate(&spec), Err(CorpusError::Fraction(_))));
    }
}
