//! Enumerates every terminal configuration of each step, not just the ones a
//! random schedule happens to reach.

use std::collections::BTreeSet;

use stepcrn::circuit::parse_circuit;
use stepcrn::compile::compile_formula;
use stepcrn::engine::DEFAULT_STATE_CAP;
use stepcrn::verify::{all_assignments, bits_to_string};

fn main() -> anyhow::Result<()> {
    let circuit = parse_circuit(include_str!("maj3.net"))?;
    let p = compile_formula(&circuit)?.program;
    for bits in all_assignments(circuit.num_inputs()) {
        let t = p.enumerate(&bits, DEFAULT_STATE_CAP)?;
        let decoded: BTreeSet<String> = t
            .terminals
            .iter()
            .map(|c| match p.decode_output(c) {
                Ok(out) => bits_to_string(&out),
                Err(e) => e.to_string(),
            })
            .collect();
        println!(
            "{} -> {} terminal(s), decodes {:?}, per-step sizes {:?}",
            bits_to_string(&bits),
            t.terminals.len(),
            decoded,
            t.per_step
        );
    }
    Ok(())
}
