//! Compiles the four-input indexing formula and prints its step table, then
//! runs it on `1001`.

use stepcrn::circuit::parse_circuit;
use stepcrn::compile::compile_formula;
use stepcrn::engine::Schedule;

fn main() -> anyhow::Result<()> {
    let circuit = parse_circuit(include_str!("fig_indexingformula.net"))?;
    let compiled = compile_formula(&circuit)?;
    let p = &compiled.program;
    let a = p.alphabet();

    for (k, step) in p.steps().iter().enumerate() {
        println!("step {k}: add {}", step.display(a));
    }
    println!("{} rules, {} species", p.rules().len(), a.len());

    let bits = [true, false, false, true];
    let run = p.run(&bits, Schedule::seeded(0))?;
    for (k, t) in run.per_step_terminal.iter().enumerate() {
        println!("terminal after step {k}: {}", t.display(a));
    }
    println!("evaluate: {:?}", circuit.evaluate(&bits)?);
    println!("decoded:  {:?}", run.decoded);
    Ok(())
}
