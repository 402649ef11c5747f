//! Fan-out with true void rules only: every wire needs its own copies, so
//! demand multiplies along paths.

use stepcrn::circuit::parse_circuit;
use stepcrn::compile::compile_circuit_exp;
use stepcrn::engine::Schedule;

fn main() -> anyhow::Result<()> {
    let circuit = parse_circuit(include_str!("and_fanout2.net"))?;
    let compiled = compile_circuit_exp(&circuit)?;
    print!("{}", compiled.report.to_key_value());

    let p = &compiled.program;
    let run = p.run(&[true, false], Schedule::seeded(3))?;
    // Step 1 is the AND gate; both copies of the false wire survive it.
    println!(
        "after AND: {}",
        run.per_step_terminal[1].display(p.alphabet())
    );
    println!("decoded: {:?}", run.decoded);
    Ok(())
}
