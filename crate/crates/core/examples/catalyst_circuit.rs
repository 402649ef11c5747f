//! The catalytic backend: constant copies per gate, deleters clear each
//! level, so resident volume tracks circuit width instead of path count.

use stepcrn::circuit::parse_circuit;
use stepcrn::compile::{compile_circuit_catalyst, compile_circuit_exp};
use stepcrn::engine::Schedule;

fn main() -> anyhow::Result<()> {
    let circuit = parse_circuit(include_str!("not_fanout3.net"))?;
    let cat = compile_circuit_catalyst(&circuit)?;
    let exp = compile_circuit_exp(&circuit)?;
    println!(
        "exp:      {} steps, static volume {}",
        exp.report.step_count, exp.report.static_volume
    );
    println!(
        "catalyst: {} steps, static volume {}",
        cat.report.step_count, cat.report.static_volume
    );

    let bits = [false, true];
    let run = cat
        .program
        .execute(&bits, Schedule::seeded(0), &Default::default())?;
    for (level, v) in cat.resident_volumes(&run).iter().enumerate() {
        println!("level {level}: resident volume {v}");
    }
    println!(
        "decoded {:?}, expected {:?}",
        run.decoded,
        circuit.evaluate(&bits)?
    );
    Ok(())
}
