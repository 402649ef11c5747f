//! Shows how each gate kind lowers to additions and void rules.

use stepcrn::circuit::GateKind;
use stepcrn::compile::lower_gate;

fn main() -> anyhow::Result<()> {
    let cases = [
        (GateKind::And, vec![1, 2, 3]),
        (GateKind::Or, vec![1, 2]),
        (GateKind::Not, vec![1]),
        (GateKind::Maj, vec![1, 2, 3]),
    ];
    for (kind, fan_in) in cases {
        let l = lower_gate(kind, 4, &fan_in, 1)?;
        println!("{kind} {fan_in:?}: {} step(s)", l.steps_used());
        for (k, phase) in l.phases.iter().enumerate() {
            let adds: Vec<String> = phase.iter().map(|(s, n)| format!("{n} {s}")).collect();
            println!("  phase {k}: {}", adds.join(", "));
        }
        for r in &l.rules {
            println!("  {r}");
        }
    }
    Ok(())
}
