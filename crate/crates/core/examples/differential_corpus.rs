//! Generates a seeded corpus and checks every backend against direct
//! evaluation on all inputs.

use stepcrn::compile::{compile, Backend};
use stepcrn::corpus::{generate, CorpusSpec};
use stepcrn::verify::{verify_program, VerifyConfig};

fn main() -> anyhow::Result<()> {
    let spec = CorpusSpec {
        depth: 2..=3,
        gates: 3..=8,
        inputs: 2..=4,
        fan_out: 1..=2,
        count: 8,
        seed: 11,
        ..CorpusSpec::default()
    };
    let cfg = VerifyConfig {
        seeds: (0..5).collect(),
        ..VerifyConfig::default()
    };
    for c in generate(&spec)? {
        for backend in [Backend::Exp, Backend::Catalyst] {
            let p = compile(&c, backend)?.program;
            let s = verify_program(&c, &p, &cfg)?;
            println!(
                "{:<14} {:<8} runs={:<4} ok={}",
                c.name(),
                backend.as_str(),
                s.runs,
                s.ok()
            );
        }
    }
    Ok(())
}
