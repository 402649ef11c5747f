//! Builds the chained circuit family and compares compiled demand with the
//! Fibonacci lower bound.

use stepcrn::lowerbound::{build_vd, min_copy_bounds, verify_fib_growth, SFunctionSpec};

fn main() -> anyhow::Result<()> {
    let spec = SFunctionSpec::default();
    let stage = build_vd(1, &spec)?;
    print!("{}", stage.to_netlist());

    let bounds = min_copy_bounds(12);
    println!("chain bound: {:?}", bounds.chain);
    println!("full bound:  {:?}", bounds.full);
    for d in [1, 4, 8, 12] {
        let row = verify_fib_growth(d, &spec)?;
        println!(
            "D={:<2} a_D={:<4} demand={:<10} static_volume={}",
            row.d, row.a_d, row.demand, row.static_volume
        );
    }
    Ok(())
}
