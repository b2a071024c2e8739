// Reaction vectors, conservation laws and the complex graph.
use crnrd::fixtures;
use crnrd::stoich::mass_vector;
use crnrd::{Result, StoichData};

pub fn run_example() -> Result<()> {
    let net = fixtures::net_4sp(1.0, 1.0);
    let data = StoichData::analyze(&net);
    println!("W =\n{}", data.w);
    println!("rank W = {}, conservation laws m = {}", data.rank, data.m());
    println!("Q (exact = {}) =\n{}", data.basis.is_exact(), data.q());

    let mass = mass_vector(data.q(), &[1.0, 2.0, 3.0, 4.0])?;
    println!("Q u for u = (1,2,3,4): {:?}", mass.values);

    println!(
        "linkage classes {}, weakly reversible {}, deficiency {}",
        data.graph.linkage_classes.len(),
        data.weakly_reversible(),
        data.deficiency
    );
    let report = data.report(&net);
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
