// Reference equilibrium, projection onto a compatibility class and
// classification.
use crnrd::equilibria::{birch_project, certify, reference_equilibrium, DEFAULT_TOL_CB};
use crnrd::{fixtures, Result, StoichData};

pub fn run_example() -> Result<()> {
    let net = fixtures::net_ab(1.0, 2.0);
    let data = StoichData::analyze(&net);
    let u_ref = reference_equilibrium(&net, &data, DEFAULT_TOL_CB)?;
    println!("A <-> B (k=1, kr=2): reference equilibrium {u_ref:?}");

    let tri = fixtures::net_tri();
    let tri_data = StoichData::analyze(&tri);
    let u_ref = reference_equilibrium(&tri, &tri_data, DEFAULT_TOL_CB)?;
    let proj = birch_project(&tri_data, &u_ref, &[6.0])?;
    println!(
        "cycle with total mass 6: {:?} after {} Newton steps",
        proj.u_inf, proj.iterations
    );

    for (name, net) in [
        ("A -> B", fixtures::net_ab_irrev()),
        ("A -> B -> C -> A", fixtures::net_tri()),
        ("S1 + S3 <-> S2 + S4", fixtures::net_4sp(1.0, 1.0)),
    ] {
        let cert = certify(&net, &StoichData::analyze(&net), None, DEFAULT_TOL_CB)?;
        println!("{name:>22}: {:?}", cert.classification);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
