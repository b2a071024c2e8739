// Linearization at an equilibrium and the certified decay rate.
use crnrd::spectral::{gap_certificate, identity_statistics, linearize, ReactionPencil};
use crnrd::{fixtures, Domain, Result, StoichData};

pub fn run_example() -> Result<()> {
    let net = fixtures::net_tri();
    let u = [1.0, 1.0, 1.0];
    let d = [1.0, 1.0, 1.0];
    let data = StoichData::analyze(&net);

    let op = linearize(&net, &u, &d)?;
    println!("L =\n{}", op.l);
    let pencil = ReactionPencil::new(&net, &u, &data)?;
    println!("reaction pencil eigenvalues: {:?}", pencil.eigenvalues()?);

    for domain in [Domain::interval(1.0), Domain::interval(4.0)] {
        let cert = gap_certificate(&net, &u, &d, &data, &domain)?;
        println!(
            "L_x = {}: beta = {:.6}, P = {:.6}, lambda = {:.6}, rate 2 lambda = {:.6}",
            domain.lengths[0],
            cert.beta,
            cert.poincare,
            cert.lambda,
            cert.decay_rate()
        );
    }

    let stats = identity_statistics(&net, &u, 100, 7)?;
    println!("quadratic identity, worst scaled residual {:e}", stats.max_scaled_residual);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
