// Reaction-diffusion run on a rectangle with a conserved-mass target.
use std::path::Path;

use crnrd::solver::{simulate, SimConfig};
use crnrd::Result;

pub fn run_example() -> Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/simulate_4sp_2d.json");
    let mut cfg = SimConfig::load(&path)?;
    cfg.t_end = 0.5;
    let res = simulate(&cfg)?;
    println!("u_inf = {:?}", res.u_inf);
    println!("{:>6} {:>12} {:>12}", "t", "l2w_sq", "linf");
    for row in res.rows.iter().step_by(10) {
        println!("{:>6.2} {:>12.4e} {:>12.4e}", row.t, row.l2w_sq, row.linf);
    }
    println!(
        "conservation drift {:e}, clamps {}",
        res.conservation_drift, res.clamps
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
