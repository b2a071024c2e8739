// How large a perturbation still decays at the certified rate.
use std::path::Path;

use crnrd::harness::{run_verification, VerifyOptions};
use crnrd::solver::SimConfig;
use crnrd::Result;

const EPSILONS: [f64; 6] = [1e-3, 1e-2, 0.1, 0.3, 0.6, 0.9];

pub fn run_example() -> Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for name in ["verify_ab.json", "verify_quintic.json"] {
        let mut cfg = SimConfig::load(&dir.join(name))?;
        cfg.grid.cells = vec![50];
        cfg.dt = 2e-3;
        let mut largest = None;
        for eps in EPSILONS {
            cfg.initial.epsilon = eps;
            let r = match run_verification(&cfg, &VerifyOptions::default()) {
                Ok(v) => v.report,
                Err(e) => {
                    println!("{name} eps {eps:<6}: {e}");
                    break;
                }
            };
            println!(
                "{name} eps {eps:<6}: ratio {:.4} clamps {} {}",
                r.ratio,
                r.clamps,
                if r.pass { "pass" } else { "fail" }
            );
            if r.pass {
                largest = Some(eps);
            }
        }
        match largest {
            Some(eps) => println!("{name}: largest passing eps {eps}"),
            None => println!("{name}: no eps passed"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
