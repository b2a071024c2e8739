// End-to-end check: certified rate against the fitted decay of a PDE run.
use std::path::Path;

use crnrd::harness::{run_verification, VerifyOptions};
use crnrd::solver::SimConfig;
use crnrd::Result;

pub fn run_example() -> Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for name in ["verify_ab.json", "verify_quintic.json", "verify_tri.json"] {
        let cfg = SimConfig::load(&dir.join(name))?;
        let v = run_verification(&cfg, &VerifyOptions::default())?;
        let r = &v.report;
        println!(
            "{:<12} {:?}: fitted {:.4} vs 2 lambda = {:.4} (ratio {:.4}) {}",
            r.network,
            r.classification,
            r.fitted_rate,
            r.target,
            r.ratio,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
