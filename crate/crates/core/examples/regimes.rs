// Admissible nonlinearity orders, critical exponents and decay-rate fitting.
use crnrd::harness::{admissible_mu, critical_p0, fit_decay_rate, perturbation_exponent_delta};
use crnrd::network::nonlinearity_order;
use crnrd::{fixtures, Result};

pub fn run_example() -> Result<()> {
    println!("{:>3} {:>6} {:>6}", "d", "mu", "p0");
    for d in 1..=5 {
        let (mu, in_range) = admissible_mu(d);
        let mu_f = *mu.numer() as f64 / *mu.denom() as f64;
        let (p0, _) = critical_p0(d, mu_f);
        println!("{d:>3} {:>6} {p0:>6.3}{}", mu.to_string(), if in_range { "" } else { "  (outside 1..=4)" });
    }

    let quintic = fixtures::net_quintic(1.0, 1.0);
    println!(
        "A + 4 B <-> 5 B: mu = {}, delta = {}",
        nonlinearity_order(&quintic),
        perturbation_exponent_delta(&quintic)
    );

    let series: Vec<(f64, f64)> = (0..=50)
        .map(|k| {
            let t = k as f64 * 0.02;
            (t, 7.0 * (-3.0 * t).exp())
        })
        .collect();
    println!("fitted rate of 7 exp(-3t): {:.12}", fit_decay_rate(&series, [0.0, 1.0])?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
