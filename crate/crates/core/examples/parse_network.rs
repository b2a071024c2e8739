// Parse `.crn` text, inspect the network, render it back, and show a
// positioned parse error.
use crnrd::{parse_network, render_network, ParseErrorKind, Result};

pub fn run_example() -> Result<()> {
    let text = "\
# dimerization with a source
2 A <-> A2 ; k=3, kr=0.5
0 -> A ; k=1
A -> 0 ; k=0.2
";
    let net = parse_network(text)?;
    println!("species: {:?}", net.species_names());
    for r in 0..net.num_reactions() {
        println!(
            "  r{r}: y={:?} y'={:?} k={}",
            net.reactant(r).coeffs(),
            net.product(r).coeffs(),
            net.reactions()[r].rate()
        );
    }
    let rendered = render_network(&net);
    print!("canonical form:\n{rendered}");
    assert_eq!(parse_network(&rendered)?, net);

    let err = parse_network("A + B -> C ; k=1\n0.5 A -> B ; k=1").unwrap_err();
    assert_eq!(err.kind, ParseErrorKind::CoefficientOutOfRange);
    println!("rejected: {err}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
