#![allow(dead_code)]

use crnrd::{ReactionNetwork, ReactionSpec};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

pub const NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

fn monomial(c: &[f64], u: &[f64]) -> f64 {
    c.iter().zip(u).map(|(&y, &x)| x.powf(y)).product()
}

fn random_complex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let c: Vec<f64> = (0..n).map(|_| *[0.0, 0.0, 1.0, 1.0, 2.0].choose(rng).unwrap()).collect();
        if c.iter().sum::<f64>() <= 3.0 {
            return c;
        }
    }
}

fn distinct_complexes<R: Rng>(rng: &mut R, n: usize, count: usize) -> Option<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for _ in 0..1000 {
        if out.len() == count {
            break;
        }
        let c = random_complex(rng, n);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    (out.len() == count).then_some(out)
}

/// How rate constants of a random weakly reversible network are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rates {
    /// Every reversible pair balanced at `u*`.
    Detailed,
    /// Pairs and cycles each balanced at `u*`; cycles make it complex
    /// balanced without detailed balance.
    Complex,
    /// Independent random rates.
    Random,
}

/// A weakly reversible network built from reversible pairs and directed
/// 3-cycles of complexes, together with the positive state `u*` the rates
/// were balanced at. Every species appears in some complex.
pub fn random_weakly_reversible<R: Rng>(rng: &mut R, n: usize, rates: Rates) -> (ReactionNetwork, Vec<f64>) {
    loop {
        let u_star: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..3.0)).collect();
        let mut specs = Vec::new();
        let cycles = if rates == Rates::Detailed { 0 } else { rng.gen_range(usize::from(rates == Rates::Complex)..=1) };
        let pairs = rng.gen_range(usize::from(cycles == 0)..=3);
        let Some(complexes) = distinct_complexes(rng, n, 2 * pairs + 3 * cycles) else {
            continue;
        };
        for p in 0..pairs {
            let (a, b) = (&complexes[2 * p], &complexes[2 * p + 1]);
            let kf = rng.gen_range(0.5..2.0);
            let kb = match rates {
                Rates::Random => rng.gen_range(0.5..2.0),
                _ => kf * monomial(a, &u_star) / monomial(b, &u_star),
            };
            specs.push(ReactionSpec::new(a.clone(), b.clone(), kf));
            specs.push(ReactionSpec::new(b.clone(), a.clone(), kb));
        }
        for c in 0..cycles {
            let flux = rng.gen_range(0.5..2.0);
            for j in 0..3 {
                let from = &complexes[2 * pairs + 3 * c + j];
                let to = &complexes[2 * pairs + 3 * c + (j + 1) % 3];
                let k = match rates {
                    Rates::Random => rng.gen_range(0.5..2.0),
                    _ => flux / monomial(from, &u_star),
                };
                specs.push(ReactionSpec::new(from.clone(), to.clone(), k));
            }
        }
        let used = (0..n).all(|i| complexes.iter().any(|c| c[i] != 0.0));
        if !used {
            continue;
        }
        if let Ok(net) = ReactionNetwork::new(NAMES[..n].iter().copied(), specs) {
            return (net, u_star);
        }
    }
}

/// Any valid network with at most `max_reactions` reactions and the given
/// species count, coefficients drawn from `{0, 1, 1.5, 2, 3}`.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, max_reactions: usize) -> ReactionNetwork {
    let coeff = [0.0, 0.0, 0.0, 1.0, 1.0, 1.5, 2.0, 3.0];
    loop {
        let r = rng.gen_range(1..=max_reactions);
        let specs: Vec<ReactionSpec> = (0..r)
            .map(|_| {
                let y: Vec<f64> = (0..n).map(|_| *coeff.choose(rng).unwrap()).collect();
                let yp: Vec<f64> = (0..n).map(|_| *coeff.choose(rng).unwrap()).collect();
                ReactionSpec::new(y, yp, rng.gen_range(0.1..10.0))
            })
            .collect();
        if let Ok(net) = ReactionNetwork::new(NAMES[..n].iter().copied(), specs) {
            return net;
        }
    }
}

/// The same reactions in a shuffled order.
pub fn shuffled<R: Rng>(rng: &mut R, net: &ReactionNetwork) -> ReactionNetwork {
    let mut specs = net.specs();
    specs.shuffle(rng);
    ReactionNetwork::new(net.species_names(), specs).unwrap()
}

/// `sum_i v_i^2 / u_i`
pub fn weighted_sq(v: &[f64], u: &[f64]) -> f64 {
    v.iter().zip(u).map(|(x, w)| x * x / w).sum()
}

/// Orthonormal basis of `ker q` from a full SVD, independent of the
/// library's kernel routine.
pub fn kernel_basis(q: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if q.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (q.nrows(), n)).copy_from(q);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let cols: Vec<_> = (0..n)
        .filter(|&k| svd.singular_values[k] <= 1e-10 * smax.max(1.0))
        .map(|k| vt.row(k).transpose())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Reaction form over weight, evaluated straight from the definition.
pub fn gap_quotient(net: &ReactionNetwork, u: &[f64], v: &[f64]) -> f64 {
    let mut num = 0.0;
    for r in 0..net.num_reactions() {
        let flux = net.reactions()[r].rate() * monomial(net.reactant(r).coeffs(), u);
        let s: f64 = net
            .reaction_vector(r)
            .iter()
            .zip(v)
            .zip(u)
            .map(|((w, x), ui)| w * x / ui)
            .sum();
        num += 0.5 * flux * s * s;
    }
    num / weighted_sq(v, u)
}

/// Brute-force minimum of [`gap_quotient`] over `ker Q`: random unit
/// directions followed by a shrinking pattern search from the best few.
pub fn brute_force_beta<R: Rng>(net: &ReactionNetwork, u: &[f64], q: &DMatrix<f64>, samples: usize, rng: &mut R) -> f64 {
    let n = u.len();
    let z = kernel_basis(q, n);
    let k = z.ncols();
    let eval = |c: &[f64]| {
        let v = &z * nalgebra::DVector::from_column_slice(c);
        gap_quotient(net, u, v.as_slice())
    };
    let mut starts: Vec<(f64, Vec<f64>)> = (0..samples)
        .map(|_| {
            let c: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (eval(&c), c)
        })
        .filter(|(v, _)| v.is_finite())
        .collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::INFINITY;
    for (mut val, mut c) in starts.into_iter().take(5) {
        let mut h = 0.1;
        while h > 1e-10 {
            let mut improved = false;
            for d in 0..k {
                for s in [-1.0, 1.0] {
                    let mut trial = c.clone();
                    trial[d] += s * h;
                    let t = eval(&trial);
                    if t < val {
                        val = t;
                        c = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        best = best.min(val);
    }
    best
}
