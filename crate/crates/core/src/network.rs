//! Mass-action reaction networks.
//!
//! A network is a list of species and a list of reactions `y -> y'` between
//! complexes (nonnegative stoichiometric vectors) with positive rate
//! constants. Reaction fluxes follow the law of mass action,
//! `k * prod_i u_i^{y_i}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// Stoichiometric vector of a complex. Coefficients are `0` or `>= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVec {
    coeffs: Vec<f64>,
}

impl ComplexVec {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        for (i, &c) in coeffs.iter().enumerate() {
            if !c.is_finite() || !(c == 0.0 || c >= 1.0) {
                return Err(Error::InvalidNetwork(format!(
                    "coefficient {c} of species {i} is outside {{0}} ∪ [1, ∞)"
                )));
            }
        }
        Ok(Self { coeffs })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            coeffs: vec![0.0; n],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Molecularity `|y| = sum_i y_i`.
    pub fn order(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// The monomial `u^y`, with `0^0 = 1`.
    pub fn monomial(&self, u: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(u)
            .fold(1.0, |acc, (&y, &x)| acc * power(x, y))
    }

    fn same_as(&self, other: &ComplexVec) -> bool {
        self.coeffs.len() == other.coeffs.len()
            && self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// `x^p` for `x >= 0` with the mass-action conventions `0^0 = 1`, `0^p = 0`.
pub(crate) fn power(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        x
    } else if x == 0.0 {
        0.0
    } else if p.fract() == 0.0 && p <= i32::MAX as f64 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    reactant: usize,
    product: usize,
    rate: f64,
}

impl Reaction {
    /// Index of the reactant complex in [`ReactionNetwork::complexes`].
    pub fn reactant_index(&self) -> usize {
        self.reactant
    }

    pub fn product_index(&self) -> usize {
        self.product
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    complexes: Vec<ComplexVec>,
    reactions: Vec<Reaction>,
}

/// One reaction before deduplication of complexes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionSpec {
    pub reactant: Vec<f64>,
    pub product: Vec<f64>,
    pub rate: f64,
}

impl ReactionSpec {
    pub fn new(reactant: Vec<f64>, product: Vec<f64>, rate: f64) -> Self {
        Self {
            reactant,
            product,
            rate,
        }
    }
}

impl ReactionNetwork {
    pub fn new<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        reactions: impl IntoIterator<Item = ReactionSpec>,
    ) -> Result<Self> {
        let species: Vec<Species> = names
            .into_iter()
            .enumerate()
            .map(|(index, name)| Species {
                name: name.into(),
                index,
            })
            .collect();
        for (i, s) in species.iter().enumerate() {
            if species[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate species name {:?}",
                    s.name
                )));
            }
        }
        let n = species.len();
        let mut net = Self {
            species,
            complexes: Vec::new(),
            reactions: Vec::new(),
        };
        for (r, spec) in reactions.into_iter().enumerate() {
            if spec.reactant.len() != n || spec.product.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: spec.reactant.len().max(spec.product.len()),
                });
            }
            if !(spec.rate > 0.0 && spec.rate.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "reaction {r} has non-positive rate {}",
                    spec.rate
                )));
            }
            let reactant = ComplexVec::new(spec.reactant)?;
            let product = ComplexVec::new(spec.product)?;
            if reactant.same_as(&product) {
                return Err(Error::InvalidNetwork(format!(
                    "reaction {r} has identical reactant and product"
                )));
            }
            let reactant = net.intern(reactant);
            let product = net.intern(product);
            net.reactions.push(Reaction {
                reactant,
                product,
                rate: spec.rate,
            });
        }
        if net.reactions.is_empty() {
            return Err(Error::InvalidNetwork("network has no reactions".into()));
        }
        Ok(net)
    }

    fn intern(&mut self, c: ComplexVec) -> usize {
        match self.complexes.iter().position(|o| o.same_as(&c)) {
            Some(i) => i,
            None => {
                self.complexes.push(c);
                self.complexes.len() - 1
            }
        }
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_names(&self) -> Vec<&str> {
        self.species.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    /// Distinct complexes in first-appearance order.
    pub fn complexes(&self) -> &[ComplexVec] {
        &self.complexes
    }

    pub fn reactant(&self, r: usize) -> &ComplexVec {
        &self.complexes[self.reactions[r].reactant]
    }

    pub fn product(&self, r: usize) -> &ComplexVec {
        &self.complexes[self.reactions[r].product]
    }

    /// Reaction vector `y'_r - y_r`.
    pub fn reaction_vector(&self, r: usize) -> Vec<f64> {
        self.reactant(r)
            .coeffs()
            .iter()
            .zip(self.product(r).coeffs())
            .map(|(y, yp)| yp - y)
            .collect()
    }

    pub fn specs(&self) -> Vec<ReactionSpec> {
        (0..self.num_reactions())
            .map(|r| {
                ReactionSpec::new(
                    self.reactant(r).coeffs().to_vec(),
                    self.product(r).coeffs().to_vec(),
                    self.reactions[r].rate,
                )
            })
            .collect()
    }

    /// Copy of the network with new rate constants, one per reaction.
    pub fn with_rates(&self, rates: &[f64]) -> Result<Self> {
        if rates.len() != self.num_reactions() {
            return Err(Error::DimensionMismatch {
                expected: self.num_reactions(),
                got: rates.len(),
            });
        }
        let specs = self
            .specs()
            .into_iter()
            .zip(rates)
            .map(|(s, &k)| ReactionSpec { rate: k, ..s });
        Self::new(self.species_names(), specs)
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.num_species() {
            return Err(Error::DimensionMismatch {
                expected: self.num_species(),
                got: u.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_nonnegative(u: &[f64]) -> Result<()> {
    match u.iter().position(|&x| !(x >= 0.0)) {
        Some(index) => Err(Error::NegativeConcentration {
            index,
            value: u[index],
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_positive(u: &[f64]) -> Result<()> {
    match u.iter().position(|&x| !(x > 0.0)) {
        Some(index) => Err(Error::NonpositiveConcentration {
            index,
            value: u[index],
        }),
        None => Ok(()),
    }
}

/// Reaction fluxes `k_r u^{y_r}`.
pub fn mass_action_rates(net: &ReactionNetwork, u: &[f64]) -> Result<Vec<f64>> {
    net.check_len(u)?;
    check_nonnegative(u)?;
    Ok(fluxes_unchecked(net, u))
}

pub(crate) fn fluxes_unchecked(net: &ReactionNetwork, u: &[f64]) -> Vec<f64> {
    let monomials: Vec<f64> = net.complexes.iter().map(|c| c.monomial(u)).collect();
    net.reactions
        .iter()
        .map(|r| r.rate * monomials[r.reactant])
        .collect()
}

/// Mass-action right-hand side `f(u) = sum_r k_r (y'_r - y_r) u^{y_r}`.
pub fn reaction_rhs(net: &ReactionNetwork, u: &[f64]) -> Result<Vec<f64>> {
    net.check_len(u)?;
    check_nonnegative(u)?;
    let mut out = vec![0.0; u.len()];
    rhs_into(net, u, &mut out);
    Ok(out)
}

/// Writes `f(u)` into `out` without validating `u`.
pub(crate) fn rhs_into(net: &ReactionNetwork, u: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for r in &net.reactions {
        let flux = r.rate * net.complexes[r.reactant].monomial(u);
        if flux == 0.0 {
            continue;
        }
        let y = net.complexes[r.reactant].coeffs();
        let yp = net.complexes[r.product].coeffs();
        for i in 0..out.len() {
            let w = yp[i] - y[i];
            if w != 0.0 {
                out[i] += flux * w;
            }
        }
    }
}

/// Jacobian `df_i/du_j` on the open positive orthant.
pub fn rhs_jacobian(net: &ReactionNetwork, u: &[f64]) -> Result<DMatrix<f64>> {
    net.check_len(u)?;
    check_positive(u)?;
    Ok(jacobian_unchecked(net, u))
}

pub(crate) fn jacobian_unchecked(net: &ReactionNetwork, u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut jac = DMatrix::zeros(n, n);
    for r in &net.reactions {
        let y = net.complexes[r.reactant].coeffs();
        let yp = net.complexes[r.product].coeffs();
        let flux = r.rate * net.complexes[r.reactant].monomial(u);
        for j in 0..n {
            if y[j] == 0.0 {
                continue;
            }
            let dj = flux * y[j] / u[j];
            for i in 0..n {
                let w = yp[i] - y[i];
                if w != 0.0 {
                    jac[(i, j)] += w * dj;
                }
            }
        }
    }
    jac
}

/// Highest molecularity `mu = max_y |y|` over all complexes.
pub fn nonlinearity_order(net: &ReactionNetwork) -> f64 {
    net.complexes
        .iter()
        .map(ComplexVec::order)
        .fold(0.0, f64::max)
}

/// Constant `K` with `|f_i(u)| <= K (|u|_inf^mu + 1)` for all `u >= 0`.
///
/// The norm in the bound is the max-norm.
pub fn growth_constant(net: &ReactionNetwork) -> f64 {
    (0..net.num_species())
        .map(|i| {
            (0..net.num_reactions())
                .map(|r| {
                    let w = net.product(r).coeffs()[i] - net.reactant(r).coeffs()[i];
                    net.reactions[r].rate * w.abs()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}
