//! Complex and detailed balance, reference equilibria and their projection
//! onto a stoichiometric compatibility class.
//!
//! A reference equilibrium is found from the kernel of the weighted complex
//! Laplacian: on every linkage class of a weakly reversible network the
//! kernel is spanned by a positive vector `rho` (the Matrix-Tree constants),
//! and the network is complex balanced exactly when `ln rho` is matched by
//! `Y^T ln u` up to one additive shift per linkage class. Every other
//! positive complex balanced equilibrium is `u_ref * exp(Q^T eta)`, and
//! `eta` for a given mass is the minimiser of a strictly convex function.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{self, check_nonnegative, check_positive, ReactionNetwork};
use crate::stoich::StoichData;

/// Residual threshold for certified complex (and detailed) balance.
pub const CERT_TOL: f64 = 1e-10;

/// Default threshold on the log-linear residual separating complex
/// balanced rate constants from structurally unbalanced ones.
pub const DEFAULT_TOL_CB: f64 = 1e-8;

const NEWTON_MAX_ITER: usize = 200;

/// Per-complex relative imbalance `|out - in| / (1 + out + in)`, indexed
/// like [`ReactionNetwork::complexes`].
pub fn check_complex_balance(net: &ReactionNetwork, u: &[f64]) -> Result<Vec<f64>> {
    check_positive(u)?;
    let fluxes = network::mass_action_rates(net, u)?;
    Ok(complex_balance_unchecked(net, &fluxes))
}

fn complex_balance_unchecked(net: &ReactionNetwork, fluxes: &[f64]) -> Vec<f64> {
    let nc = net.complexes().len();
    let mut out = vec![0.0; nc];
    let mut inflow = vec![0.0; nc];
    for (r, reaction) in net.reactions().iter().enumerate() {
        out[reaction.reactant_index()] += fluxes[r];
        inflow[reaction.product_index()] += fluxes[r];
    }
    out.iter()
        .zip(&inflow)
        .map(|(o, i)| (o - i).abs() / (1.0 + o + i))
        .collect()
}

pub(crate) fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetailedBalanceReport {
    /// `(forward, backward)` reaction indices.
    pub pairs: Vec<(usize, usize)>,
    pub unpaired: Vec<usize>,
    /// `|k_f u^y - k_b u^y'| / (1 + k_f u^y + k_b u^y')` per pair.
    pub residuals: Vec<f64>,
}

impl DetailedBalanceReport {
    pub fn fully_paired(&self) -> bool {
        self.unpaired.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        if self.fully_paired() {
            max_of(&self.residuals)
        } else {
            f64::INFINITY
        }
    }

    pub fn is_detailed_balanced(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

pub fn check_detailed_balance(net: &ReactionNetwork, u: &[f64]) -> Result<DetailedBalanceReport> {
    check_positive(u)?;
    let fluxes = network::mass_action_rates(net, u)?;
    let reactions = net.reactions();
    let mut taken = vec![false; reactions.len()];
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    let mut residuals = Vec::new();
    for r in 0..reactions.len() {
        if taken[r] {
            continue;
        }
        taken[r] = true;
        let partner = (r + 1..reactions.len()).find(|&s| {
            !taken[s]
                && reactions[s].reactant_index() == reactions[r].product_index()
                && reactions[s].product_index() == reactions[r].reactant_index()
        });
        match partner {
            Some(s) => {
                taken[s] = true;
                pairs.push((r, s));
                residuals.push((fluxes[r] - fluxes[s]).abs() / (1.0 + fluxes[r] + fluxes[s]));
            }
            None => unpaired.push(r),
        }
    }
    Ok(DetailedBalanceReport {
        pairs,
        unpaired,
        residuals,
    })
}

/// Positive kernel vector of the complex Laplacian on each linkage class,
/// normalised to 1 at the class's first complex.
fn tree_constants(net: &ReactionNetwork, stoich: &StoichData) -> Result<Vec<f64>> {
    let nc = net.complexes().len();
    let mut rho = vec![0.0; nc];
    for class in &stoich.graph.linkage_classes {
        let local = |c: usize| class.iter().position(|&x| x == c);
        let k = class.len();
        let mut lap = DMatrix::<f64>::zeros(k, k);
        for reaction in net.reactions() {
            if let (Some(i), Some(j)) = (local(reaction.reactant_index()), local(reaction.product_index())) {
                lap[(j, i)] += reaction.rate();
                lap[(i, i)] -= reaction.rate();
            }
        }
        rho[class[0]] = 1.0;
        if k == 1 {
            continue;
        }
        let reduced = lap.view((1, 1), (k - 1, k - 1)).into_owned();
        let rhs = -lap.view((1, 0), (k - 1, 1)).into_owned();
        let sol = reduced
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NumericalFailure("singular reduced complex Laplacian".into()))?;
        for (idx, &c) in class.iter().enumerate().skip(1) {
            let v = sol[(idx - 1, 0)];
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NumericalFailure(format!(
                    "tree constant for complex {c} is not positive ({v})"
                )));
            }
            rho[c] = v;
        }
    }
    Ok(rho)
}

/// Shifts `x` along the rows of `Q` so that it vanishes at the pivot
/// columns of the reduced echelon form of `Q`.
fn normalize_log(stoich: &StoichData, x: &mut [f64]) {
    let (rref, pivots) = stoich.q_rref();
    for (row, &p) in pivots.iter().enumerate() {
        let eta = x[p];
        if eta != 0.0 {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi -= eta * rref[(row, i)];
            }
            x[p] = 0.0;
        }
    }
}

/// A strictly positive complex balanced equilibrium, or `NotComplexBalanced`.
///
/// The free directions `u * exp(Q^T eta)` are fixed by requiring
/// `ln u = 0` at the pivot columns of the reduced echelon form of `Q`.
pub fn reference_equilibrium(net: &ReactionNetwork, stoich: &StoichData, tol_cb: f64) -> Result<Vec<f64>> {
    if !stoich.weakly_reversible() {
        return Err(Error::NotComplexBalanced {
            residual: f64::INFINITY,
        });
    }
    let rho = tree_constants(net, stoich)?;
    let n = net.num_species();
    let nc = net.complexes().len();
    let classes = stoich.graph.linkage_classes.len();
    let class_of = stoich.graph.class_of(nc);
    let mut a = DMatrix::<f64>::zeros(nc, n + classes);
    let mut b = DVector::<f64>::zeros(nc);
    for (c, complex) in net.complexes().iter().enumerate() {
        for (i, &y) in complex.coeffs().iter().enumerate() {
            a[(c, i)] = y;
        }
        a[(c, n + class_of[c])] = 1.0;
        b[c] = rho[c].ln();
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-12 * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    if rank + stoich.m() < n + classes {
        return Err(Error::NumericalFailure(format!(
            "log-linear system has rank {rank}, expected {}",
            n + classes - stoich.m()
        )));
    }
    let z = svd
        .solve(&b, eps)
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    let residual = (&a * &z - &b).amax();
    if residual > tol_cb {
        return Err(Error::NotComplexBalanced { residual });
    }
    let mut x: Vec<f64> = z.iter().take(n).copied().collect();
    normalize_log(stoich, &mut x);
    let u: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let cb = max_of(&check_complex_balance(net, &u)?);
    if cb > CERT_TOL {
        return Err(Error::NumericalFailure(format!(
            "reference equilibrium fails complex balance check ({cb:e})"
        )));
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    pub u_inf: Vec<f64>,
    pub eta: Vec<f64>,
    pub iterations: usize,
    pub mass_residual: f64,
}

fn mass_tol(mass: &[f64]) -> f64 {
    CERT_TOL * (1.0 + mass.iter().fold(0.0f64, |a, &b| a.max(b.abs())))
}

/// The unique positive complex balanced equilibrium with `Q u = mass`.
///
/// A nonpositive value of a nonnegative conservation law is refused with
/// [`Error::NonpositiveMass`]; a mass outside the reachable set of a
/// mixed-sign law ends in [`Error::NoConvergence`].
pub fn birch_project(stoich: &StoichData, u_ref: &[f64], mass: &[f64]) -> Result<Projection> {
    check_positive(u_ref)?;
    let q = stoich.q();
    let m = q.nrows();
    if mass.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: mass.len(),
        });
    }
    if m == 0 {
        return Ok(Projection {
            u_inf: u_ref.to_vec(),
            eta: Vec::new(),
            iterations: 0,
            mass_residual: 0.0,
        });
    }
    if mass.iter().any(|v| !v.is_finite()) || crate::stoich::nonpositive_mass(q, mass) {
        return Err(Error::NonpositiveMass { mass: mass.to_vec() });
    }
    let n = u_ref.len();
    let target = DVector::from_column_slice(mass);
    let uref = DVector::from_column_slice(u_ref);
    let state = |eta: &DVector<f64>| -> DVector<f64> {
        let shift = q.transpose() * eta;
        uref.zip_map(&shift, |u, s| u * s.exp())
    };
    let objective = |eta: &DVector<f64>, u: &DVector<f64>| u.sum() - target.dot(eta);
    let tight = 1e-3 * mass_tol(mass);
    let mut eta = DVector::<f64>::zeros(m);
    let mut u = uref.clone();
    let mut residual = (q * &u - &target).amax();
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITER && residual > tight {
        iterations += 1;
        let grad = q * &u - &target;
        let mut hess = DMatrix::<f64>::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                hess[(a, b)] = (0..n).map(|i| q[(a, i)] * u[i] * q[(b, i)]).sum();
            }
        }
        let step = match hess.cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => return Err(Error::NumericalFailure("singular Newton matrix Q diag(u) Q^T".into())),
        };
        let f0 = objective(&eta, &u);
        let mut t = 1.0;
        let accepted = loop {
            let trial = &eta + &step * t;
            let ut = state(&trial);
            let ft = objective(&trial, &ut);
            // near the minimum the decrease of the objective drops below
            // round-off; the residual still measures progress there
            let rt = (q * &ut - &target).amax();
            if ft.is_finite() && (ft < f0 || rt < residual) {
                break Some((trial, ut));
            }
            t *= 0.5;
            if t < 1e-14 {
                break None;
            }
        };
        match accepted {
            Some((e, ut)) => {
                eta = e;
                u = ut;
                residual = (q * &u - &target).amax();
            }
            // no further decrease representable
            None => break,
        }
    }
    if residual > mass_tol(mass) || u.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(Projection {
        u_inf: u.iter().copied().collect(),
        eta: eta.iter().copied().collect(),
        iterations,
        mass_residual: residual,
    })
}

/// Whether `u` is a (possibly boundary) equilibrium, with `|f(u)|_inf`.
pub fn is_equilibrium(net: &ReactionNetwork, u: &[f64]) -> Result<(bool, f64)> {
    check_nonnegative(u)?;
    let f = network::reaction_rhs(net, u)?;
    let residual = f.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let umax = u.iter().copied().fold(0.0, f64::max);
    let scale = 1.0
        + network::growth_constant(net) * (umax.powf(network::nonlinearity_order(net)) + 1.0);
    Ok((residual <= 1e-12 * scale, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    DetailedBalanced,
    ComplexBalancedOnly,
    NotComplexBalanced,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumCertificate {
    pub classification: Classification,
    pub u_ref: Option<Vec<f64>>,
    pub u_inf: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub mass: Vec<f64>,
    /// Log-linear residual of the complex balance solve.
    pub log_residual: f64,
    pub cb_residual: f64,
    pub db_residual: f64,
    pub mass_residual: f64,
}

/// Classifies the network and, when it is complex balanced, computes the
/// equilibrium for `mass` (or the reference equilibrium if `mass` is
/// `None`).
pub fn certify(
    net: &ReactionNetwork,
    stoich: &StoichData,
    mass: Option<&[f64]>,
    tol_cb: f64,
) -> Result<EquilibriumCertificate> {
    let u_ref = match reference_equilibrium(net, stoich, tol_cb) {
        Ok(u) => u,
        Err(Error::NotComplexBalanced { residual }) => {
            return Ok(EquilibriumCertificate {
                classification: Classification::NotComplexBalanced,
                u_ref: None,
                u_inf: None,
                eta: None,
                mass: mass.map(<[f64]>::to_vec).unwrap_or_default(),
                log_residual: residual,
                cb_residual: f64::INFINITY,
                db_residual: f64::INFINITY,
                mass_residual: f64::INFINITY,
            })
        }
        Err(e) => return Err(e),
    };
    let mass = match mass {
        Some(m) => m.to_vec(),
        None => crate::stoich::mass_vector(stoich.q(), &u_ref)?.values,
    };
    let proj = birch_project(stoich, &u_ref, &mass)?;
    let cb_residual = max_of(&check_complex_balance(net, &proj.u_inf)?);
    let db = check_detailed_balance(net, &proj.u_inf)?;
    let classification = if db.is_detailed_balanced(CERT_TOL) {
        Classification::DetailedBalanced
    } else {
        Classification::ComplexBalancedOnly
    };
    Ok(EquilibriumCertificate {
        classification,
        u_ref: Some(u_ref),
        u_inf: Some(proj.u_inf),
        eta: Some(proj.eta),
        mass,
        log_residual: 0.0,
        cb_residual,
        db_residual: db.max_residual(),
        mass_residual: proj.mass_residual,
    })
}

impl EquilibriumCertificate {
    pub fn is_complex_balanced(&self) -> bool {
        self.classification != Classification::NotComplexBalanced
    }

    /// The projected equilibrium, or `NotComplexBalanced`.
    pub fn equilibrium(&self) -> Result<&[f64]> {
        self.u_inf.as_deref().ok_or(Error::NotComplexBalanced {
            residual: self.log_residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn reference(net: &ReactionNetwork) -> Result<Vec<f64>> {
        reference_equilibrium(net, &StoichData::analyze(net), DEFAULT_TOL_CB)
    }

    #[test]
    fn triangle_balance() {
        let net = fixtures::net_tri();
        assert!(check_complex_balance(&net, &[1.0, 1.0, 1.0]).unwrap().iter().all(|&r| r == 0.0));
        let res = check_complex_balance(&net, &[2.0, 1.0, 1.0]).unwrap();
        // complex A: out 2, in 1
        assert_eq!(res[0], 1.0 / 4.0);
        assert!(check_complex_balance(&net, &[0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn detailed_balance_reports() {
        let ab = fixtures::net_ab(1.0, 1.0);
        for c in [0.1, 1.0, 7.5] {
            let rep = check_detailed_balance(&ab, &[c, c]).unwrap();
            assert_eq!(rep.pairs, vec![(0, 1)]);
            assert_eq!(rep.max_residual(), 0.0);
        }
        let tri = check_detailed_balance(&fixtures::net_tri(), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(tri.unpaired, vec![0, 1, 2]);
        assert!(!tri.is_detailed_balanced(CERT_TOL));
        let sp4 = check_detailed_balance(&fixtures::net_4sp(2.0, 1.0), &[1.0, 2.0, 1.0, 1.0]).unwrap();
        assert_eq!(sp4.max_residual(), 0.0);
    }

    #[test]
    fn reference_equilibria() {
        let tri = reference(&fixtures::net_tri()).unwrap();
        for v in tri {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
        let ab = reference(&fixtures::net_ab(1.0, 2.0)).unwrap();
        assert_abs_diff_eq!(ab[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ab[1], 0.5, epsilon = 1e-14);
        assert!(matches!(
            reference(&fixtures::net_ab_irrev()),
            Err(Error::NotComplexBalanced { .. })
        ));
    }

    #[test]
    fn unbalanced_rates_are_rejected() {
        // deficiency one: A <-> 2A <-> 3A style network with arbitrary rates
        let net = crate::parse_network("A <-> 2 A ; k=1, kr=1\n2 A <-> 3 A ; k=5, kr=1\nA <-> 3 A ; k=1, kr=1").unwrap();
        let data = StoichData::analyze(&net);
        assert_eq!(data.deficiency, 1);
        assert!(matches!(
            reference_equilibrium(&net, &data, DEFAULT_TOL_CB),
            Err(Error::NotComplexBalanced { .. })
        ));
    }

    #[test]
    fn projections() {
        let ab = fixtures::net_ab(1.0, 1.0);
        let data = StoichData::analyze(&ab);
        let p = birch_project(&data, &[0.5, 0.5], &[2.0]).unwrap();
        assert_abs_diff_eq!(p.u_inf[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.u_inf[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.eta[0], 2f64.ln(), epsilon = 1e-10);

        let fixed = birch_project(&data, &[0.3, 0.3], &[0.6]).unwrap();
        assert_eq!(fixed.iterations, 0);
        assert_eq!(fixed.u_inf, vec![0.3, 0.3]);

        let tri = StoichData::analyze(&fixtures::net_tri());
        let p = birch_project(&tri, &[1.0, 1.0, 1.0], &[6.0]).unwrap();
        for v in p.u_inf {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-10);
        }
        assert!(matches!(
            birch_project(&tri, &[1.0, 1.0, 1.0], &[0.0]),
            Err(Error::NonpositiveMass { .. })
        ));
    }

    #[test]
    fn projection_without_conservation_laws() {
        let data = StoichData::analyze(&fixtures::net_m0());
        let p = birch_project(&data, &[2.0, 3.0], &[]).unwrap();
        assert_eq!(p.u_inf, vec![2.0, 3.0]);
    }

    #[test]
    fn pointwise_equilibria() {
        let (ok, res) = is_equilibrium(&fixtures::net_ab_irrev(), &[0.0, 1.0]).unwrap();
        assert!(ok);
        assert_eq!(res, 0.0);
        assert!(!is_equilibrium(&fixtures::net_ab(1.0, 1.0), &[1.0, 2.0]).unwrap().0);
    }

    #[test]
    fn classification() {
        let cert = |net: &ReactionNetwork| {
            certify(net, &StoichData::analyze(net), None, DEFAULT_TOL_CB).unwrap().classification
        };
        assert_eq!(cert(&fixtures::net_ab_irrev()), Classification::NotComplexBalanced);
        assert_eq!(cert(&fixtures::net_tri()), Classification::ComplexBalancedOnly);
        assert_eq!(cert(&fixtures::net_4sp(1.0, 1.0)), Classification::DetailedBalanced);
        assert_eq!(cert(&fixtures::net_quintic(1.0, 1.0)), Classification::DetailedBalanced);
    }

    #[test]
    fn four_species_projection() {
        let net = fixtures::net_4sp(2.0, 1.0);
        let data = StoichData::analyze(&net);
        let mass = crate::stoich::mass_vector(data.q(), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let c = certify(&net, &data, Some(&mass.values), DEFAULT_TOL_CB).unwrap();
        let u = c.u_inf.unwrap();
        assert!(c.mass_residual <= 1e-10 * 8.0);
        assert!(c.cb_residual <= 1e-10);
        // 2 u1 u3 = u2 u4
        assert_abs_diff_eq!(2.0 * u[0] * u[2], u[1] * u[3], epsilon = 1e-10);
    }
}
