//! Linearisation at a complex balanced equilibrium and its spectral gap.
//!
//! For `v' = L v` the weighted quadratic form satisfies
//!
//! ```text
//! sum_i (L v)_i v_i / u_i = -1/2 sum_r k_r u^{y_r} (sum_i (y'_ri - y_ri) v_i / u_i)^2
//! ```
//!
//! at every complex balanced `u`. The reaction gap `beta` is the smallest
//! value of the right-hand side (negated) relative to `sum_i v_i^2 / u_i`
//! over `ker Q`, and the certified gap of the reaction-diffusion operator is
//! `lambda = min(P(Omega) * min_i d_i, beta)`, where `P(Omega)` is the first
//! nonzero Neumann eigenvalue. The weighted `L^2` distance then decays at
//! least like `exp(-2 lambda t)` for the linearised system.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibria::{check_complex_balance, max_of, CERT_TOL};
use crate::error::{Error, Result};
use crate::network::{self, check_positive, ReactionNetwork};
use crate::stoich::StoichData;

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub l: DMatrix<f64>,
    pub u_inf: Vec<f64>,
    pub diffusion: Vec<f64>,
}

fn require_equilibrium(net: &ReactionNetwork, u_inf: &[f64]) -> Result<()> {
    let residual = max_of(&check_complex_balance(net, u_inf)?);
    if residual > CERT_TOL {
        return Err(Error::NotAnEquilibrium { residual });
    }
    Ok(())
}

pub fn linearize(net: &ReactionNetwork, u_inf: &[f64], diffusion: &[f64]) -> Result<LinearizedOperator> {
    if diffusion.len() != net.num_species() {
        return Err(Error::DimensionMismatch {
            expected: net.num_species(),
            got: diffusion.len(),
        });
    }
    if let Some(i) = diffusion.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Config(format!("diffusion coefficient {i} must be positive")));
    }
    require_equilibrium(net, u_inf)?;
    Ok(LinearizedOperator {
        l: network::jacobian_unchecked(net, u_inf),
        u_inf: u_inf.to_vec(),
        diffusion: diffusion.to_vec(),
    })
}

/// `sum_i (y'_ri - y_ri) v_i / u_i` for every reaction.
fn weighted_projections(net: &ReactionNetwork, u: &[f64], v: &[f64]) -> Vec<f64> {
    (0..net.num_reactions())
        .map(|r| {
            net.reaction_vector(r)
                .iter()
                .zip(v.iter().zip(u))
                .map(|(w, (vi, ui))| w * vi / ui)
                .sum()
        })
        .collect()
}

/// Absolute difference of the two sides of the weighted quadratic identity.
pub fn quadratic_identity_residual(net: &ReactionNetwork, u_inf: &[f64], v: &[f64]) -> Result<f64> {
    if v.len() != u_inf.len() {
        return Err(Error::DimensionMismatch {
            expected: u_inf.len(),
            got: v.len(),
        });
    }
    require_equilibrium(net, u_inf)?;
    let l = network::jacobian_unchecked(net, u_inf);
    let lv = &l * DVector::from_column_slice(v);
    let lhs: f64 = (0..v.len()).map(|i| lv[i] * v[i] / u_inf[i]).sum();
    let fluxes = network::fluxes_unchecked(net, u_inf);
    let rhs: f64 = -0.5
        * weighted_projections(net, u_inf, v)
            .iter()
            .zip(&fluxes)
            .map(|(p, f)| f * p * p)
            .sum::<f64>();
    Ok((lhs - rhs).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentResidual {
    pub i: usize,
    pub j: usize,
    /// `|sum_r F_r (y_ri y_rj - y'_ri y'_rj)| / (1 + sum_r F_r (|y_ri y_rj| + |y'_ri y'_rj|))`
    /// with `F_r = k_r u^{y_r}`.
    pub residual: f64,
}

/// Second-moment balance `sum_r F_r y_ri y_rj = sum_r F_r y'_ri y'_rj` for
/// all `i <= j`.
///
/// This is a diagnostic: it is evaluated at any positive `u`, and only
/// vanishes when `u` is complex balanced.
pub fn moment_balance_residuals(net: &ReactionNetwork, u: &[f64]) -> Result<Vec<MomentResidual>> {
    check_positive(u)?;
    let fluxes = network::mass_action_rates(net, u)?;
    let n = net.num_species();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let (mut diff, mut scale) = (0.0, 0.0);
            for (r, f) in fluxes.iter().enumerate() {
                let y = net.reactant(r).coeffs();
                let yp = net.product(r).coeffs();
                let a = y[i] * y[j];
                let b = yp[i] * yp[j];
                diff += f * (a - b);
                scale += f * (a.abs() + b.abs());
            }
            out.push(MomentResidual {
                i,
                j,
                residual: diff.abs() / (1.0 + scale),
            });
        }
    }
    Ok(out)
}

/// The symmetric pencil `(Z^T B Z, Z^T D^{-1} Z)` on an orthonormal basis
/// `Z` of `ker Q`.
#[derive(Debug, Clone)]
pub struct ReactionPencil {
    pub z: DMatrix<f64>,
    pub form: DMatrix<f64>,
    pub weight: DMatrix<f64>,
}

impl ReactionPencil {
    pub fn new(net: &ReactionNetwork, u_inf: &[f64], stoich: &StoichData) -> Result<Self> {
        require_equilibrium(net, u_inf)?;
        let basis = stoich.kernel_of_q();
        if basis.ncols() == 0 {
            return Err(Error::DegenerateKernel);
        }
        let z = basis.qr().q();
        let n = u_inf.len();
        let fluxes = network::fluxes_unchecked(net, u_inf);
        let mut b = DMatrix::<f64>::zeros(n, n);
        for (r, f) in fluxes.iter().enumerate() {
            let w = DVector::from_iterator(
                n,
                net.reaction_vector(r).iter().zip(u_inf).map(|(x, u)| x / u),
            );
            b += (&w * w.transpose()) * (0.5 * f);
        }
        let dinv = DMatrix::from_diagonal(&DVector::from_iterator(n, u_inf.iter().map(|u| 1.0 / u)));
        let zt = z.transpose();
        Ok(Self {
            form: &zt * &b * &z,
            weight: &zt * &dinv * &z,
            z,
        })
    }

    /// Generalised eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let chol = self
            .weight
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("weight matrix is not positive definite".into()))?;
        let linv = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
        let mut sym = &linv * &self.form * linv.transpose();
        sym = (&sym + sym.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// `v^T B v / v^T D^{-1} v` for `v = Z c`.
    pub fn rayleigh(&self, c: &DVector<f64>) -> f64 {
        (c.transpose() * &self.form * c)[(0, 0)] / (c.transpose() * &self.weight * c)[(0, 0)]
    }
}

/// Smallest generalised eigenvalue of the reaction form on `ker Q`.
pub fn reaction_gap_beta(net: &ReactionNetwork, u_inf: &[f64], stoich: &StoichData) -> Result<f64> {
    let pencil = ReactionPencil::new(net, u_inf, stoich)?;
    let beta = pencil.eigenvalues()?[0];
    if beta <= 1e-12 {
        return Err(Error::NonpositiveGap { beta });
    }
    Ok(beta)
}

/// An axis-aligned box `(0, L_1) x ... x (0, L_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lengths: Vec<f64>,
}

impl Domain {
    pub fn interval(length: f64) -> Self {
        Self {
            lengths: vec![length],
        }
    }

    pub fn rectangle(lx: f64, ly: f64) -> Self {
        Self {
            lengths: vec![lx, ly],
        }
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn measure(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim()) {
            return Err(Error::UnsupportedDomain(format!(
                "dimension {} (intervals and rectangles only)",
                self.dim()
            )));
        }
        if self.lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::UnsupportedDomain(format!(
                "side lengths must be positive, got {:?}",
                self.lengths
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;

    /// `interval:L` or `rect:LXxLY`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnsupportedDomain(format!("cannot parse domain {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let d = match kind.trim() {
            "interval" => Domain::interval(num(rest)?),
            "rect" | "rectangle" => {
                let (a, b) = rest.split_once('x').ok_or_else(bad)?;
                Domain::rectangle(num(a)?, num(b)?)
            }
            _ => return Err(bad()),
        };
        d.validate()?;
        Ok(d)
    }
}

/// First nonzero Neumann eigenvalue of the Laplacian on the domain.
pub fn poincare_constant(domain: &Domain) -> Result<f64> {
    domain.validate()?;
    let longest = domain.lengths.iter().copied().fold(0.0, f64::max);
    Ok((std::f64::consts::PI / longest).powi(2))
}

#[derive(Debug, Clone)]
pub struct SpectralCertificate {
    pub beta: f64,
    pub poincare: f64,
    pub min_diffusion: f64,
    pub lambda: f64,
    /// Orthonormal basis of `ker Q`, one column per direction.
    pub kernel_basis: DMatrix<f64>,
    /// `beta / |Omega|`, the reaction bound with the volume factor carried
    /// inside the form.
    pub beta_volume_scaled: f64,
}

impl SpectralCertificate {
    /// Guaranteed decay rate of the weighted squared `L^2` distance.
    pub fn decay_rate(&self) -> f64 {
        2.0 * self.lambda
    }
}

pub fn gap_certificate(
    net: &ReactionNetwork,
    u_inf: &[f64],
    diffusion: &[f64],
    stoich: &StoichData,
    domain: &Domain,
) -> Result<SpectralCertificate> {
    let op = linearize(net, u_inf, diffusion)?;
    let poincare = poincare_constant(domain)?;
    let pencil = ReactionPencil::new(net, u_inf, stoich)?;
    let beta = pencil.eigenvalues()?[0];
    if beta <= 1e-12 {
        return Err(Error::NonpositiveGap { beta });
    }
    let min_diffusion = op.diffusion.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SpectralCertificate {
        beta,
        poincare,
        min_diffusion,
        lambda: (poincare * min_diffusion).min(beta),
        kernel_basis: pencil.z,
        beta_volume_scaled: beta / domain.measure(),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityStatistics {
    pub samples: usize,
    /// Largest `residual / (1 + |v|^2)`.
    pub max_scaled_residual: f64,
}

/// Quadratic identity checked on random `v` with standard normal entries.
pub fn identity_statistics(
    net: &ReactionNetwork,
    u_inf: &[f64],
    samples: usize,
    seed: u64,
) -> Result<IdentityStatistics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let v: Vec<f64> = (0..u_inf.len()).map(|_| rng.gen_range(-1.0..1.0) * 10.0).collect();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        worst = worst.max(quadratic_identity_residual(net, u_inf, &v)? / (1.0 + norm2));
    }
    Ok(IdentityStatistics {
        samples,
        max_scaled_residual: worst,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub linearization: Vec<Vec<f64>>,
    pub beta: f64,
    pub poincare: f64,
    pub min_diffusion: f64,
    pub lambda: f64,
    pub decay_rate: f64,
    pub domain_measure: f64,
    pub beta_volume_scaled: f64,
    pub identity: IdentityStatistics,
    pub max_moment_residual: f64,
}

pub fn spectral_report(
    net: &ReactionNetwork,
    u_inf: &[f64],
    diffusion: &[f64],
    stoich: &StoichData,
    domain: &Domain,
    seed: u64,
) -> Result<SpectralReport> {
    let cert = gap_certificate(net, u_inf, diffusion, stoich, domain)?;
    let l = network::jacobian_unchecked(net, u_inf);
    let moments = moment_balance_residuals(net, u_inf)?;
    Ok(SpectralReport {
        linearization: (0..l.nrows()).map(|i| l.row(i).iter().copied().collect()).collect(),
        beta: cert.beta,
        poincare: cert.poincare,
        min_diffusion: cert.min_diffusion,
        lambda: cert.lambda,
        decay_rate: cert.decay_rate(),
        domain_measure: domain.measure(),
        beta_volume_scaled: cert.beta_volume_scaled,
        identity: identity_statistics(net, u_inf, 100, seed)?,
        max_moment_residual: moments.iter().map(|m| m.residual).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn stoich(net: &ReactionNetwork) -> StoichData {
        StoichData::analyze(net)
    }

    #[test]
    fn linearizations() {
        let ab = fixtures::net_ab(1.0, 1.0);
        let op = linearize(&ab, &[0.5, 0.5], &[1.0, 1.0]).unwrap();
        assert_eq!(op.l, DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]));
        let tri = fixtures::net_tri();
        let op = linearize(&tri, &[1.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(
            op.l,
            DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 1.0, 1.0, -1.0, 0.0, 0.0, 1.0, -1.0])
        );
        assert!(matches!(
            linearize(&ab, &[1.0, 2.0], &[1.0, 1.0]),
            Err(Error::NotAnEquilibrium { .. })
        ));
    }

    #[test]
    fn identity_by_hand() {
        let tri = fixtures::net_tri();
        assert_eq!(quadratic_identity_residual(&tri, &[1.0; 3], &[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(quadratic_identity_residual(&tri, &[1.0; 3], &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn moments_by_hand() {
        let tri = fixtures::net_tri();
        let m = moment_balance_residuals(&tri, &[1.0; 3]).unwrap();
        assert_eq!(m.len(), 6);
        assert!(m.iter().all(|r| r.residual == 0.0));
        let ab = moment_balance_residuals(&fixtures::net_ab(1.0, 1.0), &[0.5, 0.5]).unwrap();
        assert_eq!(ab[0].residual, 0.0);
        let perturbed = fixtures::net_tri_rates(&[1.01, 1.0, 1.0]);
        let m = moment_balance_residuals(&perturbed, &[1.0; 3]).unwrap();
        assert!(m[0].residual > 1e-3);
    }

    #[test]
    fn beta_hand_values() {
        let ab = fixtures::net_ab(1.0, 1.0);
        assert_abs_diff_eq!(reaction_gap_beta(&ab, &[0.5, 0.5], &stoich(&ab)).unwrap(), 2.0, epsilon = 1e-12);
        let tri = fixtures::net_tri();
        assert_abs_diff_eq!(reaction_gap_beta(&tri, &[1.0; 3], &stoich(&tri)).unwrap(), 1.5, epsilon = 1e-12);
        let q = fixtures::net_quintic(1.0, 1.0);
        assert_abs_diff_eq!(reaction_gap_beta(&q, &[1.0, 1.0], &stoich(&q)).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn beta_without_conservation_laws() {
        let net = crate::parse_network("0 <-> A ; k=2, kr=1").unwrap();
        let data = stoich(&net);
        assert_eq!(data.m(), 0);
        // B = 1/2 (2 * (1/2)^2 + 2 * (1/2)^2) = 1/2 at u = 2, weight 1/2
        assert_abs_diff_eq!(reaction_gap_beta(&net, &[2.0], &data).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn poincare_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert_abs_diff_eq!(poincare_constant(&Domain::interval(1.0)).unwrap(), pi2);
        assert_abs_diff_eq!(poincare_constant(&Domain::interval(2.0)).unwrap(), pi2 / 4.0);
        assert_abs_diff_eq!(poincare_constant(&Domain::rectangle(1.0, 2.0)).unwrap(), pi2 / 4.0);
        let cube = Domain {
            lengths: vec![1.0; 3],
        };
        assert!(matches!(poincare_constant(&cube), Err(Error::UnsupportedDomain(_))));
        assert_eq!("rect:1x2".parse::<Domain>().unwrap(), Domain::rectangle(1.0, 2.0));
        assert!("sphere:1".parse::<Domain>().is_err());
    }

    #[test]
    fn certificates() {
        let ab = fixtures::net_ab(1.0, 1.0);
        let data = stoich(&ab);
        let omega = Domain::interval(1.0);
        let c = gap_certificate(&ab, &[0.5, 0.5], &[1.0, 1.0], &data, &omega).unwrap();
        assert_abs_diff_eq!(c.lambda, 2.0, epsilon = 1e-12);
        let c = gap_certificate(&ab, &[0.5, 0.5], &[0.1, 0.1], &data, &omega).unwrap();
        assert_abs_diff_eq!(c.lambda, 0.1 * std::f64::consts::PI.powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(c.lambda, 0.98696, epsilon = 1e-5);
        let tri = fixtures::net_tri();
        let c = gap_certificate(&tri, &[1.0; 3], &[1.0; 3], &stoich(&tri), &omega).unwrap();
        assert_abs_diff_eq!(c.lambda, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.decay_rate(), 3.0, epsilon = 1e-12);
    }
}
