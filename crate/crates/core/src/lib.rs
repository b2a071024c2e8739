//! Toolkit for mass-action reaction networks with complex balanced
//! equilibria.
//!
//! The pipeline runs from `.crn` text ([`parse_network`]) through
//! stoichiometric analysis ([`StoichData`]), equilibrium certification
//! ([`equilibria::certify`]) and a spectral gap certificate for the
//! linearisation ([`spectral::gap_certificate`]) to a Neumann
//! reaction-diffusion solver ([`solver::simulate`]) whose decay rates are
//! checked against the certificate ([`harness::run_verification`]).

pub mod equilibria;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod network;
pub mod parser;
pub mod rational;
pub mod solver;
pub mod spectral;
pub mod stoich;

pub use equilibria::{Classification, EquilibriumCertificate};
pub use error::{Error, Result};
pub use network::{ComplexVec, Reaction, ReactionNetwork, ReactionSpec, Species};
pub use parser::{parse_network, render_network, ParseError, ParseErrorKind};
pub use spectral::{Domain, SpectralCertificate};
pub use stoich::StoichData;
