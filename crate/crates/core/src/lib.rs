//! Outage probability of the weak user in a fluid-antenna-relay (FAR)
//! assisted two-user NOMA downlink.
//!
//! The relay carries an `n1 x n2` fluid-antenna port grid whose spatially
//! correlated ports are modelled with a Gaussian copula. [`analytic`]
//! evaluates the weak user's outage probability under amplify-and-forward
//! and decode-and-forward relaying by adaptive quadrature, and
//! [`montecarlo`] checks it by direct simulation of the fading chain.
//!
//! ```no_run
//! use std::sync::Arc;
//! use far_outage::{analytic, copula, fas, mvn, quadrature, scenario};
//!
//! let s = scenario::Scenario::new(scenario::ScenarioParams::default())?.with_snr_db(10.0)?;
//! let model = Arc::new(fas::CorrelationModel::from_geometry(&fas::FasGeometry::default())?);
//! let ch = copula::CopulaChannel::direct(model, s.rate_fu2(), mvn::MvnSpec::default())?;
//! let q = analytic::op_af(&s, &ch, &quadrature::QuadratureSpec::default())?;
//! println!("{}", q.q);
//! # Ok::<(), far_outage::Error>(())
//! ```

pub mod analytic;
pub mod config;
pub mod copula;
pub mod error;
pub mod fas;
pub mod montecarlo;
pub mod mvn;
pub mod quadrature;
pub mod scenario;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
