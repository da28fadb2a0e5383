//! Projector towers of the CP^{N-1} sigma model, the soliton surfaces built
//! from them, and numerical checks of the identities they satisfy.
//!
//! Fields are carried as truncated Wirtinger jets ([`jet`]), so every
//! derivative a check needs is exact up to rounding. [`model`] builds the
//! tower `P_0 … P_{N−1}` from a holomorphic seed, [`stack`] the surfaces
//! `X_k` and `Y_k`, and [`verify`] sweeps the whole suite over a grid.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod jet;
pub mod model;
pub mod quad;
pub mod stack;
pub mod verify;

pub use error::{Error, Result};
pub use jet::{BidegreeOrder, CMat, CVec, EvalPoint, MatrixJet, Poly, ScalarJet, VectorJet};
pub use model::{build_tower, HoloSeed, ProjectorTower};
pub use stack::{action, immersion_closed_form, ActionResult, ImmersionSample, PathSpec, QuadConfig};
pub use verify::{default_seed_catalog, run_suite, GridSpec, SuiteConfig, Tolerances, VerificationReport};
