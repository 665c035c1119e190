//! Plectic p-adic invariants of elliptic curves over real quadratic fields.
//!
//! The crate is organised bottom-up: [`padic`] arithmetic, exact
//! [`numberfield`] elements with their p-adic embeddings, the Bruhat–Tits
//! tree ([`bttree`]), cochains and measures on products of trees
//! ([`cochain`]), cocycle evaluation from fixture data ([`shapiro`]), the
//! harmonicity correction ([`harmonize`]), Riemann-sum integration
//! ([`integrate`]), the point side ([`elliptic`]) and the full pipeline
//! ([`homology`]).

pub mod bttree;
pub mod cochain;
pub mod elliptic;
pub mod error;
pub mod group;
pub mod harmonize;
pub mod homology;
pub mod integrate;
pub mod numberfield;
pub mod padic;
pub mod shapiro;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
