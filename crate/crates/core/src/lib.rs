//! Monotone metrics on spaces of quantum channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex kernels (Hermitian eigensolver, Kronecker
//!   products, partial traces, tensor-factor permutations).
//! - [`states`]: density matrices, state tangents and the classical, SLD and
//!   RLD Fisher informations.
//! - [`channels`]: CPTP maps in Choi form, tangents, channel algebra, n-copy
//!   constructions and the family catalog.
//! - [`metrics`]: the smallest channel metric by seesaw probe optimisation,
//!   the output-RLD quantity, and upper bounds on the largest metric from
//!   mixture tangent simulations and the CP ball.
//! - [`estim`]: Monte Carlo channel estimation against the Cramér-Rao-type
//!   floor.
//! - [`cli`]: the `channel-metric` command-line driver and its report
//!   formats.
//!
//! Every Choi matrix uses `C = Σ |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` with the input factor
//! first, and every tensor product orders the first factor as the most
//! significant index.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod cli;
pub mod error;
pub mod estim;
pub mod linalg;
pub mod metrics;
pub mod states;

pub use error::{Error, ErrorKind, Result};
pub use states::ExtReal;
