//! Joint distribution optimal transport (JDOT) for unsupervised domain adaptation.
//!
//! Given labeled source samples and unlabeled target inputs, JDOT looks for a
//! prediction function `f` on the target domain together with a coupling `γ`
//! between the source joint distribution `(x, y)` and the proxy target joint
//! distribution `(x, f(x))`. The two blocks are optimized alternately:
//!
//! * fixed `f`: a discrete optimal transport problem over the joint cost
//!   `C_ij = α·||x_i^s − x_j^t||² + L(y_i^s, f(x_j^t))` ([`ot`], [`cost`]);
//! * fixed `γ`: a weighted learning problem, solved in closed form for kernel
//!   ridge regression or by a Newton-type method for one-vs-all squared hinge
//!   classifiers ([`learners`]).
//!
//! [`jdot::jdot_fit`] drives the block coordinate descent and records a trace
//! of the objective after every half-step.

pub mod cli;
pub mod cost;
pub mod data;
pub mod error;
pub mod jdot;
pub mod kernel;
pub mod learners;
pub mod metrics;
pub mod ot;

mod linalg;

pub use error::{Error, ErrorKind, Result};
