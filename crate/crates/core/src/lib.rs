//! Task offloading with one-bit feedback.
//!
//! A task node offloads one task per slot to one of `K` fog nodes and gets
//! back a single happy/unhappy bit drawn from a per-node logistic model. The
//! learner ([`policy::Toof`]) keeps an online Newton-step estimate of every
//! node's weight vector and picks nodes by an upper confidence bound.
//!
//! Layout:
//! - [`quadform`]: positive-definite design matrices with maintained inverse
//!   and log-determinant, Mahalanobis norms, metric projection onto the unit ball.
//! - [`feedback`]: the logistic one-bit model.
//! - [`policy`]: the learner and the Round-Robin, Greedy and Optimal baselines.
//! - [`fogsim`]: the synthetic fog network.
//! - [`bench`]: episodes, metrics, regret-bound analytics, CSV output.

pub mod bench;
pub mod error;
pub mod feedback;
pub mod fogsim;
pub mod policy;
pub mod quadform;

pub use error::{Error, Result};
pub use feedback::{Feedback, FeatureVector, WeightVector};
pub use quadform::PsdMatrix;
