//! Random-walk Metropolis with short-cut sequences.
//!
//! A short-cut sequence runs K = M*L Metropolis updates but watches the
//! rejection count of each group of L: a group rejecting too often (the
//! stepsize is too big) or too rarely (too small) reverses the direction of
//! the underlying deterministic walk, after which previously computed states
//! are revisited at no cost.  Badly scaled stepsizes therefore consume almost
//! no computation, which makes it cheap to mix several stepsizes in one
//! chain, while the whole construction remains exactly invariant for the
//! target distribution.
//!
//! The crate provides the engine ([`shortcut`]), plain Metropolis and a
//! deliberately biased naive adaptive baseline ([`mh`]), built-in targets
//! ([`targets`]), autocorrelation-based output analysis ([`diagnostics`]),
//! and a harness ([`harness`]) that drives preset experiments on a
//! two-mode mixture, a badly scaled Gaussian, and a funnel distribution.

pub mod diagnostics;
pub mod harness;
pub mod mh;
pub mod rng;
pub mod shortcut;
pub mod targets;
pub mod trace;
