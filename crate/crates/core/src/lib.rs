//! Balanced graph cuts by total-variation minimization.
//!
//! The balanced cut `Cut(S, S^c) / min(|S|, |S^c|)` is minimized through its
//! exact continuous relaxation `E(f) = ||f||_TV / ||f - med(f) 1||_1`. Each
//! outer step solves a graph ROF problem approximately; the inner solver stops
//! as soon as the iterate certifies a sufficient energy decrease, which keeps
//! the outer energy sequence strictly monotone.

pub mod error;
pub mod graph;
pub mod energy;
pub mod rof;
pub mod oracle;
pub mod balanced_cut;
pub mod datasets;
pub mod bench;
pub mod verify;

pub use error::{Error, Result};
