//! Numerical history states for scalar particles.
//!
//! A history state is a square-integrable amplitude over spacetime, with
//! time treated as one more coordinate. This crate discretizes such states
//! on truncated periodic 4D lattices and checks, by direct computation, the
//! relations between the 4D canonical product and the Klein-Gordon product,
//! mass projectors and the Klein-Gordon propagator, static external fields,
//! the non-relativistic limit and an extended Fock space.
//!
//! Conventions: metric `(+,-,-,-)`, `hbar = c = 1`,
//! `<x|p> = (2pi)^{-D/2} e^{-i p.x}`.
//!
//! The `examples/` directory has one runnable program per capability:
//!
//! ```text
//! cargo run --release --example free_norm
//! cargo run --release --example propagator
//! cargo run --release --example extfield_modes
//! ```

pub mod current;
pub mod error;
pub mod experiments;
pub mod extfield;
pub mod fft;
pub mod fock;
pub mod grid;
pub mod kernel;
pub mod nonrel;
pub mod onshell;
pub mod products;
pub mod propagator;
pub mod quad;
pub mod runner;
pub mod special;

pub use error::{Error, Result};

/// `sum_{i < n} f(i)` in fixed blocks of 4096 terms whose partial sums are
/// added in order, so the rounding does not depend on thread scheduling.
pub(crate) fn par_sum<T, F>(n: usize, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync,
{
    use rayon::prelude::*;
    const BLOCK: usize = 4096;
    let parts: Vec<T> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| (b * BLOCK..((b + 1) * BLOCK).min(n)).map(&f).sum())
        .collect();
    parts.into_iter().sum()
}
pub use grid::{boost, Grid4, HistoryState, Rapidity};
pub use kernel::{Branch, DeltaKernel, KernelShape};
