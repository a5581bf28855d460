//! Spectral statistics of quantized completely integrable maps on the sphere.
//!
//! The crate generates eigenphase spectra of the quantum maps
//! `exp(2 pi i t N Phi(I))` for polyhomogeneous phases `Phi`, evaluates the
//! exponential sums that are their traces, and estimates pair correlation,
//! number variance, density of states and gap statistics. It also evaluates
//! the classical limit of the pair correlation of the Hamiltonian itself and
//! runs the parameter-family and lattice-count experiments that probe
//! Poisson behaviour.
//!
//! Conventions: `e(y) = exp(2 pi i y)`; the action variable ranges over
//! `[0, 1]` with a 1-periodic flow; eigenphases are rescaled to the circle
//! of circumference `N` (unit mean spacing); and the Fourier transform is
//! `fhat(xi) = int f(x) e(-x xi) dx`.

pub mod classical;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod expsum;
pub mod kernel;
pub mod lattice;
pub mod numeric;
pub mod phase;
pub mod poly;
pub mod quad;
pub mod stats;
pub mod window;

pub use error::{Error, Result};
pub use phase::{Order, Phase, PhaseSpec, Spectrum};
pub use poly::{Interval, Polynomial};
pub use window::Window;
