//! Numerics for noncompact symmetric spaces of real rank one.
//!
//! The crate works in horospherical (`N̄A`) coordinates `(v, w, s)` and in
//! Cartan coordinates `k₁ a(t) k₂`, and ties the two together through the
//! relation `cosh²t = (cosh s + eˢ|v|²)² + e²ˢ|w|²`. On top of that it provides
//!
//! * [`geometry`]: root multiplicities, the Cartan radius, measure densities,
//!   distances on real hyperbolic spaces and ball volumes;
//! * [`kernel`]: the Abel kernel `ψ(t, s)`, its comparator, a Monte Carlo
//!   surface oracle, the Abel transform and the weight `φ(u)`;
//! * [`rearrange`]: nonincreasing and double rearrangements, Lorentz
//!   quasinorms and the embedding checks built on them;
//! * [`convolution`]: the trilinear form `∬ f(z) g(z⁻¹z') h(z')`, a discrete
//!   surrogate of its rearrangement chain, and the endpoint ratio sweep;
//! * [`maximal`]: grid discretisations of the centered, noncentered and
//!   nilpotent maximal operators, weak-type sweeps and ball coverings.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. The `parallel` feature runs case loops and Monte Carlo batches on
//! rayon; results never depend on it.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
pub(crate) mod math;
pub mod par;
pub mod pinned;
pub mod quad;

pub mod convolution;
pub mod geometry;
pub mod kernel;
pub mod maximal;
pub mod rearrange;

pub use error::{Error, Result};
pub use geometry::{IwasawaPoint, SpaceParams};
pub use kernel::{KernelMethod, KernelTable, RadialFunction};
pub use rearrange::{DoubleProfile, StepProfile, WeightedSamples};
