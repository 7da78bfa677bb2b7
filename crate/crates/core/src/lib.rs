//! Prescribed-energy periodic solutions of the special-relativistic equation
//! of motion
//!
//! ```text
//!     d/dt ( m x' / sqrt(1 - |x'|^2/c^2) ) = ∇V(x),        x in Ω ⊂ ℝ²,
//! ```
//!
//! for singular N-centre potentials `V(x) = Σ κ_i/(α|x-σ_i|^α) + W(x)`.
//!
//! Solutions with prescribed relativistic energy `𝔈 = h + mc²` correspond,
//! up to reparameterization, to critical points of the Maupertuis functional
//!
//! ```text
//!     ℳ_h(u) = ∫₀¹ |u'|² ds · ∫₀¹ (Z_h(u) + 2hm) ds,
//!     Z_h(x) = 2 m V(x) + (V(x) + h)²/c²,
//! ```
//!
//! over closed loops in the Hill region `{V + h > 0}`. This crate provides:
//!
//! * [`potentials`] — the N-centre potential, its gradient, the transformed
//!   potential `Z_h` and Hill-region membership;
//! * [`loopspace`] — discretized closed loops and the exact gradient of the
//!   discrete Maupertuis functional;
//! * [`homotopy`] — winding numbers, free-group words read off a cut system,
//!   and the radial push-off map;
//! * [`optimizer`] — homotopy-constrained minimization of the discrete
//!   Maupertuis functional with collision margins;
//! * [`reparam`] — the explicit changes of variables turning Maupertuis
//!   critical points into time-parameterized periodic solutions, and back;
//! * [`integrator`] — adaptive Dormand-Prince integration of the equivalent
//!   Hamiltonian system for independent cross-validation;
//! * [`circular`] — closed-form circular-orbit analysis of the single-centre
//!   model problem: energy thresholds, effective-potential classification and
//!   the non-relativistic limit.
//!
//! The crate is `no_std` (with `alloc`); all floating-point math goes through
//! [`num_traits::Float`]. IO, file formats and the command-line front end
//! live in the companion `relorbit` crate.

#![no_std]

extern crate alloc;

pub mod circular;
pub mod error;
pub mod homotopy;
pub mod integrator;
pub mod loopspace;
pub mod optimizer;
pub mod potentials;
pub mod reparam;
pub mod vec2;

pub use error::{Error, Result};
pub use vec2::Vec2;
#[cfg(test)] extern crate std;
