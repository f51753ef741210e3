//! Numerical laboratory for the quasistatic Eulerian strut with evolving
//! natural curvature: time integration, equilibria by shooting, Nyström
//! spectra of the linearization, and checks of Liapunov descent and
//! convergence to equilibrium.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constitutive;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod grid;

pub use constitutive::{ConstitutiveSet, Kappa, Rate, Threshold};
pub use dynamics::{Model, ModelParams, Regime, RodState};
pub use exec::Exec;
pub use grid::{Field, Grid};
pub mod equilibria;
pub mod spectral;
