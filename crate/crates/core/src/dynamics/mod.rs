//! Quasistatic evolution of the strut on `L^2(0,1) x R`.
//!
//! The state is the curvature field `mu` together with the natural curvature
//! `mu_nat`. The evolution law is
//!
//! ```text
//! mu_t     = mu_nat - mu(s) + gamma * int_s^1 sin(int_0^sigma mu) dsigma
//! mu_nat_t = f(D - theta(mu_nat)) - f(-theta(mu_nat) - D)
//! D        = int_0^1 mu - mu_nat - kappa'(mu_nat)
//! ```
//!
//! and `V = 1/2 int (mu - mu_nat)^2 + kappa(mu_nat) + gamma int cos(theta)` is
//! nonincreasing along trajectories.

mod integrator;

pub use integrator::{
    global_bound_check, simulate, step, try_step, BoundCheck, SimulateOptions, StepOutcome,
    Stepper, Tolerances, TrajectoryRecord,
};

use crate::constitutive::ConstitutiveSet;
use crate::error::DynamicsError;
use crate::grid::{Field, Grid};

/// Point of the phase space, also used for velocities and tangent directions.
#[derive(Debug, Clone, PartialEq)]
pub struct RodState {
    pub mu: Field,
    pub mu_nat: f64,
}

/// `F(state)` has the same shape as the state.
pub type StateVelocity = RodState;

impl RodState {
    pub fn new(mu: Field, mu_nat: f64) -> Self {
        RodState { mu, mu_nat }
    }

    pub fn zeros(grid: &Grid) -> Self {
        RodState {
            mu: grid.zeros(),
            mu_nat: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mu_nat.is_finite() && self.mu.is_finite()
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &RodState) -> RodState {
        RodState {
            mu: self.mu.zip_map(&other.mu, |x, y| x + a * y),
            mu_nat: self.mu_nat + a * other.mu_nat,
        }
    }

    pub fn scale(&self, a: f64) -> RodState {
        RodState {
            mu: self.mu.map(|x| a * x),
            mu_nat: a * self.mu_nat,
        }
    }

    pub fn norm(&self, grid: &Grid) -> f64 {
        grid.product_norm(&self.mu, self.mu_nat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Dimensionless terminal thrust.
    pub gamma: f64,
    pub constitutive: ConstitutiveSet,
}

impl ModelParams {
    pub fn new(gamma: f64, constitutive: ConstitutiveSet) -> Result<Self, DynamicsError> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(DynamicsError::InvalidGamma(gamma));
        }
        Ok(ModelParams {
            gamma,
            constitutive,
        })
    }
}

/// Whether the natural curvature can move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Stick,
    SlipPositive,
    SlipNegative,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Stick => "stick",
            Regime::SlipPositive => "slip_positive",
            Regime::SlipNegative => "slip_negative",
        }
    }
}

/// Discretized strut: a grid plus physical parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub grid: Grid,
    pub params: ModelParams,
}

impl Model {
    pub fn new(grid: Grid, params: ModelParams) -> Self {
        Model { grid, params }
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    pub fn constitutive(&self) -> &ConstitutiveSet {
        &self.params.constitutive
    }

    /// `D = int mu - mu_nat - kappa'(mu_nat)`
    pub fn driving_force(&self, state: &RodState) -> f64 {
        self.grid.integral(&state.mu) - state.mu_nat - self.constitutive().kappa.prime(state.mu_nat)
    }

    pub fn threshold(&self, mu_nat: f64) -> f64 {
        self.constitutive().threshold.eval(mu_nat)
    }

    /// Rate of the natural curvature for a given driving force.
    fn natural_rate(&self, d: f64, mu_nat: f64) -> f64 {
        let rate = &self.constitutive().rate;
        let th = self.threshold(mu_nat);
        rate.eval(d - th) - rate.eval(-th - d)
    }

    pub fn eval_f(&self, state: &RodState) -> StateVelocity {
        let gamma = self.gamma();
        let load = self.grid.tail_sine_integral(&state.mu);
        let mu = state.mu.zip_map(&load, |m, g| state.mu_nat - m + gamma * g);
        let d = self.driving_force(state);
        RodState {
            mu,
            mu_nat: self.natural_rate(d, state.mu_nat),
        }
    }

    pub fn liapunov(&self, state: &RodState) -> f64 {
        let grid = &self.grid;
        let rel = state.mu.map(|m| {
            let d = m - state.mu_nat;
            d * d
        });
        let angle = grid.cumulative(&state.mu);
        0.5 * grid.integral(&rel)
            + self.constitutive().kappa.eval(state.mu_nat)
            + self.gamma() * grid.integral(&angle.map(f64::cos))
    }

    /// Stored elastic part of `V`: `1/2 int (mu - mu_nat)^2 + kappa(mu_nat)`.
    pub fn stored_energy(&self, state: &RodState) -> f64 {
        let rel = state.mu.map(|m| {
            let d = m - state.mu_nat;
            d * d
        });
        0.5 * self.grid.integral(&rel) + self.constitutive().kappa.eval(state.mu_nat)
    }

    /// `-int F_1^2 - |D| |F_2|`, the time derivative of `V` along the flow.
    pub fn dissipation_rate(&self, state: &RodState) -> f64 {
        let vel = self.eval_f(state);
        self.dissipation_from(state, &vel)
    }

    pub(crate) fn dissipation_from(&self, state: &RodState, vel: &StateVelocity) -> f64 {
        let l2 = self.grid.l2_norm(&vel.mu);
        -(l2 * l2) - (self.driving_force(state) * vel.mu_nat).abs()
    }

    pub fn regime(&self, state: &RodState) -> Regime {
        let d = self.driving_force(state);
        if d.abs() <= self.threshold(state.mu_nat) {
            Regime::Stick
        } else if d > 0.0 {
            Regime::SlipPositive
        } else {
            Regime::SlipNegative
        }
    }

    /// Contact moment `(mu - mu_nat) + mu_t`; vanishes identically exactly
    /// when the rod sits at rest in its natural configuration.
    pub fn contact_moment(&self, state: &RodState) -> Field {
        let vel = self.eval_f(state);
        state.mu.zip_map(&vel.mu, |m, mt| (m - state.mu_nat) + mt)
    }
}
