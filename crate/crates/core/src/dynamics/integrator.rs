//! Dormand–Prince 5(4) time stepping with a PI step-size controller, and
//! the trajectory driver built on top of it.

use super::{Model, Regime, RodState};
use crate::error::DynamicsError;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller (Hairer & Wanner, DOPRI5 defaults)
const BETA: f64 = 0.04;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Fraction of the real stability interval of the method (about 3.3) that a
/// step may use relative to the Lipschitz bound `1 + gamma`. Steps at the
/// stability boundary leave the asymptotic error at the tolerance level, so
/// `||F||` would never fall below `abs_tol`.
pub const STABILITY_FRACTION: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rel: 1e-8,
            abs: 1e-8,
            dt_min: 1e-12,
            dt_max: f64::INFINITY,
        }
    }
}

impl Tolerances {
    pub fn new(rel: f64, abs: f64) -> Result<Self, DynamicsError> {
        let t = Tolerances {
            rel,
            abs,
            ..Default::default()
        };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), DynamicsError> {
        for (name, value) in [
            ("rel_tol", self.rel),
            ("abs_tol", self.abs),
            ("dt_min", self.dt_min),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DynamicsError::InvalidTolerance { name, value });
            }
        }
        if !(self.dt_max > self.dt_min) {
            return Err(DynamicsError::InvalidTolerance {
                name: "dt_max",
                value: self.dt_max,
            });
        }
        Ok(())
    }
}

/// One explicit Dormand–Prince step of size `dt` without error control.
/// Returns the fifth-order solution and the embedded error vector.
pub fn try_step(model: &Model, state: &RodState, dt: f64) -> (RodState, RodState) {
    let k1 = model.eval_f(state);
    try_step_with(model, state, &k1, dt)
}

fn try_step_with(model: &Model, y: &RodState, k1: &RodState, dt: f64) -> (RodState, RodState) {
    let comb = |terms: &[(f64, &RodState)]| {
        let mut out = y.clone();
        for (c, k) in terms {
            if *c != 0.0 {
                out = out.axpy(dt * c, k);
            }
        }
        out
    };
    let k2 = model.eval_f(&comb(&[(A21, k1)]));
    let k3 = model.eval_f(&comb(&[(A31, k1), (A32, &k2)]));
    let k4 = model.eval_f(&comb(&[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = model.eval_f(&comb(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = model.eval_f(&comb(&[
        (A61, k1),
        (A62, &k2),
        (A63, &k3),
        (A64, &k4),
        (A65, &k5),
    ]));
    let y_new = comb(&[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = model.eval_f(&y_new);

    let zero = RodState::new(model.grid.zeros(), 0.0);
    let err = [
        (E1, k1),
        (E3, &k3),
        (E4, &k4),
        (E5, &k5),
        (E6, &k6),
        (E7, &k7),
    ]
    .iter()
    .fold(zero, |acc, (c, k)| acc.axpy(dt * c, k));
    (y_new, err)
}

/// Scaled RMS norm of an error vector, `<= 1` means acceptable.
fn error_norm(tol: &Tolerances, y0: &RodState, y1: &RodState, err: &RodState) -> f64 {
    let scaled = |e: f64, a: f64, b: f64| {
        let sc = tol.abs + tol.rel * a.abs().max(b.abs());
        (e / sc).powi(2)
    };
    let mut sum = scaled(err.mu_nat, y0.mu_nat, y1.mu_nat);
    for ((e, a), b) in err.mu.iter().zip(y0.mu.iter()).zip(y1.mu.iter()) {
        sum += scaled(*e, *a, *b);
    }
    let norm = (sum / (err.mu.len() + 1) as f64).sqrt();
    if norm.is_finite() {
        norm
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: RodState,
    /// Size of the accepted step.
    pub dt: f64,
    /// Scaled error estimate of the accepted step (`<= 1`).
    pub error: f64,
    /// Suggested size of the next step.
    pub dt_next: f64,
    pub rejected: usize,
}

/// Adaptive stepper carrying the PI controller memory between steps.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub tol: Tolerances,
    fac_old: f64,
}

impl Stepper {
    pub fn new(tol: Tolerances) -> Result<Self, DynamicsError> {
        tol.check()?;
        Ok(Stepper { tol, fac_old: 1e-4 })
    }

    /// Takes one accepted step starting from `dt_suggestion`, shrinking on
    /// rejection. `t` is only used for diagnostics.
    pub fn step(
        &mut self,
        model: &Model,
        state: &RodState,
        t: f64,
        dt_suggestion: f64,
    ) -> Result<StepOutcome, DynamicsError> {
        let expo = 0.2 - 0.75 * BETA;
        let k1 = model.eval_f(state);
        let mut dt = dt_suggestion.min(self.tol.dt_max);
        let mut rejected = 0;
        loop {
            if !(dt >= self.tol.dt_min) {
                return Err(DynamicsError::StepUnderflow {
                    t,
                    dt,
                    error: f64::NAN,
                    mu_nat: state.mu_nat,
                    mu: state.mu.to_vec(),
                });
            }
            let (y_new, err_vec) = try_step_with(model, state, &k1, dt);
            let err = error_norm(&self.tol, state, &y_new, &err_vec);
            let fac11 = err.powf(expo);
            if err <= 1.0 {
                let fac =
                    (fac11 / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                self.fac_old = err.max(1e-4);
                let mut dt_next = dt / fac;
                if rejected > 0 {
                    dt_next = dt_next.min(dt);
                }
                return Ok(StepOutcome {
                    state: y_new,
                    dt,
                    error: err,
                    dt_next: dt_next.min(self.tol.dt_max),
                    rejected,
                });
            }
            rejected += 1;
            let shrink = (fac11 / SAFETY).min(1.0 / FAC_MIN);
            let next = if shrink.is_finite() {
                dt / shrink
            } else {
                dt * FAC_MIN
            };
            if next < self.tol.dt_min {
                return Err(DynamicsError::StepUnderflow {
                    t,
                    dt: next,
                    error: err,
                    mu_nat: state.mu_nat,
                    mu: state.mu.to_vec(),
                });
            }
            dt = next;
        }
    }
}

/// Single adaptive step with a fresh controller.
pub fn step(
    model: &Model,
    state: &RodState,
    dt_suggestion: f64,
    tol: Tolerances,
) -> Result<StepOutcome, DynamicsError> {
    Stepper::new(tol)?.step(model, state, 0.0, dt_suggestion)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions {
    pub t_end: f64,
    pub tol: Tolerances,
    /// Convergence threshold on `||F||` in the product norm.
    pub eq_tol: f64,
    pub dt_initial: f64,
    pub max_steps: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            t_end: 100.0,
            tol: Tolerances::default(),
            eq_tol: 1e-10,
            dt_initial: 1e-3,
            max_steps: 1_000_000,
        }
    }
}

/// Accepted steps of one run, index-aligned.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<RodState>,
    pub liapunov: Vec<f64>,
    pub driving_force: Vec<f64>,
    pub threshold: Vec<f64>,
    pub regimes: Vec<Regime>,
    /// Size of the step that produced each record (0 for the initial one).
    pub dt: Vec<f64>,
    pub norm_f: Vec<f64>,
    /// Dissipation `-int F_1^2 - |D||F_2|` at each record.
    pub dissipation: Vec<f64>,
    /// Times at which `|D| - theta(mu_nat)` changed sign (linear interpolation).
    pub crossings: Vec<f64>,
    pub converged: bool,
    pub rejected_steps: usize,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&RodState> {
        self.states.last()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    fn push(&mut self, model: &Model, t: f64, dt: f64, state: RodState) {
        let vel = model.eval_f(&state);
        let d = model.driving_force(&state);
        let th = model.threshold(state.mu_nat);
        if let (Some(&t_prev), Some(&d_prev), Some(&th_prev)) = (
            self.times.last(),
            self.driving_force.last(),
            self.threshold.last(),
        ) {
            let g_prev = d_prev.abs() - th_prev;
            let g = d.abs() - th;
            if (g_prev <= 0.0) != (g <= 0.0) {
                let w = g_prev / (g_prev - g);
                self.crossings.push(t_prev + w * (t - t_prev));
            }
        }
        self.norm_f.push(vel.norm(&model.grid));
        self.dissipation.push(model.dissipation_from(&state, &vel));
        self.liapunov.push(model.liapunov(&state));
        self.driving_force.push(d);
        self.threshold.push(th);
        self.regimes.push(model.regime(&state));
        self.times.push(t);
        self.dt.push(dt);
        self.states.push(state);
    }
}

/// Integrates from `initial` until `t_end` or until `||F|| < eq_tol`.
pub fn simulate(
    model: &Model,
    initial: &RodState,
    opts: &SimulateOptions,
) -> Result<TrajectoryRecord, DynamicsError> {
    if !(opts.t_end.is_finite() && opts.t_end > 0.0) {
        return Err(DynamicsError::InvalidTolerance {
            name: "t_end",
            value: opts.t_end,
        });
    }
    if !(opts.eq_tol > 0.0) {
        return Err(DynamicsError::InvalidTolerance {
            name: "eq_tol",
            value: opts.eq_tol,
        });
    }
    if !initial.is_finite() {
        return Err(DynamicsError::NonFinite { t: 0.0 });
    }
    let mut tol = opts.tol;
    tol.dt_max = tol.dt_max.min(STABILITY_FRACTION / (1.0 + model.gamma()));
    let mut stepper = Stepper::new(tol)?;
    let mut record = TrajectoryRecord::default();
    record.push(model, 0.0, 0.0, initial.clone());

    let mut t = 0.0;
    let mut state = initial.clone();
    let mut dt = opts.dt_initial.max(opts.tol.dt_min);
    let mut steps = 0;
    while *record.norm_f.last().unwrap() >= opts.eq_tol {
        if t >= opts.t_end || steps >= opts.max_steps {
            return Ok(record);
        }
        let remaining = opts.t_end - t;
        let last_step = dt >= remaining;
        let out = stepper.step(model, &state, t, dt.min(remaining))?;
        record.rejected_steps += out.rejected;
        t = if last_step && out.dt == remaining {
            opts.t_end
        } else {
            t + out.dt
        };
        if !out.state.is_finite() {
            return Err(DynamicsError::NonFinite { t });
        }
        state = out.state;
        record.push(model, t, out.dt, state.clone());
        dt = out.dt_next;
        steps += 1;
    }
    record.converged = true;
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    /// `min_k (V(initial) + gamma - stored_energy(state_k))`
    pub margin: f64,
}

/// Checks `1/2 int (mu - mu_nat)^2 + kappa(mu_nat) <= V(initial) + gamma`
/// at every snapshot.
pub fn global_bound_check(record: &TrajectoryRecord, model: &Model) -> BoundCheck {
    assert!(!record.is_empty(), "empty trajectory");
    let bound = record.liapunov[0] + model.gamma();
    let margin = record
        .states
        .iter()
        .map(|s| bound - model.stored_energy(s))
        .fold(f64::INFINITY, f64::min);
    BoundCheck {
        holds: margin >= 0.0,
        margin,
    }
}
