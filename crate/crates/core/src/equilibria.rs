//! Equilibria by shooting on the pendulum equation.
//!
//! Every equilibrium `(nu, nu_nat)` is `(phi', phi'(1))` for a solution of
//! `phi'' + gamma sin(phi) = 0`, `phi(0) = 0`, parameterized by the initial
//! slope `alpha = phi'(0)`. A candidate is an actual equilibrium iff
//! `|phi(1) - phi'(1) - kappa'(phi'(1))| <= theta(phi'(1))`.

use crate::dynamics::{Model, RodState};
use crate::error::EquilibriumError;
use crate::exec::Exec;
use crate::grid::{Field, Grid};
use crate::spectral;

/// Fine RK4 substeps per grid interval used by default.
pub const DEFAULT_REFINEMENT: usize = 10;
/// Bisection width for admissibility boundaries.
pub const BOUNDARY_WIDTH: f64 = 1e-10;
/// Step of the central difference along the branch.
pub const TANGENT_STEP: f64 = 1e-4;

/// Classical RK4 of an autonomous system, sampled at the grid nodes with
/// `substeps` uniform substeps per interval.
pub(crate) fn rk4_on_grid<const N: usize>(
    grid: &Grid,
    substeps: usize,
    y0: [f64; N],
    rhs: impl Fn(&[f64; N]) -> [f64; N],
) -> Vec<[f64; N]> {
    let substeps = substeps.max(1);
    let dt = grid.spacing() / substeps as f64;
    let axpy = |y: &[f64; N], a: f64, k: &[f64; N]| {
        let mut out = *y;
        for (o, kv) in out.iter_mut().zip(k) {
            *o += a * kv;
        }
        out
    };
    let mut out = Vec::with_capacity(grid.len());
    let mut y = y0;
    out.push(y);
    for _ in 0..grid.intervals() {
        for _ in 0..substeps {
            let k1 = rhs(&y);
            let k2 = rhs(&axpy(&y, 0.5 * dt, &k1));
            let k3 = rhs(&axpy(&y, 0.5 * dt, &k2));
            let k4 = rhs(&axpy(&y, dt, &k3));
            for i in 0..N {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        out.push(y);
    }
    out
}

pub(crate) fn substeps_for(grid: &Grid, n_fine: usize) -> usize {
    n_fine.div_ceil(grid.intervals()).max(1)
}

/// Solution of the pendulum IVP at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub phi: Field,
    pub phi_prime: Field,
}

/// Solves `phi'' + gamma sin(phi) = 0`, `phi(0) = 0`, `phi'(0) = alpha` with
/// at least `n_fine` RK4 steps over `[0, 1]`.
pub fn shoot(alpha: f64, gamma: f64, grid: &Grid, n_fine: usize) -> Shot {
    let ys = rk4_on_grid(grid, substeps_for(grid, n_fine), [0.0, alpha], |y| {
        [y[1], -gamma * y[0].sin()]
    });
    Shot {
        phi: ys.iter().map(|y| y[0]).collect::<Vec<_>>().into(),
        phi_prime: ys.iter().map(|y| y[1]).collect::<Vec<_>>().into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    /// `|D| < theta`
    Strict,
    /// `|D| = theta`; no stability verdict is attempted.
    Boundary,
    Inadmissible,
}

impl Admissibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Admissibility::Strict => "strict",
            Admissibility::Boundary => "boundary",
            Admissibility::Inadmissible => "inadmissible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPoint {
    pub alpha: f64,
    /// Tangent angle `phi = int_0^s nu`.
    pub phi: Field,
    pub nu: Field,
    pub nu_nat: f64,
    pub d_value: f64,
    pub threshold: f64,
    pub admissible: bool,
    pub strict: bool,
    /// Number of fine RK4 steps used for the shot.
    pub n_fine: usize,
}

impl EquilibriumPoint {
    pub fn state(&self) -> RodState {
        RodState::new(self.nu.clone(), self.nu_nat)
    }

    pub fn admissibility(&self) -> Admissibility {
        if self.strict {
            Admissibility::Strict
        } else if self.admissible {
            Admissibility::Boundary
        } else {
            Admissibility::Inadmissible
        }
    }

    pub fn phi_at_end(&self) -> f64 {
        *self.phi.last().unwrap()
    }

    /// `||F(nu, nu_nat)||` in the product norm.
    pub fn residual(&self, model: &Model) -> f64 {
        model.eval_f(&self.state()).norm(&model.grid)
    }
}

fn classify(model: &Model, alpha: f64, shot: Shot, n_fine: usize) -> EquilibriumPoint {
    let set = model.constitutive();
    let phi_end = *shot.phi.last().unwrap();
    let nu_nat = *shot.phi_prime.last().unwrap();
    let d_value = phi_end - nu_nat - set.kappa.prime(nu_nat);
    let threshold = set.threshold.eval(nu_nat);
    EquilibriumPoint {
        alpha,
        phi: shot.phi,
        nu: shot.phi_prime,
        nu_nat,
        d_value,
        threshold,
        admissible: d_value.abs() <= threshold,
        strict: d_value.abs() < threshold,
        n_fine,
    }
}

pub fn equilibrium_from_alpha_with(model: &Model, alpha: f64, n_fine: usize) -> EquilibriumPoint {
    let n_fine = n_fine.max(model.grid.intervals());
    let shot = shoot(alpha, model.gamma(), &model.grid, n_fine);
    classify(model, alpha, shot, n_fine)
}

/// Equilibrium candidate with initial slope `alpha`, shot with the default
/// refinement of `10 n` fine steps.
pub fn equilibrium_from_alpha(model: &Model, alpha: f64) -> EquilibriumPoint {
    equilibrium_from_alpha_with(model, alpha, DEFAULT_REFINEMENT * model.grid.intervals())
}

/// `|D| - theta(nu_nat)` along the branch; non-positive iff admissible.
fn admissibility_gap(model: &Model, alpha: f64) -> f64 {
    let p = equilibrium_from_alpha(model, alpha);
    p.d_value.abs() - p.threshold
}

fn bisect_boundary(model: &Model, mut lo: f64, mut hi: f64) -> f64 {
    let inside_lo = admissibility_gap(model, lo) <= 0.0;
    while hi - lo > BOUNDARY_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (admissibility_gap(model, mid) <= 0.0) == inside_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchCurve {
    pub points: Vec<EquilibriumPoint>,
    /// Values of `alpha` where `|D| = theta`, located by bisection.
    pub boundaries: Vec<f64>,
}

pub fn branch_sweep(
    model: &Model,
    alpha_min: f64,
    alpha_max: f64,
    n_points: usize,
) -> Result<BranchCurve, EquilibriumError> {
    branch_sweep_with(Exec::default(), model, alpha_min, alpha_max, n_points)
}

/// Equilibria at `n_points` uniformly spaced values of `alpha`, with every
/// admissibility change bisected.
pub fn branch_sweep_with(
    exec: Exec,
    model: &Model,
    alpha_min: f64,
    alpha_max: f64,
    n_points: usize,
) -> Result<BranchCurve, EquilibriumError> {
    if !(alpha_min.is_finite() && alpha_max.is_finite() && alpha_min < alpha_max && n_points >= 2) {
        return Err(EquilibriumError::InvalidRange {
            min: alpha_min,
            max: alpha_max,
            n_points,
        });
    }
    let span = alpha_max - alpha_min;
    let points = exec.map_range(n_points, |i| {
        let alpha = if i + 1 == n_points {
            alpha_max
        } else {
            alpha_min + span * i as f64 / (n_points - 1) as f64
        };
        equilibrium_from_alpha(model, alpha)
    });
    let brackets: Vec<(f64, f64)> = points
        .windows(2)
        .filter(|w| w[0].admissible != w[1].admissible)
        .map(|w| (w[0].alpha, w[1].alpha))
        .collect();
    let boundaries = exec.map(&brackets, |&(lo, hi)| bisect_boundary(model, lo, hi));
    Ok(BranchCurve { points, boundaries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentCheck {
    /// Central difference of `alpha -> (nu(alpha), nu_nat(alpha))`.
    pub fd_tangent: RodState,
    /// `(theta0', theta0'(1))` at the base point.
    pub theta0_tangent: RodState,
    /// Product-norm distance between the two.
    pub discrepancy: f64,
}

/// Compares the finite-difference tangent of the branch at `alpha` with the
/// kernel direction of the linearization.
pub fn tangent_check(model: &Model, alpha: f64) -> Result<TangentCheck, EquilibriumError> {
    let base = equilibrium_from_alpha(model, alpha);
    if !base.strict {
        return Err(EquilibriumError::NotStrictlyAdmissible {
            alpha,
            d_abs: base.d_value.abs(),
            threshold: base.threshold,
        });
    }
    let plus = equilibrium_from_alpha(model, alpha + TANGENT_STEP);
    let minus = equilibrium_from_alpha(model, alpha - TANGENT_STEP);
    let fd_tangent = plus
        .state()
        .axpy(-1.0, &minus.state())
        .scale(0.5 / TANGENT_STEP);
    let theta0_tangent = spectral::theta0_solve(model, &base);
    let discrepancy = fd_tangent.axpy(-1.0, &theta0_tangent).norm(&model.grid);
    Ok(TangentCheck {
        fd_tangent,
        theta0_tangent,
        discrepancy,
    })
}

/// Largest fine-step count tried by [`refine`].
const MAX_REFINEMENT: usize = 640;

/// Re-shoots with successively doubled fine-step counts while the residual
/// of the evolution law keeps decreasing. Returns the best point and its
/// residual.
pub fn refine(model: &Model, point: &EquilibriumPoint) -> (EquilibriumPoint, f64) {
    let mut best = point.clone();
    let mut best_res = best.residual(model);
    let cap = MAX_REFINEMENT * model.grid.intervals();
    let mut n_fine = point.n_fine.max(model.grid.intervals());
    while best_res > 0.0 && n_fine < cap {
        n_fine *= 2;
        let candidate = equilibrium_from_alpha_with(model, point.alpha, n_fine);
        let res = candidate.residual(model);
        if res < best_res {
            best = candidate;
            best_res = res;
        } else {
            break;
        }
    }
    (best, best_res)
}
