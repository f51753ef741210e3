//! Linearization of the evolution law.
//!
//! At an equilibrium with tangent angle `phi`, the linearization acts as
//! `L(xi, xi_nat) = (xi_nat - xi + K xi, 0)` with the symmetric kernel
//! `K(s, z) = gamma * int_{max(s,z)}^1 cos(phi)`. Its nonzero spectrum is
//! `{rho - 1 : rho in spec(K)}` and `0` is a simple eigenvalue with
//! eigenvector `(theta0', theta0'(1))`, where
//! `theta0'' + gamma cos(phi) theta0 = 0`, `theta0(0) = 0`, `theta0'(0) = 1`.
//!
//! `K` is discretized by symmetric Nyström: with trapezoid weights `W`, the
//! matrix `W^{1/2} S W^{1/2}` (`S_ij = K(s_i, s_j)`) is symmetric and shares
//! its eigenvalues with the Nyström operator `S W`.

use nalgebra::DMatrix;

use crate::dynamics::{Model, RodState};
use crate::equilibria::{self, rk4_on_grid, substeps_for, EquilibriumPoint};
use crate::error::SpectralError;
use crate::grid::{Field, Grid};

/// Number of leading eigenfunctions kept in a [`SpectrumReport`].
pub const LEADING_MODES: usize = 5;
/// Bisection width for the buckling load.
pub const BUCKLING_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    /// Symmetrized Nyström matrix `W^{1/2} S W^{1/2}`.
    pub matrix: DMatrix<f64>,
    pub sqrt_weights: Vec<f64>,
    /// `gamma * int_{s_k}^1 cos(phi)` at each node; `S_ij = tail[max(i, j)]`.
    pub tail: Vec<f64>,
}

impl KernelMatrix {
    /// Unsymmetrized kernel value `K(s_i, s_j)`.
    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        self.tail[i.max(j)]
    }

    /// Action of the Nyström operator `S W` on nodal values.
    pub fn apply(&self, field: &[f64]) -> Field {
        let scaled: Vec<f64> = field
            .iter()
            .zip(&self.sqrt_weights)
            .map(|(v, r)| v * r)
            .collect();
        let y = &self.matrix * nalgebra::DVector::from_vec(scaled);
        y.iter()
            .zip(&self.sqrt_weights)
            .map(|(v, r)| v / r)
            .collect::<Vec<_>>()
            .into()
    }
}

fn tail_of_cos(model: &Model, phi: &[f64]) -> Vec<f64> {
    let gamma = model.gamma();
    model
        .grid
        .tail(&Field::new(phi.iter().map(|p| p.cos()).collect()))
        .iter()
        .map(|t| gamma * t)
        .collect()
}

fn assemble_from_tail(grid: &Grid, tail: Vec<f64>) -> KernelMatrix {
    let sqrt_weights: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let n = grid.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        (sqrt_weights[i] * sqrt_weights[j]) * tail[i.max(j)]
    });
    KernelMatrix {
        matrix,
        sqrt_weights,
        tail,
    }
}

pub fn assemble_kernel(model: &Model, equilibrium: &EquilibriumPoint) -> KernelMatrix {
    let tail = tail_of_cos(model, &equilibrium.phi);
    assemble_from_tail(&model.grid, tail)
}

/// Matrix-free Nyström action `sum_j w_j K(s_i, s_j) xi_j` by prefix and
/// suffix sums, O(n).
fn apply_kernel_matrix_free(grid: &Grid, tail: &[f64], xi: &[f64]) -> Vec<f64> {
    let w = grid.weights();
    let n = xi.len();
    let mut prefix = vec![0.0; n];
    let mut acc = 0.0;
    for j in 0..n {
        acc += w[j] * xi[j];
        prefix[j] = acc;
    }
    let mut out = vec![0.0; n];
    let mut suffix = 0.0;
    for i in (0..n).rev() {
        out[i] = tail[i] * prefix[i] + suffix;
        suffix += w[i] * tail[i] * xi[i];
    }
    out
}

/// `L(direction)` at an equilibrium. The second component is identically 0.
pub fn apply_l(model: &Model, equilibrium: &EquilibriumPoint, direction: &RodState) -> RodState {
    let tail = tail_of_cos(model, &equilibrium.phi);
    let k_xi = apply_kernel_matrix_free(&model.grid, &tail, &direction.mu);
    let mu = direction
        .mu
        .iter()
        .zip(&k_xi)
        .map(|(x, k)| direction.mu_nat - x + k)
        .collect::<Vec<_>>();
    RodState::new(mu.into(), 0.0)
}

/// Exact derivative of the discretized evolution law at an arbitrary state,
/// applied to `direction`.
pub fn apply_df(model: &Model, state: &RodState, direction: &RodState) -> RodState {
    let grid = &model.grid;
    let gamma = model.gamma();
    let set = model.constitutive();
    let angle = grid.cumulative(&state.mu);
    let dangle = grid.cumulative(&direction.mu);
    let weighted = angle.zip_map(&dangle, |a, d| a.cos() * d);
    let load = grid.tail(&weighted);
    let mu = direction
        .mu
        .zip_map(&load, |x, l| direction.mu_nat - x + gamma * l);

    let d = model.driving_force(state);
    let th = set.threshold.eval(state.mu_nat);
    let dth = set.threshold.prime(state.mu_nat) * direction.mu_nat;
    let dd = grid.integral(&direction.mu)
        - direction.mu_nat
        - set.kappa.second(state.mu_nat) * direction.mu_nat;
    let mu_nat = set.rate.prime(d - th) * (dd - dth) + set.rate.prime(-th - d) * (dd + dth);
    RodState::new(mu, mu_nat)
}

/// Kernel direction `(theta0', theta0'(1))`, integrated jointly with the
/// pendulum equation by RK4 on the equilibrium's fine step.
pub fn theta0_solve(model: &Model, equilibrium: &EquilibriumPoint) -> RodState {
    let gamma = model.gamma();
    let substeps = substeps_for(&model.grid, equilibrium.n_fine);
    let ys = rk4_on_grid(
        &model.grid,
        substeps,
        [0.0, equilibrium.alpha, 0.0, 1.0],
        |y| [y[1], -gamma * y[0].sin(), y[3], -gamma * y[0].cos() * y[2]],
    );
    let mu: Vec<f64> = ys.iter().map(|y| y[3]).collect();
    let end = *mu.last().unwrap();
    RodState::new(mu.into(), end)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// `rho - 1` for the Nyström eigenvalues `rho` of `K`, descending.
    pub eigenvalues: Vec<f64>,
    pub zero_eigenvector: RodState,
    /// `||L(zero_eigenvector)||` in the product norm.
    pub zero_residual: f64,
    pub pos_tol: f64,
    pub n_unstable: usize,
    /// Set when most computed eigenvalues sit within `0.05` of `-1`.
    pub accumulates_at_minus_one: bool,
    /// Leading eigenfunctions on the grid, unit `L^2` norm, same order as `eigenvalues`.
    pub leading_modes: Vec<Field>,
}

impl SpectrumReport {
    pub fn largest(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// The computed eigenvalues with the exact eigenvalue `0` inserted.
    pub fn full_spectrum(&self) -> Vec<f64> {
        let mut all = self.eigenvalues.clone();
        let pos = all.iter().position(|&l| l < 0.0).unwrap_or(all.len());
        all.insert(pos, 0.0);
        all
    }
}

fn sorted_descending(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

fn check_finite(kernel: &KernelMatrix) -> Result<(), SpectralError> {
    if kernel.matrix.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SpectralError::Eigensolve {
            dim: kernel.matrix.nrows(),
            reason: "non-finite kernel entries".into(),
        })
    }
}

/// Eigenvalues `rho - 1` only, descending.
pub fn nystrom_eigenvalues(kernel: &KernelMatrix) -> Result<Vec<f64>, SpectralError> {
    check_finite(kernel)?;
    let rho = kernel.matrix.clone().symmetric_eigenvalues();
    Ok(sorted_descending(rho.iter().map(|r| r - 1.0).collect()))
}

/// Spectrum of the linearization at `equilibrium`. `pos_tol` defaults to
/// `max(1e-8, 10 * zero_residual)`.
pub fn spectrum(
    model: &Model,
    equilibrium: &EquilibriumPoint,
    pos_tol: Option<f64>,
) -> Result<SpectrumReport, SpectralError> {
    let kernel = assemble_kernel(model, equilibrium);
    check_finite(&kernel)?;
    let eig = kernel.matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k] - 1.0).collect();

    let grid = &model.grid;
    let leading_modes = order
        .iter()
        .take(LEADING_MODES)
        .map(|&k| {
            let col = eig.eigenvectors.column(k);
            let mut f: Vec<f64> = col
                .iter()
                .zip(&kernel.sqrt_weights)
                .map(|(v, r)| v / r)
                .collect();
            let norm = grid.l2_norm(&f);
            // fix the sign so the mode is positive at s = 0
            let sign = if f[0] < 0.0 { -1.0 } else { 1.0 };
            f.iter_mut().for_each(|v| *v *= sign / norm);
            Field::new(f)
        })
        .collect();

    let zero_eigenvector = theta0_solve(model, equilibrium);
    let zero_residual = apply_l(model, equilibrium, &zero_eigenvector).norm(grid);
    let pos_tol = pos_tol.unwrap_or_else(|| (10.0 * zero_residual).max(1e-8));
    let n_unstable = eigenvalues.iter().filter(|&&l| l > pos_tol).count();
    let near = eigenvalues
        .iter()
        .filter(|&&l| (l + 1.0).abs() < 0.05)
        .count();

    Ok(SpectrumReport {
        accumulates_at_minus_one: 2 * near > eigenvalues.len(),
        eigenvalues,
        zero_eigenvector,
        zero_residual,
        pos_tol,
        n_unstable,
        leading_modes,
    })
}

/// Largest eigenvalue of the linearization at the straight rod.
pub fn trivial_branch_lambda_max(grid: &Grid, gamma: f64) -> Result<f64, SpectralError> {
    let tail = grid
        .tail(&grid.sample(|_| 1.0))
        .iter()
        .map(|t| gamma * t)
        .collect();
    let kernel = assemble_from_tail(grid, tail);
    Ok(nystrom_eigenvalues(&kernel)?[0])
}

/// Load at which the straight rod loses stability, by bisection on the
/// largest trivial-branch eigenvalue over `bracket`. The straight rod is a
/// strictly admissible equilibrium for every constitutive set, and its
/// linearization does not involve `kappa`, `f` or `theta`.
pub fn buckling_threshold(grid: &Grid, bracket: (f64, f64)) -> Result<f64, SpectralError> {
    let (mut lo, mut hi) = bracket;
    let at_lo = trivial_branch_lambda_max(grid, lo)?;
    let at_hi = trivial_branch_lambda_max(grid, hi)?;
    if !(lo < hi) || (at_lo > 0.0) == (at_hi > 0.0) {
        return Err(SpectralError::NoSignChange {
            lo,
            hi,
            at_lo,
            at_hi,
        });
    }
    let lo_positive = at_lo > 0.0;
    while hi - lo > BUCKLING_WIDTH {
        let mid = 0.5 * (lo + hi);
        if (trivial_branch_lambda_max(grid, mid)? > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Spectrum at the equilibrium with initial slope `alpha`, rejecting
/// candidates that are not admissible.
pub fn spectrum_at_alpha(
    model: &Model,
    alpha: f64,
) -> Result<(EquilibriumPoint, SpectrumReport), SpectralError> {
    let eq = equilibria::equilibrium_from_alpha(model, alpha);
    if !eq.admissible {
        return Err(crate::error::EquilibriumError::NotStrictlyAdmissible {
            alpha,
            d_abs: eq.d_value.abs(),
            threshold: eq.threshold,
        }
        .into());
    }
    let report = spectrum(model, &eq, None)?;
    Ok((eq, report))
}
