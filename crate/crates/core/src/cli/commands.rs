use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, SweepRange};
use super::output::{float, CsvTable, Plot, Series};
use super::CliError;
use crate::dynamics::{
    global_bound_check, simulate, Model, ModelParams, RodState, TrajectoryRecord,
};
use crate::equilibria::{branch_sweep_with, equilibrium_from_alpha, tangent_check, BranchCurve};
use crate::error::{EquilibriumError, SpectralError};
use crate::exec::Exec;
use crate::grid::Grid;
use crate::spectral::{
    apply_df, apply_l, spectrum_at_alpha, theta0_solve, trivial_branch_lambda_max, SpectrumReport,
};

/// Most rod shapes drawn in `shape.svg`.
const MAX_SHAPES: usize = 8;

fn prepare(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn csv(dir: &Path, name: &str, header: &[&str]) -> Result<(CsvTable, PathBuf), CliError> {
    let path = dir.join(name);
    let t = CsvTable::create(&path, header).map_err(|e| CliError::io(&path, e))?;
    Ok((t, path))
}

fn svg(dir: &Path, name: &str, plot: &Plot) -> Result<(), CliError> {
    let path = dir.join(name);
    plot.write(&path).map_err(|e| CliError::io(&path, e))
}

/// FNV-1a over the bit patterns of the state.
fn digest(state: &RodState) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for v in state.mu.iter().chain(std::iter::once(&state.mu_nat)) {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub converged: bool,
    pub final_time: f64,
    pub final_norm_f: f64,
    pub digest: String,
    pub v_initial: f64,
    pub v_final: f64,
    pub final_mu_nat: f64,
    /// `mu(0)` of the final state.
    pub final_alpha: f64,
    pub final_regime: String,
    pub crossings: Vec<f64>,
    pub steps: usize,
    pub rejected_steps: usize,
}

impl RunSummary {
    pub fn from_record(record: &TrajectoryRecord) -> Self {
        let last = record.len() - 1;
        let state = &record.states[last];
        RunSummary {
            converged: record.converged,
            final_time: record.times[last],
            final_norm_f: record.norm_f[last],
            digest: digest(state),
            v_initial: record.liapunov[0],
            v_final: record.liapunov[last],
            final_mu_nat: state.mu_nat,
            final_alpha: state.mu[0],
            final_regime: record.regimes[last].as_str().into(),
            crossings: record.crossings.clone(),
            steps: last,
            rejected_steps: record.rejected_steps,
        }
    }

    pub fn to_text(&self) -> String {
        let crossings: Vec<String> = self.crossings.iter().map(|&c| float(c)).collect();
        let mut s = String::from("[summary]\n");
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "final_time = {}", float(self.final_time));
        let _ = writeln!(s, "final_norm_F = {}", float(self.final_norm_f));
        let _ = writeln!(s, "final_state_digest = {}", self.digest);
        let _ = writeln!(s, "V_initial = {}", float(self.v_initial));
        let _ = writeln!(s, "V_final = {}", float(self.v_final));
        let _ = writeln!(s, "final_mu_nat = {}", float(self.final_mu_nat));
        let _ = writeln!(s, "final_mu_at_0 = {}", float(self.final_alpha));
        let _ = writeln!(s, "final_regime = {}", self.final_regime);
        let _ = writeln!(s, "regime_crossings = {}", crossings.join(","));
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "rejected_steps = {}", self.rejected_steps);
        s
    }
}

/// Records written to `snapshots.csv`.
fn snapshot_indices(len: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

pub fn run_simulate(config: &ScenarioConfig, out: &Path) -> Result<RunSummary, CliError> {
    let model = config.model();
    let initial = config.initial_state(&model.grid);
    let record = simulate(&model, &initial, &config.simulate_options())?;
    prepare(out)?;

    let (mut t, path) = csv(
        out,
        "trajectory.csv",
        &[
            "t",
            "mu_nat",
            "V",
            "D_hat",
            "theta_of_mu_nat",
            "regime",
            "norm_F",
            "dt",
        ],
    )?;
    for k in 0..record.len() {
        t.row([
            float(record.times[k]),
            float(record.states[k].mu_nat),
            float(record.liapunov[k]),
            float(record.driving_force[k]),
            float(record.threshold[k]),
            record.regimes[k].as_str().to_string(),
            float(record.norm_f[k]),
            float(record.dt[k]),
        ])
        .map_err(|e| CliError::io(&path, e))?;
    }
    t.finish().map_err(|e| CliError::io(&path, e))?;

    let snaps = snapshot_indices(record.len(), config.output.snapshot_stride);
    let (mut t, path) = csv(out, "snapshots.csv", &["t", "s", "mu"])?;
    for &k in &snaps {
        for (s, mu) in model.grid.nodes().iter().zip(record.states[k].mu.iter()) {
            t.row([float(record.times[k]), float(*s), float(*mu)])
                .map_err(|e| CliError::io(&path, e))?;
        }
    }
    t.finish().map_err(|e| CliError::io(&path, e))?;

    if config.output.svg {
        let mut shape = Plot::new("Rod shape", "x", "y");
        shape.equal_aspect = true;
        let every = snaps.len().div_ceil(MAX_SHAPES).max(1);
        let mut drawn: Vec<usize> = snaps.iter().copied().step_by(every).collect();
        if drawn.last() != snaps.last() {
            drawn.push(*snaps.last().unwrap());
        }
        for k in drawn {
            let sh = model.grid.reconstruct_shape(&record.states[k].mu);
            let pts = sh.x.iter().copied().zip(sh.y.iter().copied()).collect();
            shape
                .series
                .push(Series::line(format!("t = {:.4}", record.times[k]), pts));
        }
        svg(out, "shape.svg", &shape)?;

        let mut v = Plot::new("Liapunov functional", "t", "V");
        v.series.push(Series::line(
            "",
            record
                .times
                .iter()
                .copied()
                .zip(record.liapunov.iter().copied())
                .collect(),
        ));
        svg(out, "liapunov.svg", &v)?;
    }

    let summary = RunSummary::from_record(&record);
    let path = out.join("summary.txt");
    std::fs::write(&path, summary.to_text()).map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}

pub fn run_equilibria(
    config: &ScenarioConfig,
    range: SweepRange,
    out: &Path,
    exec: Exec,
) -> Result<BranchCurve, CliError> {
    let model = config.model();
    let curve = branch_sweep_with(exec, &model, range.min, range.max, range.n)
        .map_err(|e| CliError::Config(e.to_string()))?;
    prepare(out)?;
    let boundary_points: Vec<_> = curve
        .boundaries
        .iter()
        .map(|&b| equilibrium_from_alpha(&model, b))
        .collect();

    let (mut t, path) = csv(
        out,
        "branch.csv",
        &[
            "alpha",
            "nu_nat",
            "phi_at_1",
            "D_hat",
            "theta",
            "admissible",
            "kind",
        ],
    )?;
    let tagged = curve
        .points
        .iter()
        .map(|p| (p, "point"))
        .chain(boundary_points.iter().map(|p| (p, "boundary")));
    for (p, kind) in tagged {
        t.row([
            float(p.alpha),
            float(p.nu_nat),
            float(p.phi_at_end()),
            float(p.d_value),
            float(p.threshold),
            p.admissibility().as_str().to_string(),
            kind.to_string(),
        ])
        .map_err(|e| CliError::io(&path, e))?;
    }
    t.finish().map_err(|e| CliError::io(&path, e))?;

    if config.output.svg {
        let mut plot = Plot::new(
            &format!("Equilibrium branch, gamma = {}", config.gamma),
            "alpha",
            "natural curvature",
        );
        plot.series.push(Series::line(
            "nu_nat(alpha)",
            curve.points.iter().map(|p| (p.alpha, p.nu_nat)).collect(),
        ));
        if !boundary_points.is_empty() {
            plot.series.push(Series {
                label: "|D| = theta".into(),
                points: boundary_points
                    .iter()
                    .map(|p| (p.alpha, p.nu_nat))
                    .collect(),
                markers: true,
            });
        }
        plot.bands = inadmissible_bands(&curve);
        plot.band_label = "inadmissible".into();
        svg(out, "bifurcation.svg", &plot)?;
    }
    Ok(curve)
}

/// Maximal runs of inadmissible samples, widened to the bisected boundaries.
fn inadmissible_bands(curve: &BranchCurve) -> Vec<(f64, f64)> {
    let pts = &curve.points;
    let between = |lo: f64, hi: f64| {
        curve
            .boundaries
            .iter()
            .copied()
            .find(|&b| b >= lo && b <= hi)
    };
    let mut bands = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        if pts[i].admissible {
            i += 1;
            continue;
        }
        let start = i;
        while i < pts.len() && !pts[i].admissible {
            i += 1;
        }
        let left = if start > 0 {
            between(pts[start - 1].alpha, pts[start].alpha).unwrap_or(pts[start].alpha)
        } else {
            pts[start].alpha
        };
        let right = if i < pts.len() {
            between(pts[i - 1].alpha, pts[i].alpha).unwrap_or(pts[i - 1].alpha)
        } else {
            pts[i - 1].alpha
        };
        bands.push((left, right));
    }
    bands
}

pub fn run_spectrum(
    config: &ScenarioConfig,
    alpha: f64,
    out: &Path,
) -> Result<SpectrumReport, CliError> {
    let model = config.model();
    let (eq, report) = spectrum_at_alpha(&model, alpha).map_err(|e| match e {
        SpectralError::Equilibrium(inner @ EquilibriumError::NotStrictlyAdmissible { .. }) => {
            CliError::Inadmissible(inner.to_string())
        }
        other => CliError::Numerical(other.to_string()),
    })?;
    prepare(out)?;

    let (mut t, path) = csv(out, "spectrum.csv", &["k", "lambda"])?;
    for (k, l) in report.eigenvalues.iter().enumerate() {
        t.row([k.to_string(), float(*l)])
            .map_err(|e| CliError::io(&path, e))?;
    }
    t.finish().map_err(|e| CliError::io(&path, e))?;

    let (mut t, path) = csv(
        out,
        "spectrum_info.csv",
        &[
            "gamma",
            "alpha",
            "n",
            "nu_nat",
            "zero_residual",
            "pos_tol",
            "n_unstable",
            "accumulates_at_minus_one",
        ],
    )?;
    t.row([
        float(config.gamma),
        float(alpha),
        config.n.to_string(),
        float(eq.nu_nat),
        float(report.zero_residual),
        float(report.pos_tol),
        report.n_unstable.to_string(),
        report.accumulates_at_minus_one.to_string(),
    ])
    .map_err(|e| CliError::io(&path, e))?;
    t.finish().map_err(|e| CliError::io(&path, e))?;

    if config.output.modes {
        let mut header = vec!["s".to_string()];
        header.extend((0..report.leading_modes.len()).map(|k| format!("mode_{k}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let (mut t, path) = csv(out, "modes.csv", &header)?;
        for (i, s) in model.grid.nodes().iter().enumerate() {
            let mut row = vec![float(*s)];
            row.extend(report.leading_modes.iter().map(|m| float(m[i])));
            t.row(row).map_err(|e| CliError::io(&path, e))?;
        }
        t.finish().map_err(|e| CliError::io(&path, e))?;
    }

    if config.output.svg {
        let mut plot = Plot::new(
            &format!("Spectrum at alpha = {alpha}, gamma = {}", config.gamma),
            "k",
            "lambda",
        );
        plot.series.push(Series {
            label: "lambda_k".into(),
            points: report
                .eigenvalues
                .iter()
                .take(40)
                .enumerate()
                .map(|(k, l)| (k as f64, *l))
                .collect(),
            markers: true,
        });
        svg(out, "spectrum.svg", &plot)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub lambda_max_trivial: f64,
    pub summary: RunSummary,
    pub final_d_hat: f64,
}

pub fn run_sweep(
    config: &ScenarioConfig,
    range: SweepRange,
    out: &Path,
    exec: Exec,
) -> Result<Vec<SweepRow>, CliError> {
    if range.min < 0.0 {
        return Err(CliError::Config(format!(
            "gamma range starts at {} and violates gamma >= 0",
            range.min
        )));
    }
    let gammas = range.values();
    let grid = config.grid();
    let opts = config.simulate_options();
    let results = exec.map(&gammas, |&gamma| -> Result<SweepRow, CliError> {
        let params = ModelParams::new(gamma, config.constitutive)?;
        let model = Model::new(grid.clone(), params);
        let record = simulate(&model, &config.initial_state(&grid), &opts)?;
        let lambda = trivial_branch_lambda_max(&grid, gamma)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        Ok(SweepRow {
            gamma,
            lambda_max_trivial: lambda,
            summary: RunSummary::from_record(&record),
            final_d_hat: *record.driving_force.last().unwrap(),
        })
    });
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    prepare(out)?;

    let (mut t, path) = csv(
        out,
        "sweep.csv",
        &[
            "gamma",
            "lambda_max_trivial",
            "converged",
            "final_time",
            "norm_F",
            "V_initial",
            "V_final",
            "mu_nat",
            "mu_at_0",
            "D_hat",
            "regime",
        ],
    )?;
    for r in &rows {
        let s = &r.summary;
        t.row([
            float(r.gamma),
            float(r.lambda_max_trivial),
            s.converged.to_string(),
            float(s.final_time),
            float(s.final_norm_f),
            float(s.v_initial),
            float(s.v_final),
            float(s.final_mu_nat),
            float(s.final_alpha),
            float(r.final_d_hat),
            s.final_regime.clone(),
        ])
        .map_err(|e| CliError::io(&path, e))?;
    }
    t.finish().map_err(|e| CliError::io(&path, e))?;

    if config.output.svg {
        let mut plot = Plot::new(
            "Long-time state against load",
            "gamma",
            "mu(0) at final time",
        );
        plot.series.push(Series {
            label: "mu(0)".into(),
            points: rows
                .iter()
                .map(|r| (r.gamma, r.summary.final_alpha))
                .collect(),
            markers: true,
        });
        svg(out, "sweep.svg", &plot)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    /// How `measured` is compared against `limit`.
    pub relation: &'static str,
}

impl InvariantCheck {
    fn at_most(name: &'static str, measured: f64, limit: f64) -> Self {
        InvariantCheck {
            name,
            passed: measured <= limit,
            measured,
            limit,
            relation: "<=",
        }
    }

    fn at_least(name: &'static str, measured: f64, limit: f64) -> Self {
        InvariantCheck {
            name,
            passed: measured >= limit,
            measured,
            limit,
            relation: ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {:<22} measured {:>12.4e} {} {:.1e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.relation,
                c.limit
            );
        }
        s
    }
}

pub const DESCENT_SLACK: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-3;
pub const FRECHET_TOL: f64 = 1e-5;
pub const FRECHET_STEP: f64 = 1e-6;
pub const KERNEL_RATIO: f64 = 3.5;
pub const TANGENT_TOL: f64 = 1e-4;

/// Second-order derivative estimate at record `k` of a nonuniform series.
fn fd_derivative(t: &[f64], v: &[f64], k: usize) -> f64 {
    let h1 = t[k] - t[k - 1];
    let h2 = t[k + 1] - t[k];
    -h2 / (h1 * (h1 + h2)) * v[k - 1]
        + (h2 - h1) / (h1 * h2) * v[k]
        + h1 / (h2 * (h1 + h2)) * v[k + 1]
}

fn kernel_residual(model: &Model, alpha: f64) -> f64 {
    let eq = equilibrium_from_alpha(model, alpha);
    let ker = theta0_solve(model, &eq);
    apply_l(model, &eq, &ker).norm(&model.grid)
}

/// Halving ratio of the kernel residual between `n` and `2n`.
fn kernel_ratio(config: &ScenarioConfig, alpha: f64) -> f64 {
    let coarse = config.model();
    let fine = Model::new(Grid::new(2 * config.n).unwrap(), coarse.params);
    let (rc, rf) = (
        kernel_residual(&coarse, alpha),
        kernel_residual(&fine, alpha),
    );
    if rc <= 1e-13 && rf <= 1e-13 {
        f64::INFINITY
    } else {
        rc / rf
    }
}

pub fn run_validate(config: &ScenarioConfig, out: &Path) -> Result<InvariantReport, CliError> {
    let model = config.model();
    let grid = &model.grid;
    let record = simulate(
        &model,
        &config.initial_state(grid),
        &config.simulate_options(),
    )?;
    let mut checks = Vec::new();

    let rise = record
        .liapunov
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    checks.push(InvariantCheck::at_most(
        "liapunov_descent",
        rise,
        DESCENT_SLACK,
    ));

    let mut identity: f64 = 0.0;
    for k in 1..record.len().saturating_sub(1) {
        let r = &record.regimes;
        if r[k - 1] != r[k] || r[k] != r[k + 1] {
            continue;
        }
        let fd = fd_derivative(&record.times, &record.liapunov, k);
        let q = record.dissipation[k];
        identity = identity.max((fd - q).abs() / (1.0 + q.abs()));
    }
    checks.push(InvariantCheck::at_most(
        "liapunov_identity",
        identity,
        IDENTITY_TOL,
    ));

    let sign = record
        .states
        .iter()
        .map(|s| model.driving_force(s) * model.eval_f(s).mu_nat)
        .fold(f64::INFINITY, f64::min);
    // normalise -0 from stick states with D < 0
    checks.push(InvariantCheck::at_least("sign_property", sign + 0.0, 0.0));

    let bound = global_bound_check(&record, &model);
    checks.push(InvariantCheck::at_least("global_bound", bound.margin, 0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut states = vec![record.last_state().unwrap().clone()];
    for _ in 0..4 {
        let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        states.push(RodState::new(
            grid.sample(|s| c[0] + c[1] * (PI * s).sin() + c[2] * s * s),
            rng.random_range(-1.5..1.5),
        ));
    }
    let mut frechet: f64 = 0.0;
    for state in &states {
        let e: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let dir = RodState::new(grid.sample(|s| e[0] * (2.0 * s).cos() + e[1] * s), e[2]);
        let fp = model.eval_f(&state.axpy(FRECHET_STEP, &dir));
        let fm = model.eval_f(&state.axpy(-FRECHET_STEP, &dir));
        let fd = fp.axpy(-1.0, &fm).scale(0.5 / FRECHET_STEP);
        let df = apply_df(&model, state, &dir);
        frechet = frechet.max(fd.axpy(-1.0, &df).norm(grid) / df.norm(grid).max(1e-300));
    }
    checks.push(InvariantCheck::at_most(
        "frechet_derivative",
        frechet,
        FRECHET_TOL,
    ));

    let mut alphas = vec![0.0];
    let final_alpha = record.last_state().unwrap().mu[0];
    if record.converged && final_alpha != 0.0 && equilibrium_from_alpha(&model, final_alpha).strict
    {
        alphas.push(final_alpha);
    }
    let ratio = alphas
        .iter()
        .map(|&a| kernel_ratio(config, a))
        .fold(f64::INFINITY, f64::min);
    checks.push(InvariantCheck::at_least(
        "kernel_residual",
        ratio,
        KERNEL_RATIO,
    ));

    let tangent = tangent_check(&model, 0.0)
        .map_err(|e| CliError::Numerical(e.to_string()))?
        .discrepancy;
    checks.push(InvariantCheck::at_most("tangent", tangent, TANGENT_TOL));

    let report = InvariantReport { checks };
    prepare(out)?;
    let (mut t, path) = csv(
        out,
        "validation.csv",
        &["check", "passed", "measured", "relation", "limit"],
    )?;
    for c in &report.checks {
        t.row([
            c.name.to_string(),
            c.passed.to_string(),
            float(c.measured),
            c.relation.to_string(),
            float(c.limit),
        ])
        .map_err(|e| CliError::io(&path, e))?;
    }
    t.finish().map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}
