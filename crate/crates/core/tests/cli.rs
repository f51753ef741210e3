use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn strutlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strutlab"))
        .args(args)
        .output()
        .expect("spawn strutlab")
}

fn scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.ini");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run(dir: &Path, cfg: &str, sub: &str, extra: &[&str]) -> Output {
    let out = dir.join("out");
    let mut args = vec![sub, "--config", cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    strutlab(&args)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().to_string())
        .collect()
}

fn floats(csv: &str, name: &str) -> Vec<f64> {
    column(csv, name)
        .iter()
        .map(|v| v.parse().unwrap())
        .collect()
}

fn summary_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap()
        .to_string()
}

#[test]
fn zero_initial_data_is_converged_at_start() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "[model]\ngamma = 3\n[initial]\nmu = zeros\n");
    let o = run(dir.path(), &cfg, "simulate", &[]);
    assert_eq!(o.status.code(), Some(0));
    let s = read(dir.path(), "summary.txt");
    assert_eq!(summary_value(&s, "converged"), "true");
    assert_eq!(summary_value(&s, "final_time").parse::<f64>().unwrap(), 0.0);
    // gamma times the quadrature weight sum
    assert!((summary_value(&s, "V_final").parse::<f64>().unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(read(dir.path(), "trajectory.csv").lines().count(), 2);
}

#[test]
fn buckling_run_converges_and_outputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "[model]\ngamma = 4\ntheta_a = 2.5\n[initial]\nmu = cosine\namplitude = 0.01\n[output]\nsnapshot_stride = 100\n",
    );
    let o = run(dir.path(), &cfg, "simulate", &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = read(dir.path(), "summary.txt");
    assert_eq!(summary_value(&s, "converged"), "true");
    let traj = read(dir.path(), "trajectory.csv");
    assert!(!traj.contains('\r'));
    let norm_f = floats(&traj, "norm_F");
    assert!(*norm_f.last().unwrap() < 1e-10);
    assert_eq!(
        summary_value(&s, "final_norm_F").parse::<f64>().unwrap(),
        *norm_f.last().unwrap()
    );
    let v = floats(&traj, "V");
    assert_eq!(summary_value(&s, "V_initial").parse::<f64>().unwrap(), v[0]);
    assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-9));

    let snaps = read(dir.path(), "snapshots.csv");
    let t = floats(&snaps, "t");
    let mu = floats(&snaps, "mu");
    let t_last = *t.last().unwrap();
    let final_mu0 = mu[t.iter().position(|&x| x == t_last).unwrap()];
    assert_eq!(
        summary_value(&s, "final_mu_at_0").parse::<f64>().unwrap(),
        final_mu0
    );
    // buckled: mu(0) well away from the straight rod
    assert!(final_mu0.abs() > 1.0);
    for name in ["shape.svg", "liapunov.svg"] {
        assert!(read(dir.path(), name).starts_with("<svg"));
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "[model]\ngamma = 2\n[grid]\nn = 64\n[time]\nt_end = 5\n",
    );
    run(dir.path(), &cfg, "simulate", &[]);
    let first: Vec<String> = [
        "trajectory.csv",
        "snapshots.csv",
        "shape.svg",
        "summary.txt",
    ]
    .iter()
    .map(|n| read(dir.path(), n))
    .collect();
    run(dir.path(), &cfg, "simulate", &[]);
    for (n, a) in [
        "trajectory.csv",
        "snapshots.csv",
        "shape.svg",
        "summary.txt",
    ]
    .iter()
    .zip(first)
    {
        assert_eq!(read(dir.path(), n), a, "{n}");
    }
}

#[test]
fn small_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "[grid]\nn = 4\n");
    let o = run(dir.path(), &cfg, "simulate", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n >= 8"));
}

#[test]
fn missing_config_and_bad_threshold_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.ini");
    let o = run(dir.path(), missing.to_str().unwrap(), "validate", &[]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = scenario(dir.path(), "[model]\ntheta_a = 0\n");
    assert_eq!(
        run(dir.path(), &cfg, "validate", &[]).status.code(),
        Some(2)
    );
}

#[test]
fn unknown_subcommand_or_flag_is_usage_error() {
    assert_eq!(strutlab(&["explode"]).status.code(), Some(2));
    assert_eq!(
        strutlab(&["simulate", "--config", "x", "--alpha", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn equilibria_linear_branch_and_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "[model]\ngamma = 0\nk = 1\ntheta_a = 0.1\n");
    let o = run(
        dir.path(),
        &cfg,
        "equilibria",
        &["--alpha-range", "-0.5,0.5,11"],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = read(dir.path(), "branch.csv");
    assert_eq!(
        csv.lines().next().unwrap(),
        "alpha,nu_nat,phi_at_1,D_hat,theta,admissible,kind"
    );
    let kind = column(&csv, "kind");
    let alpha = floats(&csv, "alpha");
    let nu_nat = floats(&csv, "nu_nat");
    for k in 0..alpha.len() {
        if kind[k] == "point" {
            assert_eq!(nu_nat[k], alpha[k]);
        }
    }
    let boundaries: Vec<f64> = (0..alpha.len())
        .filter(|&k| kind[k] == "boundary")
        .map(|k| alpha[k])
        .collect();
    assert_eq!(boundaries.len(), 2);
    assert!((boundaries[0] + 0.1).abs() < 1e-8 && (boundaries[1] - 0.1).abs() < 1e-8);
    assert!(read(dir.path(), "bifurcation.svg").contains("inadmissible"));
}

#[test]
fn equilibria_small_range_all_admissible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "[model]\ngamma = 1\n");
    run(
        dir.path(),
        &cfg,
        "equilibria",
        &["--alpha-range", "-0.05,0.05,5"],
    );
    let csv = read(dir.path(), "branch.csv");
    assert!(column(&csv, "admissible").iter().all(|a| a == "strict"));
}

#[test]
fn spectrum_trivial_branch_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "[model]\ngamma = 1\n[grid]\nn = 400\n[output]\nformats = csv, modes\n",
    );
    let o = run(dir.path(), &cfg, "spectrum", &["--alpha", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let lambda = floats(&read(dir.path(), "spectrum.csv"), "lambda");
    for (k, l) in lambda.iter().take(5).enumerate() {
        let exact = 4.0 / (((2 * k + 1) as f64).powi(2) * PI * PI) - 1.0;
        assert!((l - exact).abs() < 1e-4, "k={k}: {l} vs {exact}");
    }
    assert!(lambda.windows(2).all(|w| w[0] >= w[1]));
    let info = read(dir.path(), "spectrum_info.csv");
    assert_eq!(column(&info, "n_unstable"), vec!["0"]);
    let modes = read(dir.path(), "modes.csv");
    assert_eq!(modes.lines().count(), 402);
    assert!(!dir.path().join("out/spectrum.svg").exists());
}

#[test]
fn spectrum_above_buckling_load_has_one_unstable_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "[model]\ngamma = 4\n[grid]\nn = 200\n[spectrum]\nalpha = 0\n",
    );
    assert_eq!(
        run(dir.path(), &cfg, "spectrum", &[]).status.code(),
        Some(0)
    );
    assert_eq!(
        column(&read(dir.path(), "spectrum_info.csv"), "n_unstable"),
        vec!["1"]
    );
}

#[test]
fn spectrum_inadmissible_alpha_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "[model]\ngamma = 0\ntheta_a = 0.1\n");
    let o = run(dir.path(), &cfg, "spectrum", &["--alpha", "-0.5"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn sweep_rows_in_gamma_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "[model]\ntheta_a = 2.5\n[grid]\nn = 32\n[initial]\namplitude = 0.01\n[time]\nt_end = 30\n",
    );
    let o = run(dir.path(), &cfg, "sweep", &["--gamma-range", "0,4,5"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = read(dir.path(), "sweep.csv");
    assert_eq!(floats(&csv, "gamma"), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    let lam = floats(&csv, "lambda_max_trivial");
    assert!(lam[2] < 0.0 && lam[3] > 0.0);
    let seq_dir = tempfile::tempdir().unwrap();
    let cfg2 = scenario(seq_dir.path(), &std::fs::read_to_string(&cfg).unwrap());
    run(
        seq_dir.path(),
        &cfg2,
        "sweep",
        &["--gamma-range", "0,4,5", "--sequential"],
    );
    assert_eq!(read(seq_dir.path(), "sweep.csv"), csv);
}

#[test]
fn sweep_rejects_negative_load() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "");
    let o = run(dir.path(), &cfg, "sweep", &["--gamma-range", "-1,1,3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_default_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "");
    let o = run(dir.path(), &cfg, "validate", &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = read(dir.path(), "validation.csv");
    let names = column(&csv, "check");
    for n in [
        "liapunov_descent",
        "liapunov_identity",
        "sign_property",
        "global_bound",
        "frechet_derivative",
        "kernel_residual",
        "tangent",
    ] {
        assert!(names.iter().any(|x| x == n), "{n}");
    }
    assert!(column(&csv, "passed").iter().all(|p| p == "true"));
}

#[test]
fn validate_failure_names_the_check_and_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    // a 1e-2 tolerance with long steps breaks the energy identity
    let cfg = scenario(
        dir.path(),
        "[model]\ngamma = 4\ntheta_a = 2.5\n[initial]\namplitude = 1\n[time]\nrel_tol = 1e-2\nabs_tol = 1e-2\ndt_max = 0.5\n",
    );
    let o = run(dir.path(), &cfg, "validate", &[]);
    assert_eq!(o.status.code(), Some(5));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL liapunov_identity"), "{err}");
    assert!(
        err.contains("validation failed: liapunov_identity"),
        "{err}"
    );
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "ini") {
            strutlab::cli::ScenarioConfig::load(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 2);
}
