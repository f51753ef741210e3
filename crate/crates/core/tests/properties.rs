use std::f64::consts::PI;

use proptest::prelude::*;
use strutlab::dynamics::{global_bound_check, simulate, SimulateOptions};
use strutlab::equilibria::{branch_sweep_with, equilibrium_from_alpha};
use strutlab::spectral::apply_df;
use strutlab::{ConstitutiveSet, Exec, Grid, Kappa, Model, ModelParams, Rate, RodState, Threshold};

fn constitutive() -> impl Strategy<Value = ConstitutiveSet> {
    (
        prop_oneof![
            (0.2..3.0f64).prop_map(|k| Kappa::quadratic(k).unwrap()),
            (0.2..3.0f64, 0.3..2.0f64).prop_map(|(k, m)| Kappa::triple_well(k, m).unwrap()),
        ],
        (0.2..3.0f64, 2.0..4.0f64),
        (0.02..1.0f64, 0.0..1.0f64),
    )
        .prop_map(|(kappa, (c, p), (a, b))| {
            ConstitutiveSet::new(
                kappa,
                Rate::new(c, p).unwrap(),
                Threshold::new(a, b).unwrap(),
            )
        })
}

fn model() -> impl Strategy<Value = Model> {
    (0.0..6.0f64, constitutive(), 16usize..96).prop_map(|(g, set, n)| {
        Model::new(Grid::new(n).unwrap(), ModelParams::new(g, set).unwrap())
    })
}

fn state(grid: &Grid, c: [f64; 4], nat: f64) -> RodState {
    RodState::new(
        grid.sample(|s| c[0] + c[1] * (PI * s).cos() + c[2] * s * s + c[3] * (4.0 * s).sin()),
        nat,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frechet_derivative_matches_central_differences(
        m in model(),
        c in prop::array::uniform4(-2.0..2.0f64),
        e in prop::array::uniform4(-1.0..1.0f64),
        nat in -1.5..1.5f64,
        dnat in -1.0..1.0f64,
    ) {
        let x = state(&m.grid, c, nat);
        let dir = state(&m.grid, e, dnat);
        let h = 1e-6;
        let fd = m.eval_f(&x.axpy(h, &dir)).axpy(-1.0, &m.eval_f(&x.axpy(-h, &dir))).scale(0.5 / h);
        let df = apply_df(&m, &x, &dir);
        let err = fd.axpy(-1.0, &df).norm(&m.grid);
        prop_assert!(err <= 1e-5 * df.norm(&m.grid).max(1e-3), "err {err}");
    }

    #[test]
    fn driving_force_and_rate_share_sign(
        m in model(),
        c in prop::array::uniform4(-3.0..3.0f64),
        nat in -2.0..2.0f64,
    ) {
        let x = state(&m.grid, c, nat);
        prop_assert!(m.driving_force(&x) * m.eval_f(&x).mu_nat >= 0.0);
    }

    #[test]
    fn short_runs_descend_and_respect_the_global_bound(
        m in model(),
        c in prop::array::uniform4(-3.0..3.0f64),
        nat in -1.0..1.0f64,
    ) {
        let opts = SimulateOptions { t_end: 2.0, ..Default::default() };
        let rec = simulate(&m, &state(&m.grid, c, nat), &opts).unwrap();
        for w in rec.liapunov.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "V rose from {} to {}", w[0], w[1]);
        }
        prop_assert!(rec.times.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(global_bound_check(&rec, &m).holds);
    }

    #[test]
    fn equilibria_are_odd_in_alpha(
        g in 0.0..6.0f64,
        alpha in -2.0..2.0f64,
        n in 16usize..128,
    ) {
        let m = Model::new(Grid::new(n).unwrap(), ModelParams::new(g, ConstitutiveSet::default()).unwrap());
        let p = equilibrium_from_alpha(&m, alpha);
        let q = equilibrium_from_alpha(&m, -alpha);
        prop_assert_eq!(p.nu_nat, -q.nu_nat);
        prop_assert!(p.nu.iter().zip(q.nu.iter()).all(|(a, b)| *a == -*b));
        prop_assert_eq!(p.admissible, q.admissible);
    }
}

#[test]
fn parallel_and_sequential_sweeps_are_identical() {
    let m = Model::new(
        Grid::new(64).unwrap(),
        ModelParams::new(3.0, ConstitutiveSet::default()).unwrap(),
    );
    let a = branch_sweep_with(Exec::Sequential, &m, -2.0, 2.0, 41).unwrap();
    let b = branch_sweep_with(Exec::Parallel, &m, -2.0, 2.0, 41).unwrap();
    assert_eq!(a, b);
}
