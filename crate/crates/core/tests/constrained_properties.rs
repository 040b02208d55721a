use memopt_core::constrained::{
    activation_current, secondary_cubic_root, solve_linear_with_compliance, ConstraintMode,
};
use memopt_core::numerics::adaptive_simpson;
use memopt_core::trajectory::relative_error;
use memopt_core::{ChargeMemristor, SwitchingTask};
use proptest::prelude::*;

/// (b, R_i, R_f, T, fraction placing I_c between the feasibility floor and the activation level)
fn clamped_task() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (1.0f64..200.0, 1.0f64..20.0, 2.0f64..50.0, 0.5f64..10.0, 0.05f64..0.95)
}

fn build(b: f64, r_i: f64, ratio: f64, t: f64, fraction: f64) -> (ChargeMemristor, SwitchingTask, f64) {
    let r_f = r_i * ratio;
    let floor = (r_f - r_i) / (b * t);
    let ceiling = activation_current(b, r_i, r_f, t);
    let i_c = floor + fraction * (ceiling - floor);
    let task = SwitchingTask::new(0.0, t, r_i, r_f).unwrap().with_compliance(i_c).unwrap();
    (ChargeMemristor::linear(1.0, b).unwrap(), task, i_c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structure_of_clamped_solutions((b, r_i, ratio, t, fraction) in clamped_task()) {
        let (m, task, i_c) = build(b, r_i, ratio, t, fraction);
        let sol = solve_linear_with_compliance(&m, &task, 1001).unwrap();
        prop_assert_eq!(sol.mode, ConstraintMode::ClampedThenInterior);
        prop_assert!(sol.r_c > task.r_i && sol.r_c < task.r_f);
        prop_assert!(sol.t_c > task.t_i && sol.t_c < task.t_f);
        prop_assert!(sol.current_jump() < 1e-8 * i_c);
        let full = sol.sample(1001).unwrap();
        prop_assert!(full.current().iter().all(|i| i.abs() <= i_c * (1.0 + 1e-12)));
        prop_assert!(sol.phase2.as_ref().unwrap().power_spread() < 1e-6);
        prop_assert!(relative_error(sol.quadrature_heat().unwrap(), sol.q_total) < 1e-6);
        prop_assert!(secondary_cubic_root(task.r_i, task.r_f, b, i_c, t).unwrap() > task.r_f);
    }

    #[test]
    fn relaxing_the_clamp_never_costs((b, r_i, ratio, t, fraction) in clamped_task(), extra in 0.0f64..0.5) {
        let (m, task, i_c) = build(b, r_i, ratio, t, fraction);
        let tight = solve_linear_with_compliance(&m, &task, 101).unwrap();
        let loose_task = task.with_compliance(i_c * (1.0 + extra)).unwrap();
        let loose = solve_linear_with_compliance(&m, &loose_task, 101).unwrap();
        prop_assert!(loose.q_total <= tight.q_total * (1.0 + 1e-12));
    }

    /// Endpoint-fixed perturbations of the interior arc never lower its heat.
    #[test]
    fn phase2_is_locally_optimal(
        coeffs in proptest::collection::vec(-1.0f64..1.0, 1..6),
        amplitude in 1e-3f64..1e-2,
    ) {
        let (a, b) = (1.0, 100.0);
        let m = ChargeMemristor::linear(a, b).unwrap();
        let task = SwitchingTask::new(0.0, 5.0, 1.0, 100.0).unwrap().with_compliance(0.25).unwrap();
        let sol = solve_linear_with_compliance(&m, &task, 11).unwrap();
        let (rc32, rf32) = (sol.r_c.powf(1.5), task.r_f.powf(1.5));
        let span = task.t_f - sol.t_c;
        let arc_heat = 4.0 / (9.0 * b * b) * (rf32 - rc32).powi(2) / span;
        let swing = (task.r_f - sol.r_c) / b;
        let norm: f64 = coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1e-12);
        let scale = amplitude * swing / norm;
        let c1 = 2.0 / (3.0 * b) * (rf32 - rc32) / span;
        let heat = |t: f64| {
            let s = (t - sol.t_c) / span;
            let inner = rc32 * (1.0 - s) + rf32 * s;
            let mut q = (inner.powf(2.0 / 3.0) - a) / b;
            let mut dq = c1 / inner.cbrt();
            for (k, c) in coeffs.iter().enumerate() {
                let w = (k + 1) as f64 * std::f64::consts::PI;
                q += scale * c * (w * s).sin();
                dq += scale * c * w / span * (w * s).cos();
            }
            (a + b * q) * dq * dq
        };
        let q = adaptive_simpson(&heat, sol.t_c, task.t_f, 1e-14 * arc_heat);
        prop_assert!(q >= arc_heat * (1.0 - 1e-12));
    }
}

#[test]
fn inactive_clamp_returns_unconstrained() {
    let m = ChargeMemristor::linear(1.0, 100.0).unwrap();
    let level = activation_current(100.0, 1.0, 100.0, 5.0);
    for factor in [1.0, 1.5, 10.0] {
        let task = SwitchingTask::new(0.0, 5.0, 1.0, 100.0).unwrap().with_compliance(level * factor).unwrap();
        let sol = solve_linear_with_compliance(&m, &task, 11).unwrap();
        assert_eq!(sol.mode, ConstraintMode::Unconstrained);
        assert_eq!(sol.t_c, 0.0);
    }
}
