use lyapcert::cert_continuous::{certify_ode, solve_r_bar, xi_bar};
use lyapcert::cert_discrete::{certify, optimal_params, solve_r, xi_delta};
use lyapcert::dynamics::{
    limit_study, make_quadratic, make_softplus_composite, run_discrete, MomentumSchedule, Objective,
};
use lyapcert::linalg::{jacobi_eigenvalues, Mat};
use lyapcert::lmi::{
    assemble_discrete_t, assemble_discrete_t_hat, build_state_space_hat, is_negative_semidefinite,
    nesterov_t_closed_form, LmiKnobs, Sym2, Sym3,
};
use lyapcert::model::{dimensionalize, nondimensionalize, NondimParams};
use lyapcert::negative::{t11_general, t11_heavy};
use lyapcert::{MethodParams, ProblemClass};
use proptest::prelude::*;

/// `(m, L, α, β)` with `β` strictly inside the certified window.
fn nesterov_case() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-2.0f64..2.0, 0.0f64..6.0, 0.01f64..1.0, -0.95f64..0.95).prop_map(|(lm, lk, a, t)| {
        let m = 10f64.powf(lm);
        let l = m * 10f64.powf(lk) * 1.0001;
        let alpha = a / l;
        let beta = t * (1.0 - m * alpha).sqrt();
        (m, l, alpha, beta)
    })
}

fn oracle_eigenvalues(t: &Mat) -> Vec<f64> {
    let n = t.rows();
    let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| t.get(i, j));
    let mut ev: Vec<f64> = dm.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn nondimensionalization_round_trips((m, l, alpha, beta) in nesterov_case()) {
        let pc = ProblemClass::new(m, l).unwrap();
        let mp = MethodParams::nesterov(alpha, beta).unwrap();
        let nd = nondimensionalize(&pc, &mp).unwrap();
        let back = dimensionalize(&pc, &nd);
        prop_assert!((back.alpha / alpha - 1.0).abs() < 1e-12);
        prop_assert!((back.beta - beta).abs() < 1e-12);
    }

    #[test]
    fn rate_is_scale_invariant((m, l, alpha, beta) in nesterov_case(), s in -3.0f64..3.0) {
        let c = 10f64.powf(s);
        let a = certify(&ProblemClass::new(m, l).unwrap(), &MethodParams::nesterov(alpha, beta).unwrap()).unwrap();
        let b = certify(&ProblemClass::new(c * m, c * l).unwrap(), &MethodParams::nesterov(alpha / c, beta).unwrap()).unwrap();
        prop_assert!((a.rho_sq - b.rho_sq).abs() < 1e-12);
        prop_assert!((b.p_hat.p11 - c * a.p_hat.p11).abs() <= 1e-10 * c * a.p_hat.max_abs());
    }

    #[test]
    fn certificates_are_valid((m, l, alpha, beta) in nesterov_case()) {
        let pc = ProblemClass::new(m, l).unwrap();
        let cert = certify(&pc, &MethodParams::nesterov(alpha, beta).unwrap()).unwrap();
        prop_assert!(cert.valid, "{:?}", cert.t_hat_eigenvalues);
        prop_assert!((0.0..1.0).contains(&cert.rho_sq));
        let scale = cert.t_hat.max_abs().max(1.0);
        prop_assert!(cert.t_hat_eigenvalues.iter().all(|&e| e <= 1e-9 * scale));
        prop_assert!(cert.r > 0.0);
    }

    #[test]
    fn root_solves_the_cubic(t in 0.0f64..1.0, delta in 0.01f64..0.99) {
        let lo = (1.0 - (1.0 - delta * delta).sqrt()) / delta;
        let hi = (1.0 + (1.0 - delta * delta).sqrt()) / delta;
        let b = lo + t * (hi - lo);
        let r = solve_r(b, delta).unwrap();
        let scale = 1.0 + b.abs().powi(3);
        prop_assert!(xi_delta(r, b, delta).abs() <= 1e-10 * scale);
    }

    #[test]
    fn limit_root_solves_the_cubic(b in -50.0f64..50.0) {
        let r = solve_r_bar(b).unwrap();
        prop_assert!(xi_bar(r, b).abs() <= 1e-10 * (1.0 + b.abs().powi(3)));
        prop_assert!((solve_r_bar(-b).unwrap() + r).abs() <= 1e-10 * (1.0 + r.abs()));
    }

    #[test]
    fn generic_recipe_matches_closed_form((m, l, alpha, beta) in nesterov_case(), u in 0.0f64..1.0, p in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)) {
        let pc = ProblemClass::new(m, l).unwrap();
        let mp = MethodParams::nesterov(alpha, beta).unwrap();
        let nd = nondimensionalize(&pc, &mp).unwrap();
        let ph = Sym2::new(m * p.0, m * p.1, m * p.2);
        let generic = assemble_discrete_t_hat(&build_state_space_hat(&nd, beta, alpha), &ph, &LmiKnobs::discrete(u), &pc);
        let closed = nesterov_t_closed_form(&nd, alpha, &ph, u, &pc);
        let scale = generic.max_abs().max(closed.max_abs()).max(1.0);
        prop_assert!(generic.max_abs_diff(&closed) <= 1e-11 * scale);
    }

    #[test]
    fn kronecker_expansion_keeps_eigenvalues((m, l, alpha, beta) in nesterov_case(), d in 1usize..4) {
        let pc = ProblemClass::new(m, l).unwrap();
        let cert = certify(&pc, &MethodParams::nesterov(alpha, beta).unwrap()).unwrap();
        let ss = build_state_space_hat(&cert.nd, beta, alpha);
        let p_full = cert.p_hat.to_mat().kron(&Mat::identity(d));
        let t_full = assemble_discrete_t(&ss.expand(d), &p_full, &LmiKnobs::discrete(cert.rho_sq), &pc);
        let ev = oracle_eigenvalues(&t_full);
        let small = cert.t_hat.eigenvalues();
        let scale = cert.t_hat.max_abs().max(1.0);
        for (i, e) in ev.iter().enumerate() {
            prop_assert!((e - small[i / d]).abs() <= 1e-9 * scale, "{ev:?} vs {small:?}");
        }
    }

    #[test]
    fn jacobi_agrees_with_reference(entries in prop::collection::vec(-10.0f64..10.0, 15)) {
        let a = Mat::from_fn(5, 5, |i, j| entries[i.max(j) * (i.max(j) + 1) / 2 + i.min(j)]);
        let mut ours = jacobi_eigenvalues(&a, 100);
        ours.sort_by(f64::total_cmp);
        let reference = oracle_eigenvalues(&a);
        for (x, y) in ours.iter().zip(&reference) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + a.max_abs()));
        }
    }

    #[test]
    fn sym3_eigenvalues_match_reference(t in prop::array::uniform6(-5.0f64..5.0)) {
        let s = Sym3 { t11: t[0], t12: t[1], t13: t[2], t22: t[3], t23: t[4], t33: t[5] };
        let ours = s.eigenvalues();
        let reference = oracle_eigenvalues(&s.to_mat());
        for (x, y) in ours.iter().zip(&reference) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + s.max_abs()));
        }
    }

    #[test]
    fn lyapunov_is_monotone_on_quadratics((m, l, alpha, beta) in nesterov_case(), seed in 0u64..1000) {
        prop_assume!(l / m < 1e4);
        let pc = ProblemClass::new(m, l).unwrap();
        let mp = MethodParams::nesterov(alpha, beta).unwrap();
        let cert = certify(&pc, &mp).unwrap();
        let obj = make_quadratic(m, l, 4, seed).unwrap();
        let x0: Vec<f64> = (0..4).map(|i| 1.0 - 0.3 * i as f64).collect();
        let xm1: Vec<f64> = x0.iter().map(|v| 0.9 * v).collect();
        let traj = run_discrete(&obj, &mp, &x0, &xm1, 200, Some(&cert)).unwrap();
        prop_assert!(traj.diverged_at.is_none());
        prop_assert!(traj.max_monotonicity_violation().unwrap() <= 1e-9);
        prop_assert!(traj.max_bound_ratio().unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn softplus_objective_lies_in_the_class(lm in -1.0f64..1.0, lk in 0.1f64..3.0, x in prop::collection::vec(-5.0f64..5.0, 3), y in prop::collection::vec(-5.0f64..5.0, 3)) {
        let m = 10f64.powf(lm);
        let l = m * 10f64.powf(lk);
        let obj = make_softplus_composite(m, l, 3).unwrap();
        let (mut gx, mut gy) = (vec![0.0; 3], vec![0.0; 3]);
        obj.gradient(&x, &mut gx);
        obj.gradient(&y, &mut gy);
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let dist2: f64 = diff.iter().map(|v| v * v).sum();
        let lin: f64 = gx.iter().zip(&diff).map(|(g, d)| g * d).sum();
        let gap = obj.value(&x) - obj.value(&y);
        // f(x) − f(y) − ⟨∇f(y), x − y⟩ ∈ [m/2, L/2]·|x − y|²
        let lin_y: f64 = gy.iter().zip(&diff).map(|(g, d)| g * d).sum();
        let bregman = gap - lin_y;
        let tol = 1e-9 * (1.0 + obj.value(&x).abs() + obj.value(&y).abs());
        prop_assert!(bregman >= 0.5 * m * dist2 - tol);
        prop_assert!(bregman <= 0.5 * l * dist2 + tol);
        prop_assert!(lin - lin_y >= m * dist2 - tol);
        prop_assert!(lin - lin_y <= l * dist2 + tol);
    }

    #[test]
    fn heavy_ball_assembly_exceeds_printed_t11(kappa in 1.5f64..1e6, c in 0.05f64..1.0, p in (0.0f64..10.0, -5.0f64..5.0, 0.0f64..10.0), u in 0.0f64..1.0) {
        let pc = ProblemClass::new(1.0, kappa).unwrap();
        let delta = c / kappa.sqrt();
        let alpha = delta * delta;
        let beta = 1.0 - 2.0 * delta;
        let ph = Sym2::new(p.0, p.1, p.2);
        let nd = NondimParams { delta, b: 2.0, kappa };
        let t = assemble_discrete_t_hat(&build_state_space_hat(&nd, 0.0, alpha), &ph, &LmiKnobs::discrete(u), &pc);
        let printed = t11_heavy(&ph, u, delta, beta, &pc);
        let gap = 0.5 * delta * delta * beta * beta;
        prop_assert!((t.t11 - printed - gap).abs() <= 1e-9 * (1.0 + t.t11.abs()));
        // With γ = β the printed form reproduces the assembly.
        let tn = assemble_discrete_t_hat(&build_state_space_hat(&nd, beta, alpha), &ph, &LmiKnobs::discrete(u), &pc);
        prop_assert!((tn.t11 - t11_general(&ph, u, delta, beta, beta, &pc)).abs() <= 1e-9 * (1.0 + tn.t11.abs()));
    }

    #[test]
    fn limit_curve_certifies_every_friction(b in 0.0f64..20.0, lm in -2.0f64..2.0) {
        let m = 10f64.powf(lm);
        let cert = certify_ode(m, b).unwrap();
        prop_assert!(cert.valid);
        prop_assert!(cert.r_bar >= 0.0);
        prop_assert!((cert.lambda - m.sqrt() * cert.r_bar).abs() <= 1e-12 * m.sqrt() * (1.0 + cert.r_bar));
    }
}

#[test]
fn optimal_method_at_many_condition_numbers() {
    for e in 0..=8 {
        let l = 10f64.powi(e) * 1.5;
        let pc = ProblemClass::new(1.0, l).unwrap();
        let cert = certify(&pc, &optimal_params(&pc)).unwrap();
        assert!(cert.valid);
        assert!((cert.rho_sq - (1.0 - (1.0 / l).sqrt())).abs() < 1e-12);
    }
}

#[test]
fn limit_slope_is_one_off_the_double_root() {
    let hs = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4];
    for b in [1.0, 3.0] {
        let rep = limit_study(b, 1.0, &hs, MomentumSchedule::FixedFriction).unwrap();
        let k = rep.fitted_exponent.unwrap();
        assert!((k - 1.0).abs() < 0.05, "b = {b}: slope {k}");
        assert!(rep.rows.iter().all(|r| r.p_dev <= 3.0 * r.h));
    }
}

#[test]
fn monotone_obstruction_for_heavy_ball() {
    let mut prev = f64::NEG_INFINITY;
    for kappa in [1e2, 1e3, 1e4] {
        let rep = lyapcert::negative::infeasibility_scan(kappa, 1.0, 4000, 42, false).unwrap();
        assert!(!rep.feasible);
        assert!(rep.best_lambda_max >= prev);
        prev = rep.best_lambda_max;
    }
    assert!(is_negative_semidefinite(
        &lyapcert::negative::infeasibility_scan(1e4, 1.0, 100, 1, true).unwrap().witness.t_hat,
        1e-9
    ));
}
