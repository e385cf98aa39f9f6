use glacier_dyn::equilibria::{
    count_classification, find_equilibria, find_equilibria_default, CriticalPoint, EquilibriumCount,
};
use glacier_dyn::io::{fmt_f64, parse_trajectory_csv, write_trajectory_csv};
use glacier_dyn::model::{lambda0, nullcline_f, nullcline_g, vector_field, vector_field_full, Regime};
use glacier_dyn::oracle::{fd_jacobian, FdConfig};
use glacier_dyn::sigmoid::{sigmoid_eval, SigmoidFamily, SigmoidResponse};
use glacier_dyn::simulator::{integrate, integrate_with, SimModel, SimOptions, Termination, Trajectory, LAMBDA_FLOOR};
use glacier_dyn::stability::{classify, hopf_analysis, jacobian, mu_thresholds, ClassKind};
use glacier_dyn::verify::{draw_params, is_hopf_admissible, rng};
use glacier_dyn::{ModelParams, State};
use proptest::prelude::*;

fn richardson_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

fn family() -> impl Strategy<Value = SigmoidFamily> {
    prop::sample::select(SigmoidFamily::ALL.to_vec())
}

fn hopf_point(seed: u64) -> Option<(ModelParams, CriticalPoint)> {
    let mut r = rng(seed);
    for _ in 0..400 {
        let p = draw_params(&mut r);
        if let Some(cp) = find_equilibria_default(&p).ok()?.into_iter().find(is_hopf_admissible) {
            return Some((p, cp));
        }
    }
    None
}

fn any_equilibrium(seed: u64) -> Option<(ModelParams, CriticalPoint)> {
    let mut r = rng(seed);
    let p = draw_params(&mut r);
    let cp = find_equilibria_default(&p).ok()?.into_iter().rfind(|c| c.lambda_c > 1e-3)?;
    Some((p, cp))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sigmoid_is_bounded_and_monotone(fam in family(), x in -50.0f64..50.0, dx in 1e-6f64..1.0) {
        let a = sigmoid_eval(fam, x, 0).unwrap();
        let b = sigmoid_eval(fam, x + dx, 0).unwrap();
        prop_assert!(a.abs() <= 1.0 && b.abs() <= 1.0);
        prop_assert!(b >= a);
        prop_assert_eq!(sigmoid_eval(fam, -x, 0).unwrap(), -a);
    }

    #[test]
    fn sigmoid_derivatives_match_differences(fam in family(), x in -50.0f64..50.0, k in 0u8..3) {
        // stencil must stay clear of the ramp's kinks
        prop_assume!(fam.is_smooth() || (x.abs() - 1.0).abs() > 1e-3);
        let exact = sigmoid_eval(fam, x, k + 1).unwrap();
        let fd = richardson_diff(|t| sigmoid_eval(fam, t, k).unwrap(), x, 1e-4);
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-4), "{fam:?} x={x} k={k}: {fd} vs {exact}");
    }

    #[test]
    fn response_derivatives_match_differences(
        fam in prop::sample::select(vec![SigmoidFamily::Tanh, SigmoidFamily::Logistic, SigmoidFamily::Erf]),
        lm in 0.0f64..1.0, lp in 0.0f64..1.0, center in 0.5f64..2.0, width in 0.005f64..0.5, u in -4.0f64..4.0, k in 1u8..4,
    ) {
        let r = SigmoidResponse::new(fam, lm, lp, center, width);
        let th = center + u * width;
        let exact = r.eval(th, k).unwrap();
        let h = 1e-3 * width;
        let fd = richardson_diff(|t| r.eval(t, k - 1).unwrap(), th, h);
        let scale = exact.abs().max(1e-3 * (lp - lm).abs() / width.powi(i32::from(k))).max(1e-12);
        prop_assert!((fd - exact).abs() <= 1e-5 * scale, "{fd} vs {exact}");
        let v = r.value(th);
        prop_assert!(v >= lm.min(lp) && v <= lm.max(lp));
    }

    #[test]
    fn response_is_monotone_in_the_right_direction(lm in 0.0f64..1.0, lp in 0.0f64..1.0, a in 0.0f64..3.0, d in 0.0f64..1.0) {
        let r = SigmoidResponse::new(SigmoidFamily::Tanh, lm, lp, 1.4, 0.02);
        let (va, vb) = (r.value(a), r.value(a + d));
        if lp >= lm { prop_assert!(vb >= va); } else { prop_assert!(vb <= va); }
        prop_assert!((r.value(1.4) - 0.5 * (lm + lp)).abs() <= 1e-15);
    }

    #[test]
    fn nullcline_derivatives_match_differences(seed in any::<u64>(), u in -3.0f64..3.0, k in 1u8..4) {
        let p = draw_params(&mut rng(seed));
        let th = p.accum.center + u * p.accum.steepness;
        let h = 1e-3 * p.accum.steepness.min(p.albedo.steepness);
        for curve in [nullcline_f, nullcline_g] {
            let exact = curve(&p, th, k).unwrap();
            let fd = richardson_diff(|t| curve(&p, t, k - 1).unwrap(), th, h);
            let scale = exact.abs().max(1e-3 * curve(&p, th, 0).unwrap().abs()).max(1e-9);
            prop_assert!((fd - exact).abs() <= 1e-5 * scale, "k={k}: {fd} vs {exact}");
        }
    }

    #[test]
    fn field_vanishes_on_its_nullclines(seed in any::<u64>(), th in 0.8f64..2.0, mu in 0.1f64..5.0) {
        let p = draw_params(&mut rng(seed));
        let f = nullcline_f(&p, th, 0).unwrap();
        if f > 0.0 {
            prop_assert!(vector_field(&p, mu, State::new(th, f)).unwrap().0.abs() <= 1e-12);
        }
        let g = nullcline_g(&p, th, 0).unwrap();
        prop_assert!(vector_field(&p, mu, State::new(th, g)).unwrap().1.abs() <= 1e-12);
    }

    /// With ε = 0 the full accumulation rate differs from the simplified one
    /// only through the remainder of λ₀ ≈ 1 − 4λ, bounded by 5(2λ)³/λ.
    #[test]
    fn full_field_expansion_remainder(seed in any::<u64>(), th in 0.8f64..2.0, lambda in 1e-6f64..0.05) {
        let mut p = draw_params(&mut rng(seed));
        p.epsilon = 0.0;
        let s = State::new(th, lambda);
        let (fs, gs) = vector_field(&p, 1.0, s).unwrap();
        let (ff, gf, regime) = vector_field_full(&p, 1.0, s).unwrap();
        prop_assert_eq!(regime, Regime::Accumulating);
        prop_assert_eq!(fs, ff);
        let xi = p.accum.value(th);
        let bound = lambda.sqrt() * (1.0 + xi) * 5.0 * (2.0 * lambda).powi(3) / lambda;
        prop_assert!((gf - gs).abs() <= bound, "{} > {bound}", (gf - gs).abs());
        let rem = lambda0(lambda, 0.0).unwrap() - (1.0 - 4.0 * lambda);
        prop_assert!(rem.abs() <= 5.0 * (2.0 * lambda).powi(3) / lambda);
    }

    #[test]
    fn saturated_branch_scale_is_bounded(xi in 0.0f64..=1.0) {
        let big = xi * (1.0 + xi) / ((2.0 + xi) * (2.0 + xi));
        prop_assert!(big <= 2.0 / 9.0 + 1e-15);
    }

    #[test]
    fn csv_floats_round_trip(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn equilibria_stable_under_grid_refinement(seed in any::<u64>()) {
        let p = draw_params(&mut rng(seed));
        let coarse = find_equilibria(&p, (0.05, 3.0), 10_000).unwrap();
        let fine = find_equilibria(&p, (0.05, 3.0), 20_000).unwrap();
        prop_assume!(coarse.iter().chain(&fine).all(|c| !c.tangency));
        prop_assert_eq!(coarse.len(), fine.len());
        for (a, b) in coarse.iter().zip(&fine) {
            prop_assert!((a.theta_c - b.theta_c).abs() <= 1e-10);
        }
    }

    #[test]
    fn count_classification_matches_roots(seed in any::<u64>()) {
        let p = draw_params(&mut rng(seed));
        let n = find_equilibria_default(&p).unwrap().len();
        match count_classification(&p) {
            EquilibriumCount::One => prop_assert_eq!(n, 1),
            EquilibriumCount::AtLeastThree => prop_assert!(n >= 3),
            EquilibriumCount::Five => prop_assert_eq!(n, 5),
            EquilibriumCount::Degenerate => {}
        }
    }

    #[test]
    fn determinant_identity(seed in any::<u64>(), mu in 0.1f64..5.0) {
        let Some((p, cp)) = any_equilibrium(seed) else { return Ok(()) };
        let j = jacobian(&cp, mu, p.alpha2, p.gamma).unwrap();
        let expect = mu * p.alpha2 * p.gamma * cp.rho() * (cp.g1 - cp.f1);
        let scale = (mu * p.alpha2 * p.gamma * cp.rho() * (cp.g1.abs() + cp.f1.abs())).max(1e-300);
        prop_assert!((j.det() - expect).abs() <= 1e-12 * scale);
    }

    #[test]
    fn eigenvalues_match_fd_jacobian(seed in any::<u64>(), mu in 0.1f64..5.0) {
        let Some((p, cp)) = any_equilibrium(seed) else { return Ok(()) };
        let cfg = glacier_dyn::verify::fd_config_for(&p);
        let a = jacobian(&cp, mu, p.alpha2, p.gamma).unwrap().eigenvalues();
        let b = fd_jacobian(&p, mu, cp.state(), &cfg).unwrap().eigenvalues();
        let scale = a[0].norm().max(a[1].norm());
        // near a node/focus switch the eigenvalues are √-sensitive to the entries
        let j = jacobian(&cp, mu, p.alpha2, p.gamma).unwrap();
        prop_assume!(j.discriminant().abs() > 1e-6 * scale * scale);
        for k in 0..2 {
            prop_assert!((a[k] - b[k]).norm() <= 1e-7 * scale, "{:?} vs {:?}", a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hopf_point_on_imaginary_axis(seed in any::<u64>()) {
        let Some((p, cp)) = hopf_point(seed) else { return Ok(()) };
        let h = hopf_analysis(&cp, p.alpha2, p.gamma).unwrap();
        let ev = jacobian(&cp, h.mu0, p.alpha2, p.gamma).unwrap().eigenvalues();
        prop_assert!(ev[0].re.abs() <= 1e-12 * ev[0].im.abs());
        prop_assert!((ev[0].im / h.omega0 - 1.0).abs() <= 1e-12);
        let d = 1e-5 * h.mu0;
        let re = |mu: f64| 0.5 * jacobian(&cp, mu, p.alpha2, p.gamma).unwrap().trace();
        let speed = (re(h.mu0 + d) - re(h.mu0 - d)) / (2.0 * d);
        prop_assert!((speed / (0.5 * p.alpha2 * p.gamma * cp.f1) - 1.0).abs() <= 1e-6);
        prop_assert_eq!(classify(&cp, h.mu0, p.alpha2, p.gamma).kind, ClassKind::HopfCenter);
    }

    #[test]
    fn discriminant_vanishes_at_node_focus_thresholds(seed in any::<u64>()) {
        let Some((p, cp)) = any_equilibrium(seed) else { return Ok(()) };
        let th = mu_thresholds(&cp, p.alpha2, p.gamma).unwrap();
        for mu in [th.mu1, th.mu2].into_iter().flatten() {
            let j = jacobian(&cp, mu, p.alpha2, p.gamma).unwrap();
            prop_assert!(j.discriminant().abs() <= 1e-12 * (j.trace().powi(2) + 4.0 * j.det().abs()), "{}", j.discriminant());
        }
    }

    #[test]
    fn fd_error_shrinks_fourfold_when_step_halves(seed in any::<u64>()) {
        let Some((p, cp)) = any_equilibrium(seed) else { return Ok(()) };
        let width = p.albedo.steepness.min(p.accum.steepness);
        let exact = jacobian(&cp, 1.5, p.alpha2, p.gamma).unwrap();
        let err = |h: f64| {
            let fd = fd_jacobian(&p, 1.5, cp.state(), &FdConfig { base_step: h, richardson_levels: 1, hybrid: false }).unwrap();
            (fd.a21 - exact.a21).abs() + (fd.a11 - exact.a11).abs() + (fd.a22 - exact.a22).abs()
        };
        let h = 0.1 * width;
        let (e1, e2) = (err(h), err(0.5 * h));
        // skip draws already at the rounding floor
        prop_assume!(e2 > 1e-9);
        prop_assert!(e1 / e2 >= 3.5, "{e1} / {e2}");
    }
}

/// Random start in the simplified domain drawn from a seed.
fn simplified_start(seed: u64) -> State {
    use rand::Rng;
    let mut r = rng(seed ^ 0x5eed);
    State::new(r.gen_range(0.9..1.8), r.gen_range(1e-6..=0.25))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn simplified_flow_keeps_lambda_in_domain(seed in any::<u64>(), mu in 0.2f64..4.0) {
        let p = draw_params(&mut rng(seed));
        let s0 = simplified_start(seed);
        let tr = integrate(&p, mu, s0, 60.0, 1e-9, 1e-11, SimModel::Simplified).unwrap();
        prop_assert!(tr.states.iter().all(|s| s.lambda > LAMBDA_FLOOR && s.lambda <= 0.25 + 1e-9));
        prop_assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn regime_switches_sit_on_the_boundary(seed in any::<u64>(), eps in -0.1f64..0.12, dth in -0.1f64..0.1, dl in -0.05f64..0.1) {
        let mut p = ModelParams::hopf_demo();
        p.epsilon = eps;
        let s0 = State::new(1.43 + dth, (0.07 + dl).max(1e-3));
        let mu = 1.0 + (seed % 1000) as f64 / 500.0;
        let tr = integrate(&p, mu, s0, 60.0, 1e-9, 1e-11, SimModel::Full).unwrap();
        prop_assert_eq!(tr.regimes.len(), tr.states.len());
        for i in 1..tr.len() {
            let (a, b) = (tr.regimes[i - 1], tr.regimes[i]);
            if a == b { continue; }
            let s = tr.states[i];
            let v = if a == Regime::Nucleation || b == Regime::Nucleation { s.lambda + 0.5 * eps } else { lambda0(s.lambda, eps).unwrap() };
            prop_assert!(v.abs() <= 1e-8, "{a:?}->{b:?}: {v}");
        }
    }

    #[test]
    fn trajectory_csv_round_trips(seed in any::<u64>()) {
        let p = draw_params(&mut rng(seed));
        let tr = integrate(&p, 1.5, simplified_start(seed), 3.0, 1e-9, 1e-11, SimModel::Simplified).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &tr, None).unwrap();
        let back: Trajectory = parse_trajectory_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back.times, tr.times);
        prop_assert_eq!(back.states, tr.states);
    }
}

/// Small accumulation ratio keeps λ near 1e-3, where the two mass balances
/// agree to O(λ^2.5).
fn small_xi() -> ModelParams {
    let mut p = ModelParams::table1();
    p.accum = SigmoidResponse::new(SigmoidFamily::Tanh, 0.004, 0.008, 1.43, 0.05);
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn energy_free_limit_tracks_simplified(dth in -0.1f64..0.1, l0 in 2e-4f64..3e-3, mu in 0.5f64..3.0) {
        let mut p = small_xi();
        p.epsilon = 1e-8;
        let cp = find_equilibria_default(&p).unwrap()[0];
        let s0 = State::new(cp.theta_c + dth, l0);
        let opts = SimOptions { sample_dt: Some(0.25), ..SimOptions::default() };
        let a = integrate_with(&p, mu, s0, 50.0, &opts).unwrap();
        let b = integrate_with(&p, mu, s0, 50.0, &SimOptions { model: SimModel::Full, ..opts }).unwrap();
        prop_assert_eq!(a.len(), b.len());
        let d = a.states.iter().zip(&b.states).map(|(x, y)| x.dist(y)).fold(0.0, f64::max);
        prop_assert!(d <= 1e-4, "{d}");
    }

    #[test]
    fn converged_tail_is_stationary(seed in any::<u64>()) {
        let Some((p, cp)) = hopf_point(seed) else { return Ok(()) };
        let mu0 = hopf_analysis(&cp, p.alpha2, p.gamma).unwrap().mu0;
        let s0 = State::new(cp.theta_c + 1e-3, cp.lambda_c);
        let tr = integrate(&p, 0.5 * mu0, s0, 400.0, 1e-11, 1e-13, SimModel::Simplified).unwrap();
        prop_assert_eq!(tr.terminated, Termination::TimeLimit);
        let (_, end) = tr.last().unwrap();
        prop_assume!(end.dist(&cp.state()) < 1e-9);
        let (f, g) = vector_field(&p, 0.5 * mu0, end).unwrap();
        prop_assert!(f.hypot(g) <= 1e-8, "{}", f.hypot(g));
    }
}

/// Adaptive runs: global error against step count falls at least like N^-4.
#[test]
fn adaptive_integrator_order() {
    let p = ModelParams::hopf_demo();
    let s0 = State::new(1.44, 0.06);
    let window = 5.0;
    let reference = integrate(&p, 1.7, s0, window, 1e-14, 1e-14, SimModel::Simplified).unwrap();
    let (_, exact) = reference.last().unwrap();
    let mut pts = Vec::new();
    for tol in [1e-4, 1e-5, 1e-6, 1e-7, 1e-8] {
        let tr = integrate(&p, 1.7, s0, window, tol, (tol * 1e-2).max(1e-14), SimModel::Simplified).unwrap();
        let (_, end) = tr.last().unwrap();
        pts.push(((tr.len() as f64 - 1.0).ln(), end.dist(&exact).ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(-slope >= 4.0, "observed order {}", -slope);
}

#[test]
fn stable_equilibria_classify_as_stable() {
    let p = ModelParams::fig2();
    let eqs = find_equilibria_default(&p).unwrap();
    assert_eq!(eqs.len(), 3);
    for cp in [&eqs[0], &eqs[2]] {
        for mu in [0.1, 1.0, 10.0] {
            assert!(classify(cp, mu, p.alpha2, p.gamma).kind.is_stable());
        }
    }
}
