use goodwill::dynamics::{mild_solve, uniform_times, ControlSignal, ControlValues, ModelParams};
use goodwill::grid::GridField;
use goodwill::lq_indefinite::RiccatiModeSolution;
use goodwill::maximum_principle::CostRule;
use goodwill::scenario::parse_config;
use goodwill::spectral::{DomainSpec, Quadrature, SpectralField};
use goodwill::verification::{dp_refinement, ScalarLQInstance};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn conjugate_dominates_every_feasible_effort(zeta in -3.0..5.0f64, cap in 0.1..4.0f64, frac in 0.0..=1.0f64) {
        let u = frac * cap;
        for rule in [CostRule::QuadraticCapped { cap }, CostRule::LinearCapped { cap }] {
            let h = |v: f64| match rule {
                CostRule::QuadraticCapped { .. } => 0.5 * v * v,
                CostRule::LinearCapped { .. } => v,
            };
            let hs = rule.conjugate(zeta);
            prop_assert!(hs + 1e-12 >= zeta * u - h(u));
            let a = rule.argmax(zeta);
            prop_assert!((0.0..=cap).contains(&a));
            prop_assert!((hs - (zeta * a - h(a))).abs() <= 1e-12 * (1.0 + hs.abs()));
        }
    }

    #[test]
    fn positive_riccati_stays_in_zero_gamma(mu in 0.05..50.0f64, gamma in 0.01..20.0f64, t in 0.0..3.0f64) {
        prop_assume!((gamma - 2.0 * mu).abs() > 1e-6);
        let sol = RiccatiModeSolution::p2(mu, gamma, 3.0).unwrap();
        let p = sol.eval(t).unwrap();
        prop_assert!(p > 0.0 && p <= gamma * (1.0 + 1e-14));
        prop_assert!(sol.eval(t + 0.1).unwrap() <= p);
    }

    #[test]
    fn negative_riccati_before_blow_up(mu in 0.05..50.0f64, gamma in 0.01..20.0f64, t in 0.0..3.0f64) {
        prop_assume!((gamma - 2.0 * mu).abs() > 1e-6);
        let sol = RiccatiModeSolution::p1(mu, gamma, 3.0).unwrap();
        match sol.blow_up_time() {
            Some(tb) if tb <= t => prop_assert!(sol.eval(t).is_err()),
            _ => {
                let p = sol.eval(t).unwrap();
                prop_assert!(p < 0.0);
                if gamma < 2.0 * mu {
                    prop_assert!(p >= -gamma * (1.0 + 1e-14));
                }
            }
        }
    }

    #[test]
    fn riccati_closed_form_solves_the_ode(mu in 0.1..10.0f64, gamma in 0.1..5.0f64, t in 0.05..1.0f64, positive in any::<bool>()) {
        prop_assume!((gamma - 2.0 * mu).abs() > 1e-3);
        let sol = if positive {
            RiccatiModeSolution::p2(mu, gamma, 1.0).unwrap()
        } else {
            RiccatiModeSolution::p1(mu, gamma, 1.0).unwrap()
        };
        prop_assume!(sol.blow_up_time().map_or(true, |tb| tb > t + 0.01));
        let h = 1e-5;
        let p = sol.eval_unchecked(t);
        let dp = (sol.eval_unchecked(t + h) - sol.eval_unchecked(t - h)) / (2.0 * h);
        let rhs = -2.0 * mu * p - p * p;
        prop_assert!((dp - rhs).abs() <= 1e-5 * (1.0 + rhs.abs() + p.abs()));
    }

    #[test]
    fn projection_inverts_synthesis(c in coeffs(25)) {
        let d = DomainSpec::with_modes(1.5, 0.7, 4, 4).unwrap();
        let f = SpectralField::from_coeffs(&d, c).unwrap();
        let q = Quadrature::new(&d);
        let back = q.project_values(&q.synthesize(&f));
        prop_assert!(back.max_abs_diff(&f) <= 1e-12 * (1.0 + f.norm()));
    }

    #[test]
    fn mild_solution_is_affine_in_the_data(a in coeffs(9), b in coeffs(9), x in coeffs(9), s in -2.0..2.0f64) {
        let d = DomainSpec::unit_square(2, 2);
        let times = uniform_times(0.5, 20);
        let field = |c: &[f64]| SpectralField::from_coeffs(&d, c.to_vec()).unwrap();
        let control = |f: SpectralField| {
            ControlSignal::new(times.clone(), ControlValues::Spectral(vec![f; times.len()])).unwrap()
        };
        let zero = SpectralField::zeros(&d);
        let run = |x0: SpectralField, u: SpectralField| {
            mild_solve(&ModelParams::new(x0, 0.7, 0.5), &control(u), &times).unwrap()
        };
        let whole = run(field(&x), field(&a).axpy(s, &field(&b)));
        let free = run(field(&x), zero.clone());
        let ua = run(zero.clone(), field(&a));
        let ub = run(zero, field(&b));
        for j in 0..times.len() {
            let sum = free.states[j].axpy(1.0, &ua.states[j]).axpy(s, &ub.states[j]);
            prop_assert!(whole.states[j].max_abs_diff(&sum) <= 1e-12 * (1.0 + sum.norm()));
        }
    }

    #[test]
    fn modes_evolve_independently(c in coeffs(16), k in 0usize..16) {
        let d = DomainSpec::unit_square(3, 3);
        let times = uniform_times(1.0, 10);
        let full = SpectralField::from_coeffs(&d, c.clone()).unwrap();
        let mut single = SpectralField::zeros(&d);
        single.coeffs[k] = c[k];
        let u = ControlSignal::zero(&d, times.clone()).unwrap();
        let a = mild_solve(&ModelParams::new(full, 0.3, 1.0), &u, &times).unwrap();
        let b = mild_solve(&ModelParams::new(single, 0.3, 1.0), &u, &times).unwrap();
        prop_assert!((a.final_state().coeffs[k] - b.final_state().coeffs[k]).abs() <= 1e-15 * (1.0 + c[k].abs()));
    }

    #[test]
    fn dp_extrapolation_removes_first_order_error(a in -3.0..0.5f64, w in 0.1..4.0f64, target in -1.0..2.0f64, x0 in -1.0..1.0f64) {
        let inst = ScalarLQInstance { a, terminal_weight: w, target, f: 0.2, horizon: 1.0, steps: 160, x0 };
        let (coarse, lim_c) = dp_refinement(&inst, 160, 4).unwrap();
        let (fine, lim_f) = dp_refinement(&inst, 320, 4).unwrap();
        prop_assert!(lim_c.is_finite() && lim_f.is_finite());
        // extrapolation removes the first-order error the raw values still carry
        let raw = (fine.last().unwrap().1 - coarse[1].1).abs();
        prop_assert!((lim_c - lim_f).abs() <= 0.1 * raw + 1e-13, "limits {lim_c} {lim_f}, raw spread {raw}");
    }

    #[test]
    fn grid_dump_round_trips(nx in 2usize..7, ny in 2usize..7, len in 0.1..5.0f64, seed in prop::collection::vec(-1e6..1e6f64, 36)) {
        let values = seed[..nx * ny].to_vec();
        let g = GridField::new(nx, ny, len, 1.0, values).unwrap();
        prop_assert_eq!(GridField::parse_dump(&g.to_dump()).unwrap(), g);
    }

    #[test]
    fn scenario_render_round_trips(
        len in 0.1..10.0f64,
        rho in 0.01..3.0f64,
        gamma in 0.01..5.0f64,
        steps in 1usize..500,
        modes in prop::collection::vec((0usize..5, 0usize..5, -3.0..3.0f64), 0..4),
        kind in 0usize..4,
    ) {
        let mut text = format!(
            "[scenario]\nname = prop\n[domain]\nlength = {len}\nheight = 1\nmodes_m = 4\nmodes_n = 4\n\
             [model]\nrho = {rho}\nhorizon = 1\ngamma = {gamma}\n"
        );
        if kind == 1 {
            text.push_str("cap = 2\n");
        }
        text.push_str("[x0]\nconstant = 1\n");
        for (m, n, c) in &modes {
            text.push_str(&format!("mode {m} {n} = {c}\n"));
        }
        let tail = match kind {
            0 => "kind = simulate\n",
            1 => "kind = mp_linear\n",
            2 => "kind = budget\nbudget = 3\n",
            _ => "kind = p2_sweep\nlevels = 0.5, 1.25\n",
        };
        text.push_str(&format!("[problem]\ntime_steps = {steps}\n{tail}"));
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&cfg.render()).unwrap(), cfg);
    }
}
