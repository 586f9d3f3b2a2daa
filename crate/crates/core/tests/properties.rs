use std::sync::Arc;

use proptest::prelude::*;

use optimal_balance::diagnostics::{fit_alpha, fit_order, log_grid};
use optimal_balance::integrate::{
    integrate_endpoint, rotate_exact, IntegratorConfig, Scheme, System,
};
use optimal_balance::model::{apply_j, energy};
use optimal_balance::slow::SlowField;
use optimal_balance::verify::{lemma_a1_case, lemma_a2_case, MultiIndex};
use optimal_balance::{PolynomialPotential, Potential, Ramp, State};

fn ramps() -> impl Strategy<Value = Ramp> {
    prop_oneof![
        (1u32..=8).prop_map(|k| Ramp::Algebraic { k }),
        Just(Ramp::Exponential)
    ]
}

proptest! {
    #[test]
    fn ramp_is_a_symmetric_monotone_homotopy(ramp in ramps(), t in 0.0f64..=1.0, dt in 0.0f64..0.1) {
        let r = ramp.eval(t).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!((r + ramp.eval(1.0 - t).unwrap() - 1.0).abs() <= 2.0 * f64::EPSILON);
        let u = (t + dt).min(1.0);
        prop_assert!(ramp.eval(u).unwrap() >= r);
        prop_assert_eq!(ramp.eval(0.0).unwrap(), 0.0);
        prop_assert_eq!(ramp.eval(1.0).unwrap(), 1.0);
    }

    #[test]
    fn free_flow_matches_the_exact_rotation(
        q in prop::array::uniform2(-2.0f64..2.0),
        p in prop::array::uniform2(-1.0f64..1.0),
        t in 0.1f64..20.0,
        scheme in prop_oneof![Just(Scheme::Splitting), Just(Scheme::Rk4)],
    ) {
        let zero: Arc<dyn Potential> = Arc::new(PolynomialPotential::zero(1).unwrap());
        let system = System::Full { eps: 0.1, potential: zero };
        let cfg = IntegratorConfig::new(scheme, 0.01).unwrap();
        let end = integrate_endpoint(&State::new(q.to_vec(), p.to_vec()).unwrap(), 0.0, t, &cfg, &system).unwrap();
        let jp = apply_j(&p).unwrap();
        let (s, c) = t.sin_cos();
        let tol = if scheme == Scheme::Splitting { 1e-12 } else { 1e-8 };
        for i in 0..2 {
            prop_assert!((end.q[i] - (q[i] + s * p[i] + (1.0 - c) * jp[i])).abs() <= tol);
        }
        let p_exact = rotate_exact(&p, t);
        for i in 0..2 {
            prop_assert!((end.p[i] - p_exact[i]).abs() <= tol);
        }
    }

    #[test]
    fn energy_is_conserved(q in prop::array::uniform2(-1.5f64..1.5), p in prop::array::uniform2(-0.5f64..0.5), eps in 1e-3f64..0.2) {
        let pot: Arc<dyn Potential> = Arc::new(PolynomialPotential::quartic_aniso());
        let s0 = State::new(q.to_vec(), p.to_vec()).unwrap();
        let system = System::Full { eps, potential: Arc::clone(&pot) };
        let cfg = IntegratorConfig::new(Scheme::Rk4, 0.01).unwrap();
        let end = integrate_endpoint(&s0, 0.0, 20.0, &cfg, &system).unwrap();
        let (e0, e1) = (energy(&s0, eps, pot.as_ref()).unwrap(), energy(&end, eps, pot.as_ref()).unwrap());
        prop_assert!((e1 - e0).abs() <= 1e-8 * (1.0 + e0.abs()), "{} vs {}", e0, e1);
    }

    #[test]
    fn leading_slow_jacobian_is_the_rotated_hessian(q in prop::array::uniform2(-2.0f64..2.0), v in prop::array::uniform2(-1.0f64..1.0)) {
        // g_0 = -J ∇V and ∇²V = diag(9 q1², 3 q2²) for the quartic potential
        let field = SlowField::autonomous(1, Arc::new(PolynomialPotential::quartic_aniso())).unwrap();
        let jvp = field.coefficient_jvp(0, &q, 0.0, &v).unwrap();
        let hv = [9.0 * q[0] * q[0] * v[0], 3.0 * q[1] * q[1] * v[1]];
        let expected: Vec<f64> = apply_j(&hv).unwrap().iter().map(|x| -x).collect();
        for i in 0..2 {
            prop_assert!((jvp[i] - expected[i]).abs() <= 1e-12 * (1.0 + expected[i].abs()));
        }
    }

    #[test]
    fn order_fit_recovers_power_laws(s in 0.5f64..8.0, c in 1e-3f64..1e3) {
        let eps = log_grid(1e-1, 1e-3, 9).unwrap();
        let pts: Vec<(f64, f64)> = eps.iter().map(|&e| (e, c * e.powf(s))).collect();
        let f = fit_order(&pts, None).unwrap();
        prop_assert!((f.slope - s).abs() <= 1e-9);
        prop_assert!((f.intercept - c.ln()).abs() <= 1e-8);
    }

    #[test]
    fn alpha_fit_inverts_the_exponential_model(alpha in 0.1f64..1.0, c in 0.1f64..3.0) {
        let eps = log_grid(1e-1, 1e-2, 8).unwrap();
        let pts: Vec<(f64, f64)> = eps.iter().map(|&e| (e, (-c * e.powf(-alpha)).exp())).collect();
        let f = fit_alpha(&pts, None, 1.0, 0.0).unwrap();
        prop_assert!((f.alpha.unwrap() - alpha).abs() <= 1e-9);
        prop_assert!((f.ln_c.unwrap() - c.ln()).abs() <= 1e-8);
    }

    #[test]
    fn log_grid_is_descending_with_exact_endpoints(lo_exp in -6.0f64..-1.0, span in 0.1f64..4.0, n in 2usize..40) {
        let (hi, lo) = (10f64.powf(lo_exp + span), 10f64.powf(lo_exp));
        let g = log_grid(hi, lo, n).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert_eq!(g[0], hi);
        prop_assert_eq!(g[n - 1], lo);
        prop_assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn lemma_a1_holds(n in 0usize..30, k in 2usize..30, l_frac in 0.0f64..1.0) {
        let l = 1 + ((k - 1) as f64 * l_frac) as usize;
        let l = l.min(k - 1);
        prop_assert!(lemma_a1_case(n, k, l).unwrap().holds());
    }

    #[test]
    fn lemma_a2_holds(alpha in prop::collection::vec(1usize..5, 1..4), n in 0usize..8) {
        prop_assert!(lemma_a2_case(&MultiIndex::new(alpha), n).unwrap().holds());
    }
}
