mod common;

use common::{max_abs_diff, one_step_case};
use proptest::prelude::*;
use quitting::one_step::{game_constants, one_step_payoff, perfectness_report};
use quitting::perturbation::{perturb, theorem1_report, PerfectnessGuarantee};
use quitting::probability::continue_prob;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn continue_prob_scales((_, p) in one_step_case(6), pick in any::<usize>(), lambda in 0.0..=1.0f64) {
        let m = pick % p.len();
        let hat = perturb(&p, m, lambda).unwrap();
        prop_assert!((continue_prob(&hat) - (1.0 - lambda) * continue_prob(&p)).abs() <= 1e-12);
    }

    #[test]
    fn payoff_is_the_mixture((g, p) in one_step_case(6), pick in any::<usize>(), lambda in 0.0..=1.0f64) {
        let m = pick % p.len();
        let hat = one_step_payoff(&g, &perturb(&p, m, lambda).unwrap());
        let base = one_step_payoff(&g, &p);
        let quit = one_step_payoff(&g, &p.with_prob(m, 1.0));
        let mix: Vec<f64> = base.iter().zip(&quit).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
        prop_assert!(max_abs_diff(&hat, &mix) <= 1e-10);
    }

    #[test]
    fn payoff_shift_bounded((g, p) in one_step_case(6), pick in any::<usize>(), lambda in 0.0..=1.0f64) {
        let m = pick % p.len();
        let c = game_constants(&g);
        let hat = one_step_payoff(&g, &perturb(&p, m, lambda).unwrap());
        let shift = max_abs_diff(&hat, &one_step_payoff(&g, &p));
        prop_assert!(shift <= lambda * (c.r_max + c.delta_v) + 1e-10);
    }

    #[test]
    fn perfectness_degrades_boundedly(
        (g, p) in one_step_case(6),
        pick in any::<usize>(),
        q in prop_oneof![Just(1.0), 1e-6..=1.0f64],
        lambda in 0.0..=1.0f64,
    ) {
        let m = pick % p.len();
        let p = p.with_prob(m, q);
        let eta = perfectness_report(&g, &p).epsilon_star;
        let report = theorem1_report(&g, &p, m, lambda, eta).unwrap();
        let bound = (2.0 * lambda * game_constants(&g).r_max + (1.0 - lambda) * eta).max(eta);
        let hat = perfectness_report(&g, &perturb(&p, m, lambda).unwrap()).epsilon_star;
        prop_assert!(hat <= bound + 1e-10, "hat {hat} bound {bound}");
        let full = matches!(report.guarantee, PerfectnessGuarantee::Full { .. });
        prop_assert!(full);
        prop_assert!(report.all_hold());
    }

    #[test]
    fn report_is_consistent((g, p) in one_step_case(5), pick in any::<usize>(), lambda in 0.0..=1.0f64) {
        let m = pick % p.len();
        let eta = perfectness_report(&g, &p).epsilon_star;
        let r = theorem1_report(&g, &p, m, lambda, eta).unwrap();
        prop_assert!(r.continue_identity_holds());
        prop_assert!(r.mix_identity_holds());
        prop_assert!(r.shift_bound_holds());
        if let Some(ratio) = r.continue_prob_ratio {
            // storing p̂^m near 1 costs one ulp of 1, i.e. a relative error of
            // about ε_mach / (1 − p̂^m) in the continue probability
            let conditioning = 4.0 * f64::EPSILON / (1.0 - r.p_hat[m]);
            prop_assert!(
                (ratio - (1.0 - lambda)).abs() <= 1e-12 + conditioning,
                "ratio {ratio} lambda {lambda}"
            );
        }
        if p.get(m) == 0.0 {
            let partial = matches!(r.guarantee, PerfectnessGuarantee::Partial { .. });
            prop_assert!(partial);
        }
    }
}
