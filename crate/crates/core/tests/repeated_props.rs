mod common;

use common::{cyclic, repeated_case, splice};
use proptest::prelude::*;
use quitting::repeated::{
    bellman_residual, best_response, equilibrium_certificate_repeated, repeated_payoff,
    subgame_certificate, truncated_payoff,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closed_form_matches_truncation((g, pi) in repeated_case(5, 3, 3)) {
        let closed = repeated_payoff(&g, &pi).payoff;
        for k in [1, 10, 100] {
            let t = truncated_payoff(&g, &pi, k);
            for (a, b) in closed.iter().zip(&t.payoff) {
                prop_assert!((a - b).abs() <= t.tail_bound + 1e-10, "K={k}: {a} vs {b}, tail {}", t.tail_bound);
            }
        }
    }

    #[test]
    fn payoff_bounded_by_r_max((g, pi) in repeated_case(5, 3, 3)) {
        let r = repeated_payoff(&g, &pi);
        prop_assert!((0.0..=1.0).contains(&r.termination_prob));
        for x in r.payoff {
            prop_assert!(x.abs() <= g.r_max() + 1e-12);
        }
    }

    #[test]
    fn best_response_dominates_and_is_a_fixed_point((g, pi) in repeated_case(4, 3, 3)) {
        let values = repeated_payoff(&g, &pi).payoff;
        for (n, &value) in values.iter().enumerate() {
            let br = best_response(&g, &pi, n);
            prop_assert!(br.best_value >= value - 1e-9);
            prop_assert!(bellman_residual(&g, &pi, &br) <= 1e-10);
            let attained = repeated_payoff(&g, &br.deviation_profile(&pi)).payoff[n];
            prop_assert!((attained - br.best_value).abs() <= 1e-9, "{attained} vs {}", br.best_value);
        }
    }

    #[test]
    fn subgames_shift_stages((_, pi) in repeated_case(3, 4, 4), extra in 0usize..3) {
        let span = pi.period_span();
        for j in 1..=span + extra {
            let sub = pi.subgame(j);
            prop_assert!(sub.cycle().len() == pi.cycle().len());
            for i in 0..3 * span {
                prop_assert_eq!(sub.stage(i), pi.stage(j - 1 + i));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_deviations_never_beat_best_response(
        (g, pi) in repeated_case(4, 2, 3),
        devs in prop::collection::vec(cyclic(4, 3, 4), 100),
        pick in any::<usize>(),
    ) {
        let n = pick % g.num_players();
        let best = best_response(&g, &pi, n).best_value;
        for dev in &devs {
            let value = repeated_payoff(&g, &splice(&pi, dev, n)).payoff[n];
            prop_assert!(value <= best + 1e-8, "{value} > {best}");
        }
    }

    #[test]
    fn subgame_certificate_covers_every_shift((g, pi) in repeated_case(3, 2, 3)) {
        let cert = subgame_certificate(&g, &pi);
        prop_assert_eq!(cert.shifts.len(), pi.period_span());
        prop_assert_eq!(cert.epsilon_star, cert.shifts[cert.worst_shift - 1]);
        let whole = equilibrium_certificate_repeated(&g, &pi).epsilon_star;
        prop_assert_eq!(cert.shifts[0], whole);
        // shifts past the span repeat earlier ones
        let later = equilibrium_certificate_repeated(&g, &pi.subgame(pi.period_span() + 1)).epsilon_star;
        let expected = cert.shifts[pi.prefix().len()];
        prop_assert!((later - expected).abs() <= 1e-12);
    }
}
