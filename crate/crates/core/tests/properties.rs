use proptest::prelude::*;
use qkd_core::adversary::{EveKind, EveStrategy};
use qkd_core::qcore::{decode_qubit, encode_qutrit, encode_via_projection, PhasePair, Subspace};
use qkd_core::rates::{poisson_mass, P_SIFT};
use qkd_core::{key_rate, optimize_mu, run_experiment, Protocol, SystemParams};

fn protocol() -> impl Strategy<Value = Protocol> {
    prop_oneof![Just(Protocol::Bb84), Just(Protocol::Qutrit)]
}

fn params() -> impl Strategy<Value = SystemParams> {
    (
        0.0..0.5f64,
        0.0..150.0f64,
        0.01..1.0f64,
        0.01..1.0f64,
        0.0..1e-3f64,
        0.0..0.1f64,
        1e-4..0.999f64,
    )
        .prop_map(
            |(alpha, length, gamma_b, eta, p_d, q_opt, mu)| SystemParams {
                alpha,
                length,
                gamma_b,
                eta,
                p_d,
                q_opt,
                mu,
            },
        )
}

proptest! {
    #[test]
    fn breakdown_stays_in_range(p in params(), proto in protocol()) {
        let b = key_rate(proto, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&b.i_e));
        prop_assert!((0.0..=0.5).contains(&b.q));
        prop_assert!((0.0..=0.5).contains(&b.epsilon1));
        prop_assert!((0.0..=1.0).contains(&b.y1));
        prop_assert!(b.r_sig <= b.r_raw);
        prop_assert!(b.k >= 0.0);
        prop_assert!(b.k <= proto.p_accept() * P_SIFT * b.r_raw);
        prop_assert_eq!(b.k, b.k_margin.max(0.0));
    }

    #[test]
    fn key_rate_never_grows_with_distance(p in params(), proto in protocol(), extra in 0.0..50.0f64) {
        let near = key_rate(proto, &p).unwrap().k;
        let far = key_rate(proto, &p.with_length(p.length + extra)).unwrap().k;
        prop_assert!(far <= near);
    }

    #[test]
    fn poisson_mass_is_normalized(mu in 0.0..5.0f64) {
        let total: f64 = (0..80).map(|n| poisson_mass(n, mu).unwrap()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn optimum_beats_any_fixed_mu(l in 0.0..60.0f64, mu in 1e-4..0.999f64, proto in protocol()) {
        let base = SystemParams::reference(0.0, 0.1);
        let best = optimize_mu(proto, &base, l).unwrap().k_opt;
        let fixed = key_rate(proto, &base.with_length(l).with_mu(mu)).unwrap().k;
        prop_assert!(best >= fixed - 1e-12);
    }

    #[test]
    fn encodings_agree_and_decode_at_two_thirds(a in 0u8..4, b in 0u8..4) {
        let pair = PhasePair::all().nth(usize::from(4 * a + b)).unwrap();
        let state = encode_qutrit(pair);
        prop_assert!(state.equals_up_to_phase(&encode_via_projection(pair).unwrap(), 1e-12));
        for s in Subspace::ALL {
            let (_, p) = decode_qubit(&state, s).unwrap();
            prop_assert!((p - 2.0 / 3.0).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monte_carlo_counts_are_nested(
        seed in any::<u64>(),
        mu in 0.05..0.9f64,
        length in 0.0..30.0f64,
        proto in protocol(),
        kind in prop_oneof![Just(EveKind::None), Just(EveKind::Pns)],
    ) {
        let p = SystemParams { p_d: 1e-3, ..SystemParams::reference(length, mu) };
        let r = run_experiment(proto, EveStrategy::new(kind, 0.25).unwrap(), p, 2_000, seed).unwrap();
        let c = r.counts;
        prop_assert_eq!(c.rounds, 2_000);
        prop_assert!(c.errors <= c.sifted);
        prop_assert!(c.sifted <= c.decoded);
        prop_assert!(c.decoded <= c.detected);
        prop_assert!(c.detected <= c.rounds);
        prop_assert!(c.dark_only_errors <= c.dark_only_sifted && c.dark_only_sifted <= c.sifted);
        prop_assert!(c.pns_learned <= c.pns_stored_sifted && c.pns_stored_sifted <= c.sifted);
        if proto == Protocol::Bb84 {
            prop_assert_eq!(c.decoded, c.detected);
        }
        let again = run_experiment(proto, EveStrategy::new(kind, 0.25).unwrap(), p, 2_000, seed).unwrap();
        prop_assert_eq!(r, again);
    }
}
