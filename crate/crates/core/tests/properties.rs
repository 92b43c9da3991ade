mod common;

use common::props::{self, *};
use common::phase_distance;
use num_complex::Complex64 as C;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn state_stays_normalized(case in state_stays_normalized_strategy()) {
        props::state_stays_normalized(case)?;
    }

    #[test]
    fn add_phase_matches_dense_oracle(case in add_phase_matches_dense_oracle_strategy()) {
        props::add_phase_matches_dense_oracle(case)?;
    }

    #[test]
    fn interference_matches_dense_oracle(case in interference_matches_dense_oracle_strategy()) {
        props::interference_matches_dense_oracle(case)?;
    }

    #[test]
    fn conditional_matches_dense_oracle(case in conditional_matches_dense_oracle_strategy()) {
        props::conditional_matches_dense_oracle(case)?;
    }

    #[test]
    fn gates_are_involutions(case in gates_are_involutions_strategy()) {
        props::gates_are_involutions(case)?;
    }

    #[test]
    fn default_interference_twice_is_identity(case in default_interference_twice_is_identity_strategy()) {
        props::default_interference_twice_is_identity(case)?;
    }
}

#[test]
fn encode_decode_is_a_bijection() {
    encode_decode_bijection().unwrap();
}

#[test]
fn born_rule_frequencies() {
    born_rule().unwrap();
}

#[test]
fn critical_value_is_sane() {
    // one degree of freedom is the square of a normal deviate
    assert!((chi2_critical(1) - 25.0).abs() < 1e-3);
    assert!(chi2_critical(15) > chi2_critical(3));
}

#[test]
fn chi2_rejects_a_biased_sample() {
    let (stat, df) = chi2(&[6000, 4000], &[0.5, 0.5], 10_000);
    assert_eq!(df, 1);
    assert!(stat > chi2_critical(df));
}

#[test]
fn phase_distance_ignores_global_phase() {
    let s = random_state(8, 3);
    let rotated: Vec<C> = s.iter().map(|a| a * C::from_polar(1.0, 0.7)).collect();
    assert!(phase_distance(&s, &rotated) < 1e-12);
}
