mod common;

use common::*;
use proptest::prelude::*;
use redip::cas::rat;

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn loop_free_programs_preserve_mass(p in program(), g in input()) {
        mass_preservation(&p, &g)?;
    }

    #[test]
    fn semantics_is_linear(p in program(), g1 in input(), g2 in input(), a in 0i64..=6) {
        linearity(&p, &g1, &g2, &rat(a, 6))?;
    }

    #[test]
    fn guard_and_negation_partition(g in input(), phi in guard()) {
        guard_partition(&g, &phi)?;
    }

    #[test]
    fn meta_indeterminates_are_inert(p in program(), g in input(), h in input(), a in 0u32..3, b in 0u32..3) {
        meta_homogeneity(&p, &g, &h, a, b)?;
    }

    #[test]
    fn series_times_denominator_is_numerator(f in closed_form()) {
        series_consistency(&f, 8)?;
    }

    #[test]
    fn derivative_shifts_coefficients(f in closed_form()) {
        derivative_consistency(&f, 8)?;
    }

    #[test]
    fn kleene_unrolling_is_monotone(n in 0u32..8, c in 0u32..3, k in 0usize..=30) {
        monotone_unrolling(n, c, k)?;
    }
}
