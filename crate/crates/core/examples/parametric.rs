//! Verification and queries with symbolic probabilities.

use redip::cas::{ClosedForm, IndetId, Rational};
use redip::equivalence::{loop_free_semantics, verify_compositional, CheckOptions};
use redip::queries::prob_event;
use redip::semantics::transform;
use redip::syntax::{parse, parse_guard};

const DUEL: &str = include_str!("../programs/dueling_cowboys.redip");

fn main() {
    let program = parse(DUEL).unwrap();
    let verdict = &verify_compositional(&program, CheckOptions::default()).unwrap()[0].verdict;
    println!("for all a, b: {verdict}");

    let core = loop_free_semantics(&program, CheckOptions::default()).unwrap();
    let out = transform(&core, &"C".parse().unwrap()).unwrap();
    let first_wins = parse_guard("t = 0", &program.vars).unwrap();
    let p = prob_event(&out, &first_wins).unwrap();
    println!("P(first shooter wins) = {p}");

    let mut g = out;
    for (name, value) in [("a", Rational::new(1.into(), 2.into())), ("b", Rational::new(1.into(), 2.into()))] {
        g = g.subst(&IndetId::param(name), &ClosedForm::constant(value)).unwrap();
    }
    println!("with a = b = 1/2:       {}", prob_event(&g, &first_wins).unwrap());
}
