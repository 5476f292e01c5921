//! Checking loops against loop-free invariants, nested loops included, and
//! reading a counterexample when a check fails.

use redip::cas::ClosedForm;
use redip::equivalence::{verify_compositional, CheckOptions, Verdict, Witness};
use redip::semantics::State;
use redip::syntax::parse;

const PATH_TRACING: &str = include_str!("../programs/path_tracing.redip");
const MUTATED: &str = include_str!("../programs/n_geometric_mutated.redip");

fn main() {
    let program = parse(PATH_TRACING).unwrap();
    for r in verify_compositional(&program, CheckOptions::default()).unwrap() {
        println!("{:<14} {} ({} ms)", r.label, r.verdict.name(), r.millis);
    }

    let mutated = parse(MUTATED).unwrap();
    let report = verify_compositional(&mutated, CheckOptions::default()).unwrap().remove(0);
    if let Verdict::NotEqual(Witness::Found(cx)) = &report.verdict {
        println!("\nmutated loop refuted on input state {}", cx.input_state);
        println!("loop side minus invariant side: {}", cx.discrepancy);
        let point = State::new(&mutated.vars, ClosedForm::monomial(cx.input_state.clone()));
        println!("point-mass input: {}", point.cf);
    }
}
