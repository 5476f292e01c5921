//! Pushing an input distribution through a loop-free program.

use redip::cas::ClosedForm;
use redip::semantics::{transform, unroll};
use redip::syntax::{desugar, parse, CoreStmt, DesugarOptions};

fn main() {
    let program = parse("vars x, y; y := binomial(1/2, 2); if (y = 0) { x := 7 } else { x += iid(geometric(1/3), y) }").unwrap();
    let (core, _) = desugar(&program, DesugarOptions::default()).unwrap();
    let input: ClosedForm = "X^2".parse().unwrap();
    let out = transform(&core, &input).unwrap();
    println!("input  {input}");
    println!("output {out}");

    // a loop has no loop-free semantics, but its Kleene approximations do
    let lp = parse("vars n, c; while (n > 0) { {n := n - 1} [1/2] {c := c + 1} }").unwrap();
    let (CoreStmt::While { guard, body, .. }, _) = desugar(&lp, DesugarOptions::default()).unwrap() else {
        unreachable!()
    };
    let start: ClosedForm = "N".parse().unwrap();
    for k in [1, 2, 4, 8] {
        println!("after {k} iterations: {}", unroll(&guard, &body, k, &start).unwrap());
    }
}
