//! Answering several questions about one output distribution.

use redip::equivalence::{loop_free_semantics, CheckOptions};
use redip::queries::{parse_query, run_query};
use redip::semantics::transform;
use redip::syntax::parse;

const SPLIT: &str = include_str!("../programs/complementary_binomials.redip");

fn main() {
    let program = parse(SPLIT).unwrap();
    // loops are replaced by their verified invariants
    let core = loop_free_semantics(&program, CheckOptions::default()).unwrap();
    let out = transform(&core, &"C^10".parse().unwrap()).unwrap();
    println!("output on c = 10: {out}");
    for q in ["mass", "E[m^3 + 2*m*n + n^2]", "P[m > 7 & n < 3]", "Var[m]", "coeff[m=4, n=6]", "marginal[n]"] {
        let query = parse_query(q, &program.vars, &program.params).unwrap();
        println!("{q:<22} = {}", run_query(&out, &query).unwrap());
    }
}
