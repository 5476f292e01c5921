//! Reading a program, printing it back and lowering it to the core language.

use redip::syntax::{desugar, parse, DesugarOptions};

const SOURCE: &str = "\
vars n, c;
while (n > 0) {
  {n := n - 1} [1/2] {c := c + 1}
}

#invariant
c += iid(geometric(1/2), n);
n := 0
";

fn main() {
    let program = parse(SOURCE).unwrap();
    println!("variables: {:?}", program.vars);
    println!("{program}");

    let (core, spec) = desugar(&program, DesugarOptions::default()).unwrap();
    println!("core loop:\n{core}\n");
    println!("core specification:\n{}", spec.unwrap());

    for bad in ["vars s, t; if (s != t) { skip }", "vars x; x += iid(bernoulli(1/2), x)", "vars c; c := catalan(1/2)"] {
        println!("{bad:<40} -> {}", parse(bad).unwrap_err());
    }
}
