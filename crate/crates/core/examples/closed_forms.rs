//! Exact rational generating functions: arithmetic, series and projections.

use redip::cas::{ClosedForm, IndetId, Projection, Rational};

fn main() {
    let x = IndetId::program("x");
    let geo: ClosedForm = "(1/2)/(1 - 1/2*X)".parse().unwrap();
    println!("geometric(1/2):      {geo}");
    println!("first coefficients:  {:?}", geo.coefficients(&x, 6).iter().map(|c| c.to_string()).collect::<Vec<_>>());

    // sum of two independent samples
    let sum = geo.mul(&geo);
    println!("sum of two samples:  {sum}");
    println!("P(sum = 3):          {}", sum.coeff(&x, 3));

    // the pole at X = 1 cancels in (1 - X^3)/(1 - X)
    let removable: ClosedForm = "(1 - X^3)/(3 - 3*X)".parse().unwrap();
    match removable.eval_at(&x, &Rational::from_integer(1.into())) {
        Projection::Finite(v) => println!("(1 - X^3)/(3 - 3X) at 1 = {v}"),
        Projection::Divergent => println!("diverges"),
    }
    println!("equal to (1 + X + X^2)/3: {}", removable.cf_equal(&"(1 + X + X^2)/3".parse().unwrap()));

    let d = geo.derivative(&x);
    println!("d/dX geometric:      {d}");
}
