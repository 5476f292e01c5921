//! Comparing the exact answer with a seeded simulation of the same program.

use redip::cas::ClosedForm;
use redip::equivalence::{loop_free_semantics, CheckOptions};
use redip::queries::prob_event;
use redip::sampler::{sample, ConcreteState, SampleConfig, ALGORITHM};
use redip::semantics::transform;
use redip::syntax::{parse, parse_guard};

const DIE: &str = include_str!("../programs/knuth_yao.redip");

fn main() {
    let program = parse(DIE).unwrap();
    let exact = transform(&loop_free_semantics(&program, CheckOptions::default()).unwrap(), &ClosedForm::one()).unwrap();
    let cfg = SampleConfig { seed: 42, ..SampleConfig::default() };
    let tally = sample(&program, &ConcreteState::new(), &cfg).unwrap();
    println!("{} runs with {ALGORITHM}", tally.runs);
    for face in 1..=6 {
        let event = parse_guard(&format!("die = {face}"), &program.vars).unwrap();
        let est = tally.frequency(&event);
        println!(
            "die = {face}: exact {}  sampled {:.4} ± {:.4}",
            prob_event(&exact, &event).unwrap(),
            num_traits::ToPrimitive::to_f64(&est.frequency).unwrap(),
            est.stderr
        );
    }
}
