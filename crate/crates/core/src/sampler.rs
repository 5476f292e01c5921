//! Monte Carlo interpreter of surface programs.
//!
//! Runs are independent: run `i` draws from a ChaCha8 generator seeded with
//! the user seed on stream `i`, so tallies do not depend on execution order.
//! Distributions are drawn by inverse transform from their mass functions.

use std::collections::BTreeMap;

use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cas::Rational;
use crate::syntax::{Count, DistExpr, Guard, ProbExpr, Program, Stmt};

pub const ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3), stream = run index";
pub const DEFAULT_STEP_CAP: u64 = 1_000_000;
pub const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("parameter {0} has no value; bind it with --param {0}=p")]
    UnboundParameter(String),
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("`{x} -= {y}` with {y} > {x}")]
    NegativeSubtraction { x: String, y: String },
    #[error("{timeouts} of {runs} runs hit the step cap")]
    TimeoutFractionExceeded { timeouts: u64, runs: u64 },
}

/// Values of the program variables.
pub type ConcreteState = BTreeMap<String, u64>;

/// Outcome of one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Run {
    Done(ConcreteState),
    Timeout,
}

struct Interp<'a> {
    params: &'a BTreeMap<String, Rational>,
    rng: ChaCha8Rng,
    steps: u64,
    cap: u64,
}

/// Raised inside a run when the step cap is reached.
enum Stop {
    Timeout,
    Err(SampleError),
}

impl From<SampleError> for Stop {
    fn from(e: SampleError) -> Stop {
        Stop::Err(e)
    }
}

fn get(s: &ConcreteState, x: &str) -> u64 {
    s.get(x).copied().unwrap_or(0)
}

impl Interp<'_> {
    fn prob(&self, p: &ProbExpr) -> Result<Rational, SampleError> {
        let bad = || SampleError::InvalidProbability(p.to_string());
        Ok(match p {
            ProbExpr::Lit(r) => r.clone(),
            ProbExpr::Param(a) => self.params.get(a).cloned().ok_or_else(|| SampleError::UnboundParameter(a.clone()))?,
            ProbExpr::Neg(a) => -self.prob(a)?,
            ProbExpr::Add(a, b) => self.prob(a)? + self.prob(b)?,
            ProbExpr::Sub(a, b) => self.prob(a)? - self.prob(b)?,
            ProbExpr::Mul(a, b) => self.prob(a)? * self.prob(b)?,
            ProbExpr::Div(a, b) => {
                let d = self.prob(b)?;
                if d.is_zero() {
                    return Err(bad());
                }
                self.prob(a)? / d
            }
        })
    }

    fn probability(&self, p: &ProbExpr) -> Result<f64, SampleError> {
        let r = self.prob(p)?;
        if r < Rational::zero() || r > Rational::one() {
            return Err(SampleError::InvalidProbability(format!("{p} = {r}")));
        }
        Ok(r.to_f64().expect("finite"))
    }

    fn tick(&mut self) -> Result<(), Stop> {
        self.steps += 1;
        if self.steps > self.cap {
            Err(Stop::Timeout)
        } else {
            Ok(())
        }
    }

    /// Smallest `k` with `u < pmf(0) + ... + pmf(k)`; `next` maps
    /// `(k, pmf(k))` to `pmf(k + 1)`. Stops once the mass left is lost to
    /// rounding.
    fn inverse_transform(&mut self, first: f64, next: impl Fn(u64, f64) -> f64) -> Result<u64, Stop> {
        let u: f64 = self.rng.gen();
        let (mut k, mut pmf, mut cdf) = (0u64, first, first);
        while u >= cdf {
            let p = next(k, pmf);
            if p <= 0.0 && k > 0 {
                break;
            }
            k += 1;
            pmf = p;
            cdf += p;
            self.tick()?;
        }
        Ok(k)
    }

    fn count(&self, n: &Count, s: &ConcreteState) -> u64 {
        match n {
            Count::Lit(k) => *k,
            Count::Var(v) => get(s, v),
        }
    }

    fn draw(&mut self, d: &DistExpr, s: &ConcreteState) -> Result<u64, Stop> {
        Ok(match d {
            DistExpr::Dirac(n) => *n,
            DistExpr::Bernoulli(p) => {
                let p = self.probability(p)?;
                u64::from(self.rng.gen::<f64>() < p)
            }
            DistExpr::Uniform(n) => {
                if *n == 0 {
                    return Err(SampleError::InvalidProbability("unif(0)".into()).into());
                }
                self.rng.gen_range(0..*n)
            }
            DistExpr::UniformRange(a, b) => {
                if a > b {
                    return Err(SampleError::InvalidProbability(d.to_string()).into());
                }
                self.rng.gen_range(*a..=*b)
            }
            // P(k) = (1 - p) p^k
            DistExpr::Geometric(p) => {
                let p = self.probability(p)?;
                self.inverse_transform(1.0 - p, |_, f| f * p)?
            }
            // P(k) = C(n, k) p^k (1 - p)^(n - k)
            DistExpr::Binomial(p, n) => {
                let p = self.probability(p)?;
                let n = self.count(n, s);
                if p == 1.0 {
                    n
                } else {
                    let r = p / (1.0 - p);
                    let k = self.inverse_transform((1.0 - p).powf(n as f64), |k, f| {
                        if k >= n {
                            0.0
                        } else {
                            f * (n - k) as f64 / (k + 1) as f64 * r
                        }
                    })?;
                    k.min(n)
                }
            }
            // P(k) = C(k + n - 1, k) (1 - p)^n p^k
            DistExpr::NBinomial(p, n) => {
                let p = self.probability(p)?;
                let n = self.count(n, s);
                if n == 0 {
                    0
                } else {
                    self.inverse_transform((1.0 - p).powf(n as f64), |k, f| f * (k + n) as f64 / (k + 1) as f64 * p)?
                }
            }
        })
    }

    fn exec(&mut self, st: &Stmt, s: &mut ConcreteState) -> Result<(), Stop> {
        match st {
            Stmt::Skip => {}
            Stmt::AssignConst(x, n) => {
                s.insert(x.clone(), *n);
            }
            Stmt::Decr(x) => {
                let v = get(s, x).saturating_sub(1);
                s.insert(x.clone(), v);
            }
            Stmt::IidIncr { x, dist, y } => {
                let mut total = 0u64;
                for _ in 0..get(s, y) {
                    total += self.draw(dist, s)?;
                }
                *s.entry(x.clone()).or_insert(0) += total;
            }
            Stmt::AssignVar(x, y) => {
                let v = get(s, y);
                s.insert(x.clone(), v);
            }
            Stmt::IncrVar(x, y) => {
                let v = get(s, y);
                *s.entry(x.clone()).or_insert(0) += v;
            }
            Stmt::IncrConst(x, n) => *s.entry(x.clone()).or_insert(0) += n,
            Stmt::SubVar(x, y) => {
                let (a, b) = (get(s, x), get(s, y));
                if b > a {
                    return Err(SampleError::NegativeSubtraction { x: x.clone(), y: y.clone() }.into());
                }
                s.insert(x.clone(), a - b);
            }
            Stmt::AssignDist(x, d) => {
                let v = self.draw(d, s)?;
                s.insert(x.clone(), v);
            }
            Stmt::IncrDist(x, d) => {
                let v = self.draw(d, s)?;
                *s.entry(x.clone()).or_insert(0) += v;
            }
            Stmt::IfElse { guard, then, els } => {
                if holds(guard, s) {
                    self.exec(then, s)?
                } else {
                    self.exec(els, s)?
                }
            }
            Stmt::Seq(items) => {
                for i in items {
                    self.exec(i, s)?;
                }
            }
            Stmt::PChoice { left, prob, right } => {
                let p = self.probability(prob)?;
                if self.rng.gen::<f64>() < p {
                    self.exec(left, s)?
                } else {
                    self.exec(right, s)?
                }
            }
            Stmt::Switch { var, cases, default } => {
                let v = get(s, var);
                match cases.iter().find(|(k, _)| *k == v) {
                    Some((_, body)) => self.exec(body, s)?,
                    None => {
                        if let Some(d) = default {
                            self.exec(d, s)?
                        }
                    }
                }
            }
            Stmt::Repeat { n, body } => {
                for _ in 0..*n {
                    self.exec(body, s)?;
                }
            }
            Stmt::While { guard, body, .. } => {
                while holds(guard, s) {
                    self.tick()?;
                    self.exec(body, s)?;
                }
            }
        }
        Ok(())
    }
}

fn holds(g: &Guard, s: &ConcreteState) -> bool {
    g.eval(&|v| get(s, v))
}

fn generator(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// One run of `p` from `init`; variables missing from `init` start at 0.
pub fn run(
    p: &Program,
    init: &ConcreteState,
    params: &BTreeMap<String, Rational>,
    step_cap: u64,
    rng: ChaCha8Rng,
) -> Result<Run, SampleError> {
    let mut s: ConcreteState = p.vars.iter().map(|v| (v.clone(), get(init, v))).collect();
    let mut it = Interp { params, rng, steps: 0, cap: step_cap };
    match it.exec(&p.body, &mut s) {
        Ok(()) => Ok(Run::Done(s)),
        Err(Stop::Timeout) => Ok(Run::Timeout),
        Err(Stop::Err(e)) => Err(e),
    }
}

#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub seed: u64,
    pub samples: u64,
    pub step_cap: u64,
    pub params: BTreeMap<String, Rational>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { seed: 0, samples: DEFAULT_SAMPLES, step_cap: DEFAULT_STEP_CAP, params: BTreeMap::new() }
    }
}

/// Final states of many runs, counted exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tally {
    pub vars: Vec<String>,
    pub counts: BTreeMap<Vec<u64>, u64>,
    pub runs: u64,
    pub timeouts: u64,
}

/// A relative frequency with its standard error `sqrt(f (1 - f) / n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub frequency: Rational,
    pub stderr: f64,
    pub runs: u64,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors; a zero standard error
    /// demands exact agreement.
    pub fn agrees_with(&self, value: &Rational, k: f64) -> bool {
        let diff = (&self.frequency - value).to_f64().expect("finite").abs();
        if self.stderr == 0.0 {
            // frequency 0 or 1 observed; allow the resolution of one run
            diff <= k / self.runs as f64
        } else {
            diff <= k * self.stderr
        }
    }
}

impl Tally {
    pub fn frequency(&self, event: &Guard) -> Estimate {
        let hits: u64 = self
            .counts
            .iter()
            .filter(|(vals, _)| event.eval(&|v| self.vars.iter().position(|w| w == v).map_or(0, |i| vals[i])))
            .map(|(_, c)| c)
            .sum();
        let f = Rational::new(hits.into(), self.runs.max(1).into());
        let ff = f.to_f64().expect("finite");
        Estimate { frequency: f, stderr: (ff * (1.0 - ff) / self.runs.max(1) as f64).sqrt(), runs: self.runs }
    }

    /// Sample mean of a variable over terminated runs, divided by all runs.
    pub fn mean(&self, var: &str) -> f64 {
        let Some(i) = self.vars.iter().position(|w| w == var) else { return 0.0 };
        let total: f64 = self.counts.iter().map(|(vals, c)| vals[i] as f64 * *c as f64).sum();
        total / self.runs.max(1) as f64
    }
}

/// Runs `p` `cfg.samples` times. Fails when more than 1% of the runs time out.
pub fn sample(p: &Program, init: &ConcreteState, cfg: &SampleConfig) -> Result<Tally, SampleError> {
    let mut counts = BTreeMap::new();
    let mut timeouts = 0;
    for i in 0..cfg.samples {
        match run(p, init, &cfg.params, cfg.step_cap, generator(cfg.seed, i))? {
            Run::Done(s) => *counts.entry(p.vars.iter().map(|v| s[v]).collect()).or_insert(0) += 1,
            Run::Timeout => timeouts += 1,
        }
    }
    if timeouts * 100 > cfg.samples {
        return Err(SampleError::TimeoutFractionExceeded { timeouts, runs: cfg.samples });
    }
    Ok(Tally { vars: p.vars.clone(), counts, runs: cfg.samples, timeouts })
}

/// Frequency of `event` over independent runs.
pub fn estimate(p: &Program, init: &ConcreteState, event: &Guard, cfg: &SampleConfig) -> Result<Estimate, SampleError> {
    Ok(sample(p, init, cfg)?.frequency(event))
}
