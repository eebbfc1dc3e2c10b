//! Reproducible seeded Monte Carlo estimation of expected cost.
//!
//! Sampling uses a counter-based generator: output `i` of stream `t` under
//! seed `s` is a bit-mix of `(s, t, i)`, so trials are independent streams
//! and a report is a pure function of its inputs. Each probabilistic step
//! resolves by inverse-CDF sampling over the distribution's canonical
//! support order, comparing an exact dyadic rational draw against exact
//! cumulative masses.
//!
//! Runs truncated at `max_steps` contribute their cost so far, which
//! biases the estimator downward (never upward) for nonnegative residual
//! cost.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::dist::Dist;
use crate::exec::{Config, Scheduler};
use crate::rat::{format_rat, rat_to_f64, Rat};
use crate::syntax::{pretty, Expr};

/// Counter-based deterministic generator (splitmix-style finalizer).
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl CounterRng {
    /// Stream `stream` of seed `seed`; distinct trials use distinct streams.
    pub fn new(seed: u64, stream: u64) -> CounterRng {
        let key = mix64(seed ^ mix64(stream.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1)));
        CounterRng { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key.wrapping_add(self.counter.wrapping_mul(0x9e3779b97f4a7c15)));
        self.counter += 1;
        out
    }

    /// An exact dyadic rational uniform on [0, 1) with 53 random bits.
    pub fn next_unit(&mut self) -> Rat {
        let bits = self.next_u64() >> 11;
        Rat::new(BigInt::from(bits), BigInt::from(1u64 << 53))
    }
}

/// Picks one element by inverse CDF over the canonical support order.
fn sample_from<'a, T: Eq + std::hash::Hash + Clone>(d: &'a Dist<T>, rng: &mut CounterRng) -> &'a T {
    let u = rng.next_unit();
    let mut cum = Rat::zero();
    let mut last = None;
    for (x, p) in d.iter() {
        cum += p.as_rat();
        last = Some(x);
        if u < cum {
            return x;
        }
    }
    last.expect("distributions are nonempty")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub config: Config,
    pub terminated: bool,
    pub stuck: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub thread: usize,
    pub redex: String,
    pub cost: String,
}

/// One seeded execution path, following the scheduler and resolving each
/// step distribution deterministically from the seed.
pub fn sample_run(e: &Expr, seed: u64, max_steps: usize, s: &Scheduler) -> RunResult {
    sample_run_stream(e, seed, 0, max_steps, s, None)
}

/// As `sample_run`, also recording a per-step trace.
pub fn sample_run_trace(
    e: &Expr,
    seed: u64,
    max_steps: usize,
    s: &Scheduler,
) -> (RunResult, Vec<TraceStep>) {
    let mut trace = Vec::new();
    let result = sample_run_stream(e, seed, 0, max_steps, s, Some(&mut trace));
    (result, trace)
}

fn sample_run_stream(
    e: &Expr,
    seed: u64,
    stream: u64,
    max_steps: usize,
    s: &Scheduler,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> RunResult {
    let mut rng = CounterRng::new(seed, stream);
    let mut cfg = Config::initial(e.clone());
    for step in 0..max_steps {
        // step the first reducible thread in scheduler preference order;
        // sampling from the outcome distribution matches sampling from the
        // configuration distribution (distinct outcomes yield distinct
        // configurations, in the same canonical order)
        let mut stepped = None;
        for i in s.preference(&cfg, step) {
            if let Some(d) = crate::semantics::prim_step(&cfg.threads[i], &cfg.heap) {
                stepped = Some((i, d));
                break;
            }
        }
        let Some((thread, outcomes)) = stepped else {
            return RunResult {
                terminated: cfg.is_terminal(),
                stuck: cfg.has_stuck_thread(),
                config: cfg,
                steps: step,
            };
        };
        let chosen = sample_from(&outcomes, &mut rng);
        if let Some(t) = trace.as_deref_mut() {
            let redex = crate::semantics::find_redex(&cfg.threads[thread])
                .map(|(_, r)| pretty(r))
                .unwrap_or_default();
            t.push(TraceStep {
                step,
                thread,
                redex,
                cost: format_rat(&chosen.cost),
            });
        }
        cfg.threads[thread] = chosen.reduct.clone();
        cfg.threads.extend(chosen.forks.iter().cloned());
        cfg.heap = chosen.heap.clone();
        cfg.cost += &chosen.cost;
    }
    let terminated = cfg.is_terminal();
    let stuck = !terminated && cfg.reducible_threads().is_empty() && cfg.has_stuck_thread();
    RunResult { terminated, stuck, config: cfg, steps: max_steps }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub trials: usize,
    pub mean_cost: f64,
    pub sample_stddev: f64,
    pub ci95: (f64, f64),
    pub truncated_fraction: f64,
    pub seed: u64,
    pub max_steps: usize,
}

impl McReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McError {
    #[error("need at least 2 trials, got {0}")]
    TooFewTrials(usize),
}

/// Estimates expected cost over independent seeded trials. Costs accumulate
/// as exact rationals and convert to floats once; the 95% confidence
/// interval uses the normal approximation.
pub fn estimate(
    e: &Expr,
    trials: usize,
    seed: u64,
    max_steps: usize,
    s: &Scheduler,
) -> Result<McReport, McError> {
    if trials < 2 {
        return Err(McError::TooFewTrials(trials));
    }
    let mut sum = Rat::zero();
    let mut sum_sq = Rat::zero();
    let mut truncated = 0usize;
    for trial in 0..trials {
        let run = sample_run_stream(e, seed, trial as u64, max_steps, s, None);
        if !run.terminated && !run.stuck {
            truncated += 1;
        }
        sum += &run.config.cost;
        sum_sq += &run.config.cost * &run.config.cost;
    }
    let n = Rat::from_integer(BigInt::from(trials));
    let mean = &sum / &n;
    let variance = if trials > 1 {
        let centered = &sum_sq - &mean * &sum;
        centered / Rat::from_integer(BigInt::from(trials - 1))
    } else {
        Rat::zero()
    };
    let mean_cost = rat_to_f64(&mean);
    let sample_stddev = rat_to_f64(&variance).max(0.0).sqrt();
    let half_width = 1.96 * sample_stddev / (trials as f64).sqrt();
    Ok(McReport {
        trials,
        mean_cost,
        sample_stddev,
        ci95: (mean_cost - half_width, mean_cost + half_width),
        truncated_fraction: truncated as f64 / trials as f64,
        seed,
        max_steps,
    })
}
