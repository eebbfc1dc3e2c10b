//! Truncated-execution adequacy: run up to `n` scheduled steps from an
//! initial expression and check the three clauses independently —
//! (1) a value predicate holds on every terminated main value in the
//! support, (2) no thread in any support configuration is stuck, and
//! (3) the expected accumulated cost plus postcondition potential does not
//! exceed the claimed bound.

use num_traits::Zero;
use serde_json::json;
use thiserror::Error;

use super::{expected_post_cost, PostPotential};
use crate::exec::{step_n_limited, Config, ExecError, Scheduler};
use crate::rat::{format_rat, rat_to_f64, Rat};
use crate::semantics::{prim_step, stuck_redex, Heap};
use crate::syntax::{pretty, pretty_val, Expr, Val};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdequacyError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("value predicate is not a pure boolean function: {0}")]
    BadPredicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdequacyReport {
    pub steps: usize,
    pub postcondition_ok: bool,
    /// A terminated main value violating the predicate, pretty-printed.
    pub counterexample: Option<String>,
    pub progress_ok: bool,
    /// A stuck configuration, rendered as thread list plus the stuck redex.
    pub stuck: Option<String>,
    pub expected_cost: Rat,
    pub bound: Rat,
    pub bound_ok: bool,
}

impl AdequacyReport {
    pub fn all_ok(&self) -> bool {
        self.postcondition_ok && self.progress_ok && self.bound_ok
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "steps": self.steps,
            "postcondition_ok": self.postcondition_ok,
            "counterexample": self.counterexample,
            "progress_ok": self.progress_ok,
            "stuck": self.stuck,
            "expected_cost": format_rat(&self.expected_cost),
            "expected_cost_decimal": rat_to_f64(&self.expected_cost),
            "bound": format_rat(&self.bound),
            "bound_ok": self.bound_ok,
            "all_ok": self.all_ok(),
        })
    }
}

/// Evaluates `phi v` by pure reduction in an empty heap. The predicate must
/// reach a boolean without cost, forks, probabilistic branching, or heap
/// effects.
fn eval_pure_predicate(phi: &Expr, v: &Val) -> Result<bool, String> {
    let empty = Heap::new();
    let mut e = Expr::app(phi.clone(), Expr::Val(v.clone()));
    for _ in 0..100_000 {
        if let Some(out) = e.to_val() {
            return match out {
                Val::Bool(b) => Ok(*b),
                other => Err(format!("predicate returned {}", pretty_val(other))),
            };
        }
        let Some(d) = prim_step(&e, &empty) else {
            return Err(format!("predicate got stuck at {}", pretty(&e)));
        };
        if d.len() != 1 {
            return Err("predicate made a probabilistic choice".into());
        }
        let (o, _) = d.iter().next().unwrap();
        if !o.cost.is_zero() || !o.forks.is_empty() || o.heap != empty {
            return Err("predicate is not pure".into());
        }
        e = o.reduct.clone();
    }
    Err("predicate did not terminate".into())
}

/// Runs the three adequacy clauses on the `n`-step truncation of `e` under
/// scheduler `s`: postcondition `phi` (None accepts every value), progress,
/// and `expected_post_cost <= bound`.
pub fn adequacy_check(
    e: &Expr,
    bound: &Rat,
    post: &PostPotential,
    phi: Option<&Expr>,
    n: usize,
    s: &Scheduler,
    max_support: usize,
) -> Result<AdequacyReport, AdequacyError> {
    let mu = step_n_limited(&Config::initial(e.clone()), n, s, max_support)?;

    let mut postcondition_ok = true;
    let mut counterexample = None;
    let mut progress_ok = true;
    let mut stuck = None;
    for (cfg, _) in mu.iter() {
        if let (Some(phi), Some(v)) = (phi, cfg.main_value()) {
            if postcondition_ok {
                match eval_pure_predicate(phi, v) {
                    Ok(true) => {}
                    Ok(false) => {
                        postcondition_ok = false;
                        counterexample = Some(pretty_val(v));
                    }
                    Err(msg) => return Err(AdequacyError::BadPredicate(msg)),
                }
            }
        }
        if progress_ok {
            if let Some(i) = cfg.stuck_threads().next() {
                progress_ok = false;
                let redex = stuck_redex(&cfg.threads[i], &cfg.heap)
                    .map(pretty)
                    .unwrap_or_else(|| "?".into());
                stuck = Some(format!(
                    "thread {i} stuck at `{redex}` in [{}]",
                    cfg.threads.iter().map(pretty).collect::<Vec<_>>().join(", ")
                ));
            }
        }
    }

    let expected_cost = expected_post_cost(&mu, post);
    let bound_ok = expected_cost <= *bound;
    Ok(AdequacyReport {
        steps: n,
        postcondition_ok,
        counterexample,
        progress_ok,
        stuck,
        expected_cost,
        bound: bound.clone(),
        bound_ok,
    })
}
