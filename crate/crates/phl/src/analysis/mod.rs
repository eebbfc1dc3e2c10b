//! Expected-cost analysis: the cost-plus-post functional, truncated
//! adequacy checks, exact expected-total-cost solving on finite graphs,
//! and the potential-certificate checker.

mod adequacy;
mod bound;
mod certificate;
mod solver;

pub use adequacy::{adequacy_check, AdequacyError, AdequacyReport};
pub use bound::{eval_bound, BoundError};
pub use certificate::{
    check_certificate, CertError, CheckReport, PotentialCertificate, Violation,
};
pub use solver::{solve_expected_cost, NodeCost, SolveError};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::exec::Config;
use crate::rat::{is_nonneg, serde_rat, Rat};
use crate::syntax::Val;

/// A value-indexed nonnegative potential: ordered exact-value cases with a
/// default, so it is total on all values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostPotential {
    cases: Vec<(Val, Rat)>,
    default: Rat,
}

impl PostPotential {
    pub fn new(cases: Vec<(Val, Rat)>, default: Rat) -> Result<PostPotential, String> {
        if !is_nonneg(&default) || cases.iter().any(|(_, r)| !is_nonneg(r)) {
            return Err("potentials must be nonnegative".into());
        }
        Ok(PostPotential { cases, default })
    }

    /// The constant-zero potential.
    pub fn zero() -> PostPotential {
        PostPotential { cases: Vec::new(), default: Rat::zero() }
    }

    pub fn constant(r: Rat) -> Result<PostPotential, String> {
        PostPotential::new(Vec::new(), r)
    }

    pub fn eval(&self, v: &Val) -> &Rat {
        self.cases
            .iter()
            .find(|(pat, _)| pat == v)
            .map(|(_, r)| r)
            .unwrap_or(&self.default)
    }

    pub fn cases(&self) -> &[(Val, Rat)] {
        &self.cases
    }

    pub fn default_value(&self) -> &Rat {
        &self.default
    }
}

/// Expected value, over a configuration distribution, of accumulated cost
/// plus the postcondition potential of the main thread's value (the
/// potential applies only when the main thread has terminated).
pub fn expected_post_cost(mu: &Dist<Config>, post: &PostPotential) -> Rat {
    mu.expect(|c| match c.main_value() {
        Some(v) => &c.cost + post.eval(v),
        None => c.cost.clone(),
    })
}

/// Total-expectation composition: given the per-fiber premise
/// `expected_post_cost(kappa(x), post) <= pvec(x) + cost(x)` for all `x` in
/// the support of `mu`, the conclusion
/// `expected_post_cost(bind(mu, kappa), post) <= E[cost] + E[pvec]`
/// holds. This function evaluates the conclusion inequality.
pub fn composition_check(
    mu: &Dist<Config>,
    mut kappa: impl FnMut(&Config) -> Dist<Config>,
    mut pvec: impl FnMut(&Config) -> Rat,
    post: &PostPotential,
) -> bool {
    let composed = mu.bind(&mut kappa);
    let lhs = expected_post_cost(&composed, post);
    let rhs = mu.expect(|c| c.cost.clone()) + mu.expect(&mut pvec);
    lhs <= rhs
}

/// Report serialization helper: a rational as an exact string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatStr(#[serde(with = "serde_rat")] pub Rat);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Config;
    use crate::rat::{rat, rat_int};
    use crate::syntax::Expr;

    fn done(cost: i64) -> Config {
        Config { threads: vec![Expr::unit()], heap: Default::default(), cost: rat_int(cost) }
    }

    fn running(cost: i64) -> Config {
        Config {
            threads: vec![Expr::Tick(Box::new(Expr::int(1)))],
            heap: Default::default(),
            cost: rat_int(cost),
        }
    }

    #[test]
    fn post_cost_on_dirac() {
        let mu = Dist::dirac(done(3));
        assert_eq!(expected_post_cost(&mu, &PostPotential::zero()), rat_int(3));
    }

    #[test]
    fn post_applies_to_main_value_only() {
        // {(main terminated, cost 1): 1/2, (running, cost 1): 1/2}, post(()) = 4
        // => 1*1 + 1/2*4 = 3
        let mu = Dist::from_uniform([done(1), running(1)]).unwrap();
        let post = PostPotential::new(vec![(crate::syntax::Val::Unit, rat_int(4))], rat_int(0))
            .unwrap();
        assert_eq!(expected_post_cost(&mu, &post), rat_int(3));
    }

    #[test]
    fn zero_steps_zero_cost() {
        let mu = Dist::dirac(running(0));
        assert_eq!(expected_post_cost(&mu, &PostPotential::zero()), rat_int(0));
    }

    #[test]
    fn negative_potentials_are_rejected() {
        assert!(PostPotential::constant(rat(-1, 2)).is_err());
        assert!(PostPotential::new(vec![(Val::Unit, rat_int(-1))], rat_int(0)).is_err());
    }

    #[test]
    fn composition_on_dirac_reduces_to_single_fiber() {
        let x = done(2);
        let kappa = |_: &Config| Dist::dirac(done(5));
        let post = PostPotential::zero();
        // premise with equality: pvec(x) = pcost(kappa(x)) - cost(x) = 5 - 2
        assert!(composition_check(&Dist::dirac(x), kappa, |_| rat_int(3), &post));
    }
}
