//! Finite-support discrete probability distributions with exact rational
//! masses, plus the monadic operations the small-step semantics is built
//! from.
//!
//! Invariants maintained by every constructor:
//! * every stored mass is strictly positive,
//! * masses sum to exactly 1 (rational equality, no tolerance),
//! * the support iterates in a canonical order: first occurrence wins.

use std::collections::HashMap;
use std::hash::Hash;

use num_traits::{One, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::rat::{format_rat, Rat};

/// A probability in `(0, 1]`, exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prob(Rat);

impl Prob {
    pub fn new(r: Rat) -> Result<Prob, DistError> {
        if r <= Rat::zero() || r > Rat::one() {
            return Err(DistError::InvalidProbability(format_rat(&r)));
        }
        Ok(Prob(r))
    }

    pub fn as_rat(&self) -> &Rat {
        &self.0
    }

    pub fn into_rat(self) -> Rat {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("cannot choose from an empty collection")]
    EmptyChoice,
    #[error("weight `{0}` is not strictly positive")]
    NonPositiveWeight(String),
    #[error("probability `{0}` outside (0, 1]")]
    InvalidProbability(String),
}

/// A finite-support distribution over `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dist<T> {
    entries: Vec<(T, Prob)>,
}

/// Accumulates `(element, mass)` pairs, merging duplicates by summing.
struct Accum<T> {
    entries: Vec<(T, Rat)>,
    index: HashMap<T, usize>,
}

impl<T: Eq + Hash + Clone> Accum<T> {
    fn new() -> Self {
        Accum { entries: Vec::new(), index: HashMap::new() }
    }

    fn push(&mut self, x: T, mass: Rat) {
        if let Some(&i) = self.index.get(&x) {
            self.entries[i].1 += mass;
        } else {
            self.index.insert(x.clone(), self.entries.len());
            self.entries.push((x, mass));
        }
    }

    fn finish(self) -> Dist<T> {
        let mut total = Rat::zero();
        let mut entries = Vec::with_capacity(self.entries.len());
        for (x, mass) in self.entries {
            total += &mass;
            entries.push((x, Prob(mass)));
        }
        debug_assert!(total.is_one(), "distribution masses must sum to 1");
        Dist { entries }
    }
}

impl<T: Eq + Hash + Clone> Dist<T> {
    /// The distribution placing mass 1 on `x`.
    pub fn dirac(x: T) -> Dist<T> {
        Dist { entries: vec![(x, Prob(Rat::one()))] }
    }

    /// Uniform choice over a nonempty list. Duplicate elements are merged by
    /// summing their per-index masses.
    pub fn from_uniform(items: impl IntoIterator<Item = T>) -> Result<Dist<T>, DistError> {
        let items: Vec<T> = items.into_iter().collect();
        if items.is_empty() {
            return Err(DistError::EmptyChoice);
        }
        let share = Rat::new(1.into(), (items.len() as i64).into());
        let mut acc = Accum::new();
        for x in items {
            acc.push(x, share.clone());
        }
        Ok(acc.finish())
    }

    /// Weighted choice: element probability is its total weight divided by
    /// the sum of all weights. Every weight must be strictly positive.
    pub fn from_weighted(pairs: impl IntoIterator<Item = (Rat, T)>) -> Result<Dist<T>, DistError> {
        let pairs: Vec<(Rat, T)> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return Err(DistError::EmptyChoice);
        }
        let mut total = Rat::zero();
        for (w, _) in &pairs {
            if *w <= Rat::zero() {
                return Err(DistError::NonPositiveWeight(format_rat(w)));
            }
            total += w;
        }
        let mut acc = Accum::new();
        for (w, x) in pairs {
            acc.push(x, w / &total);
        }
        Ok(acc.finish())
    }

    /// Sequential composition: run `self`, then the continuation `k` on each
    /// outcome; probabilities multiply and collided outcomes merge.
    pub fn bind<U: Eq + Hash + Clone>(&self, mut k: impl FnMut(&T) -> Dist<U>) -> Dist<U> {
        let mut acc = Accum::new();
        for (x, p) in &self.entries {
            for (y, q) in &k(x).entries {
                acc.push(y.clone(), p.as_rat() * q.as_rat());
            }
        }
        acc.finish()
    }

    /// Pushforward along `f`; masses of collided images are summed.
    pub fn map<U: Eq + Hash + Clone>(&self, mut f: impl FnMut(&T) -> U) -> Dist<U> {
        if self.entries.len() == 1 {
            let (x, p) = &self.entries[0];
            return Dist { entries: vec![(f(x), p.clone())] };
        }
        let mut acc = Accum::new();
        for (x, p) in &self.entries {
            acc.push(f(x), p.as_rat().clone());
        }
        acc.finish()
    }

    /// Consuming pushforward; avoids cloning the elements.
    pub fn map_into<U: Eq + Hash + Clone>(self, mut f: impl FnMut(T) -> U) -> Dist<U> {
        if self.entries.len() == 1 {
            let (x, p) = self.entries.into_iter().next().unwrap();
            return Dist { entries: vec![(f(x), p)] };
        }
        let mut acc = Accum::new();
        for (x, p) in self.entries {
            acc.push(f(x), p.into_rat());
        }
        acc.finish()
    }

    /// Exact expectation of `f` under the distribution.
    pub fn expect(&self, mut f: impl FnMut(&T) -> Rat) -> Rat {
        let mut sum = Rat::zero();
        for (x, p) in &self.entries {
            sum += f(x) * p.as_rat();
        }
        sum
    }

    /// Probability of `x` (zero when outside the support).
    pub fn prob(&self, x: &T) -> Rat {
        self.entries
            .iter()
            .find(|(y, _)| y == x)
            .map(|(_, p)| p.as_rat().clone())
            .unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Prob)> {
        self.entries.iter().map(|(x, p)| (x, p))
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|(x, _)| x)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Always exactly 1; exposed so tests can state the invariant directly.
    pub fn total_mass(&self) -> Rat {
        self.entries.iter().map(|(_, p)| p.as_rat()).sum()
    }
}

impl<T: Serialize> Serialize for Dist<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a, T> {
            elem: &'a T,
            num: String,
            den: String,
        }
        let mut seq = serializer.serialize_seq(Some(self.entries.len()))?;
        for (x, p) in &self.entries {
            seq.serialize_element(&Entry {
                elem: x,
                num: p.as_rat().numer().to_string(),
                den: p.as_rat().denom().to_string(),
            })?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};
    use proptest::prelude::*;

    #[test]
    fn dirac_basics() {
        let d = Dist::dirac(5);
        assert_eq!(d.len(), 1);
        assert_eq!(d.prob(&5), rat_int(1));
        // bind left unit and single-point expectation
        let bound = d.bind(|x| Dist::dirac(x + 1));
        assert_eq!(bound, Dist::dirac(6));
        assert_eq!(d.expect(|x| rat_int(*x * 10)), rat_int(50));
    }

    #[test]
    fn uniform_merges_duplicates() {
        let d = Dist::from_uniform(["a", "b", "c"]).unwrap();
        assert_eq!(d.prob(&"a"), rat(1, 3));
        let single = Dist::from_uniform(["a"]).unwrap();
        assert_eq!(single, Dist::dirac("a"));
        // per-index masses 1/3 merged by equality
        let dup = Dist::from_uniform(["a", "a", "b"]).unwrap();
        assert_eq!(dup.prob(&"a"), rat(2, 3));
        assert_eq!(dup.prob(&"b"), rat(1, 3));
        assert_eq!(Dist::<u8>::from_uniform([]), Err(DistError::EmptyChoice));
    }

    #[test]
    fn weighted_normalizes() {
        let d = Dist::from_weighted([(rat_int(1), "a"), (rat_int(3), "b")]).unwrap();
        assert_eq!(d.prob(&"a"), rat(1, 4));
        assert_eq!(d.prob(&"b"), rat(3, 4));
        let single = Dist::from_weighted([(rat_int(7), "a")]).unwrap();
        assert_eq!(single, Dist::dirac("a"));
        let merged = Dist::from_weighted([(rat(1, 2), "a"), (rat(1, 2), "a")]).unwrap();
        assert_eq!(merged, Dist::dirac("a"));
        assert!(matches!(
            Dist::from_weighted([(rat_int(0), "a")]),
            Err(DistError::NonPositiveWeight(_))
        ));
        assert_eq!(
            Dist::<u8>::from_weighted(Vec::<(Rat, u8)>::new()),
            Err(DistError::EmptyChoice)
        );
    }

    #[test]
    fn bind_convolution_by_hand() {
        // bind({a: 1/2, b: 1/2}, a -> dirac(0), b -> {0: 1/2, 1: 1/2})
        //   = {0: 3/4, 1: 1/4}
        let mu = Dist::from_uniform(["a", "b"]).unwrap();
        let out = mu.bind(|x| {
            if *x == "a" {
                Dist::dirac(0)
            } else {
                Dist::from_uniform([0, 1]).unwrap()
            }
        });
        assert_eq!(out.prob(&0), rat(3, 4));
        assert_eq!(out.prob(&1), rat(1, 4));
    }

    #[test]
    fn coin_expectation() {
        // 1/2 * 0 + 1/2 * 2 = 1
        let mu = Dist::from_uniform(["h", "t"]).unwrap();
        let e = mu.expect(|x| if *x == "h" { rat_int(0) } else { rat_int(2) });
        assert_eq!(e, rat_int(1));
    }

    #[test]
    fn map_collision_sums_masses() {
        let d = Dist::from_uniform([1i64, 2]).unwrap();
        let m = d.map(|x| x % 2);
        assert_eq!(m.prob(&1), rat(1, 2));
        assert_eq!(m.prob(&0), rat(1, 2));
        let d = Dist::from_uniform([1i64, 3]).unwrap();
        assert_eq!(d.map(|x| x % 2), Dist::dirac(1));
    }

    /// Arbitrary small distribution over 0..=7 via positive weights.
    fn arb_dist() -> impl Strategy<Value = Dist<u8>> {
        prop::collection::vec((0u8..8, 1u32..20), 1..6).prop_map(|pairs| {
            Dist::from_weighted(
                pairs.into_iter().map(|(x, w)| (rat_int(w as i64), x)),
            )
            .unwrap()
        })
    }

    fn arb_kernel() -> impl Strategy<Value = Vec<Dist<u8>>> {
        prop::collection::vec(arb_dist(), 8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn mass_and_positivity(d in arb_dist()) {
            prop_assert_eq!(d.total_mass(), rat_int(1));
            for (_, p) in d.iter() {
                prop_assert!(*p.as_rat() > rat_int(0));
            }
        }

        #[test]
        fn monad_left_unit(x in 0u8..8, k in arb_kernel()) {
            let lhs = Dist::dirac(x).bind(|v| k[*v as usize].clone());
            prop_assert_eq!(lhs, k[x as usize].clone());
        }

        #[test]
        fn monad_right_unit(d in arb_dist()) {
            prop_assert_eq!(d.bind(|x| Dist::dirac(*x)), d);
        }

        #[test]
        fn monad_assoc(d in arb_dist(), k1 in arb_kernel(), k2 in arb_kernel()) {
            let lhs = d.bind(|x| k1[*x as usize].clone()).bind(|y| k2[*y as usize].clone());
            let rhs = d.bind(|x| k1[*x as usize].bind(|y| k2[*y as usize].clone()));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn map_bind_preserve_mass(d in arb_dist(), k in arb_kernel()) {
            prop_assert_eq!(d.map(|x| x / 2).total_mass(), rat_int(1));
            prop_assert_eq!(d.bind(|x| k[*x as usize].clone()).total_mass(), rat_int(1));
        }

        #[test]
        fn map_identity(d in arb_dist()) {
            prop_assert_eq!(d.map(|x| *x), d);
        }

        #[test]
        fn expect_linear(d in arb_dist(), a in -5i64..5, b in -5i64..5) {
            let f = |x: &u8| rat_int(*x as i64);
            let g = |x: &u8| rat_int((*x as i64) * (*x as i64));
            let lhs = d.expect(|x| rat_int(a) * f(x) + rat_int(b) * g(x));
            let rhs = rat_int(a) * d.expect(f) + rat_int(b) * d.expect(g);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn expect_monotone(d in arb_dist(), bump in prop::collection::vec(0i64..4, 8)) {
            let f = |x: &u8| rat_int(*x as i64);
            let g = |x: &u8| rat_int(*x as i64 + bump[*x as usize]);
            prop_assert!(d.expect(f) <= d.expect(g));
        }
    }
}
