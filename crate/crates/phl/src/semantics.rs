//! Single-thread primitive reduction: for an expression and heap, the
//! distribution over (reduct, heap, step cost, forked threads).
//!
//! `head_step` covers head redexes only; `prim_step` decomposes the
//! expression into an evaluation context and a head redex first. Subterms
//! evaluate right to left. Anything without an applicable rule is stuck,
//! signalled by `None` — no exceptions, no panics.
//!
//! Semantic choices on top of the usual heap-language rules:
//! * `/` is exact rational division and always yields a rational value;
//!   division by zero is stuck.
//! * Arithmetic and comparisons mix integers and rationals by coercing the
//!   integer side. Integer-only operations (`FAA`, location offsets) stay
//!   integral; i64 overflow is stuck.
//! * `=` is structural equality over closure-free values, with numeric
//!   equality across the two numeric types; comparing a closure is stuck.
//! * `tick` requires a nonnegative numeric argument; only `tick` emits
//!   nonzero cost, only `fork` emits forked threads, and only the two
//!   choice primitives emit non-Dirac distributions.

use num_traits::Zero;
use serde_json::json;

use crate::dist::Dist;
use crate::rat::{rat_int, Rat};
use crate::syntax::{
    pretty, pretty_val, subst_binder, BinOp, Expr, Loc, UnOp, Val,
};

use std::collections::BTreeMap;

/// Heap cells plus the allocation counter for fresh bases.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Heap {
    cells: BTreeMap<Loc, Val>,
    next_base: u64,
}

impl Heap {
    pub fn new() -> Heap {
        Heap::default()
    }

    pub fn get(&self, l: &Loc) -> Option<&Val> {
        self.cells.get(l)
    }

    pub fn contains(&self, l: &Loc) -> bool {
        self.cells.contains_key(l)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Loc, &Val)> {
        self.cells.iter()
    }

    pub fn next_base(&self) -> u64 {
        self.next_base
    }

    /// Allocates `n >= 1` contiguous cells holding `v` at a fresh base and
    /// returns the location of offset 0.
    pub fn alloc_n(&self, n: i64, v: &Val) -> Option<(Heap, Loc)> {
        if n < 1 {
            return None;
        }
        let mut h = self.clone();
        let base = h.next_base;
        h.next_base += 1;
        for off in 0..n {
            h.cells.insert(Loc { base, offset: off }, v.clone());
        }
        Some((h, Loc { base, offset: 0 }))
    }

    pub fn store(&self, l: Loc, v: Val) -> Option<Heap> {
        if !self.cells.contains_key(&l) {
            return None;
        }
        let mut h = self.clone();
        h.cells.insert(l, v);
        Some(h)
    }

    pub fn free(&self, l: Loc) -> Option<Heap> {
        if !self.cells.contains_key(&l) {
            return None;
        }
        let mut h = self.clone();
        h.cells.remove(&l);
        Some(h)
    }

    /// Rebuilds the heap with renamed locations and an explicit counter.
    pub(crate) fn rebuild(
        cells: BTreeMap<Loc, Val>,
        next_base: u64,
    ) -> Heap {
        Heap { cells, next_base }
    }
}

/// One outcome of a primitive step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepOutcome {
    pub reduct: Expr,
    pub heap: Heap,
    pub cost: Rat,
    pub forks: Vec<Expr>,
}

impl StepOutcome {
    fn pure(reduct: Expr, heap: &Heap) -> StepOutcome {
        StepOutcome { reduct, heap: heap.clone(), cost: Rat::zero(), forks: Vec::new() }
    }
}

fn dirac_pure(reduct: Expr, heap: &Heap) -> Option<Dist<StepOutcome>> {
    Some(Dist::dirac(StepOutcome::pure(reduct, heap)))
}

fn dirac_heap(reduct: Expr, heap: Heap) -> Option<Dist<StepOutcome>> {
    Some(Dist::dirac(StepOutcome { reduct, heap, cost: Rat::zero(), forks: Vec::new() }))
}

/// Numeric view of a value pair after coercion.
enum Nums {
    Ints(i64, i64),
    Rats(Rat, Rat),
}

fn as_rat(v: &Val) -> Option<Rat> {
    match v {
        Val::Int(n) => Some(rat_int(*n)),
        Val::Rat(r) => Some(r.clone()),
        _ => None,
    }
}

fn numeric_pair(a: &Val, b: &Val) -> Option<Nums> {
    match (a, b) {
        (Val::Int(x), Val::Int(y)) => Some(Nums::Ints(*x, *y)),
        _ => Some(Nums::Rats(as_rat(a)?, as_rat(b)?)),
    }
}

/// Structural equality over closure-free values, numeric across the two
/// numeric types. `None` means the comparison itself is undefined.
fn val_eq(a: &Val, b: &Val) -> Option<bool> {
    if !a.is_comparable() || !b.is_comparable() {
        return None;
    }
    fn go(a: &Val, b: &Val) -> bool {
        match (a, b) {
            (Val::Int(_) | Val::Rat(_), Val::Int(_) | Val::Rat(_)) => {
                as_rat(a).unwrap() == as_rat(b).unwrap()
            }
            (Val::Unit, Val::Unit) => true,
            (Val::Bool(x), Val::Bool(y)) => x == y,
            (Val::Loc(x), Val::Loc(y)) => x == y,
            (Val::List(xs), Val::List(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y))
            }
            (Val::Pair(x1, x2), Val::Pair(y1, y2)) => go(x1, y1) && go(x2, y2),
            (Val::Inl(x), Val::Inl(y)) | (Val::Inr(x), Val::Inr(y)) => go(x, y),
            _ => false,
        }
    }
    Some(go(a, b))
}

fn eval_unop(op: UnOp, v: &Val) -> Option<Val> {
    match (op, v) {
        (UnOp::Neg, Val::Int(n)) => Some(Val::Int(n.checked_neg()?)),
        (UnOp::Neg, Val::Rat(r)) => Some(Val::Rat(-r.clone())),
        (UnOp::Head, Val::List(vs)) => vs.first().cloned(),
        (UnOp::Tail, Val::List(vs)) => {
            let (_, rest) = vs.split_first()?;
            Some(Val::List(rest.to_vec()))
        }
        (UnOp::Length, Val::List(vs)) => Some(Val::Int(vs.len() as i64)),
        _ => None,
    }
}

fn eval_binop(op: BinOp, a: &Val, b: &Val) -> Option<Val> {
    match op {
        BinOp::Add => {
            // location offset arithmetic: l + i
            if let (Val::Loc(l), Val::Int(i)) = (a, b) {
                return Some(Val::Loc(l.shifted(*i)?));
            }
            match numeric_pair(a, b)? {
                Nums::Ints(x, y) => Some(Val::Int(x.checked_add(y)?)),
                Nums::Rats(x, y) => Some(Val::Rat(x + y)),
            }
        }
        BinOp::Sub => match numeric_pair(a, b)? {
            Nums::Ints(x, y) => Some(Val::Int(x.checked_sub(y)?)),
            Nums::Rats(x, y) => Some(Val::Rat(x - y)),
        },
        BinOp::Mul => match numeric_pair(a, b)? {
            Nums::Ints(x, y) => Some(Val::Int(x.checked_mul(y)?)),
            Nums::Rats(x, y) => Some(Val::Rat(x * y)),
        },
        BinOp::Div => {
            let (x, y) = (as_rat(a)?, as_rat(b)?);
            if y.is_zero() {
                None
            } else {
                Some(Val::Rat(x / y))
            }
        }
        BinOp::Lt | BinOp::Le => {
            let holds = match numeric_pair(a, b)? {
                Nums::Ints(x, y) => {
                    if op == BinOp::Lt {
                        x < y
                    } else {
                        x <= y
                    }
                }
                Nums::Rats(x, y) => {
                    if op == BinOp::Lt {
                        x < y
                    } else {
                        x <= y
                    }
                }
            };
            Some(Val::Bool(holds))
        }
        BinOp::Eq => Some(Val::Bool(val_eq(a, b)?)),
        BinOp::And | BinOp::Or => match (a, b) {
            (Val::Bool(x), Val::Bool(y)) => {
                Some(Val::Bool(if op == BinOp::And { *x && *y } else { *x || *y }))
            }
            _ => None,
        },
        BinOp::Cons => match b {
            Val::List(vs) => {
                let mut out = Vec::with_capacity(vs.len() + 1);
                out.push(a.clone());
                out.extend(vs.iter().cloned());
                Some(Val::List(out))
            }
            _ => None,
        },
    }
}

/// Reduction of a head redex: every evaluation-position subterm must
/// already be a value. `None` means no rule applies (stuck), including for
/// expressions that are not head redexes at all.
pub fn head_step(e: &Expr, h: &Heap) -> Option<Dist<StepOutcome>> {
    match e {
        Expr::Val(_) | Expr::Var(_) => None,
        Expr::Rec { fname, arg, body } => {
            let v = Val::closure(fname.clone(), arg.clone(), body.as_ref().clone()).ok()?;
            dirac_pure(Expr::Val(v), h)
        }
        Expr::App(f, a) => {
            let (fv, av) = (f.to_val()?, a.to_val()?);
            let Val::Closure { fname, arg, body } = fv else { return None };
            let applied = subst_binder(body, arg, av);
            let unrolled = subst_binder(&applied, fname, fv);
            dirac_pure(unrolled, h)
        }
        Expr::UnOp(op, a) => dirac_pure(Expr::Val(eval_unop(*op, a.to_val()?)?), h),
        Expr::BinOp(op, a, b) => {
            dirac_pure(Expr::Val(eval_binop(*op, a.to_val()?, b.to_val()?)?), h)
        }
        Expr::If(c, t, e2) => match c.to_val()? {
            Val::Bool(true) => dirac_pure(t.as_ref().clone(), h),
            Val::Bool(false) => dirac_pure(e2.as_ref().clone(), h),
            _ => None,
        },
        Expr::Pair(a, b) => {
            let v = Val::Pair(Box::new(a.to_val()?.clone()), Box::new(b.to_val()?.clone()));
            dirac_pure(Expr::Val(v), h)
        }
        Expr::Fst(a) => match a.to_val()? {
            Val::Pair(x, _) => dirac_pure(Expr::Val(x.as_ref().clone()), h),
            _ => None,
        },
        Expr::Snd(a) => match a.to_val()? {
            Val::Pair(_, y) => dirac_pure(Expr::Val(y.as_ref().clone()), h),
            _ => None,
        },
        Expr::Inl(a) => dirac_pure(Expr::Val(Val::Inl(Box::new(a.to_val()?.clone()))), h),
        Expr::Inr(a) => dirac_pure(Expr::Val(Val::Inr(Box::new(a.to_val()?.clone()))), h),
        Expr::Match { scrut, left, right } => match scrut.to_val()? {
            Val::Inl(v) => dirac_pure(subst_binder(&left.1, &left.0, v), h),
            Val::Inr(v) => dirac_pure(subst_binder(&right.1, &right.0, v), h),
            _ => None,
        },
        Expr::AllocN(n, v) => {
            let Val::Int(n) = n.to_val()? else { return None };
            let (h2, l) = h.alloc_n(*n, v.to_val()?)?;
            dirac_heap(Expr::Val(Val::Loc(l)), h2)
        }
        Expr::Free(a) => {
            let Val::Loc(l) = a.to_val()? else { return None };
            dirac_heap(Expr::unit(), h.free(*l)?)
        }
        Expr::Load(a) => {
            let Val::Loc(l) = a.to_val()? else { return None };
            dirac_pure(Expr::Val(h.get(l)?.clone()), h)
        }
        Expr::Store(a, b) => {
            let Val::Loc(l) = a.to_val()? else { return None };
            dirac_heap(Expr::unit(), h.store(*l, b.to_val()?.clone())?)
        }
        Expr::CmpXchg(a, expected, new) => {
            let Val::Loc(l) = a.to_val()? else { return None };
            let old = h.get(l)?.clone();
            let succeeded = val_eq(&old, expected.to_val()?)?;
            let h2 = if succeeded { h.store(*l, new.to_val()?.clone())? } else { h.clone() };
            let result = Val::Pair(Box::new(old), Box::new(Val::Bool(succeeded)));
            dirac_heap(Expr::Val(result), h2)
        }
        Expr::Xchg(a, b) => {
            let Val::Loc(l) = a.to_val()? else { return None };
            let old = h.get(l)?.clone();
            dirac_heap(Expr::Val(old), h.store(*l, b.to_val()?.clone())?)
        }
        Expr::Faa(a, b) => {
            let Val::Loc(l) = a.to_val()? else { return None };
            let Val::Int(delta) = b.to_val()? else { return None };
            let Val::Int(old) = h.get(l)?.clone() else { return None };
            let h2 = h.store(*l, Val::Int(old.checked_add(*delta)?))?;
            dirac_heap(Expr::Val(Val::Int(old)), h2)
        }
        Expr::Fork(body) => Some(Dist::dirac(StepOutcome {
            reduct: Expr::unit(),
            heap: h.clone(),
            cost: Rat::zero(),
            forks: vec![body.as_ref().clone()],
        })),
        Expr::Tick(a) => {
            let cost = as_rat(a.to_val()?)?;
            if cost < Rat::zero() {
                return None;
            }
            Some(Dist::dirac(StepOutcome {
                reduct: Expr::unit(),
                heap: h.clone(),
                cost,
                forks: Vec::new(),
            }))
        }
        Expr::ChooseUniform(a) => {
            let Val::List(vs) = a.to_val()? else { return None };
            let outcomes = vs.iter().map(|v| StepOutcome::pure(Expr::Val(v.clone()), h));
            Dist::from_uniform(outcomes).ok()
        }
        Expr::ChooseWeighted(a) => {
            let Val::List(vs) = a.to_val()? else { return None };
            let mut pairs = Vec::with_capacity(vs.len());
            for v in vs {
                let Val::Pair(w, out) = v else { return None };
                let w = as_rat(w)?;
                if w <= Rat::zero() {
                    return None;
                }
                pairs.push((w, StepOutcome::pure(Expr::Val(out.as_ref().clone()), h)));
            }
            Dist::from_weighted(pairs).ok()
        }
    }
}

/// The evaluation-position children of an expression, rightmost first.
/// `Fork` and the bodies of binders are not evaluation positions.
fn eval_children(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::App(f, a) => vec![a, f],
        Expr::UnOp(_, a)
        | Expr::Fst(a)
        | Expr::Snd(a)
        | Expr::Inl(a)
        | Expr::Inr(a)
        | Expr::Free(a)
        | Expr::Load(a)
        | Expr::Tick(a)
        | Expr::ChooseUniform(a)
        | Expr::ChooseWeighted(a) => vec![a],
        Expr::BinOp(_, a, b)
        | Expr::Pair(a, b)
        | Expr::AllocN(a, b)
        | Expr::Store(a, b)
        | Expr::Xchg(a, b)
        | Expr::Faa(a, b) => vec![b, a],
        Expr::CmpXchg(a, b, c) => vec![c, b, a],
        Expr::If(c, _, _) => vec![c],
        Expr::Match { scrut, .. } => vec![scrut.as_ref()],
        Expr::Val(_) | Expr::Var(_) | Expr::Rec { .. } | Expr::Fork(_) => vec![],
    }
}

/// Rebuilds `e` with the child at `child_index` (in `eval_children` order)
/// replaced.
fn plug(e: &Expr, child_index: usize, replacement: Expr) -> Expr {
    let mut out = e.clone();
    {
        let slot: &mut Expr = match &mut out {
            Expr::App(f, a) => {
                if child_index == 0 {
                    a
                } else {
                    f
                }
            }
            Expr::UnOp(_, a)
            | Expr::Fst(a)
            | Expr::Snd(a)
            | Expr::Inl(a)
            | Expr::Inr(a)
            | Expr::Free(a)
            | Expr::Load(a)
            | Expr::Tick(a)
            | Expr::ChooseUniform(a)
            | Expr::ChooseWeighted(a) => a,
            Expr::BinOp(_, a, b)
            | Expr::Pair(a, b)
            | Expr::AllocN(a, b)
            | Expr::Store(a, b)
            | Expr::Xchg(a, b)
            | Expr::Faa(a, b) => {
                if child_index == 0 {
                    b
                } else {
                    a
                }
            }
            Expr::CmpXchg(a, b, c) => match child_index {
                0 => c,
                1 => b,
                _ => a,
            },
            Expr::If(c, _, _) => c,
            Expr::Match { scrut, .. } => scrut,
            _ => unreachable!("plug on an expression without evaluation positions"),
        };
        *slot = replacement;
    }
    out
}

/// Child indices (in `eval_children` order) leading from the root to the
/// head redex: the innermost non-value whose evaluation-position children
/// are all values. `None` iff `e` is a value.
fn redex_path(e: &Expr) -> Option<Vec<usize>> {
    if e.is_val() {
        return None;
    }
    let mut path = Vec::new();
    let mut cur = e;
    'descend: loop {
        for (i, child) in eval_children(cur).into_iter().enumerate() {
            if !child.is_val() {
                path.push(i);
                cur = child;
                continue 'descend;
            }
        }
        return Some(path);
    }
}

fn follow<'a>(mut e: &'a Expr, path: &[usize]) -> &'a Expr {
    for &i in path {
        e = eval_children(e)[i];
    }
    e
}

/// Rebuilds the context spine once, with `replacement` at the redex slot.
fn plug_path(e: &Expr, path: &[usize], replacement: Expr) -> Expr {
    match path.split_first() {
        None => replacement,
        Some((&i, rest)) => {
            let inner = plug_path(eval_children(e)[i], rest, replacement);
            plug(e, i, inner)
        }
    }
}

/// Finds the head redex under the deterministic right-to-left evaluation
/// order, together with its context depth. `None` iff `e` is a value.
pub fn find_redex(e: &Expr) -> Option<(usize, &Expr)> {
    let path = redex_path(e)?;
    Some((path.len(), follow(e, &path)))
}

/// One primitive reduction of `e` in heap `h`: decomposes into context and
/// head redex, steps the redex, and maps outcomes back through the
/// context. `None` iff `e` is a value or stuck.
pub fn prim_step(e: &Expr, h: &Heap) -> Option<Dist<StepOutcome>> {
    let path = redex_path(e)?;
    let dist = head_step(follow(e, &path), h)?;
    if path.is_empty() {
        return Some(dist);
    }
    Some(dist.map_into(|o| {
        let StepOutcome { reduct, heap, cost, forks } = o;
        StepOutcome { reduct: plug_path(e, &path, reduct), heap, cost, forks }
    }))
}

/// The expression `e` is stuck in `h`: not a value, and no rule applies.
pub fn is_stuck(e: &Expr, h: &Heap) -> bool {
    !e.is_val() && prim_step(e, h).is_none()
}

/// The stuck head redex of `e` in `h`, if `e` is stuck.
pub fn stuck_redex<'a>(e: &'a Expr, h: &Heap) -> Option<&'a Expr> {
    if !is_stuck(e, h) {
        return None;
    }
    find_redex(e).map(|(_, r)| r)
}

/// Head-rule classes that are deterministic, costless and heap-independent.
/// `tick` and the choice primitives consult their own rules and are never
/// classified pure, even when their outcome happens to be deterministic.
fn redex_class_pure(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Rec { .. }
            | Expr::App(_, _)
            | Expr::UnOp(_, _)
            | Expr::If(_, _, _)
            | Expr::Pair(_, _)
            | Expr::Fst(_)
            | Expr::Snd(_)
            | Expr::Inl(_)
            | Expr::Inr(_)
            | Expr::Match { .. }
    ) || matches!(e, Expr::BinOp(op, a, _) if !(*op == BinOp::Add && matches!(a.to_val(), Some(Val::Loc(_)))))
}

/// True iff `e` steps deterministically to `e2` with no cost, no forks and
/// no heap interaction, in every heap.
pub fn is_pure_step(e: &Expr, e2: &Expr) -> bool {
    let Some((_, redex)) = find_redex(e) else { return false };
    if !redex_class_pure(redex) {
        return false;
    }
    let empty = Heap::new();
    let Some(dist) = prim_step(e, &empty) else { return false };
    if dist.len() != 1 {
        return false;
    }
    let (outcome, _) = dist.iter().next().unwrap();
    outcome.reduct == *e2
        && outcome.heap == empty
        && outcome.cost.is_zero()
        && outcome.forks.is_empty()
}

/// JSON dump of a single step: redex, context depth, outcomes.
pub fn step_trace_json(e: &Expr, h: &Heap) -> serde_json::Value {
    let Some((depth, redex)) = find_redex(e) else {
        return json!({ "value": pretty(e) });
    };
    let outcomes = match prim_step(e, h) {
        None => return json!({ "redex": pretty(redex), "context_depth": depth, "stuck": true }),
        Some(d) => d,
    };
    let outcomes: Vec<_> = outcomes
        .iter()
        .map(|(o, p)| {
            json!({
                "prob": crate::rat::format_rat(p.as_rat()),
                "reduct": pretty(&o.reduct),
                "cost": crate::rat::format_rat(&o.cost),
                "forks": o.forks.iter().map(pretty).collect::<Vec<_>>(),
                "heap": heap_json(&o.heap),
            })
        })
        .collect();
    json!({ "redex": pretty(redex), "context_depth": depth, "outcomes": outcomes })
}

/// Stable heap rendering: cells in location order.
pub fn heap_json(h: &Heap) -> serde_json::Value {
    let cells: Vec<_> = h
        .iter()
        .map(|(l, v)| json!({ "loc": l.to_string(), "val": pretty_val(v) }))
        .collect();
    json!(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use crate::syntax::parse_program;

    fn step(src: &str) -> Option<Dist<StepOutcome>> {
        prim_step(&parse_program(src).unwrap(), &Heap::new())
    }

    fn run_to_value(src: &str) -> (Val, Rat) {
        let mut e = parse_program(src).unwrap();
        let mut h = Heap::new();
        let mut cost = Rat::zero();
        for _ in 0..10_000 {
            if let Some(v) = e.to_val() {
                return (v.clone(), cost);
            }
            let d = prim_step(&e, &h).expect("stuck");
            assert_eq!(d.len(), 1, "deterministic program expected");
            let (o, _) = d.iter().next().unwrap();
            assert!(o.forks.is_empty());
            e = o.reduct.clone();
            h = o.heap.clone();
            cost += &o.cost;
        }
        panic!("did not terminate");
    }

    #[test]
    fn tick_rule() {
        let d = step("tick 1").unwrap();
        assert_eq!(d.len(), 1);
        let (o, p) = d.iter().next().unwrap();
        assert_eq!(p.as_rat(), &rat(1, 1));
        assert_eq!(o.reduct, Expr::unit());
        assert_eq!(o.cost, rat_int(1));
        assert!(o.forks.is_empty());
    }

    #[test]
    fn tick_of_negative_is_stuck() {
        assert!(step("tick (-1)").is_none());
        assert!(step("tick true").is_none());
        // rational tick amounts are fine
        let d = step("tick 0.5").unwrap();
        assert_eq!(d.iter().next().unwrap().0.cost, rat(1, 2));
    }

    #[test]
    fn choose_uniform_rule() {
        let d = step("ChooseUniform [true, false]").unwrap();
        assert_eq!(d.len(), 2);
        for (o, p) in d.iter() {
            assert_eq!(p.as_rat(), &rat(1, 2));
            assert!(o.cost.is_zero());
        }
        assert!(step("ChooseUniform []").is_none());
    }

    #[test]
    fn choose_weighted_rule() {
        let d = step("ChooseWeighted [(1, true), (3, false)]").unwrap();
        let probs: Vec<Rat> = d.iter().map(|(_, p)| p.as_rat().clone()).collect();
        assert_eq!(probs, vec![rat(1, 4), rat(3, 4)]);
        // nonpositive weights and malformed entries are stuck
        assert!(step("ChooseWeighted [(0, true)]").is_none());
        assert!(step("ChooseWeighted [true]").is_none());
    }

    #[test]
    fn type_confusion_is_stuck() {
        assert!(step("1 + true").is_none());
        assert!(step("fst 5").is_none());
        assert!(step("1 / 0").is_none());
        assert!(step("if 3 then 1 else 2").is_none());
        assert!(step("head []").is_none());
    }

    #[test]
    fn values_do_not_step() {
        for src in ["5", "true", "()", "[1, 2]", "(1, true)", "0.5"] {
            assert!(step(src).is_none(), "{src} stepped");
        }
    }

    #[test]
    fn beta_reduction() {
        let d = step("(rec f x := x) 5");
        // rec first steps to a closure, then beta fires
        let d = d.unwrap();
        let (o, _) = d.iter().next().unwrap();
        let d2 = prim_step(&o.reduct, &Heap::new()).unwrap();
        let (o2, _) = d2.iter().next().unwrap();
        assert_eq!(o2.reduct, Expr::int(5));
        assert!(o2.cost.is_zero());
    }

    #[test]
    fn recursion_unrolls() {
        let (v, _) = run_to_value("(rec f n := if n = 0 then 0 else f (n - 1)) 3");
        assert_eq!(v, Val::Int(0));
    }

    #[test]
    fn seq_steps_tick_first() {
        let e = parse_program("tick 1 ;; 2").unwrap();
        let d = prim_step(&e, &Heap::new()).unwrap();
        let (o, _) = d.iter().next().unwrap();
        assert_eq!(o.cost, rat_int(1));
        // the tick turned into () inside the surrounding context
        assert!(pretty(&o.reduct).contains("()"));
    }

    #[test]
    fn right_to_left_evaluation() {
        // In f(a)(b) with both sides reducible, the argument side steps first.
        let e = parse_program("(1 + 2) + (3 + 4)").unwrap();
        let d = prim_step(&e, &Heap::new()).unwrap();
        let (o, _) = d.iter().next().unwrap();
        assert_eq!(pretty(&o.reduct), "1 + 2 + 7");
    }

    #[test]
    fn heap_ops() {
        let (v, _) = run_to_value("let l := AllocN(3, 7) in !(l + 2)");
        assert_eq!(v, Val::Int(7));
        let (v, _) = run_to_value("let l := alloc 1 in l <- 9 ;; !l");
        assert_eq!(v, Val::Int(9));
        // right operand evaluates first, so the read below sees the update
        let (v, _) = run_to_value("let l := alloc 1 in !l + FAA(l, 5)");
        assert_eq!(v, Val::Int(7)); // FAA returns old 1, cell becomes 6
        let (v, _) = run_to_value("let l := alloc 0 in !l + fst CmpXchg(l, 0, 8)");
        assert_eq!(v, Val::Int(8));
        let (v, _) = run_to_value("let l := alloc 0 in snd CmpXchg(l, 1, 8)");
        assert_eq!(v, Val::Bool(false));
        let (v, _) = run_to_value("let l := alloc 2 in !l + Xchg(l, 3)");
        assert_eq!(v, Val::Int(5));
    }

    #[test]
    fn dangling_and_invalid_heap_ops_are_stuck() {
        assert!(step("AllocN(0, 1)").is_none());
        assert!(step("AllocN(-2, 1)").is_none());
        let e = parse_program("let l := alloc 0 in free l ;; !l").unwrap();
        let mut cur = e;
        let mut h = Heap::new();
        loop {
            match prim_step(&cur, &h) {
                Some(d) => {
                    let (o, _) = d.iter().next().unwrap();
                    cur = o.reduct.clone();
                    h = o.heap.clone();
                }
                None => {
                    assert!(!cur.is_val());
                    assert!(is_stuck(&cur, &h));
                    let r = stuck_redex(&cur, &h).unwrap();
                    assert!(matches!(r, Expr::Load(_)));
                    return;
                }
            }
        }
    }

    #[test]
    fn fork_emits_thread() {
        let d = step("fork (tick 1)").unwrap();
        let (o, _) = d.iter().next().unwrap();
        assert_eq!(o.reduct, Expr::unit());
        assert_eq!(o.forks.len(), 1);
        assert!(o.cost.is_zero());
    }

    #[test]
    fn closure_equality_is_stuck() {
        // the two recs first become closures, then the comparison is stuck
        let mut e = parse_program("(rec f x := x) = (rec f x := x)").unwrap();
        let h = Heap::new();
        for _ in 0..2 {
            let d = prim_step(&e, &h).unwrap();
            e = d.iter().next().unwrap().0.reduct.clone();
        }
        assert!(is_stuck(&e, &h));
    }

    #[test]
    fn numeric_comparisons_mix_types() {
        let (v, _) = run_to_value("1 = 1.0");
        assert_eq!(v, Val::Bool(true));
        let (v, _) = run_to_value("1 < 1.5");
        assert_eq!(v, Val::Bool(true));
        let (v, _) = run_to_value("4 / 2");
        assert_eq!(v, Val::Rat(rat(2, 1)));
    }

    #[test]
    fn pure_step_classification() {
        let e = parse_program("if true then 1 else 2").unwrap();
        assert!(is_pure_step(&e, &Expr::int(1)));
        assert!(!is_pure_step(&e, &Expr::int(2)));
        // tick is not pure even at cost 0
        let e = parse_program("tick 0").unwrap();
        assert!(!is_pure_step(&e, &Expr::unit()));
        // heap access is not pure
        let e = Expr::Load(Box::new(Expr::Val(Val::Loc(Loc { base: 0, offset: 0 }))));
        assert!(!is_pure_step(&e, &Expr::int(0)));
        // a singleton choice is deterministic but consults the choice rule
        let e = parse_program("ChooseUniform [7]").unwrap();
        assert!(!is_pure_step(&e, &Expr::int(7)));
    }

    #[test]
    fn step_trace_shape() {
        let e = parse_program("1 + tick 1").unwrap();
        let v = step_trace_json(&e, &Heap::new());
        assert_eq!(v["redex"], "tick 1");
        assert_eq!(v["context_depth"], 1);
        assert_eq!(v["outcomes"].as_array().unwrap().len(), 1);
    }
}
