//! Abstract syntax of the probabilistic heap language.
//!
//! Values are a syntactic subclass of expressions: `Expr::Val` embeds a
//! value, and `to_val` recovers it. Closures must be closed up to their two
//! binders; this is established by the parser's scope check for source
//! programs and preserved by substitution.

use std::collections::BTreeSet;
use std::fmt;

use crate::rat::Rat;

/// A heap location: allocation base plus cell offset. Offset arithmetic
/// shifts the offset only; equality is componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc {
    pub base: u64,
    pub offset: i64,
}

impl Loc {
    pub fn shifted(self, delta: i64) -> Option<Loc> {
        Some(Loc { base: self.base, offset: self.offset.checked_add(delta)? })
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offset == 0 {
            write!(f, "#{}", self.base)
        } else {
            write!(f, "#{}+{}", self.base, self.offset)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Binder {
    Anon,
    Named(String),
}

impl Binder {
    pub fn named(s: impl Into<String>) -> Binder {
        Binder::Named(s.into())
    }

    pub fn binds(&self, name: &str) -> bool {
        matches!(self, Binder::Named(n) if n == name)
    }
}

impl fmt::Display for Binder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binder::Anon => write!(f, "_"),
            Binder::Named(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Val {
    Unit,
    Bool(bool),
    Int(i64),
    Rat(Rat),
    Loc(Loc),
    List(Vec<Val>),
    Pair(Box<Val>, Box<Val>),
    Inl(Box<Val>),
    Inr(Box<Val>),
    Closure { fname: Binder, arg: Binder, body: Box<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Head,
    Tail,
    Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Cons,
    Lt,
    Le,
    Eq,
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Val(Val),
    Var(String),
    Rec { fname: Binder, arg: Binder, body: Box<Expr> },
    App(Box<Expr>, Box<Expr>),
    UnOp(UnOp, Box<Expr>),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    Fst(Box<Expr>),
    Snd(Box<Expr>),
    Inl(Box<Expr>),
    Inr(Box<Expr>),
    Match { scrut: Box<Expr>, left: (Binder, Box<Expr>), right: (Binder, Box<Expr>) },
    AllocN(Box<Expr>, Box<Expr>),
    Free(Box<Expr>),
    Load(Box<Expr>),
    Store(Box<Expr>, Box<Expr>),
    CmpXchg(Box<Expr>, Box<Expr>, Box<Expr>),
    Xchg(Box<Expr>, Box<Expr>),
    Faa(Box<Expr>, Box<Expr>),
    Fork(Box<Expr>),
    Tick(Box<Expr>),
    ChooseUniform(Box<Expr>),
    ChooseWeighted(Box<Expr>),
}

impl Val {
    pub fn int(n: i64) -> Val {
        Val::Int(n)
    }

    /// Closure smart constructor; fails when the body has free variables
    /// other than the two binders.
    pub fn closure(fname: Binder, arg: Binder, body: Expr) -> Result<Val, String> {
        let mut free = BTreeSet::new();
        free_vars_into(&body, &mut Vec::new(), &mut free);
        let allowed =
            |n: &str| fname.binds(n) || arg.binds(n);
        if let Some(bad) = free.iter().find(|n| !allowed(n)) {
            return Err(format!("closure body has free variable `{bad}`"));
        }
        Ok(Val::Closure { fname, arg, body: Box::new(body) })
    }

    /// True when no closure occurs anywhere inside; such values support
    /// decidable equality in the object language.
    pub fn is_comparable(&self) -> bool {
        match self {
            Val::Closure { .. } => false,
            Val::List(vs) => vs.iter().all(Val::is_comparable),
            Val::Pair(a, b) => a.is_comparable() && b.is_comparable(),
            Val::Inl(v) | Val::Inr(v) => v.is_comparable(),
            _ => true,
        }
    }
}

impl Expr {
    pub fn of_val(v: Val) -> Expr {
        Expr::Val(v)
    }

    /// `Some` iff the expression is syntactically a value.
    pub fn to_val(&self) -> Option<&Val> {
        match self {
            Expr::Val(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_val(&self) -> bool {
        matches!(self, Expr::Val(_))
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Val(Val::Int(n))
    }

    pub fn unit() -> Expr {
        Expr::Val(Val::Unit)
    }

    pub fn bool(b: bool) -> Expr {
        Expr::Val(Val::Bool(b))
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    /// `let x := bound in body`, i.e. application of an anonymous rec.
    pub fn let_in(x: Binder, bound: Expr, body: Expr) -> Expr {
        Expr::app(Expr::Rec { fname: Binder::Anon, arg: x, body: Box::new(body) }, bound)
    }

    /// `e1 ;; e2`.
    pub fn seq(e1: Expr, e2: Expr) -> Expr {
        Expr::let_in(Binder::Anon, e1, e2)
    }

    /// Total number of syntax nodes; used as a growth guard by harnesses.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Pre-order traversal over all sub-expressions, including bodies of
    /// closure values.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        let visit_val = |v: &Val, f: &mut dyn FnMut(&Expr)| visit_val_exprs(v, f);
        match self {
            Expr::Val(v) => visit_val(v, &mut |e| e.visit(f)),
            Expr::Var(_) => {}
            Expr::Rec { body, .. } => body.visit(f),
            Expr::App(a, b)
            | Expr::BinOp(_, a, b)
            | Expr::Pair(a, b)
            | Expr::AllocN(a, b)
            | Expr::Store(a, b)
            | Expr::Xchg(a, b)
            | Expr::Faa(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::UnOp(_, e)
            | Expr::Fst(e)
            | Expr::Snd(e)
            | Expr::Inl(e)
            | Expr::Inr(e)
            | Expr::Free(e)
            | Expr::Load(e)
            | Expr::Fork(e)
            | Expr::Tick(e)
            | Expr::ChooseUniform(e)
            | Expr::ChooseWeighted(e) => e.visit(f),
            Expr::If(a, b, c) | Expr::CmpXchg(a, b, c) => {
                a.visit(f);
                b.visit(f);
                c.visit(f);
            }
            Expr::Match { scrut, left, right } => {
                scrut.visit(f);
                left.1.visit(f);
                right.1.visit(f);
            }
        }
    }
}

fn visit_val_exprs(v: &Val, f: &mut dyn FnMut(&Expr)) {
    match v {
        Val::List(vs) => vs.iter().for_each(|v| visit_val_exprs(v, f)),
        Val::Pair(a, b) => {
            visit_val_exprs(a, f);
            visit_val_exprs(b, f);
        }
        Val::Inl(v) | Val::Inr(v) => visit_val_exprs(v, f),
        Val::Closure { body, .. } => f(body),
        _ => {}
    }
}

/// Free variables of an expression.
pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    free_vars_into(e, &mut Vec::new(), &mut out);
    out
}

fn free_vars_into(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        Expr::Val(v) => free_vars_val(v, bound, out),
        Expr::Rec { fname, arg, body } => {
            let mut pushed = 0;
            for b in [fname, arg] {
                if let Binder::Named(n) = b {
                    bound.push(n.clone());
                    pushed += 1;
                }
            }
            free_vars_into(body, bound, out);
            bound.truncate(bound.len() - pushed);
        }
        Expr::Match { scrut, left, right } => {
            free_vars_into(scrut, bound, out);
            for (b, body) in [left, right] {
                let mut pushed = 0;
                if let Binder::Named(n) = b {
                    bound.push(n.clone());
                    pushed += 1;
                }
                free_vars_into(body, bound, out);
                bound.truncate(bound.len() - pushed);
            }
        }
        _ => {
            let mut children = Vec::new();
            collect_children(e, &mut children);
            for c in children {
                free_vars_into(c, bound, out);
            }
        }
    }
}

fn free_vars_val(v: &Val, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match v {
        Val::Closure { fname, arg, body } => {
            let mut pushed = 0;
            for b in [fname, arg] {
                if let Binder::Named(n) = b {
                    bound.push(n.clone());
                    pushed += 1;
                }
            }
            free_vars_into(body, bound, out);
            bound.truncate(bound.len() - pushed);
        }
        Val::List(vs) => vs.iter().for_each(|v| free_vars_val(v, bound, out)),
        Val::Pair(a, b) => {
            free_vars_val(a, bound, out);
            free_vars_val(b, bound, out);
        }
        Val::Inl(v) | Val::Inr(v) => free_vars_val(v, bound, out),
        _ => {}
    }
}

/// Direct sub-expressions, excluding binder-aware forms handled separately.
fn collect_children<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Val(_) | Expr::Var(_) | Expr::Rec { .. } | Expr::Match { .. } => {}
        Expr::App(a, b)
        | Expr::BinOp(_, a, b)
        | Expr::Pair(a, b)
        | Expr::AllocN(a, b)
        | Expr::Store(a, b)
        | Expr::Xchg(a, b)
        | Expr::Faa(a, b) => out.extend([a.as_ref(), b.as_ref()]),
        Expr::UnOp(_, e)
        | Expr::Fst(e)
        | Expr::Snd(e)
        | Expr::Inl(e)
        | Expr::Inr(e)
        | Expr::Free(e)
        | Expr::Load(e)
        | Expr::Fork(e)
        | Expr::Tick(e)
        | Expr::ChooseUniform(e)
        | Expr::ChooseWeighted(e) => out.push(e),
        Expr::If(a, b, c) | Expr::CmpXchg(a, b, c) => {
            out.extend([a.as_ref(), b.as_ref(), c.as_ref()])
        }
    }
}

/// Capture-avoiding substitution of the value `v` for free occurrences of
/// `x`; binders shadow. Values are closed, so no renaming is ever needed.
pub fn subst(e: &Expr, x: &str, v: &Val) -> Expr {
    match e {
        Expr::Var(y) => {
            if y == x {
                Expr::Val(v.clone())
            } else {
                e.clone()
            }
        }
        Expr::Val(_) => e.clone(),
        Expr::Rec { fname, arg, body } => {
            if fname.binds(x) || arg.binds(x) {
                e.clone()
            } else {
                Expr::Rec {
                    fname: fname.clone(),
                    arg: arg.clone(),
                    body: Box::new(subst(body, x, v)),
                }
            }
        }
        Expr::Match { scrut, left, right } => {
            let sub_arm = |(b, body): &(Binder, Box<Expr>)| {
                if b.binds(x) {
                    (b.clone(), body.clone())
                } else {
                    (b.clone(), Box::new(subst(body, x, v)))
                }
            };
            Expr::Match {
                scrut: Box::new(subst(scrut, x, v)),
                left: sub_arm(left),
                right: sub_arm(right),
            }
        }
        Expr::App(a, b) => Expr::App(bx(subst(a, x, v)), bx(subst(b, x, v))),
        Expr::UnOp(op, a) => Expr::UnOp(*op, bx(subst(a, x, v))),
        Expr::BinOp(op, a, b) => Expr::BinOp(*op, bx(subst(a, x, v)), bx(subst(b, x, v))),
        Expr::If(a, b, c) => Expr::If(bx(subst(a, x, v)), bx(subst(b, x, v)), bx(subst(c, x, v))),
        Expr::Pair(a, b) => Expr::Pair(bx(subst(a, x, v)), bx(subst(b, x, v))),
        Expr::Fst(a) => Expr::Fst(bx(subst(a, x, v))),
        Expr::Snd(a) => Expr::Snd(bx(subst(a, x, v))),
        Expr::Inl(a) => Expr::Inl(bx(subst(a, x, v))),
        Expr::Inr(a) => Expr::Inr(bx(subst(a, x, v))),
        Expr::AllocN(a, b) => Expr::AllocN(bx(subst(a, x, v)), bx(subst(b, x, v))),
        Expr::Free(a) => Expr::Free(bx(subst(a, x, v))),
        Expr::Load(a) => Expr::Load(bx(subst(a, x, v))),
        Expr::Store(a, b) => Expr::Store(bx(subst(a, x, v)), bx(subst(b, x, v))),
        Expr::CmpXchg(a, b, c) => {
            Expr::CmpXchg(bx(subst(a, x, v)), bx(subst(b, x, v)), bx(subst(c, x, v)))
        }
        Expr::Xchg(a, b) => Expr::Xchg(bx(subst(a, x, v)), bx(subst(b, x, v))),
        Expr::Faa(a, b) => Expr::Faa(bx(subst(a, x, v)), bx(subst(b, x, v))),
        Expr::Fork(a) => Expr::Fork(bx(subst(a, x, v))),
        Expr::Tick(a) => Expr::Tick(bx(subst(a, x, v))),
        Expr::ChooseUniform(a) => Expr::ChooseUniform(bx(subst(a, x, v))),
        Expr::ChooseWeighted(a) => Expr::ChooseWeighted(bx(subst(a, x, v))),
    }
}

/// Substitute under a binder: no-op for anonymous binders.
pub fn subst_binder(e: &Expr, b: &Binder, v: &Val) -> Expr {
    match b {
        Binder::Anon => e.clone(),
        Binder::Named(x) => subst(e, x, v),
    }
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

/// Rewrites every location in an expression (including inside values).
pub fn map_locs_expr(e: &Expr, f: &mut impl FnMut(Loc) -> Loc) -> Expr {
    match e {
        Expr::Val(v) => Expr::Val(map_locs_val(v, f)),
        Expr::Var(_) => e.clone(),
        Expr::Rec { fname, arg, body } => Expr::Rec {
            fname: fname.clone(),
            arg: arg.clone(),
            body: Box::new(map_locs_expr(body, f)),
        },
        Expr::Match { scrut, left, right } => Expr::Match {
            scrut: Box::new(map_locs_expr(scrut, f)),
            left: (left.0.clone(), Box::new(map_locs_expr(&left.1, f))),
            right: (right.0.clone(), Box::new(map_locs_expr(&right.1, f))),
        },
        Expr::App(a, b) => Expr::App(bx(map_locs_expr(a, f)), bx(map_locs_expr(b, f))),
        Expr::UnOp(op, a) => Expr::UnOp(*op, bx(map_locs_expr(a, f))),
        Expr::BinOp(op, a, b) => {
            Expr::BinOp(*op, bx(map_locs_expr(a, f)), bx(map_locs_expr(b, f)))
        }
        Expr::If(a, b, c) => Expr::If(
            bx(map_locs_expr(a, f)),
            bx(map_locs_expr(b, f)),
            bx(map_locs_expr(c, f)),
        ),
        Expr::Pair(a, b) => Expr::Pair(bx(map_locs_expr(a, f)), bx(map_locs_expr(b, f))),
        Expr::Fst(a) => Expr::Fst(bx(map_locs_expr(a, f))),
        Expr::Snd(a) => Expr::Snd(bx(map_locs_expr(a, f))),
        Expr::Inl(a) => Expr::Inl(bx(map_locs_expr(a, f))),
        Expr::Inr(a) => Expr::Inr(bx(map_locs_expr(a, f))),
        Expr::AllocN(a, b) => Expr::AllocN(bx(map_locs_expr(a, f)), bx(map_locs_expr(b, f))),
        Expr::Free(a) => Expr::Free(bx(map_locs_expr(a, f))),
        Expr::Load(a) => Expr::Load(bx(map_locs_expr(a, f))),
        Expr::Store(a, b) => Expr::Store(bx(map_locs_expr(a, f)), bx(map_locs_expr(b, f))),
        Expr::CmpXchg(a, b, c) => Expr::CmpXchg(
            bx(map_locs_expr(a, f)),
            bx(map_locs_expr(b, f)),
            bx(map_locs_expr(c, f)),
        ),
        Expr::Xchg(a, b) => Expr::Xchg(bx(map_locs_expr(a, f)), bx(map_locs_expr(b, f))),
        Expr::Faa(a, b) => Expr::Faa(bx(map_locs_expr(a, f)), bx(map_locs_expr(b, f))),
        Expr::Fork(a) => Expr::Fork(bx(map_locs_expr(a, f))),
        Expr::Tick(a) => Expr::Tick(bx(map_locs_expr(a, f))),
        Expr::ChooseUniform(a) => Expr::ChooseUniform(bx(map_locs_expr(a, f))),
        Expr::ChooseWeighted(a) => Expr::ChooseWeighted(bx(map_locs_expr(a, f))),
    }
}

pub fn map_locs_val(v: &Val, f: &mut impl FnMut(Loc) -> Loc) -> Val {
    match v {
        Val::Loc(l) => Val::Loc(f(*l)),
        Val::List(vs) => Val::List(vs.iter().map(|v| map_locs_val(v, f)).collect()),
        Val::Pair(a, b) => Val::Pair(Box::new(map_locs_val(a, f)), Box::new(map_locs_val(b, f))),
        Val::Inl(v) => Val::Inl(Box::new(map_locs_val(v, f))),
        Val::Inr(v) => Val::Inr(Box::new(map_locs_val(v, f))),
        Val::Closure { fname, arg, body } => Val::Closure {
            fname: fname.clone(),
            arg: arg.clone(),
            body: Box::new(map_locs_expr(body, f)),
        },
        _ => v.clone(),
    }
}

/// Visits every location in syntactic (pre-order, left-to-right) order.
pub fn visit_locs_expr(e: &Expr, f: &mut impl FnMut(Loc)) {
    e.visit(&mut |sub| {
        if let Expr::Val(v) = sub {
            visit_locs_val_shallow(v, f);
        }
    });
}

fn visit_locs_val_shallow(v: &Val, f: &mut impl FnMut(Loc)) {
    // Closure bodies are covered by Expr::visit; only look at the
    // first-order structure here.
    match v {
        Val::Loc(l) => f(*l),
        Val::List(vs) => vs.iter().for_each(|v| visit_locs_val_shallow(v, f)),
        Val::Pair(a, b) => {
            visit_locs_val_shallow(a, f);
            visit_locs_val_shallow(b, f);
        }
        Val::Inl(v) | Val::Inr(v) => visit_locs_val_shallow(v, f),
        _ => {}
    }
}

pub fn visit_locs_val(v: &Val, f: &mut impl FnMut(Loc)) {
    visit_locs_expr(&Expr::Val(v.clone()), f)
}
