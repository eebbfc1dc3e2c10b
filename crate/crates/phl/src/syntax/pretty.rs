//! Precedence-aware printer. `parse_program(pretty(e))` is structurally
//! equal to `e` for every expression in the parser's image.
//!
//! Runtime-only forms have no source syntax and print for display only:
//! locations (`#base+offset`), closures (printed as their `rec` source,
//! which reparses as the `rec` expression), rationals whose denominator is
//! not 10-smooth (printed `num/den`, which reparses as a division), and
//! transient constructor expressions whose children are already values
//! (printed like the corresponding value literal).

use std::fmt::Write;

use num_traits::Signed;

use super::ast::{BinOp, Binder, Expr, UnOp, Val};
use crate::rat::format_rat_literal;

// Precedence levels, loosest to tightest. An expression with printed
// precedence `p` needs parentheses in a context demanding at least `q > p`.
const P_ENTRY: u8 = 0; // rec / let / if / match
const P_SEQ: u8 = 1;
const P_STORE: u8 = 2;
const P_OR: u8 = 3;
const P_AND: u8 = 4;
const P_CMP: u8 = 5;
const P_CONS: u8 = 6;
const P_ADD: u8 = 7;
const P_MUL: u8 = 8;
const P_NEG: u8 = 9;
const P_APP: u8 = 10;
const P_ATOM: u8 = 11;

pub fn pretty(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, P_ENTRY);
    out
}

pub fn pretty_val(v: &Val) -> String {
    let mut out = String::new();
    write_val(&mut out, v, P_ENTRY);
    out
}

fn paren(out: &mut String, need: bool, f: impl FnOnce(&mut String)) {
    if need {
        out.push('(');
        f(out);
        out.push(')');
    } else {
        f(out);
    }
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    match e {
        Expr::Val(v) => write_val(out, v, ctx),
        Expr::Var(x) => out.push_str(x),
        Expr::Rec { .. } => write_rec(out, e, ctx),
        Expr::App(f, a) => {
            // let / seq sugar: application of an anonymous rec
            if let Expr::Rec { fname: Binder::Anon, arg, body } = f.as_ref() {
                match arg {
                    Binder::Named(x) => {
                        paren(out, ctx > P_ENTRY, |out| {
                            write!(out, "let {x} := ").unwrap();
                            write_expr(out, a, P_ENTRY);
                            out.push_str(" in ");
                            write_expr(out, body, P_ENTRY);
                        });
                    }
                    Binder::Anon => {
                        paren(out, ctx > P_SEQ, |out| {
                            write_expr(out, a, P_STORE);
                            out.push_str(" ;; ");
                            write_expr(out, body, P_SEQ);
                        });
                    }
                }
                return;
            }
            paren(out, ctx > P_APP, |out| {
                write_expr(out, f, P_APP);
                out.push(' ');
                write_expr(out, a, P_ATOM);
            });
        }
        Expr::UnOp(UnOp::Neg, a) => paren(out, ctx > P_NEG, |out| {
            out.push('-');
            // an operand whose leftmost token is a nonnegative numeric
            // literal must keep parentheses: `-5 x` would reparse as a
            // folded negative literal, not a negation
            if leading_numeric_literal(a) {
                out.push('(');
                write_expr(out, a, P_ENTRY);
                out.push(')');
            } else {
                write_expr(out, a, P_NEG);
            }
        }),
        Expr::UnOp(UnOp::Head, a) => write_prefix(out, "head", a, ctx),
        Expr::UnOp(UnOp::Tail, a) => write_prefix(out, "tail", a, ctx),
        Expr::UnOp(UnOp::Length, a) => write_prefix(out, "length", a, ctx),
        Expr::BinOp(op, a, b) => {
            let (text, prec, right_assoc) = binop_info(*op);
            let (lp, rp) = if right_assoc { (prec + 1, prec) } else { (prec, prec + 1) };
            paren(out, ctx > prec, |out| {
                write_expr(out, a, lp);
                write!(out, " {text} ").unwrap();
                write_expr(out, b, rp);
            });
        }
        Expr::If(c, t, e) => paren(out, ctx > P_ENTRY, |out| {
            out.push_str("if ");
            write_expr(out, c, P_ENTRY);
            out.push_str(" then ");
            write_expr(out, t, P_ENTRY);
            out.push_str(" else ");
            write_expr(out, e, P_ENTRY);
        }),
        Expr::Pair(a, b) => {
            out.push('(');
            write_expr(out, a, P_ENTRY);
            out.push_str(", ");
            write_expr(out, b, P_ENTRY);
            out.push(')');
        }
        Expr::Fst(a) => write_prefix(out, "fst", a, ctx),
        Expr::Snd(a) => write_prefix(out, "snd", a, ctx),
        Expr::Inl(a) => write_prefix(out, "inl", a, ctx),
        Expr::Inr(a) => write_prefix(out, "inr", a, ctx),
        Expr::Match { scrut, left, right } => paren(out, ctx > P_ENTRY, |out| {
            out.push_str("match ");
            write_expr(out, scrut, P_ENTRY);
            write!(out, " with inl {} => ", left.0).unwrap();
            write_expr(out, &left.1, P_ENTRY);
            write!(out, " | inr {} => ", right.0).unwrap();
            write_expr(out, &right.1, P_ENTRY);
            out.push_str(" end");
        }),
        Expr::AllocN(n, v) => write_call2(out, "AllocN", n, v),
        Expr::Free(a) => write_prefix(out, "free", a, ctx),
        Expr::Load(a) => paren(out, ctx > P_APP, |out| {
            out.push('!');
            write_expr(out, a, P_ATOM);
        }),
        Expr::Store(l, v) => paren(out, ctx > P_STORE, |out| {
            write_expr(out, l, P_OR);
            out.push_str(" <- ");
            write_expr(out, v, P_OR);
        }),
        Expr::CmpXchg(a, b, c) => {
            out.push_str("CmpXchg(");
            write_expr(out, a, P_ENTRY);
            out.push_str(", ");
            write_expr(out, b, P_ENTRY);
            out.push_str(", ");
            write_expr(out, c, P_ENTRY);
            out.push(')');
        }
        Expr::Xchg(a, b) => write_call2(out, "Xchg", a, b),
        Expr::Faa(a, b) => write_call2(out, "FAA", a, b),
        Expr::Fork(a) => write_prefix(out, "fork", a, ctx),
        Expr::Tick(a) => write_prefix(out, "tick", a, ctx),
        Expr::ChooseUniform(a) => write_prefix(out, "ChooseUniform", a, ctx),
        Expr::ChooseWeighted(a) => write_prefix(out, "ChooseWeighted", a, ctx),
    }
}

/// The printed form of `e` starts with a nonnegative numeric literal, so a
/// `-` directly in front of it would lex into the literal.
fn leading_numeric_literal(e: &Expr) -> bool {
    match e {
        Expr::Val(Val::Int(n)) => *n >= 0,
        Expr::Val(Val::Rat(r)) => !r.is_negative(),
        Expr::App(f, _) => leading_numeric_literal(f),
        _ => false,
    }
}

fn write_prefix(out: &mut String, kw: &str, a: &Expr, ctx: u8) {
    paren(out, ctx > P_APP, |out| {
        out.push_str(kw);
        out.push(' ');
        write_expr(out, a, P_ATOM);
    });
}

fn write_call2(out: &mut String, kw: &str, a: &Expr, b: &Expr) {
    out.push_str(kw);
    out.push('(');
    write_expr(out, a, P_ENTRY);
    out.push_str(", ");
    write_expr(out, b, P_ENTRY);
    out.push(')');
}

/// Prints `rec f x y := body`, collapsing anonymous curried wrappers.
fn write_rec(out: &mut String, e: &Expr, ctx: u8) {
    let Expr::Rec { fname, arg, body } = e else { unreachable!() };
    paren(out, ctx > P_ENTRY, |out| {
        write!(out, "rec {fname} {arg}").unwrap();
        let mut b = body.as_ref();
        while let Expr::Rec { fname: Binder::Anon, arg, body } = b {
            write!(out, " {arg}").unwrap();
            b = body.as_ref();
        }
        out.push_str(" := ");
        write_expr(out, b, P_ENTRY);
    });
}

fn binop_info(op: BinOp) -> (&'static str, u8, bool) {
    match op {
        BinOp::Or => ("||", P_OR, true),
        BinOp::And => ("&&", P_AND, true),
        BinOp::Lt => ("<", P_CMP, false),
        BinOp::Le => ("<=", P_CMP, false),
        BinOp::Eq => ("=", P_CMP, false),
        BinOp::Cons => ("::", P_CONS, true),
        BinOp::Add => ("+", P_ADD, false),
        BinOp::Sub => ("-", P_ADD, false),
        BinOp::Mul => ("*", P_MUL, false),
        BinOp::Div => ("/", P_MUL, false),
    }
}

fn write_val(out: &mut String, v: &Val, ctx: u8) {
    match v {
        Val::Unit => out.push_str("()"),
        Val::Bool(b) => write!(out, "{b}").unwrap(),
        Val::Int(n) => paren(out, *n < 0 && ctx > P_NEG, |out| {
            write!(out, "{n}").unwrap();
        }),
        Val::Rat(r) => paren(out, r.is_negative() && ctx > P_NEG, |out| {
            out.push_str(&format_rat_literal(r));
        }),
        Val::Loc(l) => write!(out, "{l}").unwrap(),
        Val::List(vs) => {
            out.push('[');
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_val(out, v, P_ENTRY);
            }
            out.push(']');
        }
        Val::Pair(a, b) => {
            out.push('(');
            write_val(out, a, P_ENTRY);
            out.push_str(", ");
            write_val(out, b, P_ENTRY);
            out.push(')');
        }
        Val::Inl(v) => paren(out, ctx > P_APP, |out| {
            out.push_str("inl ");
            write_val(out, v, P_ATOM);
        }),
        Val::Inr(v) => paren(out, ctx > P_APP, |out| {
            out.push_str("inr ");
            write_val(out, v, P_ATOM);
        }),
        Val::Closure { fname, arg, body } => {
            let as_rec = Expr::Rec {
                fname: fname.clone(),
                arg: arg.clone(),
                body: body.clone(),
            };
            write_rec(out, &as_rec, ctx);
        }
    }
}
