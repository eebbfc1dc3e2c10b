//! Abstract syntax, substitution, and the `.phl` text format.

mod ast;
mod lexer;
mod parser;
mod pretty;

pub use ast::{
    free_vars, map_locs_expr, map_locs_val, subst, subst_binder, visit_locs_expr, visit_locs_val,
    BinOp, Binder, Expr, Loc, UnOp, Val,
};
pub use parser::parse_program;
pub use pretty::{pretty, pretty_val};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("unbound variable `{name}` at {line}:{col}")]
    Unbound { name: String, line: u32, col: u32 },
}

impl SyntaxError {
    pub(crate) fn parse(pos: lexer::Pos, msg: String) -> SyntaxError {
        SyntaxError::Parse { line: pos.line, col: pos.col, msg }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn roundtrip(src: &str) -> Expr {
        let e = parse_program(src).unwrap();
        let printed = pretty(&e);
        let again = parse_program(&printed)
            .unwrap_or_else(|err| panic!("reparse of `{printed}` failed: {err}"));
        assert_eq!(again, e, "round trip through `{printed}`");
        e
    }

    #[test]
    fn parses_tick() {
        assert_eq!(roundtrip("tick 1"), Expr::Tick(Box::new(Expr::int(1))));
    }

    #[test]
    fn parses_if() {
        assert_eq!(
            roundtrip("if true then 1 else 2"),
            Expr::If(Box::new(Expr::bool(true)), Box::new(Expr::int(1)), Box::new(Expr::int(2)))
        );
        // missing else defaults to ()
        assert_eq!(
            parse_program("if true then 1").unwrap(),
            parse_program("if true then 1 else ()").unwrap()
        );
    }

    #[test]
    fn let_and_seq_are_rec_application() {
        let e = roundtrip("let x := 1 in x + 1");
        match &e {
            Expr::App(f, a) => {
                assert_eq!(a.as_ref(), &Expr::int(1));
                assert!(matches!(
                    f.as_ref(),
                    Expr::Rec { fname: Binder::Anon, arg: Binder::Named(n), .. } if n == "x"
                ));
            }
            other => panic!("unexpected {other:?}"),
        }
        let e = roundtrip("tick 1 ;; tick 2");
        assert!(matches!(
            &e,
            Expr::App(f, _) if matches!(f.as_ref(), Expr::Rec { fname: Binder::Anon, arg: Binder::Anon, .. })
        ));
    }

    #[test]
    fn curried_rec_sugar() {
        let e = roundtrip("rec f x y := x + y");
        match &e {
            Expr::Rec { fname, arg, body } => {
                assert!(fname.binds("f") && arg.binds("x"));
                assert!(matches!(
                    body.as_ref(),
                    Expr::Rec { fname: Binder::Anon, arg, .. } if arg.binds("y")
                ));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn literal_lists_and_pairs_fold_to_values() {
        assert_eq!(
            roundtrip("[true, false]"),
            Expr::Val(Val::List(vec![Val::Bool(true), Val::Bool(false)]))
        );
        assert_eq!(
            roundtrip("(0.5, true)"),
            Expr::Val(Val::Pair(Box::new(Val::Rat(rat(1, 2))), Box::new(Val::Bool(true))))
        );
        assert_eq!(roundtrip("[-2]"), Expr::Val(Val::List(vec![Val::Int(-2)])));
        // non-literal elements build a cons chain ending in []
        let e = roundtrip("let x := 1 in [x, 2]");
        let Expr::App(f, _) = &e else { panic!() };
        let Expr::Rec { body, .. } = f.as_ref() else { panic!() };
        assert!(matches!(body.as_ref(), Expr::BinOp(BinOp::Cons, _, _)));
    }

    #[test]
    fn negation_of_literals_round_trips() {
        // a fold must never erase a syntactic minus
        let e = roundtrip("--0");
        assert!(matches!(e, Expr::UnOp(UnOp::Neg, _)));
        let e = roundtrip("-(5)");
        assert_eq!(e, Expr::UnOp(UnOp::Neg, Box::new(Expr::int(5))));
        assert_eq!(pretty(&e), "-(5)");
        // negation of an application headed by a literal keeps parentheses
        roundtrip("-(1.25) 31");
        assert_eq!(roundtrip("-5"), Expr::Val(Val::Int(-5)));
    }

    #[test]
    fn integer_vs_rational_literals() {
        assert_eq!(roundtrip("1"), Expr::int(1));
        assert_eq!(roundtrip("1.0"), Expr::Val(Val::Rat(rat(1, 1))));
        assert_eq!(pretty(&Expr::int(1)), "1");
        assert_eq!(pretty(&Expr::Val(Val::Rat(rat(1, 1)))), "1.0");
        // division stays an expression
        assert!(matches!(roundtrip("1 / 2"), Expr::BinOp(BinOp::Div, _, _)));
    }

    #[test]
    fn not_and_else_default_sugar() {
        assert_eq!(
            parse_program("not true").unwrap(),
            parse_program("if true then false else true").unwrap()
        );
    }

    #[test]
    fn choose_range_desugars_to_uniform() {
        let e = parse_program("ChooseRange 0 4").unwrap();
        assert!(matches!(e, Expr::ChooseUniform(_)));
    }

    #[test]
    fn unbound_variables_are_rejected_with_position() {
        match parse_program("let x := 1 in y") {
            Err(SyntaxError::Unbound { name, line, col }) => {
                assert_eq!(name, "y");
                assert_eq!((line, col), (1, 15));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_program("if true then") {
            Err(SyntaxError::Parse { line: 1, col, .. }) => assert_eq!(col, 13),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coin_toss_source_round_trips() {
        let src = "(rec toss _ := tick 1 ;; (if ChooseUniform [true, false] = false then toss ())) ()";
        roundtrip(src);
    }

    #[test]
    fn heap_ops_round_trip() {
        roundtrip("let l := AllocN(3, 0) in (l + 1) <- (!l + 1) ;; free l ;; fork (tick 1)");
        roundtrip("let l := alloc 0 in CmpXchg(l, 0, 1) ;; Xchg(l, 5) ;; FAA(l, 2)");
        roundtrip("match inl 3 with inl x => x | inr _ => 0 end");
    }

    #[test]
    fn stores_and_comparisons_round_trip() {
        roundtrip("rec f l := !l <= 3 && (1 < 2 || 2 = 2)");
        roundtrip("1 :: 2 :: []");
        roundtrip("head [1] + length (tail [1, 2])");
    }
}
