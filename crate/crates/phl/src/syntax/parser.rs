//! Recursive-descent parser for `.phl` source text.
//!
//! Precedence, loosest to tightest:
//! `;;` < `<-` < `||` < `&&` < comparisons < `::` < `+ -` < `* /`
//! < unary minus < application and keyword prefixes < atoms.
//!
//! `let x := e1 in e2` and `e1 ;; e2` are sugar for application of an
//! anonymous `rec`; `rec f x y := e` curries; `if c then t` defaults the
//! else branch to `()`; `not e` is sugar for `if e then false else true`;
//! `alloc e` for `AllocN(1, e)`; `ChooseRange a b` for a uniform choice
//! over the integer list built by a recursive range function; a list
//! literal whose elements are all syntactic values is a list value,
//! otherwise a `::` chain ending in `[]`. Statement-like forms (`if`,
//! `let`, `match`, `rec`) are greedy: they extend as far right as
//! possible and need parentheses when embedded in a larger expression.
//!
//! The parser also performs the top-level scope check: any variable not
//! bound by an enclosing binder is an `UnboundVariable` error.

use super::ast::{BinOp, Binder, Expr, UnOp, Val};
use super::lexer::{lex, Pos, Spanned, Tok};
use super::SyntaxError;

pub fn parse_program(src: &str) -> Result<Expr, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, scope: Vec::new() };
    let e = p.parse_expr()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    scope: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> Pos {
        self.toks[self.pos].pos
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), SyntaxError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(SyntaxError::parse(
                self.here(),
                format!("expected {}, found {}", describe(t), describe(self.peek())),
            ))
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek() {
            Tok::Rec => self.parse_rec(),
            Tok::Let => self.parse_let(),
            Tok::If => self.parse_if(),
            Tok::Match => self.parse_match(),
            _ => self.parse_seq(),
        }
    }

    fn parse_rec(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(&Tok::Rec)?;
        let fname = self.parse_binder()?;
        let mut args = vec![self.parse_binder()?];
        while !matches!(self.peek(), Tok::Assign) {
            args.push(self.parse_binder()?);
        }
        self.expect(&Tok::Assign)?;
        let depth = self.scope.len();
        self.push_binder(&fname);
        for a in &args {
            self.push_binder(a);
        }
        let body = self.parse_expr()?;
        self.scope.truncate(depth);
        // rec f x y := e  ==>  rec f x := rec _ y := e
        let mut acc = body;
        for a in args.drain(1..).rev() {
            acc = Expr::Rec { fname: Binder::Anon, arg: a, body: Box::new(acc) };
        }
        Ok(Expr::Rec { fname, arg: args.pop().unwrap(), body: Box::new(acc) })
    }

    fn parse_let(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(&Tok::Let)?;
        let b = self.parse_binder()?;
        self.expect(&Tok::Assign)?;
        let bound = self.parse_expr()?;
        self.expect(&Tok::In)?;
        let depth = self.scope.len();
        self.push_binder(&b);
        let body = self.parse_expr()?;
        self.scope.truncate(depth);
        Ok(Expr::let_in(b, bound, body))
    }

    fn parse_if(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(&Tok::If)?;
        let c = self.parse_expr()?;
        self.expect(&Tok::Then)?;
        let t = self.parse_expr()?;
        let e = if self.eat(&Tok::Else) { self.parse_expr()? } else { Expr::unit() };
        Ok(Expr::If(Box::new(c), Box::new(t), Box::new(e)))
    }

    fn parse_match(&mut self) -> Result<Expr, SyntaxError> {
        self.expect(&Tok::Match)?;
        let scrut = self.parse_expr()?;
        self.expect(&Tok::With)?;
        self.expect(&Tok::Inl)?;
        let bl = self.parse_binder()?;
        self.expect(&Tok::Arrow)?;
        let depth = self.scope.len();
        self.push_binder(&bl);
        let el = self.parse_expr()?;
        self.scope.truncate(depth);
        self.expect(&Tok::Bar)?;
        self.expect(&Tok::Inr)?;
        let br = self.parse_binder()?;
        self.expect(&Tok::Arrow)?;
        self.push_binder(&br);
        let er = self.parse_expr()?;
        self.scope.truncate(depth);
        self.expect(&Tok::End)?;
        Ok(Expr::Match {
            scrut: Box::new(scrut),
            left: (bl, Box::new(el)),
            right: (br, Box::new(er)),
        })
    }

    fn parse_binder(&mut self) -> Result<Binder, SyntaxError> {
        match self.peek().clone() {
            Tok::Underscore => {
                self.advance();
                Ok(Binder::Anon)
            }
            Tok::Ident(name) => {
                self.advance();
                Ok(Binder::Named(name))
            }
            other => Err(SyntaxError::parse(
                self.here(),
                format!("expected a binder, found {}", describe(&other)),
            )),
        }
    }

    fn push_binder(&mut self, b: &Binder) {
        if let Binder::Named(n) = b {
            self.scope.push(n.clone());
        }
    }

    fn parse_seq(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.parse_store()?;
        if self.eat(&Tok::SeqSep) {
            let rhs = self.parse_expr()?;
            return Ok(Expr::seq(lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_store(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.parse_or()?;
        if self.eat(&Tok::LeftArrow) {
            let rhs = self.parse_or()?;
            return Ok(Expr::Store(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.parse_and()?;
        if self.eat(&Tok::OrOr) {
            let rhs = self.parse_or()?;
            return Ok(Expr::BinOp(BinOp::Or, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.parse_cmp()?;
        if self.eat(&Tok::AndAnd) {
            let rhs = self.parse_and()?;
            return Ok(Expr::BinOp(BinOp::And, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_cmp(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.parse_cons()?;
        loop {
            let op = match self.peek() {
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Eq => BinOp::Eq,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.parse_cons()?;
            lhs = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn parse_cons(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.parse_add()?;
        if self.eat(&Tok::ConsOp) {
            let rhs = self.parse_cons()?;
            return Ok(Expr::BinOp(BinOp::Cons, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_add(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.parse_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.parse_mul()?;
            lhs = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn parse_mul(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.parse_unary()?;
            lhs = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.peek() == &Tok::Minus {
            // Nonzero negative literals fold at parse time so that value
            // positions (list literals, weights) stay syntactic values.
            // `-0` stays a negation so the fold never erases a minus.
            match self.peek2().clone() {
                Tok::Int(n) if n != 0 => {
                    self.advance();
                    self.advance();
                    return Ok(Expr::Val(Val::Int(-n)));
                }
                Tok::Decimal(r) if !num_traits::Zero::is_zero(&r) => {
                    self.advance();
                    self.advance();
                    return Ok(Expr::Val(Val::Rat(-r)));
                }
                _ => {
                    self.advance();
                    let e = self.parse_unary()?;
                    return Ok(Expr::UnOp(UnOp::Neg, Box::new(e)));
                }
            }
        }
        self.parse_app()
    }

    fn parse_app(&mut self) -> Result<Expr, SyntaxError> {
        let mut head = self.parse_prefix_or_atom()?;
        while starts_atom(self.peek()) {
            let arg = self.parse_atom()?;
            head = Expr::App(Box::new(head), Box::new(arg));
        }
        Ok(head)
    }

    fn parse_prefix_or_atom(&mut self) -> Result<Expr, SyntaxError> {
        macro_rules! prefix {
            ($ctor:expr) => {{
                self.advance();
                let a = self.parse_atom()?;
                Ok($ctor(Box::new(a)))
            }};
        }
        match self.peek().clone() {
            Tok::Bang => prefix!(Expr::Load),
            Tok::Fst => prefix!(Expr::Fst),
            Tok::Snd => prefix!(Expr::Snd),
            Tok::Free => prefix!(Expr::Free),
            Tok::Fork => prefix!(Expr::Fork),
            Tok::Tick => prefix!(Expr::Tick),
            Tok::ChooseUniform => prefix!(Expr::ChooseUniform),
            Tok::ChooseWeighted => prefix!(Expr::ChooseWeighted),
            Tok::Head => prefix!(|a| Expr::UnOp(UnOp::Head, a)),
            Tok::TailKw => prefix!(|a| Expr::UnOp(UnOp::Tail, a)),
            Tok::Length => prefix!(|a| Expr::UnOp(UnOp::Length, a)),
            Tok::Not => {
                self.advance();
                let a = self.parse_atom()?;
                Ok(Expr::If(Box::new(a), Box::new(Expr::bool(false)), Box::new(Expr::bool(true))))
            }
            Tok::Inl => {
                self.advance();
                let a = self.parse_atom()?;
                Ok(match a {
                    Expr::Val(v) => Expr::Val(Val::Inl(Box::new(v))),
                    e => Expr::Inl(Box::new(e)),
                })
            }
            Tok::Inr => {
                self.advance();
                let a = self.parse_atom()?;
                Ok(match a {
                    Expr::Val(v) => Expr::Val(Val::Inr(Box::new(v))),
                    e => Expr::Inr(Box::new(e)),
                })
            }
            Tok::Alloc => {
                self.advance();
                let a = self.parse_atom()?;
                Ok(Expr::AllocN(Box::new(Expr::int(1)), Box::new(a)))
            }
            Tok::ChooseRange => {
                self.advance();
                let a = self.parse_atom()?;
                let b = self.parse_atom()?;
                Ok(choose_range(a, b))
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_two_args(&mut self) -> Result<(Expr, Expr), SyntaxError> {
        self.expect(&Tok::LParen)?;
        let a = self.parse_expr()?;
        self.expect(&Tok::Comma)?;
        let b = self.parse_expr()?;
        self.expect(&Tok::RParen)?;
        Ok((a, b))
    }

    fn parse_atom(&mut self) -> Result<Expr, SyntaxError> {
        let pos = self.here();
        match self.advance() {
            // self-delimiting primitive calls count as atoms
            Tok::AllocN => {
                let (a, b) = self.parse_two_args()?;
                Ok(Expr::AllocN(Box::new(a), Box::new(b)))
            }
            Tok::Xchg => {
                let (a, b) = self.parse_two_args()?;
                Ok(Expr::Xchg(Box::new(a), Box::new(b)))
            }
            Tok::Faa => {
                let (a, b) = self.parse_two_args()?;
                Ok(Expr::Faa(Box::new(a), Box::new(b)))
            }
            Tok::CmpXchg => {
                self.expect(&Tok::LParen)?;
                let a = self.parse_expr()?;
                self.expect(&Tok::Comma)?;
                let b = self.parse_expr()?;
                self.expect(&Tok::Comma)?;
                let c = self.parse_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(Expr::CmpXchg(Box::new(a), Box::new(b), Box::new(c)))
            }
            Tok::Int(n) => Ok(Expr::int(n)),
            Tok::Decimal(r) => Ok(Expr::Val(Val::Rat(r))),
            Tok::True => Ok(Expr::bool(true)),
            Tok::False => Ok(Expr::bool(false)),
            Tok::Ident(name) => {
                if self.scope.iter().any(|s| *s == name) {
                    Ok(Expr::Var(name))
                } else {
                    Err(SyntaxError::Unbound { name, line: pos.line, col: pos.col })
                }
            }
            Tok::LParen => {
                if self.eat(&Tok::RParen) {
                    return Ok(Expr::unit());
                }
                let e = self.parse_expr()?;
                if self.eat(&Tok::Comma) {
                    let e2 = self.parse_expr()?;
                    self.expect(&Tok::RParen)?;
                    return Ok(match (e, e2) {
                        (Expr::Val(a), Expr::Val(b)) => {
                            Expr::Val(Val::Pair(Box::new(a), Box::new(b)))
                        }
                        (a, b) => Expr::Pair(Box::new(a), Box::new(b)),
                    });
                }
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => {
                let mut items = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    loop {
                        items.push(self.parse_expr()?);
                        if self.eat(&Tok::RBracket) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                if items.iter().all(Expr::is_val) {
                    let vals = items
                        .into_iter()
                        .map(|e| match e {
                            Expr::Val(v) => v,
                            _ => unreachable!(),
                        })
                        .collect();
                    Ok(Expr::Val(Val::List(vals)))
                } else {
                    let mut acc = Expr::Val(Val::List(Vec::new()));
                    for e in items.into_iter().rev() {
                        acc = Expr::BinOp(BinOp::Cons, Box::new(e), Box::new(acc));
                    }
                    Ok(acc)
                }
            }
            other => Err(SyntaxError::parse(
                pos,
                format!("expected an expression, found {}", describe(&other)),
            )),
        }
    }
}

fn starts_atom(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Int(_)
            | Tok::Decimal(_)
            | Tok::Ident(_)
            | Tok::True
            | Tok::False
            | Tok::LParen
            | Tok::LBracket
            | Tok::AllocN
            | Tok::CmpXchg
            | Tok::Xchg
            | Tok::Faa
    )
}

/// `ChooseRange a b` becomes a uniform choice over `[a, ..., b-1]` built by
/// a closed recursive range function.
fn choose_range(a: Expr, b: Expr) -> Expr {
    let range = Expr::Rec {
        fname: Binder::named("range"),
        arg: Binder::named("lo"),
        body: Box::new(Expr::Rec {
            fname: Binder::Anon,
            arg: Binder::named("hi"),
            body: Box::new(Expr::If(
                Box::new(Expr::BinOp(
                    BinOp::Le,
                    Box::new(Expr::var("hi")),
                    Box::new(Expr::var("lo")),
                )),
                Box::new(Expr::Val(Val::List(Vec::new()))),
                Box::new(Expr::BinOp(
                    BinOp::Cons,
                    Box::new(Expr::var("lo")),
                    Box::new(Expr::app(
                        Expr::app(
                            Expr::var("range"),
                            Expr::BinOp(BinOp::Add, Box::new(Expr::var("lo")), Box::new(Expr::int(1))),
                        ),
                        Expr::var("hi"),
                    )),
                )),
            )),
        }),
    };
    Expr::ChooseUniform(Box::new(Expr::app(Expr::app(range, a), b)))
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("integer `{n}`"),
        Tok::Decimal(_) => "decimal literal".into(),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Eof => "end of input".into(),
        Tok::Rec => "`rec`".into(),
        Tok::If => "`if`".into(),
        Tok::Then => "`then`".into(),
        Tok::Else => "`else`".into(),
        Tok::Let => "`let`".into(),
        Tok::In => "`in`".into(),
        Tok::Match => "`match`".into(),
        Tok::With => "`with`".into(),
        Tok::End => "`end`".into(),
        Tok::True => "`true`".into(),
        Tok::False => "`false`".into(),
        Tok::Not => "`not`".into(),
        Tok::Fst => "`fst`".into(),
        Tok::Snd => "`snd`".into(),
        Tok::Inl => "`inl`".into(),
        Tok::Inr => "`inr`".into(),
        Tok::Head => "`head`".into(),
        Tok::TailKw => "`tail`".into(),
        Tok::Length => "`length`".into(),
        Tok::Alloc => "`alloc`".into(),
        Tok::AllocN => "`AllocN`".into(),
        Tok::Free => "`free`".into(),
        Tok::Fork => "`fork`".into(),
        Tok::Tick => "`tick`".into(),
        Tok::ChooseUniform => "`ChooseUniform`".into(),
        Tok::ChooseWeighted => "`ChooseWeighted`".into(),
        Tok::ChooseRange => "`ChooseRange`".into(),
        Tok::CmpXchg => "`CmpXchg`".into(),
        Tok::Xchg => "`Xchg`".into(),
        Tok::Faa => "`FAA`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Underscore => "`_`".into(),
        Tok::Assign => "`:=`".into(),
        Tok::Arrow => "`=>`".into(),
        Tok::Bar => "`|`".into(),
        Tok::LeftArrow => "`<-`".into(),
        Tok::Bang => "`!`".into(),
        Tok::SeqSep => "`;;`".into(),
        Tok::OrOr => "`||`".into(),
        Tok::AndAnd => "`&&`".into(),
        Tok::Lt => "`<`".into(),
        Tok::Le => "`<=`".into(),
        Tok::Eq => "`=`".into(),
        Tok::ConsOp => "`::`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
    }
}
