//! Tokenizer for `.phl` source text. Tracks line/column for diagnostics;
//! `//` starts a comment running to the end of the line.

use crate::rat::{parse_decimal, Rat};

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Int(i64),
    Decimal(Rat),
    Ident(String),
    // keywords
    Rec,
    If,
    Then,
    Else,
    Let,
    In,
    Match,
    With,
    End,
    True,
    False,
    Not,
    Fst,
    Snd,
    Inl,
    Inr,
    Head,
    TailKw,
    Length,
    Alloc,
    AllocN,
    Free,
    Fork,
    Tick,
    ChooseUniform,
    ChooseWeighted,
    ChooseRange,
    CmpXchg,
    Xchg,
    Faa,
    // punctuation and operators
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Underscore,
    Assign,    // :=
    Arrow,     // =>
    Bar,       // |
    LeftArrow, // <-
    Bang,      // !
    SeqSep,    // ;;
    OrOr,
    AndAnd,
    Lt,
    Le,
    Eq,
    ConsOp, // ::
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $pos:expr) => {
            out.push(Spanned { tok: $tok, pos: $pos })
        };
    }

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos { line, col };
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            b' ' | b'\t' | b'\r' => {
                i += 1;
                col += 1;
            }
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                push!(Tok::LParen, pos);
                i += 1;
                col += 1;
            }
            b')' => {
                push!(Tok::RParen, pos);
                i += 1;
                col += 1;
            }
            b'[' => {
                push!(Tok::LBracket, pos);
                i += 1;
                col += 1;
            }
            b']' => {
                push!(Tok::RBracket, pos);
                i += 1;
                col += 1;
            }
            b',' => {
                push!(Tok::Comma, pos);
                i += 1;
                col += 1;
            }
            b'|' if bytes.get(i + 1) == Some(&b'|') => {
                push!(Tok::OrOr, pos);
                i += 2;
                col += 2;
            }
            b'|' => {
                push!(Tok::Bar, pos);
                i += 1;
                col += 1;
            }
            b'&' if bytes.get(i + 1) == Some(&b'&') => {
                push!(Tok::AndAnd, pos);
                i += 2;
                col += 2;
            }
            b':' if bytes.get(i + 1) == Some(&b'=') => {
                push!(Tok::Assign, pos);
                i += 2;
                col += 2;
            }
            b':' if bytes.get(i + 1) == Some(&b':') => {
                push!(Tok::ConsOp, pos);
                i += 2;
                col += 2;
            }
            b'=' if bytes.get(i + 1) == Some(&b'>') => {
                push!(Tok::Arrow, pos);
                i += 2;
                col += 2;
            }
            b'=' => {
                push!(Tok::Eq, pos);
                i += 1;
                col += 1;
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') => {
                push!(Tok::LeftArrow, pos);
                i += 2;
                col += 2;
            }
            b'<' if bytes.get(i + 1) == Some(&b'=') => {
                push!(Tok::Le, pos);
                i += 2;
                col += 2;
            }
            b'<' => {
                push!(Tok::Lt, pos);
                i += 1;
                col += 1;
            }
            b'!' => {
                push!(Tok::Bang, pos);
                i += 1;
                col += 1;
            }
            b';' if bytes.get(i + 1) == Some(&b';') => {
                push!(Tok::SeqSep, pos);
                i += 2;
                col += 2;
            }
            b'+' => {
                push!(Tok::Plus, pos);
                i += 1;
                col += 1;
            }
            b'-' => {
                push!(Tok::Minus, pos);
                i += 1;
                col += 1;
            }
            b'*' => {
                push!(Tok::Star, pos);
                i += 1;
                col += 1;
            }
            b'/' => {
                push!(Tok::Slash, pos);
                i += 1;
                col += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                    let int_part = &src[start..i];
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let frac_part = &src[frac_start..i];
                    let r = parse_decimal(int_part, frac_part).ok_or_else(|| {
                        SyntaxError::parse(pos, format!("bad decimal literal `{int_part}.{frac_part}`"))
                    })?;
                    col += (i - start) as u32;
                    push!(Tok::Decimal(r), pos);
                } else {
                    let text = &src[start..i];
                    let n: i64 = text.parse().map_err(|_| {
                        SyntaxError::parse(pos, format!("integer literal `{text}` out of range"))
                    })?;
                    col += (i - start) as u32;
                    push!(Tok::Int(n), pos);
                }
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
                {
                    i += 1;
                }
                let word = &src[start..i];
                col += (i - start) as u32;
                let tok = match word {
                    "_" => Tok::Underscore,
                    "rec" => Tok::Rec,
                    "if" => Tok::If,
                    "then" => Tok::Then,
                    "else" => Tok::Else,
                    "let" => Tok::Let,
                    "in" => Tok::In,
                    "match" => Tok::Match,
                    "with" => Tok::With,
                    "end" => Tok::End,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "not" => Tok::Not,
                    "fst" => Tok::Fst,
                    "snd" => Tok::Snd,
                    "inl" => Tok::Inl,
                    "inr" => Tok::Inr,
                    "head" => Tok::Head,
                    "tail" => Tok::TailKw,
                    "length" => Tok::Length,
                    "alloc" => Tok::Alloc,
                    "AllocN" => Tok::AllocN,
                    "free" | "Free" => Tok::Free,
                    "fork" | "Fork" => Tok::Fork,
                    "tick" | "Tick" => Tok::Tick,
                    "ChooseUniform" => Tok::ChooseUniform,
                    "ChooseWeighted" => Tok::ChooseWeighted,
                    "ChooseRange" => Tok::ChooseRange,
                    "CmpXchg" => Tok::CmpXchg,
                    "Xchg" => Tok::Xchg,
                    "FAA" => Tok::Faa,
                    _ => Tok::Ident(word.to_string()),
                };
                push!(tok, pos);
            }
            _ => {
                return Err(SyntaxError::parse(
                    pos,
                    format!("unexpected character `{}`", src[i..].chars().next().unwrap()),
                ));
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn lexes_operators_and_literals() {
        let toks = lex("tick 1 ;; x <- 0.5 // comment\n[]").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|s| s.tok).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Tick,
                Tok::Int(1),
                Tok::SeqSep,
                Tok::Ident("x".into()),
                Tok::LeftArrow,
                Tok::Decimal(rat(1, 2)),
                Tok::LBracket,
                Tok::RBracket,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn tracks_positions() {
        let toks = lex("a\n  b").unwrap();
        assert_eq!(toks[0].pos, Pos { line: 1, col: 1 });
        assert_eq!(toks[1].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn rejects_unknown_characters() {
        assert!(lex("a $ b").is_err());
    }
}
