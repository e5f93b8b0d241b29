use num_bigint::BigUint;

use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokKind {
    Ident(String),
    /// `x<digits>`
    Loc(u64),
    Num(BigUint),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tok {
    pub kind: TokKind,
    pub line: usize,
    pub col: usize,
    /// Byte offsets, used to detect adjacency (`x1<2>` tags).
    pub start: usize,
    pub end: usize,
}

// Longest first.
const SYMBOLS: [&str; 25] = [
    "==>", ":=", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ";", ",", "~", ".", "=", "<",
    ">", "!", "+", "-", "*", "&",
];

pub fn lex(src: &str) -> Result<Vec<Tok>, ParseError> {
    let mut toks = Vec::new();
    let bytes = src.as_bytes();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    while i < bytes.len() {
        let c = bytes[i];
        let col = src[line_start..i].chars().count() + 1;
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            TokKind::Num(src[start..i].parse().expect("digits"))
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            match crate::ast::addr_of(word) {
                Ok(a) => TokKind::Loc(a),
                Err(_) if word.len() > 1 && word.starts_with('x') && word[1..].bytes().all(|b| b.is_ascii_digit()) => {
                    return Err(ParseError::new(line, col, ParseErrorKind::Syntax(format!("location `{word}` is out of range"))));
                }
                Err(_) => TokKind::Ident(word.to_string()),
            }
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            i += sym.len();
            TokKind::Sym(sym)
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError::new(line, col, ParseErrorKind::Syntax(format!("unexpected character `{ch}`"))));
        };
        toks.push(Tok {
            kind,
            line,
            col,
            start,
            end: i,
        });
    }
    let col = src[line_start..].chars().count() + 1;
    toks.push(Tok {
        kind: TokKind::Eof,
        line,
        col,
        start: src.len(),
        end: src.len(),
    });
    Ok(toks)
}

impl std::fmt::Display for TokKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TokKind::Ident(s) => write!(f, "`{s}`"),
            TokKind::Loc(a) => write!(f, "`x{a}`"),
            TokKind::Num(n) => write!(f, "`{n}`"),
            TokKind::Sym(s) => write!(f, "`{s}`"),
            TokKind::Eof => f.write_str("end of input"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokKind> {
        lex(s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn tokens() {
        assert_eq!(
            kinds("x1 := *x2 + 3 // c\n==> x10<2>"),
            vec![
                TokKind::Loc(1),
                TokKind::Sym(":="),
                TokKind::Sym("*"),
                TokKind::Loc(2),
                TokKind::Sym("+"),
                TokKind::Num(3u8.into()),
                TokKind::Sym("==>"),
                TokKind::Loc(10),
                TokKind::Sym("<"),
                TokKind::Num(2u8.into()),
                TokKind::Sym(">"),
                TokKind::Eof,
            ]
        );
        assert_eq!(kinds("sum x"), vec![TokKind::Ident("sum".into()), TokKind::Ident("x".into()), TokKind::Eof]);
    }

    #[test]
    fn positions() {
        let t = lex("proc\n  sum").unwrap();
        assert_eq!((t[1].line, t[1].col), (2, 3));
        let e = lex("x1 := $").unwrap_err();
        assert_eq!((e.line, e.col), (1, 7));
    }
}
