//! S-expressions: the output form of lowering and the input form of solver
//! responses.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Sexp {
    /// Raw token text, including `|...|` quoting or string quotes.
    Atom(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SexpError {
    #[error("unexpected end of input")]
    Incomplete,
    #[error("unexpected `)` at byte {0}")]
    Unbalanced(usize),
    #[error("unterminated quoted symbol or string")]
    Unterminated,
}

/// Quotes `name` as an SMT-LIB symbol. Characters outside printable ASCII
/// are escaped so that every solver accepts the result.
pub fn quote(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 2);
    out.push('|');
    for ch in name.chars() {
        if ch.is_ascii_graphic() && ch != '|' && ch != '\\' || ch == ' ' {
            out.push(ch);
        } else {
            out.push_str(&format!("_u{:x}", ch as u32));
        }
    }
    out.push('|');
    out
}

/// Removes `|...|` quoting, if present.
pub fn unquote(token: &str) -> &str {
    token
        .strip_prefix('|')
        .and_then(|t| t.strip_suffix('|'))
        .unwrap_or(token)
}

impl Sexp {
    pub fn atom(s: impl Into<String>) -> Sexp {
        Sexp::Atom(s.into())
    }

    pub fn sym(name: &str) -> Sexp {
        Sexp::Atom(quote(name))
    }

    pub fn list<I: IntoIterator<Item = Sexp>>(items: I) -> Sexp {
        Sexp::List(items.into_iter().collect())
    }

    pub fn app<I: IntoIterator<Item = Sexp>>(head: &str, args: I) -> Sexp {
        let mut v = vec![Sexp::atom(head)];
        v.extend(args);
        Sexp::List(v)
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v) => Some(v),
            Sexp::Atom(_) => None,
        }
    }

    /// Rendering with all symbol quoting removed, used to match terms the
    /// solver echoes back with a different quoting choice.
    pub fn canonical(&self) -> String {
        match self {
            Sexp::Atom(a) => unquote(a).to_string(),
            Sexp::List(v) => {
                let parts: Vec<_> = v.iter().map(Sexp::canonical).collect();
                format!("({})", parts.join(" "))
            }
        }
    }

    /// True if `forall`, `exists` or `lambda` occurs anywhere.
    pub fn has_binder(&self) -> bool {
        match self {
            Sexp::Atom(a) => matches!(a.as_str(), "forall" | "exists" | "lambda"),
            Sexp::List(v) => v.iter().any(Sexp::has_binder),
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(v) => {
                f.write_str("(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses the first s-expression of `text`, returning it with the number of
/// bytes consumed.
pub fn parse_prefix(text: &str) -> Result<(Sexp, usize), SexpError> {
    let bytes = text.as_bytes();
    let mut stack: Vec<Vec<Sexp>> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let token = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'(' => {
                stack.push(Vec::new());
                i += 1;
                continue;
            }
            b')' => {
                let done = stack.pop().ok_or(SexpError::Unbalanced(i))?;
                i += 1;
                Sexp::List(done)
            }
            b'|' => {
                let end = text[i + 1..].find('|').ok_or(SexpError::Unterminated)? + i + 1;
                let atom = Sexp::Atom(text[i..=end].to_string());
                i = end + 1;
                atom
            }
            b'"' => {
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => return Err(SexpError::Unterminated),
                        Some(b'"') if bytes.get(j + 1) == Some(&b'"') => j += 2,
                        Some(b'"') => break,
                        Some(_) => j += 1,
                    }
                }
                let atom = Sexp::Atom(text[i..=j].to_string());
                i = j + 1;
                atom
            }
            _ => {
                let start = i;
                while i < bytes.len() && !b" \t\r\n()|\";".contains(&bytes[i]) {
                    i += 1;
                }
                Sexp::Atom(text[start..i].to_string())
            }
        };
        match stack.last_mut() {
            Some(top) => top.push(token),
            None => return Ok((token, i)),
        }
    }
    Err(SexpError::Incomplete)
}

pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let mut out = Vec::new();
    let mut rest = text;
    while has_more(rest) {
        let (s, used) = parse_prefix(rest)?;
        out.push(s);
        rest = &rest[used..];
    }
    Ok(out)
}

fn has_more(rest: &str) -> bool {
    rest.lines()
        .map(|l| l.split(';').next().unwrap_or("").trim())
        .any(|l| !l.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(quote("s'"), "|s'|");
        assert_eq!(unquote("|s''|"), "s''");
        assert_eq!(unquote("s"), "s");
        assert_eq!(quote("σ0"), "|_u3c30|");
    }

    #[test]
    fn parse_and_print() {
        let (s, n) = parse_prefix("  (a (|b c| 1) \"x\"\"y\") rest").unwrap();
        assert_eq!(s.to_string(), "(a (|b c| 1) \"x\"\"y\")");
        assert_eq!(&"  (a (|b c| 1) \"x\"\"y\") rest"[n..], " rest");
        assert_eq!(parse_prefix("sat\n").unwrap().0, Sexp::atom("sat"));
    }

    #[test]
    fn incomplete_and_unbalanced() {
        assert_eq!(parse_prefix("((a b)"), Err(SexpError::Incomplete));
        assert_eq!(parse_prefix(")"), Err(SexpError::Unbalanced(0)));
        assert_eq!(parse_prefix("|abc"), Err(SexpError::Unterminated));
    }

    #[test]
    fn comments_and_many() {
        let v = parse_all("; hi\n(a) b ; trailing\n(c)\n; end").unwrap();
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn canonical_form_ignores_quoting() {
        let a = parse_prefix("(|call_sum| |s| |s'|)").unwrap().0;
        let b = parse_prefix("(call_sum s |s'|)").unwrap().0;
        assert_eq!(a.canonical(), b.canonical());
    }
}
