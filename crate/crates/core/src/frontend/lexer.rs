use super::ast::Span;
use super::{ErrorKind, FrontendError};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Integer magnitude; sign is handled by the parser.
    Int(u64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Dot,
    DotDot,
    Pipe,
    Star,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Minus,
    Plus,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let simple = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b'{' => Some(Tok::LBrace),
            b'}' => Some(Tok::RBrace),
            b',' => Some(Tok::Comma),
            b':' => Some(Tok::Colon),
            b'|' => Some(Tok::Pipe),
            b'*' => Some(Tok::Star),
            b'=' => Some(Tok::Eq),
            b'-' => Some(Tok::Minus),
            b'+' => Some(Tok::Plus),
            _ => None,
        };
        if let Some(tok) = simple {
            i += 1;
            out.push(Token { tok, span: Span::new(start, i) });
            continue;
        }
        match c {
            b'.' => {
                if bytes.get(i + 1) == Some(&b'.') {
                    i += 2;
                    out.push(Token { tok: Tok::DotDot, span: Span::new(start, i) });
                } else if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                    return Err(syntax(start, start + 2, "non-integer numeric literal"));
                } else {
                    i += 1;
                    out.push(Token { tok: Tok::Dot, span: Span::new(start, i) });
                }
            }
            b'<' => {
                let (tok, len) = match bytes.get(i + 1) {
                    Some(b'=') => (Tok::Le, 2),
                    Some(b'>') => (Tok::Ne, 2),
                    _ => (Tok::Lt, 1),
                };
                i += len;
                out.push(Token { tok, span: Span::new(start, i) });
            }
            b'>' => {
                let (tok, len) = if bytes.get(i + 1) == Some(&b'=') { (Tok::Ge, 2) } else { (Tok::Gt, 1) };
                i += len;
                out.push(Token { tok, span: Span::new(start, i) });
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 2;
                out.push(Token { tok: Tok::Ne, span: Span::new(start, i) });
            }
            b'\'' | b'"' => {
                let (s, end) = lex_string(src, i)?;
                i = end;
                out.push(Token { tok: Tok::Str(s), span: Span::new(start, i) });
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let is_float = (bytes.get(i) == Some(&b'.') && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
                    || matches!(bytes.get(i), Some(b'e' | b'E'));
                if is_float {
                    return Err(syntax(start, i + 1, "non-integer numeric literal"));
                }
                if bytes.get(i).is_some_and(|b| b.is_ascii_alphabetic() || *b == b'_') {
                    return Err(syntax(start, i + 1, "malformed number"));
                }
                let text = &src[start..i];
                let n: u64 = text.parse().map_err(|_| syntax(start, i, "integer literal out of range"))?;
                out.push(Token { tok: Tok::Int(n), span: Span::new(start, i) });
            }
            b'$' => return Err(syntax(start, start + 1, "query parameters are not supported")),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(src[start..i].to_string()), span: Span::new(start, i) });
            }
            _ => {
                let ch_len = src[i..].chars().next().map_or(1, char::len_utf8);
                return Err(syntax(start, start + ch_len, "unexpected character"));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(src.len(), src.len()) });
    Ok(out)
}

fn lex_string(src: &str, start: usize) -> Result<(String, usize), FrontendError> {
    let bytes = src.as_bytes();
    let quote = bytes[start];
    let mut s = String::new();
    let mut i = start + 1;
    loop {
        let Some(ch) = src[i..].chars().next() else {
            return Err(syntax(start, src.len(), "unterminated string literal"));
        };
        match ch {
            '\\' => {
                let next = src[i + 1..].chars().next();
                match next {
                    Some(c @ ('\'' | '"' | '\\')) => {
                        s.push(c);
                        i += 2;
                    }
                    _ => return Err(syntax(i, i + 2, "unsupported escape sequence")),
                }
            }
            c if c as u32 == quote as u32 => return Ok((s, i + 1)),
            c => {
                s.push(c);
                i += c.len_utf8();
            }
        }
    }
}

pub(crate) fn syntax(start: usize, end: usize, msg: &str) -> FrontendError {
    FrontendError { kind: ErrorKind::Syntax, span: Span::new(start, end), message: msg.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_split_into_punctuation() {
        assert_eq!(toks("<-->"), vec![Tok::Lt, Tok::Minus, Tok::Minus, Tok::Gt, Tok::Eof]);
        assert_eq!(toks("a<>b")[1], Tok::Ne);
    }

    #[test]
    fn string_escapes() {
        assert_eq!(toks(r#"'it\'s' "a\"b\\""#)[..2], [Tok::Str("it's".into()), Tok::Str("a\"b\\".into())]);
        assert!(tokenize(r"'\n'").is_err());
        assert!(tokenize("'open").is_err());
    }

    #[test]
    fn floats_and_params_rejected() {
        let e = tokenize("RETURN 1.5").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Syntax);
        assert_eq!(e.span.start, 7);
        assert!(tokenize("RETURN $x").is_err());
        assert!(tokenize("RETURN 1e3").is_err());
    }
}
