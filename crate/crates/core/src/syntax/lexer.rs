use super::{ParseError, ParseErrorKind, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Lowercase identifier: predicate, constant or keyword.
    Ident(String),
    /// Uppercase (or `_`-prefixed) identifier.
    Var(String),
    Num(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Leq,
    Eq,
    Plus,
    At,
    Colon,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) | Tok::Num(s) => format!("'{s}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Dot => "'.'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Leq => "'<='".into(),
            Tok::Eq => "'='".into(),
            Tok::Plus => "'+'".into(),
            Tok::At => "'@'".into(),
            Tok::Colon => "':'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut line = 1;
    let mut line_start = 0;
    let span_at = |offset: usize, line: usize, line_start: usize| SourceSpan {
        line,
        column: text[line_start..offset].chars().count() + 1,
        offset,
    };
    while let Some(&(i, c)) = chars.peek() {
        let span = span_at(i, line, line_start);
        if c == '\n' {
            chars.next();
            line += 1;
            line_start = i + 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '%' {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        let take_word = |chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>| {
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                s.push(c);
                chars.next();
            }
            s
        };
        let tok = match c {
            '(' | ')' | ',' | '.' | '+' | '@' | '=' => {
                chars.next();
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '+' => Tok::Plus,
                    '@' => Tok::At,
                    _ => Tok::Eq,
                }
            }
            ':' => {
                chars.next();
                Tok::Colon
            }
            '-' => {
                chars.next();
                match chars.peek() {
                    Some(&(_, '>')) => {
                        chars.next();
                        Tok::Arrow
                    }
                    _ => return Err(ParseError::new(ParseErrorKind::Lexical, span, "expected '->'")),
                }
            }
            '<' => {
                chars.next();
                match chars.peek() {
                    Some(&(_, '=')) => {
                        chars.next();
                        Tok::Leq
                    }
                    _ => return Err(ParseError::new(ParseErrorKind::Lexical, span, "expected '<='")),
                }
            }
            '_' => {
                chars.next();
                if let Some(&(_, ':')) = chars.peek() {
                    return Err(ParseError::new(
                        ParseErrorKind::NullInSource,
                        span,
                        "labelled nulls cannot occur in source text",
                    ));
                }
                let rest = take_word(&mut chars);
                Tok::Var(format!("_{rest}"))
            }
            c if c.is_ascii_digit() => {
                let w = take_word(&mut chars);
                if !w.chars().all(|c| c.is_ascii_digit()) {
                    return Err(ParseError::new(ParseErrorKind::Lexical, span, format!("malformed number '{w}'")));
                }
                Tok::Num(w)
            }
            c if c.is_ascii_uppercase() => Tok::Var(take_word(&mut chars)),
            c if c.is_ascii_lowercase() => Tok::Ident(take_word(&mut chars)),
            other => {
                return Err(ParseError::new(
                    ParseErrorKind::Lexical,
                    span,
                    format!("unexpected character {other:?}"),
                ))
            }
        };
        out.push(Token { tok, span });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span_at(text.len(), line, line_start),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("p(X) -> @T q. % comment\nU = T + 1, a <= B"),
            vec![
                Tok::Ident("p".into()),
                Tok::LParen,
                Tok::Var("X".into()),
                Tok::RParen,
                Tok::Arrow,
                Tok::At,
                Tok::Var("T".into()),
                Tok::Ident("q".into()),
                Tok::Dot,
                Tok::Var("U".into()),
                Tok::Eq,
                Tok::Var("T".into()),
                Tok::Plus,
                Tok::Num("1".into()),
                Tok::Comma,
                Tok::Ident("a".into()),
                Tok::Leq,
                Tok::Var("B".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn spans_and_errors() {
        let t = tokenize("p.\n  q").unwrap();
        assert_eq!(t[2].span, SourceSpan { line: 2, column: 3, offset: 5 });
        assert_eq!(tokenize("p(_:n1)").unwrap_err().kind, ParseErrorKind::NullInSource);
        assert_eq!(tokenize("p # q").unwrap_err().kind, ParseErrorKind::Lexical);
        assert_eq!(tokenize("12ab").unwrap_err().kind, ParseErrorKind::Lexical);
    }
}
