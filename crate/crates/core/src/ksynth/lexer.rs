use super::{Diagnostic, DiagnosticKind, Span};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Var(String),
    Str(String),
    Num(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Arrow,
    Slash,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Var(s) => format!("`?{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Num(_) => "number".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| Diagnostic::new(DiagnosticKind::SyntaxError, Span { line, col }, msg);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let start = i;
        let tok = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '{' => single(&mut i, Tok::LBrace),
            '}' => single(&mut i, Tok::RBrace),
            '(' => single(&mut i, Tok::LParen),
            ')' => single(&mut i, Tok::RParen),
            '[' => single(&mut i, Tok::LBracket),
            ']' => single(&mut i, Tok::RBracket),
            ',' => single(&mut i, Tok::Comma),
            '=' => single(&mut i, Tok::Eq),
            '/' => single(&mut i, Tok::Slash),
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 2;
                Tok::Arrow
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                let mut closed = false;
                while i < chars.len() {
                    match chars[i] {
                        '"' => {
                            closed = true;
                            i += 1;
                            break;
                        }
                        '\\' => {
                            let esc = chars.get(i + 1).copied();
                            s.push(match esc {
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('"') => '"',
                                Some('\\') => '\\',
                                _ => return Err(err(line, col + (i - start), "invalid escape".into())),
                            });
                            i += 2;
                        }
                        '\n' => {
                            return Err(err(line, col, "unterminated string".into()));
                        }
                        ch => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                if !closed {
                    return Err(err(line, col, "unterminated string".into()));
                }
                Tok::Str(s)
            }
            '?' => {
                i += 1;
                let s = i;
                while i < chars.len() && ident_char(chars[i]) && !arrow_at(&chars, i) {
                    i += 1;
                }
                if s == i || !ident_start(chars[s]) {
                    return Err(err(line, col, "expected variable name after `?`".into()));
                }
                Tok::Var(chars[s..i].iter().collect())
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j], '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                if i < chars.len() && ident_char(chars[i]) && !arrow_at(&chars, i) {
                    return Err(err(line, col, format!("malformed number `{s}{}`", chars[i])));
                }
                Tok::Num(
                    s.parse()
                        .map_err(|_| err(line, col, format!("malformed number `{s}`")))?,
                )
            }
            c if ident_start(c) => {
                while i < chars.len() && ident_char(chars[i]) && !arrow_at(&chars, i) {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        };
        col += i - start;
        out.push(Token { tok, span });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}

fn arrow_at(chars: &[char], i: usize) -> bool {
    chars[i] == '-' && chars.get(i + 1) == Some(&'>')
}

fn single(i: &mut usize, t: Tok) -> Tok {
    *i += 1;
    t
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
            toks("slot speed = 18 \"knots\" # comment\n"),
            vec![
                Tok::Ident("slot".into()),
                Tok::Ident("speed".into()),
                Tok::Eq,
                Tok::Num(18.0),
                Tok::Str("knots".into()),
                Tok::Eof
            ]
        );
        assert_eq!(
            toks("a-b->next ?x -2.5e3"),
            vec![
                Tok::Ident("a-b".into()),
                Tok::Arrow,
                Tok::Ident("next".into()),
                Tok::Var("x".into()),
                Tok::Num(-2500.0),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_and_errors() {
        let t = tokenize("a\n  b").unwrap();
        assert_eq!((t[1].span.line, t[1].span.col), (2, 3));
        let e = tokenize("x \"open").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
        assert!(tokenize("$").is_err());
    }
}
