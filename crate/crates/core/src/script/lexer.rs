use super::ast::Span;
use super::ScriptError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Comment(String),
    Newline,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(_) => "string".into(),
            Tok::Comment(_) => "comment".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Splits source into tokens. Newlines inside parentheses are dropped so
/// long argument lists may wrap.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ScriptError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut depth = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let start = i;
        let tok = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                if depth == 0 {
                    out.push(Token { tok: Tok::Newline, span });
                }
                continue;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                let body: String = chars[start + 1..i].iter().collect();
                let body = body.trim_end_matches('\r');
                let body = body.strip_prefix(' ').unwrap_or(body);
                Tok::Comment(body.trim_end().to_string())
            }
            '(' => {
                depth += 1;
                i += 1;
                Tok::LParen
            }
            ')' => {
                depth = depth.saturating_sub(1);
                i += 1;
                Tok::RParen
            }
            '{' => {
                i += 1;
                Tok::LBrace
            }
            '}' => {
                i += 1;
                Tok::RBrace
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '=' => {
                i += 1;
                Tok::Eq
            }
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '/' => {
                i += 1;
                Tok::Slash
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(ScriptError::lex(span, "unterminated string literal")),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                _ => {
                                    return Err(ScriptError::lex(
                                        Span { line, col: col + (i - start) as u32 },
                                        "unknown escape sequence",
                                    ))
                                }
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => Tok::Number(v),
                    Ok(_) => return Err(ScriptError::lex(span, format!("numeric literal `{text}` is out of range"))),
                    Err(_) => return Err(ScriptError::lex(span, format!("malformed number `{text}`"))),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => return Err(ScriptError::lex(span, format!("illegal character `{other}`"))),
        };
        col += (i - start) as u32;
        out.push(Token { tok, span });
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_operators() {
        assert_eq!(
            toks("r = 2.5e1 - .5"),
            vec![
                Tok::Ident("r".into()),
                Tok::Eq,
                Tok::Number(25.0),
                Tok::Minus,
                Tok::Number(0.5),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn newlines_suppressed_inside_parens() {
        assert_eq!(toks("f(1,\n2)\n").iter().filter(|t| **t == Tok::Newline).count(), 1);
    }

    #[test]
    fn comment_text_keeps_content() {
        assert_eq!(toks("#  two spaces")[0], Tok::Comment(" two spaces".into()));
    }

    #[test]
    fn reports_position_of_illegal_character() {
        let e = tokenize("a = 1\nb = $").unwrap_err();
        assert_eq!(e.span(), Span { line: 2, col: 5 });
        assert!(e.to_string().contains("illegal character"));
    }

    #[test]
    fn rejects_bad_literals() {
        assert!(tokenize("x = 1e999").is_err());
        assert!(tokenize("x = 1.2.3").is_err());
        assert!(tokenize("save \"oops").is_err());
    }
}
