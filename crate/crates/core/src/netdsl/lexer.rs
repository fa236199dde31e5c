use std::fmt;

use super::Diagnostic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// A real literal; `integral` when written without a point or exponent.
    Number { value: f64, integral: bool },
    /// An imaginary literal such as `2.5i`.
    Imag(f64),
    Eq,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => f.write_str(s),
            Tok::Number { value, .. } => write!(f, "{value}"),
            Tok::Imag(v) => write!(f, "{v}i"),
            Tok::Eq => f.write_str("="),
            Tok::LBrace => f.write_str("{"),
            Tok::RBrace => f.write_str("}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::Plus => f.write_str("+"),
            Tok::Minus => f.write_str("-"),
            Tok::Star => f.write_str("*"),
            Tok::Slash => f.write_str("/"),
            Tok::Arrow => f.write_str("->"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Source text of the token.
    pub text: String,
}

/// Splits `src` into tokens. Unknown characters produce diagnostics and are
/// skipped; the token stream always ends with `Eof`.
pub fn tokenize(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let ch = chars[i];
        let pos = Pos { line, col };
        let start = i;
        match ch {
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
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                toks.push(Token {
                    tok: Tok::Ident(text.clone()),
                    pos,
                    text,
                });
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut integral = true;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    integral = false;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        integral = false;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value: f64 = text.parse().unwrap_or(f64::NAN);
                let imaginary = i < chars.len()
                    && chars[i] == 'i'
                    && !chars.get(i + 1).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_');
                if imaginary {
                    i += 1;
                }
                let full: String = chars[start..i].iter().collect();
                if !value.is_finite() {
                    diags.push(Diagnostic::new(pos, format!("number `{full}` is out of range"), &full));
                }
                let tok = if imaginary {
                    Tok::Imag(value)
                } else {
                    Tok::Number { value, integral }
                };
                toks.push(Token { tok, pos, text: full });
            }
            _ => {
                let (tok, len) = match ch {
                    '=' => (Some(Tok::Eq), 1),
                    '{' => (Some(Tok::LBrace), 1),
                    '}' => (Some(Tok::RBrace), 1),
                    '(' => (Some(Tok::LParen), 1),
                    ')' => (Some(Tok::RParen), 1),
                    '+' => (Some(Tok::Plus), 1),
                    '*' => (Some(Tok::Star), 1),
                    '/' => (Some(Tok::Slash), 1),
                    '-' if chars.get(i + 1) == Some(&'>') => (Some(Tok::Arrow), 2),
                    '-' => (Some(Tok::Minus), 1),
                    _ => (None, 1),
                };
                i += len;
                let text: String = chars[start..i].iter().collect();
                match tok {
                    Some(tok) => toks.push(Token { tok, pos, text }),
                    None => diags.push(Diagnostic::new(pos, format!("unexpected character `{ch}`"), &text)),
                }
            }
        }
        col += i - start;
    }
    toks.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
        text: String::new(),
    });
    (toks, diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).0.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn literals_and_arrows() {
        assert_eq!(
            kinds("x -> 2.5i - 3 # note\n1e-2"),
            vec![
                Tok::Ident("x".into()),
                Tok::Arrow,
                Tok::Imag(2.5),
                Tok::Minus,
                Tok::Number { value: 3.0, integral: true },
                Tok::Number { value: 0.01, integral: false },
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let (t, d) = tokenize("a\n  $b");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].pos, Pos { line: 2, col: 3 });
        assert_eq!(t[1].pos, Pos { line: 2, col: 4 });
    }

    #[test]
    fn imaginary_suffix_needs_word_boundary() {
        assert_eq!(kinds("2in")[0], Tok::Number { value: 2.0, integral: true });
    }
}
