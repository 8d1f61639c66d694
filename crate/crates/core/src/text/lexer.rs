use std::sync::Arc;

use crate::ir::{Diagnostic, Rule, SourceSpan};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// `%name`
    Value(String),
    /// `@name`
    Sym(String),
    /// `^name`
    Label(String),
    Int(i128),
    /// Decimal literal with a fraction or exponent, kept as text for exact parsing.
    Float(String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Colon,
    Eq,
    Arrow,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

pub fn tokenize(text: &str, file: &Arc<str>) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let err = |line, column, msg: String| {
        Diagnostic::new(Rule::Syntax, msg).at(Some(SourceSpan { file: file.clone(), line, column, length: 1 }))
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let (tline, tcol) = (line, col);
        let tok = match c {
            '(' => { i += 1; Tok::LParen }
            ')' => { i += 1; Tok::RParen }
            '{' => { i += 1; Tok::LBrace }
            '}' => { i += 1; Tok::RBrace }
            '[' => { i += 1; Tok::LBracket }
            ']' => { i += 1; Tok::RBracket }
            '<' => { i += 1; Tok::Lt }
            '>' => { i += 1; Tok::Gt }
            ',' => { i += 1; Tok::Comma }
            ':' => { i += 1; Tok::Colon }
            '=' => { i += 1; Tok::Eq }
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 2;
                Tok::Arrow
            }
            '%' | '@' | '^' => {
                i += 1;
                let s = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                if s == i {
                    return Err(err(tline, tcol, format!("expected a name after `{c}`")));
                }
                let name: String = chars[s..i].iter().collect();
                match c {
                    '%' => Tok::Value(name),
                    '@' => Tok::Sym(name),
                    _ => Tok::Label(name),
                }
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(err(tline, tcol, "unterminated string".into())),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                _ => return Err(err(line, col + (i - start) as u32, "bad string escape".into())),
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
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let neg = c == '-';
                if neg {
                    i += 1;
                }
                if chars[i] == '0' && matches!(chars.get(i + 1), Some('x' | 'X')) {
                    i += 2;
                    let s = i;
                    while i < chars.len() && chars[i].is_ascii_hexdigit() {
                        i += 1;
                    }
                    let digits: String = chars[s..i].iter().collect();
                    let v = u128::from_str_radix(&digits, 16)
                        .map_err(|_| err(tline, tcol, "malformed hex literal".into()))?;
                    let v = i128::try_from(v).map_err(|_| err(tline, tcol, "hex literal too large".into()))?;
                    Tok::Int(if neg { -v } else { v })
                } else {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let mut is_float = false;
                    if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                        is_float = true;
                        i += 1;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                    if matches!(chars.get(i), Some('e' | 'E')) {
                        let mut j = i + 1;
                        if matches!(chars.get(j), Some('+' | '-')) {
                            j += 1;
                        }
                        if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                            is_float = true;
                            i = j;
                            while i < chars.len() && chars[i].is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let text: String = chars[start..i].iter().collect();
                    if is_float {
                        Tok::Float(text)
                    } else {
                        Tok::Int(text.parse().map_err(|_| err(tline, tcol, "integer literal too large".into()))?)
                    }
                }
            }
            c if is_ident_start(c) => {
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => return Err(err(tline, tcol, format!("unexpected character `{other}`"))),
        };
        let length = (i - start) as u32;
        col += length;
        out.push(Token { tok, line: tline, column: tcol, length });
    }
    out.push(Token { tok: Tok::Eof, line, column: col, length: 0 });
    Ok(out)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$'
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s, &Arc::from("t")).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_names() {
        assert_eq!(
            toks("%0 = arith.constant {value = -3} : i32"),
            vec![
                Tok::Value("0".into()),
                Tok::Eq,
                Tok::Ident("arith.constant".into()),
                Tok::LBrace,
                Tok::Ident("value".into()),
                Tok::Eq,
                Tok::Int(-3),
                Tok::RBrace,
                Tok::Colon,
                Tok::Ident("i32".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks("1.5e-3 0x7FF8000000000000")[..2], [Tok::Float("1.5e-3".into()), Tok::Int(0x7FF8000000000000)]);
    }

    #[test]
    fn comments_and_arrows() {
        assert_eq!(toks("// hi\n-> ^bb"), vec![Tok::Arrow, Tok::Label("bb".into()), Tok::Eof]);
    }

    #[test]
    fn reports_position() {
        let e = tokenize("\n  #", &Arc::from("f.mir")).unwrap_err();
        let span = e.span.unwrap();
        assert_eq!((span.line, span.column), (2, 3));
    }
}
