//! Tokens for model and scenario files. Newlines are significant: they
//! end statements.

use crate::diag::{Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(u64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Arrow,
    Question,
    Equals,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(_) => "string".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Question => "`?`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

/// Splits `text` into tokens. Bad characters are reported and skipped, so
/// the token stream always ends in `Eof`.
pub fn lex(text: &str, diags: &mut Vec<Diagnostic>, file: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let col_of = |idx: usize| idx + 1;
        let mut k = 0;
        while k < chars.len() {
            let (_, c) = chars[k];
            let start = k;
            let simple = match c {
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                ':' => Some(Tok::Colon),
                '?' => Some(Tok::Question),
                '=' => Some(Tok::Equals),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Token {
                    tok,
                    line: line_no,
                    column: col_of(start),
                    length: 1,
                });
                k += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                k += 1;
                continue;
            }
            if c == '-' && chars.get(k + 1).map(|c| c.1) == Some('>') {
                out.push(Token {
                    tok: Tok::Arrow,
                    line: line_no,
                    column: col_of(start),
                    length: 2,
                });
                k += 2;
                continue;
            }
            if c == '"' {
                let mut value = String::new();
                k += 1;
                let mut closed = false;
                while k < chars.len() {
                    match chars[k].1 {
                        '"' => {
                            closed = true;
                            k += 1;
                            break;
                        }
                        '\\' if k + 1 < chars.len() => {
                            value.push(chars[k + 1].1);
                            k += 2;
                        }
                        ch => {
                            value.push(ch);
                            k += 1;
                        }
                    }
                }
                let span = SourceSpan::new(file, line_no, col_of(start), k - start);
                if !closed {
                    diags.push(Diagnostic::error(
                        "E_LEX",
                        "unterminated string",
                        span.clone(),
                    ));
                }
                out.push(Token {
                    tok: Tok::Str(value),
                    line: line_no,
                    column: span.column,
                    length: span.length,
                });
                continue;
            }
            if c.is_ascii_digit() {
                while k < chars.len() && chars[k].1.is_ascii_digit() {
                    k += 1;
                }
                let digits: String = chars[start..k].iter().map(|c| c.1).collect();
                let span = SourceSpan::new(file, line_no, col_of(start), k - start);
                match digits.parse::<u64>() {
                    Ok(n) => out.push(Token {
                        tok: Tok::Number(n),
                        line: line_no,
                        column: span.column,
                        length: span.length,
                    }),
                    Err(_) => diags.push(Diagnostic::error("E_LEX", "number out of range", span)),
                }
                continue;
            }
            if c.is_alphanumeric() || c == '_' {
                while k < chars.len() && (chars[k].1.is_alphanumeric() || chars[k].1 == '_') {
                    k += 1;
                }
                let word: String = chars[start..k].iter().map(|c| c.1).collect();
                out.push(Token {
                    tok: Tok::Ident(word),
                    line: line_no,
                    column: col_of(start),
                    length: k - start,
                });
                continue;
            }
            diags.push(Diagnostic::error(
                "E_LEX",
                format!("unexpected character `{c}`"),
                SourceSpan::new(file, line_no, col_of(start), 1),
            ));
            k += 1;
        }
        out.push(Token {
            tok: Tok::Newline,
            line: line_no,
            column: line.chars().count() + 1,
            length: 0,
        });
    }
    let last_line = text.lines().count().max(1);
    out.push(Token {
        tok: Tok::Eof,
        line: last_line,
        column: 1,
        length: 0,
    });
    out
}
