use std::fmt;

use super::ast::{Pos, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(String),
    /// A literal with a decimal point; always rejected by the parser.
    Decimal(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Equals,
    Plus,
    Minus,
    Slash,
    /// `*` or `⊗`.
    Times,
    /// Any other character.
    Unknown(char),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "`{s}`"),
            TokenKind::Int(s) | TokenKind::Decimal(s) => write!(f, "`{s}`"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Equals => f.write_str("`=`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Slash => f.write_str("`/`"),
            TokenKind::Times => f.write_str("`*`"),
            TokenKind::Unknown(c) => write!(f, "`{c}`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
    len: usize,
}

impl Cursor<'_> {
    fn pos(&mut self) -> Pos {
        let offset = self.chars.peek().map_or(self.len, |(i, _)| *i);
        Pos {
            line: self.line,
            col: self.col,
            offset,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|(_, c)| *c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Splits `text` into tokens, dropping whitespace and `#` comments.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut cur = Cursor {
        chars: text.char_indices().peekable(),
        line: 1,
        col: 1,
        len: text.len(),
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        let start = cur.pos();
        let kind = if is_ident_start(c) {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(|c| is_ident_continue(*c)) {
                s.push(c);
                cur.bump();
            }
            TokenKind::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                s.push(c);
                cur.bump();
            }
            if cur.peek() == Some('.') {
                s.push('.');
                cur.bump();
                while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric()) {
                    s.push(c);
                    cur.bump();
                }
                TokenKind::Decimal(s)
            } else {
                TokenKind::Int(s)
            }
        } else {
            cur.bump();
            match c {
                '{' => TokenKind::LBrace,
                '}' => TokenKind::RBrace,
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                ',' => TokenKind::Comma,
                ':' => TokenKind::Colon,
                '=' => TokenKind::Equals,
                '+' => TokenKind::Plus,
                '-' | '−' => TokenKind::Minus,
                '/' => TokenKind::Slash,
                '*' | '⊗' => TokenKind::Times,
                '.' => {
                    let mut s = String::from(".");
                    while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric()) {
                        s.push(c);
                        cur.bump();
                    }
                    if s.len() > 1 {
                        TokenKind::Decimal(s)
                    } else {
                        TokenKind::Unknown('.')
                    }
                }
                other => TokenKind::Unknown(other),
            }
        };
        let end = cur.pos();
        out.push(Token {
            kind,
            span: Span { start, end },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize(s).into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn amplitude_tokens() {
        use TokenKind::*;
        assert_eq!(
            kinds("1/sqrt(2) heads⊗up # note"),
            vec![
                Int("1".into()),
                Slash,
                Ident("sqrt".into()),
                LParen,
                Int("2".into()),
                RParen,
                Ident("heads".into()),
                Times,
                Ident("up".into()),
            ]
        );
    }

    #[test]
    fn decimals_are_flagged() {
        assert_eq!(kinds("0.5"), vec![TokenKind::Decimal("0.5".into())]);
        assert_eq!(kinds(".5"), vec![TokenKind::Decimal(".5".into())]);
    }

    #[test]
    fn positions_count_chars() {
        let t = tokenize("a\n  ⊗ b");
        assert_eq!((t[1].span.start.line, t[1].span.start.col), (2, 3));
        assert_eq!((t[2].span.start.line, t[2].span.start.col), (2, 5));
    }
}
