//! Tokenizer for `.tfl` source text. Line comments start with `//`.

use crate::parser::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    KwClass,
    KwExtends,
    KwMain,
    KwNew,
    KwNull,
    KwReturn,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Eq,
    Dot,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::KwClass => "`class`".into(),
            TokenKind::KwExtends => "`extends`".into(),
            TokenKind::KwMain => "`main`".into(),
            TokenKind::KwNew => "`new`".into(),
            TokenKind::KwNull => "`null`".into(),
            TokenKind::KwReturn => "`return`".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Eq => "`=`".into(),
            TokenKind::Dot => "`.`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub col: u32,
}

pub fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    while let Some(&c) = chars.peek() {
        let (tok_line, tok_col) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '/' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'/') {
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        chars.next();
                        col += 1;
                    }
                } else {
                    return Err(ParseError::Syntax {
                        expected: "a token".into(),
                        found: "`/`".into(),
                        line: tok_line,
                        col: tok_col,
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let kind = match word.as_str() {
                    "class" => TokenKind::KwClass,
                    "extends" => TokenKind::KwExtends,
                    "main" => TokenKind::KwMain,
                    "new" => TokenKind::KwNew,
                    "null" => TokenKind::KwNull,
                    "return" => TokenKind::KwReturn,
                    _ => TokenKind::Ident(word),
                };
                tokens.push(Token { kind, line: tok_line, col: tok_col });
            }
            _ => {
                let kind = match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ';' => TokenKind::Semi,
                    '=' => TokenKind::Eq,
                    '.' => TokenKind::Dot,
                    other => {
                        return Err(ParseError::Syntax {
                            expected: "a token".into(),
                            found: format!("`{other}`"),
                            line: tok_line,
                            col: tok_col,
                        })
                    }
                };
                chars.next();
                col += 1;
                tokens.push(Token { kind, line: tok_line, col: tok_col });
            }
        }
    }
    tokens.push(Token { kind: TokenKind::Eof, line, col });
    Ok(tokens)
}
