use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// A literal such as `0.25`; only meaningful as a permission.
    Decimal(String),
    Wildcard,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Assign,
    Comma,
    Semi,
    Colon,
    Dot,
    Star,
    Plus,
    Minus,
    Slash,
    Bang,
    Question,
    Tilde,
    Arrow,
    PointsTo,
    EndpointArrow,
    ParBar,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Int(n) => return write!(f, "integer `{n}`"),
            Tok::Decimal(s) => return write!(f, "decimal `{s}`"),
            Tok::Wildcard => "`_`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::EqEq => "`==`",
            Tok::Ne => "`!=`",
            Tok::Assign => "`=`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Colon => "`:`",
            Tok::Dot => "`.`",
            Tok::Star => "`*`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Slash => "`/`",
            Tok::Bang => "`!`",
            Tok::Question => "`?`",
            Tok::Tilde => "`~`",
            Tok::Arrow => "`->`",
            Tok::PointsTo => "`|->`",
            Tok::EndpointArrow => "`~>`",
            Tok::ParBar => "`||`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let at = |k: usize| chars.get(i + k).copied().unwrap_or('\0');
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
        if c == '/' && at(1) == '/' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let tok = if word == "_" { Tok::Wildcard } else { Tok::Ident(word) };
            (tok, j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                let mut k = j + 1;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                let text: String = chars[i..k].iter().collect();
                out.push(Token { tok: Tok::Decimal(text), line, col });
                col += (k - i) as u32;
                i = k;
                continue;
            }
            let text: String = chars[i..j].iter().collect();
            let n = text.parse::<i64>().map_err(|_| ParseError::Syntax {
                line,
                col,
                message: format!("integer literal `{text}` out of range"),
            })?;
            (Tok::Int(n), j - i)
        } else {
            match (c, at(1), at(2)) {
                ('|', '-', '>') => (Tok::PointsTo, 3),
                ('|', '|', _) => (Tok::ParBar, 2),
                ('~', '>', _) => (Tok::EndpointArrow, 2),
                ('-', '>', _) => (Tok::Arrow, 2),
                ('<', '=', _) => (Tok::Le, 2),
                ('>', '=', _) => (Tok::Ge, 2),
                ('=', '=', _) => (Tok::EqEq, 2),
                ('!', '=', _) => (Tok::Ne, 2),
                ('(', ..) => (Tok::LParen, 1),
                (')', ..) => (Tok::RParen, 1),
                ('{', ..) => (Tok::LBrace, 1),
                ('}', ..) => (Tok::RBrace, 1),
                ('[', ..) => (Tok::LBracket, 1),
                (']', ..) => (Tok::RBracket, 1),
                ('<', ..) => (Tok::Lt, 1),
                ('>', ..) => (Tok::Gt, 1),
                ('=', ..) => (Tok::Assign, 1),
                (',', ..) => (Tok::Comma, 1),
                (';', ..) => (Tok::Semi, 1),
                (':', ..) => (Tok::Colon, 1),
                ('.', ..) => (Tok::Dot, 1),
                ('*', ..) => (Tok::Star, 1),
                ('+', ..) => (Tok::Plus, 1),
                ('-', ..) => (Tok::Minus, 1),
                ('/', ..) => (Tok::Slash, 1),
                ('!', ..) => (Tok::Bang, 1),
                ('?', ..) => (Tok::Question, 1),
                ('~', ..) => (Tok::Tilde, 1),
                _ => {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        out.push(Token { tok, line: start_line, col: start_col });
        i += len;
        col += len as u32;
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
