use crate::Rational;
use num_bigint::BigInt;
use num_traits::{Pow, Zero};

use super::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(Rational),
    Iff,     // <=>
    Implies, // =>
    Weaker,  // <<
    Box,     // []
    And,     // & or /\
    Dot,
    Comma,
    LParen,
    RParen,
    Prime,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// No whitespace between this token and the previous one.
    pub attached: bool,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut attached = false;

    let err = |line, col, msg: String| SyntaxError::Parse { line, col, msg };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            attached = false;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            attached = false;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            attached = false;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (sl, sc) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i >= chars.len() {
                    return Err(err(sl, sc, "unterminated comment".into()));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            attached = false;
            continue;
        }

        let (start_line, start_col) = (line, col);
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            // Skolem suffix `#k`
            if j < chars.len() && chars[j] == '#' {
                let mut k = j + 1;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                if k == j + 1 {
                    return Err(err(line, col + (j - i), "expected digits after '#'".into()));
                }
                j = k;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let int_part: String = chars[i..j].iter().collect();
            let mut frac_part = String::new();
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                let mut k = j + 1;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                frac_part = chars[j + 1..k].iter().collect();
                j = k;
            }
            (Tok::Num(decimal_to_rational(&int_part, &frac_part)), j - i)
        } else if rest.starts_with("<=>") {
            (Tok::Iff, 3)
        } else if rest.starts_with("=>") {
            (Tok::Implies, 2)
        } else if rest.starts_with("<<") {
            (Tok::Weaker, 2)
        } else if rest.starts_with("<=") {
            (Tok::Le, 2)
        } else if rest.starts_with(">=") {
            (Tok::Ge, 2)
        } else if rest.starts_with("!=") {
            (Tok::Ne, 2)
        } else if rest.starts_with("[]") {
            (Tok::Box, 2)
        } else if rest.starts_with("/\\") {
            (Tok::And, 2)
        } else {
            let t = match c {
                '&' => Tok::And,
                '.' => Tok::Dot,
                ',' => Tok::Comma,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '\'' => Tok::Prime,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '=' => Tok::Eq,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                other => return Err(err(line, col, format!("unexpected character '{other}'"))),
            };
            (t, 1)
        };
        out.push(Token { tok, line: start_line, col: start_col, attached });
        i += len;
        col += len;
        attached = true;
    }
    out.push(Token { tok: Tok::Eof, line, col, attached: false });
    Ok(out)
}

fn decimal_to_rational(int_part: &str, frac_part: &str) -> Rational {
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
    let d = BigInt::from(10).pow(frac_part.len() as u32);
    Rational::new(n, d)
}
