//! Tokenizer for program text.

use super::ast::Pos;
use super::SyntaxError;
use crate::cas::{parse_rational, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(Rational),
    /// Punctuation and operators, normalised to ASCII spellings.
    Sym(&'static str),
    /// `@name` annotation keyword.
    At(String),
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMBOLS: &[(&str, &str)] = &[
    (":=", ":="),
    ("+=", "+="),
    ("-=", "-="),
    ("++", "++"),
    ("--", "--"),
    ("<=", "<="),
    (">=", ">="),
    ("==", "="),
    ("!=", "!="),
    ("<>", "!="),
    ("&&", "&&"),
    ("||", "||"),
    ("≤", "<="),
    ("≥", ">="),
    ("≠", "!="),
    ("∧", "&&"),
    ("∨", "||"),
    ("¬", "!"),
    ("&", "&&"),
    ("|", "||"),
    ("<", "<"),
    (">", ">"),
    ("=", "="),
    ("!", "!"),
    (";", ";"),
    (",", ","),
    (":", ":"),
    ("{", "{"),
    ("}", "}"),
    ("(", "("),
    (")", ")"),
    ("[", "["),
    ("]", "]"),
    ("+", "+"),
    ("-", "-"),
    ("*", "*"),
    ("·", "*"),
    ("/", "/"),
];

pub fn lex(src: &str, first_line: usize) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    for (k, line) in src.lines().enumerate() {
        let lineno = first_line + k;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        'line: while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: lineno, col: i + 1 };
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '/' && chars.get(i + 1) == Some(&'/') {
                break;
            }
            if c == '#' {
                break;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = parse_rational(&text).ok_or_else(|| SyntaxError::Parse {
                    pos,
                    msg: format!("malformed number {text:?}"),
                })?;
                out.push(Token { tok: Tok::Num(v), pos });
                continue;
            }
            if c.is_alphabetic() || c == '_' || c == '@' {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let tok = match text.strip_prefix('@') {
                    Some(name) if !name.is_empty() => Tok::At(name.to_string()),
                    Some(_) => return Err(SyntaxError::Parse { pos, msg: "empty annotation".into() }),
                    None => Tok::Ident(text),
                };
                out.push(Token { tok, pos });
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            for (spelling, norm) in SYMBOLS {
                if rest.starts_with(spelling) {
                    out.push(Token { tok: Tok::Sym(norm), pos });
                    i += spelling.chars().count();
                    continue 'line;
                }
            }
            return Err(SyntaxError::Parse { pos, msg: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}
