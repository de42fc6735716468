use std::collections::BTreeSet;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Word(String),
    Str(Vec<u8>),
    Period,
    Eq,
    Ne,
    LParen,
    RParen,
    Comma,
    Colon,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

impl Token {
    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }
}

const PRAGMA: &str = "@reject";

fn is_word_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'-' || c == b'_'
}

/// Tokens plus the lines carrying a reject pragma. A trailing pragma marks
/// its own line; a pragma on an otherwise empty line marks the next line
/// that has tokens.
pub fn lex(src: &str) -> Result<(Vec<Token>, BTreeSet<u32>), ParseError> {
    let mut out: Vec<Token> = Vec::new();
    let mut marked = BTreeSet::new();
    let mut pending_mark = false;
    for (ln, text) in src.lines().enumerate() {
        let line = ln as u32 + 1;
        let bytes = text.as_bytes();
        let first_on_line = out.len();
        let mut i = 0;
        let mut trailing_pragma = false;
        while i < bytes.len() {
            let c = bytes[i];
            let col = i as u32 + 1;
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, col });
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c == b'*' && bytes.get(i + 1) == Some(&b'>') {
                let comment = &text[i + 2..];
                if comment.contains(PRAGMA) {
                    if out.len() > first_on_line {
                        trailing_pragma = true;
                    } else {
                        pending_mark = true;
                    }
                }
                break;
            } else if c == b'\'' || c == b'"' {
                let mut lit = Vec::new();
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => {
                            return Err(ParseError::syntax(line, col, "unterminated literal"));
                        }
                        Some(&q) if q == c => {
                            if bytes.get(j + 1) == Some(&c) {
                                lit.push(c);
                                j += 2;
                            } else {
                                j += 1;
                                break;
                            }
                        }
                        Some(&b) => {
                            lit.push(b);
                            j += 1;
                        }
                    }
                }
                push(&mut out, Tok::Str(lit));
                i = j;
            } else if is_word_char(c) {
                let mut j = i;
                while j < bytes.len() {
                    let dotted = bytes[j] == b'.' && bytes.get(j + 1).is_some_and(|&n| is_word_char(n));
                    if is_word_char(bytes[j]) || dotted {
                        j += 1;
                    } else {
                        break;
                    }
                }
                push(&mut out, Tok::Word(text[i..j].to_string()));
                i = j;
            } else {
                let (tok, w) = match (c, bytes.get(i + 1)) {
                    (b'<', Some(b'>')) => (Tok::Ne, 2),
                    (b'!', Some(b'=')) => (Tok::Ne, 2),
                    (b'=', Some(b'=')) => (Tok::Eq, 2),
                    (b'=', _) => (Tok::Eq, 1),
                    (b'.', _) => (Tok::Period, 1),
                    (b'(', _) => (Tok::LParen, 1),
                    (b')', _) => (Tok::RParen, 1),
                    (b',', _) => (Tok::Comma, 1),
                    (b':', _) => (Tok::Colon, 1),
                    _ => return Err(ParseError::syntax(line, col, format!("unexpected character '{}'", c as char))),
                };
                push(&mut out, tok);
                i += w;
            }
        }
        if out.len() > first_on_line && (pending_mark || trailing_pragma) {
            marked.insert(line);
            pending_mark = false;
        }
    }
    Ok((out, marked))
}
