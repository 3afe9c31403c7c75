use super::parser::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    /// Lowercase-initial identifier or keyword.
    Ident(String),
    /// Capitalized identifier (constructor name).
    UIdent(String),
    /// `'a` style type variable.
    TyVar(String),
    Int(i64),
    Eq,
    Star,
    Bar,
    LParen,
    RParen,
    /// `[@`
    AttrOpen,
    /// `[@@`
    DeclAttrOpen,
    RBracket,
    Arrow,
    AndAnd,
    Plus,
    Minus,
    Le,
    Ge,
    Lt,
    Gt,
    Ne,
    Comma,
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(super) fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        let (tl, tc) = (line, col);
        // nested (* ... *) comments
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(ParseError::new(tl, tc, "unterminated comment"));
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    bump!();
                    bump!();
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    bump!();
                    bump!();
                    if depth == 0 {
                        break;
                    }
                } else {
                    bump!();
                }
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            let tok = if c.is_ascii_uppercase() { Tok::UIdent(word) } else { Tok::Ident(word) };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<i64>()
                .map_err(|_| ParseError::new(tl, tc, format!("integer literal `{text}` out of range")))?;
            out.push(Token { tok: Tok::Int(v), line: tl, col: tc });
            continue;
        } else if c == '\'' {
            bump!();
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let name: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::TyVar(name), line: tl, col: tc });
            continue;
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, width) = match (c, next) {
                ('[', Some('@')) if chars.get(i + 2) == Some(&'@') => (Tok::DeclAttrOpen, 3),
                ('[', Some('@')) => (Tok::AttrOpen, 2),
                (']', _) => (Tok::RBracket, 1),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('&', Some('&')) => (Tok::AndAnd, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('<', Some('>')) => (Tok::Ne, 2),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('=', _) => (Tok::Eq, 1),
                ('*', _) => (Tok::Star, 1),
                ('|', _) => (Tok::Bar, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                (',', _) => (Tok::Comma, 1),
                _ => return Err(ParseError::new(tl, tc, format!("unexpected character `{c}`"))),
            };
            for _ in 0..width {
                bump!();
            }
            tok
        };
        out.push(Token { tok, line: tl, col: tc });
    }
    Ok(out)
}
