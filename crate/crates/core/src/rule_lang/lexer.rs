use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Var(String),
    Number(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Neck,
    Plus,
    Minus,
    Star,
    Slash,
    Pow,
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Neck => f.write_str("`:-`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Pow => f.write_str("`**`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Le => f.write_str("`=<`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub fn tokenize(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! push {
        ($tok:expr, $len:expr, $l:expr, $c:expr) => {{
            out.push(Spanned { tok: $tok, line: $l, column: $c });
            i += $len;
            col += $len;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        let (l, cl) = (line, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => push!(Tok::LParen, 1, l, cl),
            ')' => push!(Tok::RParen, 1, l, cl),
            '[' => push!(Tok::LBracket, 1, l, cl),
            ']' => push!(Tok::RBracket, 1, l, cl),
            ',' => push!(Tok::Comma, 1, l, cl),
            '.' => push!(Tok::Dot, 1, l, cl),
            '+' => push!(Tok::Plus, 1, l, cl),
            '-' => push!(Tok::Minus, 1, l, cl),
            '/' => push!(Tok::Slash, 1, l, cl),
            '*' if next == Some('*') => push!(Tok::Pow, 2, l, cl),
            '*' => push!(Tok::Star, 1, l, cl),
            ':' if next == Some('-') => push!(Tok::Neck, 2, l, cl),
            '>' if next == Some('=') => push!(Tok::Ge, 2, l, cl),
            '>' => push!(Tok::Gt, 1, l, cl),
            '<' if next == Some('=') => {
                return Err(ParseError::new(l, cl, vec!["`=<`".into()], "`<=`"));
            }
            '<' => push!(Tok::Lt, 1, l, cl),
            '=' if next == Some('<') => push!(Tok::Le, 2, l, cl),
            '=' => push!(Tok::Eq, 1, l, cl),
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let text: String = chars[start..j].iter().collect();
                let len = j - start;
                push!(Tok::Number(text), len, l, cl)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[start..j].iter().collect();
                let len = j - start;
                let tok = if c.is_ascii_lowercase() { Tok::Ident(text) } else { Tok::Var(text) };
                push!(tok, len, l, cl)
            }
            other => {
                return Err(ParseError::new(l, cl, Vec::new(), format!("unexpected character `{other}`")));
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn number_then_clause_dot() {
        assert_eq!(
            toks("0.7*E."),
            vec![Tok::Number("0.7".into()), Tok::Star, Tok::Var("E".into()), Tok::Dot, Tok::Eof]
        );
        assert_eq!(toks("1."), vec![Tok::Number("1".into()), Tok::Dot, Tok::Eof]);
    }

    #[test]
    fn comparison_tokens() {
        assert_eq!(toks("=< >= = > <"), vec![Tok::Le, Tok::Ge, Tok::Eq, Tok::Gt, Tok::Lt, Tok::Eof]);
    }

    #[test]
    fn less_equal_is_rejected() {
        let err = tokenize("O<=E").unwrap_err();
        assert_eq!((err.line, err.column), (1, 2));
        assert_eq!(err.expected, vec!["`=<`".to_string()]);
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(toks("% hello\na. % tail"), vec![Tok::Ident("a".into()), Tok::Dot, Tok::Eof]);
    }
}
