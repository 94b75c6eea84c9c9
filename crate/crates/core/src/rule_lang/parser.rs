use super::ast::{ArithOp, Atom, Comparison, Literal, RuleClause, Term};
use super::lexer::{tokenize, Spanned, Tok};
use super::ParseError;
use crate::decimal::Decimal;

/// A top-level clause with the position of its first token.
#[derive(Debug, Clone)]
pub enum Clause {
    Rule(RuleClause),
    Complement(Atom, Atom),
    Abducible(Atom),
}

#[derive(Debug, Clone)]
pub struct Located<T> {
    pub item: T,
    pub line: usize,
    pub column: usize,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(source: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(source)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let at = &self.toks[self.pos];
        ParseError::new(
            at.line,
            at.column,
            expected.iter().map(|s| s.to_string()).collect(),
            at.tok.to_string(),
        )
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(_) => match self.bump() {
                Tok::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.error(&[what])),
        }
    }

    fn clause(&mut self) -> Result<Located<Clause>, ParseError> {
        let (line, column) = (self.toks[self.pos].line, self.toks[self.pos].column);
        let keyword = self.ident("`rule`, `complement` or `abducible`")?;
        let item = match keyword.as_str() {
            "rule" => Clause::Rule(self.rule_clause()?),
            "complement" => {
                self.expect(Tok::LParen, "`(`")?;
                let a = self.atom()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.atom()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Dot, "`.`")?;
                Clause::Complement(a, b)
            }
            "abducible" => {
                self.expect(Tok::LParen, "`(`")?;
                let a = self.atom()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Dot, "`.`")?;
                Clause::Abducible(a)
            }
            _ => {
                self.pos -= 1;
                return Err(self.error(&["`rule`", "`complement`", "`abducible`"]));
            }
        };
        Ok(Located { item, line, column })
    }

    fn rule_clause(&mut self) -> Result<RuleClause, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let label = self.ident("rule label")?;
        self.expect(Tok::Comma, "`,`")?;
        let head = if matches!(self.peek(), Tok::Ident(s) if s == "prefer") && *self.peek_at(1) == Tok::LParen {
            self.bump();
            self.bump();
            let a = self.ident("rule label")?;
            self.expect(Tok::Comma, "`,`")?;
            let b = self.ident("rule label")?;
            self.expect(Tok::RParen, "`)`")?;
            Literal::Prefer(a, b)
        } else {
            Literal::Domain(self.atom()?)
        };
        self.expect(Tok::Comma, "`,`")?;
        self.expect(Tok::LBracket, "`[`")?;
        let mut premises = Vec::new();
        if *self.peek() != Tok::RBracket {
            loop {
                premises.push(self.body_atom()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::RParen, "`)`")?;
        let conditions = if *self.peek() == Tok::Neck {
            self.bump();
            self.body()?
        } else {
            Vec::new()
        };
        self.expect(Tok::Dot, "`.`")?;
        Ok(RuleClause { label, head, premises, conditions })
    }

    fn body(&mut self) -> Result<Vec<Literal>, ParseError> {
        let mut out = vec![self.body_literal()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.body_literal()?);
        }
        Ok(out)
    }

    fn body_literal(&mut self) -> Result<Literal, ParseError> {
        match self.peek() {
            Tok::Ident(_) => Ok(Literal::Domain(self.body_atom()?)),
            Tok::Var(_) | Tok::Number(_) | Tok::LParen | Tok::Minus => {
                let lhs = self.arith()?;
                let cmp = match self.peek() {
                    Tok::Gt => Comparison::Gt,
                    Tok::Lt => Comparison::Lt,
                    Tok::Ge => Comparison::Ge,
                    Tok::Le => Comparison::Le,
                    Tok::Eq => Comparison::Eq,
                    _ => return Err(self.error(&["`>`", "`<`", "`>=`", "`=<`", "`=`"])),
                };
                self.bump();
                let rhs = self.arith()?;
                Ok(Literal::Builtin(cmp, lhs, rhs))
            }
            _ => Err(self.error(&["literal"])),
        }
    }

    /// Domain atom in a body position, where `prefer/2` is reserved.
    fn body_atom(&mut self) -> Result<Atom, ParseError> {
        if matches!(self.peek(), Tok::Ident(s) if s == "prefer") {
            return Err(self.error(&["domain literal"]));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let predicate = self.ident("predicate name")?;
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                args.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(Atom { predicate, args })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Ident(_) => {
                let a = self.atom()?;
                Ok(if a.args.is_empty() { Term::Atom(a.predicate) } else { Term::Compound(a.predicate, a.args) })
            }
            _ => self.arith(),
        }
    }

    fn arith(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Term::arith(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.power()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.power()?;
            lhs = Term::arith(op, lhs, rhs);
        }
    }

    fn power(&mut self) -> Result<Term, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Pow {
            self.bump();
            let exponent = self.power()?;
            return Ok(Term::arith(ArithOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Variable(v))
            }
            Tok::Number(n) => {
                self.bump();
                Ok(Term::Number(self.decimal(&n)?))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Number(_)) => {
                self.bump();
                let Tok::Number(n) = self.bump() else { unreachable!() };
                Ok(Term::Number(self.decimal(&format!("-{n}"))?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.arith()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error(&["number", "variable", "`(`"])),
        }
    }

    fn decimal(&self, text: &str) -> Result<Decimal, ParseError> {
        text.parse().map_err(|_| self.error(&["number"]))
    }
}

pub fn parse_clauses(source: &str) -> Result<Vec<Located<Clause>>, ParseError> {
    let mut p = Parser::new(source)?;
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        out.push(p.clause()?);
    }
    Ok(out)
}

/// Parses a comma-separated condition list such as `offered_salary(O),O>=E`.
pub fn parse_body(source: &str) -> Result<Vec<Literal>, ParseError> {
    let mut p = Parser::new(source)?;
    let body = p.body()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["`,`", "end of input"]));
    }
    Ok(body)
}

pub fn parse_atom(source: &str) -> Result<Atom, ParseError> {
    let mut p = Parser::new(source)?;
    let atom = p.atom()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    Ok(atom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_precedence() {
        let body = parse_body("O*((1+X)**2)>1.5*E").unwrap();
        let Literal::Builtin(Comparison::Gt, lhs, rhs) = &body[0] else { panic!() };
        assert_eq!(lhs.to_string(), "O*((1+X)**2)");
        assert_eq!(rhs.to_string(), "1.5*E");
        let Term::Arith(ArithOp::Mul, _, pow) = lhs else { panic!() };
        assert!(matches!(**pow, Term::Arith(ArithOp::Pow, _, _)));
    }

    #[test]
    fn power_is_right_associative() {
        let body = parse_body("2**3**2=512").unwrap();
        let Literal::Builtin(_, lhs, _) = &body[0] else { panic!() };
        assert_eq!(lhs.to_string(), "2**(3**2)");
    }

    #[test]
    fn subtraction_is_left_associative() {
        let body = parse_body("10-3-2=5").unwrap();
        let Literal::Builtin(_, lhs, _) = &body[0] else { panic!() };
        assert_eq!(lhs.to_string(), "(10-3)-2");
    }

    #[test]
    fn negative_literals() {
        let body = parse_body("X- -3>0, p(-2)").unwrap();
        assert_eq!(body[0].to_string(), "X-(-3)>0");
        assert_eq!(body[1].to_string(), "p(-2)");
    }

    #[test]
    fn error_reports_position_and_expectation() {
        let err = parse_clauses("rule(r1,accept,[]):-a\nrule(r2,b,[]).").unwrap_err();
        assert_eq!((err.line, err.column), (2, 1));
        assert!(err.expected.iter().any(|e| e == "`.`"));
    }

    #[test]
    fn prefer_in_body_is_rejected() {
        assert!(parse_clauses("rule(r1,a,[]):-prefer(x,y).").is_err());
        assert!(parse_clauses("rule(r1,a,[prefer(x,y)]).").is_err());
    }

    #[test]
    fn unknown_keyword() {
        let err = parse_clauses("fact(a).").unwrap_err();
        assert_eq!((err.line, err.column), (1, 1));
    }
}
