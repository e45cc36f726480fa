// Recursive-descent parser for the formula language.
//
//   formula := quant | impl
//   quant   := ("exists" | "forall") var ("in" "H")? "." formula
//   impl    := or ("->" or)*
//   or      := and ("|" and)*
//   and     := un ("&" un)*
//   un      := "!" un | atom
//   atom    := "H(" term ")" | term "=" term | "(" formula ")"
//   term    := summand ("+" summand)*
//   summand := (int "*")? (var | const)
//   const   := "0" | "e" int | "e(h+" int ")"
//
// Binary connectives associate to the left.

use crate::error::{Error, Result};
use crate::logic::syntax::{Atom, Constant, Formula, Range, Summand, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Dot,
    Equals,
    Plus,
    Star,
    Bang,
    Amp,
    Pipe,
    Arrow,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Dot => "`.`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Star => "`*`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax { offset, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b'.' => Some(Tok::Dot),
            b'=' => Some(Tok::Equals),
            b'+' => Some(Tok::Plus),
            b'*' => Some(Tok::Star),
            b'!' => Some(Tok::Bang),
            b'&' => Some(Tok::Amp),
            b'|' => Some(Tok::Pipe),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'-' && bytes.get(i + 1) == Some(&b'>') {
            out.push((Tok::Arrow, start));
            i += 2;
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i].parse::<u64>().map_err(|_| syntax(start, "integer literal too large"))?;
            out.push((Tok::Int(n), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else {
            let ch = text[start..].chars().next().unwrap_or('?');
            return Err(syntax(start, format!("unexpected character `{ch}`")));
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

const KEYWORDS: [&str; 4] = ["exists", "forall", "in", "H"];

/// `e<digits>` names a basis vector, never a variable.
fn basis_index(ident: &str) -> Option<&str> {
    let rest = ident.strip_prefix('e')?;
    (!rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())).then_some(rest)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {}, found {}", want.describe(), self.peek().describe())))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Ident(k) if k == "exists" || k == "forall" => self.quantifier(),
            _ => self.implication(),
        }
    }

    fn quantifier(&mut self) -> Result<Formula> {
        let is_exists = matches!(self.bump(), Tok::Ident(k) if k == "exists");
        let var = self.variable_name()?;
        let range = match self.peek() {
            Tok::Ident(k) if k == "in" => {
                self.bump();
                match self.bump() {
                    Tok::Ident(h) if h == "H" => Range::H,
                    other => {
                        let off = self.toks[self.pos - 1].1;
                        return Err(syntax(off, format!("expected `H` after `in`, found {}", other.describe())));
                    }
                }
            }
            _ => Range::All,
        };
        self.expect(Tok::Dot)?;
        let body = Box::new(self.formula()?);
        Ok(if is_exists { Formula::Exists { var, range, body } } else { Formula::Forall { var, range, body } })
    }

    fn variable_name(&mut self) -> Result<String> {
        let off = self.offset();
        match self.bump() {
            Tok::Ident(name) if KEYWORDS.contains(&name.as_str()) => {
                Err(syntax(off, format!("`{name}` is reserved and cannot name a variable")))
            }
            Tok::Ident(name) if basis_index(&name).is_some() => {
                Err(syntax(off, format!("`{name}` denotes a basis vector and cannot name a variable")))
            }
            Tok::Ident(name) => Ok(name),
            other => Err(syntax(off, format!("expected variable, found {}", other.describe()))),
        }
    }

    fn implication(&mut self) -> Result<Formula> {
        let mut lhs = self.disjunction()?;
        while *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.disjunction()?;
            lhs = Formula::implies(lhs, rhs);
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(h) if h == "H" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(Formula::InH(t))
            }
            _ => {
                let lhs = self.term()?;
                self.expect(Tok::Equals)?;
                let rhs = self.term()?;
                Ok(Formula::Eq(lhs, rhs))
            }
        }
    }

    fn term(&mut self) -> Result<Term> {
        let mut summands = vec![self.summand()?];
        while *self.peek() == Tok::Plus {
            let plus_at = self.offset();
            self.bump();
            if !self.starts_summand() {
                return Err(syntax(plus_at, format!("dangling `+`: expected a summand, found {}", self.peek().describe())));
            }
            summands.push(self.summand()?);
        }
        Ok(Term { summands })
    }

    fn starts_summand(&self) -> bool {
        match self.peek() {
            Tok::Int(_) => true,
            Tok::Ident(name) => !KEYWORDS.contains(&name.as_str()),
            _ => false,
        }
    }

    fn summand(&mut self) -> Result<Summand> {
        let off = self.offset();
        let coeff = match self.peek().clone() {
            Tok::Int(n) if *self.peek_at(1) == Tok::Star => {
                self.bump();
                self.bump();
                Some(n)
            }
            Tok::Int(0) => {
                self.bump();
                return Ok(Summand { coeff: None, atom: Atom::Const(Constant::Zero) });
            }
            Tok::Int(n) => return Err(syntax(off, format!("integer `{n}` must be followed by `*`"))),
            _ => None,
        };
        let atom = self.vector_atom()?;
        Ok(Summand { coeff, atom })
    }

    fn vector_atom(&mut self) -> Result<Atom> {
        let off = self.offset();
        match self.peek().clone() {
            Tok::Int(0) => {
                self.bump();
                Ok(Atom::Const(Constant::Zero))
            }
            Tok::Ident(name) if name == "e" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                match self.bump() {
                    Tok::Ident(h) if h == "h" => {}
                    other => return Err(syntax(off, format!("expected `e(h+<i>)`, found {}", other.describe()))),
                }
                self.expect(Tok::Plus)?;
                let i_off = self.offset();
                let i = match self.bump() {
                    Tok::Int(i) if i >= 1 => i as usize,
                    other => return Err(syntax(i_off, format!("expected positive index, found {}", other.describe()))),
                };
                self.expect(Tok::RParen)?;
                Ok(Atom::Const(Constant::AfterH(i)))
            }
            Tok::Ident(name) => {
                if let Some(digits) = basis_index(&name) {
                    let i: usize = digits.parse().map_err(|_| syntax(off, "basis index too large"))?;
                    if i == 0 {
                        return Err(syntax(off, "basis vectors are numbered from e1"));
                    }
                    self.bump();
                    return Ok(Atom::Const(Constant::Basis(i)));
                }
                Ok(Atom::Var(self.variable_name()?))
            }
            other => Err(syntax(off, format!("expected variable or constant, found {}", other.describe()))),
        }
    }
}

/// Parses a formula of the surface grammar.
pub fn parse(text: &str) -> Result<Formula> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), format!("unexpected {}", p.peek().describe())));
    }
    Ok(f)
}
