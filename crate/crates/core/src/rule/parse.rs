//! Rule text parser.
//!
//! ```text
//! F(x,y) <- G(x,z), H(y,z), I(x,y,z). @order(x,y,z)
//! C[x]=z <- A[x]=a, B[x]=b, add[a,b]=z.
//! D[x]=t <- agg<< t=sum(v) >> E[x,y]=v.
//! U(x) <- (A(x) ; B(x)), C(x).
//! ```

use super::{AggKind, AggSpec, Atom, AtomKind, Conj, Form, Rule, Term, PRIMITIVES};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Sym(&'static str),
    At(String),
}

const SYMBOLS: &[&str] = &["<-", "<<", ">>", "(", ")", "[", "]", ",", ";", "=", ".", "!"];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' || text[i..].starts_with("//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' || c == '@' {
            i += 1;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                i += 1;
            }
            let word = text[start..i].to_string();
            let tok = match word.strip_prefix('@') {
                Some(w) => Tok::At(w.to_string()),
                None => Tok::Ident(word),
            };
            out.push((tok, start));
            continue;
        }
        let numeric = c.is_ascii_digit() || (c == '-' && b.get(i + 1).is_some_and(u8::is_ascii_digit));
        if numeric {
            i += 1;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.' || b[i] == b'e' || b[i] == b'E') {
                // A trailing '.' ends the rule rather than starting a fraction.
                if b[i] == b'.' && !b.get(i + 1).is_some_and(u8::is_ascii_digit) {
                    break;
                }
                i += 1;
            }
            let s = &text[start..i];
            let tok = if let Ok(v) = s.parse::<i64>() {
                Tok::Int(v)
            } else if let Ok(v) = s.parse::<f64>() {
                Tok::Float(v)
            } else {
                return Err(rule_err(start, format!("bad number {s:?}")));
            };
            out.push((tok, start));
            continue;
        }
        match SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            Some(s) => {
                out.push((Tok::Sym(s), start));
                i += s.len();
            }
            None => return Err(rule_err(start, format!("unexpected character {c:?}"))),
        }
    }
    Ok(out)
}

fn rule_err(col: usize, msg: impl std::fmt::Display) -> Error {
    Error::Rule(format!("{msg} at column {}", col + 1))
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.1)
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        rule_err(self.col(), msg)
    }

    fn is(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}'")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected a name")),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let t = match self.peek() {
            Some(Tok::Ident(s)) => Term::Var(s.clone()),
            Some(Tok::Int(v)) => Term::Int(*v),
            Some(Tok::Float(v)) => Term::Float(*v),
            _ => return Err(self.err("expected a variable or constant")),
        };
        self.pos += 1;
        Ok(t)
    }

    fn terms(&mut self, close: &str) -> Result<Vec<Term>> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        let pred = self.ident()?;
        let prim = PRIMITIVES.contains(&pred.as_str());
        if self.eat("(") {
            let keys = self.terms(")")?;
            let kind = if prim { AtomKind::Primitive } else { AtomKind::Relation };
            Ok(Atom { pred, kind, keys, value: None })
        } else if self.eat("[") {
            let keys = self.terms("]")?;
            self.expect("=")?;
            let value = Some(self.term()?);
            let kind = if prim { AtomKind::Primitive } else { AtomKind::Function };
            Ok(Atom { pred, kind, keys, value })
        } else {
            Err(self.err(format!("expected '(' or '[' after {pred}")))
        }
    }

    fn form(&mut self) -> Result<Form> {
        if self.eat("!") {
            let inner = if self.is("(") {
                self.pos += 1;
                let c = self.conj()?;
                self.expect(")")?;
                c
            } else {
                Conj { existentials: vec![], forms: vec![Form::Atom(self.atom()?)] }
            };
            return Ok(Form::Neg(Box::new(inner)));
        }
        if self.eat("(") {
            let mut branches = vec![self.conj()?];
            while self.eat(";") {
                branches.push(self.conj()?);
            }
            self.expect(")")?;
            return Ok(Form::Disj(branches));
        }
        Ok(Form::Atom(self.atom()?))
    }

    fn conj(&mut self) -> Result<Conj> {
        let mut forms = Vec::new();
        loop {
            match self.form()? {
                // A parenthesized group without ';' is plain conjunction.
                Form::Disj(mut bs) if bs.len() == 1 => forms.append(&mut bs.pop().unwrap().forms),
                f => forms.push(f),
            }
            if !self.eat(",") {
                return Ok(Conj { existentials: vec![], forms });
            }
        }
    }

    fn agg(&mut self) -> Result<Option<AggSpec>> {
        if !matches!(self.peek(), Some(Tok::Ident(s)) if s == "agg") || !matches!(self.toks.get(self.pos + 1), Some((Tok::Sym("<<"), _))) {
            return Ok(None);
        }
        self.pos += 2;
        let output = self.ident()?;
        self.expect("=")?;
        let at = self.col();
        let kind = match self.ident()?.as_str() {
            "count" => AggKind::Count,
            "sum" => AggKind::GroupSum,
            "min" => AggKind::Min,
            "max" => AggKind::Max,
            "total" => AggKind::FloatTotal,
            other => return Err(rule_err(at, format!("unknown aggregation {other}"))),
        };
        self.expect("(")?;
        let input = if self.is(")") { None } else { Some(self.ident()?) };
        self.expect(")")?;
        self.expect(">>")?;
        match (kind, &input) {
            (AggKind::Count, Some(_)) => return Err(self.err("count() takes no argument")),
            (AggKind::Count, None) | (_, Some(_)) => {}
            (_, None) => return Err(self.err(format!("{}() needs an argument", kind.name()))),
        }
        Ok(Some(AggSpec { kind, input, output }))
    }
}

/// Parse one rule with its trailing annotations.
pub fn parse_rule(text: &str) -> Result<Rule> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, len: text.len() };
    let mut heads = vec![p.atom()?];
    while p.eat(",") {
        heads.push(p.atom()?);
    }
    for h in &heads {
        if h.kind == AtomKind::Primitive {
            return Err(Error::Rule(format!("primitive {} cannot be a head", h.pred)));
        }
    }
    p.expect("<-")?;
    let agg = p.agg()?;
    let body = p.conj()?;
    p.expect(".")?;
    let mut rule = Rule::new(heads, agg, body);
    while let Some(tok) = p.peek().cloned() {
        let Tok::At(name) = tok else {
            return Err(p.err("expected an annotation or end of rule"));
        };
        p.pos += 1;
        match name.as_str() {
            "order" => {
                p.expect("(")?;
                let mut vs = Vec::new();
                if !p.eat(")") {
                    loop {
                        vs.push(p.ident()?);
                        if p.eat(")") {
                            break;
                        }
                        p.expect(",")?;
                    }
                }
                rule.order = Some(vs);
            }
            "force_sens" => rule.force_sens = true,
            "short_circuit" => rule.short_circuit = true,
            other => return Err(p.err(format!("unknown annotation @{other}"))),
        }
    }
    Ok(rule)
}
