//! Recursive-descent parser for the ASCII concrete syntax.
//!
//! ```text
//! program     ::= { definition } [ declaration ]
//! definition  ::= IDENT "<=>" constraint "."
//! declaration ::= decl "."
//! decl        ::= prio { "," prio }
//! prio        ::= decl_atom { "<<" decl_atom }
//! decl_atom   ::= IDENT | "(" decl ")"
//! constraint  ::= conj [ "=>" constraint ]        (lhs of "=>" must be a guard)
//! conj        ::= unary { ("&" | "/\") unary }
//! unary       ::= "[]" unary | "E" IDENT "." unary | atom | "(" constraint ")"
//! atom        ::= expr relop expr
//! expr        ::= term { ("+" | "-") term }
//! term        ::= factor { ("*" | "/") factor }
//! factor      ::= "-" factor | postfix
//! postfix     ::= primary { "'" | "-" }
//! primary     ::= NUMBER | IDENT | "(" expr ")"
//! ```
//!
//! A `-` written directly after an operand (no whitespace) and not followed
//! by the start of another operand is the left-limit postfix: `ht-`,
//! `(ht'-)`, `ht'- != ht'`.

use std::collections::BTreeSet;

use num_traits::Zero;

use super::ast::{Atom, BinOp, Constraint, Expr, Guard, Relop};
use super::lexer::{tokenize, Tok, Token};
use super::{Decl, Definition, SourceProgram, SyntaxError};

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    allow_skolem: bool,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    pub fn new(src: &str, allow_skolem: bool) -> PResult<Self> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, allow_skolem })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(SyntaxError::Parse { line: t.line, col: t.col, msg: msg.into() })
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<Token> {
        if *self.peek() == want {
            Ok(self.bump())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                if name.contains('#') && !self.allow_skolem {
                    return self.error(format!("'#' is reserved for generated names: {name}"));
                }
                self.bump();
                Ok(name)
            }
            other => self.error(format!("expected {what}, found {}", describe(&other))),
        }
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn program(&mut self) -> PResult<SourceProgram> {
        let mut definitions: Vec<Definition> = Vec::new();
        let mut declaration = None;
        let mut seen = BTreeSet::new();
        while !self.at_eof() {
            if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Iff {
                let tok = self.toks[self.pos].clone();
                let name = self.ident("module name")?;
                self.bump();
                if *self.peek() == Tok::Dot {
                    return self.error(format!("module {name} has an empty body"));
                }
                let body = self.constraint()?;
                self.expect(Tok::Dot, "'.' after module definition")?;
                if !seen.insert(name.clone()) {
                    return Err(SyntaxError::DuplicateModule { name, line: tok.line, col: tok.col });
                }
                definitions.push(Definition { name, body, line: tok.line, col: tok.col });
            } else {
                let tok = self.toks[self.pos].clone();
                let decl = self.decl()?;
                self.expect(Tok::Dot, "'.' after declaration")?;
                if !self.at_eof() {
                    return self.error("the declaration must be the last item of a program");
                }
                let mut refs = Vec::new();
                decl.modules_into(&mut refs);
                for m in refs {
                    if !seen.contains(&m) {
                        return Err(SyntaxError::UndefinedModule { name: m, line: tok.line, col: tok.col });
                    }
                }
                declaration = Some(decl);
            }
        }
        Ok(SourceProgram { definitions, declaration })
    }

    fn decl(&mut self) -> PResult<Decl> {
        let mut parts = vec![self.prio()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            parts.push(self.prio()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Decl::Parallel(parts) })
    }

    fn prio(&mut self) -> PResult<Decl> {
        let mut parts = vec![self.decl_atom()?];
        while *self.peek() == Tok::Weaker {
            self.bump();
            parts.push(self.decl_atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Decl::Priority(parts) })
    }

    fn decl_atom(&mut self) -> PResult<Decl> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let d = self.decl()?;
            self.expect(Tok::RParen, "')'")?;
            Ok(d)
        } else {
            Ok(Decl::Module(self.ident("module name")?))
        }
    }

    pub fn constraint(&mut self) -> PResult<Constraint> {
        let lhs = self.conj()?;
        if *self.peek() == Tok::Implies {
            let guard = match as_guard(&lhs) {
                Some(g) => g,
                None => return self.error("the antecedent of '=>' must be a conjunction of atomic constraints"),
            };
            self.bump();
            let rhs = self.constraint()?;
            return Ok(Constraint::cond(guard, rhs));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Constraint> {
        let mut items = vec![self.unary()?];
        while *self.peek() == Tok::And {
            self.bump();
            items.push(self.unary()?);
        }
        Ok(Constraint::conj(items))
    }

    fn unary(&mut self) -> PResult<Constraint> {
        match self.peek().clone() {
            Tok::Box => {
                self.bump();
                Ok(Constraint::always(self.unary()?))
            }
            Tok::Ident(ref kw)
                if (kw == "E" || kw == "exists")
                    && matches!(self.peek_at(1), Tok::Ident(_))
                    && *self.peek_at(2) == Tok::Dot =>
            {
                self.bump();
                let name = self.ident("bound variable")?;
                self.bump();
                Ok(Constraint::exists(name, self.unary()?))
            }
            Tok::LParen => {
                let save = self.pos;
                if let Ok(a) = self.atom() {
                    return Ok(Constraint::Atom(a));
                }
                self.pos = save;
                self.bump();
                let c = self.constraint()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(c)
            }
            _ => Ok(Constraint::Atom(self.atom()?)),
        }
    }

    pub fn atom(&mut self) -> PResult<Atom> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Eq => Relop::Eq,
            Tok::Ne => Relop::Ne,
            Tok::Lt => Relop::Lt,
            Tok::Le => Relop::Le,
            Tok::Gt => Relop::Gt,
            Tok::Ge => Relop::Ge,
            other => return self.error(format!("expected a relational operator, found {}", describe(other))),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Atom::new(lhs, op, rhs))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            let rhs = self.term()?;
            e = Expr::bin(op, e, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(e),
            };
            let at = self.toks[self.pos].clone();
            self.bump();
            let rhs = self.factor()?;
            if op == BinOp::Div {
                match &rhs {
                    Expr::Num(v) if v.is_zero() => {
                        return Err(SyntaxError::DivisionByZero { line: at.line, col: at.col });
                    }
                    Expr::Num(v) => {
                        if let Expr::Num(l) = &e {
                            e = Expr::Num(l / v);
                            continue;
                        }
                    }
                    _ => {
                        return Err(SyntaxError::Parse {
                            line: at.line,
                            col: at.col,
                            msg: "division is only allowed by a nonzero numeric literal".into(),
                        })
                    }
                }
            }
            e = Expr::bin(op, e, rhs);
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.factor()?));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Tok::Prime => {
                    self.bump();
                    e = Expr::deriv(e);
                }
                Tok::Minus if self.toks[self.pos].attached && !starts_operand(self.peek_at(1)) => {
                    if matches!(e, Expr::Num(_)) {
                        return self.error("left limit of a numeric literal");
                    }
                    e = match Expr::prev(e) {
                        Some(p) => p,
                        None => return self.error("left limit applied twice"),
                    };
                    self.bump();
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Ident(_) => Ok(Expr::var(self.ident("variable")?)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            other => self.error(format!("expected an expression, found {}", describe(&other))),
        }
    }
}

fn starts_operand(t: &Tok) -> bool {
    matches!(t, Tok::Num(_) | Tok::Ident(_) | Tok::LParen)
}

fn as_guard(c: &Constraint) -> Option<Guard> {
    match c {
        Constraint::Atom(a) => Some(Guard::new([a.clone()])),
        Constraint::Conj(items) => {
            let mut atoms = Vec::new();
            for i in items {
                match i {
                    Constraint::Atom(a) => atoms.push(a.clone()),
                    _ => return None,
                }
            }
            Some(Guard::new(atoms))
        }
        _ => None,
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Num(v) => format!("number {v}"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}
