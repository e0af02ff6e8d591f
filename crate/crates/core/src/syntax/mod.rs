//! Concrete syntax: AST, lexer, parser and module-set posets.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod poset;

use thiserror::Error;

pub use ast::{Atom, AtomRole, BinOp, Constraint, Expr, Guard, Relop, VarRef};
pub use poset::{derive_module_poset, load_explicit_poset, ExplicitPoset, ModuleSet, ModuleSetPoset, PriorityRelation};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SyntaxError {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: module {name} is defined more than once")]
    DuplicateModule { name: String, line: usize, col: usize },
    #[error("{line}:{col}: reference to undefined module {name}")]
    UndefinedModule { name: String, line: usize, col: usize },
    #[error("{line}:{col}: division by zero")]
    DivisionByZero { line: usize, col: usize },
    #[error("invalid poset: {0}")]
    Poset(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub body: Constraint,
    pub line: usize,
    pub col: usize,
}

/// Surface composition of modules: `,` is parallel, `<<` raises priority to
/// the right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Module(String),
    Parallel(Vec<Decl>),
    /// Weakest first.
    Priority(Vec<Decl>),
}

impl Decl {
    pub fn modules_into(&self, out: &mut Vec<String>) {
        match self {
            Decl::Module(m) => out.push(m.clone()),
            Decl::Parallel(ds) | Decl::Priority(ds) => ds.iter().for_each(|d| d.modules_into(out)),
        }
    }

    pub fn modules(&self) -> Vec<String> {
        let mut v = Vec::new();
        self.modules_into(&mut v);
        v
    }
}

impl std::fmt::Display for Decl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn go(d: &Decl, f: &mut std::fmt::Formatter<'_>, nested: bool) -> std::fmt::Result {
            match d {
                Decl::Module(m) => write!(f, "{m}"),
                Decl::Parallel(ds) => {
                    if nested {
                        write!(f, "(")?;
                    }
                    for (i, x) in ds.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        go(x, f, false)?;
                    }
                    if nested {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                Decl::Priority(ds) => {
                    for (i, x) in ds.iter().enumerate() {
                        if i > 0 {
                            write!(f, " << ")?;
                        }
                        go(x, f, true)?;
                    }
                    Ok(())
                }
            }
        }
        go(self, f, false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceProgram {
    pub definitions: Vec<Definition>,
    pub declaration: Option<Decl>,
}

impl SourceProgram {
    pub fn definition(&self, name: &str) -> Option<&Definition> {
        self.definitions.iter().find(|d| d.name == name)
    }
}

impl std::fmt::Display for SourceProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for d in &self.definitions {
            writeln!(f, "{} <=> {}.", d.name, d.body)?;
        }
        if let Some(decl) = &self.declaration {
            writeln!(f, "{decl}.")?;
        }
        Ok(())
    }
}

/// Parses a `.hydla` program text.
pub fn parse_program(text: &str) -> Result<SourceProgram, SyntaxError> {
    parser::Parser::new(text, false)?.program()
}

/// Parses a single constraint; generated `name#k` identifiers are accepted.
pub fn parse_constraint(text: &str) -> Result<Constraint, SyntaxError> {
    let mut p = parser::Parser::new(text, true)?;
    let c = p.constraint()?;
    if !p.at_eof() {
        return Err(SyntaxError::Parse { line: 1, col: 1, msg: format!("trailing input after constraint: {text}") });
    }
    Ok(c)
}
