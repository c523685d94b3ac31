//! Abstract syntax for the analyzed language.
//!
//! A program is a list of class declarations followed by a `main` block. Each
//! method has exactly one parameter and ends with a single `return`. The
//! statement forms are allocation, copy, field load, field store, method call
//! (with or without a result target) and null assignment.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub classes: Vec<ClassDef>,
    pub entry_locals: Vec<LocalDecl>,
    pub entry_body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalDecl {
    /// Declared class of the variable.
    pub class: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    /// Declared class of the field.
    pub class: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub parent: Option<String>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDef {
    pub name: String,
    pub param_class: String,
    pub param: String,
    pub locals: Vec<LocalDecl>,
    pub body: Vec<Stmt>,
    pub return_var: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    /// `x = new C();`
    New { target: String, class: String },
    /// `x = y;`
    Copy { target: String, source: String },
    /// `x = y.f;`
    Load { target: String, base: String, field: String },
    /// `x.f = y;`
    Store { base: String, field: String, source: String },
    /// `x = y.m(z);` or, with no target, `y.m(z);`
    Call {
        target: Option<String>,
        receiver: String,
        method: String,
        arg: String,
    },
    /// `x = null;`
    Null { target: String },
}

impl Program {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.entry_locals.is_empty() && self.entry_body.is_empty()
    }

    /// Canonical source rendering. Parsing the result reproduces the AST.
    pub fn to_source(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for class in &self.classes {
            write!(f, "{class}")?;
        }
        writeln!(f, "main {{")?;
        for decl in &self.entry_locals {
            writeln!(f, "    {} {};", decl.class, decl.name)?;
        }
        for stmt in &self.entry_body {
            writeln!(f, "    {stmt}")?;
        }
        writeln!(f, "}}")
    }
}

impl fmt::Display for ClassDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.parent {
            Some(parent) => writeln!(f, "class {} extends {} {{", self.name, parent)?,
            None => writeln!(f, "class {} {{", self.name)?,
        }
        for field in &self.fields {
            writeln!(f, "    {} {};", field.class, field.name)?;
        }
        for method in &self.methods {
            writeln!(f, "    {}({} {}) {{", method.name, method.param_class, method.param)?;
            for decl in &method.locals {
                writeln!(f, "        {} {};", decl.class, decl.name)?;
            }
            for stmt in &method.body {
                writeln!(f, "        {stmt}")?;
            }
            writeln!(f, "        return {};", method.return_var)?;
            writeln!(f, "    }}")?;
        }
        writeln!(f, "}}")
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::New { target, class } => write!(f, "{target} = new {class}();"),
            Stmt::Copy { target, source } => write!(f, "{target} = {source};"),
            Stmt::Load { target, base, field } => write!(f, "{target} = {base}.{field};"),
            Stmt::Store { base, field, source } => write!(f, "{base}.{field} = {source};"),
            Stmt::Call { target: Some(t), receiver, method, arg } => {
                write!(f, "{t} = {receiver}.{method}({arg});")
            }
            Stmt::Call { target: None, receiver, method, arg } => {
                write!(f, "{receiver}.{method}({arg});")
            }
            Stmt::Null { target } => write!(f, "{target} = null;"),
        }
    }
}
