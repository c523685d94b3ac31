//! Recursive-descent parser and name validation for `.tfl` programs.
//!
//! Parsing checks syntax, duplicate declarations and unknown identifiers in
//! one pass. Class references may be forward, so class-level checks (extends
//! targets, declared classes, field and method existence) are collected while
//! parsing and resolved once all classes are known. A field or method
//! reference is accepted when *some* class declares the name; per-statement
//! declared-type checking is deliberately not performed, since the analyses
//! resolve everything by value flow.

use std::collections::HashSet;

use thiserror::Error;

use crate::ast::{ClassDef, FieldDecl, LocalDecl, MethodDef, Program, Stmt};
use crate::lexer::{lex, Token, TokenKind};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Syntax { expected: String, found: String, line: u32, col: u32 },
    #[error("{line}: duplicate class `{name}`")]
    DuplicateClass { name: String, line: u32 },
    #[error("{line}: duplicate field `{name}` in class `{class}`")]
    DuplicateField { name: String, class: String, line: u32 },
    #[error("{line}: duplicate method `{name}` in class `{class}`")]
    DuplicateMethod { name: String, class: String, line: u32 },
    #[error("{line}: duplicate variable `{name}`")]
    DuplicateVariable { name: String, line: u32 },
    #[error("{line}: `this` cannot be declared as a variable")]
    ReservedThis { line: u32 },
    #[error("{line}: unknown class `{name}`")]
    UnknownClass { name: String, line: u32 },
    #[error("{line}: unknown variable `{name}`")]
    UnknownVariable { name: String, line: u32 },
    #[error("{line}: field `{name}` is not declared by any class")]
    UnknownField { name: String, line: u32 },
    #[error("{line}: method `{name}` is not declared by any class")]
    UnknownMethod { name: String, line: u32 },
}

/// A class/field/method reference whose declaration may appear later in the
/// file; checked after the whole program has been parsed.
enum Pending {
    Class { name: String, line: u32 },
    Field { name: String, line: u32 },
    Method { name: String, line: u32 },
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let tokens = lex(text)?;
    Parser { tokens, pos: 0, pending: Vec::new() }.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    pending: Vec<Pending>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek2(&self) -> &TokenKind {
        let next = (self.pos + 1).min(self.tokens.len() - 1);
        &self.tokens[next].kind
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ParseError> {
        let tok = self.peek().clone();
        if tok.kind == kind {
            Ok(self.bump())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let tok = self.peek();
        ParseError::Syntax {
            expected: expected.into(),
            found: tok.kind.describe(),
            line: tok.line,
            col: tok.col,
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, u32), ParseError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Ident(name) => {
                self.bump();
                Ok((name, tok.line))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut classes: Vec<ClassDef> = Vec::new();
        let mut class_names: HashSet<String> = HashSet::new();
        while self.peek().kind == TokenKind::KwClass {
            let class_line = self.peek().line;
            let class = self.class_def()?;
            if !class_names.insert(class.name.clone()) {
                return Err(ParseError::DuplicateClass { name: class.name, line: class_line });
            }
            classes.push(class);
        }
        self.expect(TokenKind::KwMain, "`class` or `main`")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let (entry_locals, entry_body) = self.block_body(false)?;
        self.expect(TokenKind::RBrace, "`}`")?;
        self.expect(TokenKind::Eof, "end of input")?;

        let program = Program { classes, entry_locals, entry_body };
        self.check_pending(&program)?;
        Ok(program)
    }

    fn class_def(&mut self) -> Result<ClassDef, ParseError> {
        self.expect(TokenKind::KwClass, "`class`")?;
        let (name, _) = self.ident("class name")?;
        let parent = if self.peek().kind == TokenKind::KwExtends {
            self.bump();
            let (parent, line) = self.ident("parent class name")?;
            self.pending.push(Pending::Class { name: parent.clone(), line });
            Some(parent)
        } else {
            None
        };
        self.expect(TokenKind::LBrace, "`{`")?;

        let mut fields: Vec<FieldDecl> = Vec::new();
        let mut methods: Vec<MethodDef> = Vec::new();
        let mut field_names: HashSet<String> = HashSet::new();
        let mut method_names: HashSet<String> = HashSet::new();
        loop {
            match &self.peek().kind {
                TokenKind::RBrace => break,
                TokenKind::Ident(_) => {
                    // Field declarations are `Class name ;`, methods start
                    // with `name (`.
                    if *self.peek2() == TokenKind::LParen {
                        let method_line = self.peek().line;
                        let method = self.method_def()?;
                        if !method_names.insert(method.name.clone()) {
                            return Err(ParseError::DuplicateMethod {
                                name: method.name,
                                class: name,
                                line: method_line,
                            });
                        }
                        methods.push(method);
                    } else {
                        if !methods.is_empty() {
                            return Err(self.unexpected("a method declaration or `}`"));
                        }
                        let (class, line) = self.ident("field class")?;
                        let (fname, fline) = self.ident("field name")?;
                        self.expect(TokenKind::Semi, "`;`")?;
                        self.pending.push(Pending::Class { name: class.clone(), line });
                        if !field_names.insert(fname.clone()) {
                            return Err(ParseError::DuplicateField {
                                name: fname,
                                class: name,
                                line: fline,
                            });
                        }
                        fields.push(FieldDecl { class, name: fname });
                    }
                }
                _ => return Err(self.unexpected("a member declaration or `}`")),
            }
        }
        self.expect(TokenKind::RBrace, "`}`")?;
        Ok(ClassDef { name, parent, fields, methods })
    }

    fn method_def(&mut self) -> Result<MethodDef, ParseError> {
        let (name, _) = self.ident("method name")?;
        self.expect(TokenKind::LParen, "`(`")?;
        let (param_class, pline) = self.ident("parameter class")?;
        self.pending.push(Pending::Class { name: param_class.clone(), line: pline });
        let (param, param_line) = self.ident("parameter name")?;
        if param == "this" {
            return Err(ParseError::ReservedThis { line: param_line });
        }
        self.expect(TokenKind::RParen, "`)`")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let (locals, body) = self.method_body(&param)?;

        self.expect(TokenKind::KwReturn, "`return`")?;
        let (return_var, rline) = self.ident("return variable")?;
        let declared = return_var == "this"
            || return_var == param
            || locals.iter().any(|l| l.name == return_var);
        if !declared {
            return Err(ParseError::UnknownVariable { name: return_var, line: rline });
        }
        self.expect(TokenKind::Semi, "`;`")?;
        self.expect(TokenKind::RBrace, "`}`")?;
        Ok(MethodDef { name, param_class, param, locals, body, return_var })
    }

    /// Parses `localdecl* stmt*` where the scope already contains `param`.
    fn method_body(&mut self, param: &str) -> Result<(Vec<LocalDecl>, Vec<Stmt>), ParseError> {
        let mut scope: HashSet<String> = HashSet::new();
        scope.insert(param.to_string());
        self.decls_then_stmts(scope, true)
    }

    fn block_body(&mut self, in_method: bool) -> Result<(Vec<LocalDecl>, Vec<Stmt>), ParseError> {
        self.decls_then_stmts(HashSet::new(), in_method)
    }

    fn decls_then_stmts(
        &mut self,
        mut scope: HashSet<String>,
        in_method: bool,
    ) -> Result<(Vec<LocalDecl>, Vec<Stmt>), ParseError> {
        let mut locals = Vec::new();
        // Declarations first: two consecutive identifiers.
        while matches!(self.peek().kind, TokenKind::Ident(_))
            && matches!(self.peek2(), TokenKind::Ident(_))
        {
            let (class, cline) = self.ident("class name")?;
            let (name, nline) = self.ident("variable name")?;
            self.expect(TokenKind::Semi, "`;`")?;
            self.pending.push(Pending::Class { name: class.clone(), line: cline });
            if name == "this" {
                return Err(ParseError::ReservedThis { line: nline });
            }
            if !scope.insert(name.clone()) {
                return Err(ParseError::DuplicateVariable { name, line: nline });
            }
            locals.push(LocalDecl { class, name });
        }
        let mut body = Vec::new();
        while matches!(self.peek().kind, TokenKind::Ident(_)) {
            body.push(self.stmt(&scope, in_method)?);
        }
        Ok((locals, body))
    }

    fn check_var(
        &self,
        scope: &HashSet<String>,
        in_method: bool,
        name: &str,
        line: u32,
    ) -> Result<(), ParseError> {
        if name == "this" {
            if in_method {
                return Ok(());
            }
            return Err(ParseError::UnknownVariable { name: name.into(), line });
        }
        if scope.contains(name) {
            Ok(())
        } else {
            Err(ParseError::UnknownVariable { name: name.into(), line })
        }
    }

    fn stmt(&mut self, scope: &HashSet<String>, in_method: bool) -> Result<Stmt, ParseError> {
        let (first, first_line) = self.ident("a statement")?;
        match self.peek().kind.clone() {
            TokenKind::Eq => {
                self.bump();
                // Assignment target must be a declared variable; `this` is
                // never assignable.
                if first == "this" {
                    return Err(ParseError::UnknownVariable { name: first, line: first_line });
                }
                self.check_var(scope, in_method, &first, first_line)?;
                match self.peek().kind.clone() {
                    TokenKind::KwNew => {
                        self.bump();
                        let (class, cline) = self.ident("class name")?;
                        self.pending.push(Pending::Class { name: class.clone(), line: cline });
                        self.expect(TokenKind::LParen, "`(`")?;
                        self.expect(TokenKind::RParen, "`)`")?;
                        self.expect(TokenKind::Semi, "`;`")?;
                        Ok(Stmt::New { target: first, class })
                    }
                    TokenKind::KwNull => {
                        self.bump();
                        self.expect(TokenKind::Semi, "`;`")?;
                        Ok(Stmt::Null { target: first })
                    }
                    TokenKind::Ident(_) => {
                        let (source, sline) = self.ident("a variable")?;
                        self.check_var(scope, in_method, &source, sline)?;
                        match self.peek().kind.clone() {
                            TokenKind::Semi => {
                                self.bump();
                                Ok(Stmt::Copy { target: first, source })
                            }
                            TokenKind::Dot => {
                                self.bump();
                                let (member, mline) = self.ident("a field or method name")?;
                                if self.peek().kind == TokenKind::LParen {
                                    self.bump();
                                    let (arg, aline) = self.ident("an argument variable")?;
                                    self.check_var(scope, in_method, &arg, aline)?;
                                    self.expect(TokenKind::RParen, "`)`")?;
                                    self.expect(TokenKind::Semi, "`;`")?;
                                    self.pending.push(Pending::Method { name: member.clone(), line: mline });
                                    Ok(Stmt::Call {
                                        target: Some(first),
                                        receiver: source,
                                        method: member,
                                        arg,
                                    })
                                } else {
                                    self.expect(TokenKind::Semi, "`;`")?;
                                    self.pending.push(Pending::Field { name: member.clone(), line: mline });
                                    Ok(Stmt::Load { target: first, base: source, field: member })
                                }
                            }
                            _ => Err(self.unexpected("`;`, `.` or `(`")),
                        }
                    }
                    _ => Err(self.unexpected("`new`, `null` or a variable")),
                }
            }
            TokenKind::Dot => {
                self.bump();
                self.check_var(scope, in_method, &first, first_line)?;
                let (member, mline) = self.ident("a field or method name")?;
                match self.peek().kind.clone() {
                    TokenKind::Eq => {
                        self.bump();
                        let (source, sline) = self.ident("a variable")?;
                        self.check_var(scope, in_method, &source, sline)?;
                        self.expect(TokenKind::Semi, "`;`")?;
                        self.pending.push(Pending::Field { name: member.clone(), line: mline });
                        Ok(Stmt::Store { base: first, field: member, source })
                    }
                    TokenKind::LParen => {
                        self.bump();
                        let (arg, aline) = self.ident("an argument variable")?;
                        self.check_var(scope, in_method, &arg, aline)?;
                        self.expect(TokenKind::RParen, "`)`")?;
                        self.expect(TokenKind::Semi, "`;`")?;
                        self.pending.push(Pending::Method { name: member.clone(), line: mline });
                        Ok(Stmt::Call { target: None, receiver: first, method: member, arg })
                    }
                    _ => Err(self.unexpected("`=` or `(`")),
                }
            }
            _ => Err(self.unexpected("`=` or `.`")),
        }
    }

    fn check_pending(&self, program: &Program) -> Result<(), ParseError> {
        let classes: HashSet<&str> = program.classes.iter().map(|c| c.name.as_str()).collect();
        let mut fields: HashSet<&str> = HashSet::new();
        let mut methods: HashSet<&str> = HashSet::new();
        for class in &program.classes {
            fields.extend(class.fields.iter().map(|f| f.name.as_str()));
            methods.extend(class.methods.iter().map(|m| m.name.as_str()));
        }
        for pending in &self.pending {
            match pending {
                Pending::Class { name, line } => {
                    if !classes.contains(name.as_str()) {
                        return Err(ParseError::UnknownClass { name: name.clone(), line: *line });
                    }
                }
                Pending::Field { name, line } => {
                    if !fields.contains(name.as_str()) {
                        return Err(ParseError::UnknownField { name: name.clone(), line: *line });
                    }
                }
                Pending::Method { name, line } => {
                    if !methods.contains(name.as_str()) {
                        return Err(ParseError::UnknownMethod { name: name.clone(), line: *line });
                    }
                }
            }
        }
        Ok(())
    }
}
