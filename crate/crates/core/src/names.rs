//! Interned identifiers for classes, fields and methods.
//!
//! All analyses work over dense integer ids; the [`Names`] table is the only
//! place that maps back to source spelling.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodId(pub u32);

#[derive(Debug, Default, Clone)]
pub struct Interner {
    entries: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.entries.len() as u32;
        self.entries.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.entries[id as usize]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Identifier tables for one program. Ids are assigned in declaration order,
/// so they are deterministic for a given source text.
#[derive(Debug, Default, Clone)]
pub struct Names {
    pub classes: Interner,
    pub fields: Interner,
    pub methods: Interner,
}

impl Names {
    /// Interns every class, field and method name declared in the program.
    /// Statement-level references are resolved against these tables later;
    /// validation guarantees they all refer to declared names.
    pub fn from_program(program: &crate::ast::Program) -> Names {
        let mut names = Names::default();
        for class in &program.classes {
            names.classes.intern(&class.name);
        }
        for class in &program.classes {
            for field in &class.fields {
                names.fields.intern(&field.name);
            }
            for method in &class.methods {
                names.methods.intern(&method.name);
            }
        }
        names
    }

    pub fn class_name(&self, id: ClassId) -> &str {
        self.classes.name(id.0)
    }

    pub fn field_name(&self, id: FieldId) -> &str {
        self.fields.name(id.0)
    }

    pub fn method_name(&self, id: MethodId) -> &str {
        self.methods.name(id.0)
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.classes.lookup(name).map(ClassId)
    }

    pub fn field_id(&self, name: &str) -> Option<FieldId> {
        self.fields.lookup(name).map(FieldId)
    }

    pub fn method_id(&self, name: &str) -> Option<MethodId> {
        self.methods.lookup(name).map(MethodId)
    }
}
