//! Class hierarchy table: the reflexive-transitive subclass relation, fields
//! and methods including inherited ones, and virtual dispatch.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::Program;
use crate::names::{ClassId, FieldId, MethodId, Names};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("inheritance cycle through class `{class}`")]
    InheritanceCycle { class: String },
    #[error("class `{class}` extends unknown class `{parent}`")]
    UnknownParent { class: String, parent: String },
    #[error("class `{class}` redeclares inherited field `{field}`")]
    FieldRedeclared { class: String, field: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldInfo {
    /// Class that declares the field (an ancestor of, or equal to, the class
    /// whose table entry this is).
    pub declared_in: ClassId,
    /// Declared class of the field's value.
    pub ftype: ClassId,
}

#[derive(Debug, Clone)]
pub struct ClassTable {
    pub parent: Vec<Option<ClassId>>,
    /// `descendants[c]` holds every subclass of `c`, including `c` itself.
    descendants: Vec<Vec<ClassId>>,
    /// All fields visible on a class, inherited included.
    fields: Vec<BTreeMap<FieldId, FieldInfo>>,
    /// Method name to nearest defining class, inherited included. Overrides
    /// resolve to the closest definition.
    methods: Vec<BTreeMap<MethodId, ClassId>>,
    /// (defining class, method) to position in the AST: (class index, method
    /// index). Present exactly for definitions, not inherited entries.
    method_src: BTreeMap<(ClassId, MethodId), (usize, usize)>,
}

impl ClassTable {
    pub fn class_count(&self) -> usize {
        self.parent.len()
    }

    /// True iff `sub` is `sup` or reaches it through `extends` edges.
    pub fn is_subclass(&self, sub: ClassId, sup: ClassId) -> bool {
        let mut cur = Some(sub);
        while let Some(c) = cur {
            if c == sup {
                return true;
            }
            cur = self.parent[c.0 as usize];
        }
        false
    }

    pub fn subclasses(&self, class: ClassId) -> &[ClassId] {
        &self.descendants[class.0 as usize]
    }

    pub fn fields(&self, class: ClassId) -> &BTreeMap<FieldId, FieldInfo> {
        &self.fields[class.0 as usize]
    }

    pub fn methods(&self, class: ClassId) -> &BTreeMap<MethodId, ClassId> {
        &self.methods[class.0 as usize]
    }

    pub fn ftype(&self, class: ClassId, field: FieldId) -> Option<ClassId> {
        self.fields(class).get(&field).map(|f| f.ftype)
    }

    /// Resolves a call on a receiver of class `class` to the defining class
    /// of the nearest `method` definition, if any.
    pub fn dispatch(&self, class: ClassId, method: MethodId) -> Option<ClassId> {
        self.methods(class).get(&method).copied()
    }

    /// True iff `class` has its own (non-inherited) definition of `method`.
    pub fn declares_method(&self, class: ClassId, method: MethodId) -> bool {
        self.method_src.contains_key(&(class, method))
    }

    pub fn method_src(&self, class: ClassId, method: MethodId) -> Option<(usize, usize)> {
        self.method_src.get(&(class, method)).copied()
    }
}

pub fn build_class_table(program: &Program, names: &Names) -> Result<ClassTable, TableError> {
    let n = program.classes.len();
    let mut parent: Vec<Option<ClassId>> = vec![None; n];
    for (i, class) in program.classes.iter().enumerate() {
        if let Some(parent_name) = &class.parent {
            let pid = names.class_id(parent_name).ok_or_else(|| TableError::UnknownParent {
                class: class.name.clone(),
                parent: parent_name.clone(),
            })?;
            parent[i] = Some(pid);
        }
    }

    // Cycle check: walk each parent chain; a chain longer than the class
    // count must revisit a class.
    for start in 0..n {
        let mut cur = parent[start];
        let mut steps = 0;
        while let Some(c) = cur {
            steps += 1;
            if steps > n {
                return Err(TableError::InheritanceCycle {
                    class: program.classes[start].name.clone(),
                });
            }
            cur = parent[c.0 as usize];
        }
    }

    let mut descendants: Vec<Vec<ClassId>> = vec![Vec::new(); n];
    for c in 0..n {
        let mut cur = Some(ClassId(c as u32));
        while let Some(anc) = cur {
            descendants[anc.0 as usize].push(ClassId(c as u32));
            cur = parent[anc.0 as usize];
        }
    }
    for list in &mut descendants {
        list.sort();
    }

    // Fill fields/methods ancestor-first so inherited maps are ready when a
    // class is processed.
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut done = vec![false; n];
    fn visit(
        i: usize,
        parent: &[Option<ClassId>],
        done: &mut Vec<bool>,
        order: &mut Vec<usize>,
    ) {
        if done[i] {
            return;
        }
        if let Some(p) = parent[i] {
            visit(p.0 as usize, parent, done, order);
        }
        done[i] = true;
        order.push(i);
    }
    for i in 0..n {
        visit(i, &parent, &mut done, &mut order);
    }

    let mut fields: Vec<BTreeMap<FieldId, FieldInfo>> = vec![BTreeMap::new(); n];
    let mut methods: Vec<BTreeMap<MethodId, ClassId>> = vec![BTreeMap::new(); n];
    let mut method_src: BTreeMap<(ClassId, MethodId), (usize, usize)> = BTreeMap::new();
    for &i in &order {
        let class = &program.classes[i];
        let cid = ClassId(i as u32);
        if let Some(p) = parent[i] {
            fields[i] = fields[p.0 as usize].clone();
            methods[i] = methods[p.0 as usize].clone();
        }
        for field in &class.fields {
            let fid = names.field_id(&field.name).expect("declared field interned");
            let ftype = names.class_id(&field.class).expect("validated field class");
            if fields[i].contains_key(&fid) {
                return Err(TableError::FieldRedeclared {
                    class: class.name.clone(),
                    field: field.name.clone(),
                });
            }
            fields[i].insert(fid, FieldInfo { declared_in: cid, ftype });
        }
        for (mi, method) in class.methods.iter().enumerate() {
            let mid = names.method_id(&method.name).expect("declared method interned");
            methods[i].insert(mid, cid);
            method_src.insert((cid, mid), (i, mi));
        }
    }

    Ok(ClassTable { parent, descendants, fields, methods, method_src })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Program;
    use crate::parser::parse_program;

    fn table_for(src: &str) -> (Program, Names, ClassTable) {
        let program = parse_program(src).unwrap();
        let names = Names::from_program(&program);
        let table = build_class_table(&program, &names).unwrap();
        (program, names, table)
    }

    #[test]
    fn single_class_subclass_relation_is_reflexive() {
        let (_, names, table) = table_for("class A {} main { }");
        let a = names.class_id("A").unwrap();
        assert!(table.is_subclass(a, a));
        assert_eq!(table.subclasses(a), &[a]);
    }

    #[test]
    fn inherited_methods_resolve_to_nearest_definition() {
        let src = "class A { m(A p) { return this; } } class B extends A {} class C extends A {} main { }";
        let (_, names, table) = table_for(src);
        let a = names.class_id("A").unwrap();
        let b = names.class_id("B").unwrap();
        let c = names.class_id("C").unwrap();
        let m = names.method_id("m").unwrap();
        assert_eq!(table.dispatch(b, m), Some(a));
        assert_eq!(table.dispatch(c, m), Some(a));
        assert_eq!(table.dispatch(a, m), Some(a));
    }

    #[test]
    fn override_shadows_ancestor_definition() {
        let src = "class A { m(A p) { return this; } } \
                   class B extends A { m(A p) { return this; } } main { }";
        let (_, names, table) = table_for(src);
        let a = names.class_id("A").unwrap();
        let b = names.class_id("B").unwrap();
        let m = names.method_id("m").unwrap();
        assert_eq!(table.dispatch(b, m), Some(b));
        assert_eq!(table.dispatch(a, m), Some(a));
    }

    #[test]
    fn fields_are_inherited_down_a_chain() {
        let src = "class A { A f; } class B extends A {} class C extends B {} main { }";
        let (_, names, table) = table_for(src);
        let a = names.class_id("A").unwrap();
        let c = names.class_id("C").unwrap();
        let f = names.field_id("f").unwrap();
        assert_eq!(table.fields(c).len(), table.fields(a).len());
        assert_eq!(table.fields(c)[&f].declared_in, a);
        assert_eq!(table.ftype(c, f), Some(a));
    }

    #[test]
    fn inheritance_cycle_detected() {
        let program = parse_program("class A extends B {} class B extends A {} main { }").unwrap();
        let names = Names::from_program(&program);
        let err = build_class_table(&program, &names).unwrap_err();
        assert!(matches!(err, TableError::InheritanceCycle { .. }));
    }

    #[test]
    fn field_redeclaration_rejected() {
        let program =
            parse_program("class A { A f; } class B extends A { B f; } main { }").unwrap();
        let names = Names::from_program(&program);
        let err = build_class_table(&program, &names).unwrap_err();
        assert!(matches!(err, TableError::FieldRedeclared { .. }));
    }
}
