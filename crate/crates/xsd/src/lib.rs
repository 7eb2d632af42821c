//! Validator for the subset of W3C XML Schema 1.0 used by the OAI-PMH 2.0
//! response schema.
//!
//! Supported: global elements and named types, `sequence`/`choice`/`any`
//! with occurrence bounds, attributes, `simpleContent` extension, simple
//! type restriction by `enumeration` and `pattern`, and `union`. Anything
//! else in a schema is rejected at load time.
//!
//! Wildcard content whose namespace has no loaded schema is checked for
//! well-formedness and the namespace constraint only.

mod dom;
mod schema;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

pub use dom::QName;
use dom::Node;
pub use schema::Schema;
use schema::{Builtin, Content, Particle, Process, SimpleType, Term, TypeDef, TypeRef, Wildcard};

pub const OAI_PMH_XSD: &str = include_str!("../schemas/OAI-PMH.xsd");

const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";

#[derive(Debug, Error)]
pub enum Error {
    #[error("not well-formed: {0}")]
    Xml(String),
    #[error("schema: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Slash-separated element path from the root.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// The vendored OAI-PMH 2.0 schema, compiled.
pub fn oai_pmh_schema() -> Schema {
    let mut s = Schema::new();
    s.load(OAI_PMH_XSD).expect("vendored schema loads");
    s
}

enum Resolved<'a> {
    Builtin(Builtin),
    Def(&'a TypeDef),
}

struct Run<'s> {
    schema: &'s Schema,
    out: RefCell<Vec<Violation>>,
}

fn matches(re: &OnceLock<Regex>, pattern: &str, v: &str) -> bool {
    re.get_or_init(|| Regex::new(pattern).expect("builtin pattern")).is_match(v)
}

fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 31,
    }
}

fn check_date_parts(v: &str) -> bool {
    let (neg, body) = v.strip_prefix('-').map(|b| (true, b)).unwrap_or((false, v));
    let mut parts = body.splitn(3, '-');
    let (Some(y), Some(m), Some(rest)) = (parts.next(), parts.next(), parts.next()) else {
        return false;
    };
    let (Ok(year), Ok(month), Ok(day)) = (y.parse::<i64>(), m.parse::<u32>(), rest[..2].parse::<u32>()) else {
        return false;
    };
    let year = if neg { -year } else { year };
    year != 0 && (1..=12).contains(&month) && day >= 1 && day <= days_in_month(year, month)
}

fn builtin_ok(b: Builtin, raw: &str) -> Result<(), String> {
    static DATE_TIME: OnceLock<Regex> = OnceLock::new();
    static DATE: OnceLock<Regex> = OnceLock::new();
    let v = collapse(raw);
    let ok = match b {
        Builtin::AnyType | Builtin::AnySimpleType | Builtin::String => true,
        Builtin::Token => raw == v,
        Builtin::AnyUri => !v.chars().any(|c| c.is_whitespace() || c.is_control()),
        Builtin::DateTime => {
            matches(
                &DATE_TIME,
                r"^-?\d{4,}-\d{2}-\d{2}T(\d{2}):(\d{2}):(\d{2})(\.\d+)?(Z|[+-]\d{2}:\d{2})?$",
                &v,
            ) && check_date_parts(&v)
                && {
                    let t = &v[v.find('T').unwrap() + 1..];
                    let (h, m, s): (u32, u32, u32) =
                        (t[0..2].parse().unwrap(), t[3..5].parse().unwrap(), t[6..8].parse().unwrap());
                    (h < 24 && m < 60 && s < 60) || (h == 24 && m == 0 && s == 0)
                }
        }
        Builtin::Date => {
            matches(&DATE, r"^-?\d{4,}-\d{2}-\d{2}(Z|[+-]\d{2}:\d{2})?$", &v) && check_date_parts(&v)
        }
        Builtin::Boolean => matches!(v.as_str(), "true" | "false" | "1" | "0"),
        Builtin::Integer => {
            let d = v.strip_prefix(['+', '-']).unwrap_or(&v);
            !d.is_empty() && d.bytes().all(|c| c.is_ascii_digit())
        }
        Builtin::NonNegativeInteger => {
            let d = v.strip_prefix('+').unwrap_or(&v);
            let neg_zero = v.strip_prefix('-').is_some_and(|z| !z.is_empty() && z.bytes().all(|c| c == b'0'));
            neg_zero || (!d.is_empty() && d.bytes().all(|c| c.is_ascii_digit()))
        }
        Builtin::PositiveInteger => {
            let d = v.strip_prefix('+').unwrap_or(&v);
            !d.is_empty() && d.bytes().all(|c| c.is_ascii_digit()) && d.bytes().any(|c| c != b'0')
        }
    };
    if ok {
        Ok(())
    } else {
        Err(format!("{raw:?} is not a valid {b:?}"))
    }
}

fn collapse(s: &str) -> String {
    s.split([' ', '\t', '\n', '\r']).filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" ")
}

impl<'s> Run<'s> {
    fn resolve<'a>(&'a self, ty: &'a TypeRef) -> Result<Resolved<'a>, Error> {
        match ty {
            TypeRef::Builtin(b) => Ok(Resolved::Builtin(*b)),
            TypeRef::Anonymous(def) => Ok(Resolved::Def(def)),
            TypeRef::Named(q) => self
                .schema
                .types
                .get(q)
                .map(|d| Resolved::Def(d.as_ref()))
                .ok_or_else(|| Error::Schema(format!("undefined type {q}"))),
        }
    }

    /// Whether the type's values collapse whitespace before facet checks.
    fn collapses(&self, ty: &TypeRef) -> Result<bool, Error> {
        Ok(match self.resolve(ty)? {
            Resolved::Builtin(b) => !matches!(b, Builtin::String | Builtin::AnyType | Builtin::AnySimpleType),
            Resolved::Def(TypeDef::Simple(SimpleType::Restriction { base, .. })) => self.collapses(base)?,
            Resolved::Def(_) => false,
        })
    }

    fn check_simple(&self, ty: &TypeRef, raw: &str) -> Result<Result<(), String>, Error> {
        Ok(match self.resolve(ty)? {
            Resolved::Builtin(b) => builtin_ok(b, raw),
            Resolved::Def(TypeDef::Complex(_)) => Err("a complex type cannot type a simple value".into()),
            Resolved::Def(TypeDef::Simple(SimpleType::Union(members))) => {
                for m in members {
                    if self.check_simple(m, raw)?.is_ok() {
                        return Ok(Ok(()));
                    }
                }
                Err(format!("{raw:?} matches no member of the union"))
            }
            Resolved::Def(TypeDef::Simple(SimpleType::Restriction { base, enumeration, patterns })) => {
                if let Err(e) = self.check_simple(base, raw)? {
                    return Ok(Err(e));
                }
                let v = if self.collapses(base)? { collapse(raw) } else { raw.to_owned() };
                if !enumeration.is_empty() && !enumeration.contains(&v) {
                    Err(format!("{v:?} is not one of {enumeration:?}"))
                } else if !patterns.is_empty() && !patterns.iter().any(|p| p.is_match(&v)) {
                    Err(format!("{v:?} does not match the required pattern"))
                } else {
                    Ok(())
                }
            }
        })
    }

    fn report(&self, path: &str, message: impl Into<String>) {
        self.out.borrow_mut().push(Violation { path: path.to_owned(), message: message.into() });
    }

    fn element(&self, node: &Node, ty: &TypeRef, path: &str) -> Result<(), Error> {
        match self.resolve(ty)? {
            Resolved::Builtin(Builtin::AnyType) => self.lax(node, path),
            Resolved::Builtin(_) | Resolved::Def(TypeDef::Simple(_)) => {
                self.attributes(node, &[], false, path)?;
                if node.elements().next().is_some() {
                    self.report(path, "element children are not allowed in a simple-typed element");
                }
                if let Err(e) = self.check_simple(ty, &node.text())? {
                    self.report(path, e);
                }
                Ok(())
            }
            Resolved::Def(TypeDef::Complex(ct)) => {
                self.attributes(node, &ct.attributes, ct.any_attribute, path)?;
                match &ct.content {
                    Content::Empty => {
                        if node.elements().next().is_some() || !node.text().trim().is_empty() {
                            self.report(path, "content must be empty");
                        }
                    }
                    Content::Simple(base) => {
                        if node.elements().next().is_some() {
                            self.report(path, "element children are not allowed in simple content");
                        } else if let Err(e) = self.check_simple(base, &node.text())? {
                            self.report(path, e);
                        }
                    }
                    Content::Elements(particle) => self.children(node, particle, path)?,
                }
                Ok(())
            }
        }
    }

    fn attributes(
        &self,
        node: &Node,
        decls: &[schema::AttributeDecl],
        any: bool,
        path: &str,
    ) -> Result<(), Error> {
        for a in &node.attrs {
            if a.name.ns.as_deref() == Some(XSI_NS) {
                if !matches!(a.name.local.as_str(), "schemaLocation" | "noNamespaceSchemaLocation") {
                    self.report(path, format!("xsi:{} is not supported", a.name.local));
                }
                continue;
            }
            match decls.iter().find(|d| d.name == a.name) {
                Some(d) => {
                    if let Err(e) = self.check_simple(&d.ty, &a.value)? {
                        self.report(path, format!("attribute {}: {e}", a.name));
                    }
                }
                None if any => {}
                None => self.report(path, format!("attribute {} is not allowed", a.name)),
            }
        }
        for d in decls.iter().filter(|d| d.required) {
            if !node.attrs.iter().any(|a| a.name == d.name) {
                self.report(path, format!("required attribute {} is missing", d.name));
            }
        }
        Ok(())
    }

    fn children(&self, node: &Node, particle: &Particle, path: &str) -> Result<(), Error> {
        if !node.text().trim().is_empty() {
            self.report(path, "text is not allowed in element-only content");
        }
        let kids: Vec<&Node> = node.elements().collect();
        if !particle_ends(particle, &kids, 0).contains(&kids.len()) {
            let names: Vec<String> = kids.iter().map(|k| k.name.local.clone()).collect();
            self.report(path, format!("children [{}] do not match the content model", names.join(", ")));
            return Ok(());
        }
        let mut decls = Vec::new();
        let mut wildcards = Vec::new();
        collect(particle, &mut decls, &mut wildcards);
        for (i, kid) in kids.iter().enumerate() {
            let child_path = format!("{path}/{}[{i}]", kid.name.local);
            if let Some(decl) = decls.iter().find(|d| d.name == kid.name) {
                let ty = decl.ty.clone();
                self.element(kid, &ty, &child_path)?;
            } else if let Some(w) = wildcards.iter().find(|w| w.namespaces.allows(&kid.name.ns)) {
                match self.schema.elements.get(&kid.name) {
                    _ if w.process == Process::Skip => {}
                    Some(decl) => {
                        let ty = decl.ty.clone();
                        self.element(kid, &ty, &child_path)?
                    }
                    None => self.lax(kid, &child_path)?,
                }
            }
        }
        Ok(())
    }

    /// Validate known descendants; everything else only needs to be well formed.
    fn lax(&self, node: &Node, path: &str) -> Result<(), Error> {
        for (i, kid) in node.elements().enumerate() {
            let child_path = format!("{path}/{}[{i}]", kid.name.local);
            match self.schema.elements.get(&kid.name) {
                Some(decl) => {
                    let ty = decl.ty.clone();
                    self.element(kid, &ty, &child_path)?
                }
                None => self.lax(kid, &child_path)?,
            }
        }
        Ok(())
    }
}

fn collect<'a>(p: &'a Particle, decls: &mut Vec<&'a schema::ElementDecl>, wildcards: &mut Vec<&'a Wildcard>) {
    match &p.term {
        Term::Element(d) => decls.push(d),
        Term::Any(w) => wildcards.push(w),
        Term::Sequence(items) | Term::Choice(items) => items.iter().for_each(|i| collect(i, decls, wildcards)),
    }
}

/// Every position at which `p` can finish when started at `start`.
fn particle_ends(p: &Particle, kids: &[&Node], start: usize) -> BTreeSet<usize> {
    let mut result = BTreeSet::new();
    if p.occurs.min == 0 {
        result.insert(start);
    }
    let mut frontier: BTreeSet<usize> = [start].into();
    let mut count = 0u32;
    while !frontier.is_empty() && p.occurs.max.allows(count + 1) {
        count += 1;
        let mut next: BTreeSet<usize> = frontier.iter().flat_map(|&s| term_ends(&p.term, kids, s)).collect();
        if count >= p.occurs.min {
            // a position already reached with fewer repetitions cannot lead anywhere new
            next.retain(|e| result.insert(*e));
        }
        frontier = next;
    }
    result
}

fn term_ends(term: &Term, kids: &[&Node], start: usize) -> BTreeSet<usize> {
    match term {
        Term::Element(d) => match kids.get(start) {
            Some(k) if k.name == d.name => [start + 1].into(),
            _ => BTreeSet::new(),
        },
        Term::Any(w) => match kids.get(start) {
            Some(k) if w.namespaces.allows(&k.name.ns) => [start + 1].into(),
            _ => BTreeSet::new(),
        },
        Term::Sequence(items) => {
            let mut positions: BTreeSet<usize> = [start].into();
            for item in items {
                positions = positions.iter().flat_map(|&s| particle_ends(item, kids, s)).collect();
                if positions.is_empty() {
                    break;
                }
            }
            positions
        }
        Term::Choice(items) => items.iter().flat_map(|i| particle_ends(i, kids, start)).collect(),
    }
}

impl Schema {
    /// Validate a document. `Err` means the document is not well formed or
    /// the schema references something undefined; an empty `Ok` list means valid.
    pub fn validate(&self, xml: &str) -> Result<Vec<Violation>, Error> {
        let root = dom::parse(xml)?;
        let run = Run { schema: self, out: RefCell::new(Vec::new()) };
        let path = format!("/{}", root.name.local);
        match self.elements.get(&root.name) {
            Some(decl) => {
                let ty = decl.ty.clone();
                run.element(&root, &ty, &path)?
            }
            None => run.report(&path, format!("no global declaration for root element {}", root.name)),
        }
        Ok(run.out.into_inner())
    }
}
