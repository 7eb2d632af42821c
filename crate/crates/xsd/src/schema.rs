//! Schema documents compiled into a small component model.

use std::collections::BTreeMap;
use std::rc::Rc;

use regex::Regex;

use crate::dom::{self, Node, QName};
use crate::Error;

pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Max {
    Bounded(u32),
    Unbounded,
}

impl Max {
    pub fn allows(self, n: u32) -> bool {
        match self {
            Max::Bounded(m) => n <= m,
            Max::Unbounded => true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Occurs {
    pub min: u32,
    pub max: Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    AnyType,
    AnySimpleType,
    String,
    Token,
    AnyUri,
    DateTime,
    Date,
    Boolean,
    Integer,
    NonNegativeInteger,
    PositiveInteger,
}

impl Builtin {
    fn from_local(local: &str) -> Option<Builtin> {
        Some(match local {
            "anyType" => Builtin::AnyType,
            "anySimpleType" => Builtin::AnySimpleType,
            "string" => Builtin::String,
            "token" => Builtin::Token,
            "anyURI" => Builtin::AnyUri,
            "dateTime" => Builtin::DateTime,
            "date" => Builtin::Date,
            "boolean" => Builtin::Boolean,
            "integer" => Builtin::Integer,
            "nonNegativeInteger" => Builtin::NonNegativeInteger,
            "positiveInteger" => Builtin::PositiveInteger,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub enum TypeRef {
    Builtin(Builtin),
    Named(QName),
    Anonymous(Rc<TypeDef>),
}

#[derive(Debug)]
pub enum TypeDef {
    Simple(SimpleType),
    Complex(ComplexType),
}

#[derive(Debug)]
pub enum SimpleType {
    Restriction { base: TypeRef, enumeration: Vec<String>, patterns: Vec<Regex> },
    Union(Vec<TypeRef>),
}

#[derive(Debug)]
pub struct ComplexType {
    pub content: Content,
    pub attributes: Vec<AttributeDecl>,
    pub any_attribute: bool,
}

#[derive(Debug)]
pub enum Content {
    Empty,
    Elements(Particle),
    Simple(TypeRef),
}

#[derive(Debug)]
pub struct Particle {
    pub occurs: Occurs,
    pub term: Term,
}

#[derive(Debug)]
pub enum Term {
    Element(ElementDecl),
    Sequence(Vec<Particle>),
    Choice(Vec<Particle>),
    Any(Wildcard),
}

#[derive(Debug, Clone)]
pub struct ElementDecl {
    pub name: QName,
    pub ty: TypeRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Process {
    Strict,
    Lax,
    Skip,
}

#[derive(Debug, Clone)]
pub enum NsConstraint {
    Any,
    /// Any namespace other than this one, and not unqualified.
    Other(Option<String>),
    List(Vec<Option<String>>),
}

impl NsConstraint {
    pub fn allows(&self, ns: &Option<String>) -> bool {
        match self {
            NsConstraint::Any => true,
            NsConstraint::Other(target) => ns.is_some() && ns != target,
            NsConstraint::List(list) => list.contains(ns),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Wildcard {
    pub namespaces: NsConstraint,
    pub process: Process,
}

#[derive(Debug, Clone)]
pub struct AttributeDecl {
    pub name: QName,
    pub ty: TypeRef,
    pub required: bool,
}

/// Global components from one or more schema documents.
#[derive(Debug, Default)]
pub struct Schema {
    pub elements: BTreeMap<QName, ElementDecl>,
    pub types: BTreeMap<QName, Rc<TypeDef>>,
}

fn is_xsd(node: &Node, local: &str) -> bool {
    node.name.ns.as_deref() == Some(XSD_NS) && node.name.local == local
}

fn xsd_children(node: &Node) -> impl Iterator<Item = &Node> {
    node.elements().filter(|n| !is_xsd(n, "annotation"))
}

fn unsupported(node: &Node) -> Error {
    Error::Schema(format!("unsupported schema construct <{}>", node.name.local))
}

/// XSD regular expressions are implicitly anchored and have no `^`/`$` anchors.
fn compile_pattern(pattern: &str) -> Result<Regex, Error> {
    let mut out = String::from("^(?:");
    let mut chars = pattern.chars();
    let mut in_class = false;
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                let next = chars.next().ok_or_else(|| Error::Schema("dangling escape in pattern".into()))?;
                if matches!(next, 'i' | 'I' | 'c' | 'C') {
                    return Err(Error::Schema(format!("pattern escape \\{next} is not supported")));
                }
                out.push('\\');
                out.push(next);
            }
            '[' => {
                in_class = true;
                out.push(c);
            }
            ']' => {
                in_class = false;
                out.push(c);
            }
            '^' | '$' if !in_class => {
                out.push('\\');
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out.push_str(")$");
    Regex::new(&out).map_err(|e| Error::Schema(format!("bad pattern {pattern:?}: {e}")))
}

struct Ctx {
    target: Option<String>,
    qualified_elements: bool,
    qualified_attributes: bool,
}

impl Ctx {
    fn type_ref(&self, node: &Node, value: &str) -> Result<TypeRef, Error> {
        let q = node.resolve_qname(value)?;
        if q.ns.as_deref() == Some(XSD_NS) {
            return Builtin::from_local(&q.local)
                .map(TypeRef::Builtin)
                .ok_or_else(|| Error::Schema(format!("built-in type xs:{} is not supported", q.local)));
        }
        Ok(TypeRef::Named(q))
    }

    fn occurs(&self, node: &Node) -> Result<Occurs, Error> {
        let parse = |v: &str| v.parse::<u32>().map_err(|_| Error::Schema(format!("bad occurrence {v:?}")));
        let min = node.attr("minOccurs").map(parse).transpose()?.unwrap_or(1);
        let max = match node.attr("maxOccurs") {
            Some("unbounded") => Max::Unbounded,
            Some(v) => Max::Bounded(parse(v)?),
            None => Max::Bounded(1),
        };
        Ok(Occurs { min, max })
    }

    fn element(&self, node: &Node, global: bool) -> Result<ElementDecl, Error> {
        if node.attr("ref").is_some() {
            return Err(unsupported(node));
        }
        let local = node.attr("name").ok_or_else(|| Error::Schema("element without a name".into()))?;
        let ns = if global || self.qualified_elements { self.target.clone() } else { None };
        let inline = xsd_children(node).next();
        let ty = match (node.attr("type"), inline) {
            (Some(t), _) => self.type_ref(node, t)?,
            (None, Some(def)) if is_xsd(def, "complexType") => {
                TypeRef::Anonymous(Rc::new(TypeDef::Complex(self.complex(def)?)))
            }
            (None, Some(def)) if is_xsd(def, "simpleType") => {
                TypeRef::Anonymous(Rc::new(TypeDef::Simple(self.simple(def)?)))
            }
            (None, Some(other)) => return Err(unsupported(other)),
            (None, None) => TypeRef::Builtin(Builtin::AnyType),
        };
        Ok(ElementDecl { name: QName { ns, local: local.to_owned() }, ty })
    }

    fn particle(&self, node: &Node) -> Result<Particle, Error> {
        let occurs = self.occurs(node)?;
        let term = match node.name.local.as_str() {
            "element" if is_xsd(node, "element") => Term::Element(self.element(node, false)?),
            "sequence" | "choice" if node.name.ns.as_deref() == Some(XSD_NS) => {
                let items = xsd_children(node).map(|n| self.particle(n)).collect::<Result<Vec<_>, _>>()?;
                if node.name.local == "sequence" {
                    Term::Sequence(items)
                } else {
                    Term::Choice(items)
                }
            }
            "any" if is_xsd(node, "any") => Term::Any(self.wildcard(node)?),
            _ => return Err(unsupported(node)),
        };
        Ok(Particle { occurs, term })
    }

    fn wildcard(&self, node: &Node) -> Result<Wildcard, Error> {
        let namespaces = match node.attr("namespace").unwrap_or("##any") {
            "##any" => NsConstraint::Any,
            "##other" => NsConstraint::Other(self.target.clone()),
            list => NsConstraint::List(
                list.split_whitespace()
                    .map(|t| match t {
                        "##targetNamespace" => self.target.clone(),
                        "##local" => None,
                        uri => Some(uri.to_owned()),
                    })
                    .collect(),
            ),
        };
        let process = match node.attr("processContents").unwrap_or("strict") {
            "strict" => Process::Strict,
            "lax" => Process::Lax,
            "skip" => Process::Skip,
            other => return Err(Error::Schema(format!("bad processContents {other:?}"))),
        };
        Ok(Wildcard { namespaces, process })
    }

    fn attribute(&self, node: &Node) -> Result<AttributeDecl, Error> {
        if node.attr("ref").is_some() {
            return Err(unsupported(node));
        }
        let local = node.attr("name").ok_or_else(|| Error::Schema("attribute without a name".into()))?;
        let ns = if self.qualified_attributes { self.target.clone() } else { None };
        let ty = match (node.attr("type"), xsd_children(node).next()) {
            (Some(t), _) => self.type_ref(node, t)?,
            (None, Some(def)) if is_xsd(def, "simpleType") => {
                TypeRef::Anonymous(Rc::new(TypeDef::Simple(self.simple(def)?)))
            }
            (None, Some(other)) => return Err(unsupported(other)),
            (None, None) => TypeRef::Builtin(Builtin::AnySimpleType),
        };
        let required = match node.attr("use").unwrap_or("optional") {
            "required" => true,
            "optional" => false,
            other => return Err(Error::Schema(format!("attribute use {other:?} is not supported"))),
        };
        Ok(AttributeDecl { name: QName { ns, local: local.to_owned() }, ty, required })
    }

    fn attributes(&self, node: &Node, out: &mut ComplexType) -> Result<(), Error> {
        for child in xsd_children(node) {
            if is_xsd(child, "attribute") {
                out.attributes.push(self.attribute(child)?);
            } else if is_xsd(child, "anyAttribute") {
                out.any_attribute = true;
            }
        }
        Ok(())
    }

    fn complex(&self, node: &Node) -> Result<ComplexType, Error> {
        if node.attr("mixed") == Some("true") {
            return Err(Error::Schema("mixed content is not supported".into()));
        }
        let mut ct = ComplexType { content: Content::Empty, attributes: vec![], any_attribute: false };
        for child in xsd_children(node) {
            match child.name.local.as_str() {
                "sequence" | "choice" | "element" | "any" => ct.content = Content::Elements(self.particle(child)?),
                "attribute" | "anyAttribute" => {}
                "simpleContent" => {
                    let ext = xsd_children(child).next().ok_or_else(|| unsupported(child))?;
                    if !is_xsd(ext, "extension") {
                        return Err(unsupported(ext));
                    }
                    let base = ext.attr("base").ok_or_else(|| Error::Schema("extension without base".into()))?;
                    ct.content = Content::Simple(self.type_ref(ext, base)?);
                    self.attributes(ext, &mut ct)?;
                }
                _ => return Err(unsupported(child)),
            }
        }
        self.attributes(node, &mut ct)?;
        Ok(ct)
    }

    fn simple(&self, node: &Node) -> Result<SimpleType, Error> {
        let def = xsd_children(node).next().ok_or_else(|| unsupported(node))?;
        if is_xsd(def, "restriction") {
            let base = def.attr("base").ok_or_else(|| Error::Schema("restriction without base".into()))?;
            let mut enumeration = vec![];
            let mut patterns = vec![];
            for facet in xsd_children(def) {
                let value = facet.attr("value").ok_or_else(|| Error::Schema("facet without value".into()))?;
                match facet.name.local.as_str() {
                    "enumeration" => enumeration.push(value.to_owned()),
                    "pattern" => patterns.push(compile_pattern(value)?),
                    _ => return Err(unsupported(facet)),
                }
            }
            Ok(SimpleType::Restriction { base: self.type_ref(def, base)?, enumeration, patterns })
        } else if is_xsd(def, "union") {
            let members = def.attr("memberTypes").ok_or_else(|| unsupported(def))?;
            let refs = members.split_whitespace().map(|m| self.type_ref(def, m)).collect::<Result<_, _>>()?;
            Ok(SimpleType::Union(refs))
        } else {
            Err(unsupported(def))
        }
    }
}

impl Schema {
    pub fn new() -> Schema {
        Schema::default()
    }

    /// Add the global components of one schema document.
    pub fn load(&mut self, xsd: &str) -> Result<(), Error> {
        let root = dom::parse(xsd)?;
        if !is_xsd(&root, "schema") {
            return Err(Error::Schema("root element is not xs:schema".into()));
        }
        let ctx = Ctx {
            target: root.attr("targetNamespace").map(str::to_owned),
            qualified_elements: root.attr("elementFormDefault") == Some("qualified"),
            qualified_attributes: root.attr("attributeFormDefault") == Some("qualified"),
        };
        for node in xsd_children(&root) {
            let name = |n: &Node| -> Result<QName, Error> {
                let local = n.attr("name").ok_or_else(|| Error::Schema("global component without a name".into()))?;
                Ok(QName { ns: ctx.target.clone(), local: local.to_owned() })
            };
            match node.name.local.as_str() {
                "element" => {
                    let decl = ctx.element(node, true)?;
                    self.elements.insert(decl.name.clone(), decl);
                }
                "complexType" => {
                    self.types.insert(name(node)?, Rc::new(TypeDef::Complex(ctx.complex(node)?)));
                }
                "simpleType" => {
                    self.types.insert(name(node)?, Rc::new(TypeDef::Simple(ctx.simple(node)?)));
                }
                _ => return Err(unsupported(node)),
            }
        }
        Ok(())
    }
}
