//! Minimal namespace-resolved element tree.

use std::collections::BTreeMap;
use std::rc::Rc;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::Error;

pub const XML_NS: &str = "http://www.w3.org/XML/1998/namespace";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct QName {
    pub ns: Option<String>,
    pub local: String,
}

impl std::fmt::Display for QName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.ns {
            Some(ns) => write!(f, "{{{ns}}}{}", self.local),
            None => f.write_str(&self.local),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Attr {
    pub name: QName,
    pub value: String,
}

#[derive(Debug, Clone)]
pub enum Child {
    Element(Node),
    Text(String),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub name: QName,
    /// Excludes namespace declarations.
    pub attrs: Vec<Attr>,
    pub children: Vec<Child>,
    /// In-scope prefix bindings; the default namespace is under "".
    pub scope: Rc<BTreeMap<String, String>>,
}

impl Node {
    pub fn elements(&self) -> impl Iterator<Item = &Node> {
        self.children.iter().filter_map(|c| match c {
            Child::Element(n) => Some(n),
            Child::Text(_) => None,
        })
    }

    pub fn text(&self) -> String {
        self.children
            .iter()
            .filter_map(|c| match c {
                Child::Text(t) => Some(t.as_str()),
                Child::Element(_) => None,
            })
            .collect()
    }

    pub fn attr(&self, local: &str) -> Option<&str> {
        self.attrs.iter().find(|a| a.name.ns.is_none() && a.name.local == local).map(|a| a.value.as_str())
    }

    /// Resolve a QName-valued attribute using this element's bindings.
    pub fn resolve_qname(&self, value: &str) -> Result<QName, Error> {
        let (prefix, local) = value.split_once(':').unwrap_or(("", value));
        let ns = match self.scope.get(prefix) {
            Some(uri) => Some(uri.clone()),
            None if prefix.is_empty() => None,
            None => return Err(Error::Schema(format!("unbound prefix in {value:?}"))),
        };
        Ok(QName { ns, local: local.to_owned() })
    }
}

fn split(raw: &[u8]) -> Result<(String, String), Error> {
    let s = std::str::from_utf8(raw).map_err(|e| Error::Xml(e.to_string()))?;
    Ok(match s.split_once(':') {
        Some((p, l)) => (p.to_owned(), l.to_owned()),
        None => (String::new(), s.to_owned()),
    })
}

fn open(start: &BytesStart<'_>, parent: &Rc<BTreeMap<String, String>>) -> Result<Node, Error> {
    let mut scope: Option<BTreeMap<String, String>> = None;
    let mut raw_attrs = Vec::new();
    for a in start.attributes() {
        let a = a.map_err(|e| Error::Xml(e.to_string()))?;
        let value = a.unescape_value().map_err(|e| Error::Xml(e.to_string()))?.into_owned();
        let (prefix, local) = split(a.key.as_ref())?;
        if prefix.is_empty() && local == "xmlns" {
            scope.get_or_insert_with(|| (**parent).clone()).insert(String::new(), value);
        } else if prefix == "xmlns" {
            scope.get_or_insert_with(|| (**parent).clone()).insert(local, value);
        } else {
            raw_attrs.push((prefix, local, value));
        }
    }
    let scope = scope.map(Rc::new).unwrap_or_else(|| parent.clone());

    let resolve = |prefix: &str, is_attr: bool| -> Result<Option<String>, Error> {
        if prefix == "xml" {
            return Ok(Some(XML_NS.to_owned()));
        }
        if prefix.is_empty() && is_attr {
            return Ok(None);
        }
        match scope.get(prefix) {
            Some(uri) if uri.is_empty() => Ok(None),
            Some(uri) => Ok(Some(uri.clone())),
            None if prefix.is_empty() => Ok(None),
            None => Err(Error::Xml(format!("unbound namespace prefix {prefix:?}"))),
        }
    };

    let (prefix, local) = split(start.name().as_ref())?;
    let name = QName { ns: resolve(&prefix, false)?, local };
    let mut attrs = Vec::with_capacity(raw_attrs.len());
    for (p, l, value) in raw_attrs {
        let name = QName { ns: resolve(&p, true)?, local: l };
        if attrs.iter().any(|a: &Attr| a.name == name) {
            return Err(Error::Xml(format!("duplicate attribute {name}")));
        }
        attrs.push(Attr { name, value });
    }
    Ok(Node { name, attrs, children: Vec::new(), scope })
}

/// Parse a whole document and return its root element.
pub fn parse(xml: &str) -> Result<Node, Error> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(false);
    let root_scope = Rc::new(BTreeMap::new());
    let mut stack: Vec<Node> = Vec::new();
    let mut root = None;
    loop {
        let event = reader.read_event().map_err(|e| Error::Xml(e.to_string()))?;
        match event {
            Event::Start(s) => {
                let parent = stack.last().map(|n| n.scope.clone()).unwrap_or_else(|| root_scope.clone());
                if root.is_some() {
                    return Err(Error::Xml("content after the root element".into()));
                }
                stack.push(open(&s, &parent)?);
            }
            Event::Empty(s) => {
                let parent = stack.last().map(|n| n.scope.clone()).unwrap_or_else(|| root_scope.clone());
                let node = open(&s, &parent)?;
                match stack.last_mut() {
                    Some(p) => p.children.push(Child::Element(node)),
                    None if root.is_none() => root = Some(node),
                    None => return Err(Error::Xml("content after the root element".into())),
                }
            }
            Event::End(_) => {
                let node = stack.pop().ok_or_else(|| Error::Xml("unbalanced end tag".into()))?;
                match stack.last_mut() {
                    Some(p) => p.children.push(Child::Element(node)),
                    None => root = Some(node),
                }
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| Error::Xml(e.to_string()))?.into_owned();
                match stack.last_mut() {
                    Some(p) => p.children.push(Child::Text(text)),
                    None if text.trim().is_empty() => {}
                    None => return Err(Error::Xml("text outside the root element".into())),
                }
            }
            Event::CData(c) => {
                let text = String::from_utf8(c.into_inner().into_owned()).map_err(|e| Error::Xml(e.to_string()))?;
                if let Some(p) = stack.last_mut() {
                    p.children.push(Child::Text(text));
                }
            }
            Event::Eof => break,
            Event::Decl(_) | Event::PI(_) | Event::Comment(_) | Event::DocType(_) => {}
        }
    }
    if !stack.is_empty() {
        return Err(Error::Xml("unclosed element at end of document".into()));
    }
    root.ok_or_else(|| Error::Xml("no root element".into()))
}
