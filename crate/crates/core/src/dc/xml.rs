//! `oai_dc` XML codec.
//!
//! Each [`DcElement`] becomes one `dc:<name>` child of `oai_dc:dc`, in stored
//! order. A language tag is carried as `xml:lang`; a qualifier as the
//! attribute `alp:refinement` in the [`REFINEMENT_NS`] namespace, which plain
//! `oai_dc` harvesters ignore.

use quick_xml::events::{BytesStart, Event};
use quick_xml::name::{Namespace, ResolveResult};
use quick_xml::NsReader;
use thiserror::Error;

use crate::catalog::{DcElement, DcName};

pub const OAI_DC_NS: &str = "http://www.openarchives.org/OAI/2.0/oai_dc/";
pub const DC_NS: &str = "http://purl.org/dc/elements/1.1/";
pub const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";
pub const XML_NS: &str = "http://www.w3.org/XML/1998/namespace";
pub const REFINEMENT_NS: &str = "urn:x-alp:dc-refinement";
pub const OAI_DC_SCHEMA: &str = "http://www.openarchives.org/OAI/2.0/oai_dc.xsd";

#[derive(Debug, Error)]
pub enum DcXmlError {
    #[error("malformed XML: {0}")]
    Malformed(String),
    #[error("root element is not oai_dc:dc")]
    NotOaiDc,
    #[error("illegal elements: {}", .0.join(", "))]
    IllegalElements(Vec<String>),
    #[error("element dc:{0} contains markup")]
    NestedMarkup(String),
}

impl From<quick_xml::Error> for DcXmlError {
    fn from(e: quick_xml::Error) -> Self {
        DcXmlError::Malformed(e.to_string())
    }
}

impl From<quick_xml::events::attributes::AttrError> for DcXmlError {
    fn from(e: quick_xml::events::attributes::AttrError) -> Self {
        DcXmlError::Malformed(e.to_string())
    }
}

/// Escape text for element content or a double-quoted attribute value.
/// Carriage returns and tabs become character references so they survive
/// XML end-of-line and attribute normalization.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            c => out.push(c),
        }
    }
    out
}

/// Serialize elements as an `oai_dc:dc` fragment (no XML declaration).
pub fn to_oai_dc_xml(elements: &[DcElement]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<oai_dc:dc xmlns:oai_dc=\"{OAI_DC_NS}\" xmlns:dc=\"{DC_NS}\" xmlns:xsi=\"{XSI_NS}\" \
         xmlns:alp=\"{REFINEMENT_NS}\" xsi:schemaLocation=\"{OAI_DC_NS} {OAI_DC_SCHEMA}\">"
    ));
    for e in elements {
        out.push_str("<dc:");
        out.push_str(&e.element);
        if let Some(q) = &e.qualifier {
            out.push_str(&format!(" alp:refinement=\"{}\"", escape(q)));
        }
        if let Some(lang) = &e.lang {
            out.push_str(&format!(" xml:lang=\"{}\"", escape(lang)));
        }
        out.push('>');
        out.push_str(&escape(&e.value));
        out.push_str("</dc:");
        out.push_str(&e.element);
        out.push('>');
    }
    out.push_str("</oai_dc:dc>");
    out
}

fn is_ns(res: &ResolveResult<'_>, ns: &str) -> bool {
    matches!(res, ResolveResult::Bound(Namespace(n)) if *n == ns.as_bytes())
}

/// Parse an `oai_dc:dc` fragment back into elements.
///
/// Children that are not one of the fifteen `dc:` elements are collected and
/// reported together as [`DcXmlError::IllegalElements`].
pub fn from_oai_dc_xml(fragment: &str) -> Result<Vec<DcElement>, DcXmlError> {
    let mut reader = NsReader::from_str(fragment);
    reader.config_mut().trim_text(false);
    loop {
        match reader.read_resolved_event()? {
            (res, Event::Start(start)) => {
                if is_ns(&res, OAI_DC_NS) && start.local_name().as_ref() == b"dc" {
                    let start = start.into_owned();
                    return read_dc_body(&mut reader, &start);
                }
                return Err(DcXmlError::NotOaiDc);
            }
            (res, Event::Empty(start)) => {
                return if is_ns(&res, OAI_DC_NS) && start.local_name().as_ref() == b"dc" {
                    Ok(Vec::new())
                } else {
                    Err(DcXmlError::NotOaiDc)
                };
            }
            (_, Event::Eof) => return Err(DcXmlError::NotOaiDc),
            (_, Event::Text(t)) if !t.iter().all(u8::is_ascii_whitespace) => {
                return Err(DcXmlError::Malformed("text outside the root element".into()))
            }
            _ => {}
        }
    }
}

/// Read the children of an `oai_dc:dc` element whose start tag was just consumed.
pub fn read_dc_body(
    reader: &mut NsReader<&[u8]>,
    dc_start: &BytesStart<'_>,
) -> Result<Vec<DcElement>, DcXmlError> {
    let mut elements = Vec::new();
    let mut illegal = Vec::new();
    loop {
        match reader.read_resolved_event()? {
            (res, Event::Start(start)) => {
                let start = start.into_owned();
                match dc_name(&res, &start) {
                    Some(name) => {
                        let mut el = element_from_attrs(reader, name, &start)?;
                        el.value = read_text(reader, name)?;
                        elements.push(el);
                    }
                    None => {
                        illegal.push(display_name(&res, &start));
                        reader.read_to_end(start.name())?;
                    }
                }
            }
            (res, Event::Empty(start)) => match dc_name(&res, &start) {
                Some(name) => elements.push(element_from_attrs(reader, name, &start)?),
                None => illegal.push(display_name(&res, &start)),
            },
            (_, Event::End(end)) if end.name() == dc_start.name() => break,
            (_, Event::Eof) => return Err(DcXmlError::Malformed("unexpected end of input".into())),
            _ => {}
        }
    }
    if illegal.is_empty() {
        Ok(elements)
    } else {
        Err(DcXmlError::IllegalElements(illegal))
    }
}

fn dc_name(res: &ResolveResult<'_>, start: &BytesStart<'_>) -> Option<DcName> {
    if !is_ns(res, DC_NS) {
        return None;
    }
    std::str::from_utf8(start.local_name().as_ref()).ok()?.parse().ok()
}

fn display_name(res: &ResolveResult<'_>, start: &BytesStart<'_>) -> String {
    let local = String::from_utf8_lossy(start.local_name().as_ref()).into_owned();
    if is_ns(res, DC_NS) {
        local
    } else {
        String::from_utf8_lossy(start.name().as_ref()).into_owned()
    }
}

fn element_from_attrs(
    reader: &NsReader<&[u8]>,
    name: DcName,
    start: &BytesStart<'_>,
) -> Result<DcElement, DcXmlError> {
    let mut el = DcElement::new(name, String::new());
    for attr in start.attributes() {
        let attr = attr?;
        let (res, local) = reader.resolve_attribute(attr.key);
        let value = attr.unescape_value()?.into_owned();
        let is_xml_lang = attr.key.as_ref() == b"xml:lang" || (is_ns(&res, XML_NS) && local.as_ref() == b"lang");
        if is_xml_lang {
            el.lang = Some(value);
        } else if is_ns(&res, REFINEMENT_NS) && local.as_ref() == b"refinement" {
            el.qualifier = Some(value);
        }
    }
    Ok(el)
}

fn read_text(reader: &mut NsReader<&[u8]>, name: DcName) -> Result<String, DcXmlError> {
    let mut value = String::new();
    loop {
        match reader.read_event()? {
            Event::Text(t) => value.push_str(&t.unescape()?),
            Event::CData(c) => value.push_str(&String::from_utf8_lossy(&c.into_inner())),
            Event::End(_) => return Ok(value),
            Event::Start(_) | Event::Empty(_) => return Err(DcXmlError::NestedMarkup(name.to_string())),
            Event::Eof => return Err(DcXmlError::Malformed("unexpected end of input".into())),
            _ => {}
        }
    }
}
