//! Minimal XML tree reader used for NeTEx-subset validation and for
//! structural comparison in tests.

use quick_xml::events::Event;
use quick_xml::Reader;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XmlElement {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<XmlNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum XmlNode {
    Element(XmlElement),
    Text(String),
}

impl XmlElement {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn child_elements(&self) -> impl Iterator<Item = &XmlElement> {
        self.children.iter().filter_map(|n| match n {
            XmlNode::Element(e) => Some(e),
            XmlNode::Text(_) => None,
        })
    }

    pub fn has_child(&self, name: &str) -> bool {
        self.child_elements().any(|e| e.name == name)
    }

    /// Immediate text content, concatenated.
    pub fn text(&self) -> String {
        self.children
            .iter()
            .filter_map(|n| match n {
                XmlNode::Text(t) => Some(t.as_str()),
                XmlNode::Element(_) => None,
            })
            .collect()
    }

    /// Depth-first walk over this element and all descendants.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a XmlElement, &str)) {
        fn inner<'a>(
            element: &'a XmlElement,
            path: &str,
            visit: &mut dyn FnMut(&'a XmlElement, &str),
        ) {
            let here = format!("{}/{}", path, element.name);
            visit(element, &here);
            for child in element.child_elements() {
                inner(child, &here, visit);
            }
        }
        inner(self, "", visit);
    }

    /// All descendant elements (self included) with the given name.
    pub fn descendants<'a>(&'a self, name: &str) -> Vec<&'a XmlElement> {
        let mut out = Vec::new();
        self.walk(&mut |e, _| {
            if e.name == name {
                out.push(e);
            }
        });
        out
    }

    pub fn count_descendants(&self, name: &str) -> usize {
        self.descendants(name).len()
    }

    /// The element tree with whitespace-only text nodes removed — the shape
    /// minification preserves.
    pub fn normalized(&self) -> XmlElement {
        XmlElement {
            name: self.name.clone(),
            attributes: self.attributes.clone(),
            children: self
                .children
                .iter()
                .filter_map(|n| match n {
                    XmlNode::Element(e) => Some(XmlNode::Element(e.normalized())),
                    XmlNode::Text(t) if t.trim().is_empty() => None,
                    XmlNode::Text(t) => Some(XmlNode::Text(t.clone())),
                })
                .collect(),
        }
    }
}

/// Parse a document into its root element.
pub fn parse_xml(bytes: &[u8]) -> Result<XmlElement, String> {
    let mut reader = Reader::from_reader(bytes);
    let mut buf = Vec::new();
    let mut stack: Vec<XmlElement> = Vec::new();
    let mut root: Option<XmlElement> = None;

    fn start_to_element(
        e: &quick_xml::events::BytesStart<'_>,
        pos: u64,
    ) -> Result<XmlElement, String> {
        let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
        let mut attributes = Vec::new();
        for attr in e.attributes() {
            let attr = attr.map_err(|err| format!("bad attribute at byte {pos}: {err}"))?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr
                .unescape_value()
                .map_err(|err| format!("bad attribute value at byte {pos}: {err}"))?
                .into_owned();
            attributes.push((key, value));
        }
        Ok(XmlElement {
            name,
            attributes,
            children: Vec::new(),
        })
    }

    loop {
        let pos = reader.buffer_position();
        match reader.read_event_into(&mut buf) {
            Err(e) => return Err(format!("XML error at byte {pos}: {e}")),
            Ok(Event::Eof) => break,
            Ok(Event::Start(e)) => {
                stack.push(start_to_element(&e, pos)?);
            }
            Ok(Event::Empty(e)) => {
                let element = start_to_element(&e, pos)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(XmlNode::Element(element)),
                    None if root.is_none() => root = Some(element),
                    None => return Err("multiple root elements".into()),
                }
            }
            Ok(Event::End(_)) => {
                let element = stack
                    .pop()
                    .ok_or_else(|| format!("unmatched end tag at byte {pos}"))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(XmlNode::Element(element)),
                    None if root.is_none() => root = Some(element),
                    None => return Err("multiple root elements".into()),
                }
            }
            Ok(Event::Text(t)) => {
                let decoded = t
                    .xml10_content()
                    .map_err(|e| format!("bad text at byte {pos}: {e}"))?;
                let text = quick_xml::escape::unescape(&decoded)
                    .map_err(|e| format!("bad entity at byte {pos}: {e}"))?
                    .into_owned();
                if let Some(parent) = stack.last_mut() {
                    parent.children.push(XmlNode::Text(text));
                } else if !text.trim().is_empty() {
                    return Err(format!("text outside the root element at byte {pos}"));
                }
            }
            Ok(Event::CData(t)) => {
                let text = String::from_utf8_lossy(&t).into_owned();
                if let Some(parent) = stack.last_mut() {
                    parent.children.push(XmlNode::Text(text));
                }
            }
            Ok(Event::GeneralRef(r)) => {
                let name = String::from_utf8_lossy(r.as_ref()).into_owned();
                let resolved = match name.as_str() {
                    "amp" => "&".to_string(),
                    "lt" => "<".to_string(),
                    "gt" => ">".to_string(),
                    "quot" => "\"".to_string(),
                    "apos" => "'".to_string(),
                    n => {
                        let code = n
                            .strip_prefix("#x")
                            .and_then(|h| u32::from_str_radix(h, 16).ok())
                            .or_else(|| n.strip_prefix('#').and_then(|d| d.parse().ok()));
                        match code.and_then(char::from_u32) {
                            Some(c) => c.to_string(),
                            None => return Err(format!("unknown entity &{n}; at byte {pos}")),
                        }
                    }
                };
                if let Some(parent) = stack.last_mut() {
                    parent.children.push(XmlNode::Text(resolved));
                }
            }
            Ok(Event::Decl(_)) | Ok(Event::Comment(_)) | Ok(Event::PI(_)) | Ok(Event::DocType(_)) => {}
        }
        buf.clear();
    }
    if !stack.is_empty() {
        return Err(format!("unclosed element <{}>", stack.last().unwrap().name));
    }
    root.ok_or_else(|| "no root element".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_structure() {
        let root = parse_xml(b"<?xml version=\"1.0\"?><a x=\"1\"><b/><b>t</b></a>").unwrap();
        assert_eq!(root.name, "a");
        assert_eq!(root.attr("x"), Some("1"));
        assert_eq!(root.count_descendants("b"), 2);
        assert_eq!(root.child_elements().nth(1).unwrap().text(), "t");
    }

    #[test]
    fn rejects_mismatched_tags() {
        assert!(parse_xml(b"<a><b></a></b>").is_err());
        assert!(parse_xml(b"<a>").is_err());
    }

    #[test]
    fn normalized_drops_whitespace_only_text() {
        let a = parse_xml(b"<a>\n  <b/>\n</a>").unwrap().normalized();
        let b = parse_xml(b"<a><b/></a>").unwrap().normalized();
        assert_eq!(a, b);
        let c = parse_xml(b"<a>x y</a>").unwrap().normalized();
        assert_eq!(c.text(), "x y");
    }
}
