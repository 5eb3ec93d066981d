//! HTML bytes to normalized [`DomTree`].
//!
//! Parsing is delegated to html5ever (through `scraper`), which applies the
//! standard HTML5 error recovery. The walk below then drops comments and
//! stripped subtrees, merges adjacent character data, collapses whitespace
//! and turns `img` elements into image leaves.

use std::collections::BTreeSet;

use ego_tree::iter::Edge;
use encoding_rs::Encoding;
use scraper::{Html, Node};

use crate::dom::{collapse_whitespace, Attributes, DomTree, TreeBuilder};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Text nodes with fewer characters than this (after collapsing) are dropped.
    pub min_text_chars: usize,
    /// Elements removed together with their subtrees.
    pub strip_tags: BTreeSet<String>,
    /// Emit an image's alt text as a text node right after it.
    pub treat_alt_as_text: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            min_text_chars: 1,
            strip_tags: ["script", "style", "noscript", "head"]
                .into_iter()
                .map(String::from)
                .collect(),
            treat_alt_as_text: false,
        }
    }
}

impl IngestOptions {
    pub fn validate(&self) -> Result<()> {
        if self.min_text_chars == 0 {
            return Err(Error::InvalidOptions("min_text_chars must be at least 1".into()));
        }
        for forbidden in ["img", "body"] {
            if self.strip_tags.contains(forbidden) {
                return Err(Error::InvalidOptions(format!("cannot strip <{forbidden}>")));
            }
        }
        Ok(())
    }
}

/// Parses `bytes` into a normalized tree.
pub fn parse_html(bytes: &[u8], source_identifier: &str, options: &IngestOptions) -> Result<DomTree> {
    options.validate()?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(Error::EmptyDocument);
    }
    let text = decode(bytes);
    let document = Html::parse_document(&text);
    Ok(normalize(&document, source_identifier, options))
}

pub fn parse_str(html: &str, source_identifier: &str, options: &IngestOptions) -> Result<DomTree> {
    parse_html(html.as_bytes(), source_identifier, options)
}

fn decode(bytes: &[u8]) -> String {
    let encoding = sniff_charset(bytes).unwrap_or(encoding_rs::UTF_8);
    // decode() honours a BOM over the declared label and replaces bad sequences.
    let (text, _, _) = encoding.decode(bytes);
    text.into_owned()
}

/// Looks for a `charset=` declaration in the first few KiB, as a `<meta>` prescan would.
fn sniff_charset(bytes: &[u8]) -> Option<&'static Encoding> {
    let head = &bytes[..bytes.len().min(4096)];
    let lower = head.to_ascii_lowercase();
    let mut from = 0;
    while let Some(pos) = find(&lower[from..], b"charset") {
        let mut i = from + pos + b"charset".len();
        from = i;
        while i < lower.len() && lower[i].is_ascii_whitespace() {
            i += 1;
        }
        if lower.get(i) != Some(&b'=') {
            continue;
        }
        i += 1;
        while i < lower.len() && matches!(lower[i], b' ' | b'\t' | b'\n' | b'\r' | b'"' | b'\'') {
            i += 1;
        }
        let start = i;
        while i < lower.len() && (lower[i].is_ascii_alphanumeric() || matches!(lower[i], b'-' | b'_' | b'.' | b':')) {
            i += 1;
        }
        if let Some(enc) = Encoding::for_label(&lower[start..i]) {
            // A document that declares UTF-16 in ASCII-compatible bytes is not UTF-16.
            if enc == encoding_rs::UTF_16LE || enc == encoding_rs::UTF_16BE {
                return Some(encoding_rs::UTF_8);
            }
            return Some(enc);
        }
    }
    None
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

fn normalize(document: &Html, source: &str, options: &IngestOptions) -> DomTree {
    let title = document
        .tree
        .root()
        .descendants()
        .find(|n| matches!(n.value(), Node::Element(e) if e.name() == "title"))
        .map(|n| {
            n.descendants()
                .filter_map(|d| d.value().as_text().map(|t| t.to_string()))
                .collect::<String>()
        })
        .unwrap_or_default();

    let root_el = document.root_element();
    let root_value = root_el.value();
    let mut builder = TreeBuilder::new(root_value.name(), collect_attrs(root_value));
    let mut pending = String::new();
    // Depth inside a stripped subtree; 0 means content is kept.
    let mut skipping = 0usize;

    let flush = |builder: &mut TreeBuilder, pending: &mut String| {
        if !pending.is_empty() {
            let collapsed = collapse_whitespace(pending);
            if collapsed.chars().count() >= options.min_text_chars {
                builder.text(&collapsed);
            }
            pending.clear();
        }
    };

    for edge in root_el.traverse().skip(1) {
        match edge {
            Edge::Open(node) => match node.value() {
                Node::Element(el) => {
                    let name = el.name();
                    if skipping > 0 || options.strip_tags.contains(name) {
                        skipping += 1;
                        continue;
                    }
                    flush(&mut builder, &mut pending);
                    if name == "img" {
                        let attrs = collect_attrs(el);
                        let alt = attrs.get("alt").map(str::to_owned);
                        builder.image(attrs);
                        if options.treat_alt_as_text {
                            if let Some(alt) = alt {
                                pending.push_str(&alt);
                                flush(&mut builder, &mut pending);
                            }
                        }
                    } else {
                        builder.open(name, collect_attrs(el));
                    }
                }
                Node::Text(t) if skipping == 0 => pending.push_str(t),
                _ => {}
            },
            Edge::Close(node) => {
                let Node::Element(el) = node.value() else {
                    continue;
                };
                if node.id() == root_el.id() {
                    break;
                }
                if skipping > 0 {
                    skipping -= 1;
                    continue;
                }
                if el.name() == "img" {
                    continue;
                }
                flush(&mut builder, &mut pending);
                builder.close();
            }
        }
    }
    flush(&mut builder, &mut pending);
    builder.finish(title, source)
}

fn collect_attrs(el: &scraper::node::Element) -> Attributes {
    el.attrs().collect()
}
