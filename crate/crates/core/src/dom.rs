//! Normalized document tree.
//!
//! A [`DomTree`] holds element, text and image nodes in a flat arena indexed
//! by [`NodeId`]. Ids are dense and assigned in preorder, so the subtree of a
//! node always occupies the contiguous id range `node..subtree_end(node)` and
//! document order is plain integer order. Descendant image/text counts are
//! computed once when the tree is built.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Element,
    Text,
    Image,
}

/// Attribute list in source order. Names are lowercase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Attributes(Vec<(String, String)>);

impl Attributes {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces `name`, keeping the position of the first occurrence.
    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<String>) {
        let name = name.into().to_ascii_lowercase();
        let value = value.into();
        match self.0.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.0.push((name, value)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Attributes {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut attrs = Attributes::new();
        for (k, v) in iter {
            attrs.insert(k, v);
        }
        attrs
    }
}

#[derive(Debug, Clone)]
pub struct DomNode {
    id: NodeId,
    kind: NodeKind,
    tag: Option<Arc<str>>,
    attributes: Attributes,
    text: String,
    children: Vec<NodeId>,
    parent: Option<NodeId>,
}

impl DomNode {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn is_element(&self) -> bool {
        self.kind == NodeKind::Element
    }

    pub fn is_text(&self) -> bool {
        self.kind == NodeKind::Text
    }

    pub fn is_image(&self) -> bool {
        self.kind == NodeKind::Image
    }

    /// Lowercase tag name. `None` for text nodes, `"img"` for images.
    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub(crate) fn tag_arc(&self) -> Option<&Arc<str>> {
        self.tag.as_ref()
    }

    pub fn attributes(&self) -> &Attributes {
        &self.attributes
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes.get(name)
    }

    /// Normalized text of a text node; `None` for other kinds.
    pub fn text(&self) -> Option<&str> {
        self.is_text().then_some(self.text.as_str())
    }

    pub fn children(&self) -> &[NodeId] {
        &self.children
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }
}

/// Number of image and text nodes in a subtree, the node itself included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Counts {
    pub images: usize,
    pub texts: usize,
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, rhs: Counts) -> Counts {
        Counts {
            images: self.images + rhs.images,
            texts: self.texts + rhs.texts,
        }
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        *self = *self + rhs;
    }
}

#[derive(Debug, Clone)]
pub struct DomTree {
    nodes: Vec<DomNode>,
    counts: Vec<Counts>,
    ends: Vec<usize>,
    page_title: String,
    source: String,
}

impl DomTree {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn page_title(&self) -> &str {
        &self.page_title
    }

    pub fn source_identifier(&self) -> &str {
        &self.source
    }

    pub fn get(&self, id: NodeId) -> Option<&DomNode> {
        self.nodes.get(id.0)
    }

    pub fn node(&self, id: NodeId) -> Result<&DomNode> {
        self.get(id).ok_or(Error::UnknownNode(id))
    }

    /// All nodes in document (preorder) order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &DomNode> {
        self.nodes.iter()
    }

    pub fn parent(&self, id: NodeId) -> Result<Option<NodeId>> {
        Ok(self.node(id)?.parent)
    }

    /// Parent, grandparent, ... up to the root. Empty for the root itself.
    pub fn ancestors(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let mut out = Vec::new();
        let mut cur = self.node(id)?.parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p.0].parent;
        }
        Ok(out)
    }

    /// Image and text descendants of `id`, inclusive.
    pub fn subtree_counts(&self, id: NodeId) -> Result<Counts> {
        self.counts.get(id.0).copied().ok_or(Error::UnknownNode(id))
    }

    /// Preorder id range covered by the subtree of `id`.
    pub fn subtree_range(&self, id: NodeId) -> Result<Range<usize>> {
        self.node(id)?;
        Ok(id.0..self.ends[id.0])
    }

    pub fn subtree_nodes(&self, id: NodeId) -> Result<&[DomNode]> {
        let range = self.subtree_range(id)?;
        Ok(&self.nodes[range])
    }

    /// True when `ancestor` is `node` or lies above it.
    pub fn contains(&self, ancestor: NodeId, node: NodeId) -> bool {
        ancestor.0 < self.nodes.len() && ancestor.0 <= node.0 && node.0 < self.ends[ancestor.0]
    }

    pub fn depth(&self, id: NodeId) -> Result<usize> {
        Ok(self.ancestors(id)?.len())
    }

    /// Position of `id` among its parent's children, `None` for the root.
    pub fn child_index(&self, id: NodeId) -> Result<Option<usize>> {
        let Some(parent) = self.node(id)?.parent else {
            return Ok(None);
        };
        Ok(self.nodes[parent.0].children.iter().position(|c| *c == id))
    }

    /// Child indices leading from the root down to `id`.
    pub fn child_index_path(&self, id: NodeId) -> Result<Vec<usize>> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some(idx) = self.child_index(cur)? {
            path.push(idx);
            cur = self.nodes[cur.0].parent.expect("non-root node has a parent");
        }
        path.reverse();
        Ok(path)
    }

    /// Text node strings under `id`, in document order.
    pub fn texts_under(&self, id: NodeId) -> Result<Vec<&str>> {
        Ok(self.subtree_nodes(id)?.iter().filter_map(|n| n.text()).collect())
    }

    pub fn images(&self) -> impl Iterator<Item = &DomNode> {
        self.nodes.iter().filter(|n| n.is_image())
    }

    /// Serializes the tree back to HTML. The title is written into a `head`
    /// element when the root is `html`.
    pub fn to_html(&self) -> String {
        let mut out = String::new();
        // (node, closing)
        let mut stack = vec![(self.root(), false)];
        while let Some((id, closing)) = stack.pop() {
            let node = &self.nodes[id.0];
            match node.kind {
                NodeKind::Text => escape_into(&node.text, false, &mut out),
                NodeKind::Image | NodeKind::Element => {
                    let tag = node.tag().unwrap_or("div");
                    if closing {
                        out.push_str("</");
                        out.push_str(tag);
                        out.push('>');
                        continue;
                    }
                    out.push('<');
                    out.push_str(tag);
                    for (name, value) in node.attributes.iter() {
                        out.push(' ');
                        out.push_str(name);
                        out.push_str("=\"");
                        escape_into(value, true, &mut out);
                        out.push('"');
                    }
                    out.push('>');
                    if id == self.root() && tag == "html" {
                        out.push_str("<head><title>");
                        escape_into(&self.page_title, false, &mut out);
                        out.push_str("</title></head>");
                    }
                    if is_void(tag) {
                        continue;
                    }
                    stack.push((id, true));
                    for child in node.children.iter().rev() {
                        stack.push((*child, false));
                    }
                }
            }
        }
        out
    }
}

fn escape_into(s: &str, attr: bool, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' if !attr => out.push_str("&lt;"),
            '>' if !attr => out.push_str("&gt;"),
            '"' if attr => out.push_str("&quot;"),
            '\u{a0}' => out.push_str("&nbsp;"),
            _ => out.push(c),
        }
    }
}

pub(crate) fn is_void(tag: &str) -> bool {
    matches!(
        tag,
        "area"
            | "base"
            | "br"
            | "col"
            | "embed"
            | "hr"
            | "img"
            | "input"
            | "link"
            | "meta"
            | "param"
            | "source"
            | "track"
            | "wbr"
    )
}

/// Collapses every whitespace run to a single space and trims both ends.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Builds a [`DomTree`] in document order.
///
/// Every call that creates a node appends it under the innermost open
/// element, so ids come out in preorder without a renumbering pass.
#[derive(Debug)]
pub struct TreeBuilder {
    nodes: Vec<DomNode>,
    open: Vec<NodeId>,
}

impl TreeBuilder {
    pub fn new(root_tag: &str, attributes: Attributes) -> Self {
        let root = DomNode {
            id: NodeId(0),
            kind: NodeKind::Element,
            tag: Some(Arc::from(root_tag.to_ascii_lowercase())),
            attributes,
            text: String::new(),
            children: Vec::new(),
            parent: None,
        };
        TreeBuilder {
            nodes: vec![root],
            open: vec![NodeId(0)],
        }
    }

    fn push(&mut self, kind: NodeKind, tag: Option<Arc<str>>, attributes: Attributes, text: String) -> NodeId {
        let id = NodeId(self.nodes.len());
        let parent = *self.open.last().expect("root is never closed");
        self.nodes[parent.0].children.push(id);
        self.nodes.push(DomNode {
            id,
            kind,
            tag,
            attributes,
            text,
            children: Vec::new(),
            parent: Some(parent),
        });
        id
    }

    /// Opens an element; subsequent nodes go inside it until [`close`](Self::close).
    pub fn open(&mut self, tag: &str, attributes: Attributes) -> NodeId {
        let id = self.push(
            NodeKind::Element,
            Some(Arc::from(tag.to_ascii_lowercase())),
            attributes,
            String::new(),
        );
        self.open.push(id);
        id
    }

    /// Adds a childless element such as `br`.
    pub fn empty(&mut self, tag: &str, attributes: Attributes) -> NodeId {
        let id = self.open(tag, attributes);
        self.close();
        id
    }

    /// Closes the innermost open element. The root stays open.
    pub fn close(&mut self) {
        if self.open.len() > 1 {
            self.open.pop();
        }
    }

    pub fn depth(&self) -> usize {
        self.open.len() - 1
    }

    /// Adds a text node with collapsed whitespace. Blank text adds nothing.
    pub fn text(&mut self, text: &str) -> Option<NodeId> {
        let text = collapse_whitespace(text);
        if text.is_empty() {
            return None;
        }
        Some(self.push(NodeKind::Text, None, Attributes::new(), text))
    }

    pub fn image(&mut self, attributes: Attributes) -> NodeId {
        self.push(NodeKind::Image, Some(Arc::from("img")), attributes, String::new())
    }

    pub fn finish(self, page_title: impl Into<String>, source: impl Into<String>) -> DomTree {
        let nodes = self.nodes;
        let n = nodes.len();
        let mut counts = vec![Counts::default(); n];
        let mut ends = vec![0usize; n];
        // Children always carry larger ids than their parent.
        for i in (0..n).rev() {
            let node = &nodes[i];
            let mut c = match node.kind {
                NodeKind::Image => Counts { images: 1, texts: 0 },
                NodeKind::Text => Counts { images: 0, texts: 1 },
                NodeKind::Element => Counts::default(),
            };
            let mut end = i + 1;
            for child in &node.children {
                c += counts[child.0];
                end = end.max(ends[child.0]);
            }
            counts[i] = c;
            ends[i] = end;
        }
        DomTree {
            nodes,
            counts,
            ends,
            page_title: collapse_whitespace(&page_title.into()),
            source: source.into(),
        }
    }
}
