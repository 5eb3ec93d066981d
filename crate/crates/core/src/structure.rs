//! Structural comparisons over subtrees.
//!
//! A subtree's shape is its preorder token sequence (tag names, `TEXT`,
//! `IMG`). Two shapes are similar when their Levenshtein distance divided by
//! the longer length is within a tolerance. On top of that sit the two tests
//! the segmenter needs: whether an image's subtree has look-alike image
//! siblings (listed images), and whether a node's children split into
//! repeating image-plus-text runs (semi-listed images).

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dom::{DomTree, NodeId, NodeKind};
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Element(Arc<str>),
    Text,
    Image,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Element(tag) => f.write_str(tag),
            Token::Text => f.write_str("TEXT"),
            Token::Image => f.write_str("IMG"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ShapeSignature(pub Vec<Token>);

impl ShapeSignature {
    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Token names, e.g. `["td", "IMG", "TEXT"]`.
    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(Token::to_string).collect()
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        ShapeSignature(
            names
                .iter()
                .map(|n| match n.as_ref() {
                    "TEXT" => Token::Text,
                    "IMG" => Token::Image,
                    tag => Token::Element(Arc::from(tag)),
                })
                .collect(),
        )
    }
}

impl fmt::Display for ShapeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("]")
    }
}

/// Child-index ranges `[start, end)` under `parent`, one per repeating unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub parent: NodeId,
    pub ranges: Vec<(usize, usize)>,
}

impl PartitionPlan {
    pub fn range_containing(&self, child_index: usize) -> Option<(usize, usize)> {
        self.ranges
            .iter()
            .copied()
            .find(|(s, e)| *s <= child_index && child_index < *e)
    }
}

pub fn shape_signature(tree: &DomTree, node: NodeId) -> Result<ShapeSignature> {
    Ok(ShapeSignature(
        tree.subtree_nodes(node)?
            .iter()
            .map(|n| match n.kind() {
                NodeKind::Element => Token::Element(n.tag_arc().cloned().unwrap_or_else(|| Arc::from(""))),
                NodeKind::Text => Token::Text,
                NodeKind::Image => Token::Image,
            })
            .collect(),
    ))
}

pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() > b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=a.len()).collect();
    let mut cur = vec![0; a.len() + 1];
    for (j, bj) in b.iter().enumerate() {
        cur[0] = j + 1;
        for (i, ai) in a.iter().enumerate() {
            let sub = prev[i] + usize::from(ai != bj);
            cur[i + 1] = sub.min(prev[i + 1] + 1).min(cur[i] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[a.len()]
}

/// Levenshtein distance if it is at most `limit`, computed on a diagonal band.
pub fn bounded_levenshtein<T: PartialEq>(a: &[T], b: &[T], limit: usize) -> Option<usize> {
    let (a, b) = if a.len() > b.len() { (b, a) } else { (a, b) };
    let (n, m) = (a.len(), b.len());
    if m - n > limit {
        return None;
    }
    if limit >= m {
        let d = levenshtein(a, b);
        return (d <= limit).then_some(d);
    }
    const INF: usize = usize::MAX / 2;
    // Rows run over the shorter sequence `a`, columns over `b`.
    let mut prev = vec![INF; m + 1];
    let mut cur = vec![INF; m + 1];
    for (j, slot) in prev.iter_mut().enumerate().take(limit + 1) {
        *slot = j;
    }
    for i in 1..=n {
        let lo = i.saturating_sub(limit).max(1);
        let hi = (i + limit).min(m);
        cur[lo - 1] = if lo == 1 { i } else { INF };
        let mut row_min = cur[lo - 1];
        for j in lo..=hi {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let v = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if hi < m {
            cur[hi + 1] = INF;
        }
        if row_min > limit {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[m];
    (d <= limit).then_some(d)
}

/// Edit distance over the longer length; 0 for two empty signatures.
pub fn normalized_distance(a: &ShapeSignature, b: &ShapeSignature) -> f64 {
    let max = a.len().max(b.len());
    if max == 0 {
        return 0.0;
    }
    levenshtein(&a.0, &b.0) as f64 / max as f64
}

/// Largest edit count `d` with `d / max_len <= tolerance`.
fn edit_budget(max_len: usize, tolerance: f64) -> usize {
    let len = max_len as f64;
    let mut k = (tolerance * len).floor().max(0.0) as usize;
    while k > 0 && k as f64 / len > tolerance {
        k -= 1;
    }
    while k < max_len && (k + 1) as f64 / len <= tolerance {
        k += 1;
    }
    k.min(max_len)
}

fn tokens_similar(a: &[Token], b: &[Token], tolerance: f64) -> bool {
    let max = a.len().max(b.len());
    if max == 0 {
        return true;
    }
    bounded_levenshtein(a, b, edit_budget(max, tolerance)).is_some()
}

pub fn signatures_similar(a: &ShapeSignature, b: &ShapeSignature, tolerance: f64) -> bool {
    tokens_similar(&a.0, &b.0, tolerance)
}

pub fn is_listed_context(tree: &DomTree, parent: NodeId, child: NodeId, tolerance: f64) -> Result<bool> {
    Analyzer::new(tree).is_listed_context(parent, child, tolerance)
}

pub fn find_semi_listed_partition(tree: &DomTree, node: NodeId) -> Result<Option<PartitionPlan>> {
    Analyzer::new(tree).find_semi_listed_partition(node, DEFAULT_TOLERANCE)
}

pub fn find_semi_listed_partition_with(tree: &DomTree, node: NodeId, tolerance: f64) -> Result<Option<PartitionPlan>> {
    Analyzer::new(tree).find_semi_listed_partition(node, tolerance)
}

/// Structural queries with per-node signature caching.
#[derive(Debug)]
pub struct Analyzer<'t> {
    tree: &'t DomTree,
    signatures: HashMap<NodeId, Arc<ShapeSignature>>,
}

impl<'t> Analyzer<'t> {
    pub fn new(tree: &'t DomTree) -> Self {
        Analyzer {
            tree,
            signatures: HashMap::new(),
        }
    }

    pub fn tree(&self) -> &'t DomTree {
        self.tree
    }

    pub fn signature(&mut self, node: NodeId) -> Result<Arc<ShapeSignature>> {
        if let Some(sig) = self.signatures.get(&node) {
            return Ok(sig.clone());
        }
        let sig = Arc::new(shape_signature(self.tree, node)?);
        self.signatures.insert(node, sig.clone());
        Ok(sig)
    }

    pub fn is_listed_context(&mut self, parent: NodeId, child: NodeId, tolerance: f64) -> Result<bool> {
        let tree = self.tree;
        let parent_node = tree.node(parent)?;
        tree.node(child)?;
        if !parent_node.children().contains(&child) {
            return Err(Error::NotAChild { parent, child });
        }
        let own = self.signature(child)?;
        for &sibling in parent_node.children() {
            if sibling == child || tree.subtree_counts(sibling)?.images == 0 {
                continue;
            }
            let other = self.signature(sibling)?;
            if signatures_similar(&own, &other, tolerance) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn range_tokens(&mut self, children: &[NodeId], (start, end): (usize, usize)) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        for &c in &children[start..end] {
            out.extend(self.signature(c)?.0.iter().cloned());
        }
        Ok(out)
    }

    pub fn find_semi_listed_partition(&mut self, node: NodeId, tolerance: f64) -> Result<Option<PartitionPlan>> {
        let tree = self.tree;
        let n = tree.node(node)?;
        if !n.is_element() {
            return Err(Error::Contract(format!("node {node} is not an element")));
        }
        if tree.subtree_counts(node)?.images < 2 {
            return Err(Error::Contract(format!("node {node} holds fewer than two images")));
        }
        let children = n.children();
        let mut anchors = Vec::new();
        for (i, c) in children.iter().enumerate() {
            if tree.subtree_counts(*c)?.images > 0 {
                anchors.push(i);
            }
        }
        if anchors.len() < 2 {
            return Ok(None);
        }

        let min_gap = anchors.windows(2).map(|w| w[1] - w[0]).min().unwrap_or(1);
        let max_offset = anchors[0].min(min_gap - 1);
        let ranges_at = |offset: usize| -> Vec<(usize, usize)> {
            let starts: Vec<usize> = anchors.iter().map(|a| a - offset).collect();
            starts
                .iter()
                .enumerate()
                .map(|(j, &s)| (s, starts.get(j + 1).copied().unwrap_or(children.len())))
                .collect()
        };

        // Units start `offset` children before each anchor; pick the offset whose
        // consecutive units differ least, preferring the earliest first start.
        type Candidate = (usize, Vec<Vec<Token>>, Vec<(usize, usize)>);
        let mut best: Option<Candidate> = None;
        for offset in (0..=max_offset).rev() {
            let ranges = ranges_at(offset);
            let tokens = ranges
                .iter()
                .map(|r| self.range_tokens(children, *r))
                .collect::<Result<Vec<_>>>()?;
            let score = if max_offset == 0 {
                0
            } else {
                tokens.windows(2).map(|w| levenshtein(&w[0], &w[1])).sum()
            };
            if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
                best = Some((score, tokens, ranges));
            }
        }
        let (_, tokens, ranges) = best.expect("offset 0 is always tried");

        for &(s, e) in &ranges {
            let mut texts = 0;
            for c in &children[s..e] {
                texts += tree.subtree_counts(*c)?.texts;
            }
            if texts == 0 {
                return Ok(None);
            }
        }
        for i in 0..tokens.len() {
            for j in i + 1..tokens.len() {
                if !tokens_similar(&tokens[i], &tokens[j], tolerance) {
                    return Ok(None);
                }
            }
        }
        Ok(Some(PartitionPlan { parent: node, ranges }))
    }
}
