//! Per-image segmentation by upward traversal.
//!
//! Starting at an image, the walk climbs the tree and watches the number of
//! text nodes under each ancestor. An ancestor that holds at least one image
//! and one text node, and whose text count differs from the last recorded
//! one, is a *change*.
//!
//! * At the first change the ancestor is tested for semi-listed structure;
//!   if its children split into repeating units, the unit holding the image
//!   is the segment. Otherwise the text count is recorded and the walk goes on.
//! * At the second change the child on the path is compared with its
//!   siblings. Look-alike image-bearing siblings mean a listed image, whose
//!   segment is the first-change node (the smaller section). Otherwise the
//!   image is unlisted and the segment is the second-change node.
//! * Reaching the root after one change yields an unlisted segment at the
//!   first-change node; no change at all yields nothing.
//!
//! Counts come from the tree's precomputed table, so a walk costs one lookup
//! per ancestor plus whatever structural checks the changes trigger.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dom::{DomTree, NodeId};
use crate::error::{Error, Result};
use crate::filter::{partition_images, FilterPolicy, ImageDescriptor};
use crate::structure::{Analyzer, PartitionPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageClass {
    Unlisted,
    Listed,
    SemiListed,
}

impl ImageClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ImageClass::Unlisted => "unlisted",
            ImageClass::Listed => "listed",
            ImageClass::SemiListed => "semi-listed",
        }
    }
}

impl std::fmt::Display for ImageClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSegment {
    pub root: NodeId,
    /// Child-index range under `root`; only semi-listed segments carry one.
    pub child_range: Option<(usize, usize)>,
    pub images: Vec<ImageDescriptor>,
    pub class: ImageClass,
    pub context_texts: Vec<String>,
    pub page_title: String,
}

/// Loop variables of one walk, as they stand when it stops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraversalState {
    pub state_img: usize,
    pub state_text: usize,
    pub state: usize,
    pub state_changed_twice: bool,
    pub child: NodeId,
    pub parent: Option<NodeId>,
    pub first_change_node: Option<NodeId>,
}

/// Where the walk for one image ended up.
/// `(root, child_range, class)` of a chosen segment.
pub type Decision = (NodeId, Option<(usize, usize)>, ImageClass);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkOutcome {
    pub first_change: Option<NodeId>,
    pub second_change: Option<NodeId>,
    pub decision: Option<Decision>,
    pub final_state: TraversalState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoTextContext,
    FilteredInvalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedImage {
    pub node_id: NodeId,
    pub src: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PageSegmentation {
    pub segments: Vec<ImageSegment>,
    pub skipped: Vec<SkippedImage>,
}

/// Runs walks over one tree, sharing structural caches between images.
#[derive(Debug)]
pub struct Segmenter<'t> {
    tree: &'t DomTree,
    tolerance: f64,
    analyzer: Analyzer<'t>,
    listed: HashMap<(NodeId, NodeId), bool>,
    semi: HashMap<NodeId, Option<PartitionPlan>>,
}

impl<'t> Segmenter<'t> {
    pub fn new(tree: &'t DomTree, tolerance: f64) -> Self {
        Segmenter {
            tree,
            tolerance,
            analyzer: Analyzer::new(tree),
            listed: HashMap::new(),
            semi: HashMap::new(),
        }
    }

    fn listed(&mut self, parent: NodeId, child: NodeId) -> Result<bool> {
        if let Some(v) = self.listed.get(&(parent, child)) {
            return Ok(*v);
        }
        let v = self.analyzer.is_listed_context(parent, child, self.tolerance)?;
        self.listed.insert((parent, child), v);
        Ok(v)
    }

    fn semi_plan(&mut self, node: NodeId) -> Result<Option<PartitionPlan>> {
        if let Some(plan) = self.semi.get(&node) {
            return Ok(plan.clone());
        }
        let plan = if self.tree.subtree_counts(node)?.images >= 2 {
            self.analyzer.find_semi_listed_partition(node, self.tolerance)?
        } else {
            None
        };
        self.semi.insert(node, plan.clone());
        Ok(plan)
    }

    pub fn walk(&mut self, image: NodeId) -> Result<WalkOutcome> {
        let tree = self.tree;
        if !tree.node(image)?.is_image() {
            return Err(Error::NotAnImage(image));
        }
        let mut st = TraversalState {
            state_img: 1,
            state_text: 0,
            state: 0,
            state_changed_twice: false,
            child: image,
            parent: tree.parent(image)?,
            first_change_node: None,
        };
        let mut second_change = None;
        let mut decision = None;

        while let Some(parent) = st.parent {
            let counts = tree.subtree_counts(parent)?;
            st.state_img = counts.images;
            st.state_text = counts.texts;
            if st.state_text != st.state && st.state_img > 0 && st.state_text > 0 {
                if st.state_changed_twice {
                    second_change = Some(parent);
                    let first = st.first_change_node.expect("set with state_changed_twice");
                    decision = Some(if self.listed(parent, st.child)? {
                        (first, None, ImageClass::Listed)
                    } else {
                        (parent, None, ImageClass::Unlisted)
                    });
                    break;
                }
                st.first_change_node = Some(parent);
                if let Some(plan) = self.semi_plan(parent)? {
                    let idx = tree.child_index(st.child)?.expect("child sits under parent");
                    let range = plan
                        .range_containing(idx)
                        .ok_or_else(|| Error::Contract(format!("image {image} outside partition of {parent}")))?;
                    decision = Some((parent, Some(range), ImageClass::SemiListed));
                    break;
                }
                st.state = st.state_text;
                st.state_changed_twice = true;
            }
            st.child = parent;
            st.parent = tree.parent(parent)?;
        }

        if decision.is_none() {
            decision = st.first_change_node.map(|f| (f, None, ImageClass::Unlisted));
        }
        Ok(WalkOutcome {
            first_change: st.first_change_node,
            second_change,
            decision,
            final_state: st,
        })
    }

    pub fn find_segment(&mut self, image: &ImageDescriptor) -> Result<Option<ImageSegment>> {
        let outcome = self.walk(image.node_id)?;
        let Some((root, child_range, class)) = outcome.decision else {
            return Ok(None);
        };
        Ok(Some(ImageSegment {
            root,
            child_range,
            images: vec![image.clone()],
            class,
            context_texts: segment_texts(self.tree, root, child_range)?,
            page_title: self.tree.page_title().to_string(),
        }))
    }
}

/// Text strings under `root`, limited to `child_range` when given.
pub fn segment_texts(tree: &DomTree, root: NodeId, child_range: Option<(usize, usize)>) -> Result<Vec<String>> {
    let Some((start, end)) = child_range else {
        return Ok(tree.texts_under(root)?.into_iter().map(String::from).collect());
    };
    let children = tree.node(root)?.children();
    if start >= end || end > children.len() {
        return Err(Error::Contract(format!("bad child range {start}..{end} under {root}")));
    }
    let mut out = Vec::new();
    for &c in &children[start..end] {
        out.extend(tree.texts_under(c)?.into_iter().map(String::from));
    }
    Ok(out)
}

pub fn find_segment(tree: &DomTree, image: &ImageDescriptor, tolerance: f64) -> Result<Option<ImageSegment>> {
    Segmenter::new(tree, tolerance).find_segment(image)
}

/// Segments every valid image on the page.
///
/// Segments that land on the same `(root, child_range)` are merged. Output is
/// ordered by root in document order, then by range start.
pub fn segment_page(tree: &DomTree, policy: &FilterPolicy, tolerance: f64) -> PageSegmentation {
    let (valid, rejected) = partition_images(tree, policy);
    let mut segmenter = Segmenter::new(tree, tolerance);
    let mut merged: BTreeMap<(NodeId, Option<(usize, usize)>), ImageSegment> = BTreeMap::new();
    let mut skipped: Vec<SkippedImage> = rejected
        .into_iter()
        .map(|d| SkippedImage {
            node_id: d.node_id,
            src: d.src,
            reason: SkipReason::FilteredInvalid,
        })
        .collect();

    for desc in &valid {
        let found = segmenter
            .find_segment(desc)
            .expect("descriptors from the tree point at image nodes");
        match found {
            Some(seg) => {
                merged
                    .entry((seg.root, seg.child_range))
                    .and_modify(|existing| existing.images.push(desc.clone()))
                    .or_insert(seg);
            }
            None => skipped.push(SkippedImage {
                node_id: desc.node_id,
                src: desc.src.clone(),
                reason: SkipReason::NoTextContext,
            }),
        }
    }
    skipped.sort_by_key(|s| s.node_id);
    PageSegmentation {
        segments: merged.into_values().collect(),
        skipped,
    }
}
