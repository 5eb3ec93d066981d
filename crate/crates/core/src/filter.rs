//! Valid-image selection by declared size.
//!
//! Two bands qualify an image:
//!
//! * large: both sides at least `large_min_px` with aspect ratio inside
//!   `[1/wide_ratio_max, wide_ratio_max]`;
//! * small: a uniformly scaled-down copy of the image fits inside
//!   `[small_min_px, large_min_px)` on both sides with aspect ratio inside
//!   `[1/square_ratio_max, square_ratio_max]`. For images already inside the
//!   box this is the plain box test; for images with one side past
//!   `large_min_px` it keeps validity monotone under uniform enlargement.
//!
//! Width and height come from the `width`/`height` attributes only.

use serde::{Deserialize, Serialize};

use crate::dom::{DomNode, DomTree, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDescriptor {
    pub node_id: NodeId,
    pub src: String,
    pub filename: String,
    pub alt: String,
    pub width_px: Option<u32>,
    pub height_px: Option<u32>,
}

impl ImageDescriptor {
    pub fn from_node(node: &DomNode) -> Result<Self> {
        if !node.is_image() {
            return Err(Error::NotAnImage(node.id()));
        }
        let src = node.attr("src").unwrap_or_default().trim().to_string();
        Ok(ImageDescriptor {
            node_id: node.id(),
            filename: filename_of(&src),
            alt: node
                .attr("alt")
                .map(crate::dom::collapse_whitespace)
                .unwrap_or_default(),
            width_px: node.attr("width").and_then(parse_pixels),
            height_px: node.attr("height").and_then(parse_pixels),
            src,
        })
    }

    pub fn of(tree: &DomTree, id: NodeId) -> Result<Self> {
        Self::from_node(tree.node(id)?)
    }

    /// Builds a descriptor without a backing node, mostly for filter checks.
    pub fn with_dims(width_px: Option<u32>, height_px: Option<u32>) -> Self {
        ImageDescriptor {
            node_id: NodeId(0),
            src: String::new(),
            filename: String::new(),
            alt: String::new(),
            width_px,
            height_px,
        }
    }
}

/// Last path component of `src`, without query string or fragment.
pub fn filename_of(src: &str) -> String {
    let end = src.find(['?', '#']).unwrap_or(src.len());
    let path = &src[..end];
    path.rsplit(['/', '\\']).next().unwrap_or_default().to_string()
}

/// Accepts `"120"` and `"120px"`; anything else (percentages, `auto`, ...) is unknown.
pub fn parse_pixels(raw: &str) -> Option<u32> {
    let s = raw.trim();
    let digits = s.strip_suffix("px").unwrap_or(s).trim_end();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub large_min_px: u32,
    pub small_min_px: u32,
    /// Upper aspect bound of the large band; the lower bound is its reciprocal.
    pub wide_ratio_max: f64,
    /// Upper aspect bound of the small band; the lower bound is its reciprocal.
    pub square_ratio_max: f64,
    pub unknown_dims_valid: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            large_min_px: 60,
            small_min_px: 45,
            wide_ratio_max: 5.0,
            square_ratio_max: 2.0,
            unknown_dims_valid: true,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.small_min_px >= self.large_min_px {
            return Err(Error::InvalidOptions(format!(
                "small_min_px ({}) must be below large_min_px ({})",
                self.small_min_px, self.large_min_px
            )));
        }
        if !(self.wide_ratio_max >= 1.0 && self.square_ratio_max >= 1.0) {
            return Err(Error::InvalidOptions("ratio bounds must be at least 1".into()));
        }
        Ok(())
    }

    pub fn wide_ratio_bounds(&self) -> (f64, f64) {
        (1.0 / self.wide_ratio_max, self.wide_ratio_max)
    }

    pub fn square_ratio_bounds(&self) -> (f64, f64) {
        (1.0 / self.square_ratio_max, self.square_ratio_max)
    }
}

pub fn is_valid_image(desc: &ImageDescriptor, policy: &FilterPolicy) -> bool {
    let (Some(w), Some(h)) = (desc.width_px, desc.height_px) else {
        return policy.unknown_dims_valid;
    };
    let (lo, hi) = (w.min(h) as f64, w.max(h) as f64);
    let large = policy.large_min_px as f64;
    let small = policy.small_min_px as f64;

    if lo >= large && hi <= policy.wide_ratio_max * lo {
        return true;
    }
    // Some scale t <= 1 has t*lo >= small and t*hi < large.
    lo >= small && small * hi < large * lo && hi <= policy.square_ratio_max * lo
}

/// Valid images in document order.
pub fn collect_valid_images(tree: &DomTree, policy: &FilterPolicy) -> Vec<ImageDescriptor> {
    partition_images(tree, policy).0
}

/// Splits the page's images into (valid, rejected), both in document order.
pub fn partition_images(tree: &DomTree, policy: &FilterPolicy) -> (Vec<ImageDescriptor>, Vec<ImageDescriptor>) {
    tree.images()
        .map(|n| ImageDescriptor::from_node(n).expect("images() yields image nodes"))
        .partition(|d| is_valid_image(d, policy))
}
