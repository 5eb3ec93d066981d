//! Fixed-window context: the `n` words before and after an image in the
//! page's reading order.

use serde::{Deserialize, Serialize};

use crate::dom::DomTree;
use crate::error::{Error, Result};
use crate::filter::ImageDescriptor;

pub const DEFAULT_WINDOW: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowContext {
    pub image: ImageDescriptor,
    pub before_words: Vec<String>,
    pub after_words: Vec<String>,
    /// Window size; `None` takes every word on the page.
    pub n: Option<usize>,
}

impl WindowContext {
    /// Before and after words joined by single spaces.
    pub fn text(&self) -> String {
        self.before_words
            .iter()
            .chain(self.after_words.iter())
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// `n = None` means unbounded. `Some(0)` is rejected.
pub fn fixed_window_context(tree: &DomTree, image: &ImageDescriptor, n: Option<usize>) -> Result<WindowContext> {
    if n == Some(0) {
        return Err(Error::InvalidOptions("window size must be positive".into()));
    }
    if !tree.node(image.node_id)?.is_image() {
        return Err(Error::NotAnImage(image.node_id));
    }
    let mut before: Vec<&str> = Vec::new();
    let mut after: Vec<&str> = Vec::new();
    for node in tree.nodes() {
        let Some(text) = node.text() else { continue };
        let words = text.split_whitespace();
        // Leaves are numbered in reading order, so id order is word order.
        if node.id() < image.node_id {
            before.extend(words);
        } else if n.is_none_or(|n| after.len() < n) {
            after.extend(words);
        }
    }
    if let Some(n) = n {
        let skip = before.len().saturating_sub(n);
        before.drain(..skip);
        after.truncate(n);
    }
    Ok(WindowContext {
        image: image.clone(),
        before_words: before.into_iter().map(String::from).collect(),
        after_words: after.into_iter().map(String::from).collect(),
        n,
    })
}

/// Window contexts for a list of images.
pub fn window_contexts(tree: &DomTree, images: &[ImageDescriptor], n: Option<usize>) -> Result<Vec<WindowContext>> {
    images.iter().map(|d| fixed_window_context(tree, d, n)).collect()
}
