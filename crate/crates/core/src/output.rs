//! JSON documents written by the command-line tool.

use serde::{Deserialize, Serialize};

use crate::baseline::WindowContext;
use crate::dom::{DomTree, NodeId};
use crate::error::Result;
use crate::eval::Candidate;
use crate::filter::ImageDescriptor;
use crate::segmenter::{ImageClass, ImageSegment, PageSegmentation, SkipReason};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageOutput {
    pub src: String,
    pub alt: String,
    pub filename: String,
    pub width: Option<u32>,
    pub height: Option<u32>,
}

impl From<&ImageDescriptor> for ImageOutput {
    fn from(d: &ImageDescriptor) -> Self {
        ImageOutput {
            src: d.src.clone(),
            alt: d.alt.clone(),
            filename: d.filename.clone(),
            width: d.width_px,
            height: d.height_px,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentOutput {
    pub class: ImageClass,
    pub root_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child_range: Option<(usize, usize)>,
    pub images: Vec<ImageOutput>,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipOutput {
    pub src: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageOutput {
    pub source: String,
    pub title: String,
    pub segments: Vec<SegmentOutput>,
    pub skipped: Vec<SkipOutput>,
}

/// `"0/1/3"`-style child-index path; the root itself is `""`.
pub fn root_path(tree: &DomTree, node: NodeId) -> Result<String> {
    Ok(tree
        .child_index_path(node)?
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("/"))
}

impl SegmentOutput {
    pub fn new(tree: &DomTree, seg: &ImageSegment) -> Result<Self> {
        Ok(SegmentOutput {
            class: seg.class,
            root_path: root_path(tree, seg.root)?,
            child_range: seg.child_range,
            images: seg.images.iter().map(ImageOutput::from).collect(),
            texts: seg.context_texts.clone(),
        })
    }
}

impl PageOutput {
    pub fn new(tree: &DomTree, page: &PageSegmentation) -> Result<Self> {
        Ok(PageOutput {
            source: tree.source_identifier().to_string(),
            title: tree.page_title().to_string(),
            segments: page
                .segments
                .iter()
                .map(|s| SegmentOutput::new(tree, s))
                .collect::<Result<_>>()?,
            skipped: page
                .skipped
                .iter()
                .map(|s| SkipOutput {
                    src: s.src.clone(),
                    reason: s.reason,
                })
                .collect(),
        })
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        self.segments
            .iter()
            .map(|s| Candidate {
                image_srcs: s.images.iter().map(|i| i.src.clone()).collect(),
                text: s.texts.join(" "),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowOutput {
    pub image: ImageOutput,
    pub before: Vec<String>,
    pub after: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPageOutput {
    pub source: String,
    pub title: String,
    /// 0 means unbounded.
    pub n: usize,
    pub windows: Vec<WindowOutput>,
}

impl WindowPageOutput {
    pub fn new(tree: &DomTree, n: Option<usize>, windows: &[WindowContext]) -> Self {
        WindowPageOutput {
            source: tree.source_identifier().to_string(),
            title: tree.page_title().to_string(),
            n: n.unwrap_or(0),
            windows: windows
                .iter()
                .map(|w| WindowOutput {
                    image: ImageOutput::from(&w.image),
                    before: w.before_words.clone(),
                    after: w.after_words.clone(),
                })
                .collect(),
        }
    }
}
