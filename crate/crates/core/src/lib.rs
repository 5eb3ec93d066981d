//! Webpage segmentation for image context extraction.
//!
//! Pages are parsed into a normalized DOM ([`dom`], [`ingest`]), images are
//! screened by declared size ([`filter`]), and each valid image is placed in
//! a segment by walking up the tree and watching how the number of text
//! nodes changes ([`segmenter`], with sibling and repeating-unit checks from
//! [`structure`]). [`baseline`] provides the fixed word window for
//! comparison and [`eval`] scores either against hand-labelled ground truth.
//!
//! ```
//! use imgseg::{filter::FilterPolicy, ingest, segmenter};
//!
//! let html = r#"<body><div><h2>Our founder</h2>
//!   <div><img src="jane.jpg" width="120" height="160"><p>Jane started the shop in 1998.</p></div>
//! </div><div>Contact us</div></body>"#;
//! let tree = ingest::parse_str(html, "about.html", &Default::default()).unwrap();
//! let page = segmenter::segment_page(&tree, &FilterPolicy::default(), 0.2);
//! assert_eq!(page.segments.len(), 1);
//! assert_eq!(page.segments[0].context_texts, ["Our founder", "Jane started the shop in 1998."]);
//! ```

pub mod baseline;
pub mod cli;
pub mod dom;
pub mod error;
pub mod eval;
pub mod filter;
pub mod ingest;
pub mod output;
pub mod segmenter;
pub mod structure;

pub use dom::{Counts, DomNode, DomTree, NodeId, NodeKind, TreeBuilder};
pub use error::{Error, Result};
pub use filter::{FilterPolicy, ImageDescriptor};
pub use segmenter::{segment_page, ImageClass, ImageSegment, PageSegmentation};
