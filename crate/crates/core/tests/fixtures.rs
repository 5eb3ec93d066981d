mod common;

use std::fs;

use common::{fixtures_dir, pages_dir};
use imgseg::baseline::fixed_window_context;
use imgseg::dom::{Attributes, DomTree, NodeKind, TreeBuilder};
use imgseg::eval::{evaluate_corpus, load_ground_truth, EvalConfig, GroundTruthPage};
use imgseg::filter::{collect_valid_images, FilterPolicy, ImageDescriptor};
use imgseg::ingest::{parse_html, parse_str, IngestOptions};
use imgseg::structure::DEFAULT_TOLERANCE;
use imgseg::{segment_page, ImageClass};
use proptest::prelude::*;
use serde::Deserialize;

const PAGES: [&str; 4] = ["composite.html", "unlisted.html", "semilisted.html", "listed.html"];

fn load(name: &str) -> DomTree {
    let bytes = fs::read(pages_dir().join(name)).unwrap();
    parse_html(&bytes, name, &IngestOptions::default()).unwrap()
}

fn truth() -> Vec<GroundTruthPage> {
    load_ground_truth(&fixtures_dir().join("truth.json")).unwrap()
}

#[derive(Deserialize)]
struct Counts {
    elements: usize,
    texts: usize,
    images: usize,
    title: String,
}

#[test]
fn news_article_counts_match_stdlib_parser() {
    let dir = fixtures_dir();
    let want: Counts = serde_json::from_slice(&fs::read(dir.join("news_article.counts.json")).unwrap()).unwrap();
    let bytes = fs::read(dir.join("news_article.html")).unwrap();
    let tree = parse_html(&bytes, "news_article.html", &IngestOptions::default()).unwrap();
    let count = |k: NodeKind| tree.nodes().filter(|n| n.kind() == k).count();
    assert_eq!(count(NodeKind::Element), want.elements);
    assert_eq!(count(NodeKind::Text), want.texts);
    assert_eq!(count(NodeKind::Image), want.images);
    assert_eq!(tree.page_title(), want.title);
    assert_eq!(tree.subtree_counts(tree.root()).unwrap().images, want.images);
    assert_eq!(tree.subtree_counts(tree.root()).unwrap().texts, want.texts);
}

#[test]
fn every_fixture_segment_matches_truth() {
    let truth = truth();
    for name in PAGES {
        let tree = load(name);
        let page = segment_page(&tree, &FilterPolicy::default(), DEFAULT_TOLERANCE);
        let gt = truth.iter().find(|t| t.source_identifier == name).unwrap();
        assert_eq!(page.segments.len(), gt.segments.len(), "{name}");
        for (seg, want) in page.segments.iter().zip(&gt.segments) {
            let srcs: Vec<&str> = seg.images.iter().map(|d| d.src.as_str()).collect();
            assert_eq!(srcs, want.image_srcs, "{name}");
            assert_eq!(seg.context_texts.join(" "), want.context_text, "{name}");
            assert_eq!(Some(seg.class), want.label, "{name}");
        }
    }
}

#[test]
fn semi_listed_fixture_ranges() {
    let tree = load("semilisted.html");
    let page = segment_page(&tree, &FilterPolicy::default(), DEFAULT_TOLERANCE);
    let ranges: Vec<_> = page.segments.iter().map(|s| s.child_range).collect();
    assert_eq!(ranges, vec![Some((0, 4)), Some((4, 8))]);
    assert!(page.segments.iter().all(|s| s.root == page.segments[0].root));
}

#[test]
fn icon_is_skipped_as_invalid() {
    let tree = load("unlisted.html");
    let page = segment_page(&tree, &FilterPolicy::default(), DEFAULT_TOLERANCE);
    assert_eq!(page.skipped.len(), 1);
    assert_eq!(page.skipped[0].src, "icons/home.png");
    assert_eq!(page.segments[0].class, ImageClass::Unlisted);
}

#[test]
fn valid_images_in_document_order() {
    let tree = load("composite.html");
    let imgs = collect_valid_images(&tree, &FilterPolicy::default());
    let files: Vec<&str> = imgs.iter().map(|d| d.filename.as_str()).collect();
    assert_eq!(
        files,
        [
            "lamp.jpg",
            "rug.jpg",
            "vase.jpg",
            "clock.jpg",
            "towel.jpg",
            "pillow.jpg",
            "sheet.jpg",
            "candle.jpg",
            "sofa.png"
        ]
    );
    assert!(imgs.windows(2).all(|w| w[0].node_id < w[1].node_id));
}

#[test]
fn window_around_profile_photo() {
    let tree = load("unlisted.html");
    let id = tree
        .images()
        .find(|n| n.attr("src") == Some("photos/chen.jpg"))
        .unwrap()
        .id();
    let d = ImageDescriptor::of(&tree, id).unwrap();
    let w = fixed_window_context(&tree, &d, Some(3)).unwrap();
    assert_eq!(w.before_words, ["Dr.", "Maria", "Chen"]);
    assert_eq!(w.after_words, ["Senior", "lecturer", "in"]);
    let all = fixed_window_context(&tree, &d, None).unwrap();
    assert_eq!(all.before_words, ["Home", "|", "Research", "Dr.", "Maria", "Chen"]);
    assert_eq!(
        all.after_words,
        [
            "Senior",
            "lecturer",
            "in",
            "computational",
            "linguistics.",
            "Faculty",
            "of",
            "Information",
            "Technology"
        ]
    );
}

#[test]
fn fixture_corpus_scores_perfectly() {
    let truth = truth();
    let pages: Vec<_> = PAGES
        .iter()
        .map(|n| {
            (
                load(n),
                truth.iter().find(|t| t.source_identifier == *n).unwrap().clone(),
            )
        })
        .collect();
    let report = evaluate_corpus(&pages, &EvalConfig::default()).unwrap();
    assert_eq!((report.actual, report.extracted, report.correct), (20, 20, 20));
    assert_eq!((report.precision, report.recall), (1.0, 1.0));
}

#[test]
fn overgrown_truth_segment_costs_one_match() {
    let mut truth = truth();
    let page = truth.iter_mut().find(|t| t.source_identifier == "listed.html").unwrap();
    page.segments[2].context_text.push_str(" Burr coffee grinder $89.00");
    let gt = page.clone();
    let report = evaluate_corpus(&[(load("listed.html"), gt)], &EvalConfig::default()).unwrap();
    assert_eq!((report.actual, report.extracted, report.correct), (8, 8, 7));
    assert_eq!(report.precision, 7.0 / 8.0);
}

// ---- serialization round trip ----

#[derive(Debug, Clone)]
enum Node {
    El(&'static str, Vec<Node>),
    Text(String),
    Img(u32),
}

fn node_strategy() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        "[a-z&<>\"]{1,6}( [a-z]{1,5}){0,2}".prop_map(Node::Text),
        (0u32..1000).prop_map(Node::Img),
    ];
    leaf.prop_recursive(5, 120, 5, |inner| {
        (
            prop::sample::select(vec!["div", "span", "section", "em", "b"]),
            prop::collection::vec(inner, 0..5),
        )
            .prop_map(|(tag, kids)| Node::El(tag, kids))
    })
}

fn emit(node: &Node, b: &mut TreeBuilder, prev_text: &mut bool) {
    match node {
        Node::El(tag, kids) => {
            b.open(tag, Attributes::new());
            let mut inner = false;
            for k in kids {
                emit(k, b, &mut inner);
            }
            b.close();
            *prev_text = false;
        }
        // adjacent text nodes would merge on reparse
        Node::Text(t) if !*prev_text => {
            b.text(t);
            *prev_text = true;
        }
        Node::Text(_) => {}
        Node::Img(i) => {
            b.image([("src", format!("i{i}.png"))].into_iter().collect());
            *prev_text = false;
        }
    }
}

/// (parent, kind, tag or text, src) per node.
type NodeShape = (Option<usize>, NodeKind, Option<String>, Option<String>);

fn shape(tree: &DomTree) -> Vec<NodeShape> {
    tree.nodes()
        .map(|n| {
            let label = n.tag().map(str::to_string).or_else(|| n.text().map(str::to_string));
            (
                n.parent().map(|p| p.0),
                n.kind(),
                label,
                n.attr("src").map(str::to_string),
            )
        })
        .collect()
}

proptest! {
    #[test]
    fn serialized_tree_reparses_to_same_shape(kids in prop::collection::vec(node_strategy(), 1..5)) {
        let mut b = TreeBuilder::new("html", Attributes::new());
        b.open("body", Attributes::new());
        let mut prev = false;
        for k in &kids {
            emit(k, &mut b, &mut prev);
        }
        b.close();
        let tree = b.finish("round trip", "rt.html");
        let html = tree.to_html();
        let back = parse_str(&html, "rt.html", &IngestOptions::default()).unwrap();
        prop_assert_eq!(shape(&back), shape(&tree), "{}", html);
        prop_assert_eq!(back.page_title(), "round trip");
    }
}
