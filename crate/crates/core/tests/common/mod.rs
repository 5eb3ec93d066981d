#![allow(dead_code)]

//! Shared test support: random synthetic trees and a brute-force segmenter.
//!
//! The oracle below only reads raw node data (kind, tag, children, parent).
//! It recounts descendants recursively at every ancestor, builds shape
//! signatures recursively, uses a full-matrix edit distance, and applies the
//! traversal rules as plain state-variable updates.

use std::path::PathBuf;

use imgseg::dom::{Attributes, DomTree, NodeId, NodeKind, TreeBuilder};
use imgseg::segmenter::Decision;
use imgseg::ImageClass;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn pages_dir() -> PathBuf {
    fixtures_dir().join("pages")
}

#[derive(Debug, Clone)]
pub enum Shape {
    El(&'static str, Vec<Shape>),
    Text,
    Img,
}

impl Shape {
    pub fn size(&self) -> usize {
        match self {
            Shape::El(_, kids) => 1 + kids.iter().map(Shape::size).sum::<usize>(),
            _ => 1,
        }
    }

    fn emit(&self, b: &mut TreeBuilder, counter: &mut usize) {
        match self {
            Shape::El(tag, kids) => {
                b.open(tag, Attributes::new());
                for k in kids {
                    k.emit(b, counter);
                }
                b.close();
            }
            Shape::Text => {
                *counter += 1;
                b.text(&format!("text {counter}"));
            }
            Shape::Img => {
                *counter += 1;
                b.image([("src", format!("img{counter}.jpg"))].into_iter().collect());
            }
        }
    }
}

const TAGS: [&str; 8] = ["div", "td", "tr", "p", "a", "span", "table", "br"];

fn gen(rng: &mut StdRng, depth: usize, budget: &mut usize) -> Shape {
    if *budget == 0 {
        return Shape::Text;
    }
    *budget -= 1;
    let leaf_p = if depth >= 6 { 0.8 } else { 0.35 };
    if rng.random_bool(leaf_p) {
        return if rng.random_bool(0.45) { Shape::Img } else { Shape::Text };
    }
    let tag = TAGS[rng.random_range(0..TAGS.len())];
    let mut kids = Vec::new();
    if rng.random_bool(0.3) && *budget > 6 {
        // repeated unit, occasionally perturbed, to produce listed / semi-listed shapes
        let unit_len = rng.random_range(1..=4);
        let unit: Vec<Shape> = (0..unit_len).map(|_| gen(rng, depth + 1, budget)).collect();
        let reps = rng.random_range(2..=4);
        for _ in 0..reps {
            let unit_size: usize = unit.iter().map(Shape::size).sum();
            if unit_size > *budget {
                break;
            }
            *budget -= unit_size;
            let mut copy = unit.clone();
            if rng.random_bool(0.2) {
                copy.push(Shape::Text);
            }
            kids.extend(copy);
        }
    } else {
        let n = rng.random_range(0..=5);
        for _ in 0..n {
            kids.push(gen(rng, depth + 1, budget));
        }
    }
    Shape::El(tag, kids)
}

/// A random tree of at most `max_nodes` nodes, rooted at `body`.
pub fn random_tree(seed: u64, max_nodes: usize) -> DomTree {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut budget = max_nodes.saturating_sub(1);
    let mut kids = Vec::new();
    let n = rng.random_range(1..=4);
    for _ in 0..n {
        kids.push(gen(&mut rng, 1, &mut budget));
    }
    let mut b = TreeBuilder::new("body", Attributes::new());
    let mut counter = 0;
    for k in &kids {
        k.emit(&mut b, &mut counter);
    }
    let tree = b.finish("random", format!("random-{seed}.html"));
    assert!(tree.len() <= max_nodes, "generator overshot: {}", tree.len());
    tree
}

// ---- brute-force oracle ----

fn naive_counts(tree: &DomTree, n: NodeId) -> (usize, usize) {
    let node = tree.get(n).unwrap();
    match node.kind() {
        NodeKind::Image => (1, 0),
        NodeKind::Text => (0, 1),
        NodeKind::Element => node.children().iter().fold((0, 0), |(i, t), c| {
            let (ci, ct) = naive_counts(tree, *c);
            (i + ci, t + ct)
        }),
    }
}

fn naive_signature(tree: &DomTree, n: NodeId, out: &mut Vec<String>) {
    let node = tree.get(n).unwrap();
    out.push(match node.kind() {
        NodeKind::Element => node.tag().unwrap().to_string(),
        NodeKind::Text => "TEXT".into(),
        NodeKind::Image => "IMG".into(),
    });
    for c in node.children() {
        naive_signature(tree, *c, out);
    }
}

pub fn naive_edit_distance(a: &[String], b: &[String]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

fn similar(a: &[String], b: &[String], tol: f64) -> bool {
    let max = a.len().max(b.len());
    max == 0 || naive_edit_distance(a, b) as f64 / max as f64 <= tol
}

fn sig_of(tree: &DomTree, n: NodeId) -> Vec<String> {
    let mut v = Vec::new();
    naive_signature(tree, n, &mut v);
    v
}

fn oracle_listed(tree: &DomTree, parent: NodeId, child: NodeId, tol: f64) -> bool {
    let own = sig_of(tree, child);
    tree.get(parent)
        .unwrap()
        .children()
        .iter()
        .any(|&s| s != child && naive_counts(tree, s).0 > 0 && similar(&own, &sig_of(tree, s), tol))
}

fn oracle_semi(tree: &DomTree, node: NodeId, tol: f64) -> Option<Vec<(usize, usize)>> {
    let children = tree.get(node).unwrap().children().to_vec();
    let anchors: Vec<usize> = (0..children.len())
        .filter(|&i| naive_counts(tree, children[i]).0 > 0)
        .collect();
    if anchors.len() < 2 {
        return None;
    }
    let range_sig =
        |(s, e): (usize, usize)| -> Vec<String> { children[s..e].iter().flat_map(|c| sig_of(tree, *c)).collect() };
    // every offset that keeps each unit's start after the previous anchor
    let mut candidates = Vec::new();
    for o in 0..=anchors[0] {
        if anchors.windows(2).any(|w| w[1] - o <= w[0]) {
            continue;
        }
        let starts: Vec<usize> = anchors.iter().map(|a| a - o).collect();
        let ranges: Vec<(usize, usize)> = (0..starts.len())
            .map(|j| {
                (
                    starts[j],
                    if j + 1 < starts.len() {
                        starts[j + 1]
                    } else {
                        children.len()
                    },
                )
            })
            .collect();
        let sigs: Vec<Vec<String>> = ranges.iter().map(|r| range_sig(*r)).collect();
        let score: usize = (0..sigs.len() - 1)
            .map(|j| naive_edit_distance(&sigs[j], &sigs[j + 1]))
            .sum();
        candidates.push((score, starts[0], ranges, sigs));
    }
    // lowest score; on ties the earliest first start
    let (_, _, ranges, sigs) = candidates
        .into_iter()
        .min_by_key(|(score, s1, _, _)| (*score, *s1))
        .unwrap();
    for (s, e) in &ranges {
        if children[*s..*e].iter().map(|c| naive_counts(tree, *c).1).sum::<usize>() == 0 {
            return None;
        }
    }
    for i in 0..sigs.len() {
        for j in i + 1..sigs.len() {
            if !similar(&sigs[i], &sigs[j], tol) {
                return None;
            }
        }
    }
    Some(ranges)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub decision: Option<Decision>,
    pub first_change: Option<NodeId>,
    pub second_change: Option<NodeId>,
}

/// Runs the upward walk for one image with recomputed counts at each level.
pub fn oracle_segment(tree: &DomTree, image: NodeId, tol: f64) -> OracleResult {
    let mut child = image;
    let mut parent = tree.get(image).unwrap().parent();
    let mut state = 0usize;
    let mut state_change_twice = false;
    let mut first_change: Option<NodeId> = None;
    while let Some(p) = parent {
        let (state_img, state_text) = naive_counts(tree, p);
        if state_text != state && state_img > 0 && state_text > 0 {
            if state_change_twice {
                let decision = if oracle_listed(tree, p, child, tol) {
                    (first_change.unwrap(), None, ImageClass::Listed)
                } else {
                    (p, None, ImageClass::Unlisted)
                };
                return OracleResult {
                    decision: Some(decision),
                    first_change,
                    second_change: Some(p),
                };
            }
            first_change = Some(p);
            if state_img >= 2 {
                if let Some(ranges) = oracle_semi(tree, p, tol) {
                    let idx = tree
                        .get(p)
                        .unwrap()
                        .children()
                        .iter()
                        .position(|c| *c == child)
                        .unwrap();
                    let range = ranges.into_iter().find(|(s, e)| *s <= idx && idx < *e).unwrap();
                    return OracleResult {
                        decision: Some((p, Some(range), ImageClass::SemiListed)),
                        first_change,
                        second_change: None,
                    };
                }
            }
            state = state_text;
            state_change_twice = true;
        }
        child = p;
        parent = tree.get(p).unwrap().parent();
    }
    OracleResult {
        decision: first_change.map(|f| (f, None, ImageClass::Unlisted)),
        first_change,
        second_change: None,
    }
}
