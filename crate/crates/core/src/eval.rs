//! Ground truth, segment matching and precision/recall.
//!
//! A segment counts as correct when it shares at least one image source with
//! an expected segment and its text matches that segment's text. Exact mode
//! requires the same text after whitespace collapsing and lowercasing, so a
//! segment that grabs more (or less) text than expected is a miss. Jaccard
//! mode relaxes this to word-set overlap.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{window_contexts, WindowContext};
use crate::dom::{collapse_whitespace, DomTree};
use crate::error::{Error, Result};
use crate::filter::{collect_valid_images, FilterPolicy};
use crate::segmenter::{segment_page, ImageClass, ImageSegment};
use crate::structure::DEFAULT_TOLERANCE;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthSegment {
    #[serde(rename = "images")]
    pub image_srcs: Vec<String>,
    #[serde(rename = "text")]
    pub context_text: String,
    #[serde(default)]
    pub label: Option<ImageClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthPage {
    #[serde(rename = "source")]
    pub source_identifier: String,
    pub segments: Vec<TruthSegment>,
}

impl GroundTruthPage {
    pub fn validate(&self) -> Result<()> {
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.image_srcs.is_empty() {
                return Err(Error::GroundTruth(format!(
                    "{}: segment {i} lists no images",
                    self.source_identifier
                )));
            }
            let unique: HashSet<&String> = seg.image_srcs.iter().collect();
            if unique.len() != seg.image_srcs.len() {
                return Err(Error::GroundTruth(format!(
                    "{}: segment {i} repeats an image",
                    self.source_identifier
                )));
            }
        }
        Ok(())
    }
}

/// Reads a ground-truth file: a JSON list of pages.
pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthPage>> {
    let raw = std::fs::read(path)?;
    parse_ground_truth(&raw)
}

pub fn parse_ground_truth(raw: &[u8]) -> Result<Vec<GroundTruthPage>> {
    let pages: Vec<GroundTruthPage> = serde_json::from_slice(raw)?;
    for page in &pages {
        page.validate()?;
    }
    Ok(pages)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    Jaccard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPolicy {
    pub mode: MatchMode,
    pub jaccard_threshold: f64,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        MatchPolicy {
            mode: MatchMode::Exact,
            jaccard_threshold: 0.8,
        }
    }
}

impl MatchPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.jaccard_threshold > 0.0 && self.jaccard_threshold <= 1.0) {
            return Err(Error::InvalidOptions(format!(
                "jaccard threshold {} outside (0, 1]",
                self.jaccard_threshold
            )));
        }
        Ok(())
    }

    pub fn texts_match(&self, a: &str, b: &str) -> bool {
        match self.mode {
            MatchMode::Exact => normalize_for_match(a) == normalize_for_match(b),
            MatchMode::Jaccard => word_jaccard(a, b) >= self.jaccard_threshold,
        }
    }
}

pub fn normalize_for_match(text: &str) -> String {
    collapse_whitespace(text).to_lowercase()
}

/// Jaccard index of the two texts' word sets; two empty texts give 1.
pub fn word_jaccard(a: &str, b: &str) -> f64 {
    let a = normalize_for_match(a);
    let b = normalize_for_match(b);
    let wa: HashSet<&str> = a.split_whitespace().collect();
    let wb: HashSet<&str> = b.split_whitespace().collect();
    let union = wa.union(&wb).count();
    if union == 0 {
        return 1.0;
    }
    wa.intersection(&wb).count() as f64 / union as f64
}

/// An extracted segment reduced to what matching looks at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub image_srcs: Vec<String>,
    pub text: String,
}

impl From<&ImageSegment> for Candidate {
    fn from(seg: &ImageSegment) -> Self {
        Candidate {
            image_srcs: seg.images.iter().map(|d| d.src.clone()).collect(),
            text: seg.context_texts.join(" "),
        }
    }
}

impl From<&WindowContext> for Candidate {
    fn from(w: &WindowContext) -> Self {
        Candidate {
            image_srcs: vec![w.image.src.clone()],
            text: w.text(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub correct: usize,
    /// Some extracted segment could have matched more than one expected segment.
    pub ambiguous: bool,
}

/// Greedy one-to-one matching in document order.
pub fn match_candidates(extracted: &[Candidate], truth: &GroundTruthPage, policy: &MatchPolicy) -> MatchOutcome {
    let mut used = vec![false; truth.segments.len()];
    let mut outcome = MatchOutcome::default();
    for cand in extracted {
        let srcs: HashSet<&str> = cand.image_srcs.iter().map(String::as_str).collect();
        let mut hits = truth.segments.iter().enumerate().filter(|(i, t)| {
            !used[*i]
                && t.image_srcs.iter().any(|s| srcs.contains(s.as_str()))
                && policy.texts_match(&cand.text, &t.context_text)
        });
        if let Some((i, _)) = hits.next() {
            if hits.next().is_some() {
                outcome.ambiguous = true;
            }
            used[i] = true;
            outcome.correct += 1;
        }
    }
    outcome
}

pub fn match_segments(extracted: &[ImageSegment], truth: &GroundTruthPage, policy: &MatchPolicy) -> usize {
    let cands: Vec<Candidate> = extracted.iter().map(Candidate::from).collect();
    match_candidates(&cands, truth, policy).correct
}

/// `(precision, recall)`, each 0 when its denominator is 0.
pub fn precision_recall(correct: usize, extracted: usize, actual: usize) -> (f64, f64) {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    (ratio(correct, extracted), ratio(correct, actual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    Segmenter,
    /// Fixed word window; `n: None` is the whole page.
    Window {
        n: Option<usize>,
    },
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Segmenter => "Segmenter".to_string(),
            Method::Window { n: Some(n) } => format!("Window n={n}"),
            Method::Window { n: None } => "Whole page".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub method: Method,
    pub policy: FilterPolicy,
    pub tolerance: f64,
    pub matching: MatchPolicy,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            method: Method::Segmenter,
            policy: FilterPolicy::default(),
            tolerance: DEFAULT_TOLERANCE,
            matching: MatchPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageCounts {
    pub source: String,
    pub actual: usize,
    pub extracted: usize,
    pub correct: usize,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub actual: usize,
    pub extracted: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub per_page: Vec<PageCounts>,
    pub config_echo: Option<EvalConfig>,
    /// Mean extraction time per page, parsing excluded.
    pub mean_ms_per_page: Option<f64>,
}

impl EvalReport {
    pub fn from_counts(correct: usize, extracted: usize, actual: usize) -> Self {
        let (precision, recall) = precision_recall(correct, extracted, actual);
        EvalReport {
            actual,
            extracted,
            correct,
            precision,
            recall,
            per_page: Vec::new(),
            config_echo: None,
            mean_ms_per_page: None,
        }
    }

    /// Sums per-page counts in order.
    pub fn aggregate(per_page: Vec<PageCounts>, config: Option<EvalConfig>, mean_ms: Option<f64>) -> Self {
        let (actual, extracted, correct) = per_page
            .iter()
            .fold((0, 0, 0), |(a, e, c), p| (a + p.actual, e + p.extracted, c + p.correct));
        let (precision, recall) = precision_recall(correct, extracted, actual);
        EvalReport {
            actual,
            extracted,
            correct,
            precision,
            recall,
            per_page,
            config_echo: config,
            mean_ms_per_page: mean_ms,
        }
    }
}

/// File-name component of a source identifier; ground truth is keyed on it.
pub fn source_key(source: &str) -> &str {
    source.rsplit(['/', '\\']).next().unwrap_or(source)
}

/// Pairs each item with its ground truth, dropping ids listed in `exclude`.
///
/// Truth entries without an item are ignored; items without truth are an error.
pub fn pair_with_truth<T, F>(
    items: Vec<T>,
    truths: &[GroundTruthPage],
    exclude: &[String],
    source_of: F,
) -> Result<Vec<(T, GroundTruthPage)>>
where
    F: Fn(&T) -> &str,
{
    let by_key: HashMap<&str, &GroundTruthPage> =
        truths.iter().map(|t| (source_key(&t.source_identifier), t)).collect();
    let excluded: HashSet<&str> = exclude.iter().map(|e| source_key(e)).collect();
    let mut missing = BTreeSet::new();
    let mut paired = Vec::new();
    for item in items {
        let key = source_key(source_of(&item)).to_string();
        if excluded.contains(key.as_str()) {
            continue;
        }
        match by_key.get(key.as_str()) {
            Some(t) => paired.push((item, (*t).clone())),
            None => {
                missing.insert(key);
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::UnmatchedPages(missing.into_iter().collect()));
    }
    Ok(paired)
}

fn extract_candidates(tree: &DomTree, config: &EvalConfig) -> Result<Vec<Candidate>> {
    Ok(match config.method {
        Method::Segmenter => segment_page(tree, &config.policy, config.tolerance)
            .segments
            .iter()
            .map(Candidate::from)
            .collect(),
        Method::Window { n } => {
            let images = collect_valid_images(tree, &config.policy);
            window_contexts(tree, &images, n)?.iter().map(Candidate::from).collect()
        }
    })
}

/// Runs extraction on every page and scores it against its ground truth.
pub fn evaluate_corpus(pages: &[(DomTree, GroundTruthPage)], config: &EvalConfig) -> Result<EvalReport> {
    config.policy.validate()?;
    config.matching.validate()?;
    let mismatched: Vec<String> = pages
        .iter()
        .filter(|(tree, truth)| source_key(tree.source_identifier()) != source_key(&truth.source_identifier))
        .map(|(tree, truth)| format!("{} != {}", tree.source_identifier(), truth.source_identifier))
        .collect();
    if !mismatched.is_empty() {
        return Err(Error::UnmatchedPages(mismatched));
    }

    let results: Vec<(PageCounts, f64)> = pages
        .par_iter()
        .map(|(tree, truth)| {
            let started = Instant::now();
            let cands = extract_candidates(tree, config)?;
            let ms = started.elapsed().as_secs_f64() * 1e3;
            let outcome = match_candidates(&cands, truth, &config.matching);
            Ok((
                PageCounts {
                    source: tree.source_identifier().to_string(),
                    actual: truth.segments.len(),
                    extracted: cands.len(),
                    correct: outcome.correct,
                    ambiguous: outcome.ambiguous,
                },
                ms,
            ))
        })
        .collect::<Result<_>>()?;
    let mean_ms = (!results.is_empty()).then(|| results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64);
    Ok(EvalReport::aggregate(
        results.into_iter().map(|r| r.0).collect(),
        Some(config.clone()),
        mean_ms,
    ))
}

/// Scores already-extracted candidates, e.g. from saved segmentation output.
pub fn evaluate_predictions(pages: &[(Vec<Candidate>, GroundTruthPage)], matching: &MatchPolicy) -> Result<EvalReport> {
    matching.validate()?;
    let per_page = pages
        .iter()
        .map(|(cands, truth)| {
            let outcome = match_candidates(cands, truth, matching);
            PageCounts {
                source: truth.source_identifier.clone(),
                actual: truth.segments.len(),
                extracted: cands.len(),
                correct: outcome.correct,
                ambiguous: outcome.ambiguous,
            }
        })
        .collect();
    Ok(EvalReport::aggregate(per_page, None, None))
}

/// Renders reports side by side, one column per method.
pub fn render_table(columns: &[(String, &EvalReport)]) -> String {
    let mut out = String::new();
    let width = columns.iter().map(|(name, _)| name.len()).max().unwrap_or(0).max(10);
    let _ = write!(out, "{:<10}", "");
    for (name, _) in columns {
        let _ = write!(out, "  {name:>width$}");
    }
    out.push('\n');
    type Row = (&'static str, fn(&EvalReport) -> String);
    let rows: [Row; 5] = [
        ("Actual", |r| r.actual.to_string()),
        ("Extracted", |r| r.extracted.to_string()),
        ("Correct", |r| r.correct.to_string()),
        ("Recall", |r| format!("{:.2}", r.recall)),
        ("Precision", |r| format!("{:.2}", r.precision)),
    ];
    for (label, cell) in rows {
        let _ = write!(out, "{label:<10}");
        for (_, report) in columns {
            let _ = write!(out, "  {:>width$}", cell(report));
        }
        out.push('\n');
    }
    out
}
