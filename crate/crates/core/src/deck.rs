//! The evaluated package: slides, aligned speaker scripts, requirement
//! profile, and run records, plus retrieval alignment back to the source.
//!
//! The interchange file is a single JSON document with top-level keys
//! `requirements`, `slides`, `scripts`, and optional `runs`. Word counts and
//! estimated durations are always recomputed from text; the file never
//! stores them.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::retrieval::{retrieve, CorpusStats, RetrievalParams};
use crate::text::{count_tokens, truncate_at_tokens};
use crate::tree::{ContentTree, NodeId};

/// Words per minute assumed when turning script length into seconds.
pub const WORDS_PER_MINUTE: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisualKind {
    Image,
    Table,
    Figure,
    Chart,
}

impl fmt::Display for VisualKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VisualKind::Image => "image",
            VisualKind::Table => "table",
            VisualKind::Figure => "figure",
            VisualKind::Chart => "chart",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualElement {
    pub kind: VisualKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slide {
    /// 1-based position in the deck.
    pub index: usize,
    pub title: String,
    pub text_blocks: Vec<String>,
    pub min_font_size: f64,
    /// Token count over title + text blocks (shared tokenizer).
    pub word_count: usize,
    pub visual_elements: Vec<VisualElement>,
}

impl Slide {
    /// Title and text blocks joined for similarity and retrieval queries.
    pub fn full_text(&self) -> String {
        let mut parts: Vec<&str> = Vec::with_capacity(1 + self.text_blocks.len());
        if !self.title.is_empty() {
            parts.push(&self.title);
        }
        parts.extend(self.text_blocks.iter().map(|b| b.as_str()));
        parts.join("\n")
    }

    pub fn has_visual_kind(&self, kinds: &[VisualKind]) -> bool {
        self.visual_elements.iter().any(|v| kinds.contains(&v.kind))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerScript {
    pub index: usize,
    pub text: String,
    pub word_count: usize,
}

impl SpeakerScript {
    /// Narration seconds at 150 words per minute; never stored, always
    /// derived from the current word count.
    pub fn estimated_duration(&self) -> f64 {
        self.word_count as f64 / WORDS_PER_MINUTE * 60.0
    }
}

/// Narration seconds for a script at 150 words per minute.
pub fn estimate_duration(script: &SpeakerScript) -> f64 {
    script.estimated_duration()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    #[serde(skip, default)]
    pub run_index: usize,
    pub succeeded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequirementProfile {
    pub audience: String,
    pub duration_minutes: f64,
    pub focus: Vec<String>,
    pub style: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeckPackage {
    pub slides: Vec<Slide>,
    pub scripts: Vec<SpeakerScript>,
    pub runs: Vec<RunRecord>,
}

impl DeckPackage {
    /// Slide count m.
    pub fn len(&self) -> usize {
        self.slides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slides.is_empty()
    }
}

/// Retrieval alignment for one slide: the reference text assembled from the
/// top-ranked source nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceAlignment {
    pub slide_index: usize,
    pub reference_text: String,
    pub source_node_ids: Vec<NodeId>,
    /// True when retrieval returned nothing, either because the slide +
    /// script tokenized to an empty query or because no node matched.
    pub empty_retrieval: bool,
}

// ---------------------------------------------------------------------------
// Interchange schema (field names are part of the format)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPackage {
    requirements: RawRequirements,
    slides: Vec<RawSlide>,
    scripts: Vec<RawScript>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    runs: Option<Vec<RunRecord>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequirements {
    audience: String,
    duration_minutes: f64,
    #[serde(default)]
    focus: Vec<String>,
    #[serde(default)]
    style: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlide {
    title: String,
    #[serde(default)]
    text_blocks: Vec<String>,
    min_font_size: f64,
    #[serde(default)]
    visuals: Vec<VisualElement>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScript {
    text: String,
}

/// Parse and validate an interchange file.
pub fn load_package(path: &Path) -> Result<(DeckPackage, RequirementProfile)> {
    let contents = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    load_package_str(&contents)
}

/// Parse and validate interchange JSON. Schema errors carry the path of the
/// offending field; count and range violations are separate errors.
pub fn load_package_str(contents: &str) -> Result<(DeckPackage, RequirementProfile)> {
    let de = &mut serde_json::Deserializer::from_str(contents);
    let raw: RawPackage = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    if raw.slides.len() != raw.scripts.len() {
        return Err(Error::CountMismatch {
            slides: raw.slides.len(),
            scripts: raw.scripts.len(),
        });
    }
    if !(raw.requirements.duration_minutes > 0.0) {
        return Err(Error::Package(format!(
            "duration_minutes must be > 0, got {}",
            raw.requirements.duration_minutes
        )));
    }

    let mut slides = Vec::with_capacity(raw.slides.len());
    for (i, slide) in raw.slides.into_iter().enumerate() {
        let index = i + 1;
        let has_text = !slide.title.trim().is_empty()
            || slide.text_blocks.iter().any(|b| !b.trim().is_empty());
        if has_text && !(slide.min_font_size > 0.0) {
            return Err(Error::Package(format!(
                "slide {index}: min_font_size must be > 0 when the slide has text"
            )));
        }
        let word_count =
            count_tokens(&format!("{}\n{}", slide.title, slide.text_blocks.join("\n")));
        slides.push(Slide {
            index,
            title: slide.title,
            text_blocks: slide.text_blocks,
            min_font_size: slide.min_font_size,
            word_count,
            visual_elements: slide.visuals,
        });
    }

    let scripts = raw
        .scripts
        .into_iter()
        .enumerate()
        .map(|(i, s)| SpeakerScript {
            index: i + 1,
            word_count: count_tokens(&s.text),
            text: s.text,
        })
        .collect();

    // Absent run records default to five successful runs.
    let mut runs = raw.runs.unwrap_or_else(|| {
        (0..5)
            .map(|_| RunRecord { run_index: 0, succeeded: true, failure_reason: None })
            .collect()
    });
    for (i, run) in runs.iter_mut().enumerate() {
        run.run_index = i + 1;
    }

    let profile = RequirementProfile {
        audience: raw.requirements.audience,
        duration_minutes: raw.requirements.duration_minutes,
        focus: raw.requirements.focus,
        style: raw.requirements.style,
    };
    Ok((DeckPackage { slides, scripts, runs }, profile))
}

/// Serialize back to interchange JSON (pretty, stable field order).
pub fn package_to_json(pkg: &DeckPackage, profile: &RequirementProfile) -> String {
    let raw = RawPackage {
        requirements: RawRequirements {
            audience: profile.audience.clone(),
            duration_minutes: profile.duration_minutes,
            focus: profile.focus.clone(),
            style: profile.style.clone(),
        },
        slides: pkg
            .slides
            .iter()
            .map(|s| RawSlide {
                title: s.title.clone(),
                text_blocks: s.text_blocks.clone(),
                min_font_size: s.min_font_size,
                visuals: s.visual_elements.clone(),
            })
            .collect(),
        scripts: pkg
            .scripts
            .iter()
            .map(|s| RawScript { text: s.text.clone() })
            .collect(),
        runs: Some(pkg.runs.clone()),
    };
    serde_json::to_string_pretty(&raw).expect("package serialization")
}

fn align_slide(
    slide: &Slide,
    script: &SpeakerScript,
    tree: &ContentTree,
    stats: &CorpusStats,
    params: &RetrievalParams,
) -> SourceAlignment {
    let query = format!("{}\n{}", slide.full_text(), script.text);
    let results = retrieve(&query, tree, stats, params);
    if results.is_empty() {
        return SourceAlignment {
            slide_index: slide.index,
            reference_text: String::new(),
            source_node_ids: Vec::new(),
            empty_retrieval: true,
        };
    }
    let joined = results
        .iter()
        .map(|r| tree.node(r.node_id).content.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let reference_text = truncate_at_tokens(&joined, params.l_max).to_string();
    SourceAlignment {
        slide_index: slide.index,
        reference_text,
        source_node_ids: results.iter().map(|r| r.node_id).collect(),
        empty_retrieval: false,
    }
}

/// Align every slide/script pair to its most relevant source nodes. The
/// query is the slide text joined with the script; the reference text is the
/// ranked nodes' contents truncated at `l_max` tokens. Slides are
/// independent, so alignment fans out across threads under the `parallel`
/// feature; output order is by slide index either way.
pub fn align_to_source(
    pkg: &DeckPackage,
    tree: &ContentTree,
    stats: &CorpusStats,
    params: &RetrievalParams,
) -> Vec<SourceAlignment> {
    #[cfg(feature = "parallel")]
    {
        align_to_source_par(pkg, tree, stats, params)
    }
    #[cfg(not(feature = "parallel"))]
    {
        align_to_source_seq(pkg, tree, stats, params)
    }
}

pub fn align_to_source_seq(
    pkg: &DeckPackage,
    tree: &ContentTree,
    stats: &CorpusStats,
    params: &RetrievalParams,
) -> Vec<SourceAlignment> {
    pkg.slides
        .iter()
        .zip(&pkg.scripts)
        .map(|(slide, script)| align_slide(slide, script, tree, stats, params))
        .collect()
}

#[cfg(feature = "parallel")]
pub fn align_to_source_par(
    pkg: &DeckPackage,
    tree: &ContentTree,
    stats: &CorpusStats,
    params: &RetrievalParams,
) -> Vec<SourceAlignment> {
    pkg.slides
        .par_iter()
        .zip(pkg.scripts.par_iter())
        .map(|(slide, script)| align_slide(slide, script, tree, stats, params))
        .collect()
}
