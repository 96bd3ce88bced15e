//! Artifact scoreboard: static deck quality.
//!
//! Components, all in [0, 1]:
//! - stability `P`: fraction of successful runs;
//! - textual fidelity `F_t`: lexical + semantic overlap of slide and script
//!   against the aligned reference text, averaged over both sides:
//!   `F_t = w_rouge/(2m) * sum[lex(f_k,t_k) + lex(p_k,t_k)]
//!        + w_bert/(2m)  * sum[sem(f_k,t_k) + sem(p_k,t_k)]`;
//! - visual fidelity `F_v`: fraction of slides carrying a visual supported
//!   by the aligned source;
//! - legibility `L = 1 - mean(min(1, penalty_k))` with
//!   `penalty_k = [minfont < 12] + [wordcount > 140]` (both strict);
//! - aesthetics `Ae = clip(0,1, 0.6 L + 0.2 (1 - |frac_img - 0.6|)
//!   + 0.2 frac_script)`.
//!
//! Aggregate: `S_A = a_stab P + a_fid (b F_t + (1-b) F_v)
//!                 + a_read (g L + (1-g) Ae)`.
//!
//! Per-slide terms are independent; under the `parallel` feature the
//! fidelity terms are computed across threads and summed in slide order so
//! results stay bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::deck::{DeckPackage, RunRecord, SourceAlignment, VisualKind};
use crate::error::{Error, Result};
use crate::ingest::SliceType;
use crate::scorers::{LexicalScorer, SemanticScorer};
use crate::tree::ContentTree;

/// Minimum font size (points) below which a slide is penalized.
pub const MIN_FONT_PT: f64 = 12.0;
/// On-slide word count above which a slide is penalized.
pub const MAX_SLIDE_WORDS: usize = 140;

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactWeights {
    pub omega_rouge: f64,
    pub omega_bert: f64,
    pub alpha_stab: f64,
    pub alpha_fid: f64,
    pub alpha_read: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ArtifactWeights {
    fn default() -> Self {
        ArtifactWeights {
            omega_rouge: 0.5,
            omega_bert: 0.5,
            alpha_stab: 0.2,
            alpha_fid: 0.4,
            alpha_read: 0.4,
            beta: 0.7,
            gamma: 0.5,
        }
    }
}

impl ArtifactWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_rouge", self.omega_rouge),
            ("omega_bert", self.omega_bert),
            ("alpha_stab", self.alpha_stab),
            ("alpha_fid", self.alpha_fid),
            ("alpha_read", self.alpha_read),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} must be in [0,1], got {v}")));
            }
        }
        let omega_sum = self.omega_rouge + self.omega_bert;
        if (omega_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "omega_rouge + omega_bert must sum to 1, got {omega_sum}"
            )));
        }
        let alpha_sum = self.alpha_stab + self.alpha_fid + self.alpha_read;
        if (alpha_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "alpha_stab + alpha_fid + alpha_read must sum to 1, got {alpha_sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactScorecard {
    pub stability: f64,
    pub textual_fidelity: f64,
    pub visual_fidelity: f64,
    pub legibility: f64,
    pub aesthetics: f64,
    pub artifact_score: f64,
    pub per_slide_penalty: Vec<u8>,
    pub frac_img: f64,
    pub frac_script: f64,
    pub runs_succeeded: usize,
    pub runs_total: usize,
}

/// Success rate over run records.
pub fn stability(runs: &[RunRecord]) -> Result<f64> {
    if runs.is_empty() {
        return Err(Error::NoRuns);
    }
    let succeeded = runs.iter().filter(|r| r.succeeded).count();
    Ok(succeeded as f64 / runs.len() as f64)
}

fn checked(scorer_name: &str, value: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ScorerContract {
            scorer: scorer_name.to_string(),
            value,
        });
    }
    Ok(value)
}

/// Weighted lexical + semantic overlap against aligned reference texts,
/// averaged over slide text and script for every slide.
pub fn textual_fidelity(
    pkg: &DeckPackage,
    alignments: &[SourceAlignment],
    lexical: &dyn LexicalScorer,
    semantic: &dyn SemanticScorer,
    weights: &ArtifactWeights,
) -> Result<f64> {
    weights.validate()?;
    let m = pkg.len();
    if m == 0 {
        return Err(Error::EmptyDeck("textual fidelity needs at least one slide"));
    }
    if alignments.len() != m {
        return Err(Error::InvalidParams(format!(
            "expected {m} alignments, got {}",
            alignments.len()
        )));
    }

    let term = |k: usize| -> Result<(f64, f64)> {
        let slide_text = pkg.slides[k].full_text();
        let script_text = &pkg.scripts[k].text;
        let reference = &alignments[k].reference_text;
        let lex = checked(lexical.name(), lexical.score(&slide_text, reference))?
            + checked(lexical.name(), lexical.score(script_text, reference))?;
        let sem = checked(semantic.name(), semantic.score(&slide_text, reference))?
            + checked(semantic.name(), semantic.score(script_text, reference))?;
        Ok((lex, sem))
    };

    #[cfg(feature = "parallel")]
    let terms: Result<Vec<(f64, f64)>> = (0..m).into_par_iter().map(term).collect();
    #[cfg(not(feature = "parallel"))]
    let terms: Result<Vec<(f64, f64)>> = (0..m).map(term).collect();
    let terms = terms?;

    let mut lex_sum = 0.0;
    let mut sem_sum = 0.0;
    for (lex, sem) in terms {
        lex_sum += lex;
        sem_sum += sem;
    }
    let scale = 1.0 / (2.0 * m as f64);
    Ok(weights.omega_rouge * scale * lex_sum + weights.omega_bert * scale * sem_sum)
}

/// Whether a visual element of `slide_index` is supported by its alignment:
/// either a `source_ref` naming an aligned node (by id or exact title), or
/// an aligned node whose slice type matches the visual kind (figure slices
/// for image-like visuals, table slices for table/chart visuals).
fn visual_supported(
    pkg: &DeckPackage,
    alignment: &SourceAlignment,
    tree: &ContentTree,
    k: usize,
) -> bool {
    let slide = &pkg.slides[k];
    slide.visual_elements.iter().any(|visual| {
        if let Some(reference) = &visual.source_ref {
            let reference = reference.trim();
            let named = alignment.source_node_ids.iter().any(|&id| {
                id.to_string() == reference || tree.node(id).title == reference
            });
            if named {
                return true;
            }
        }
        let wanted = match visual.kind {
            VisualKind::Image | VisualKind::Figure => SliceType::Figure,
            VisualKind::Table | VisualKind::Chart => SliceType::Table,
        };
        alignment
            .source_node_ids
            .iter()
            .any(|&id| tree.node(id).node_type == wanted)
    })
}

/// Fraction of slides whose visual items are supported by the aligned
/// source.
pub fn visual_fidelity(
    pkg: &DeckPackage,
    alignments: &[SourceAlignment],
    tree: &ContentTree,
) -> Result<f64> {
    let m = pkg.len();
    if m == 0 {
        return Err(Error::EmptyDeck("visual fidelity needs at least one slide"));
    }
    let supported = (0..m)
        .filter(|&k| visual_supported(pkg, &alignments[k], tree, k))
        .count();
    Ok(supported as f64 / m as f64)
}

/// Legibility score plus the per-slide penalty vector. Boundary cases are
/// exact: font 12 and 140 words incur no penalty.
pub fn legibility(pkg: &DeckPackage) -> Result<(f64, Vec<u8>)> {
    let m = pkg.len();
    if m == 0 {
        return Err(Error::EmptyDeck("legibility needs at least one slide"));
    }
    let penalties: Vec<u8> = pkg
        .slides
        .iter()
        .map(|s| {
            let mut p = 0u8;
            if s.min_font_size < MIN_FONT_PT {
                p += 1;
            }
            if s.word_count > MAX_SLIDE_WORDS {
                p += 1;
            }
            p
        })
        .collect();
    let capped: f64 = penalties.iter().map(|&p| p.min(1) as f64).sum();
    Ok((1.0 - capped / m as f64, penalties))
}

/// Deterministic aesthetics: legibility-weighted balance of image coverage
/// (optimum at 60% of slides) and script coverage.
pub fn aesthetics(pkg: &DeckPackage, legibility_score: f64) -> Result<(f64, f64, f64)> {
    let m = pkg.len();
    if m == 0 {
        return Err(Error::EmptyDeck("aesthetics needs at least one slide"));
    }
    let with_image = pkg
        .slides
        .iter()
        .filter(|s| s.visual_elements.iter().any(|v| v.kind == VisualKind::Image))
        .count();
    let with_script = pkg
        .scripts
        .iter()
        .filter(|s| !s.text.trim().is_empty())
        .count();
    let frac_img = with_image as f64 / m as f64;
    let frac_script = with_script as f64 / m as f64;
    let raw = 0.6 * legibility_score + 0.2 * (1.0 - (frac_img - 0.6).abs()) + 0.2 * frac_script;
    Ok((raw.clamp(0.0, 1.0), frac_img, frac_script))
}

/// Convex aggregation of the five components.
pub fn aggregate_artifact(
    stability: f64,
    textual_fidelity: f64,
    visual_fidelity: f64,
    legibility: f64,
    aesthetics: f64,
    weights: &ArtifactWeights,
) -> Result<f64> {
    weights.validate()?;
    for (name, v) in [
        ("stability", stability),
        ("textual_fidelity", textual_fidelity),
        ("visual_fidelity", visual_fidelity),
        ("legibility", legibility),
        ("aesthetics", aesthetics),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParams(format!("component {name} = {v} outside [0,1]")));
        }
    }
    Ok(weights.alpha_stab * stability
        + weights.alpha_fid * (weights.beta * textual_fidelity + (1.0 - weights.beta) * visual_fidelity)
        + weights.alpha_read * (weights.gamma * legibility + (1.0 - weights.gamma) * aesthetics))
}

/// Full artifact scoreboard for a package.
pub fn score_artifact(
    pkg: &DeckPackage,
    alignments: &[SourceAlignment],
    tree: &ContentTree,
    lexical: &dyn LexicalScorer,
    semantic: &dyn SemanticScorer,
    weights: &ArtifactWeights,
) -> Result<ArtifactScorecard> {
    let p = stability(&pkg.runs)?;
    let f_t = textual_fidelity(pkg, alignments, lexical, semantic, weights)?;
    let f_v = visual_fidelity(pkg, alignments, tree)?;
    let (l, per_slide_penalty) = legibility(pkg)?;
    let (ae, frac_img, frac_script) = aesthetics(pkg, l)?;
    let s_a = aggregate_artifact(p, f_t, f_v, l, ae, weights)?;
    Ok(ArtifactScorecard {
        stability: p,
        textual_fidelity: f_t,
        visual_fidelity: f_v,
        legibility: l,
        aesthetics: ae,
        artifact_score: s_a,
        per_slide_penalty,
        frac_img,
        frac_script,
        runs_succeeded: pkg.runs.iter().filter(|r| r.succeeded).count(),
        runs_total: pkg.runs.len(),
    })
}
