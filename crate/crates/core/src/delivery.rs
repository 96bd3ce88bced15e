//! Delivery scoreboard: how well the package supports an actual talk.
//!
//! Formula-based components:
//! - timing compliance `R_time` over seconds-per-slide `s = 60 D / m`:
//!   piecewise linear, 1 on [12, 60], ramping to 0 at the hard bounds 6 and
//!   120, zero outside;
//! - requirement score `R = mean(R_time, content compliance)`;
//! - narrative `N = (1 - eta) * s_ctrl` with `s_ctrl` the mean of the
//!   titled-slide fraction and consecutive-slide similarity (diversity is
//!   fixed to 0 in the single-deck setting);
//! - complementarity `C`: per slide, a redundancy sweet-spot term that peaks
//!   when slide/script similarity sits at the interval bounds `[l, u]`, plus
//!   the fraction of slide words covered by the script;
//! - temporal quality: pacing smoothness (one minus normalized stddev of
//!   estimated durations) averaged with transition-marker saturation
//!   (4 markers for full credit).
//!
//! Judge-based components (`T_attention`, `R'`, and the content half of `R`)
//! sit behind [`Judge`]; the default is a deterministic rubric, so replacing
//! the judge never changes any formula-based component.
//!
//! Aggregate: `S_D = sum omega_x * x + omega_stab * P
//!                 + omega_fid * (beta F_t + (1-beta) F_v)` with the omega
//! vector normalized to sum 1 at construction.

use crate::artifact::ArtifactScorecard;
use crate::deck::{DeckPackage, RequirementProfile};
use crate::error::{Error, Result};
use crate::scorers::SemanticScorer;
use crate::text::{tokenize, MarkerLexicon};

/// Sweet range bounds for seconds per slide.
pub const SWEET_MIN_S: f64 = 12.0;
pub const SWEET_MAX_S: f64 = 60.0;
/// Hard range bounds; zero score at or beyond these.
pub const HARD_MIN_S: f64 = 6.0;
pub const HARD_MAX_S: f64 = 120.0;

/// Default transition-marker lexicon; configurable.
pub const DEFAULT_MARKERS: &[&str] = &[
    "next",
    "now",
    "moving on",
    "let's",
    "in summary",
    "finally",
    "first",
    "second",
    "turning to",
];

/// Words a script uses to reference its slide's visual or effect anchors.
const VISUAL_ANCHORS: &[&str] = &[
    "figure", "fig", "table", "chart", "image", "diagram", "graph", "plot",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryWeights {
    /// Diversity/controllability mix in the narrative score.
    pub eta: f64,
    /// Target similarity interval for slide/script redundancy.
    pub sim_low: f64,
    pub sim_high: f64,
    /// Small positive stabilizer in denominators.
    pub epsilon: f64,
    /// Pacing-smoothness normalizer in seconds; derived from the per-slide
    /// budget (`max(10, s/6)`) when unset.
    pub std_max: Option<f64>,
    pub omega_requirement: f64,
    pub omega_narrative: f64,
    pub omega_complementarity: f64,
    pub omega_attention: f64,
    pub omega_temporal: f64,
    pub omega_rehearsal: f64,
    pub omega_stab: f64,
    pub omega_fid: f64,
    /// Textual/visual fidelity mix, shared with the artifact weights.
    pub beta: f64,
}

impl Default for DeliveryWeights {
    fn default() -> Self {
        DeliveryWeights {
            eta: 0.4,
            sim_low: 0.25,
            sim_high: 0.55,
            epsilon: 1e-6,
            std_max: None,
            omega_requirement: 2.0 / 15.0,
            omega_narrative: 2.0 / 15.0,
            omega_complementarity: 2.0 / 15.0,
            omega_attention: 2.0 / 15.0,
            omega_temporal: 2.0 / 15.0,
            omega_rehearsal: 2.0 / 15.0,
            omega_stab: 0.1,
            omega_fid: 0.1,
            beta: 0.7,
        }
    }
}

impl DeliveryWeights {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParams(format!("eta must be in [0,1], got {}", self.eta)));
        }
        if !(0.0 <= self.sim_low && self.sim_low < self.sim_high && self.sim_high <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "similarity interval must satisfy 0 <= l < u <= 1, got [{}, {}]",
                self.sim_low, self.sim_high
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParams("epsilon must be > 0".to_string()));
        }
        if let Some(s) = self.std_max {
            if !(s > 0.0) {
                return Err(Error::InvalidParams("std_max must be > 0".to_string()));
            }
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParams(format!("beta must be in [0,1], got {}", self.beta)));
        }
        for (name, v) in self.omegas() {
            if !(v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        let sum: f64 = self.omegas().iter().map(|(_, v)| v).sum();
        if sum <= 0.0 {
            return Err(Error::InvalidParams("omega weights must not all be zero".to_string()));
        }
        Ok(())
    }

    fn omegas(&self) -> [(&'static str, f64); 8] {
        [
            ("omega_requirement", self.omega_requirement),
            ("omega_narrative", self.omega_narrative),
            ("omega_complementarity", self.omega_complementarity),
            ("omega_attention", self.omega_attention),
            ("omega_temporal", self.omega_temporal),
            ("omega_rehearsal", self.omega_rehearsal),
            ("omega_stab", self.omega_stab),
            ("omega_fid", self.omega_fid),
        ]
    }

    /// Scale the omega vector to sum to exactly 1.
    pub fn normalized(mut self) -> Result<Self> {
        self.validate()?;
        let sum: f64 = self.omegas().iter().map(|(_, v)| v).sum();
        self.omega_requirement /= sum;
        self.omega_narrative /= sum;
        self.omega_complementarity /= sum;
        self.omega_attention /= sum;
        self.omega_temporal /= sum;
        self.omega_rehearsal /= sum;
        self.omega_stab /= sum;
        self.omega_fid /= sum;
        Ok(self)
    }

    /// Effective pacing normalizer for a deck with `seconds_per_slide`.
    pub fn effective_std_max(&self, seconds_per_slide: f64) -> f64 {
        self.std_max.unwrap_or_else(|| (seconds_per_slide / 6.0).max(10.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryScorecard {
    pub seconds_per_slide: f64,
    pub timing: f64,
    pub requirement: f64,
    pub narrative: f64,
    pub narrative_control: f64,
    pub narrative_diversity: f64,
    pub complementarity: f64,
    pub temporal: f64,
    pub attention: f64,
    pub rehearsal_readiness: f64,
    pub delivery_score: f64,
    pub per_slide_similarity: Vec<f64>,
    pub per_slide_duration: Vec<f64>,
    pub marker_count: usize,
}

/// Piecewise-linear timing schedule over seconds per slide.
pub fn r_time_schedule(seconds_per_slide: f64) -> f64 {
    let ramp_up = (seconds_per_slide - HARD_MIN_S) / 6.0;
    let ramp_down = (HARD_MAX_S - seconds_per_slide) / 60.0;
    ramp_up.min(ramp_down).clamp(0.0, 1.0)
}

/// Seconds per slide and the timing score for a package under a profile.
pub fn timing_compliance(pkg: &DeckPackage, profile: &RequirementProfile) -> Result<(f64, f64)> {
    let m = pkg.len();
    if m == 0 {
        return Err(Error::EmptyDeck("timing needs at least one slide"));
    }
    let s = profile.duration_minutes * 60.0 / m as f64;
    Ok((s, r_time_schedule(s)))
}

/// Scores content-level requirement compliance and the two judged delivery
/// components. The default is deterministic; an external judge plugs in
/// behind the same trait.
pub trait Judge: Send + Sync {
    fn name(&self) -> &str;
    /// Content-level requirement compliance in [0, 1].
    fn content_compliance(&self, pkg: &DeckPackage, profile: &RequirementProfile) -> f64;
    /// (attention choreography, rehearsal readiness), both in [0, 1].
    fn judged_pair(&self, pkg: &DeckPackage) -> (f64, f64);
}

/// Deterministic rubric:
/// - content compliance: fraction of focus entries whose tokens all appear
///   in the deck (slides plus scripts); vacuously 1 with no focus entries;
/// - attention: fraction of slides that either carry no visuals or whose
///   script names a visual anchor word;
/// - readiness: mean of titled fraction, marker saturation, and an
///   every-script-non-empty indicator.
pub struct KeywordJudge {
    markers: MarkerLexicon,
    anchors: MarkerLexicon,
}

impl KeywordJudge {
    pub fn new(markers: MarkerLexicon) -> Self {
        KeywordJudge {
            markers,
            anchors: MarkerLexicon::new(VISUAL_ANCHORS),
        }
    }
}

impl Default for KeywordJudge {
    fn default() -> Self {
        KeywordJudge::new(MarkerLexicon::new(DEFAULT_MARKERS))
    }
}

impl Judge for KeywordJudge {
    fn name(&self) -> &str {
        "keyword-rubric"
    }

    fn content_compliance(&self, pkg: &DeckPackage, profile: &RequirementProfile) -> f64 {
        let entries: Vec<&String> = profile.focus.iter().filter(|f| !f.trim().is_empty()).collect();
        if entries.is_empty() {
            return 1.0; // vacuous satisfaction
        }
        let mut deck_text = String::new();
        for slide in &pkg.slides {
            deck_text.push_str(&slide.full_text());
            deck_text.push('\n');
        }
        for script in &pkg.scripts {
            deck_text.push_str(&script.text);
            deck_text.push('\n');
        }
        let deck_tokens: std::collections::HashSet<String> = tokenize(&deck_text).into_iter().collect();
        let covered = entries
            .iter()
            .filter(|entry| {
                let tokens = tokenize(entry);
                !tokens.is_empty() && tokens.iter().all(|t| deck_tokens.contains(t))
            })
            .count();
        covered as f64 / entries.len() as f64
    }

    fn judged_pair(&self, pkg: &DeckPackage) -> (f64, f64) {
        let m = pkg.len();
        if m == 0 {
            return (0.0, 0.0);
        }
        let anchored = pkg
            .slides
            .iter()
            .zip(&pkg.scripts)
            .filter(|(slide, script)| {
                slide.visual_elements.is_empty() || self.anchors.contains_any(&script.text)
            })
            .count();
        let attention = anchored as f64 / m as f64;

        let titled = pkg.slides.iter().filter(|s| !s.title.trim().is_empty()).count() as f64 / m as f64;
        let marker_total: usize = pkg.scripts.iter().map(|s| self.markers.count(&s.text)).sum();
        let marker_saturation = ((marker_total as f64) / 4.0).min(1.0);
        let all_scripts_non_empty = pkg.scripts.iter().all(|s| !s.text.trim().is_empty());
        let readiness =
            (titled + marker_saturation + if all_scripts_non_empty { 1.0 } else { 0.0 }) / 3.0;
        (attention, readiness)
    }
}

/// `R = mean(R_time, judge content compliance)`.
pub fn requirement_score(
    pkg: &DeckPackage,
    profile: &RequirementProfile,
    judge: &dyn Judge,
) -> Result<f64> {
    let (_, r_time) = timing_compliance(pkg, profile)?;
    let content = judge.content_compliance(pkg, profile);
    if !(0.0..=1.0).contains(&content) {
        return Err(Error::ScorerContract { scorer: judge.name().to_string(), value: content });
    }
    Ok((r_time + content) / 2.0)
}

/// Narrative quality `(N, s_ctrl)`; diversity is 0 in the single-deck
/// setting. A one-slide deck takes transition smoothness 1 by convention.
pub fn narrative_score(
    pkg: &DeckPackage,
    semantic: &dyn SemanticScorer,
    eta: f64,
) -> Result<(f64, f64)> {
    let m = pkg.len();
    if m == 0 {
        return Err(Error::EmptyDeck("narrative needs at least one slide"));
    }
    let titled = pkg.slides.iter().filter(|s| !s.title.trim().is_empty()).count() as f64 / m as f64;
    let smoothness = if m == 1 {
        1.0
    } else {
        let combined: Vec<String> = pkg
            .slides
            .iter()
            .zip(&pkg.scripts)
            .map(|(slide, script)| format!("{}\n{}", slide.full_text(), script.text))
            .collect();
        let mut total = 0.0;
        for pair in combined.windows(2) {
            let sim = semantic.score(&pair[0], &pair[1]);
            if !(0.0..=1.0).contains(&sim) {
                return Err(Error::ScorerContract { scorer: semantic.name().to_string(), value: sim });
            }
            total += sim;
        }
        total / (m - 1) as f64
    };
    let control = (titled + smoothness) / 2.0;
    Ok(((1.0 - eta) * control, control))
}

/// Redundancy sweet-spot term: peaks at the interval bounds, clamped at 0.
pub fn redundancy_term(sim: f64, low: f64, high: f64, epsilon: f64) -> f64 {
    let dist = (sim - low).abs().min((sim - high).abs());
    let scale = low.max(1.0 - high) + epsilon;
    (1.0 - dist / scale).max(0.0)
}

/// Fraction of distinct slide words that also appear in the script;
/// 0 for a slide with no words.
pub fn coverage_term(slide_text: &str, script_text: &str) -> f64 {
    let slide_words: std::collections::HashSet<String> = tokenize(slide_text).into_iter().collect();
    if slide_words.is_empty() {
        return 0.0;
    }
    let script_words: std::collections::HashSet<String> = tokenize(script_text).into_iter().collect();
    let covered = slide_words.iter().filter(|w| script_words.contains(*w)).count();
    covered as f64 / slide_words.len() as f64
}

/// Slide/script similarity per slide; empty slide text pins sim to 0.
pub fn slide_similarities(pkg: &DeckPackage, semantic: &dyn SemanticScorer) -> Result<Vec<f64>> {
    pkg.slides
        .iter()
        .zip(&pkg.scripts)
        .map(|(slide, script)| {
            let text = slide.full_text();
            if text.trim().is_empty() {
                return Ok(0.0);
            }
            let sim = semantic.score(&text, &script.text);
            if !(0.0..=1.0).contains(&sim) {
                return Err(Error::ScorerContract { scorer: semantic.name().to_string(), value: sim });
            }
            Ok(sim)
        })
        .collect()
}

/// `C = (1/2m) (sum redundancy_k + sum coverage_k)`.
pub fn complementarity(
    pkg: &DeckPackage,
    semantic: &dyn SemanticScorer,
    weights: &DeliveryWeights,
) -> Result<f64> {
    let m = pkg.len();
    if m == 0 {
        return Err(Error::EmptyDeck("complementarity needs at least one slide"));
    }
    let sims = slide_similarities(pkg, semantic)?;
    let mut redundancy_sum = 0.0;
    let mut coverage_sum = 0.0;
    for (k, sim) in sims.iter().enumerate() {
        redundancy_sum += redundancy_term(*sim, weights.sim_low, weights.sim_high, weights.epsilon);
        coverage_sum += coverage_term(&pkg.slides[k].full_text(), &pkg.scripts[k].text);
    }
    Ok((redundancy_sum + coverage_sum) / (2.0 * m as f64))
}

/// Population standard deviation.
fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// Temporal quality from pacing spread and transition-marker count.
/// Exposed at the formula level so monotonicity in the marker count is
/// testable with the spread held fixed.
pub fn temporal_from_parts(
    duration_std: f64,
    marker_count: usize,
    std_max: f64,
    epsilon: f64,
) -> f64 {
    let smoothness = (1.0 - duration_std / (std_max + epsilon)).max(0.0);
    let transitions = (marker_count as f64 / 4.0).min(1.0);
    (smoothness + transitions) / 2.0
}

/// Temporal quality of a package: estimated per-slide durations and the
/// marker lexicon applied to the scripts.
pub fn temporal_quality(
    pkg: &DeckPackage,
    profile: &RequirementProfile,
    weights: &DeliveryWeights,
    markers: &MarkerLexicon,
) -> Result<(f64, usize)> {
    let m = pkg.len();
    if m == 0 {
        return Err(Error::EmptyDeck("temporal quality needs at least one slide"));
    }
    let durations: Vec<f64> = pkg.scripts.iter().map(|s| s.estimated_duration()).collect();
    let seconds_per_slide = profile.duration_minutes * 60.0 / m as f64;
    let std_max = weights.effective_std_max(seconds_per_slide);
    let marker_count: usize = pkg.scripts.iter().map(|s| markers.count(&s.text)).sum();
    Ok((
        temporal_from_parts(std_dev(&durations), marker_count, std_max, weights.epsilon),
        marker_count,
    ))
}

/// Judge-supplied attention and readiness pair, contract-checked.
pub fn judged_scores(pkg: &DeckPackage, judge: &dyn Judge) -> Result<(f64, f64)> {
    let (attention, readiness) = judge.judged_pair(pkg);
    for value in [attention, readiness] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ScorerContract { scorer: judge.name().to_string(), value });
        }
    }
    Ok((attention, readiness))
}

/// The formula- and judge-based components entering the aggregate.
#[derive(Debug, Clone, Copy)]
pub struct DeliveryComponents {
    pub requirement: f64,
    pub narrative: f64,
    pub complementarity: f64,
    pub temporal: f64,
    pub attention: f64,
    pub rehearsal_readiness: f64,
}

/// Weighted aggregate with the artifact anchors folded in. Expects weights
/// already normalized (see [`DeliveryWeights::normalized`]).
pub fn aggregate_delivery(
    components: &DeliveryComponents,
    stability: f64,
    textual_fidelity: f64,
    visual_fidelity: f64,
    weights: &DeliveryWeights,
) -> Result<f64> {
    weights.validate()?;
    for (name, v) in [
        ("requirement", components.requirement),
        ("narrative", components.narrative),
        ("complementarity", components.complementarity),
        ("temporal", components.temporal),
        ("attention", components.attention),
        ("rehearsal_readiness", components.rehearsal_readiness),
        ("stability", stability),
        ("textual_fidelity", textual_fidelity),
        ("visual_fidelity", visual_fidelity),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParams(format!("component {name} = {v} outside [0,1]")));
        }
    }
    Ok(weights.omega_requirement * components.requirement
        + weights.omega_narrative * components.narrative
        + weights.omega_complementarity * components.complementarity
        + weights.omega_attention * components.attention
        + weights.omega_temporal * components.temporal
        + weights.omega_rehearsal * components.rehearsal_readiness
        + weights.omega_stab * stability
        + weights.omega_fid
            * (weights.beta * textual_fidelity + (1.0 - weights.beta) * visual_fidelity))
}

/// Full delivery scoreboard. The artifact scorecard supplies the stability
/// and fidelity anchors.
pub fn score_delivery(
    pkg: &DeckPackage,
    profile: &RequirementProfile,
    artifact: &ArtifactScorecard,
    semantic: &dyn SemanticScorer,
    judge: &dyn Judge,
    weights: &DeliveryWeights,
    markers: &MarkerLexicon,
) -> Result<DeliveryScorecard> {
    let weights = weights.clone().normalized()?;
    let (seconds_per_slide, timing) = timing_compliance(pkg, profile)?;
    let requirement = requirement_score(pkg, profile, judge)?;
    let (narrative, narrative_control) = narrative_score(pkg, semantic, weights.eta)?;
    let per_slide_similarity = slide_similarities(pkg, semantic)?;
    let complementarity = complementarity(pkg, semantic, &weights)?;
    let (temporal, marker_count) = temporal_quality(pkg, profile, &weights, markers)?;
    let (attention, rehearsal_readiness) = judged_scores(pkg, judge)?;
    let components = DeliveryComponents {
        requirement,
        narrative,
        complementarity,
        temporal,
        attention,
        rehearsal_readiness,
    };
    let delivery_score = aggregate_delivery(
        &components,
        artifact.stability,
        artifact.textual_fidelity,
        artifact.visual_fidelity,
        &weights,
    )?;
    let per_slide_duration = pkg.scripts.iter().map(|s| s.estimated_duration()).collect();
    Ok(DeliveryScorecard {
        seconds_per_slide,
        timing,
        requirement,
        narrative,
        narrative_control,
        narrative_diversity: 0.0,
        complementarity,
        temporal,
        attention,
        rehearsal_readiness,
        delivery_score,
        per_slide_similarity,
        per_slide_duration,
        marker_count,
    })
}

/// Rehearsal guidance for one slide: 3 to 6 tips and exactly 3 questions.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SlideAdvice {
    pub slide_index: usize,
    pub tips: Vec<String>,
    pub questions: Vec<String>,
}

const GENERIC_TIPS: &[&str] = &[
    "Open with one sentence of context before the first bullet.",
    "Decide the single takeaway to emphasize on this slide.",
    "Rehearse the transition from the previous slide aloud.",
];

const GENERIC_QUESTIONS: &[&str] = &[
    "What is the key assumption behind this slide?",
    "How does this compare against the strongest baseline?",
    "What evidence would change this conclusion?",
];

/// Deterministic rule table mapping per-slide findings to templated tips and
/// audience questions. Padded from a generic pool to the 3-tip floor.
pub fn rehearsal_advice(
    pkg: &DeckPackage,
    profile: &RequirementProfile,
    artifact: &ArtifactScorecard,
    delivery: &DeliveryScorecard,
    weights: &DeliveryWeights,
) -> Vec<SlideAdvice> {
    let m = pkg.len();
    let budget = if m == 0 { 0.0 } else { profile.duration_minutes * 60.0 / m as f64 };
    (0..m)
        .map(|k| {
            let slide = &pkg.slides[k];
            let duration = delivery.per_slide_duration[k];
            let sim = delivery.per_slide_similarity[k];
            let mut tips: Vec<String> = Vec::new();
            let mut questions: Vec<String> = Vec::new();

            if duration > budget {
                tips.push(format!(
                    "Narration runs ~{duration:.0}s against a {budget:.0}s budget; cut or compress the weakest point."
                ));
                questions.push("Which part of this slide could move to a backup section?".to_string());
            }
            if sim > weights.sim_high {
                tips.push(
                    "Script largely repeats the slide text; rephrase it to add context, not read bullets."
                        .to_string(),
                );
                questions.push("What does the narration add beyond the on-slide text?".to_string());
            }
            if artifact.per_slide_penalty[k] > 0 {
                if slide.min_font_size < crate::artifact::MIN_FONT_PT {
                    tips.push("Raise the minimum font size to at least 12pt.".to_string());
                }
                if slide.word_count > crate::artifact::MAX_SLIDE_WORDS {
                    tips.push("Reduce on-slide text below 140 words; move detail into the script.".to_string());
                }
                questions.push("Is the smallest text on this slide readable from the back row?".to_string());
            }
            if slide.title.trim().is_empty() {
                tips.push("Add a short title that states this slide's takeaway.".to_string());
            }

            for generic in GENERIC_TIPS {
                if tips.len() >= 3 {
                    break;
                }
                tips.push(generic.to_string());
            }
            tips.truncate(6);

            for generic in GENERIC_QUESTIONS {
                if questions.len() >= 3 {
                    break;
                }
                questions.push(generic.to_string());
            }
            questions.truncate(3);

            SlideAdvice { slide_index: k + 1, tips, questions }
        })
        .collect()
}
