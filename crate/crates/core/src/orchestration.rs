//! Deterministic delivery machinery: the per-node pacing state machine,
//! effect-conflict gating, first-order sequential augmentation with style
//! inheritance, and structural render validation.
//!
//! The pacing timer walks Silent -> Cautionary -> Compress -> Terminate as
//! estimated narration consumes a fixed budget: Cautionary once remaining
//! time drops to half or below, Compress once the budget is exhausted,
//! Terminate past the overrun threshold. States never move backward at a
//! fixed budget because consumption only grows.
//!
//! Gating admits at most one primary visual effect per slide with priority
//! ImageFocus > DataVisualization > TextToDiagram, and only when the
//! enabled effect set includes structural recognition.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::deck::{RequirementProfile, Slide, VisualKind};

/// Slide word count above which text-to-diagram triggers; matches the
/// legibility threshold so there is one notion of "too much text".
pub const VERBOSITY_THRESHOLD: usize = crate::artifact::MAX_SLIDE_WORDS;

/// Fraction past the budget at which generation is cut off.
pub const DEFAULT_OVERRUN_THRESHOLD: f64 = 0.2;

/// A fixed narration budget and the time consumed against it.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBudget {
    pub node_id: usize,
    pub budget_seconds: f64,
    consumed_seconds: f64,
}

impl NodeBudget {
    pub fn new(node_id: usize, budget_seconds: f64) -> Self {
        NodeBudget { node_id, budget_seconds, consumed_seconds: 0.0 }
    }

    pub fn consumed_seconds(&self) -> f64 {
        self.consumed_seconds
    }

    pub fn remaining_seconds(&self) -> f64 {
        self.budget_seconds - self.consumed_seconds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimerState {
    Silent,
    Cautionary,
    Compress,
    Terminate,
}

impl fmt::Display for TimerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TimerState::Silent => "silent",
            TimerState::Cautionary => "cautionary",
            TimerState::Compress => "compress",
            TimerState::Terminate => "terminate",
        };
        f.write_str(s)
    }
}

/// Current state for a budget at its present consumption.
pub fn timer_state(budget: &NodeBudget, overrun_threshold: f64) -> TimerState {
    let remaining = budget.remaining_seconds();
    if remaining > budget.budget_seconds / 2.0 {
        TimerState::Silent
    } else if remaining > 0.0 {
        TimerState::Cautionary
    } else if budget.consumed_seconds <= budget.budget_seconds * (1.0 + overrun_threshold) {
        TimerState::Compress
    } else {
        TimerState::Terminate
    }
}

/// Add a narration estimate to the budget and report the resulting state.
pub fn timer_update(
    budget: &mut NodeBudget,
    new_estimate_seconds: f64,
    overrun_threshold: f64,
) -> TimerState {
    budget.consumed_seconds += new_estimate_seconds;
    timer_state(budget, overrun_threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimaryEffect {
    ImageFocus,
    DataVisualization,
    TextToDiagram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondaryEffect {
    Keynote,
    AutoLayout,
    Motion,
    Background,
}

/// Which effects the caller has switched on. Secondary effects pass through
/// gating unchanged; primary effects require structural recognition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EffectSet {
    pub structural_recognition: bool,
    pub secondary: BTreeSet<SecondaryEffect>,
}

/// Normalized rectangle in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Roi {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Roi { x0, y0, x1, y1 }
    }

    pub fn is_normalized(&self) -> bool {
        (0.0..=1.0).contains(&self.x0)
            && (0.0..=1.0).contains(&self.y0)
            && (0.0..=1.0).contains(&self.x1)
            && (0.0..=1.0).contains(&self.y1)
            && self.x0 < self.x1
            && self.y0 < self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    fn intersection_area(&self, other: &Roi) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        w.max(0.0) * h.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FocusTemplateKind {
    LeftRightSplit,
    Grid2x2,
}

/// A named ROI layout; the rectangles tile the unit square exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusTemplate {
    pub kind: FocusTemplateKind,
    pub rois: Vec<Roi>,
}

impl FocusTemplate {
    pub fn new(kind: FocusTemplateKind) -> Self {
        let rois = match kind {
            FocusTemplateKind::LeftRightSplit => vec![
                Roi::new(0.0, 0.0, 0.5, 1.0),
                Roi::new(0.5, 0.0, 1.0, 1.0),
            ],
            FocusTemplateKind::Grid2x2 => vec![
                Roi::new(0.0, 0.0, 0.5, 0.5),
                Roi::new(0.5, 0.0, 1.0, 0.5),
                Roi::new(0.0, 0.5, 0.5, 1.0),
                Roi::new(0.5, 0.5, 1.0, 1.0),
            ],
        };
        FocusTemplate { kind, rois }
    }

    /// Union covers the unit square and interiors are pairwise disjoint.
    pub fn tiles_unit_square(&self) -> bool {
        let total: f64 = self.rois.iter().map(|r| r.area()).sum();
        if (total - 1.0).abs() > 1e-12 {
            return false;
        }
        for (i, a) in self.rois.iter().enumerate() {
            if !a.is_normalized() {
                return false;
            }
            for b in &self.rois[i + 1..] {
                if a.intersection_area(b) > 1e-12 {
                    return false;
                }
            }
        }
        true
    }
}

/// One slide's augmentation plan: at most one primary effect; a focus
/// template exists exactly when the primary effect is image focus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationDecision {
    pub slide_index: usize,
    pub primary_effect: Option<PrimaryEffect>,
    pub secondary_effects: BTreeSet<SecondaryEffect>,
    pub focus_template: Option<FocusTemplate>,
}

impl AugmentationDecision {
    /// Structural well-formedness: template iff image focus, ROIs inside
    /// the unit square.
    pub fn is_well_formed(&self) -> bool {
        match (&self.primary_effect, &self.focus_template) {
            (Some(PrimaryEffect::ImageFocus), Some(t)) => t.rois.iter().all(Roi::is_normalized),
            (Some(PrimaryEffect::ImageFocus), None) => false,
            (_, Some(_)) => false,
            (_, None) => true,
        }
    }
}

fn has_figure(slide: &Slide) -> bool {
    slide.has_visual_kind(&[VisualKind::Image, VisualKind::Figure])
}

fn has_table(slide: &Slide) -> bool {
    slide.has_visual_kind(&[VisualKind::Table])
}

fn is_verbose(slide: &Slide) -> bool {
    slide.word_count > VERBOSITY_THRESHOLD
}

fn trigger_holds(effect: PrimaryEffect, slide: &Slide) -> bool {
    match effect {
        PrimaryEffect::ImageFocus => has_figure(slide),
        PrimaryEffect::DataVisualization => has_table(slide),
        PrimaryEffect::TextToDiagram => is_verbose(slide),
    }
}

fn default_template_for(slide: &Slide) -> FocusTemplate {
    let image_count = slide
        .visual_elements
        .iter()
        .filter(|v| matches!(v.kind, VisualKind::Image | VisualKind::Figure))
        .count();
    if image_count >= 2 {
        FocusTemplate::new(FocusTemplateKind::Grid2x2)
    } else {
        FocusTemplate::new(FocusTemplateKind::LeftRightSplit)
    }
}

/// Deterministic gate: pick the highest-priority primary effect whose
/// trigger holds (none when structural recognition is disabled); enabled
/// secondary effects pass through unchanged.
pub fn gate_effects(slide: &Slide, enabled: &EffectSet) -> AugmentationDecision {
    let primary = if enabled.structural_recognition {
        if has_figure(slide) {
            Some(PrimaryEffect::ImageFocus)
        } else if has_table(slide) {
            Some(PrimaryEffect::DataVisualization)
        } else if is_verbose(slide) {
            Some(PrimaryEffect::TextToDiagram)
        } else {
            None
        }
    } else {
        None
    };
    let focus_template = match primary {
        Some(PrimaryEffect::ImageFocus) => Some(default_template_for(slide)),
        _ => None,
    };
    AugmentationDecision {
        slide_index: slide.index,
        primary_effect: primary,
        secondary_effects: enabled.secondary.clone(),
        focus_template,
    }
}

/// Compact style descriptor handed from one slide to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleSummary {
    pub descriptor: String,
    pub deck_level: bool,
}

impl StyleSummary {
    pub fn deck(descriptor: impl Into<String>) -> Self {
        StyleSummary { descriptor: descriptor.into(), deck_level: true }
    }
}

/// The full first-order state a planner may read: nothing beyond the
/// current slide, the profile, the deck style, and the previous summary.
pub struct SlideState<'a> {
    pub source: &'a Slide,
    pub profile: &'a RequirementProfile,
    pub deck_style: &'a StyleSummary,
    pub prev_style: &'a StyleSummary,
}

/// A planner proposal before gating. Unlike [`AugmentationDecision`] it can
/// be invalid (several primaries, missing triggers); gating repairs it.
#[derive(Debug, Clone, Default)]
pub struct ProposedDecision {
    pub primary_effects: Vec<PrimaryEffect>,
    pub secondary_effects: BTreeSet<SecondaryEffect>,
    pub focus_template: Option<FocusTemplate>,
}

pub trait Planner {
    fn plan(&self, state: &SlideState<'_>) -> ProposedDecision;
}

/// Proposes exactly what the gate would decide for its configured effect
/// set. The set is planner configuration, not slide state, so the
/// first-order property is preserved.
pub struct RuleBasedPlanner {
    pub enabled: EffectSet,
}

impl Planner for RuleBasedPlanner {
    fn plan(&self, state: &SlideState<'_>) -> ProposedDecision {
        let gated = gate_effects(state.source, &self.enabled);
        ProposedDecision {
            primary_effects: gated.primary_effect.into_iter().collect(),
            secondary_effects: gated.secondary_effects,
            focus_template: gated.focus_template,
        }
    }
}

/// A planner that never proposes anything.
pub struct NullPlanner;

impl Planner for NullPlanner {
    fn plan(&self, _: &SlideState<'_>) -> ProposedDecision {
        ProposedDecision::default()
    }
}

/// An augmented slide: the source content plus its executed decision.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSlide {
    pub slide: Slide,
    pub decision: AugmentationDecision,
}

pub trait Renderer {
    fn render(&self, source: &Slide, decision: &AugmentationDecision) -> AugmentedSlide;
}

/// Keeps the slide content untouched and attaches the decision.
pub struct IdentityRenderer;

impl Renderer for IdentityRenderer {
    fn render(&self, source: &Slide, decision: &AugmentationDecision) -> AugmentedSlide {
        AugmentedSlide { slide: source.clone(), decision: decision.clone() }
    }
}

pub trait StyleSummarizer {
    fn summarize(&self, slide: &AugmentedSlide) -> StyleSummary;
}

/// Descriptor built from the decision and slide shape; deterministic.
pub struct DescriptorSummarizer;

impl StyleSummarizer for DescriptorSummarizer {
    fn summarize(&self, slide: &AugmentedSlide) -> StyleSummary {
        let primary = slide
            .decision
            .primary_effect
            .map(|e| format!("{e:?}"))
            .unwrap_or_else(|| "None".to_string());
        let secondary: Vec<String> =
            slide.decision.secondary_effects.iter().map(|e| format!("{e:?}")).collect();
        StyleSummary {
            descriptor: format!(
                "slide={} primary={} secondary=[{}] titled={}",
                slide.slide.index,
                primary,
                secondary.join(","),
                !slide.slide.title.trim().is_empty()
            ),
            deck_level: false,
        }
    }
}

/// Force a proposal through the gate's invariants. Valid proposals pass
/// unchanged (secondaries intersected with the enabled set); anything
/// invalid is replaced by the deterministic gate decision.
fn sanitize(
    proposal: ProposedDecision,
    slide: &Slide,
    enabled: &EffectSet,
) -> AugmentationDecision {
    let valid = proposal.primary_effects.len() <= 1
        && proposal
            .primary_effects
            .first()
            .map(|&e| enabled.structural_recognition && trigger_holds(e, slide))
            .unwrap_or(true)
        && match (proposal.primary_effects.first(), &proposal.focus_template) {
            (Some(PrimaryEffect::ImageFocus), Some(t)) => t.rois.iter().all(Roi::is_normalized),
            (Some(PrimaryEffect::ImageFocus), None) => false,
            (_, Some(_)) => false,
            (_, None) => true,
        };
    if valid {
        AugmentationDecision {
            slide_index: slide.index,
            primary_effect: proposal.primary_effects.first().copied(),
            secondary_effects: proposal
                .secondary_effects
                .intersection(&enabled.secondary)
                .copied()
                .collect(),
            focus_template: proposal.focus_template,
        }
    } else {
        gate_effects(slide, enabled)
    }
}

/// Sequential augmentation with style inheritance. The chain starts from
/// the deck-level summary; each step sees only its own four-field state, so
/// slides after position k can never influence decision k.
pub fn markov_sequence(
    slides: &[Slide],
    profile: &RequirementProfile,
    deck_style: &StyleSummary,
    enabled: &EffectSet,
    planner: &dyn Planner,
    renderer: &dyn Renderer,
    summarizer: &dyn StyleSummarizer,
) -> Vec<AugmentedSlide> {
    let mut prev_style = deck_style.clone();
    let mut out = Vec::with_capacity(slides.len());
    for slide in slides {
        let state = SlideState { source: slide, profile, deck_style, prev_style: &prev_style };
        let decision = sanitize(planner.plan(&state), slide, enabled);
        let rendered = renderer.render(slide, &decision);
        prev_style = summarizer.summarize(&rendered);
        out.push(rendered);
    }
    out
}

/// One structural problem found in an augmented deck.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderIssue {
    pub slide_index: usize,
    pub field: String,
    pub message: String,
}

pub trait RenderValidator {
    fn validate(&self, deck: &[AugmentedSlide]) -> Vec<RenderIssue>;
}

/// Checks decision well-formedness: ROIs inside the unit square and no
/// template without image focus.
pub struct StructuralValidator;

impl RenderValidator for StructuralValidator {
    fn validate(&self, deck: &[AugmentedSlide]) -> Vec<RenderIssue> {
        let mut issues = Vec::new();
        for item in deck {
            let d = &item.decision;
            if let Some(template) = &d.focus_template {
                if d.primary_effect != Some(PrimaryEffect::ImageFocus) {
                    issues.push(RenderIssue {
                        slide_index: d.slide_index,
                        field: "focus_template".to_string(),
                        message: "template present without image focus".to_string(),
                    });
                }
                for (i, roi) in template.rois.iter().enumerate() {
                    if !roi.is_normalized() {
                        issues.push(RenderIssue {
                            slide_index: d.slide_index,
                            field: format!("focus_template.rois[{i}]"),
                            message: format!(
                                "roi [{}, {}, {}, {}] outside the unit square",
                                roi.x0, roi.y0, roi.x1, roi.y1
                            ),
                        });
                    }
                }
            } else if d.primary_effect == Some(PrimaryEffect::ImageFocus) {
                issues.push(RenderIssue {
                    slide_index: d.slide_index,
                    field: "focus_template".to_string(),
                    message: "image focus without a template".to_string(),
                });
            }
        }
        issues
    }
}

/// Run the validator over an augmented deck.
pub fn validate_render(deck: &[AugmentedSlide], validator: &dyn RenderValidator) -> Vec<RenderIssue> {
    validator.validate(deck)
}

/// Minimal repair: re-gate every flagged slide, then re-validate, up to
/// `max_rounds` times. Returns whatever issues remain.
pub fn repair_deck(
    deck: &mut [AugmentedSlide],
    validator: &dyn RenderValidator,
    enabled: &EffectSet,
    max_rounds: usize,
) -> Vec<RenderIssue> {
    let mut issues = validator.validate(deck);
    for _ in 0..max_rounds {
        if issues.is_empty() {
            return issues;
        }
        for issue in &issues {
            if let Some(item) = deck.iter_mut().find(|s| s.decision.slide_index == issue.slide_index)
            {
                item.decision = gate_effects(&item.slide, enabled);
            }
        }
        issues = validator.validate(deck);
    }
    issues
}
