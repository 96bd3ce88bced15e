//! The evaluation report: every component of both scorecards, the full
//! effective configuration, and per-slide diagnostics with rehearsal
//! guidance. Serialization is deterministic: fixed field order, ordered
//! config map, and all scores rendered with six decimals (Rust's formatter
//! rounds ties to even).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::artifact::ArtifactScorecard;
use crate::config::Config;
use crate::deck::{DeckPackage, RequirementProfile};
use crate::delivery::{DeliveryScorecard, SlideAdvice};
use crate::error::{Error, Result};

/// A score serialized as a fixed six-decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score(pub f64);

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.0)
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse::<f64>().map(Score).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactReport {
    pub stability: Score,
    pub textual_fidelity: Score,
    pub visual_fidelity: Score,
    pub legibility: Score,
    pub aesthetics: Score,
    pub artifact_score: Score,
    pub frac_img: Score,
    pub frac_script: Score,
    pub runs_succeeded: usize,
    pub runs_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryReport {
    pub seconds_per_slide: Score,
    pub timing: Score,
    pub requirement: Score,
    pub narrative: Score,
    pub narrative_control: Score,
    pub narrative_diversity: Score,
    pub complementarity: Score,
    pub temporal: Score,
    pub attention: Score,
    pub rehearsal_readiness: Score,
    pub delivery_score: Score,
    pub marker_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideReport {
    pub index: usize,
    pub title: String,
    pub word_count: usize,
    pub penalty: u8,
    pub estimated_duration_s: Score,
    pub similarity: Score,
    pub tips: Vec<String>,
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub audience: String,
    pub duration_minutes: Score,
    pub config: BTreeMap<String, String>,
    pub artifact: ArtifactReport,
    pub delivery: DeliveryReport,
    pub slides: Vec<SlideReport>,
}

/// Assemble the report from computed scorecards and advice.
pub fn build_report(
    pkg: &DeckPackage,
    profile: &RequirementProfile,
    config: &Config,
    artifact: &ArtifactScorecard,
    delivery: &DeliveryScorecard,
    advice: &[SlideAdvice],
) -> Report {
    let slides = pkg
        .slides
        .iter()
        .enumerate()
        .map(|(k, slide)| SlideReport {
            index: slide.index,
            title: slide.title.clone(),
            word_count: slide.word_count,
            penalty: artifact.per_slide_penalty[k],
            estimated_duration_s: Score(delivery.per_slide_duration[k]),
            similarity: Score(delivery.per_slide_similarity[k]),
            tips: advice[k].tips.clone(),
            questions: advice[k].questions.clone(),
        })
        .collect();
    Report {
        audience: profile.audience.clone(),
        duration_minutes: Score(profile.duration_minutes),
        config: config.echo(),
        artifact: ArtifactReport {
            stability: Score(artifact.stability),
            textual_fidelity: Score(artifact.textual_fidelity),
            visual_fidelity: Score(artifact.visual_fidelity),
            legibility: Score(artifact.legibility),
            aesthetics: Score(artifact.aesthetics),
            artifact_score: Score(artifact.artifact_score),
            frac_img: Score(artifact.frac_img),
            frac_script: Score(artifact.frac_script),
            runs_succeeded: artifact.runs_succeeded,
            runs_total: artifact.runs_total,
        },
        delivery: DeliveryReport {
            seconds_per_slide: Score(delivery.seconds_per_slide),
            timing: Score(delivery.timing),
            requirement: Score(delivery.requirement),
            narrative: Score(delivery.narrative),
            narrative_control: Score(delivery.narrative_control),
            narrative_diversity: Score(delivery.narrative_diversity),
            complementarity: Score(delivery.complementarity),
            temporal: Score(delivery.temporal),
            attention: Score(delivery.attention),
            rehearsal_readiness: Score(delivery.rehearsal_readiness),
            delivery_score: Score(delivery.delivery_score),
            marker_count: delivery.marker_count,
        },
        slides,
    }
}

pub fn to_json(report: &Report) -> String {
    let mut json = serde_json::to_string_pretty(report).expect("report serialization");
    json.push('\n');
    json
}

pub fn from_json(text: &str) -> Result<Report> {
    serde_json::from_str(text).map_err(|e| Error::Schema {
        path: "report".to_string(),
        message: e.to_string(),
    })
}

/// Human-readable rendering with per-slide tables.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    out.push_str("deck evaluation report\n");
    out.push_str("======================\n\n");
    out.push_str(&format!(
        "audience: {}\nduration: {} minutes\n\n",
        report.audience, report.duration_minutes
    ));

    out.push_str("artifact scoreboard\n");
    out.push_str("-------------------\n");
    let a = &report.artifact;
    out.push_str(&format!(
        "stability        {}   ({}/{} runs)\n",
        a.stability, a.runs_succeeded, a.runs_total
    ));
    out.push_str(&format!("textual fidelity {}\n", a.textual_fidelity));
    out.push_str(&format!("visual fidelity  {}\n", a.visual_fidelity));
    out.push_str(&format!("legibility       {}\n", a.legibility));
    out.push_str(&format!("aesthetics       {}\n", a.aesthetics));
    out.push_str(&format!("artifact score   {}\n\n", a.artifact_score));

    out.push_str("delivery scoreboard\n");
    out.push_str("-------------------\n");
    let d = &report.delivery;
    out.push_str(&format!("seconds/slide    {}\n", d.seconds_per_slide));
    out.push_str(&format!("timing           {}\n", d.timing));
    out.push_str(&format!("requirement      {}\n", d.requirement));
    out.push_str(&format!("narrative        {}\n", d.narrative));
    out.push_str(&format!("complementarity  {}\n", d.complementarity));
    out.push_str(&format!("temporal         {}\n", d.temporal));
    out.push_str(&format!("attention        {}\n", d.attention));
    out.push_str(&format!("rehearsal ready  {}\n", d.rehearsal_readiness));
    out.push_str(&format!("delivery score   {}\n\n", d.delivery_score));

    out.push_str("per-slide diagnostics\n");
    out.push_str("---------------------\n");
    for slide in &report.slides {
        out.push_str(&format!(
            "slide {} ({}): words={} penalty={} duration={}s similarity={}\n",
            slide.index,
            if slide.title.is_empty() { "untitled" } else { &slide.title },
            slide.word_count,
            slide.penalty,
            slide.estimated_duration_s,
            slide.similarity
        ));
        for tip in &slide.tips {
            out.push_str(&format!("  tip: {tip}\n"));
        }
        for question in &slide.questions {
            out.push_str(&format!("  q:   {question}\n"));
        }
    }

    out.push_str("\neffective configuration\n");
    out.push_str("-----------------------\n");
    for (key, value) in &report.config {
        out.push_str(&format!("{key} = {value}\n"));
    }
    out
}

pub const CSV_HEADER: &str =
    "slide,title,word_count,penalty,duration_s,similarity,tips,questions";

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One row per slide with a fixed header.
pub fn render_csv(report: &Report) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for slide in &report.slides {
        let row = [
            slide.index.to_string(),
            csv_escape(&slide.title),
            slide.word_count.to_string(),
            slide.penalty.to_string(),
            slide.estimated_duration_s.to_string(),
            slide.similarity.to_string(),
            csv_escape(&slide.tips.join(" | ")),
            csv_escape(&slide.questions.join(" | ")),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        Report {
            audience: "researchers".to_string(),
            duration_minutes: Score(5.0),
            config: Config::default().echo(),
            artifact: ArtifactReport {
                stability: Score(1.0),
                textual_fidelity: Score(0.71),
                visual_fidelity: Score(0.5),
                legibility: Score(1.0),
                aesthetics: Score(0.9),
                artifact_score: Score(0.836),
                frac_img: Score(0.5),
                frac_script: Score(1.0),
                runs_succeeded: 5,
                runs_total: 5,
            },
            delivery: DeliveryReport {
                seconds_per_slide: Score(30.0),
                timing: Score(1.0),
                requirement: Score(1.0),
                narrative: Score(0.55),
                narrative_control: Score(0.91),
                narrative_diversity: Score(0.0),
                complementarity: Score(0.8),
                temporal: Score(0.75),
                attention: Score(1.0),
                rehearsal_readiness: Score(0.9),
                delivery_score: Score(0.77),
                marker_count: 5,
            },
            slides: vec![SlideReport {
                index: 1,
                title: "Intro, with a comma".to_string(),
                word_count: 42,
                penalty: 0,
                estimated_duration_s: Score(28.0),
                similarity: Score(0.41),
                tips: vec!["tip one".to_string(), "tip two".to_string(), "tip three".to_string()],
                questions: vec!["q1?".to_string(), "q2?".to_string(), "q3?".to_string()],
            }],
        }
    }

    #[test]
    fn json_roundtrip() {
        let report = sample_report();
        let json = to_json(&report);
        let back = from_json(&json).expect("parse");
        assert_eq!(report, back);
    }

    #[test]
    fn scores_have_six_decimals() {
        let json = to_json(&sample_report());
        assert!(json.contains("\"0.836000\""));
        assert!(json.contains("\"30.000000\""));
    }

    #[test]
    fn csv_has_fixed_header_and_one_row_per_slide() {
        let csv = render_csv(&sample_report());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let csv = render_csv(&sample_report());
        assert!(csv.contains("\"Intro, with a comma\""));
    }

    #[test]
    fn text_rendering_lists_tips() {
        let text = render_text(&sample_report());
        assert!(text.contains("artifact score   0.836000"));
        assert!(text.contains("tip: tip one"));
        assert!(text.contains("q:   q3?"));
        assert!(text.contains("k1 = 1.500000"));
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = to_json(&sample_report());
        let b = to_json(&sample_report());
        assert_eq!(a, b);
    }
}
