//! Runtime configuration: one `key = value` file covering retrieval
//! parameters, both weight sets, the marker lexicon, and the orchestration
//! thresholds. Unknown keys are rejected; every constraint of the owned
//! parameter types is re-validated after parsing. Reports embed the full
//! effective configuration so results are reproducible from the report
//! alone.

use std::collections::BTreeMap;
use std::path::Path;

use crate::artifact::ArtifactWeights;
use crate::delivery::{DeliveryWeights, DEFAULT_MARKERS};
use crate::error::{Error, Result};
use crate::orchestration::{EffectSet, SecondaryEffect, DEFAULT_OVERRUN_THRESHOLD};
use crate::retrieval::RetrievalParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub retrieval: RetrievalParams,
    pub artifact: ArtifactWeights,
    pub delivery: DeliveryWeights,
    pub markers: Vec<String>,
    pub overrun_threshold: f64,
    pub summarizer_cap: usize,
    pub effects: EffectSet,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            retrieval: RetrievalParams::default(),
            artifact: ArtifactWeights::default(),
            delivery: DeliveryWeights::default(),
            markers: DEFAULT_MARKERS.iter().map(|m| m.to_string()).collect(),
            overrun_threshold: DEFAULT_OVERRUN_THRESHOLD,
            summarizer_cap: 160,
            effects: EffectSet {
                structural_recognition: true,
                secondary: Default::default(),
            },
        }
    }
}

impl Config {
    /// Parse `key = value` lines over the current values. Blank lines and
    /// `#` comments are skipped.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        self.validate()
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Config::default();
        config.apply_str(&text)?;
        Ok(config)
    }

    /// Overlay a (possibly partial) file onto the current values.
    pub fn overlay(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_str(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("key `{key}`: `{value}` is not a number")))
        };
        let integer = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("key `{key}`: `{value}` is not an integer")))
        };
        match key {
            "k1" => self.retrieval.k1 = float()?,
            "b" => self.retrieval.b = float()?,
            "alpha_tree" => self.retrieval.alpha_tree = float()?,
            "beta_tree" => self.retrieval.beta_tree = float()?,
            "gamma_tree" => self.retrieval.gamma_tree = float()?,
            "delta_tree" => self.retrieval.delta_tree = float()?,
            "m0" => self.retrieval.m0 = integer()?,
            "l_max" => self.retrieval.l_max = integer()?,
            "top_k" => self.retrieval.top_k = integer()?,
            "omega_rouge" => self.artifact.omega_rouge = float()?,
            "omega_bert" => self.artifact.omega_bert = float()?,
            "alpha_stab" => self.artifact.alpha_stab = float()?,
            "alpha_fid" => self.artifact.alpha_fid = float()?,
            "alpha_read" => self.artifact.alpha_read = float()?,
            // beta is shared by the artifact and delivery aggregations.
            "beta" => {
                self.artifact.beta = float()?;
                self.delivery.beta = self.artifact.beta;
            }
            "gamma" => self.artifact.gamma = float()?,
            "eta" => self.delivery.eta = float()?,
            "sim_low" => self.delivery.sim_low = float()?,
            "sim_high" => self.delivery.sim_high = float()?,
            "epsilon" => self.delivery.epsilon = float()?,
            "std_max" => {
                self.delivery.std_max = if value == "auto" { None } else { Some(float()?) };
            }
            "omega_requirement" => self.delivery.omega_requirement = float()?,
            "omega_narrative" => self.delivery.omega_narrative = float()?,
            "omega_complementarity" => self.delivery.omega_complementarity = float()?,
            "omega_attention" => self.delivery.omega_attention = float()?,
            "omega_temporal" => self.delivery.omega_temporal = float()?,
            "omega_rehearsal" => self.delivery.omega_rehearsal = float()?,
            "omega_stab" => self.delivery.omega_stab = float()?,
            "omega_fid" => self.delivery.omega_fid = float()?,
            "markers" => {
                let markers: Vec<String> = value
                    .split(',')
                    .map(|m| m.trim().to_string())
                    .filter(|m| !m.is_empty())
                    .collect();
                if markers.is_empty() {
                    return Err(Error::Config("markers list must not be empty".to_string()));
                }
                self.markers = markers;
            }
            "overrun_threshold" => self.overrun_threshold = float()?,
            "summarizer_cap" => self.summarizer_cap = integer()?,
            "effects" => {
                let mut effects = EffectSet::default();
                for item in value.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()) {
                    match item {
                        "structural_recognition" => effects.structural_recognition = true,
                        "keynote" => {
                            effects.secondary.insert(SecondaryEffect::Keynote);
                        }
                        "auto_layout" => {
                            effects.secondary.insert(SecondaryEffect::AutoLayout);
                        }
                        "motion" => {
                            effects.secondary.insert(SecondaryEffect::Motion);
                        }
                        "background" => {
                            effects.secondary.insert(SecondaryEffect::Background);
                        }
                        other => {
                            return Err(Error::Config(format!("unknown effect `{other}`")));
                        }
                    }
                }
                self.effects = effects;
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.retrieval.validate()?;
        self.artifact.validate()?;
        self.delivery.validate()?;
        if !(self.overrun_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "overrun_threshold must be >= 0, got {}",
                self.overrun_threshold
            )));
        }
        if self.summarizer_cap == 0 {
            return Err(Error::Config("summarizer_cap must be > 0".to_string()));
        }
        if self.markers.is_empty() {
            return Err(Error::Config("markers list must not be empty".to_string()));
        }
        Ok(())
    }

    /// The full effective configuration as ordered key/value pairs, for
    /// embedding into reports. Floats use six decimals.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let f = |v: f64| format!("{v:.6}");
        let mut map = BTreeMap::new();
        map.insert("k1".into(), f(self.retrieval.k1));
        map.insert("b".into(), f(self.retrieval.b));
        map.insert("alpha_tree".into(), f(self.retrieval.alpha_tree));
        map.insert("beta_tree".into(), f(self.retrieval.beta_tree));
        map.insert("gamma_tree".into(), f(self.retrieval.gamma_tree));
        map.insert("delta_tree".into(), f(self.retrieval.delta_tree));
        map.insert("m0".into(), self.retrieval.m0.to_string());
        map.insert("l_max".into(), self.retrieval.l_max.to_string());
        map.insert("top_k".into(), self.retrieval.top_k.to_string());
        map.insert("omega_rouge".into(), f(self.artifact.omega_rouge));
        map.insert("omega_bert".into(), f(self.artifact.omega_bert));
        map.insert("alpha_stab".into(), f(self.artifact.alpha_stab));
        map.insert("alpha_fid".into(), f(self.artifact.alpha_fid));
        map.insert("alpha_read".into(), f(self.artifact.alpha_read));
        map.insert("beta".into(), f(self.artifact.beta));
        map.insert("gamma".into(), f(self.artifact.gamma));
        map.insert("eta".into(), f(self.delivery.eta));
        map.insert("sim_low".into(), f(self.delivery.sim_low));
        map.insert("sim_high".into(), f(self.delivery.sim_high));
        map.insert("epsilon".into(), format!("{:e}", self.delivery.epsilon));
        map.insert(
            "std_max".into(),
            self.delivery.std_max.map(f).unwrap_or_else(|| "auto".into()),
        );
        map.insert("omega_requirement".into(), f(self.delivery.omega_requirement));
        map.insert("omega_narrative".into(), f(self.delivery.omega_narrative));
        map.insert("omega_complementarity".into(), f(self.delivery.omega_complementarity));
        map.insert("omega_attention".into(), f(self.delivery.omega_attention));
        map.insert("omega_temporal".into(), f(self.delivery.omega_temporal));
        map.insert("omega_rehearsal".into(), f(self.delivery.omega_rehearsal));
        map.insert("omega_stab".into(), f(self.delivery.omega_stab));
        map.insert("omega_fid".into(), f(self.delivery.omega_fid));
        map.insert("markers".into(), self.markers.join(", "));
        map.insert("overrun_threshold".into(), f(self.overrun_threshold));
        map.insert("summarizer_cap".into(), self.summarizer_cap.to_string());
        let mut effects: Vec<&str> = Vec::new();
        if self.effects.structural_recognition {
            effects.push("structural_recognition");
        }
        for e in &self.effects.secondary {
            effects.push(match e {
                SecondaryEffect::Keynote => "keynote",
                SecondaryEffect::AutoLayout => "auto_layout",
                SecondaryEffect::Motion => "motion",
                SecondaryEffect::Background => "background",
            });
        }
        map.insert("effects".into(), effects.join(", "));
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Config::default().validate().expect("defaults");
    }

    #[test]
    fn parse_overrides() {
        let mut c = Config::default();
        c.apply_str("top_k = 7\nk1 = 1.2\nmarkers = so, anyway\nstd_max = 15\n")
            .expect("parse");
        assert_eq!(c.retrieval.top_k, 7);
        assert_eq!(c.retrieval.k1, 1.2);
        assert_eq!(c.markers, vec!["so".to_string(), "anyway".to_string()]);
        assert_eq!(c.delivery.std_max, Some(15.0));
    }

    #[test]
    fn unknown_key_rejected() {
        let mut c = Config::default();
        let err = c.apply_str("no_such_key = 1\n").expect_err("unknown key");
        assert!(err.to_string().contains("no_such_key"));
    }

    #[test]
    fn constraint_violations_rejected_on_load() {
        let mut c = Config::default();
        assert!(c.apply_str("b = 1.5\n").is_err());
        let mut c = Config::default();
        assert!(c.apply_str("omega_rouge = 0.9\n").is_err()); // sum != 1
        let mut c = Config::default();
        assert!(c.apply_str("sim_low = 0.8\nsim_high = 0.2\n").is_err());
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let mut c = Config::default();
        c.apply_str("# a comment\n\ntop_k = 3\n").expect("parse");
        assert_eq!(c.retrieval.top_k, 3);
    }

    #[test]
    fn beta_is_shared() {
        let mut c = Config::default();
        c.apply_str("beta = 0.9\n").expect("parse");
        assert_eq!(c.artifact.beta, 0.9);
        assert_eq!(c.delivery.beta, 0.9);
    }

    #[test]
    fn effects_list_parsed() {
        let mut c = Config::default();
        c.apply_str("effects = structural_recognition, keynote, motion\n").expect("parse");
        assert!(c.effects.structural_recognition);
        assert_eq!(c.effects.secondary.len(), 2);
        let mut c = Config::default();
        assert!(c.apply_str("effects = sparkles\n").is_err());
    }

    #[test]
    fn echo_is_deterministic_and_complete() {
        let a = Config::default().echo();
        let b = Config::default().echo();
        assert_eq!(a, b);
        for key in ["k1", "top_k", "omega_rouge", "markers", "overrun_threshold", "effects"] {
            assert!(a.contains_key(key), "missing {key}");
        }
    }
}
