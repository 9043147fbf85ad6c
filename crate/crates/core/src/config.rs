use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::KinematicsConfig;
use crate::scorer::MatchMode;
use crate::segmenter::SegmenterConfig;

/// Every tunable of a run. Config files are TOML with these keys; unknown
/// keys are rejected and missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub fps: f64,
    pub conf_threshold: f64,
    pub aspect_correct: bool,
    pub theta_head: f64,
    pub theta_hand: f64,
    pub gap_tolerance: f64,
    pub carry_forward: bool,
    pub min_duration: f64,
    pub matching: MatchMode,
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let k = KinematicsConfig::default();
        let s = SegmenterConfig::default();
        PipelineConfig {
            fps: 30.0,
            conf_threshold: k.conf_threshold,
            aspect_correct: k.aspect_correct,
            theta_head: s.theta_head,
            theta_hand: s.theta_hand,
            gap_tolerance: s.gap_tolerance,
            carry_forward: s.carry_forward,
            min_duration: 1.0,
            matching: MatchMode::Greedy,
            jobs: 1,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub fps: Option<f64>,
    pub conf_threshold: Option<f64>,
    pub theta_head: Option<f64>,
    pub theta_hand: Option<f64>,
    pub gap_tolerance: Option<f64>,
    pub min_duration: Option<f64>,
    pub matching: Option<MatchMode>,
    pub jobs: Option<usize>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Defaults, then the optional file, then the overrides; validated.
    pub fn resolve(file: Option<&Path>, overrides: &ConfigOverrides) -> Result<Self> {
        let mut cfg = match file {
            Some(path) => Self::from_toml(&std::fs::read_to_string(path)?)?,
            None => Self::default(),
        };
        let o = overrides;
        macro_rules! apply {
            ($($field:ident),*) => { $( if let Some(v) = o.$field { cfg.$field = v; } )* };
        }
        apply!(
            fps,
            conf_threshold,
            theta_head,
            theta_hand,
            gap_tolerance,
            min_duration,
            matching,
            jobs
        );
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be positive, got {}", self.fps)));
        }
        self.kinematics().validate()?;
        self.segmenter().validate()?;
        if !(self.min_duration.is_finite() && self.min_duration >= 0.0) {
            return Err(Error::Config(format!(
                "min_duration must be >= 0, got {}",
                self.min_duration
            )));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn kinematics(&self) -> KinematicsConfig {
        KinematicsConfig {
            conf_threshold: self.conf_threshold,
            aspect_correct: self.aspect_correct,
        }
    }

    pub fn segmenter(&self) -> SegmenterConfig {
        SegmenterConfig {
            theta_head: self.theta_head,
            theta_hand: self.theta_hand,
            gap_tolerance: self.gap_tolerance,
            carry_forward: self.carry_forward,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn file_values_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "theta_head = 30.0\nfps = 25.0\nmatching = \"optimal\"\n").unwrap();
        let overrides = ConfigOverrides {
            fps: Some(10.0),
            ..Default::default()
        };
        let cfg = PipelineConfig::resolve(Some(&path), &overrides).unwrap();
        assert_eq!(cfg.theta_head, 30.0);
        assert_eq!(cfg.fps, 10.0);
        assert_eq!(cfg.matching, MatchMode::Optimal);
        assert_eq!(cfg.theta_hand, 40.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            PipelineConfig::from_toml("theta = 3.0"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn negative_threshold_rejected() {
        let overrides = ConfigOverrides {
            theta_head: Some(-5.0),
            ..Default::default()
        };
        assert!(PipelineConfig::resolve(None, &overrides).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PipelineConfig {
            gap_tolerance: 0.25,
            ..Default::default()
        };
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
