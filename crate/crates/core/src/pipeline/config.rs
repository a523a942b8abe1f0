//! Analysis configuration: a single TOML file describing inputs, outcome
//! construction, adjustments, subgroups, and outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adjust::SvtThreshold;
use crate::error::{Error, Result};
use crate::netmat::NetworkFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    /// Analyze the observed networks directly.
    Levels,
    /// Analyze post - pre changes; requires a pre-period network per arm.
    Did,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdjustMethod {
    #[default]
    None,
    Reduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum DenoiseMethod {
    #[default]
    None,
    Svt {
        /// Fixed cutoff; automatic when absent.
        tau: Option<f64>,
    },
}

impl DenoiseMethod {
    pub fn svt_threshold(&self) -> Option<SvtThreshold> {
        match self {
            DenoiseMethod::None => None,
            DenoiseMethod::Svt { tau: Some(t) } => Some(SvtThreshold::Fixed(*t)),
            DenoiseMethod::Svt { tau: None } => Some(SvtThreshold::Auto),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmInput {
    pub path: PathBuf,
    pub format: NetworkFormat,
    /// Label manifest (required for edge lists).
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Pre-period network for DiD outcomes (same format and manifest).
    #[serde(default)]
    pub pre_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub name: String,
    /// Within-group expression `attr=value`.
    #[serde(default)]
    pub select: Option<String>,
    /// Cross-group left/right expressions (both required together).
    #[serde(default)]
    pub left: Option<String>,
    #[serde(default)]
    pub right: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Inputs {
    pub arm1: ArmInput,
    pub arm0: ArmInput,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    pub directory: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ReportOptions {
    /// Grid for the DTE curve; derived from the outcome supports when absent.
    #[serde(default)]
    pub dte_grid: Option<Vec<f64>>,
    /// Emit exact sharp sets when the instance is small enough (n <= 8 for
    /// the full set, min/max only for 9..10).
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub inputs: Inputs,
    pub outcome: OutcomeKind,
    #[serde(default)]
    pub adjust: AdjustMethod,
    #[serde(default)]
    pub denoise: DenoiseMethod,
    /// Agent attribute CSV, required when subgroups are declared.
    #[serde(default)]
    pub attributes: Option<PathBuf>,
    #[serde(default)]
    pub subgroups: Vec<SubgroupSpec>,
    pub output: OutputSpec,
    #[serde(default)]
    pub report: ReportOptions,
}

impl AnalysisConfig {
    /// Parses the TOML text, resolving relative paths against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: AnalysisConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.resolve_paths(base_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        for arm in [&mut self.inputs.arm1, &mut self.inputs.arm0] {
            resolve(&mut arm.path);
            if let Some(l) = arm.labels.as_mut() {
                resolve(l);
            }
            if let Some(p) = arm.pre_path.as_mut() {
                resolve(p);
            }
        }
        if let Some(a) = self.attributes.as_mut() {
            resolve(a);
        }
        resolve(&mut self.output.directory);
    }

    fn validate(&self) -> Result<()> {
        for (name, arm) in [("arm1", &self.inputs.arm1), ("arm0", &self.inputs.arm0)] {
            if !arm.path.exists() {
                return Err(Error::Config(format!(
                    "{name} input {} does not exist",
                    arm.path.display()
                )));
            }
            if let Some(l) = &arm.labels {
                if !l.exists() {
                    return Err(Error::Config(format!(
                        "{name} label manifest {} does not exist",
                        l.display()
                    )));
                }
            }
            match (&self.outcome, &arm.pre_path) {
                (OutcomeKind::Did, None) => {
                    return Err(Error::Config(format!(
                        "did outcome requires a pre-period network for {name}"
                    )))
                }
                (OutcomeKind::Did, Some(p)) if !p.exists() => {
                    return Err(Error::Config(format!(
                        "{name} pre-period input {} does not exist",
                        p.display()
                    )))
                }
                _ => {}
            }
        }
        if !self.subgroups.is_empty() {
            match &self.attributes {
                None => {
                    return Err(Error::Config(
                        "subgroups require an attributes file".into(),
                    ))
                }
                Some(a) if !a.exists() => {
                    return Err(Error::Config(format!(
                        "attributes file {} does not exist",
                        a.display()
                    )))
                }
                _ => {}
            }
        }
        for sg in &self.subgroups {
            let ok = matches!(
                (&sg.select, &sg.left, &sg.right),
                (Some(_), None, None) | (None, Some(_), Some(_))
            );
            if !ok {
                return Err(Error::Config(format!(
                    "subgroup {:?} must set either `select` or both `left` and `right`",
                    sg.name
                )));
            }
            if sg.name.is_empty()
                || !sg
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::Config(format!(
                    "subgroup name {:?} must be nonempty and [A-Za-z0-9_-]",
                    sg.name
                )));
            }
        }
        if let Some(grid) = &self.report.dte_grid {
            if grid.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Config("report.dte_grid must be sorted".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_minimal_config() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a1.csv", "a0.csv"] {
            let mut f = std::fs::File::create(dir.path().join(name)).unwrap();
            f.write_all(b"0,1\n1,0\n").unwrap();
        }
        let text = r#"
outcome = "levels"

[inputs.arm1]
path = "a1.csv"
format = "dense_csv"

[inputs.arm0]
path = "a0.csv"
format = "dense_csv"

[output]
directory = "out"
"#;
        let config = AnalysisConfig::from_toml(text, dir.path()).unwrap();
        assert_eq!(config.outcome, OutcomeKind::Levels);
        assert_eq!(config.adjust, AdjustMethod::None);
        assert!(config.inputs.arm1.path.is_absolute() || config.inputs.arm1.path.exists());
    }

    #[test]
    fn did_requires_pre_periods() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a1.csv", "a0.csv"] {
            let mut f = std::fs::File::create(dir.path().join(name)).unwrap();
            f.write_all(b"0,1\n1,0\n").unwrap();
        }
        let text = r#"
outcome = "did"

[inputs.arm1]
path = "a1.csv"
format = "dense_csv"

[inputs.arm0]
path = "a0.csv"
format = "dense_csv"

[output]
directory = "out"
"#;
        let err = AnalysisConfig::from_toml(text, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn denoise_svt_with_tau() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a1.csv", "a0.csv"] {
            let mut f = std::fs::File::create(dir.path().join(name)).unwrap();
            f.write_all(b"0,1\n1,0\n").unwrap();
        }
        let text = r#"
outcome = "levels"

[inputs.arm1]
path = "a1.csv"
format = "dense_csv"

[inputs.arm0]
path = "a0.csv"
format = "dense_csv"

[denoise]
method = "svt"
tau = 1.5

[output]
directory = "out"
"#;
        let config = AnalysisConfig::from_toml(text, dir.path()).unwrap();
        assert_eq!(
            config.denoise.svt_threshold(),
            Some(crate::adjust::SvtThreshold::Fixed(1.5))
        );
    }
}
