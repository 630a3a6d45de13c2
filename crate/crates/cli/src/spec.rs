use std::path::Path;

use adelic_core::divisor_series::Profile;
use adelic_core::exact::{self, Q};
use adelic_core::{AdelicBundle, GradedSeries, RDivisorP1};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Bundle,
    Series,
    Okounkov,
    Volumes,
    Continuity,
    Decompose,
    TrivialMode,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Bundle => "bundle",
            Kind::Series => "series",
            Kind::Okounkov => "okounkov",
            Kind::Volumes => "volumes",
            Kind::Continuity => "continuity",
            Kind::Decompose => "decompose",
            Kind::TrivialMode => "trivial-mode",
        }
    }
}

/// One experiment; command-line flags override the numeric fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    /// hn | minima for bundles, chi | vol | volI for volumes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<AdelicBundle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<GradedSeries>,
    /// Ē in continuity runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<GradedSeries>,
    /// h in trivial-mode runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divisor: Option<RDivisorP1>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("schema error at `{path}`: {}", e.into_inner())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                bail!("schema error at `tol`: must be positive");
            }
        }
        if self.n_max == Some(0) {
            bail!("schema error at `n_max`: must be positive");
        }
        Ok(())
    }

    pub fn require_series(&self) -> Result<&GradedSeries> {
        self.series.as_ref().with_context(|| format!("schema error at `series`: required for kind {}", self.kind.name()))
    }

    pub fn schedule_q(&self) -> Result<Vec<Q>> {
        let Some(s) = &self.schedule else { return Ok(Vec::new()) };
        s.iter()
            .enumerate()
            .map(|(i, x)| exact::parse_q(x).map_err(|e| anyhow::anyhow!("schema error at `schedule[{i}]`: {e}")))
            .collect()
    }
}

pub fn parse_schedule(list: &str) -> Vec<String> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentSpec::parse(r#"{"kind":"volumes","n_max":"ten"}"#).unwrap_err().to_string();
        assert!(e.contains("`n_max`"), "{e}");
        let e = ExperimentSpec::parse(r#"{"kind":"series","series":{"divisor":[{"point":"t^2-1","c":"1"}]}}"#).unwrap_err().to_string();
        assert!(e.contains("series.divisor"), "{e}");
        let e = ExperimentSpec::parse(r#"{"kind":"nope"}"#).unwrap_err().to_string();
        assert!(e.contains("`kind`"), "{e}");
    }

    #[test]
    fn schedule_lists() {
        assert_eq!(parse_schedule("1/2, 1/4,"), vec!["1/2", "1/4"]);
    }
}
