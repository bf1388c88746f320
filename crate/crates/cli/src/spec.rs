//! Problem files.

use std::path::Path;
use std::sync::Arc;

use bernstein_core::{ExpSpace, Interval, SpaceElement, Spectrum, Tolerances};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub spectrum: Option<Spectrum>,
    pub interval: Option<Interval>,
    pub f0: Option<FunctionSpec>,
    pub f1: Option<FunctionSpec>,
    /// Function whose image under the operator is written to `operator.csv`.
    pub target: Option<FunctionSpec>,
    pub grid: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub scan: Option<ScanRange>,
}

/// A preset name or coefficients over the canonical basis.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Preset(String),
    Coefficients(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRange {
    pub b_min: f64,
    pub b_max: f64,
    pub steps: usize,
}

impl ProblemSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))
    }

    pub fn spectrum(&self) -> Result<&Spectrum, CliError> {
        self.spectrum.as_ref().ok_or_else(|| CliError::Spec("missing field `spectrum`".into()))
    }

    pub fn interval(&self) -> Result<Interval, CliError> {
        self.interval.ok_or_else(|| CliError::Spec("missing field `interval`".into()))
    }

    pub fn function(&self, name: &str, space: &Arc<ExpSpace>) -> Result<SpaceElement, CliError> {
        let spec = match name {
            "f0" => self.f0.as_ref(),
            "f1" => self.f1.as_ref(),
            _ => self.target.as_ref(),
        };
        let spec = spec.ok_or_else(|| CliError::Spec(format!("missing field `{name}`")))?;
        spec.resolve(space).map_err(|e| CliError::Spec(format!("{name}: {e}")))
    }
}

impl FunctionSpec {
    pub fn resolve(&self, space: &Arc<ExpSpace>) -> Result<SpaceElement, String> {
        let element = match self {
            FunctionSpec::Coefficients(c) => SpaceElement::new(space.clone(), c.clone()),
            FunctionSpec::Preset(name) => match name.as_str() {
                "one" => SpaceElement::one(space),
                "x" => SpaceElement::x(space),
                "cos" => SpaceElement::cos(space),
                "sin" => SpaceElement::sin(space),
                "one+x-cos" => {
                    let one = SpaceElement::one(space).map_err(|e| e.to_string())?;
                    let x = SpaceElement::x(space).map_err(|e| e.to_string())?;
                    let cos = SpaceElement::cos(space).map_err(|e| e.to_string())?;
                    Ok(&(&one + &x) - &cos)
                }
                other => {
                    if let Some(l) = other.strip_prefix("exp:") {
                        SpaceElement::exp(space, parse_lambda(l)?)
                    } else if let Some(l) = other.strip_prefix("xexp:") {
                        SpaceElement::x_exp(space, parse_lambda(l)?)
                    } else {
                        return Err(format!("unknown preset `{other}`"));
                    }
                }
            },
        };
        element.map_err(|e| e.to_string())
    }
}

fn parse_lambda(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("invalid exponent `{s}`"))
}
