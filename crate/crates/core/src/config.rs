//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "domain": {"type": "interval", "a": 0.0, "b": 1.0},
//!   "beta": {"left": 1.0, "right": 1.0},
//!   "scheme": {"variant": "robin", "t": 0.1, "n": [8, 16, 32], "h": 2e-4},
//!   "initial": {"type": "poly", "coeffs": [1.0, 1.0, -1.0]},
//!   "reference": "eigen",
//!   "output": {"dir": "out"},
//!   "seed": 7
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::chernoff::{check_dirichlet_data, CollarLaw, ReferenceKind, SchemeConfig, Variant, DEFAULT_KERNEL_TOL};
use crate::extension::{RobinCoefficient, RobinSpec, SmoothTestFunction};
use crate::geometry::{DomainGeometry, DomainSpec};

/// Boundary tolerance for Dirichlet initial data.
const DIRICHLET_DATA_TOL: f64 = 1e-10;

#[derive(Debug, ThisError)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeBlock {
    pub variant: Variant,
    pub t: f64,
    pub n: Vec<usize>,
    pub h: f64,
    #[serde(default = "default_kernel_tol")]
    pub kernel_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collar: Option<CollarLaw>,
    /// Rerun the largest `n` at `h/2` in `converge`.
    #[serde(default)]
    pub grid_check: bool,
}

fn default_kernel_tol() -> f64 {
    DEFAULT_KERNEL_TOL
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<RobinSpec>,
    pub scheme: SchemeBlock,
    pub initial: SmoothTestFunction,
    #[serde(default = "default_reference")]
    pub reference: ReferenceKind,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub seed: u64,
}

fn default_reference() -> ReferenceKind {
    ReferenceKind::None
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub domain: DomainGeometry,
    pub scheme: SchemeConfig,
    pub initial: SmoothTestFunction,
    pub reference: ReferenceKind,
    pub grid_check: bool,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    /// Checks cross-field rules and builds the runtime objects.
    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let invalid = |m: String| ConfigError::Invalid(m);
        let domain = DomainGeometry::new(self.domain.clone()).map_err(|e| invalid(format!("domain: {e}")))?;
        let variant = self.scheme.variant;
        let beta = match (variant, &self.beta) {
            (Variant::Robin, None) => return Err(invalid("the robin variant needs a `beta` block".into())),
            (Variant::Robin, Some(spec)) => {
                Some(RobinCoefficient::new(spec.clone(), &domain).map_err(|e| invalid(format!("beta: {e}")))?)
            }
            (v, Some(_)) => return Err(invalid(format!("`beta` is only valid for the robin variant, not {v}"))),
            (_, None) => None,
        };
        if self.scheme.collar.is_some() && variant != Variant::Dirichlet {
            return Err(invalid(format!("`collar` is only valid for the dirichlet variant, not {variant}")));
        }
        if !(self.scheme.kernel_tol > 0.0 && self.scheme.kernel_tol <= 1e-3) {
            return Err(invalid(format!("kernel_tol must lie in (0, 1e-3], got {}", self.scheme.kernel_tol)));
        }
        let scheme = SchemeConfig {
            variant,
            t: self.scheme.t,
            n: self.scheme.n.clone(),
            h: self.scheme.h,
            kernel_tol: self.scheme.kernel_tol,
            collar: self.scheme.collar.unwrap_or_default(),
            beta,
        };
        scheme.validate().map_err(|e| invalid(format!("scheme: {e}")))?;
        if variant.is_dirichlet() {
            check_dirichlet_data(&domain, &self.initial, DIRICHLET_DATA_TOL).map_err(|e| invalid(format!("initial: {e}")))?;
        }
        Ok(Experiment {
            domain,
            scheme,
            initial: self.initial.clone(),
            reference: self.reference,
            grid_check: self.scheme.grid_check,
            output_dir: self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            seed: self.seed,
        })
    }

    /// Replaces the variant, dropping blocks the new variant does not accept.
    pub fn with_variant(mut self, variant: Variant) -> Self {
        if variant != self.scheme.variant {
            if variant != Variant::Robin {
                self.beta = None;
            }
            if variant != Variant::Dirichlet {
                self.scheme.collar = None;
            }
            self.scheme.variant = variant;
        }
        self
    }
}
