//! Run configuration: a single JSON document, schema-validated before any
//! computation; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use vortex_core::equation::FamilySpec;
use vortex_core::solver::PathSpec;
use vortex_core::stability::VortexBundleSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleConfig {
    /// Maximum of the section density s0; defaults to d/2 of the family.
    pub cap: f64,
}

/// Smooth perturbation `amplitude * sin(2 pi (kx x + ky y))` applied at the
/// endpoint of the roundtrip probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub amplitude: f64,
    pub kx: i32,
    pub ky: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub bundle: Option<BundleConfig>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub path: Option<PathSpec>,
    #[serde(default)]
    pub perturbation: Option<PerturbationConfig>,
    #[serde(default)]
    pub stability: Option<VortexBundleSpec>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config schema violation: {e}"))
    }

    pub fn grid(&self) -> Result<&GridConfig, String> {
        self.grid
            .as_ref()
            .ok_or_else(|| "config needs a \"grid\" section".into())
    }

    pub fn family(&self) -> Result<&FamilySpec, String> {
        self.family
            .as_ref()
            .ok_or_else(|| "config needs a \"family\" section".into())
    }

    pub fn path(&self) -> Result<&PathSpec, String> {
        self.path
            .as_ref()
            .ok_or_else(|| "config needs a \"path\" section".into())
    }

    pub fn perturbation(&self) -> Result<&PerturbationConfig, String> {
        self.perturbation
            .as_ref()
            .ok_or_else(|| "config needs a \"perturbation\" section".into())
    }

    pub fn stability(&self) -> Result<&VortexBundleSpec, String> {
        self.stability
            .as_ref()
            .ok_or_else(|| "config needs a \"stability\" section".into())
    }
}
