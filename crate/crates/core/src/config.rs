//! Run configuration and its content hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::barriers::Barrier;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::initial::InitialData;
use crate::operators::PLaplacianKind;
use crate::params::Params;
use crate::stepper::{Integrator, Mode, StepControl, DEFAULT_EPS_REL};

fn default_eps_rel() -> f64 {
    DEFAULT_EPS_REL
}

/// Everything needed to reproduce one run. There is no randomness in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub params: Params<f64>,
    pub grid: Grid<f64>,
    pub initial: InitialData,
    #[serde(default)]
    pub mode: Mode,
    pub control: StepControl,
    #[serde(default = "default_eps_rel")]
    pub eps_rel: f64,
    #[serde(default)]
    pub laplacian: PLaplacianKind,
    /// Barriers compared against the trajectory after the run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub barriers: Vec<Barrier>,
    /// Trajectory checks evaluated after the run, by name.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub experiments: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Names accepted in [`RunConfig::experiments`].
pub const EXPERIMENTS: [&str; 5] = ["decay", "localization", "monotone-support", "convergence", "eikonal"];

impl RunConfig {
    pub fn new(params: Params<f64>, grid: Grid<f64>, initial: InitialData, mode: Mode, control: StepControl) -> Self {
        RunConfig {
            params,
            grid,
            initial,
            mode,
            control,
            eps_rel: DEFAULT_EPS_REL,
            laplacian: PLaplacianKind::default(),
            barriers: Vec::new(),
            experiments: Vec::new(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.dim() != self.params.dim() {
            return Err(Error::InvalidConfig(format!(
                "grid dimension {} differs from params dimension {}",
                self.grid.dim(),
                self.params.dim()
            )));
        }
        self.initial.validate()?;
        self.integrator().validate()?;
        for b in &self.barriers {
            b.validate(&self.params)?;
        }
        if let Some(bad) = self.experiments.iter().find(|e| !EXPERIMENTS.contains(&e.as_str())) {
            return Err(Error::InvalidConfig(format!("unknown experiment {bad:?}; expected one of {EXPERIMENTS:?}")));
        }
        Ok(())
    }

    pub fn integrator(&self) -> Integrator<f64> {
        let mut it = Integrator::new(self.params, self.mode, self.control).with_eps_rel(self.eps_rel);
        it.laplacian = self.laplacian;
        it
    }

    /// Field the run starts from: `u_0` in every mode (at `t = 0` the rescaling is the
    /// identity).
    pub fn initial_field(&self) -> Result<Field<f64>> {
        self.initial.sample(self.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "params": {"p": 3.0, "q": 1.5, "dim": 1},
        "grid": {"dim": 1, "halfWidth": 4.0, "cells": 64},
        "initial": {"kind": "cap", "amplitude": 1.0, "radius": 1.0, "exponent": 2.0},
        "mode": "original",
        "control": {"tEnd": 1.0}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_json(SAMPLE).unwrap();
        assert_eq!(c.eps_rel, DEFAULT_EPS_REL);
        assert_eq!(c.mode, Mode::Original);
        assert_eq!(c.control.t_end, 1.0);
        assert_eq!(c.control.safety, StepControl::default().safety);
        assert!(c.barriers.is_empty());
    }

    #[test]
    fn round_trip_is_identity() {
        let c = RunConfig::from_json(SAMPLE).unwrap();
        let back = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn hash_tracks_content() {
        let c = RunConfig::from_json(SAMPLE).unwrap();
        let mut d = c.clone();
        d.control.t_end = 2.0;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn rescaled_outside_range_is_rejected() {
        let text = SAMPLE.replace("\"q\": 1.5", "\"q\": 2.5").replace("\"original\"", "\"rescaled\"");
        let err = RunConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("q < p - 1"), "{err}");
    }

    #[test]
    fn rejects_mismatched_dimension_and_unknown_fields() {
        assert!(RunConfig::from_json(&SAMPLE.replace("\"dim\": 1}", "\"dim\": 2}")).is_err());
        assert!(RunConfig::from_json(&SAMPLE.replace("\"mode\"", "\"bogus\": 1, \"mode\"")).is_err());
        let text = SAMPLE.replace("\"mode\": \"original\",", "\"mode\": \"original\", \"experiments\": [\"nope\"],");
        assert!(RunConfig::from_json(&text).is_err());
    }
}
