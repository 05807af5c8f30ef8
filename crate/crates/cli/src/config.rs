//! JSON run configuration. Every section is optional; command-line flags
//! override file values field by field.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use ymtg::estimates::{Band, CaseId, EnsembleKind, Exponents};
use ymtg::evolution::EvolveConfig;
use ymtg::lie::StructureTensor;
use ymtg::spacetime::WindowSpec;
use ymtg::{Error, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub simulate: SimulateSection,
    pub gauge_fix: GaugeSection,
    pub verify_estimates: EstimatesSection,
    pub norms: NormsSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub evolve: EvolveConfig,
    pub algebra: Option<String>,
    pub data: Option<PathBuf>,
    pub diagnostics: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeSection {
    pub n: usize,
    pub algebra: Option<String>,
    pub amplitude: f64,
    pub s: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for GaugeSection {
    fn default() -> Self {
        Self {
            n: 32,
            algebra: None,
            amplitude: 0.05,
            s: 0.8,
            tol: 1e-10,
            max_iter: 20,
            input: None,
            out: None,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatesSection {
    pub cases: Option<Vec<String>>,
    pub grids: Vec<usize>,
    pub samples: usize,
    pub ensemble: EnsembleKind,
    pub band: Option<Band>,
    pub cone_width: f64,
    pub dim: usize,
    pub window: WindowSpec,
    pub s: f64,
    pub eps: f64,
    pub out: Option<PathBuf>,
}

impl Default for EstimatesSection {
    fn default() -> Self {
        Self {
            cases: None,
            grids: vec![16, 32],
            samples: 50,
            ensemble: EnsembleKind::FreeWave,
            band: None,
            cone_width: 0.25,
            dim: 1,
            window: WindowSpec::default(),
            s: 0.8,
            eps: 0.01,
            out: None,
        }
    }
}

impl EstimatesSection {
    pub fn case_list(&self) -> Result<Vec<CaseId>> {
        match &self.cases {
            None => Ok(CaseId::standard_suite()),
            Some(list) => list.iter().map(|c| c.parse()).collect(),
        }
    }

    pub fn exponents(&self) -> Result<Exponents> {
        Exponents::new(self.s, self.eps).map_err(|e| match e {
            Error::InvalidInput(m) => Error::Configuration(m),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsSection {
    pub input: Option<PathBuf>,
    pub s: Vec<f64>,
    pub out: Option<PathBuf>,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self { input: None, s: vec![0.8], out: None }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Configuration(format!("{}: {e}", path.display())))
    }

    /// Rejects a file written for a different command.
    pub fn check_command(&self, command: &str) -> Result<()> {
        match &self.command {
            Some(c) if c != command => Err(Error::Configuration(format!(
                "config file is for '{c}', invoked '{command}'"
            ))),
            _ => Ok(()),
        }
    }
}

/// `su2`, `abelian:K`, or a path to a structure-tensor file.
pub fn parse_algebra(spec: Option<&str>) -> Result<StructureTensor> {
    let spec = spec.unwrap_or("su2").trim();
    if spec == "su2" {
        return Ok(StructureTensor::su2());
    }
    if let Some(k) = spec.strip_prefix("abelian:") {
        let k: usize = k
            .parse()
            .map_err(|_| Error::Configuration(format!("bad abelian dimension in '{spec}'")))?;
        if k == 0 {
            return Err(Error::Configuration("abelian dimension must be positive".into()));
        }
        return Ok(StructureTensor::abelian(k));
    }
    StructureTensor::load(spec)
}
