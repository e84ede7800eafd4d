//! Run configuration read from TOML.

use std::path::PathBuf;

use betalab::ensembles::McmcTuning;
use betalab::equilibrium::EquilibriumOptions;
use betalab::pipeline::PipelineOptions;
use betalab::potentials::PotentialSpec;
use betalab::transport::TransportOptions;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    Gaussian,
    EvenQuartic { g: f64 },
    /// Ascending monomial coefficients.
    Polynomial { coeffs: Vec<f64> },
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig::Gaussian
    }
}

impl PotentialConfig {
    pub fn spec(&self) -> PotentialSpec {
        match self {
            PotentialConfig::Gaussian => PotentialSpec::Gaussian,
            PotentialConfig::EvenQuartic { g } => PotentialSpec::EvenQuartic { g: *g },
            PotentialConfig::Polynomial { coeffs } => PotentialSpec::Polynomial { coeffs: coeffs.clone() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerChoice {
    /// Tridiagonal model for the Gaussian potential, Metropolis otherwise.
    Auto,
    Tridiagonal,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub beta: f64,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub sampler: SamplerChoice,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { beta: 2.0, n: 100, count: 1000, seed: 1, sampler: SamplerChoice::Auto }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub nodes: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { nodes: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltConfig {
    /// Names of built-in test functions.
    pub functions: Vec<String>,
}

impl Default for CltConfig {
    fn default() -> Self {
        CltConfig { functions: vec!["x".into(), "x^2".into(), "cos".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BulkConfig {
    pub lambda0: Vec<f64>,
    pub halfwidth: f64,
    /// Number of histogram bins for the gap CSV on `[0, 4]`.
    pub bins: usize,
}

impl Default for BulkConfig {
    fn default() -> Self {
        BulkConfig { lambda0: vec![0.0, 0.5, -1.0], halfwidth: 0.5, bins: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub configs: usize,
    pub hamiltonian_n: usize,
    pub linearization_n: usize,
    pub modes: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { configs: 50, hamiltonian_n: 8, linearization_n: 2, modes: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// File-name stem of every artifact.
    pub name: String,
    /// Not recorded in artifact headers, so outputs do not depend on where they land.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub potential: PotentialConfig,
    pub ensemble: EnsembleConfig,
    pub equilibrium: EquilibriumOptions,
    pub transport: TransportOptions,
    pub spectrum: SpectrumConfig,
    pub mcmc: McmcTuning,
    pub clt: CltConfig,
    pub bulk: BulkConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "run".into(),
            output_dir: None,
            potential: PotentialConfig::default(),
            ensemble: EnsembleConfig::default(),
            equilibrium: EquilibriumOptions::default(),
            transport: TransportOptions::default(),
            spectrum: SpectrumConfig::default(),
            mcmc: McmcTuning::default(),
            clt: CltConfig::default(),
            bulk: BulkConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), String> {
    if v >= min {
        Ok(())
    } else {
        Err(format!("{name} must be at least {min}, got {v}"))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(format!("name '{}' must be a plain file stem", self.name));
        }
        match &self.potential {
            PotentialConfig::EvenQuartic { g } if !(g.is_finite() && *g >= 0.0) => {
                return Err(format!("potential.g must be finite and ≥ 0, got {g}"))
            }
            PotentialConfig::Polynomial { coeffs } if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) => {
                return Err("potential.coeffs must be finite and non-empty".into())
            }
            _ => {}
        }
        positive("ensemble.beta", self.ensemble.beta)?;
        at_least("ensemble.n", self.ensemble.n, 2)?;
        at_least("ensemble.count", self.ensemble.count, 1)?;
        positive("equilibrium.epsilon", self.equilibrium.epsilon)?;
        positive("equilibrium.contour_scale", self.equilibrium.contour_scale)?;
        at_least("equilibrium.contour_nodes", self.equilibrium.contour_nodes, 16)?;
        at_least("equilibrium.cheb_nodes", self.equilibrium.cheb_nodes, 8)?;
        positive("transport.delta_e", self.transport.delta_e)?;
        positive("transport.ode_tol", self.transport.ode_tol)?;
        at_least("transport.order", self.transport.order, 1)?;
        at_least("transport.interior_nodes", self.transport.interior_nodes, 8)?;
        at_least("spectrum.nodes", self.spectrum.nodes, 4)?;
        positive("mcmc.width", self.mcmc.width)?;
        at_least("mcmc.chains", self.mcmc.chains, 1)?;
        positive("bulk.halfwidth", self.bulk.halfwidth)?;
        at_least("bulk.bins", self.bulk.bins, 1)?;
        at_least("verify.configs", self.verify.configs, 1)?;
        at_least("verify.hamiltonian_n", self.verify.hamiltonian_n, 2)?;
        at_least("verify.linearization_n", self.verify.linearization_n, 1)?;
        if self.clt.functions.is_empty() {
            return Err("clt.functions must not be empty".into());
        }
        Ok(())
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions { equilibrium: self.equilibrium, transport: self.transport, kernel_nodes: self.spectrum.nodes }
    }
}
