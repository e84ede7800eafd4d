//! One-call assembly of the deterministic objects for a potential.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{compute_p, EquilibriumData, EquilibriumOptions};
use crate::error::Result;
use crate::operators::{kernel_spectrum, KernelSpectrum};
use crate::potentials::{make_potential, normalize_support, support_endpoints, AffineChange, Potential, PotentialSpec};
use crate::transport::{solve_transport, TransportMap, TransportOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    pub equilibrium: EquilibriumOptions,
    pub transport: TransportOptions,
    pub kernel_nodes: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { equilibrium: EquilibriumOptions::default(), transport: TransportOptions::default(), kernel_nodes: 64 }
    }
}

/// Everything downstream of a potential, on the normalized scale `[−2, 2]`.
pub struct Pipeline {
    pub original: Potential,
    pub change: AffineChange,
    pub equilibrium: EquilibriumData,
    pub transport: TransportMap,
    pub spectrum: KernelSpectrum,
}

impl Pipeline {
    pub fn build(spec: &PotentialSpec, opts: &PipelineOptions) -> Result<Self> {
        let original = make_potential(spec)?;
        let support = support_endpoints(&original)?;
        let (normalized, change) = normalize_support(&original, support)?;
        let equilibrium = compute_p(&normalized, &opts.equilibrium)?;
        let transport = solve_transport(&equilibrium, &opts.transport)?;
        let spectrum = kernel_spectrum(&transport, opts.equilibrium.epsilon, opts.kernel_nodes)?;
        Ok(Self { original, change, equilibrium, transport, spectrum })
    }

    /// The potential the equilibrium was computed for.
    pub fn potential(&self) -> &Potential {
        self.equilibrium.potential()
    }

    pub fn epsilon(&self) -> f64 {
        self.equilibrium.epsilon
    }
}
