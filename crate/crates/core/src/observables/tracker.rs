use serde::{Deserialize, Serialize};

use super::kernel::{decompose, DensityKernel};
use super::soliton::{
    concentration_point, refined_soliton, ConcentrationPoint, HaloTerms, SolitonState,
};
use super::{energy_report, EnergyReport};
use crate::error::Result;
use crate::evolution::Observer;
use crate::ground_state::RescaledState;
use crate::model::{ComplexField, Model};

/// Everything measured on one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub energy: EnergyReport,
    /// `None` when the decomposition is degenerate.
    pub state: Option<SolitonState>,
    pub halo: Option<HaloTerms>,
    pub concentration: ConcentrationPoint,
    pub halo_samples: usize,
    /// Halo mask inside the annulus `η^{1/8}(1 ∓ 2η^{1/8})` around `q̂`.
    pub halo_in_annulus: bool,
    /// `|q̂ - q_ε| ≤ R_ε`; `None` when `q_ε` is undefined.
    pub qhat_within_support: Option<bool>,
}

/// Observer that runs the full observable pipeline on every sampled snapshot.
#[derive(Debug, Clone)]
pub struct Tracker {
    model: Model,
    kernel: DensityKernel,
    profile: RescaledState,
    refine: usize,
    samples: Vec<TrackSample>,
}

impl Tracker {
    pub fn new(model: Model, kernel: DensityKernel, profile: RescaledState) -> Self {
        Self {
            model,
            kernel,
            profile,
            refine: 1,
            samples: Vec::new(),
        }
    }

    /// Quadrature refinement factor for the soliton integrals (see [`refined_soliton`]).
    pub fn with_refinement(mut self, refine: usize) -> Self {
        self.refine = refine.max(1);
        self
    }

    pub fn kernel(&self) -> &DensityKernel {
        &self.kernel
    }

    pub fn samples(&self) -> &[TrackSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<TrackSample> {
        self.samples
    }

    pub fn measure(&self, psi: &ComplexField) -> Result<TrackSample> {
        let energy = energy_report(psi, &self.model);
        let dec = decompose(psi, &self.kernel);
        let concentration = concentration_point(psi, &self.profile);
        let radius = self.kernel.support_radius();
        let halo_in_annulus =
            dec.halo_within(&concentration.position, self.kernel.annulus_inner(), radius);
        let (state, halo, within) = if dec.degenerate {
            (None, None, None)
        } else {
            let (state, halo) = refined_soliton(psi, &self.kernel, &self.model, self.refine)?;
            let d = psi.grid().displacement(&concentration.position, &state.q);
            let dist = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            (Some(state), Some(halo), Some(dist <= radius))
        };
        Ok(TrackSample {
            t: psi.time(),
            energy,
            state,
            halo,
            concentration,
            halo_samples: dec.halo_count(),
            halo_in_annulus,
            qhat_within_support: within,
        })
    }
}

impl Observer for Tracker {
    fn observe(&mut self, psi: &ComplexField) -> Result<()> {
        let sample = self.measure(psi)?;
        self.samples.push(sample);
        Ok(())
    }
}
