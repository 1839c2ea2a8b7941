//! Power network domain types, case files and generator fuel characteristics.
//!
//! A [`NetworkCase`] is immutable once built and is the single source of truth
//! for a dispatch problem: topology, unit data, storage, the load profile and
//! the horizon parameters.

mod format;
mod validate;

pub use format::{load_case, parse_case, parse_case_with_base, serialize_case};
pub use validate::{validate_case, Violation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while reading a case document.
#[derive(Debug, Error)]
pub enum CaseError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{section}: {message}")]
    Schema { section: String, message: String },
    #[error("reference error: {0}")]
    Reference(String),
    #[error("load profile {location}: {message}")]
    LoadCsv { location: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("efficiency of generator {id} is nonpositive ({eta}) at {p_mw} MW")]
    NonpositiveEfficiency { id: String, p_mw: f64, eta: f64 },
    #[error("fuel energy density must be positive, got {0}")]
    NonpositiveAlpha(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusSpec {
    pub id: u32,
    pub v_min: f64,
    pub v_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

/// A branch given by its series admittance `y = g + j·b` in per-unit.
///
/// The admittance-matrix entries are `G_ik = -g` and `B_ik = -b`; a line with
/// series impedance `r + j·x` has `g = r/(r²+x²)` and `b = -x/(r²+x²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub from: u32,
    pub to: u32,
    pub g: f64,
    pub b: f64,
    pub rate_p_mw: f64,
    pub rate_q_mvar: f64,
}

impl LineSpec {
    /// Off-diagonal admittance-matrix conductance `G_ik`.
    pub fn g_offdiag(&self) -> f64 {
        -self.g
    }

    /// Off-diagonal admittance-matrix susceptance `B_ik`.
    pub fn b_offdiag(&self) -> f64 {
        -self.b
    }
}

/// Unit class used to resolve the restricted-dispatch comparison models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorClass {
    Main,
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub id: String,
    pub bus: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<GeneratorClass>,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Base power of the efficiency polynomial, normally the rated capacity.
    pub p_base: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub ramp_down: f64,
    pub ramp_up: f64,
}

impl GeneratorSpec {
    /// Efficiency `a·p² + b·p + c` at per-unit output `p`.
    pub fn efficiency(&self, p: f64) -> f64 {
        (self.a * p + self.b) * p + self.c
    }

    /// Efficiency at an output given in MW.
    pub fn efficiency_at(&self, p_mw: f64) -> f64 {
        self.efficiency(p_mw / self.p_base)
    }

    /// Fuel consumption rate in L/h at output `p_mw`, for fuel energy density
    /// `alpha` in MWh/L.
    pub fn fuel_rate(&self, p_mw: f64, alpha: f64) -> Result<f64, DomainError> {
        if alpha <= 0.0 {
            return Err(DomainError::NonpositiveAlpha(alpha));
        }
        let eta = self.efficiency_at(p_mw);
        if eta <= 0.0 {
            return Err(DomainError::NonpositiveEfficiency {
                id: self.id.clone(),
                p_mw,
                eta,
            });
        }
        Ok(p_mw / (alpha * eta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageSpec {
    pub id: String,
    pub bus: u32,
    pub capacity_mwh: f64,
    pub max_charge_mw: f64,
    pub max_discharge_mw: f64,
    #[serde(default = "default_storage_efficiency")]
    pub efficiency: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub initial_mwh: f64,
}

fn default_storage_efficiency() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub mva_base: f64,
    /// Number of timesteps `T`.
    pub horizon: usize,
    pub dt_hours: f64,
    /// Fuel energy density in MWh per liter.
    pub alpha_mwh_per_liter: f64,
}

/// Per-timestep, per-bus demand `(P, Q)` in MW / MVAr.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadProfile {
    // [t][bus index]
    demand: Vec<Vec<(f64, f64)>>,
}

impl LoadProfile {
    pub fn zeros(horizon: usize, n_bus: usize) -> Self {
        Self {
            demand: vec![vec![(0.0, 0.0); n_bus]; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.demand.len()
    }

    pub fn p(&self, t: usize, bus: usize) -> f64 {
        self.demand[t][bus].0
    }

    pub fn q(&self, t: usize, bus: usize) -> f64 {
        self.demand[t][bus].1
    }

    pub fn set(&mut self, t: usize, bus: usize, p_mw: f64, q_mvar: f64) {
        self.demand[t][bus] = (p_mw, q_mvar);
    }

    pub fn total_p(&self, t: usize) -> f64 {
        self.demand[t].iter().map(|d| d.0).sum()
    }

    pub fn at(&self, t: usize) -> &[(f64, f64)] {
        &self.demand[t]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub system: SystemParams,
    pub buses: Vec<BusSpec>,
    pub lines: Vec<LineSpec>,
    pub generators: Vec<GeneratorSpec>,
    pub storage: Vec<StorageSpec>,
    pub loads: LoadProfile,
}

impl NetworkCase {
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn horizon(&self) -> usize {
        self.system.horizon
    }

    pub fn dt(&self) -> f64 {
        self.system.dt_hours
    }

    pub fn alpha(&self) -> f64 {
        self.system.alpha_mwh_per_liter
    }

    /// Number of ratio terms, one per generator and timestep.
    pub fn n_terms(&self) -> usize {
        self.generators.len() * self.system.horizon
    }
}
