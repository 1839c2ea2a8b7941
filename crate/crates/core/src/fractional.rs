//! Sum-of-ratios machinery.
//!
//! Each generator-timestep contributes a ratio `A / B` where `A` is the output
//! in MW and `B` the efficiency. We carry `C = 1/B` so that every term is the
//! product `A·C`, and replace it by the surrogate `½(ζ·A² + β·C²)` with
//! `ζ·β ≥ 1`. For fixed `(A, C)` the surrogate is minimized at
//! `ζ = C/A, β = A/C`, where it equals `A·C` exactly (AM–GM).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default clamp applied to zero numerators before the auxiliary update.
pub const DEFAULT_NUMERATOR_CLAMP: f64 = 1e-9;

/// Slack allowed on `ζ·β ≥ 1`.
pub const PRODUCT_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FractionalError {
    #[error("denominator reciprocal must be positive, got {0}")]
    NonpositiveDenominator(f64),
    #[error("numerator must be nonnegative, got {0}")]
    NegativeNumerator(f64),
    #[error("numerator clamp must be positive, got {0}")]
    NonpositiveClamp(f64),
}

/// One fuel-rate ratio, indexed by generator and timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioTerm {
    pub generator: usize,
    pub t: usize,
    /// Output in MW.
    pub numerator: f64,
    /// Reciprocal efficiency `1/η` at the current output.
    pub denominator_recip: f64,
}

impl RatioTerm {
    pub fn new(
        generator: usize,
        t: usize,
        numerator: f64,
        denominator_recip: f64,
    ) -> Result<Self, FractionalError> {
        if !(numerator >= 0.0) {
            return Err(FractionalError::NegativeNumerator(numerator));
        }
        if !(denominator_recip > 0.0) {
            return Err(FractionalError::NonpositiveDenominator(denominator_recip));
        }
        Ok(Self {
            generator,
            t,
            numerator,
            denominator_recip,
        })
    }

    pub fn value(&self) -> f64 {
        self.numerator * self.denominator_recip
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxPair {
    pub zeta: f64,
    pub beta: f64,
}

impl AuxPair {
    pub const ONE: AuxPair = AuxPair {
        zeta: 1.0,
        beta: 1.0,
    };

    pub fn is_feasible(&self) -> bool {
        self.zeta > 0.0 && self.beta > 0.0 && self.zeta * self.beta >= 1.0 - PRODUCT_SLACK
    }
}

/// Auxiliary multipliers, one pair per ratio term (same ordering as the terms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryState {
    pub pairs: Vec<AuxPair>,
}

impl AuxiliaryState {
    /// All pairs at `ζ = β = 1`.
    pub fn ones(m: usize) -> Self {
        Self {
            pairs: vec![AuxPair::ONE; m],
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_feasible(&self) -> bool {
        self.pairs.iter().all(AuxPair::is_feasible)
    }

    /// Closed-form update of every pair against the given terms.
    pub fn updated(terms: &[RatioTerm], clamp: f64) -> Result<Self, FractionalError> {
        let pairs = terms
            .iter()
            .map(|t| auxiliary_update(t.numerator, t.denominator_recip, clamp))
            .collect::<Result<_, _>>()?;
        Ok(Self { pairs })
    }

    /// Largest cutting-function value over all pairs.
    pub fn max_cutting_violation(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| cutting_violation(p.zeta, p.beta))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `Σ A·C · Δt`; the division by the fuel energy density happens in fuel accounting.
pub fn ratio_sum(terms: &[RatioTerm], dt: f64) -> f64 {
    terms.iter().map(RatioTerm::value).sum::<f64>() * dt
}

/// `½ Σ (ζ·A² + β·C²) · Δt`.
///
/// Panics if the term and pair counts differ.
pub fn surrogate(terms: &[RatioTerm], aux: &AuxiliaryState, dt: f64) -> f64 {
    assert_eq!(terms.len(), aux.len(), "one auxiliary pair per term");
    terms
        .iter()
        .zip(&aux.pairs)
        .map(|(t, p)| surrogate_term(t.numerator, t.denominator_recip, *p))
        .sum::<f64>()
        * dt
}

pub fn surrogate_term(a: f64, c: f64, pair: AuxPair) -> f64 {
    0.5 * (pair.zeta * a * a + pair.beta * c * c)
}

/// Minimizer of `ζ·A² + β·C²` over `ζ·β ≥ 1`, with `A` clamped below at `clamp`.
pub fn auxiliary_update(a: f64, c: f64, clamp: f64) -> Result<AuxPair, FractionalError> {
    if !(c > 0.0) {
        return Err(FractionalError::NonpositiveDenominator(c));
    }
    if !(clamp > 0.0) {
        return Err(FractionalError::NonpositiveClamp(clamp));
    }
    let a = a.max(clamp);
    Ok(AuxPair {
        zeta: c / a,
        beta: a / c,
    })
}

/// Cutting function `2 − β·√(ζ/β) − ζ·√(β/ζ)`, equal to `2 − 2√(ζβ)`;
/// nonpositive exactly when `ζ·β ≥ 1`.
pub fn cutting_violation(zeta: f64, beta: f64) -> f64 {
    2.0 - 2.0 * (zeta * beta).sqrt()
}

/// Surrogate minus ratio sum; nonnegative whenever every `ζ·β ≥ 1`.
pub fn equivalence_gap(terms: &[RatioTerm], aux: &AuxiliaryState, dt: f64) -> f64 {
    surrogate(terms, aux, dt) - ratio_sum(terms, dt)
}
