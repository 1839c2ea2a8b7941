//! Variable registry, linear rows and cone memberships of a relaxed model.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VarId(pub usize);

/// Linear expression `Σ coef·x + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn add(&mut self, var: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
        self
    }

    pub fn with(mut self, var: VarId, coef: f64) -> Self {
        self.add(var, coef);
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(v, c)| (v, c * factor)).collect(),
            constant: self.constant * factor,
        }
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(v, c)| c * values[v.0])
                .sum::<f64>()
    }

    /// Coefficient of `var`, summing repeated entries.
    pub fn coefficient(&self, var: VarId) -> f64 {
        self.terms
            .iter()
            .filter(|(v, _)| *v == var)
            .map(|(_, c)| c)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Family {
    RealBalance,
    ReactiveBalance,
    RealLineFlow,
    ReactiveLineFlow,
    AngleLinearization,
    Ramp,
    StorageEnergy,
    StorageNetZero,
    EfficiencyCap,
    EqualSharing,
    /// Definitions of the loss-form coordinates of a voltage cone.
    ConeCoordinates,
}

/// `expr (sense) 0`, i.e. the constant of the expression carries the right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub family: Family,
    pub expr: LinExpr,
    pub sense: Sense,
}

impl Constraint {
    pub fn new(family: Family, expr: LinExpr, sense: Sense) -> Self {
        Self {
            family,
            expr,
            sense,
        }
    }

    /// Amount by which the row is violated at `values` (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let v = self.expr.eval(values);
        match self.sense {
            Sense::Eq => v.abs(),
            Sense::Le => v.max(0.0),
            Sense::Ge => (-v).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeArg {
    Var(VarId),
    Const(f64),
}

impl ConeArg {
    fn eval(&self, values: &[f64]) -> f64 {
        match *self {
            ConeArg::Var(v) => values[v.0],
            ConeArg::Const(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ConeFamily {
    /// `W_R² + W_I² ≤ 2·u_i·u_k`
    VoltageProduct,
    /// `w ≥ P²`
    OutputSquare,
    /// `P² ≤ r` with `r = P_base²·(c + b·p − s)/(−a)`
    EfficiencyCurve,
    /// `t̂·s ≥ 1`
    Reciprocal,
    /// `v ≥ t̂²`
    ReciprocalSquare,
}

/// Rotated cone membership `2·h₀·h₁ ≥ Σ tailⱼ²`, `h₀, h₁ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCone {
    pub family: ConeFamily,
    pub heads: [ConeArg; 2],
    pub tail: Vec<ConeArg>,
}

impl ModelCone {
    /// `2·h₀·h₁ − Σ tail²`; negative means the point lies outside the cone.
    pub fn slack(&self, values: &[f64]) -> f64 {
        let h0 = self.heads[0].eval(values);
        let h1 = self.heads[1].eval(values);
        let sq: f64 = self.tail.iter().map(|a| a.eval(values).powi(2)).sum();
        2.0 * h0 * h1 - sq
    }

    pub fn violation(&self, values: &[f64]) -> f64 {
        let h0 = self.heads[0].eval(values);
        let h1 = self.heads[1].eval(values);
        (-self.slack(values)).max(-h0).max(-h1).max(0.0)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.heads.iter().chain(&self.tail).filter_map(|a| match a {
            ConeArg::Var(v) => Some(*v),
            ConeArg::Const(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// Maximum violation per constraint family, bounds and cone family.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelResiduals {
    pub bounds: f64,
    pub rows: BTreeMap<Family, f64>,
    pub cones: BTreeMap<ConeFamily, f64>,
}

impl ModelResiduals {
    pub fn max(&self) -> f64 {
        self.rows
            .values()
            .chain(self.cones.values())
            .fold(self.bounds, |m, &v| m.max(v))
    }
}

impl fmt::Display for ModelResiduals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bounds={:.3e}", self.bounds)?;
        for (k, v) in &self.rows {
            write!(f, " {k:?}={v:.3e}")?;
        }
        for (k, v) in &self.cones {
            write!(f, " {k:?}={v:.3e}")?;
        }
        Ok(())
    }
}

/// Registered variables plus everything constraining them.
#[derive(Debug, Clone, Default)]
pub struct ModelData {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub cones: Vec<ModelCone>,
    pub objective: LinExpr,
}

impl ModelData {
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.variables[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn residuals(&self, values: &[f64]) -> ModelResiduals {
        let mut out = ModelResiduals::default();
        for (v, var) in self.variables.iter().enumerate() {
            let x = values[v];
            let viol = (var.lower - x).max(x - var.upper).max(0.0);
            out.bounds = out.bounds.max(viol);
        }
        for c in &self.constraints {
            let e = out.rows.entry(c.family).or_insert(0.0);
            *e = e.max(c.violation(values));
        }
        for c in &self.cones {
            let e = out.cones.entry(c.family).or_insert(0.0);
            *e = e.max(c.violation(values));
        }
        out
    }
}
