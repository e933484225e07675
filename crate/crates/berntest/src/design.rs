//! Experimental designs, treatment assignments, and covariate tables.
//!
//! A [`PropensityDesign`] records what the experimenter knew when randomizing:
//! each unit's treatment probability and (optionally) its covariates. Every
//! probability computed anywhere in this crate traces back to the design's
//! assignment kernel `∏ e_i^{w_i} (1−e_i)^{1−w_i}`.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Errors raised when constructing or querying designs and assignments.
#[derive(Debug, Error)]
pub enum DesignError {
    #[error("design must contain at least one unit")]
    Empty,
    #[error("propensity for unit {unit} is {value}; must lie strictly in (0, 1)")]
    PropensityOutOfRange { unit: usize, value: f64 },
    #[error("covariate table has {rows} rows but the design has {units} units")]
    CovariateRowMismatch { rows: usize, units: usize },
    #[error("covariate column {0:?} appears more than once")]
    DuplicateColumn(String),
    #[error("assignment has {got} bits but the design has {expected} units")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no covariate column named {0:?}")]
    NoSuchColumn(String),
    #[error("treated count {count} is out of range for a design with {units} units")]
    CountOutOfRange { count: usize, units: usize },
}

/// One treatment assignment: a length-N vector of treat/control indicators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    /// Builds an assignment from explicit indicators.
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Builds an assignment from 0/1 integers; anything nonzero treats.
    pub fn from_indicators(indicators: &[u8]) -> Self {
        Self { bits: indicators.iter().map(|&w| w != 0).collect() }
    }

    /// Number of units.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Whether unit `i` is treated.
    pub fn treated(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// All indicators as a slice.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of treated units.
    pub fn n_treated(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Treated count restricted to the given unit indices.
    pub fn n_treated_among(&self, units: &[usize]) -> usize {
        units.iter().filter(|&&i| self.bits[i]).count()
    }

    /// True when every unit is assigned to the same arm.
    pub fn is_degenerate(&self) -> bool {
        let t = self.n_treated();
        t == 0 || t == self.len()
    }

    /// The complementary assignment (every indicator flipped).
    pub fn complement(&self) -> Self {
        Self { bits: self.bits.iter().map(|b| !b).collect() }
    }
}

impl fmt::Display for Assignment {
    /// Renders as a bitstring, unit 1 first: `0110010…`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A single covariate cell value, used both in tables and as stratum keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovariateValue {
    Numeric(f64),
    Categorical(String),
}

impl fmt::Display for CovariateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovariateValue::Numeric(x) => write!(f, "{x}"),
            CovariateValue::Categorical(s) => f.write_str(s),
        }
    }
}

/// One named covariate column; numeric and categorical columns are kept in
/// their native representation so stratum matching is exact.
#[derive(Debug, Clone)]
pub enum CovariateColumn {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl CovariateColumn {
    fn len(&self) -> usize {
        match self {
            CovariateColumn::Numeric(v) => v.len(),
            CovariateColumn::Categorical(v) => v.len(),
        }
    }

    /// Whether row `i` equals `value`. Numeric matching is exact (stratum
    /// labels like 1.0 / 2.0 are identities, not measurements).
    pub fn matches(&self, i: usize, value: &CovariateValue) -> bool {
        match (self, value) {
            (CovariateColumn::Numeric(v), CovariateValue::Numeric(x)) => v[i] == *x,
            (CovariateColumn::Categorical(v), CovariateValue::Categorical(s)) => v[i] == *s,
            _ => false,
        }
    }
}

/// Column-named covariate table with one row per unit.
#[derive(Debug, Clone, Default)]
pub struct CovariateTable {
    columns: Vec<(String, CovariateColumn)>,
}

impl CovariateTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a column; lengths are validated by [`PropensityDesign`] on
    /// attachment, duplicate names here.
    pub fn push_column(
        &mut self,
        name: impl Into<String>,
        column: CovariateColumn,
    ) -> Result<(), DesignError> {
        let name = name.into();
        if self.columns.iter().any(|(n, _)| *n == name) {
            return Err(DesignError::DuplicateColumn(name));
        }
        self.columns.push((name, column));
        Ok(())
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Rows in the table, or 0 when there are no columns.
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn column(&self, name: &str) -> Result<&CovariateColumn, DesignError> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
            .ok_or_else(|| DesignError::NoSuchColumn(name.to_string()))
    }

    /// Column names in declaration order.
    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    /// Unit indices whose `column` value equals `value`, in unit order.
    pub fn stratum_indices(
        &self,
        column: &str,
        value: &CovariateValue,
    ) -> Result<Vec<usize>, DesignError> {
        let col = self.column(column)?;
        Ok((0..col.len()).filter(|&i| col.matches(i, value)).collect())
    }
}

/// The known randomization design: per-unit treatment probabilities plus an
/// optional covariate table.
#[derive(Debug, Clone)]
pub struct PropensityDesign {
    propensities: Vec<f64>,
    covariates: Option<CovariateTable>,
}

impl PropensityDesign {
    /// A design with no covariates. Every probability must lie strictly in
    /// (0, 1); degenerate probabilities are rejected here rather than
    /// surfacing as zero-probability supports later.
    pub fn new(propensities: Vec<f64>) -> Result<Self, DesignError> {
        if propensities.is_empty() {
            return Err(DesignError::Empty);
        }
        for (unit, &e) in propensities.iter().enumerate() {
            if !(e > 0.0 && e < 1.0) {
                return Err(DesignError::PropensityOutOfRange { unit, value: e });
            }
        }
        Ok(Self { propensities, covariates: None })
    }

    /// A design with covariates; the table must have one row per unit.
    pub fn with_covariates(
        propensities: Vec<f64>,
        covariates: CovariateTable,
    ) -> Result<Self, DesignError> {
        let design = Self::new(propensities)?;
        if covariates.n_rows() != design.n_units() {
            return Err(DesignError::CovariateRowMismatch {
                rows: covariates.n_rows(),
                units: design.n_units(),
            });
        }
        Ok(Self { covariates: Some(covariates), ..design })
    }

    pub fn n_units(&self) -> usize {
        self.propensities.len()
    }

    pub fn propensities(&self) -> &[f64] {
        &self.propensities
    }

    pub fn covariates(&self) -> Option<&CovariateTable> {
        self.covariates.as_ref()
    }

    /// Validates that `w` has this design's length.
    pub fn check_len(&self, w: &Assignment) -> Result<(), DesignError> {
        if w.len() != self.n_units() {
            return Err(DesignError::LengthMismatch { expected: self.n_units(), got: w.len() });
        }
        Ok(())
    }

    /// The unnormalized assignment kernel `∏ e_i^{w_i} (1−e_i)^{1−w_i}`:
    /// the probability of drawing `w` by flipping each unit's biased coin.
    ///
    /// Computed as a single running product in linear space; exact enough for
    /// desk-scale N, and safe from underflow up to several hundred units. For
    /// larger designs use [`PropensityDesign::log_assignment_kernel`].
    pub fn assignment_kernel(&self, w: &Assignment) -> f64 {
        debug_assert_eq!(w.len(), self.n_units());
        let mut p = 1.0;
        for (i, &e) in self.propensities.iter().enumerate() {
            p *= if w.treated(i) { e } else { 1.0 - e };
        }
        p
    }

    /// Natural log of the assignment kernel, for designs too large for the
    /// linear-space product.
    pub fn log_assignment_kernel(&self, w: &Assignment) -> f64 {
        debug_assert_eq!(w.len(), self.n_units());
        let mut lp = 0.0;
        for (i, &e) in self.propensities.iter().enumerate() {
            lp += if w.treated(i) { e.ln() } else { (1.0 - e).ln() };
        }
        lp
    }

    /// Probability that every unit is assigned control, `∏ (1−e_i)`.
    pub fn all_control_probability(&self) -> f64 {
        self.propensities.iter().map(|e| 1.0 - e).product()
    }

    /// Probability that every unit is assigned treatment, `∏ e_i`.
    pub fn all_treated_probability(&self) -> f64 {
        self.propensities.iter().product()
    }
}
