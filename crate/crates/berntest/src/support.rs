//! Assignment supports and acceptance criteria.
//!
//! A *support* is the set of assignments a randomization distribution lives
//! on. Four kinds are built in: the full cube, the nondegenerate cube (at
//! least one treated and one control unit), the fixed-total slice, and an
//! arbitrary conjunction of acceptance clauses. Probabilities on a support
//! are the Bernoulli assignment kernel renormalized to it.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::design::{
    Assignment, CovariateValue, DesignError, PropensityDesign,
};
use crate::numeric::CompensatedSum;
use crate::poisson_binomial::poisson_binomial_pmf;

/// Default cap on how many assignments an enumeration may visit.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1 << 22;

#[derive(Debug, Error)]
pub enum SupportError {
    #[error("support holds {size} assignments, above the enumeration limit of {limit}; raise the limit or use a sampling engine")]
    TooLarge { size: u128, limit: u64 },
    #[error("fixed treated total {n_treated} must satisfy 1 <= total <= {units} - 1")]
    InvalidFixedTotal { n_treated: usize, units: usize },
    #[error("criterion is not count-structured: {0}")]
    NotCountStructured(String),
    #[error("criterion counts cannot be satisfied: {0}")]
    UnsatisfiableCounts(String),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Signature of a user-supplied acceptance predicate.
pub type Predicate = dyn Fn(&Assignment, &PropensityDesign) -> bool + Send + Sync;

/// One conjunct of an acceptance criterion.
#[derive(Clone)]
pub enum CriterionClause {
    /// At least one treated and at least one control unit.
    Nondegenerate,
    /// The total number of treated units equals the given count.
    TotalTreated(usize),
    /// The number of treated units whose covariate `column` equals `value`
    /// is exactly `n_treated`.
    StratumTreated { column: String, value: CovariateValue, n_treated: usize },
    /// An arbitrary deterministic predicate, carried with a label so errors
    /// and diagnostics can name it.
    Named { label: String, predicate: Arc<Predicate> },
}

impl fmt::Debug for CriterionClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionClause::Nondegenerate => f.write_str("Nondegenerate"),
            CriterionClause::TotalTreated(k) => write!(f, "TotalTreated({k})"),
            CriterionClause::StratumTreated { column, value, n_treated } => {
                write!(f, "StratumTreated({column}={value}: {n_treated})")
            }
            CriterionClause::Named { label, .. } => write!(f, "Named({label:?})"),
        }
    }
}

/// A conjunction of acceptance clauses; the empty conjunction accepts every
/// assignment.
///
/// Satisfiability is checked lazily: a criterion that accepts nothing is
/// legal to construct, and surfaces as an empty enumeration or an exhausted
/// sampling budget rather than as a construction error.
#[derive(Debug, Clone, Default)]
pub struct AcceptanceCriterion {
    clauses: Vec<CriterionClause>,
}

impl AcceptanceCriterion {
    /// The empty conjunction: accepts every assignment.
    pub fn accept_all() -> Self {
        Self::default()
    }

    /// Requires at least one treated and one control unit.
    pub fn nondegenerate() -> Self {
        Self::accept_all().and_nondegenerate()
    }

    /// Requires an exact total number of treated units.
    pub fn total_treated(n_treated: usize) -> Self {
        Self::accept_all().and_total_treated(n_treated)
    }

    pub fn new(clauses: Vec<CriterionClause>) -> Self {
        Self { clauses }
    }

    pub fn and(mut self, clause: CriterionClause) -> Self {
        self.clauses.push(clause);
        self
    }

    pub fn and_nondegenerate(self) -> Self {
        self.and(CriterionClause::Nondegenerate)
    }

    pub fn and_total_treated(self, n_treated: usize) -> Self {
        self.and(CriterionClause::TotalTreated(n_treated))
    }

    pub fn and_stratum_treated(
        self,
        column: impl Into<String>,
        value: CovariateValue,
        n_treated: usize,
    ) -> Self {
        self.and(CriterionClause::StratumTreated { column: column.into(), value, n_treated })
    }

    pub fn and_named<F>(self, label: impl Into<String>, predicate: F) -> Self
    where
        F: Fn(&Assignment, &PropensityDesign) -> bool + Send + Sync + 'static,
    {
        self.and(CriterionClause::Named { label: label.into(), predicate: Arc::new(predicate) })
    }

    pub fn clauses(&self) -> &[CriterionClause] {
        &self.clauses
    }

    /// Evaluates the criterion directly; prefer [`CompiledCriterion`] in
    /// loops, which resolves stratum indices once.
    pub fn accepts(
        &self,
        w: &Assignment,
        design: &PropensityDesign,
    ) -> Result<bool, SupportError> {
        Ok(CompiledCriterion::compile(self, design)?.accepts(w, design))
    }
}

/// A stratum-count constraint with its unit indices resolved.
#[derive(Debug, Clone)]
struct StratumConstraint {
    label: String,
    units: Vec<usize>,
    n_treated: usize,
}

/// An [`AcceptanceCriterion`] with covariate lookups resolved against one
/// design, ready for tight accept/reject loops.
#[derive(Clone)]
pub struct CompiledCriterion {
    nondegenerate: bool,
    totals: Vec<usize>,
    strata: Vec<StratumConstraint>,
    named: Vec<(String, Arc<Predicate>)>,
    n_units: usize,
}

impl fmt::Debug for CompiledCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompiledCriterion")
            .field("nondegenerate", &self.nondegenerate)
            .field("totals", &self.totals)
            .field("strata", &self.strata)
            .field("named", &self.named.iter().map(|(l, _)| l).collect::<Vec<_>>())
            .field("n_units", &self.n_units)
            .finish()
    }
}

impl CompiledCriterion {
    pub fn compile(
        criterion: &AcceptanceCriterion,
        design: &PropensityDesign,
    ) -> Result<Self, SupportError> {
        let mut compiled = Self {
            nondegenerate: false,
            totals: Vec::new(),
            strata: Vec::new(),
            named: Vec::new(),
            n_units: design.n_units(),
        };
        for clause in criterion.clauses() {
            match clause {
                CriterionClause::Nondegenerate => compiled.nondegenerate = true,
                CriterionClause::TotalTreated(k) => compiled.totals.push(*k),
                CriterionClause::StratumTreated { column, value, n_treated } => {
                    let table = design.covariates().ok_or_else(|| {
                        SupportError::Design(DesignError::NoSuchColumn(column.clone()))
                    })?;
                    let units = table.stratum_indices(column, value)?;
                    compiled.strata.push(StratumConstraint {
                        label: format!("{column}={value}"),
                        units,
                        n_treated: *n_treated,
                    });
                }
                CriterionClause::Named { label, predicate } => {
                    compiled.named.push((label.clone(), Arc::clone(predicate)));
                }
            }
        }
        Ok(compiled)
    }

    /// Whether the assignment satisfies every clause.
    pub fn accepts(&self, w: &Assignment, design: &PropensityDesign) -> bool {
        if self.nondegenerate && w.is_degenerate() {
            return false;
        }
        if !self.totals.is_empty() {
            let total = w.n_treated();
            if self.totals.iter().any(|&k| k != total) {
                return false;
            }
        }
        for s in &self.strata {
            if w.n_treated_among(&s.units) != s.n_treated {
                return false;
            }
        }
        self.named.iter().all(|(_, p)| p(w, design))
    }

    /// Whether the criterion constrains assignments only through treated
    /// counts (a total, per-stratum counts, or both).
    pub fn is_count_structured(&self) -> bool {
        self.count_structure().is_ok()
    }

    /// Extracts the criterion's count structure: disjoint unit blocks with
    /// pinned treated counts, plus unconstrained units.
    ///
    /// Succeeds only when the acceptance set factorizes as "choose an exact
    /// number of treated units inside each block, anything elsewhere" — the
    /// shape the uniform conditional proposal can draw from exactly. A
    /// nondegeneracy clause is tolerated when the counts already imply it.
    pub fn count_structure(&self) -> Result<CountStructure, SupportError> {
        if let Some((label, _)) = self.named.first() {
            return Err(SupportError::NotCountStructured(format!(
                "clause {label:?} is an arbitrary predicate, not a treated-count constraint"
            )));
        }
        let total = match self.totals.as_slice() {
            [] => None,
            [k] => Some(*k),
            [first, rest @ ..] => {
                if let Some(other) = rest.iter().find(|&&k| k != *first) {
                    return Err(SupportError::UnsatisfiableCounts(format!(
                        "total treated constrained to both {first} and {other}"
                    )));
                }
                Some(*first)
            }
        };

        let mut in_block = vec![false; self.n_units];
        let mut blocks = Vec::with_capacity(self.strata.len() + 1);
        for s in &self.strata {
            for &i in &s.units {
                if in_block[i] {
                    return Err(SupportError::NotCountStructured(format!(
                        "stratum constraints overlap at unit index {i}"
                    )));
                }
                in_block[i] = true;
            }
            if s.n_treated > s.units.len() {
                return Err(SupportError::UnsatisfiableCounts(format!(
                    "stratum {} has {} units but requires {} treated",
                    s.label,
                    s.units.len(),
                    s.n_treated
                )));
            }
            blocks.push(CountBlock { units: s.units.clone(), n_treated: s.n_treated });
        }

        let rest: Vec<usize> = (0..self.n_units).filter(|&i| !in_block[i]).collect();
        let mut free_units = Vec::new();
        match total {
            Some(k) => {
                let in_strata: usize = blocks.iter().map(|b| b.n_treated).sum();
                let Some(rest_treated) = k.checked_sub(in_strata) else {
                    return Err(SupportError::UnsatisfiableCounts(format!(
                        "stratum counts sum to {in_strata}, above the total of {k}"
                    )));
                };
                if rest_treated > rest.len() {
                    return Err(SupportError::UnsatisfiableCounts(format!(
                        "total {k} needs {rest_treated} treated among the {} unconstrained units",
                        rest.len()
                    )));
                }
                if !rest.is_empty() {
                    blocks.push(CountBlock { units: rest, n_treated: rest_treated });
                } else if rest_treated != 0 {
                    return Err(SupportError::UnsatisfiableCounts(format!(
                        "stratum counts sum to {in_strata} but the total is {k}"
                    )));
                }
            }
            None => free_units = rest,
        }

        let structure = CountStructure { blocks, free_units };
        if self.nondegenerate && !structure.implies_nondegenerate(self.n_units) {
            return Err(SupportError::NotCountStructured(
                "a nondegeneracy clause is only count-structured when the count \
                 constraints already force it"
                    .into(),
            ));
        }
        Ok(structure)
    }
}

/// Disjoint unit blocks with pinned treated counts; units outside every
/// block are unconstrained.
#[derive(Debug, Clone)]
pub struct CountStructure {
    pub blocks: Vec<CountBlock>,
    pub free_units: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CountBlock {
    pub units: Vec<usize>,
    pub n_treated: usize,
}

impl CountStructure {
    /// Whether every assignment matching the counts is nondegenerate.
    /// Free units can always go either way, so both arms must be forced by
    /// the blocks themselves: some block treats at least one unit, and some
    /// block leaves at least one unit in control.
    fn implies_nondegenerate(&self, n_units: usize) -> bool {
        if n_units == 0 {
            return false;
        }
        let some_treated = self.blocks.iter().any(|b| b.n_treated >= 1);
        let some_control = self.blocks.iter().any(|b| b.n_treated < b.units.len());
        some_treated && some_control
    }

    /// Sum of the pinned counts, if every unit is pinned.
    pub fn implied_total(&self) -> Option<usize> {
        if self.free_units.is_empty() {
            Some(self.blocks.iter().map(|b| b.n_treated).sum())
        } else {
            None
        }
    }
}

/// Which assignments a randomization distribution ranges over.
#[derive(Debug, Clone)]
pub enum SupportSpec {
    /// Every assignment in the cube.
    Full,
    /// Every assignment with at least one treated and one control unit.
    Nondegenerate,
    /// Every assignment with exactly this many treated units.
    FixedTotal(usize),
    /// Every assignment satisfying the criterion.
    Criterion(AcceptanceCriterion),
}

impl SupportSpec {
    /// The support expressed as an acceptance criterion, which is how the
    /// sampling engines consume it.
    pub fn to_criterion(&self) -> AcceptanceCriterion {
        match self {
            SupportSpec::Full => AcceptanceCriterion::accept_all(),
            SupportSpec::Nondegenerate => AcceptanceCriterion::nondegenerate(),
            SupportSpec::FixedTotal(k) => AcceptanceCriterion::total_treated(*k),
            SupportSpec::Criterion(c) => c.clone(),
        }
    }

    /// Number of assignments in the support, when it is cheap to know
    /// without a scan. Saturates at `u128::MAX` for very large cubes.
    pub fn size(&self, n_units: usize) -> Option<u128> {
        match self {
            SupportSpec::Full => Some(cube_size(n_units)),
            SupportSpec::Nondegenerate => Some(cube_size(n_units).saturating_sub(2)),
            SupportSpec::FixedTotal(k) => Some(binomial_u128(n_units, *k)),
            SupportSpec::Criterion(_) => None,
        }
    }
}

fn cube_size(n_units: usize) -> u128 {
    if n_units >= 128 {
        u128::MAX
    } else {
        1u128 << n_units
    }
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        let Some(next) = acc.checked_mul((n - i) as u128) else {
            return u128::MAX;
        };
        acc = next / (i as u128 + 1);
    }
    acc
}

fn validate_fixed_total(n_units: usize, n_treated: usize) -> Result<(), SupportError> {
    if n_treated == 0 || n_treated >= n_units {
        return Err(SupportError::InvalidFixedTotal { n_treated, units: n_units });
    }
    Ok(())
}

/// Streams every assignment in the support, in lexicographic order of the
/// indicator string (unit 1 varies slowest).
///
/// The scan is refused when it would visit more than `limit` assignments;
/// criterion supports scan the full cube and filter, so they require the
/// whole cube to fit under the limit. [`DEFAULT_ENUMERATION_LIMIT`] is a
/// deliberate guard — exact answers above it belong to the sampling engines.
pub fn enumerate_support<'d>(
    design: &'d PropensityDesign,
    support: &SupportSpec,
    limit: u64,
) -> Result<SupportEnumeration<'d>, SupportError> {
    let n = design.n_units();
    let check = |size: u128| -> Result<(), SupportError> {
        if size > limit as u128 {
            Err(SupportError::TooLarge { size, limit })
        } else {
            Ok(())
        }
    };
    let state = match support {
        SupportSpec::Full => {
            check(cube_size(n))?;
            EnumState::Range { next: 0, end: 1u128 << n }
        }
        SupportSpec::Nondegenerate => {
            check(cube_size(n).saturating_sub(2))?;
            EnumState::Range { next: 1, end: (1u128 << n) - 1 }
        }
        SupportSpec::FixedTotal(k) => {
            validate_fixed_total(n, *k)?;
            check(binomial_u128(n, *k))?;
            EnumState::Slice { positions: (0..*k).collect(), done: false }
        }
        SupportSpec::Criterion(c) => {
            check(cube_size(n))?;
            let compiled = CompiledCriterion::compile(c, design)?;
            EnumState::Filtered { next: 0, end: 1u128 << n, compiled, design }
        }
    };
    Ok(SupportEnumeration { n, state })
}

/// Iterator over a support's assignments; see [`enumerate_support`].
pub struct SupportEnumeration<'d> {
    n: usize,
    state: EnumState<'d>,
}

enum EnumState<'d> {
    Range { next: u128, end: u128 },
    Slice { positions: Vec<usize>, done: bool },
    Filtered { next: u128, end: u128, compiled: CompiledCriterion, design: &'d PropensityDesign },
}

/// Unit 1 is the most significant bit, so ascending words enumerate
/// indicator strings in lexicographic order.
fn word_to_assignment(word: u128, n: usize) -> Assignment {
    Assignment::new((0..n).map(|i| word >> (n - 1 - i) & 1 == 1).collect())
}

/// Advances a sorted k-subset of `{0, …, n−1}` to its colexicographic
/// successor; returns false after the last subset. Colex order over bit
/// positions counted from the string's right end is exactly lexicographic
/// order of the indicator strings.
fn next_colex_subset(positions: &mut [usize], n: usize) -> bool {
    let k = positions.len();
    for t in 0..k {
        let ceiling = if t + 1 < k { positions[t + 1] } else { n };
        if positions[t] + 1 < ceiling {
            positions[t] += 1;
            for (j, p) in positions[..t].iter_mut().enumerate() {
                *p = j;
            }
            return true;
        }
    }
    false
}

fn slice_assignment(positions: &[usize], n: usize) -> Assignment {
    let mut bits = vec![false; n];
    for &p in positions {
        bits[n - 1 - p] = true;
    }
    Assignment::new(bits)
}

impl Iterator for SupportEnumeration<'_> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        match &mut self.state {
            EnumState::Range { next, end } => {
                if next >= end {
                    return None;
                }
                let w = word_to_assignment(*next, self.n);
                *next += 1;
                Some(w)
            }
            EnumState::Slice { positions, done } => {
                if *done {
                    return None;
                }
                let w = slice_assignment(positions, self.n);
                *done = !next_colex_subset(positions, self.n);
                Some(w)
            }
            EnumState::Filtered { next, end, compiled, design } => {
                while next < end {
                    let w = word_to_assignment(*next, self.n);
                    *next += 1;
                    if compiled.accepts(&w, design) {
                        return Some(w);
                    }
                }
                None
            }
        }
    }
}

/// The support's normalizing constant: the Bernoulli-kernel probability mass
/// the support carries.
///
/// Full supports normalize to one; the nondegenerate cube subtracts the two
/// degenerate corners in closed form; fixed-total slices use the exact
/// success-count recurrence; general criteria sum kernels over an
/// enumeration (bounded by [`DEFAULT_ENUMERATION_LIMIT`]) with compensated
/// accumulation.
pub fn support_normalizer(
    design: &PropensityDesign,
    support: &SupportSpec,
) -> Result<f64, SupportError> {
    match support {
        SupportSpec::Full => Ok(1.0),
        SupportSpec::Nondegenerate => {
            Ok(1.0 - design.all_treated_probability() - design.all_control_probability())
        }
        SupportSpec::FixedTotal(k) => {
            validate_fixed_total(design.n_units(), *k)?;
            Ok(poisson_binomial_pmf(design.propensities(), *k)?)
        }
        SupportSpec::Criterion(_) => {
            let mut sum = CompensatedSum::new();
            for w in enumerate_support(design, support, DEFAULT_ENUMERATION_LIMIT)? {
                sum.add(design.assignment_kernel(&w));
            }
            Ok(sum.value())
        }
    }
}

/// Probability of one assignment under the design restricted to a support:
/// zero off the support, the renormalized kernel on it.
pub fn assignment_probability(
    design: &PropensityDesign,
    w: &Assignment,
    support: &SupportSpec,
) -> Result<f64, SupportError> {
    design.check_len(w)?;
    let member = match support {
        SupportSpec::Full => true,
        SupportSpec::Nondegenerate => !w.is_degenerate(),
        SupportSpec::FixedTotal(k) => {
            validate_fixed_total(design.n_units(), *k)?;
            w.n_treated() == *k
        }
        SupportSpec::Criterion(c) => CompiledCriterion::compile(c, design)?.accepts(w, design),
    };
    if !member {
        return Ok(0.0);
    }
    Ok(design.assignment_kernel(w) / support_normalizer(design, support)?)
}
