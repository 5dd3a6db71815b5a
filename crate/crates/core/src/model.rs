//! In-memory MILP representation, solution evaluation and feasibility checking.
//!
//! An [`Instance`] is
//!
//! ```text
//!   optimize  c'x + constant
//!   s.t.      lhs_i <= a_i'x <= rhs_i   for every row i
//!             lower_j <= x_j <= upper_j for every variable j
//!             x_j integral for binary / general integer variables
//! ```
//!
//! Rows always carry two sides; an equality row has `lhs == rhs` and a
//! classic `<=` row has `lhs == -inf`. Infinite bounds are plain IEEE
//! infinities, never sentinel magnitudes. All types are immutable after
//! construction and all operations are pure.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Variable integrality class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Binary,
    GeneralInteger,
}

impl VarKind {
    pub fn is_integer(self) -> bool {
        matches!(self, VarKind::Binary | VarKind::GeneralInteger)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub objective_coefficient: f64,
}

/// A constraint row `lhs <= a'x <= rhs` with a sparse coefficient list.
///
/// Coefficients are kept sorted by variable index, without duplicates and
/// without explicit zeros; [`Row::new`] establishes that form.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coefficients: Vec<(usize, f64)>,
    pub lhs: f64,
    pub rhs: f64,
}

impl Row {
    /// Builds a row, sorting the coefficients by variable index and dropping
    /// exact zeros. Duplicate indices are rejected by [`Instance::validate`].
    /// Equality rows are canonicalized to bit-identical sides (a `+0.0` /
    /// `-0.0` mix carries no information and has no exact file encoding).
    pub fn new(name: impl Into<String>, mut coefficients: Vec<(usize, f64)>, lhs: f64, mut rhs: f64) -> Self {
        coefficients.retain(|&(_, v)| v != 0.0);
        coefficients.sort_by_key(|&(j, _)| j);
        if lhs == rhs {
            rhs = lhs;
        }
        Row { name: name.into(), coefficients, lhs, rhs }
    }

    /// Row activity `a'x` for a dense value vector.
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(j, c)| c * values[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub sense: Sense,
    pub objective_constant: f64,
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
}

/// Instance components that may vary across the instances of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Lo,
    Up,
    Obj,
    Lhs,
    Rhs,
    Mat,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Lo,
        Component::Up,
        Component::Obj,
        Component::Lhs,
        Component::Rhs,
        Component::Mat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Lo => "LO",
            Component::Up => "UP",
            Component::Obj => "OBJ",
            Component::Lhs => "LHS",
            Component::Rhs => "RHS",
            Component::Mat => "MAT",
        }
    }

    pub fn from_name(name: &str) -> Option<Component> {
        Component::ALL.iter().copied().find(|c| c.name() == name)
    }

    fn bit(self) -> u8 {
        match self {
            Component::Lo => 1,
            Component::Up => 2,
            Component::Obj => 4,
            Component::Lhs => 8,
            Component::Rhs => 16,
            Component::Mat => 32,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of [`Component`] flags.
///
/// Serialized as an array of component names (`["LO", "UP"]`) in canonical
/// LO, UP, OBJ, LHS, RHS, MAT order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VariationMask {
    bits: u8,
}

impl VariationMask {
    pub fn empty() -> Self {
        VariationMask { bits: 0 }
    }

    pub fn of(components: &[Component]) -> Self {
        let mut mask = VariationMask::empty();
        for &c in components {
            mask.bits |= c.bit();
        }
        mask
    }

    pub fn contains(self, c: Component) -> bool {
        self.bits & c.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn is_subset_of(self, other: VariationMask) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn insert(&mut self, c: Component) {
        self.bits |= c.bit();
    }

    pub fn union(self, other: VariationMask) -> VariationMask {
        VariationMask { bits: self.bits | other.bits }
    }

    /// Components present, in canonical order.
    pub fn components(self) -> Vec<Component> {
        Component::ALL.iter().copied().filter(|&c| self.contains(c)).collect()
    }
}

impl fmt::Display for VariationMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.components().iter().map(|c| c.name()).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

impl Serialize for VariationMask {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let names: Vec<&str> = self.components().iter().map(|c| c.name()).collect();
        names.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for VariationMask {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(de)?;
        let mut mask = VariationMask::empty();
        for n in &names {
            let c = Component::from_name(n)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown component {n:?}")))?;
            mask.insert(c);
        }
        Ok(mask)
    }
}

/// A dense replacement for the components named in `mask`.
///
/// Every payload that is present must be covered by the mask and must match
/// the base instance's dimensions. Constraint-matrix deltas are not carried;
/// `MAT` may appear in a mask only as series metadata.
#[derive(Debug, Clone, Default)]
pub struct VariationDelta {
    pub mask: VariationMask,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub objective: Option<Vec<f64>>,
    pub lhs: Option<Vec<f64>>,
    pub rhs: Option<Vec<f64>>,
}

/// Dense primal assignment, one value per variable in instance order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub values: Vec<f64>,
}

impl Solution {
    pub fn new(values: Vec<f64>) -> Self {
        Solution { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Feasibility tolerances.
///
/// Row and bound violations are compared against the absolute tolerance
/// scaled by `1 + |side|`; the integrality tolerance is absolute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasTolerances {
    pub row: f64,
    pub bound: f64,
    pub integrality: f64,
}

impl Default for FeasTolerances {
    fn default() -> Self {
        FeasTolerances { row: 1e-6, bound: 1e-6, integrality: 1e-5 }
    }
}

/// Outcome of a feasibility check. Violations are raw (unscaled) maxima per
/// category; `feasible` compares each violation against its scaled tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasReport {
    pub feasible: bool,
    pub max_bound_violation: f64,
    pub max_row_violation: f64,
    pub max_integrality_violation: f64,
    /// Variable or row with the largest violation relative to its tolerance;
    /// `None` when every violation is exactly zero.
    pub worst_offender: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("solution has {got} values but instance has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("solution value for variable {name} (index {index}) is NaN")]
    NanInSolution { index: usize, name: String },
    #[error("delta carries a {component} payload not covered by its mask")]
    MaskViolation { component: Component },
    #[error("{component} delta has {got} entries but instance needs {expected}")]
    DimensionMismatch { component: Component, expected: usize, got: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("instances are not structurally comparable: {0}")]
    StructureMismatch(String),
}

impl Instance {
    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Checks the data-model invariants: unique names, valid and canonical
    /// coefficient lists, finite coefficients, ordered bounds and sides, and
    /// the binary box restriction.
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |msg: String| Err(ModelError::InvalidInstance(msg));
        let mut var_names = std::collections::HashSet::new();
        for v in &self.variables {
            if !var_names.insert(v.name.as_str()) {
                return err(format!("duplicate variable name {:?}", v.name));
            }
            if v.lower.is_nan() || v.upper.is_nan() {
                return err(format!("variable {:?} has NaN bound", v.name));
            }
            if !v.objective_coefficient.is_finite() {
                return err(format!("variable {:?} has non-finite objective coefficient", v.name));
            }
            if v.lower > v.upper {
                return err(format!(
                    "variable {:?} has lower bound {} above upper bound {}",
                    v.name, v.lower, v.upper
                ));
            }
            if v.kind == VarKind::Binary && !(v.lower >= 0.0 && v.upper <= 1.0) {
                return err(format!("binary variable {:?} has bounds outside [0, 1]", v.name));
            }
        }
        let mut row_names = std::collections::HashSet::new();
        for r in &self.rows {
            if !row_names.insert(r.name.as_str()) {
                return err(format!("duplicate row name {:?}", r.name));
            }
            if r.lhs.is_nan() || r.rhs.is_nan() {
                return err(format!("row {:?} has NaN side", r.name));
            }
            if r.lhs > r.rhs {
                return err(format!("row {:?} has lhs {} above rhs {}", r.name, r.lhs, r.rhs));
            }
            if r.lhs == r.rhs && r.lhs.to_bits() != r.rhs.to_bits() {
                return err(format!(
                    "row {:?} mixes signed zeros across its sides; canonicalize via Row::new",
                    r.name
                ));
            }
            let mut prev: Option<usize> = None;
            for &(j, c) in &r.coefficients {
                if j >= self.variables.len() {
                    return err(format!("row {:?} references variable index {j} out of range", r.name));
                }
                if !c.is_finite() {
                    return err(format!("row {:?} has non-finite coefficient on index {j}", r.name));
                }
                if c == 0.0 {
                    return err(format!("row {:?} stores an explicit zero coefficient", r.name));
                }
                if let Some(p) = prev {
                    if j == p {
                        return err(format!("row {:?} has duplicate coefficient for index {j}", r.name));
                    }
                    if j < p {
                        return err(format!("row {:?} coefficients are not sorted", r.name));
                    }
                }
                prev = Some(j);
            }
        }
        if !self.objective_constant.is_finite() {
            return err("objective constant is not finite".to_string());
        }
        Ok(())
    }

    /// Objective value `constant + c'x` of a dense assignment.
    pub fn objective_value(&self, solution: &Solution) -> Result<f64, ModelError> {
        self.check_length(solution)?;
        Ok(self.objective_of_values(&solution.values))
    }

    /// Same as [`Instance::objective_value`] but on a raw slice whose length
    /// has already been established by the caller.
    pub fn objective_of_values(&self, values: &[f64]) -> f64 {
        let mut acc = self.objective_constant;
        for (v, x) in self.variables.iter().zip(values) {
            acc += v.objective_coefficient * x;
        }
        acc
    }

    fn check_length(&self, solution: &Solution) -> Result<(), ModelError> {
        if solution.len() != self.variables.len() {
            return Err(ModelError::LengthMismatch {
                expected: self.variables.len(),
                got: solution.len(),
            });
        }
        Ok(())
    }

    /// Reports per-category maximum violations of `solution` against this
    /// instance. Deterministic and pure; NaN values are rejected.
    pub fn check_feasibility(
        &self,
        solution: &Solution,
        tolerances: &FeasTolerances,
    ) -> Result<FeasReport, ModelError> {
        self.check_length(solution)?;
        for (j, &x) in solution.values.iter().enumerate() {
            if x.is_nan() {
                return Err(ModelError::NanInSolution { index: j, name: self.variables[j].name.clone() });
            }
        }

        let mut report = FeasReport {
            feasible: true,
            max_bound_violation: 0.0,
            max_row_violation: 0.0,
            max_integrality_violation: 0.0,
            worst_offender: None,
        };
        // Severity of the worst offender, as violation / scaled tolerance.
        let mut worst_ratio = 0.0f64;

        for (v, &x) in self.variables.iter().zip(&solution.values) {
            let lo_viol = bound_violation_below(v.lower, x);
            let up_viol = bound_violation_above(v.upper, x);
            for (viol, side) in [(lo_viol, v.lower), (up_viol, v.upper)] {
                if viol > 0.0 {
                    report.max_bound_violation = report.max_bound_violation.max(viol);
                    let tol = scaled_tolerance(tolerances.bound, side);
                    if viol > tol {
                        report.feasible = false;
                    }
                    track_worst(&mut worst_ratio, &mut report.worst_offender, viol / tol, &v.name);
                }
            }
            if v.kind.is_integer() {
                let viol = integrality_violation(x);
                if viol > 0.0 {
                    report.max_integrality_violation = report.max_integrality_violation.max(viol);
                    if viol > tolerances.integrality {
                        report.feasible = false;
                    }
                    track_worst(
                        &mut worst_ratio,
                        &mut report.worst_offender,
                        viol / tolerances.integrality,
                        &v.name,
                    );
                }
            }
        }

        for r in &self.rows {
            let activity = r.activity(&solution.values);
            let lhs_viol = bound_violation_below(r.lhs, activity);
            let rhs_viol = bound_violation_above(r.rhs, activity);
            for (viol, side) in [(lhs_viol, r.lhs), (rhs_viol, r.rhs)] {
                if viol > 0.0 {
                    report.max_row_violation = report.max_row_violation.max(viol);
                    let tol = scaled_tolerance(tolerances.row, side);
                    if viol > tol {
                        report.feasible = false;
                    }
                    track_worst(&mut worst_ratio, &mut report.worst_offender, viol / tol, &r.name);
                }
            }
        }
        Ok(report)
    }

    /// Fast feasibility test sharing the violation arithmetic of
    /// [`Instance::check_feasibility`] without building a report.
    pub fn is_feasible(&self, values: &[f64], tolerances: &FeasTolerances) -> bool {
        debug_assert_eq!(values.len(), self.variables.len());
        for (v, &x) in self.variables.iter().zip(values) {
            if bound_violation_below(v.lower, x) > scaled_tolerance(tolerances.bound, v.lower)
                || bound_violation_above(v.upper, x) > scaled_tolerance(tolerances.bound, v.upper)
            {
                return false;
            }
            if v.kind.is_integer() && integrality_violation(x) > tolerances.integrality {
                return false;
            }
        }
        for r in &self.rows {
            let activity = r.activity(values);
            if bound_violation_below(r.lhs, activity) > scaled_tolerance(tolerances.row, r.lhs)
                || bound_violation_above(r.rhs, activity) > scaled_tolerance(tolerances.row, r.rhs)
            {
                return false;
            }
        }
        true
    }

    /// Returns a new instance equal to `self` except in the components
    /// replaced by `delta`. Variable count, row count, order and names are
    /// preserved; payloads outside the delta's mask are contract violations.
    pub fn apply_variation(&self, delta: &VariationDelta) -> Result<Instance, ModelError> {
        let nv = self.variables.len();
        let nr = self.rows.len();
        let check = |component: Component, payload: &Option<Vec<f64>>, expected: usize| {
            if let Some(p) = payload {
                if !delta.mask.contains(component) {
                    return Err(ModelError::MaskViolation { component });
                }
                if p.len() != expected {
                    return Err(ModelError::DimensionMismatch {
                        component,
                        expected,
                        got: p.len(),
                    });
                }
            }
            Ok(())
        };
        check(Component::Lo, &delta.lower, nv)?;
        check(Component::Up, &delta.upper, nv)?;
        check(Component::Obj, &delta.objective, nv)?;
        check(Component::Lhs, &delta.lhs, nr)?;
        check(Component::Rhs, &delta.rhs, nr)?;

        let mut out = self.clone();
        if let Some(lo) = &delta.lower {
            for (v, &b) in out.variables.iter_mut().zip(lo) {
                v.lower = b;
            }
        }
        if let Some(up) = &delta.upper {
            for (v, &b) in out.variables.iter_mut().zip(up) {
                v.upper = b;
            }
        }
        if let Some(obj) = &delta.objective {
            for (v, &c) in out.variables.iter_mut().zip(obj) {
                v.objective_coefficient = c;
            }
        }
        if let Some(lhs) = &delta.lhs {
            for (r, &s) in out.rows.iter_mut().zip(lhs) {
                r.lhs = s;
            }
        }
        if let Some(rhs) = &delta.rhs {
            for (r, &s) in out.rows.iter_mut().zip(rhs) {
                r.rhs = s;
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Bit-exact equality on every field, including distinguishing `-0.0`
    /// from `0.0`. `PartialEq` compares reals numerically; the series
    /// contracts need the stricter form.
    pub fn bit_eq(&self, other: &Instance) -> bool {
        self.name == other.name
            && self.sense == other.sense
            && bits(self.objective_constant) == bits(other.objective_constant)
            && self.variables.len() == other.variables.len()
            && self.rows.len() == other.rows.len()
            && self.variables.iter().zip(&other.variables).all(|(a, b)| {
                a.name == b.name
                    && a.kind == b.kind
                    && bits(a.lower) == bits(b.lower)
                    && bits(a.upper) == bits(b.upper)
                    && bits(a.objective_coefficient) == bits(b.objective_coefficient)
            })
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.name == b.name
                    && bits(a.lhs) == bits(b.lhs)
                    && bits(a.rhs) == bits(b.rhs)
                    && a.coefficients.len() == b.coefficients.len()
                    && a.coefficients
                        .iter()
                        .zip(&b.coefficients)
                        .all(|(&(i, x), &(j, y))| i == j && bits(x) == bits(y))
            })
    }
}

fn bits(v: f64) -> u64 {
    v.to_bits()
}

fn scaled_tolerance(absolute: f64, side: f64) -> f64 {
    if side.is_finite() {
        absolute * (1.0 + side.abs())
    } else {
        absolute
    }
}

/// `max(0, bound - value)`; zero for an infinite bound.
pub fn bound_violation_below(bound: f64, value: f64) -> f64 {
    if bound == f64::NEG_INFINITY {
        0.0
    } else {
        (bound - value).max(0.0)
    }
}

/// `max(0, value - bound)`; zero for an infinite bound.
pub fn bound_violation_above(bound: f64, value: f64) -> f64 {
    if bound == f64::INFINITY {
        0.0
    } else {
        (value - bound).max(0.0)
    }
}

/// Distance to the nearest integer.
pub fn integrality_violation(value: f64) -> f64 {
    (value - value.round()).abs()
}

fn track_worst(worst: &mut f64, offender: &mut Option<String>, ratio: f64, name: &str) {
    if ratio > *worst {
        *worst = ratio;
        *offender = Some(name.to_string());
    }
}

/// Compares two instances that are supposed to belong to one series and
/// returns the set of components in which they differ (bit-exact comparison).
///
/// Errors if the instances differ in structure: counts, names, order, sense,
/// or the sparsity pattern positions could not even be compared component by
/// component — except that coefficient *values* on matching positions are a
/// `MAT` difference, not an error.
pub fn structural_diff(base: &Instance, other: &Instance) -> Result<VariationMask, ModelError> {
    let err = |msg: String| Err(ModelError::StructureMismatch(msg));
    if base.variables.len() != other.variables.len() {
        return err(format!(
            "variable count {} vs {}",
            base.variables.len(),
            other.variables.len()
        ));
    }
    if base.rows.len() != other.rows.len() {
        return err(format!("row count {} vs {}", base.rows.len(), other.rows.len()));
    }
    if base.sense != other.sense {
        return err("objective sense differs".to_string());
    }
    if base.name != other.name {
        return err(format!("instance name {:?} vs {:?}", base.name, other.name));
    }
    for (a, b) in base.variables.iter().zip(&other.variables) {
        if a.name != b.name {
            return err(format!("variable name {:?} vs {:?}", a.name, b.name));
        }
        if a.kind != b.kind {
            return err(format!("variable {:?} kind differs", a.name));
        }
    }
    for (a, b) in base.rows.iter().zip(&other.rows) {
        if a.name != b.name {
            return err(format!("row name {:?} vs {:?}", a.name, b.name));
        }
    }

    let mut changed = VariationMask::empty();
    for (a, b) in base.variables.iter().zip(&other.variables) {
        if bits(a.lower) != bits(b.lower) {
            changed.insert(Component::Lo);
        }
        if bits(a.upper) != bits(b.upper) {
            changed.insert(Component::Up);
        }
        if bits(a.objective_coefficient) != bits(b.objective_coefficient) {
            changed.insert(Component::Obj);
        }
    }
    if bits(base.objective_constant) != bits(other.objective_constant) {
        changed.insert(Component::Obj);
    }
    for (a, b) in base.rows.iter().zip(&other.rows) {
        if bits(a.lhs) != bits(b.lhs) {
            changed.insert(Component::Lhs);
        }
        if bits(a.rhs) != bits(b.rhs) {
            changed.insert(Component::Rhs);
        }
        let mat_differs = a.coefficients.len() != b.coefficients.len()
            || a.coefficients
                .iter()
                .zip(&b.coefficients)
                .any(|(&(i, x), &(j, y))| i != j || bits(x) != bits(y));
        if mat_differs {
            changed.insert(Component::Mat);
        }
    }
    Ok(changed)
}
