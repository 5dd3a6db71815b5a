//! Perturbation recipes.
//!
//! Every recipe derives a candidate instance from a base instance without
//! touching variable/row counts, names or order, and only changes the
//! components of its variation mask. All randomness comes from the stream
//! passed in; the draw order below is part of the reproducibility contract.

use super::rng::SplitMix64;
use super::GenError;
use crate::model::{Component, Instance, Row, Sense, VarKind, Variable, VariationMask};

/// Cosine of the angle between two vectors: `<a, b> / (|a| |b|)`.
///
/// Zero vectors have no direction; asking for their similarity is an error
/// rather than a silent 0, since a made-up value would corrupt candidate
/// selection.
pub fn similarity(a: &[f64], b: &[f64]) -> Result<f64, GenError> {
    if a.len() != b.len() {
        return Err(GenError::Structural(format!(
            "similarity of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(GenError::ZeroVector);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Similarity between the masked components of two structurally identical
/// instances, compared over the positions where the base value is finite.
/// `None` when the comparison is undefined (zero or empty vectors).
pub fn variation_similarity(base: &Instance, other: &Instance, mask: VariationMask) -> Option<f64> {
    let mut va = Vec::new();
    let mut vb = Vec::new();
    let mut push = |x: f64, y: f64| {
        if x.is_finite() {
            va.push(x);
            vb.push(y);
        }
    };
    for c in mask.components() {
        match c {
            Component::Lo => {
                for (a, b) in base.variables.iter().zip(&other.variables) {
                    push(a.lower, b.lower);
                }
            }
            Component::Up => {
                for (a, b) in base.variables.iter().zip(&other.variables) {
                    push(a.upper, b.upper);
                }
            }
            Component::Obj => {
                for (a, b) in base.variables.iter().zip(&other.variables) {
                    push(a.objective_coefficient, b.objective_coefficient);
                }
            }
            Component::Lhs => {
                for (a, b) in base.rows.iter().zip(&other.rows) {
                    push(a.lhs, b.lhs);
                }
            }
            Component::Rhs => {
                for (a, b) in base.rows.iter().zip(&other.rows) {
                    push(a.rhs, b.rhs);
                }
            }
            Component::Mat => {}
        }
    }
    similarity(&va, &vb).ok()
}

fn binary_like(v: &Variable) -> bool {
    match v.kind {
        VarKind::Binary => true,
        VarKind::GeneralInteger => v.lower == 0.0 && v.upper == 1.0,
        VarKind::Continuous => false,
    }
}

/// Resamples the upper bounds of general integer variables.
///
/// Draw order: for each general integer variable with a finite positive upper
/// bound `u`, in instance order, one selection coin; if selected, one draw of
/// an integer uniform in `{0, ..., round((1 + max_relative_change) * u)}`.
/// The new bound is clamped upward to the lower bound. Mask: `{UP}`.
pub fn perturb_bounds(
    base: &Instance,
    max_relative_change: f64,
    rng: &mut SplitMix64,
) -> Result<Instance, GenError> {
    if !(0.0..=1.0).contains(&max_relative_change) {
        return Err(GenError::InvalidParameters(format!(
            "max_relative_change {max_relative_change} outside [0, 1]"
        )));
    }
    let eligible = |v: &Variable| {
        v.kind == VarKind::GeneralInteger && v.upper.is_finite() && v.upper > 0.0
    };
    if !base.variables.iter().any(eligible) {
        return Err(GenError::RecipeInapplicable {
            recipe: "bound_perturb",
            reason: "no general integer variable with a finite positive upper bound".into(),
        });
    }
    let mut out = base.clone();
    for v in out.variables.iter_mut().filter(|v| eligible(v)) {
        if rng.coin() {
            let hi = ((1.0 + max_relative_change) * v.upper).round();
            let drawn = rng.below(hi as u64 + 1) as f64;
            v.upper = drawn.max(v.lower);
        }
    }
    Ok(out)
}

/// Fixes a random subset of the binary variables to random values.
///
/// Draw order: one uniform fraction in `[fraction_low, fraction_high]`
/// determining `k = round(fraction * #binaries)`; a partial Fisher-Yates
/// shuffle over the eligible indices drawing `k` selection positions; then
/// one 0/1 value per fixed variable in ascending instance order. Binary here
/// means kind binary or a general integer with the unit box `[0, 1]`.
/// Mask: `{LO, UP}`.
pub fn fix_binaries(
    base: &Instance,
    fraction_low: f64,
    fraction_high: f64,
    rng: &mut SplitMix64,
) -> Result<Instance, GenError> {
    if !(0.0..=1.0).contains(&fraction_low)
        || !(0.0..=1.0).contains(&fraction_high)
        || fraction_low > fraction_high
    {
        return Err(GenError::InvalidParameters(format!(
            "fractions ({fraction_low}, {fraction_high}) must satisfy 0 <= low <= high <= 1"
        )));
    }
    let mut indices: Vec<usize> = base
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| binary_like(v))
        .map(|(j, _)| j)
        .collect();
    if indices.is_empty() {
        return Err(GenError::RecipeInapplicable {
            recipe: "binary_fix",
            reason: "instance has no binary variables".into(),
        });
    }
    let fraction = rng.uniform(fraction_low, fraction_high);
    let k = (fraction * indices.len() as f64).round() as usize;
    let k = k.min(indices.len());
    for t in 0..k {
        let j = t + rng.below((indices.len() - t) as u64) as usize;
        indices.swap(t, j);
    }
    let mut chosen: Vec<usize> = indices[..k].to_vec();
    chosen.sort_unstable();

    let mut out = base.clone();
    for &j in &chosen {
        let value = rng.below(2) as f64;
        out.variables[j].lower = value;
        out.variables[j].upper = value;
    }
    Ok(out)
}

/// Applies multiplicative noise and random plane rotations to the objective.
///
/// Draw order: one factor uniform in `[1 - noise, 1 + noise]` per variable in
/// instance order; then per rotation one first coordinate `below(n)`, one
/// second coordinate `below(n - 1)` (shifted past the first), and one angle
/// uniform in `[-max_angle, max_angle]`. Mask: `{OBJ}`.
pub fn perturb_objective(
    base: &Instance,
    relative_noise: f64,
    rotation_pairs: usize,
    max_angle_radians: f64,
    rng: &mut SplitMix64,
) -> Result<Instance, GenError> {
    if relative_noise < 0.0 {
        return Err(GenError::InvalidParameters(format!(
            "relative_noise {relative_noise} must be nonnegative"
        )));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&max_angle_radians) {
        return Err(GenError::InvalidParameters(format!(
            "max_angle_radians {max_angle_radians} outside [0, pi/2]"
        )));
    }
    let n = base.variables.len();
    if base.variables.iter().all(|v| v.objective_coefficient == 0.0) {
        return Err(GenError::RecipeInapplicable {
            recipe: "obj_perturb_rotate",
            reason: "objective vector is zero".into(),
        });
    }
    if rotation_pairs > 0 && n < 2 {
        return Err(GenError::RecipeInapplicable {
            recipe: "obj_perturb_rotate",
            reason: "rotations need at least two variables".into(),
        });
    }
    let mut c: Vec<f64> = base.variables.iter().map(|v| v.objective_coefficient).collect();
    for coef in c.iter_mut() {
        *coef *= rng.uniform(1.0 - relative_noise, 1.0 + relative_noise);
    }
    for _ in 0..rotation_pairs {
        let i = rng.below(n as u64) as usize;
        let mut j = rng.below(n as u64 - 1) as usize;
        if j >= i {
            j += 1;
        }
        let theta = rng.uniform(-max_angle_radians, max_angle_radians);
        let (sin, cos) = theta.sin_cos();
        let (ci, cj) = (c[i], c[j]);
        c[i] = ci * cos - cj * sin;
        c[j] = ci * sin + cj * cos;
    }
    let mut out = base.clone();
    for (v, coef) in out.variables.iter_mut().zip(c) {
        v.objective_coefficient = coef;
    }
    Ok(out)
}

/// Replaces every finite right-hand side by `lambda * a + (1 - lambda) * b`.
///
/// The vectors index the finite-rhs rows in row order. Deterministic; no
/// randomness involved. Mask: `{RHS}`.
pub fn rhs_convex_combination(
    base: &Instance,
    rhs_a: &[f64],
    rhs_b: &[f64],
    lambda: f64,
) -> Result<Instance, GenError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(GenError::InvalidParameters(format!("lambda {lambda} outside [0, 1]")));
    }
    let finite: Vec<usize> = base
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rhs.is_finite())
        .map(|(i, _)| i)
        .collect();
    if rhs_a.len() != finite.len() || rhs_b.len() != finite.len() {
        return Err(GenError::Structural(format!(
            "instance has {} finite-rhs rows but vectors have {} and {} entries",
            finite.len(),
            rhs_a.len(),
            rhs_b.len()
        )));
    }
    let mut out = base.clone();
    for (k, &i) in finite.iter().enumerate() {
        let new_rhs = lambda * rhs_a[k] + (1.0 - lambda) * rhs_b[k];
        if out.rows[i].lhs > new_rhs {
            return Err(GenError::Structural(format!(
                "row {:?}: combined rhs {} falls below lhs {}",
                out.rows[i].name, new_rhs, out.rows[i].lhs
            )));
        }
        out.rows[i].rhs = new_rhs;
    }
    Ok(out)
}

/// Perturbs finite nonnegative row sides multiplicatively.
///
/// Draw order: per row in instance order, lhs before rhs; each finite
/// nonnegative side gets one selection coin and, if selected, one relative
/// offset uniform in `[-max_relative_change, +max_relative_change]`. Sides
/// are swapped afterwards if the perturbation inverted them.
/// Mask: `{LHS, RHS}`.
pub fn perturb_sides(
    base: &Instance,
    max_relative_change: f64,
    rng: &mut SplitMix64,
) -> Result<Instance, GenError> {
    if !(0.0..=1.0).contains(&max_relative_change) || max_relative_change == 0.0 {
        return Err(GenError::InvalidParameters(format!(
            "max_relative_change {max_relative_change} outside (0, 1]"
        )));
    }
    let eligible = |s: f64| s.is_finite() && s >= 0.0;
    if !base.rows.iter().any(|r| eligible(r.lhs) || eligible(r.rhs)) {
        return Err(GenError::RecipeInapplicable {
            recipe: "side_perturb",
            reason: "no finite nonnegative row sides".into(),
        });
    }
    let mut out = base.clone();
    for row in out.rows.iter_mut() {
        if eligible(row.lhs) && rng.coin() {
            row.lhs *= 1.0 + rng.uniform(-max_relative_change, max_relative_change);
        }
        if eligible(row.rhs) && rng.coin() {
            row.rhs *= 1.0 + rng.uniform(-max_relative_change, max_relative_change);
        }
        if row.lhs > row.rhs {
            std::mem::swap(&mut row.lhs, &mut row.rhs);
        }
    }
    Ok(out)
}

/// Parameter ranges of the synthetic semicontinuous generator.
///
/// The zero solution is always feasible (`B_LO >= 0`), and mixed-sign
/// objective coefficients make the optimum a genuine selection over the
/// binary activations rather than the all-zero point.
pub mod synthetic_params {
    /// Constraint matrix entries are uniform in `[-A_RANGE, A_RANGE]`.
    pub const A_RANGE: f64 = 10.0;
    /// Probability that a matrix entry is present.
    pub const A_DENSITY: f64 = 0.2;
    /// Objective coefficients are uniform in `[C_LO, C_HI]`.
    pub const C_LO: f64 = -10.0;
    pub const C_HI: f64 = 10.0;
    /// Semicontinuous interval endpoints satisfy `0 <= l <= u <= LU_HI`.
    pub const LU_HI: f64 = 10.0;
    /// Capacity right-hand sides are uniform in `[B_LO, B_HI]`.
    pub const B_LO: f64 = 0.0;
    pub const B_HI: f64 = 20.0;
}

/// Builds a synthetic semicontinuous instance
///
/// ```text
///   min c'x   s.t.  Ax <= b,   l_j y_j <= x_j <= u_j y_j,
///             x in R^n (x >= 0),  y in {0, 1}^n
/// ```
///
/// with each linking inequality encoded as its own row, plus two candidate
/// rhs vectors for use with [`rhs_convex_combination`]. The returned vectors
/// cover *all* finite-rhs rows: `m` drawn capacity entries followed by `n`
/// zeros for the upper linking rows, so convex combinations leave the linking
/// structure untouched.
///
/// Draw order: `c_1..c_n`; then row-major matrix entries (one presence draw
/// each, one value draw when present); then `(l_j, u_j)` pairs with
/// `l ~ U[0, 10]` and `u ~ U[l, 10]`; then the `m` entries of `rhs_a`; then
/// the `m` entries of `rhs_b`.
pub fn gen_synthetic_semicontinuous(
    n: usize,
    m: usize,
    rng: &mut SplitMix64,
) -> Result<(Instance, Vec<f64>, Vec<f64>), GenError> {
    use synthetic_params as p;
    if n == 0 || m == 0 {
        return Err(GenError::InvalidParameters("need at least one variable and one row".into()));
    }
    let c: Vec<f64> = (0..n).map(|_| rng.uniform(p::C_LO, p::C_HI)).collect();
    let mut cap_coeffs: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.next_f64() < p::A_DENSITY {
                let value = rng.uniform(-p::A_RANGE, p::A_RANGE);
                if value != 0.0 {
                    coeffs.push((j, value));
                }
            }
        }
        cap_coeffs.push(coeffs);
    }
    let lu: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let l = rng.uniform(0.0, p::LU_HI);
            let u = rng.uniform(l, p::LU_HI);
            (l, u)
        })
        .collect();
    let mut rhs_a: Vec<f64> = (0..m).map(|_| rng.uniform(p::B_LO, p::B_HI)).collect();
    let mut rhs_b: Vec<f64> = (0..m).map(|_| rng.uniform(p::B_LO, p::B_HI)).collect();

    let mut variables = Vec::with_capacity(2 * n);
    for (j, &cj) in c.iter().enumerate() {
        variables.push(Variable {
            name: format!("x{}", j + 1),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: f64::INFINITY,
            objective_coefficient: cj,
        });
    }
    for j in 0..n {
        variables.push(Variable {
            name: format!("y{}", j + 1),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
            objective_coefficient: 0.0,
        });
    }

    let mut rows = Vec::with_capacity(m + 2 * n);
    for (i, coeffs) in cap_coeffs.into_iter().enumerate() {
        rows.push(Row::new(format!("cap{}", i + 1), coeffs, f64::NEG_INFINITY, rhs_a[i]));
    }
    for (j, &(l, u)) in lu.iter().enumerate() {
        // x_j - l_j y_j >= 0  and  x_j - u_j y_j <= 0
        rows.push(Row::new(
            format!("lo{}", j + 1),
            vec![(j, 1.0), (n + j, -l)],
            0.0,
            f64::INFINITY,
        ));
        rows.push(Row::new(
            format!("up{}", j + 1),
            vec![(j, 1.0), (n + j, -u)],
            f64::NEG_INFINITY,
            0.0,
        ));
    }

    let instance = Instance {
        name: "synthetic".into(),
        sense: Sense::Minimize,
        objective_constant: 0.0,
        variables,
        rows,
    };
    rhs_a.extend(std::iter::repeat(0.0).take(n));
    rhs_b.extend(std::iter::repeat(0.0).take(n));
    Ok((instance, rhs_a, rhs_b))
}
