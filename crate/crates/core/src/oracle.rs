//! Exhaustive enumeration solver for desk-scale instances.
//!
//! The oracle enumerates all integer assignments in lexicographic order
//! (integer variables in instance order, then linked continuous variables in
//! instance order) and keeps the best feasible objective, so completed runs
//! are exact and fully deterministic. Ties are broken toward the
//! lexicographically smallest optimal assignment in that enumeration order.
//!
//! Continuous variables are only supported in semicontinuous linking form:
//! a continuous `x` qualifies when a binary `y` and reals `l <= u` exist
//! with the rows `x - l*y >= 0` and `x - u*y <= 0`. Such an `x` is
//! enumerated over its forced bound grid — `{0}` while `y = 0`, `{l, u}`
//! while `y = 1` — which is exactly the structure produced by the synthetic
//! series generator.

use std::time::Instant;

use thiserror::Error;

use crate::harness::events::SolveStatus;
use crate::model::{FeasTolerances, Instance, Sense, Solution, VarKind};
use crate::score::SolveOutcome;

/// Default cap on the enumerated domain product.
pub const DEFAULT_DOMAIN_CAP: u128 = 1 << 24;

/// Leaves between time-limit checks.
const TIME_CHECK_MASK: u64 = 0xFFF;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance is not enumerable: {0}")]
    NotEnumerable(String),
    #[error("domain product {product} exceeds the cap of {cap}")]
    DomainTooLarge { product: u128, cap: u128 },
}

#[derive(Debug, Clone)]
enum Slot {
    Integer { var: usize, lo: i64, hi: i64 },
    /// Continuous variable forced by linking rows: domain `{0}` when the
    /// binary partner is 0, `{l, u}` when it is 1.
    Linked { var: usize, partner: usize, l: f64, u: f64 },
}

/// An [`Instance`] that passed the enumerability check.
#[derive(Debug, Clone)]
pub struct EnumerableInstance {
    instance: Instance,
    slots: Vec<Slot>,
    domain_product: u128,
}

impl EnumerableInstance {
    /// Structural check with the default domain cap.
    pub fn try_new(instance: Instance) -> Result<Self, OracleError> {
        Self::with_cap(instance, DEFAULT_DOMAIN_CAP)
    }

    pub fn with_cap(instance: Instance, cap: u128) -> Result<Self, OracleError> {
        let mut slots = Vec::new();
        let mut product: u128 = 1;
        for (j, v) in instance.variables.iter().enumerate() {
            if !v.kind.is_integer() {
                continue;
            }
            if !v.lower.is_finite() || !v.upper.is_finite() {
                return Err(OracleError::NotEnumerable(format!(
                    "integer variable {:?} has an infinite bound",
                    v.name
                )));
            }
            let lo = v.lower.ceil() as i64;
            let hi = v.upper.floor() as i64;
            let width = if hi < lo { 0u128 } else { (hi - lo) as u128 + 1 };
            product = product.saturating_mul(width.max(1));
            // An empty lattice keeps width 0 so infeasibility is detected.
            if hi < lo {
                product = 0;
            }
            slots.push(Slot::Integer { var: j, lo, hi });
        }
        for (j, v) in instance.variables.iter().enumerate() {
            if v.kind.is_integer() {
                continue;
            }
            let Some((partner, l, u)) = linking_of(&instance, j) else {
                return Err(OracleError::NotEnumerable(format!(
                    "continuous variable {:?} is not forced by linking rows",
                    v.name
                )));
            };
            product = product.saturating_mul(2);
            slots.push(Slot::Linked { var: j, partner, l, u });
        }
        if product > cap {
            return Err(OracleError::DomainTooLarge { product, cap });
        }
        Ok(EnumerableInstance { instance, slots, domain_product: product })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn domain_product(&self) -> u128 {
        self.domain_product
    }

    pub fn into_instance(self) -> Instance {
        self.instance
    }
}

/// Finds the semicontinuous linking pattern for continuous variable `j`:
/// rows `x_j - l*y >= 0` (sides `[0, +inf)`) and `x_j - u*y <= 0` (sides
/// `(-inf, 0]`) over the same binary partner, with coefficient 1 on `x_j`.
fn linking_of(instance: &Instance, j: usize) -> Option<(usize, f64, f64)> {
    let mut lower: Option<(usize, f64)> = None; // (partner, l)
    let mut upper: Option<(usize, f64)> = None;
    for row in &instance.rows {
        if row.coefficients.len() != 2 {
            continue;
        }
        let (&(a_idx, a_coef), &(b_idx, b_coef)) = (&row.coefficients[0], &row.coefficients[1]);
        let (x_coef, y_idx, y_coef) = if a_idx == j {
            (a_coef, b_idx, b_coef)
        } else if b_idx == j {
            (b_coef, a_idx, a_coef)
        } else {
            continue;
        };
        if x_coef != 1.0 || instance.variables[y_idx].kind != VarKind::Binary {
            continue;
        }
        let bound = -y_coef;
        if row.lhs == 0.0 && row.rhs == f64::INFINITY && lower.is_none() {
            lower = Some((y_idx, bound));
        } else if row.lhs == f64::NEG_INFINITY && row.rhs == 0.0 && upper.is_none() {
            upper = Some((y_idx, bound));
        }
    }
    match (lower, upper) {
        (Some((py, l)), Some((qy, u))) if py == qy && l <= u => Some((py, l, u)),
        _ => None,
    }
}

/// Result of an enumeration run. `outcome` is what gets scored; `solution`
/// carries the best assignment when one exists.
#[derive(Debug, Clone)]
pub struct EnumerationResult {
    pub outcome: SolveOutcome,
    pub solution: Option<Solution>,
    pub status: SolveStatus,
}

/// Solves by exhaustive enumeration. See [`enumerate_solve_seeded`].
pub fn enumerate_solve(instance: &EnumerableInstance, time_limit: f64) -> EnumerationResult {
    enumerate_solve_seeded(instance, time_limit, None)
}

/// Exhaustive enumeration with an optional warm incumbent `(solution,
/// objective)` that seeds the best-known value. The warm seed never changes
/// a completed run's reported optimum or tie-broken assignment: an
/// enumerated assignment of equal objective replaces the seed.
pub fn enumerate_solve_seeded(
    instance: &EnumerableInstance,
    time_limit: f64,
    warm: Option<(&Solution, f64)>,
) -> EnumerationResult {
    let inst = &instance.instance;
    let start = Instant::now();
    let tolerances = FeasTolerances::default();

    let mut best: Option<(f64, Vec<f64>)> = warm.map(|(s, obj)| (obj, s.values.clone()));
    let mut best_is_seed = best.is_some();

    let finished = if time_limit > 0.0 {
        let mut values = vec![0.0f64; inst.variables.len()];
        // Fixed continuous variables outside slots cannot occur (the
        // enumerability check rejects them), so `values` starts all zero and
        // every slot writes its variable before the leaf check.
        let mut leaves: u64 = 0;
        enumerate(
            inst,
            &instance.slots,
            0,
            &mut values,
            &tolerances,
            &mut best,
            &mut best_is_seed,
            &mut leaves,
            &start,
            time_limit,
        )
    } else {
        false
    };

    let elapsed = start.elapsed().as_secs_f64();
    let sense = inst.sense;
    let (outcome, solution, status) = if finished {
        match best {
            Some((obj, values)) => (
                SolveOutcome {
                    time_spent_seconds: elapsed,
                    time_limit_seconds: time_limit,
                    solved_to_optimality: true,
                    primal_bound: Some(obj),
                    dual_bound: Some(obj),
                    has_feasible_solution: true,
                    stopped_early_without_zero_gap: false,
                },
                Some(Solution::new(values)),
                SolveStatus::Optimal,
            ),
            None => {
                // Proven infeasible: the dual bound is the empty-set optimum.
                let db = match sense {
                    Sense::Minimize => f64::INFINITY,
                    Sense::Maximize => f64::NEG_INFINITY,
                };
                (
                    SolveOutcome {
                        time_spent_seconds: elapsed,
                        time_limit_seconds: time_limit,
                        solved_to_optimality: false,
                        primal_bound: None,
                        dual_bound: Some(db),
                        has_feasible_solution: false,
                        stopped_early_without_zero_gap: true,
                    },
                    None,
                    SolveStatus::TimeoutNofeas,
                )
            }
        }
    } else {
        match best {
            Some((obj, values)) => (
                SolveOutcome {
                    time_spent_seconds: elapsed,
                    time_limit_seconds: time_limit,
                    solved_to_optimality: false,
                    primal_bound: Some(obj),
                    dual_bound: None,
                    has_feasible_solution: true,
                    stopped_early_without_zero_gap: false,
                },
                Some(Solution::new(values)),
                SolveStatus::TimeoutIncumbent,
            ),
            None => (
                SolveOutcome {
                    time_spent_seconds: elapsed,
                    time_limit_seconds: time_limit,
                    solved_to_optimality: false,
                    primal_bound: None,
                    dual_bound: None,
                    has_feasible_solution: false,
                    stopped_early_without_zero_gap: false,
                },
                None,
                SolveStatus::TimeoutNofeas,
            ),
        }
    };
    EnumerationResult { outcome, solution, status }
}

/// Depth-first odometer over the slots. Returns false when the time limit
/// struck before the subtree completed.
#[allow(clippy::too_many_arguments)]
fn enumerate(
    inst: &Instance,
    slots: &[Slot],
    depth: usize,
    values: &mut Vec<f64>,
    tolerances: &FeasTolerances,
    best: &mut Option<(f64, Vec<f64>)>,
    best_is_seed: &mut bool,
    leaves: &mut u64,
    start: &Instant,
    time_limit: f64,
) -> bool {
    if depth == slots.len() {
        *leaves += 1;
        if *leaves & TIME_CHECK_MASK == 0 && start.elapsed().as_secs_f64() >= time_limit {
            return false;
        }
        if inst.is_feasible(values, tolerances) {
            let obj = inst.objective_of_values(values);
            let improves = match best {
                None => true,
                Some((incumbent, _)) => match inst.sense {
                    Sense::Minimize => obj < *incumbent || (obj == *incumbent && *best_is_seed),
                    Sense::Maximize => obj > *incumbent || (obj == *incumbent && *best_is_seed),
                },
            };
            if improves {
                *best = Some((obj, values.clone()));
                *best_is_seed = false;
            }
        }
        return true;
    }
    match &slots[depth] {
        Slot::Integer { var, lo, hi } => {
            let mut x = *lo;
            while x <= *hi {
                values[*var] = x as f64;
                if !enumerate(inst, slots, depth + 1, values, tolerances, best, best_is_seed, leaves, start, time_limit) {
                    return false;
                }
                x += 1;
            }
        }
        Slot::Linked { var, partner, l, u } => {
            let active = values[*partner] != 0.0;
            let grid: &[f64] = if !active {
                &[0.0]
            } else if l == u {
                std::slice::from_ref(l)
            } else {
                &[*l, *u]
            };
            // Ascending grid keeps the lexicographic tie-break canonical.
            let mut grid: Vec<f64> = grid.to_vec();
            grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
            for x in grid {
                values[*var] = x;
                if !enumerate(inst, slots, depth + 1, values, tolerances, best, best_is_seed, leaves, start, time_limit) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Row, Variable};

    fn binary(name: &str, obj: f64) -> Variable {
        Variable { name: name.into(), kind: VarKind::Binary, lower: 0.0, upper: 1.0, objective_coefficient: obj }
    }

    #[test]
    fn one_binary_minimum_is_zero() {
        let inst = Instance {
            name: "one".into(),
            sense: Sense::Minimize,
            objective_constant: 0.0,
            variables: vec![binary("x", 1.0)],
            rows: vec![],
        };
        let enumerable = EnumerableInstance::try_new(inst).unwrap();
        let result = enumerate_solve(&enumerable, 10.0);
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_eq!(result.outcome.primal_bound, Some(0.0));
        assert_eq!(result.solution.unwrap().values, vec![0.0]);
    }

    #[test]
    fn infeasible_instance_reports_nofeas() {
        // x1 + x2 >= 3 over two binaries is infeasible.
        let inst = Instance {
            name: "inf".into(),
            sense: Sense::Minimize,
            objective_constant: 0.0,
            variables: vec![binary("a", 1.0), binary("b", 1.0)],
            rows: vec![Row::new("need3", vec![(0, 1.0), (1, 1.0)], 3.0, f64::INFINITY)],
        };
        let enumerable = EnumerableInstance::try_new(inst).unwrap();
        let result = enumerate_solve(&enumerable, 10.0);
        assert_eq!(result.status, SolveStatus::TimeoutNofeas);
        assert!(!result.outcome.has_feasible_solution);
        assert_eq!(result.outcome.primal_bound, None);
        assert_eq!(result.outcome.dual_bound, Some(f64::INFINITY));
        assert!(result.solution.is_none());
    }

    /// Reverse-order second enumeration on a random knapsack.
    #[test]
    fn matches_reverse_order_enumeration() {
        let mut state = 777u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let n = 12;
            let weights: Vec<f64> = (0..n).map(|_| (next() * 9.0).floor() + 1.0).collect();
            let values: Vec<f64> = (0..n).map(|_| (next() * 9.0).floor() + 1.0).collect();
            let capacity = weights.iter().sum::<f64>() * 0.4;
            let inst = Instance {
                name: "knap".into(),
                sense: Sense::Maximize,
                objective_constant: 0.0,
                variables: (0..n).map(|j| binary(&format!("x{j}"), values[j])).collect(),
                rows: vec![Row::new(
                    "cap",
                    weights.iter().enumerate().map(|(j, &w)| (j, w)).collect(),
                    f64::NEG_INFINITY,
                    capacity,
                )],
            };
            let enumerable = EnumerableInstance::try_new(inst.clone()).unwrap();
            let result = enumerate_solve(&enumerable, 30.0);
            assert_eq!(result.status, SolveStatus::Optimal);

            // Independent check: iterate bit patterns from the top down.
            let mut best = f64::NEG_INFINITY;
            for pattern in (0u32..1 << n).rev() {
                let assignment: Vec<f64> = (0..n).map(|j| f64::from(pattern >> j & 1)).collect();
                let weight: f64 = weights.iter().zip(&assignment).map(|(w, v)| w * v).sum();
                if weight <= capacity {
                    best = best.max(values.iter().zip(&assignment).map(|(c, v)| c * v).sum());
                }
            }
            assert_eq!(result.outcome.primal_bound, Some(best));
        }
    }

    #[test]
    fn tie_break_is_lexicographically_smallest() {
        // Two optima: (1, 0) and (0, 1) both cost 1; lexicographic order
        // must produce (0, 1).
        let inst = Instance {
            name: "tie".into(),
            sense: Sense::Minimize,
            objective_constant: 0.0,
            variables: vec![binary("a", 1.0), binary("b", 1.0)],
            rows: vec![Row::new("pick", vec![(0, 1.0), (1, 1.0)], 1.0, f64::INFINITY)],
        };
        let enumerable = EnumerableInstance::try_new(inst).unwrap();
        let result = enumerate_solve(&enumerable, 10.0);
        assert_eq!(result.solution.unwrap().values, vec![0.0, 1.0]);
    }

    #[test]
    fn warm_seed_does_not_change_the_tie_break() {
        let inst = Instance {
            name: "tie".into(),
            sense: Sense::Minimize,
            objective_constant: 0.0,
            variables: vec![binary("a", 1.0), binary("b", 1.0)],
            rows: vec![Row::new("pick", vec![(0, 1.0), (1, 1.0)], 1.0, f64::INFINITY)],
        };
        let enumerable = EnumerableInstance::try_new(inst).unwrap();
        let seed = Solution::new(vec![1.0, 0.0]);
        let result = enumerate_solve_seeded(&enumerable, 10.0, Some((&seed, 1.0)));
        assert_eq!(result.solution.unwrap().values, vec![0.0, 1.0]);
        assert_eq!(result.outcome.primal_bound, Some(1.0));
    }

    #[test]
    fn zero_time_limit_times_out_immediately() {
        let inst = Instance {
            name: "z".into(),
            sense: Sense::Minimize,
            objective_constant: 0.0,
            variables: vec![binary("x", 1.0)],
            rows: vec![],
        };
        let enumerable = EnumerableInstance::try_new(inst).unwrap();
        let cold = enumerate_solve(&enumerable, 0.0);
        assert_eq!(cold.status, SolveStatus::TimeoutNofeas);

        let seed = Solution::new(vec![1.0]);
        let warm = enumerate_solve_seeded(&enumerable, 0.0, Some((&seed, 1.0)));
        assert_eq!(warm.status, SolveStatus::TimeoutIncumbent);
        assert_eq!(warm.outcome.primal_bound, Some(1.0));
    }

    #[test]
    fn cap_is_enforced() {
        let inst = Instance {
            name: "big".into(),
            sense: Sense::Minimize,
            objective_constant: 0.0,
            variables: (0..30).map(|j| binary(&format!("x{j}"), 1.0)).collect(),
            rows: vec![],
        };
        assert!(matches!(
            EnumerableInstance::with_cap(inst, 1 << 20),
            Err(OracleError::DomainTooLarge { .. })
        ));
    }

    #[test]
    fn free_continuous_variable_is_rejected() {
        let inst = Instance {
            name: "cont".into(),
            sense: Sense::Minimize,
            objective_constant: 0.0,
            variables: vec![Variable {
                name: "x".into(),
                kind: VarKind::Continuous,
                lower: 0.0,
                upper: 1.0,
                objective_coefficient: 1.0,
            }],
            rows: vec![],
        };
        assert!(matches!(
            EnumerableInstance::try_new(inst),
            Err(OracleError::NotEnumerable(_))
        ));
    }
}
