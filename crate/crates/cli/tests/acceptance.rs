//! Acceptance suite.
//!
//! Each test exercises one acceptance criterion at its stated tolerance and
//! prints a single pass/fail line (visible with `--nocapture`):
//!
//! ```text
//! cargo test -p reoptbench-cli --test acceptance -- --nocapture
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use reoptbench::harness::events::{validate_event_log, EndPayload, RunEvent, SolveStatus};
use reoptbench::harness::record::RunLimits;
use reoptbench::model::{structural_diff, Instance, Row, Sense, VarKind, Variable};
use reoptbench::mps::{parse_mps, write_mps, MpsDialect};
use reoptbench::oracle::{enumerate_solve, EnumerableInstance};
use reoptbench::reopt::{carry_incumbent, solve_reopt, CarryState, OracleBackend};
use reoptbench::score::{
    batch_report, build_rank_table, final_score, gap, instance_score, instance_weight,
    rank_instance, ScoreRecord, SolveOutcome,
};
use reoptbench::simgen::recipes::similarity;
use reoptbench::simgen::{
    self, generate_candidates, AssemblyConfig, GeneratorSpec, Recipe,
};

fn report(criterion: u32, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("acceptance criterion {criterion:02} ({name}): {verdict}");
    assert!(ok, "criterion {criterion} ({name}) failed: {detail}");
}

fn outcome(
    time: f64,
    limit: f64,
    solved: bool,
    pb: Option<f64>,
    db: Option<f64>,
    feasible: bool,
) -> SolveOutcome {
    SolveOutcome {
        time_spent_seconds: time,
        time_limit_seconds: limit,
        solved_to_optimality: solved,
        primal_bound: pb,
        dual_bound: db,
        has_feasible_solution: feasible,
        stopped_early_without_zero_gap: false,
    }
}

struct Lcg(u64);

impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[test]
fn criterion_01_scoring_tiers() {
    let start = Instant::now();
    let solved = instance_score(1, 1, &outcome(150.0, 600.0, true, Some(5.0), Some(5.0), true));
    let incumbent =
        instance_score(1, 2, &outcome(600.0, 600.0, false, Some(11.0), Some(10.0), true));
    let hopeless = instance_score(1, 3, &outcome(600.0, 600.0, false, None, None, false));

    let mut ok = (solved.f - 0.25).abs() <= 1e-12 && (0.0..=1.0).contains(&solved.f);
    let expected_incumbent = 1.0 + 1.0 / 11.0;
    ok &= (incumbent.f - expected_incumbent).abs() <= 1e-12
        && incumbent.f > 1.0
        && incumbent.f <= 2.0;
    ok &= (hopeless.f - 3.0).abs() <= 1e-12;
    ok &= start.elapsed().as_secs_f64() < 1.0;
    report(
        1,
        "scoring tier reproduction",
        ok,
        &format!("f values: {} / {} / {}", solved.f, incumbent.f, hopeless.f),
    );
}

#[test]
fn criterion_02_boundary_continuity() {
    let limit = 600.0;
    let solved = instance_score(1, 1, &outcome(0.999 * limit, limit, true, Some(2.0), Some(2.0), true));
    let from_below = solved.f < 1.0 && (1.0 - solved.f) <= 1e-3 + 1e-12;

    let pb = 1.0 + 1e-6;
    let timeout = instance_score(1, 2, &outcome(limit, limit, false, Some(pb), Some(1.0), true));
    let from_above = timeout.f > 1.0 && (timeout.f - 1.0) <= 1e-3;
    report(
        2,
        "boundary continuity",
        from_below && from_above,
        &format!("solved f = {}, timeout f = {}", solved.f, timeout.f),
    );
}

#[test]
fn criterion_03_final_score_arithmetic() {
    let cells: BTreeMap<(u32, u32), (f64, bool)> = (1..=50).map(|i| ((1, i), (0.3, true))).collect();
    let per_team: BTreeMap<String, BTreeMap<(u32, u32), (f64, bool)>> =
        [("solo".to_string(), cells)].into();
    let table = build_rank_table(&per_team, 50).unwrap();
    let c = final_score(&table).unwrap()["solo"];
    let ok = c == 177.5 && instance_weight(10) == 2.0 && instance_weight(50) == 6.0;
    report(
        3,
        "final-score arithmetic",
        ok,
        &format!("C = {c}, w(10) = {}, w(50) = {}", instance_weight(10), instance_weight(50)),
    );
}

#[test]
fn criterion_04_ranking_rules() {
    let scores: BTreeMap<String, f64> =
        [("a", 0.5), ("b", 0.5), ("c", 1.2)].map(|(t, f)| (t.to_string(), f)).into();
    let validity: BTreeMap<String, bool> = scores.keys().map(|t| (t.clone(), true)).collect();
    let ranks = rank_instance(&scores, &validity);
    let tie_ok = ranks["a"] == 1 && ranks["b"] == 1 && ranks["c"] == 3;

    let scores4: BTreeMap<String, f64> = [("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.4)]
        .map(|(t, f)| (t.to_string(), f))
        .into();
    let mut validity4: BTreeMap<String, bool> = scores4.keys().map(|t| (t.clone(), true)).collect();
    validity4.insert("d".into(), false);
    let ranks4 = rank_instance(&scores4, &validity4);
    let invalid_ok = ranks4["d"] == 8;
    report(
        4,
        "ranking rules",
        tie_ok && invalid_ok,
        &format!("tie ranks {ranks:?}, invalid rank {}", ranks4["d"]),
    );
}

#[test]
fn criterion_05_gap_function() {
    let table_ok = gap(Some(0.0), Some(0.0)) == 0.0
        && gap(Some(f64::INFINITY), Some(3.0)) == 1.0
        && gap(Some(-10.0), Some(5.0)) == 1.0
        && gap(Some(10.0), Some(5.0)) == 0.5;

    let mut rng = Lcg(0xACCE5501);
    let mut scale_ok = true;
    for _ in 0..1000 {
        let pb = rng.next_f64() * 200.0 - 100.0;
        let db = rng.next_f64() * 200.0 - 100.0;
        let alpha = 10f64.powf(rng.next_f64() * 8.0 - 4.0);
        let drift = (gap(Some(alpha * pb), Some(alpha * db)) - gap(Some(pb), Some(db))).abs();
        if drift > 1e-12 {
            scale_ok = false;
            break;
        }
    }
    report(5, "gap function", table_ok && scale_ok, "branch table or scale invariance");
}

fn desk_base() -> Instance {
    let mut variables = Vec::new();
    for j in 0..8 {
        variables.push(Variable {
            name: format!("b{j}"),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
            objective_coefficient: 1.5 + j as f64,
        });
    }
    for j in 0..6 {
        variables.push(Variable {
            name: format!("g{j}"),
            kind: VarKind::GeneralInteger,
            lower: 0.0,
            upper: 10.0 + j as f64,
            objective_coefficient: -2.0 + 0.5 * j as f64,
        });
    }
    for j in 0..4 {
        variables.push(Variable {
            name: format!("c{j}"),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: 25.0,
            objective_coefficient: 0.25 * (j as f64 + 1.0),
        });
    }
    let rows = vec![
        Row::new("cap1", (0..8).map(|j| (j, 1.0 + j as f64)).collect(), f64::NEG_INFINITY, 22.0),
        Row::new("cap2", (8..14).map(|j| (j, 2.0)).collect(), f64::NEG_INFINITY, 31.5),
        Row::new("band", vec![(14, 1.0), (15, 1.0)], 5.0, 40.0),
        Row::new("link", vec![(0, 3.0), (8, -1.0), (16, 0.5)], 0.0, 12.0),
        Row::new("fix", vec![(1, 1.0), (9, 1.0)], 6.0, 6.0),
    ];
    Instance {
        name: "deskbase".into(),
        sense: Sense::Minimize,
        objective_constant: 1.25,
        variables,
        rows,
    }
}

fn all_recipes() -> Vec<(Recipe, Option<Instance>)> {
    let base = desk_base();
    let finite_rhs = base.rows.iter().filter(|r| r.rhs.is_finite()).count();
    let rhs_a: Vec<f64> = (0..finite_rhs).map(|i| 20.0 + 2.0 * i as f64).collect();
    let rhs_b: Vec<f64> = (0..finite_rhs).map(|i| 30.0 + 3.0 * i as f64).collect();
    vec![
        (Recipe::BoundPerturb { max_relative_change: 1.0 }, Some(base.clone())),
        (Recipe::BinaryFix { fraction_low: 0.15, fraction_high: 0.25 }, Some(base.clone())),
        (
            Recipe::ObjPerturbRotate { relative_noise: 0.05, rotation_pairs: 10, max_angle_radians: 0.1 },
            Some(base.clone()),
        ),
        (Recipe::RhsConvex { rhs_a, rhs_b }, Some(base.clone())),
        (Recipe::SidePerturb { max_relative_change: 0.7 }, Some(base)),
        (Recipe::SyntheticSemicontinuous { variables: 6, rows: 3 }, None),
    ]
}

fn build_series(recipe: &Recipe, base: Option<&Instance>, seed: u64) -> (Vec<Instance>, Instance) {
    let spec = GeneratorSpec { recipe: recipe.clone(), seed, candidate_count: 60 };
    let (candidates, derived) = generate_candidates(&spec, base).unwrap();
    let config = AssemblyConfig { time_limit_override: Some(60.0), ..Default::default() };
    let (_, instances) =
        simgen::assemble_series(recipe.name(), &candidates, recipe.mask(), seed, "base", &config)
            .unwrap();
    (instances, derived)
}

#[test]
fn criterion_06_series_structural_contract() {
    let mut ok = true;
    let mut detail = String::new();
    for (recipe, base) in all_recipes() {
        let started = Instant::now();
        for seed in [101u64, 202, 303] {
            let (instances, derived) = build_series(&recipe, base.as_ref(), seed);
            if instances.len() != 50 {
                ok = false;
                detail = format!("{} seed {seed}: {} instances", recipe.name(), instances.len());
                break;
            }
            for inst in &instances {
                match structural_diff(&derived, inst) {
                    Ok(changed) if changed.is_subset_of(recipe.mask()) => {}
                    Ok(changed) => {
                        ok = false;
                        detail = format!(
                            "{} seed {seed}: out-of-mask changes {changed}",
                            recipe.name()
                        );
                    }
                    Err(e) => {
                        ok = false;
                        detail = format!("{} seed {seed}: structure broke: {e}", recipe.name());
                    }
                }
            }
        }
        if started.elapsed().as_secs_f64() >= 60.0 {
            ok = false;
            detail = format!("{} took over a minute for 3 seeds", recipe.name());
        }
        if !ok {
            break;
        }
    }
    report(6, "series structural contract", ok, &detail);
}

#[test]
fn criterion_07_determinism_and_roundtrip() {
    let bin = env!("CARGO_BIN_EXE_reoptbench");
    let tmp = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut detail = String::new();

    // Byte-identical regeneration through the CLI.
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for dir in &dirs {
        let output = Command::new(bin)
            .args([
                "generate",
                "--recipe",
                "synthetic_semicontinuous",
                "--seed",
                "99",
                "--time-limit",
                "30",
                "--out",
                &dir.display().to_string(),
            ])
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    }
    let snap = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        v.sort();
        v
    };
    if snap(&dirs[0]) != snap(&dirs[1]) {
        ok = false;
        detail = "regenerated directories differ".into();
    }

    // Library-level regeneration and MPS round-trips for every recipe.
    let dialect = MpsDialect::default();
    for (recipe, base) in all_recipes() {
        let (first, _) = build_series(&recipe, base.as_ref(), 55);
        let (second, _) = build_series(&recipe, base.as_ref(), 55);
        for (a, b) in first.iter().zip(&second) {
            let text_a = write_mps(a, &dialect).unwrap();
            let text_b = write_mps(b, &dialect).unwrap();
            if text_a != text_b {
                ok = false;
                detail = format!("{}: regenerated bytes differ", recipe.name());
            }
            let reparsed = parse_mps(&text_a, &dialect).unwrap().instance;
            if !reparsed.bit_eq(a) {
                ok = false;
                detail = format!("{}: parse(write(i)) drifted", recipe.name());
            }
            let again = write_mps(&reparsed, &dialect).unwrap();
            if again != text_a {
                ok = false;
                detail = format!("{}: write is not stable under reparse", recipe.name());
            }
        }
    }
    report(7, "determinism and MPS round-trip", ok, &detail);
}

#[test]
fn criterion_08_oracle_equivalence() {
    let backend = OracleBackend::default();
    let mut rng = Lcg(0x04AC1E08);
    let mut ok = true;
    let mut detail = String::new();

    for case in 0..100 {
        let n = 4 + (rng.next_f64() * 9.0) as usize; // 4..=12 binaries
        let weights: Vec<f64> = (0..n).map(|_| (rng.next_f64() * 9.0).floor() + 1.0).collect();
        let profits: Vec<f64> = (0..n).map(|_| (rng.next_f64() * 9.0).floor() + 1.0).collect();
        let capacity = weights.iter().sum::<f64>() * 0.45;
        let inst = Instance {
            name: format!("rand{case}"),
            sense: Sense::Maximize,
            objective_constant: 0.0,
            variables: (0..n)
                .map(|j| Variable {
                    name: format!("x{j}"),
                    kind: VarKind::Binary,
                    lower: 0.0,
                    upper: 1.0,
                    objective_coefficient: profits[j],
                })
                .collect(),
            rows: vec![Row::new(
                "cap",
                weights.iter().enumerate().map(|(j, &w)| (j, w)).collect(),
                f64::NEG_INFINITY,
                capacity,
            )],
        };
        let direct = enumerate_solve(&EnumerableInstance::try_new(inst.clone()).unwrap(), 30.0);
        let (via_reopt, _) = solve_reopt(CarryState::new(), &inst, 30.0, &backend);
        if via_reopt.outcome.primal_bound != direct.outcome.primal_bound {
            ok = false;
            detail = format!(
                "case {case}: reopt {:?} vs oracle {:?}",
                via_reopt.outcome.primal_bound, direct.outcome.primal_bound
            );
            break;
        }
    }

    // OBJ-variation series: warm incumbents must exist for instances 2..10
    // and agree with oracle re-evaluation.
    if ok {
        let mut state = CarryState::new();
        for k in 0..10u32 {
            // Ten binaries, one cover row; only the objective drifts with k.
            let inst = Instance {
                name: "objvar".into(),
                sense: Sense::Minimize,
                objective_constant: 0.0,
                variables: (0..10)
                    .map(|j| Variable {
                        name: format!("x{j}"),
                        kind: VarKind::Binary,
                        lower: 0.0,
                        upper: 1.0,
                        objective_coefficient: 2.0
                            + f64::from(j)
                            + 0.37 * f64::from((k * 7 + j) % 5),
                    })
                    .collect(),
                rows: vec![Row::new(
                    "pick",
                    (0..10usize).map(|j| (j, 1.0)).collect(),
                    3.0,
                    f64::INFINITY,
                )],
            };
            if k > 0 {
                match carry_incumbent(&state, &inst) {
                    Ok(Some(warm)) => {
                        let reevaluated = inst.objective_value(&warm.solution).unwrap();
                        if (warm.objective - reevaluated).abs() > 1e-9 {
                            ok = false;
                            detail = format!(
                                "warm objective {} vs re-evaluation {reevaluated}",
                                warm.objective
                            );
                        }
                    }
                    Ok(None) => {
                        ok = false;
                        detail = format!("instance {k}: OBJ-only series must keep a warm incumbent");
                    }
                    Err(e) => {
                        ok = false;
                        detail = e.to_string();
                    }
                }
            }
            let (_, next) = solve_reopt(state, &inst, 30.0, &backend);
            state = next;
            if !ok {
                break;
            }
        }
    }
    report(8, "oracle equivalence", ok, &detail);
}

#[test]
fn criterion_09_harness_protocol_conformance() {
    let started = Instant::now();
    let bin = env!("CARGO_BIN_EXE_reoptbench");
    let tmp = tempfile::tempdir().unwrap();
    let series = tmp.path().join("series");
    let output = Command::new(bin)
        .args([
            "generate",
            "--recipe",
            "synthetic_semicontinuous",
            "--seed",
            "17",
            "--time-limit",
            "1",
            "--out",
            &series.display().to_string(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let manifest_path = series.join("manifest.json");
    let limits = RunLimits::for_series(1.0, 50);
    let solver = vec![bin.to_string(), "solve".to_string()];
    let record = reoptbench::harness::run_series(&solver, &manifest_path, &limits).unwrap();

    let mut ok = record.protocol_violations.is_empty() && record.outcomes.len() == 50;
    let mut detail = format!(
        "{} violations, {} outcomes",
        record.protocol_violations.len(),
        record.outcomes.len()
    );

    // Mutation fixtures: each named violation must be reported.
    let canonical: Vec<RunEvent> = {
        let mut events = vec![RunEvent::series_start(0.0)];
        let mut t = 0.0;
        for i in 1..=50u32 {
            t += 0.5;
            events.push(RunEvent::instance_begin(i, t));
            t += 0.5;
            events.push(RunEvent::instance_end(
                i,
                t,
                EndPayload {
                    primal_bound: Some(1.0),
                    dual_bound: Some(1.0),
                    status: SolveStatus::Optimal,
                    solution_path: None,
                },
            ));
        }
        events.push(RunEvent::series_end(t + 1.0));
        events
    };
    if !validate_event_log(&canonical, 50).is_empty() {
        ok = false;
        detail = "canonical log flagged".into();
    }

    // Reordered events.
    let mut reordered = canonical.clone();
    reordered.swap(1, 3); // begin(1) <-> begin(2)
    let violations = validate_event_log(&reordered, 50);
    if !violations.iter().any(|v| v.contains("still open") || v.contains("indices must increase")) {
        ok = false;
        detail = format!("reordering not flagged: {violations:?}");
    }

    // Duplicate finalization.
    let mut duplicated = canonical.clone();
    let dup = duplicated[2].clone();
    let mut dup2 = dup.clone();
    dup2.timestamp_monotonic_seconds = duplicated.last().unwrap().timestamp_monotonic_seconds + 1.0;
    let end = duplicated.len() - 1;
    duplicated.insert(end, dup2);
    duplicated.last_mut().unwrap().timestamp_monotonic_seconds += 2.0;
    let violations = validate_event_log(&duplicated, 50);
    if !violations.iter().any(|v| v.contains("result modified after finalization")) {
        ok = false;
        detail = format!("duplicate finalization not flagged: {violations:?}");
    }

    // Missing index.
    let missing: Vec<RunEvent> =
        canonical.iter().filter(|e| e.instance_index != 13).cloned().collect();
    let violations = validate_event_log(&missing, 50);
    if !violations.iter().any(|v| v.contains("instance 13 missing")) {
        ok = false;
        detail = format!("missing index not flagged: {violations:?}");
    }

    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 300.0 {
        ok = false;
        detail = format!("end-to-end run took {elapsed} s");
    }
    report(9, "harness protocol conformance", ok, &detail);
}

#[test]
fn criterion_10_similarity() {
    let exact = similarity(&[3.0, 4.0], &[3.0, 4.0]).unwrap() == 1.0
        && similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap() == 0.0
        && similarity(&[3.0, 4.0], &[-3.0, -4.0]).unwrap() == -1.0;

    let mut rng = Lcg(0x5151_0001);
    let mut in_range = true;
    for _ in 0..10_000 {
        let n = 1 + (rng.next_f64() * 16.0) as usize;
        let a: Vec<f64> = (0..n).map(|_| rng.next_f64() * 2000.0 - 1000.0).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.next_f64() * 2000.0 - 1000.0).collect();
        if let Ok(s) = similarity(&a, &b) {
            if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&s) {
                in_range = false;
                break;
            }
        }
    }
    report(10, "similarity", exact && in_range, "fixtures or range");
}

#[test]
fn criterion_11_batch_reporting() {
    let records: Vec<ScoreRecord> = (1..=50)
        .map(|i| ScoreRecord {
            series: 1,
            instance: i,
            reltime: f64::from(i) / 50.0,
            gap: 0.0,
            nofeas: 0,
            f: f64::from(i) / 50.0,
        })
        .collect();
    let rep = batch_report(&records).unwrap();
    let expected = [0.11, 0.31, 0.51, 0.71, 0.91];
    let ok = rep
        .batches
        .iter()
        .zip(expected)
        .all(|(b, e)| b.reltime == e)
        && rep.overall.reltime == 0.51;
    let got: Vec<f64> = rep.batches.iter().map(|b| b.reltime).collect();
    report(11, "batch reporting", ok, &format!("batch means {got:?}"));
}
