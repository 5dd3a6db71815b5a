//! Structural contracts of generated series: every instance matches its base
//! in counts, names and order; differences stay inside the recipe's mask;
//! identical seeds regenerate byte-identical series; and every emitted file
//! survives a parse/write/parse cycle field-equal.

use reoptbench::model::{structural_diff, Instance, Row, Sense, VarKind, Variable};
use reoptbench::mps::{parse_mps, write_mps, MpsDialect};
use reoptbench::simgen::{
    self, generate_candidates, AssemblyConfig, GeneratorSpec, Recipe,
};

/// A desk-scale mixed base: binaries, bounded general integers and
/// nonnegative two-sided rows, so every file-based recipe applies.
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
    let inst = Instance {
        name: "deskbase".into(),
        sense: Sense::Minimize,
        objective_constant: 1.25,
        variables,
        rows,
    };
    inst.validate().expect("fixture is valid");
    inst
}

fn recipes_under_test() -> Vec<(Recipe, Option<Instance>)> {
    let base = desk_base();
    // rhs vectors for the convex recipe: one entry per finite-rhs row.
    let finite_rhs: usize = base.rows.iter().filter(|r| r.rhs.is_finite()).count();
    let rhs_a: Vec<f64> = (0..finite_rhs).map(|i| 20.0 + 2.0 * i as f64).collect();
    let rhs_b: Vec<f64> = (0..finite_rhs).map(|i| 30.0 + 3.0 * i as f64).collect();
    vec![
        (Recipe::BoundPerturb { max_relative_change: 1.0 }, Some(base.clone())),
        (Recipe::BinaryFix { fraction_low: 0.15, fraction_high: 0.25 }, Some(base.clone())),
        (
            Recipe::ObjPerturbRotate {
                relative_noise: 0.05,
                rotation_pairs: 10,
                max_angle_radians: 0.1,
            },
            Some(base.clone()),
        ),
        (Recipe::RhsConvex { rhs_a, rhs_b }, Some(base.clone())),
        (Recipe::SidePerturb { max_relative_change: 0.7 }, Some(base)),
        (Recipe::SyntheticSemicontinuous { variables: 6, rows: 3 }, None),
    ]
}

fn assemble_fifty(
    recipe: &Recipe,
    base: Option<&Instance>,
    seed: u64,
) -> (simgen::SeriesManifest, Vec<Instance>, Instance) {
    let spec = GeneratorSpec { recipe: recipe.clone(), seed, candidate_count: 60 };
    let (candidates, derived_base) = generate_candidates(&spec, base).expect("generation succeeds");
    let config = AssemblyConfig { time_limit_override: Some(60.0), ..Default::default() };
    let label = if recipe.needs_base() { "base.mps" } else { "synthetic" };
    let (manifest, instances) =
        simgen::assemble_series(recipe.name(), &candidates, recipe.mask(), seed, label, &config)
            .expect("assembly succeeds");
    (manifest, instances, derived_base)
}

#[test]
fn differences_stay_inside_the_recipe_mask() {
    for (recipe, base) in recipes_under_test() {
        for seed in [11u64, 22, 33] {
            let (manifest, instances, derived_base) = assemble_fifty(&recipe, base.as_ref(), seed);
            assert_eq!(instances.len(), 50);
            assert_eq!(manifest.instance_files.len(), 50);
            assert_eq!(manifest.variation_mask, recipe.mask());
            for (k, inst) in instances.iter().enumerate() {
                assert_eq!(inst.num_variables(), derived_base.num_variables());
                assert_eq!(inst.num_rows(), derived_base.num_rows());
                let changed = structural_diff(&derived_base, inst).unwrap_or_else(|e| {
                    panic!("{} seed {seed} instance {k}: structure broke: {e}", recipe.name())
                });
                assert!(
                    changed.is_subset_of(recipe.mask()),
                    "{} seed {seed} instance {k}: out-of-mask changes {changed} vs mask {}",
                    recipe.name(),
                    recipe.mask()
                );
            }
        }
    }
}

#[test]
fn identical_seeds_regenerate_byte_identical_series() {
    for (recipe, base) in recipes_under_test() {
        let (manifest_a, instances_a, _) = assemble_fifty(&recipe, base.as_ref(), 7);
        let (manifest_b, instances_b, _) = assemble_fifty(&recipe, base.as_ref(), 7);
        assert_eq!(manifest_a, manifest_b, "{} manifest drift", recipe.name());
        let dialect = MpsDialect::default();
        for (a, b) in instances_a.iter().zip(&instances_b) {
            let text_a = write_mps(a, &dialect).unwrap();
            let text_b = write_mps(b, &dialect).unwrap();
            assert_eq!(text_a, text_b, "{} emitted bytes drift", recipe.name());
        }

        let (_, instances_c, _) = assemble_fifty(&recipe, base.as_ref(), 8);
        let any_equal = instances_a
            .iter()
            .zip(&instances_c)
            .all(|(a, c)| write_mps(a, &dialect).unwrap() == write_mps(c, &dialect).unwrap());
        if recipe.needs_base() && !matches!(recipe, Recipe::RhsConvex { .. }) {
            assert!(!any_equal, "{} ignores its seed", recipe.name());
        }
    }
}

#[test]
fn emitted_files_reparse_field_equal() {
    let dir = tempfile::tempdir().unwrap();
    for (recipe, base) in recipes_under_test() {
        let (manifest, instances, _) = assemble_fifty(&recipe, base.as_ref(), 33);
        let series_dir = dir.path().join(recipe.name());
        let manifest_path =
            simgen::write_series(&series_dir, &manifest, &instances, &MpsDialect::default())
                .expect("series writes");
        let loaded = simgen::load_manifest(&manifest_path).unwrap();
        assert_eq!(loaded, manifest);
        for (path, original) in simgen::instance_paths(&loaded, &manifest_path).iter().zip(&instances) {
            let text = std::fs::read_to_string(path).unwrap();
            let parsed = parse_mps(&text, &MpsDialect::default()).unwrap().instance;
            assert!(parsed.bit_eq(original), "{}: {} drifted", recipe.name(), path.display());
            // parse . write . parse is stable too
            let rewritten = write_mps(&parsed, &MpsDialect::default()).unwrap();
            assert_eq!(rewritten, text);
        }
    }
}

/// On a positive-orthant fixture the angle between two grid points grows
/// with their lambda distance, so pairwise similarity decreases in
/// `|lambda_i - lambda_j|`.
#[test]
fn similarity_declines_with_lambda_distance() {
    use reoptbench::simgen::recipes::similarity;
    let rhs_a = [3.0, 1.0, 2.0, 5.0];
    let rhs_b = [1.0, 4.0, 1.0, 0.5];
    let grid: Vec<Vec<f64>> = (0..50)
        .map(|k| {
            let lambda = k as f64 / 49.0;
            rhs_a
                .iter()
                .zip(&rhs_b)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect()
        })
        .collect();
    for i in 0..grid.len() {
        let mut previous = 2.0;
        for j in (i + 1)..grid.len() {
            let s = similarity(&grid[i], &grid[j]).unwrap();
            assert!(
                s <= previous + 1e-12,
                "similarity must not increase with |lambda_i - lambda_j| (i={i}, j={j})"
            );
            previous = s;
        }
    }

    // The generated synthetic grid ends at lambda = 1, which is the base rhs.
    let spec = GeneratorSpec {
        recipe: Recipe::SyntheticSemicontinuous { variables: 6, rows: 3 },
        seed: 5,
        candidate_count: 50,
    };
    let (candidates, _) = generate_candidates(&spec, None).unwrap();
    let last = candidates[49].similarity_to_base.expect("rhs similarity defined");
    assert!((last - 1.0).abs() <= 1e-12, "the base end of the grid is identical");
}

#[test]
fn binary_fix_counts_follow_the_fraction_band() {
    let base = desk_base();
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..1000u64 {
        let spec = GeneratorSpec {
            recipe: Recipe::BinaryFix { fraction_low: 0.15, fraction_high: 0.25 },
            seed,
            candidate_count: 2,
        };
        let (candidates, _) = generate_candidates(&spec, Some(&base)).unwrap();
        for c in &candidates {
            let fixed = c
                .instance
                .variables
                .iter()
                .zip(&base.variables)
                .filter(|(v, b)| b.kind == VarKind::Binary && v.lower == v.upper)
                .count();
            seen.insert(fixed);
        }
    }
    // 8 binaries at fractions [0.15, 0.25]: round(phi * 8) is 1 or 2.
    assert_eq!(seen, [1usize, 2].into_iter().collect());
}
