use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use reoptbench::model::Instance;
use reoptbench::mps::{self, MpsDialect};
use reoptbench::oracle::{self, EnumerableInstance};
use reoptbench::simgen::{
    assemble_series, generate_candidates, write_series, AssemblyConfig, GeneratorSpec, Recipe,
};

use super::{io_error, CliError};

#[derive(Args)]
pub struct GenerateArgs {
    /// Recipe: bound_perturb, binary_fix, obj_perturb_rotate, rhs_convex,
    /// side_perturb or synthetic_semicontinuous
    #[arg(long)]
    recipe: Option<String>,
    /// Generation seed; identical seeds regenerate byte-identical series
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the numbered MPS files and manifest.json
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON configuration file with the same keys as the long flags
    /// (snake_case); explicit flags take precedence over it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base instance (MPS); required by every recipe except the synthetic one
    #[arg(long)]
    base: Option<PathBuf>,
    /// Series length [default: 50]
    #[arg(long)]
    count: Option<usize>,
    /// Candidate pool size before selection [default: 60]
    #[arg(long)]
    candidates: Option<usize>,
    /// Per-instance time limit recorded in the manifest (seconds); without
    /// it the limit is derived from measured candidate solve times
    #[arg(long)]
    time_limit: Option<f64>,
    /// Keep only candidates whose measured solve time lies in LO:HI seconds
    #[arg(long, value_parser = parse_band)]
    time_band: Option<(f64, f64)>,
    /// Keep only candidates whose similarity to the base lies in LO:HI
    #[arg(long, value_parser = parse_band)]
    similarity_band: Option<(f64, f64)>,
    /// Measure candidate solve times with the built-in enumeration solver
    #[arg(long)]
    measure_times: bool,
    /// Series name [default: `<recipe>_s<seed>`]
    #[arg(long)]
    series_name: Option<String>,

    /// bound_perturb / side_perturb: maximum relative change
    /// [defaults: 1.0 / 0.7]
    #[arg(long)]
    max_change: Option<f64>,
    /// binary_fix: smallest fraction of binaries to fix [default: 0.15]
    #[arg(long)]
    fraction_low: Option<f64>,
    /// binary_fix: largest fraction of binaries to fix [default: 0.25]
    #[arg(long)]
    fraction_high: Option<f64>,
    /// obj_perturb_rotate: multiplicative noise amplitude [default: 0.05]
    #[arg(long)]
    noise: Option<f64>,
    /// obj_perturb_rotate: number of random plane rotations [default: 10]
    #[arg(long)]
    rotations: Option<usize>,
    /// obj_perturb_rotate: maximum rotation angle in radians [default: 0.1]
    #[arg(long)]
    max_angle: Option<f64>,
    /// rhs_convex: file with one rhs value per finite-rhs row (endpoint A)
    #[arg(long)]
    rhs_a: Option<PathBuf>,
    /// rhs_convex: file with one rhs value per finite-rhs row (endpoint B)
    #[arg(long)]
    rhs_b: Option<PathBuf>,
    /// synthetic_semicontinuous: number of semicontinuous variables
    /// [default: 6]
    #[arg(long)]
    vars: Option<usize>,
    /// synthetic_semicontinuous: number of capacity rows [default: 3]
    #[arg(long)]
    rows: Option<usize>,
}

/// File-backed defaults; any explicit flag wins over these, and built-in
/// defaults fill whatever remains.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateConfig {
    recipe: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    base: Option<PathBuf>,
    count: Option<usize>,
    candidates: Option<usize>,
    time_limit: Option<f64>,
    time_band: Option<String>,
    similarity_band: Option<String>,
    measure_times: Option<bool>,
    series_name: Option<String>,
    max_change: Option<f64>,
    fraction_low: Option<f64>,
    fraction_high: Option<f64>,
    noise: Option<f64>,
    rotations: Option<usize>,
    max_angle: Option<f64>,
    rhs_a: Option<PathBuf>,
    rhs_b: Option<PathBuf>,
    vars: Option<usize>,
    rows: Option<usize>,
}

/// Fully resolved settings after the flag > config > default merge.
struct Settings {
    recipe: String,
    seed: u64,
    out: PathBuf,
    base: Option<PathBuf>,
    count: usize,
    candidates: usize,
    time_limit: Option<f64>,
    time_band: (f64, f64),
    similarity_band: (f64, f64),
    measure_times: bool,
    series_name: Option<String>,
    max_change: Option<f64>,
    fraction_low: f64,
    fraction_high: f64,
    noise: f64,
    rotations: usize,
    max_angle: f64,
    rhs_a: Option<PathBuf>,
    rhs_b: Option<PathBuf>,
    vars: usize,
    rows: usize,
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let parse = |t: &str| -> Result<f64, String> {
        match t {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => t.parse().map_err(|_| format!("bad bound {t:?}")),
        }
    };
    Ok((parse(lo)?, parse(hi)?))
}

fn resolve(args: GenerateArgs) -> Result<Settings, CliError> {
    let config: GenerateConfig = match &args.config {
        None => GenerateConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| io_error(&path.display().to_string(), e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
    };
    let band = |flag: Option<(f64, f64)>, from_config: &Option<String>| -> Result<Option<(f64, f64)>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        from_config
            .as_deref()
            .map(|s| parse_band(s).map_err(CliError::Usage))
            .transpose()
    };
    let missing = |flag: &str| CliError::Usage(format!("--{flag} is required (flag or config file)"));
    Ok(Settings {
        recipe: args.recipe.or(config.recipe).ok_or_else(|| missing("recipe"))?,
        seed: args.seed.or(config.seed).ok_or_else(|| missing("seed"))?,
        out: args.out.or(config.out).ok_or_else(|| missing("out"))?,
        base: args.base.or(config.base),
        count: args.count.or(config.count).unwrap_or(50),
        candidates: args.candidates.or(config.candidates).unwrap_or(60),
        time_limit: args.time_limit.or(config.time_limit),
        time_band: band(args.time_band, &config.time_band)?.unwrap_or((0.0, f64::INFINITY)),
        similarity_band: band(args.similarity_band, &config.similarity_band)?
            .unwrap_or((-1.0, 1.0)),
        measure_times: args.measure_times || config.measure_times.unwrap_or(false),
        series_name: args.series_name.or(config.series_name),
        max_change: args.max_change.or(config.max_change),
        fraction_low: args.fraction_low.or(config.fraction_low).unwrap_or(0.15),
        fraction_high: args.fraction_high.or(config.fraction_high).unwrap_or(0.25),
        noise: args.noise.or(config.noise).unwrap_or(0.05),
        rotations: args.rotations.or(config.rotations).unwrap_or(10),
        max_angle: args.max_angle.or(config.max_angle).unwrap_or(0.1),
        rhs_a: args.rhs_a.or(config.rhs_a),
        rhs_b: args.rhs_b.or(config.rhs_b),
        vars: args.vars.or(config.vars).unwrap_or(6),
        rows: args.rows.or(config.rows).unwrap_or(3),
    })
}

fn read_vector(path: &PathBuf) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(&path.display().to_string(), e))?;
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Domain(format!("{}: bad value {t:?}", path.display())))
        })
        .collect()
}

fn build_recipe(settings: &Settings) -> Result<Recipe, CliError> {
    let recipe = match settings.recipe.as_str() {
        "bound_perturb" => Recipe::BoundPerturb {
            max_relative_change: settings.max_change.unwrap_or(1.0),
        },
        "binary_fix" => Recipe::BinaryFix {
            fraction_low: settings.fraction_low,
            fraction_high: settings.fraction_high,
        },
        "obj_perturb_rotate" => Recipe::ObjPerturbRotate {
            relative_noise: settings.noise,
            rotation_pairs: settings.rotations,
            max_angle_radians: settings.max_angle,
        },
        "rhs_convex" => {
            let (Some(a), Some(b)) = (&settings.rhs_a, &settings.rhs_b) else {
                return Err(CliError::Usage(
                    "recipe rhs_convex needs --rhs-a and --rhs-b".into(),
                ));
            };
            Recipe::RhsConvex { rhs_a: read_vector(a)?, rhs_b: read_vector(b)? }
        }
        "side_perturb" => Recipe::SidePerturb {
            max_relative_change: settings.max_change.unwrap_or(0.7),
        },
        "synthetic_semicontinuous" => Recipe::SyntheticSemicontinuous {
            variables: settings.vars,
            rows: settings.rows,
        },
        other => return Err(CliError::Usage(format!("unknown recipe {other:?}"))),
    };
    Ok(recipe)
}

pub fn run(args: GenerateArgs) -> Result<(), CliError> {
    let settings = resolve(args)?;
    let recipe = build_recipe(&settings)?;
    let base: Option<Instance> = match (&settings.base, recipe.needs_base()) {
        (Some(path), true) => Some(mps::parse_mps_file(path, &MpsDialect::default())?.instance),
        (None, true) => {
            return Err(CliError::Usage(format!(
                "recipe {} needs --base <mps file>",
                recipe.name()
            )))
        }
        (Some(_), false) => {
            return Err(CliError::Usage(
                "the synthetic recipe builds its own base; drop --base".into(),
            ))
        }
        (None, false) => None,
    };

    let spec = GeneratorSpec {
        recipe: recipe.clone(),
        seed: settings.seed,
        candidate_count: settings.candidates.max(settings.count),
    };
    let (mut candidates, _) = generate_candidates(&spec, base.as_ref())?;

    if settings.measure_times {
        for c in candidates.iter_mut() {
            if let Ok(enumerable) =
                EnumerableInstance::with_cap(c.instance.clone(), oracle::DEFAULT_DOMAIN_CAP)
            {
                let result = oracle::enumerate_solve(&enumerable, f64::INFINITY);
                if result.outcome.solved_to_optimality {
                    c.solve_time_seconds = Some(result.outcome.time_spent_seconds);
                }
            }
        }
    }

    let config = AssemblyConfig {
        target: settings.count,
        time_band: settings.time_band,
        similarity_band: settings.similarity_band,
        time_limit_override: settings.time_limit,
    };
    let series_name = settings
        .series_name
        .clone()
        .unwrap_or_else(|| format!("{}_s{}", recipe.name(), settings.seed));
    let base_label = settings
        .base
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "synthetic".into());
    let (manifest, instances) = assemble_series(
        &series_name,
        &candidates,
        recipe.mask(),
        settings.seed,
        &base_label,
        &config,
    )?;
    let manifest_path = write_series(&settings.out, &manifest, &instances, &MpsDialect::default())?;
    println!("wrote {} instances and {}", instances.len(), manifest_path.display());
    Ok(())
}
