//! Series generation: recipes, selection metrics and manifests.
//!
//! A series is built in three steps:
//!
//! 1. [`generate_candidates`] derives `candidate_count` instances from a base
//!    instance (or builds a synthetic base) using the recipe's documented
//!    random streams, and computes the similarity of every candidate to the
//!    base;
//! 2. the caller optionally measures solve times for the candidates (the CLI
//!    uses the enumeration oracle for desk-scale instances);
//! 3. [`assemble_series`] filters the candidates by a solve-time band and a
//!    similarity band, keeps the first `target` qualifiers in generation
//!    order, and produces the ordered instances with a [`SeriesManifest`].
//!
//! Regenerating with the same `(recipe, parameters, seed)` yields
//! byte-identical series.

pub mod recipes;
pub mod rng;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Component, Instance, VariationMask};
use crate::mps::{self, MpsDialect};
use rng::SplitMix64;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("recipe {recipe} is not applicable: {reason}")]
    RecipeInapplicable { recipe: &'static str, reason: String },
    #[error("only {qualifying} of the required {target} candidates qualify ({detail})")]
    InsufficientCandidates { target: usize, qualifying: usize, detail: String },
    #[error("similarity of a zero vector is undefined")]
    ZeroVector,
    #[error("structural error: {0}")]
    Structural(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("no candidate carries a solve time and no explicit time limit was given")]
    NoTimeBasis,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Mps(#[from] mps::MpsError),
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
}

/// Recipe selector with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    BoundPerturb { max_relative_change: f64 },
    BinaryFix { fraction_low: f64, fraction_high: f64 },
    ObjPerturbRotate { relative_noise: f64, rotation_pairs: usize, max_angle_radians: f64 },
    RhsConvex { rhs_a: Vec<f64>, rhs_b: Vec<f64> },
    SidePerturb { max_relative_change: f64 },
    SyntheticSemicontinuous { variables: usize, rows: usize },
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::BoundPerturb { .. } => "bound_perturb",
            Recipe::BinaryFix { .. } => "binary_fix",
            Recipe::ObjPerturbRotate { .. } => "obj_perturb_rotate",
            Recipe::RhsConvex { .. } => "rhs_convex",
            Recipe::SidePerturb { .. } => "side_perturb",
            Recipe::SyntheticSemicontinuous { .. } => "synthetic_semicontinuous",
        }
    }

    pub fn mask(&self) -> VariationMask {
        match self {
            Recipe::BoundPerturb { .. } => VariationMask::of(&[Component::Up]),
            Recipe::BinaryFix { .. } => VariationMask::of(&[Component::Lo, Component::Up]),
            Recipe::ObjPerturbRotate { .. } => VariationMask::of(&[Component::Obj]),
            Recipe::RhsConvex { .. } => VariationMask::of(&[Component::Rhs]),
            Recipe::SidePerturb { .. } => VariationMask::of(&[Component::Lhs, Component::Rhs]),
            Recipe::SyntheticSemicontinuous { .. } => VariationMask::of(&[Component::Rhs]),
        }
    }

    /// Stream key so different recipes never share random draws.
    fn tag(&self) -> u64 {
        match self {
            Recipe::BoundPerturb { .. } => 0xB001,
            Recipe::BinaryFix { .. } => 0xB002,
            Recipe::ObjPerturbRotate { .. } => 0xB003,
            Recipe::RhsConvex { .. } => 0xB004,
            Recipe::SidePerturb { .. } => 0xB005,
            Recipe::SyntheticSemicontinuous { .. } => 0xB006,
        }
    }

    pub fn needs_base(&self) -> bool {
        !matches!(self, Recipe::SyntheticSemicontinuous { .. })
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub recipe: Recipe,
    pub seed: u64,
    pub candidate_count: usize,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.candidate_count < 2 {
            return Err(GenError::InvalidParameters(format!(
                "candidate_count {} is too small",
                self.candidate_count
            )));
        }
        match &self.recipe {
            Recipe::BoundPerturb { max_relative_change }
            | Recipe::SidePerturb { max_relative_change } => {
                if !max_relative_change.is_finite() {
                    return Err(GenError::InvalidParameters("relative change not finite".into()));
                }
            }
            Recipe::BinaryFix { fraction_low, fraction_high } => {
                if !(0.0..=1.0).contains(fraction_low)
                    || !(0.0..=1.0).contains(fraction_high)
                    || fraction_low > fraction_high
                {
                    return Err(GenError::InvalidParameters("fractions outside [0, 1]".into()));
                }
            }
            Recipe::ObjPerturbRotate { relative_noise, max_angle_radians, .. } => {
                if !relative_noise.is_finite() || !max_angle_radians.is_finite() {
                    return Err(GenError::InvalidParameters("noise parameters not finite".into()));
                }
            }
            Recipe::RhsConvex { rhs_a, rhs_b } => {
                if rhs_a.len() != rhs_b.len() {
                    return Err(GenError::InvalidParameters(
                        "rhs vectors have different lengths".into(),
                    ));
                }
            }
            Recipe::SyntheticSemicontinuous { variables, rows } => {
                if *variables == 0 || *rows == 0 {
                    return Err(GenError::InvalidParameters(
                        "synthetic generator needs at least one variable and one row".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A generated instance with its selection metrics.
#[derive(Debug, Clone)]
pub struct CandidateRecord {
    pub instance: Instance,
    pub solve_time_seconds: Option<f64>,
    pub similarity_to_base: Option<f64>,
}

/// On-disk description of a series. Serialized as `manifest.json` with
/// exactly these field names; instance files are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesManifest {
    pub series_name: String,
    pub instance_files: Vec<String>,
    pub variation_mask: VariationMask,
    pub time_limit_seconds: f64,
    pub seed: u64,
    pub base_instance: String,
}

impl SeriesManifest {
    pub fn len(&self) -> usize {
        self.instance_files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instance_files.is_empty()
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.instance_files.is_empty() {
            return Err(GenError::InvalidParameters("manifest lists no instances".into()));
        }
        if !(self.time_limit_seconds > 0.0) {
            return Err(GenError::InvalidParameters(format!(
                "time limit {} must be positive",
                self.time_limit_seconds
            )));
        }
        if self.variation_mask.is_empty() {
            return Err(GenError::InvalidParameters("variation mask is empty".into()));
        }
        Ok(())
    }
}

/// Derives the candidates for `spec`. A base instance is required for every
/// recipe except the synthetic one, which builds its own. Returns the
/// candidates together with the base they were derived from.
///
/// Candidate `k` (0-based) uses the stream `(seed, recipe tag, k + 1)`;
/// stream index 0 is reserved for base-level draws of the synthetic
/// generator. The convex-combination recipes take no draws: candidate `k`
/// uses `lambda = k / (candidate_count - 1)`.
pub fn generate_candidates(
    spec: &GeneratorSpec,
    base: Option<&Instance>,
) -> Result<(Vec<CandidateRecord>, Instance), GenError> {
    spec.validate()?;
    let mask = spec.recipe.mask();

    let (base_instance, rhs_pair): (Instance, Option<(Vec<f64>, Vec<f64>)>) = match &spec.recipe {
        Recipe::SyntheticSemicontinuous { variables, rows } => {
            if base.is_some() {
                return Err(GenError::InvalidParameters(
                    "the synthetic recipe builds its own base instance".into(),
                ));
            }
            let mut rng = SplitMix64::stream(spec.seed, spec.recipe.tag(), 0);
            let (inst, a, b) = recipes::gen_synthetic_semicontinuous(*variables, *rows, &mut rng)?;
            (inst, Some((a, b)))
        }
        Recipe::RhsConvex { rhs_a, rhs_b } => {
            let base = base.ok_or_else(|| {
                GenError::InvalidParameters("recipe rhs_convex needs a base instance".into())
            })?;
            (base.clone(), Some((rhs_a.clone(), rhs_b.clone())))
        }
        _ => {
            let base = base.ok_or_else(|| {
                GenError::InvalidParameters(format!(
                    "recipe {} needs a base instance",
                    spec.recipe.name()
                ))
            })?;
            (base.clone(), None)
        }
    };

    let mut candidates = Vec::with_capacity(spec.candidate_count);
    for k in 0..spec.candidate_count {
        let instance = match &spec.recipe {
            Recipe::BoundPerturb { max_relative_change } => {
                let mut rng = SplitMix64::stream(spec.seed, spec.recipe.tag(), k as u64 + 1);
                recipes::perturb_bounds(&base_instance, *max_relative_change, &mut rng)?
            }
            Recipe::BinaryFix { fraction_low, fraction_high } => {
                let mut rng = SplitMix64::stream(spec.seed, spec.recipe.tag(), k as u64 + 1);
                recipes::fix_binaries(&base_instance, *fraction_low, *fraction_high, &mut rng)?
            }
            Recipe::ObjPerturbRotate { relative_noise, rotation_pairs, max_angle_radians } => {
                let mut rng = SplitMix64::stream(spec.seed, spec.recipe.tag(), k as u64 + 1);
                recipes::perturb_objective(
                    &base_instance,
                    *relative_noise,
                    *rotation_pairs,
                    *max_angle_radians,
                    &mut rng,
                )?
            }
            Recipe::SidePerturb { max_relative_change } => {
                let mut rng = SplitMix64::stream(spec.seed, spec.recipe.tag(), k as u64 + 1);
                recipes::perturb_sides(&base_instance, *max_relative_change, &mut rng)?
            }
            Recipe::RhsConvex { .. } | Recipe::SyntheticSemicontinuous { .. } => {
                let (a, b) = rhs_pair.as_ref().expect("rhs pair present for convex recipes");
                let lambda = k as f64 / (spec.candidate_count - 1) as f64;
                recipes::rhs_convex_combination(&base_instance, a, b, lambda)?
            }
        };
        let similarity_to_base = recipes::variation_similarity(&base_instance, &instance, mask);
        candidates.push(CandidateRecord { instance, solve_time_seconds: None, similarity_to_base });
    }
    Ok((candidates, base_instance))
}

/// Selection bands and sizing for [`assemble_series`].
#[derive(Debug, Clone)]
pub struct AssemblyConfig {
    pub target: usize,
    /// Closed interval for the candidate solve time in seconds.
    pub time_band: (f64, f64),
    /// Closed interval for the similarity to the base.
    pub similarity_band: (f64, f64),
    /// Fixed manifest time limit; when absent it is derived as twice the
    /// median known solve time of the selected candidates, rounded up to a
    /// multiple of 10 seconds (at least 10).
    pub time_limit_override: Option<f64>,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            target: 50,
            time_band: (0.0, f64::INFINITY),
            similarity_band: (-1.0, 1.0),
            time_limit_override: None,
        }
    }
}

/// A candidate with an unknown metric qualifies only when the corresponding
/// band is vacuous (covers the whole valid range).
fn in_band(value: Option<f64>, band: (f64, f64), full: (f64, f64)) -> bool {
    match value {
        Some(v) => band.0 <= v && v <= band.1,
        None => band.0 <= full.0 && band.1 >= full.1,
    }
}

/// Keeps the first `target` candidates, in generation order, whose metrics
/// lie in the configured bands, and builds the series manifest.
pub fn assemble_series(
    series_name: &str,
    candidates: &[CandidateRecord],
    mask: VariationMask,
    seed: u64,
    base_instance_label: &str,
    config: &AssemblyConfig,
) -> Result<(SeriesManifest, Vec<Instance>), GenError> {
    let mut selected: Vec<&CandidateRecord> = Vec::with_capacity(config.target);
    let mut time_rejects = 0usize;
    let mut similarity_rejects = 0usize;
    for c in candidates {
        let time_ok = in_band(c.solve_time_seconds, config.time_band, (0.0, f64::INFINITY));
        let sim_ok = in_band(c.similarity_to_base, config.similarity_band, (-1.0, 1.0));
        if !time_ok {
            time_rejects += 1;
        }
        if !sim_ok {
            similarity_rejects += 1;
        }
        if time_ok && sim_ok {
            selected.push(c);
            if selected.len() == config.target {
                break;
            }
        }
    }
    if selected.len() < config.target {
        let mut parts = Vec::new();
        if time_rejects > 0 {
            parts.push(format!(
                "time band [{}, {}] rejected {time_rejects}",
                config.time_band.0, config.time_band.1
            ));
        }
        if similarity_rejects > 0 {
            parts.push(format!(
                "similarity band [{}, {}] rejected {similarity_rejects}",
                config.similarity_band.0, config.similarity_band.1
            ));
        }
        if parts.is_empty() {
            parts.push("candidate pool too small".into());
        }
        return Err(GenError::InsufficientCandidates {
            target: config.target,
            qualifying: selected.len(),
            detail: parts.join("; "),
        });
    }

    let time_limit_seconds = match config.time_limit_override {
        Some(t) if t > 0.0 => t,
        Some(t) => {
            return Err(GenError::InvalidParameters(format!("time limit {t} must be positive")))
        }
        None => derive_time_limit(&selected).ok_or(GenError::NoTimeBasis)?,
    };

    let width = digits(config.target);
    let instance_files: Vec<String> =
        (1..=config.target).map(|i| format!("{i:0width$}.mps")).collect();
    let manifest = SeriesManifest {
        series_name: series_name.to_string(),
        instance_files,
        variation_mask: mask,
        time_limit_seconds,
        seed,
        base_instance: base_instance_label.to_string(),
    };
    let instances = selected.into_iter().map(|c| c.instance.clone()).collect();
    Ok((manifest, instances))
}

fn digits(n: usize) -> usize {
    std::cmp::max(2, n.to_string().len())
}

/// Twice the median of the known solve times, rounded up to a multiple of
/// 10 s, at least 10 s. `None` when no time is known.
fn derive_time_limit(selected: &[&CandidateRecord]) -> Option<f64> {
    let mut times: Vec<f64> =
        selected.iter().filter_map(|c| c.solve_time_seconds).filter(|t| t.is_finite()).collect();
    if times.is_empty() {
        return None;
    }
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let median = if times.len() % 2 == 1 {
        times[times.len() / 2]
    } else {
        let hi = times.len() / 2;
        (times[hi - 1] + times[hi]) / 2.0
    };
    let raw = 2.0 * median;
    let rounded = (raw / 10.0).ceil() * 10.0;
    Some(rounded.max(10.0))
}

/// Writes the series to `dir`: one numbered MPS file per instance plus
/// `manifest.json`. Returns the manifest path.
pub fn write_series(
    dir: &Path,
    manifest: &SeriesManifest,
    instances: &[Instance],
    dialect: &MpsDialect,
) -> Result<PathBuf, GenError> {
    if manifest.instance_files.len() != instances.len() {
        return Err(GenError::Structural(format!(
            "manifest lists {} files but {} instances were provided",
            manifest.instance_files.len(),
            instances.len()
        )));
    }
    std::fs::create_dir_all(dir)
        .map_err(|source| GenError::Io { path: dir.display().to_string(), source })?;
    for (file, instance) in manifest.instance_files.iter().zip(instances) {
        mps::write_mps_file(instance, dialect, &dir.join(file))?;
    }
    let manifest_path = dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    json.push('\n');
    std::fs::write(&manifest_path, json)
        .map_err(|source| GenError::Io { path: manifest_path.display().to_string(), source })?;
    Ok(manifest_path)
}

pub fn load_manifest(path: &Path) -> Result<SeriesManifest, GenError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| GenError::Io { path: path.display().to_string(), source })?;
    let manifest: SeriesManifest = serde_json::from_str(&text)
        .map_err(|e| GenError::Manifest { path: path.display().to_string(), message: e.to_string() })?;
    manifest.validate().map_err(|e| GenError::Manifest {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(manifest)
}

/// Instance paths listed by a manifest, resolved relative to its location.
pub fn instance_paths(manifest: &SeriesManifest, manifest_path: &Path) -> Vec<PathBuf> {
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    manifest.instance_files.iter().map(|f| dir.join(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Row, Sense, VarKind, Variable};

    fn candidate(time: Option<f64>, sim: Option<f64>) -> CandidateRecord {
        candidate_tagged(0, time, sim)
    }

    /// The candidate's rhs encodes `tag` so tests can identify selections.
    fn candidate_tagged(tag: usize, time: Option<f64>, sim: Option<f64>) -> CandidateRecord {
        CandidateRecord {
            instance: Instance {
                name: "c".into(),
                sense: Sense::Minimize,
                objective_constant: 0.0,
                variables: vec![Variable {
                    name: "x".into(),
                    kind: VarKind::Continuous,
                    lower: 0.0,
                    upper: 1.0,
                    objective_coefficient: 1.0,
                }],
                rows: vec![Row::new("r", vec![(0, 1.0)], f64::NEG_INFINITY, tag as f64 + 1.0)],
            },
            solve_time_seconds: time,
            similarity_to_base: sim,
        }
    }

    fn assemble(
        candidates: &[CandidateRecord],
        config: &AssemblyConfig,
    ) -> Result<(SeriesManifest, Vec<Instance>), GenError> {
        assemble_series(
            "t",
            candidates,
            VariationMask::of(&[Component::Rhs]),
            1,
            "base.mps",
            config,
        )
    }

    #[test]
    fn all_qualifying_keeps_generation_order() {
        let candidates: Vec<CandidateRecord> =
            (0..6).map(|i| candidate(Some(i as f64), Some(0.9))).collect();
        let config = AssemblyConfig { target: 4, ..Default::default() };
        let (manifest, instances) = assemble(&candidates, &config).unwrap();
        assert_eq!(instances.len(), 4);
        assert_eq!(manifest.instance_files, vec!["01.mps", "02.mps", "03.mps", "04.mps"]);
        // 2x median of {0, 1, 2, 3} -> 3, rounded up to 10.
        assert_eq!(manifest.time_limit_seconds, 10.0);
    }

    #[test]
    fn vacuous_bands_never_reject() {
        let candidates: Vec<CandidateRecord> = (0..5).map(|_| candidate(None, None)).collect();
        let config = AssemblyConfig {
            target: 5,
            time_limit_override: Some(60.0),
            ..Default::default()
        };
        let (manifest, instances) = assemble(&candidates, &config).unwrap();
        assert_eq!(instances.len(), 5);
        assert_eq!(manifest.time_limit_seconds, 60.0);
    }

    /// Independent filter-then-truncate reimplementation over candidates with
    /// known metric values.
    #[test]
    fn selection_matches_reference_filter() {
        let mut rng = SplitMix64::stream(7, 99, 0);
        let candidates: Vec<CandidateRecord> = (0..100)
            .map(|i| candidate_tagged(i, Some(rng.uniform(0.0, 20.0)), Some(rng.uniform(-1.0, 1.0))))
            .collect();
        let config = AssemblyConfig {
            target: 10,
            time_band: (2.0, 15.0),
            similarity_band: (0.0, 1.0),
            time_limit_override: Some(30.0),
        };
        let reference: Vec<usize> = candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                let t = c.solve_time_seconds.unwrap();
                let s = c.similarity_to_base.unwrap();
                (2.0..=15.0).contains(&t) && (0.0..=1.0).contains(&s)
            })
            .map(|(i, _)| i)
            .take(10)
            .collect();
        assert_eq!(reference.len(), 10, "fixture must produce enough qualifiers");

        let (_, instances) = assemble(&candidates, &config).unwrap();
        assert_eq!(instances.len(), reference.len());
        for (selected, &i) in instances.iter().zip(&reference) {
            assert!(selected.bit_eq(&candidates[i].instance), "selection diverges at index {i}");
        }
    }

    #[test]
    fn insufficient_candidates_names_the_failing_band() {
        let candidates: Vec<CandidateRecord> =
            (0..20).map(|_| candidate(Some(100.0), Some(0.5))).collect();
        let config = AssemblyConfig {
            target: 10,
            time_band: (0.0, 1.0),
            time_limit_override: Some(10.0),
            ..Default::default()
        };
        let err = assemble(&candidates, &config).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("time band"), "{msg}");
    }

    #[test]
    fn unknown_metric_fails_a_finite_band() {
        let candidates: Vec<CandidateRecord> = (0..3).map(|_| candidate(None, Some(0.5))).collect();
        let config = AssemblyConfig {
            target: 1,
            time_band: (0.0, 100.0),
            time_limit_override: Some(10.0),
            ..Default::default()
        };
        assert!(matches!(
            assemble(&candidates, &config),
            Err(GenError::InsufficientCandidates { .. })
        ));
    }
}
