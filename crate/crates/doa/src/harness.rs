//! Seeded Monte Carlo sweeps over SNR or assumed source count.
//!
//! A sweep takes one scenario template, a list of axis values and a list of
//! methods. Every method at a given (axis value, trial) consumes the same
//! snapshot matrix, whose generator is seeded from `(base_seed, axis index,
//! trial index)` alone. Trials are the unit of parallelism and aggregation
//! walks them in index order, so the emitted table is byte-identical for any
//! worker count.
//!
//! Timing is off by default to keep the CSV deterministic; [`RunOptions`]
//! can switch it on for benchmarking sessions.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::baselines::{capon_spectrum, music_spectrum};
use crate::cov::Loading;
use crate::jio::{jio_spectrum, JioConfig, JioVariant, RankMode};
use crate::metrics::{crb_db, rmse_db_filtered, score_trial, TrialOutcome};
use crate::search::{find_peaks, rooted_refine, ScanGrid};
use crate::signal::{generate_snapshots, ArrayGeometry, Modulation, SourceScenario};
use crate::{DoaError, Result};

/// Sweep axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Input SNR in dB; sets the noise power per point.
    SnrDb,
    /// Assumed source count fed to subspace methods; noise stays fixed.
    QW,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub sensors: usize,
    #[serde(default = "default_spacing")]
    pub spacing_ratio: f64,
}

fn default_spacing() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationSection {
    Bpsk,
    Gaussian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub doas_deg: Vec<f64>,
    #[serde(default = "default_one")]
    pub source_power: f64,
    #[serde(default)]
    pub correlation: f64,
    #[serde(default = "default_modulation")]
    pub modulation: ModulationSection,
    pub snapshots: usize,
    /// Used directly when the sweep axis is not SNR.
    #[serde(default)]
    pub noise_power: f64,
}

fn default_one() -> f64 {
    1.0
}

fn default_modulation() -> ModulationSection {
    ModulationSection::Bpsk
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_step")]
    pub grid_step_deg: f64,
    /// Restrict RMSE aggregation to resolved trials.
    #[serde(default)]
    pub rmse_resolved_only: bool,
}

fn default_step() -> f64 {
    0.5
}

/// Loading policy as written in config files: `"auto"`, `"none"`, or a
/// number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LoadingSection {
    Named(String),
    Value(f64),
}

impl LoadingSection {
    fn resolve(&self, path: &str) -> Result<Loading> {
        match self {
            LoadingSection::Named(s) => match s.as_str() {
                "auto" => Ok(Loading::AUTO),
                "none" | "zero" => Ok(Loading::Zero),
                other => Err(DoaError::config(
                    path,
                    format!("unknown loading `{other}`; use \"auto\", \"none\" or a number"),
                )),
            },
            LoadingSection::Value(v) => {
                if *v < 0.0 || !v.is_finite() {
                    Err(DoaError::config(path, "loading must be a finite non-negative number"))
                } else {
                    Ok(Loading::Fixed(*v))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantSection {
    Jio,
    JioFba,
    JioRls,
    JioRlsFba,
    Capon,
    Music,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchSection {
    Grid,
    Rooted,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    #[serde(default)]
    pub name: Option<String>,
    pub variant: VariantSection,
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default)]
    pub rank_range: Option<[usize; 2]>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_delta")]
    pub delta_bar: f64,
    #[serde(default)]
    pub rank_weight: Option<f64>,
    #[serde(default = "default_loading")]
    pub loading: LoadingSection,
    #[serde(default = "default_search")]
    pub search: SearchSection,
    /// Coarse grid step for rooted search; defaults to the sweep grid step.
    #[serde(default)]
    pub coarse_step_deg: Option<f64>,
    /// MUSIC's assumed source count; defaults to the true count (or the
    /// axis value on a q_w sweep).
    #[serde(default)]
    pub assumed_sources: Option<usize>,
}

fn default_alpha() -> f64 {
    0.998
}

fn default_delta() -> f64 {
    1e-3
}

fn default_loading() -> LoadingSection {
    LoadingSection::Named("auto".into())
}

fn default_search() -> SearchSection {
    SearchSection::Grid
}

/// Full experiment description, usually parsed from a TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySection,
    pub scenario: ScenarioSection,
    pub sweep: SweepSection,
    pub run: RunSection,
    pub methods: Vec<MethodSection>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DoaError::config("config", e.to_string()))
    }
}

/// One aggregated sweep point.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub axis_value: f64,
    pub method: String,
    pub prob_resolution: f64,
    pub rmse_db: f64,
    pub crb_db: f64,
    pub mean_rank: f64,
    pub wall_ms: f64,
}

/// Sweep output table plus diagnostics.
#[derive(Debug, Clone)]
pub struct ExperimentTable {
    pub points: Vec<CurvePoint>,
    /// Per-angle and per-trial numerical faults observed across the sweep.
    pub faults: u64,
}

/// Execution switches that do not belong in the experiment description.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads (`None` = library default).
    pub threads: Option<usize>,
    /// Measure wall time per method. Off by default: timing makes the CSV
    /// nondeterministic by nature.
    pub timing: bool,
    /// Progress lines on stderr.
    pub verbose: bool,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Generator for one `(axis index, trial index)` cell:
/// `seed = base_seed XOR splitmix64(axis << 32 | trial)`.
pub fn trial_rng(base_seed: u64, axis_index: usize, trial_index: usize) -> ChaCha8Rng {
    let mixed = splitmix64(((axis_index as u64) << 32) | trial_index as u64);
    ChaCha8Rng::seed_from_u64(base_seed ^ mixed)
}

#[derive(Debug, Clone)]
enum MethodKind {
    Jio {
        variant: JioVariant,
        rank: RankMode,
        alpha: f64,
        delta: f64,
        delta_bar: f64,
        rank_weight: Option<f64>,
        loading: Loading,
        rooted: bool,
        coarse_step: Option<f64>,
    },
    Capon {
        alpha: f64,
        loading: Loading,
    },
    Music {
        assumed: Option<usize>,
        loading: Loading,
    },
}

#[derive(Debug, Clone)]
struct Method {
    id: String,
    kind: MethodKind,
}

impl Method {
    fn jio_config(&self, rooted_grid: &ScanGrid) -> Option<(JioConfig, Option<ScanGrid>)> {
        match &self.kind {
            MethodKind::Jio {
                variant,
                rank,
                alpha,
                delta,
                delta_bar,
                rank_weight,
                loading,
                rooted,
                coarse_step,
            } => {
                let mut cfg = JioConfig::new(*variant, rank.max_rank());
                cfg.rank = *rank;
                cfg.alpha = *alpha;
                cfg.delta = *delta;
                cfg.delta_bar = *delta_bar;
                cfg.rank_weight = *rank_weight;
                cfg.loading = *loading;
                let coarse = if *rooted {
                    Some(match coarse_step {
                        Some(step) => ScanGrid::new(*step).ok()?,
                        None => rooted_grid.clone(),
                    })
                } else {
                    None
                };
                Some((cfg, coarse))
            }
            _ => None,
        }
    }
}

fn default_method_name(section: &MethodSection, index: usize) -> String {
    let base = match section.variant {
        VariantSection::Jio => "jio",
        VariantSection::JioFba => "jio-fba",
        VariantSection::JioRls => "jio-rls",
        VariantSection::JioRlsFba => "jio-rls-fba",
        VariantSection::Capon => "capon",
        VariantSection::Music => "music",
    };
    match (&section.rank, &section.rank_range) {
        (Some(r), _) => format!("{base}-r{r}"),
        (None, Some([lo, hi])) => format!("{base}-r{lo}to{hi}"),
        _ => format!("{base}-{index}"),
    }
}

fn build_methods(config: &ExperimentConfig) -> Result<Vec<Method>> {
    if config.methods.is_empty() {
        return Err(DoaError::config("methods", "need at least one method"));
    }
    let m = config.geometry.sensors;
    let mut out = Vec::with_capacity(config.methods.len());
    for (i, section) in config.methods.iter().enumerate() {
        let path = |field: &str| format!("methods[{i}].{field}");
        let id = section
            .name
            .clone()
            .unwrap_or_else(|| default_method_name(section, i));
        let loading = section.loading.resolve(&path("loading"))?;
        let is_jio = matches!(
            section.variant,
            VariantSection::Jio
                | VariantSection::JioFba
                | VariantSection::JioRls
                | VariantSection::JioRlsFba
        );
        if !is_jio && section.search == SearchSection::Rooted {
            return Err(DoaError::config(
                path("search"),
                "polynomial rooting is defined for the reduced-rank estimators only",
            ));
        }
        let kind = if is_jio {
            let rank = match (section.rank, section.rank_range) {
                (Some(r), None) => {
                    if r == 0 || r > m {
                        return Err(DoaError::config(
                            path("rank"),
                            format!("rank must lie in [1, {m}]"),
                        ));
                    }
                    RankMode::Fixed(r)
                }
                (None, Some([lo, hi])) => {
                    if lo == 0 || lo > hi || hi > m {
                        return Err(DoaError::config(
                            path("rank_range"),
                            format!("range must satisfy 1 <= min <= max <= {m}"),
                        ));
                    }
                    RankMode::Adaptive { min: lo, max: hi }
                }
                (Some(_), Some(_)) => {
                    return Err(DoaError::config(
                        path("rank_range"),
                        "give either a fixed rank or a range, not both",
                    ))
                }
                (None, None) => {
                    return Err(DoaError::config(
                        path("rank"),
                        "reduced-rank methods need `rank` or `rank_range`",
                    ))
                }
            };
            if !(section.alpha > 0.0 && section.alpha <= 1.0) {
                return Err(DoaError::config(path("alpha"), "alpha must lie in (0, 1]"));
            }
            if section.delta <= 0.0 || section.delta_bar <= 0.0 {
                return Err(DoaError::config(
                    path("delta"),
                    "delta and delta_bar must be positive",
                ));
            }
            let variant = match section.variant {
                VariantSection::Jio => JioVariant::Jio,
                VariantSection::JioFba => JioVariant::JioFba,
                VariantSection::JioRls => JioVariant::JioRls,
                VariantSection::JioRlsFba => JioVariant::JioRlsFba,
                _ => unreachable!(),
            };
            MethodKind::Jio {
                variant,
                rank,
                alpha: section.alpha,
                delta: section.delta,
                delta_bar: section.delta_bar,
                rank_weight: section.rank_weight,
                loading,
                rooted: section.search == SearchSection::Rooted,
                coarse_step: section.coarse_step_deg,
            }
        } else if section.variant == VariantSection::Capon {
            MethodKind::Capon {
                alpha: section.alpha,
                loading,
            }
        } else {
            if let Some(q) = section.assumed_sources {
                if q == 0 || q >= m {
                    return Err(DoaError::config(
                        path("assumed_sources"),
                        format!("must satisfy 1 <= q < {m}"),
                    ));
                }
            }
            MethodKind::Music {
                assumed: section.assumed_sources,
                loading,
            }
        };
        out.push(Method { id, kind });
    }
    Ok(out)
}

fn scenario_for_point(config: &ExperimentConfig, axis_value: f64) -> Result<SourceScenario> {
    let modulation = match config.scenario.modulation {
        ModulationSection::Bpsk => Modulation::Bpsk,
        ModulationSection::Gaussian => Modulation::Gaussian,
    };
    let noise_power = match config.sweep.axis {
        SweepAxis::SnrDb => config.scenario.source_power * 10f64.powf(-axis_value / 10.0),
        SweepAxis::QW => config.scenario.noise_power,
    };
    let scenario = SourceScenario {
        doas_deg: config.scenario.doas_deg.clone(),
        source_power: config.scenario.source_power,
        correlation: config.scenario.correlation,
        modulation,
        num_snapshots: config.scenario.snapshots,
        noise_power,
    };
    scenario.validate().map_err(|e| match e {
        DoaError::Domain(msg) => DoaError::config("scenario", msg),
        other => other,
    })?;
    Ok(scenario)
}

struct TrialResult {
    outcome: TrialOutcome,
    mean_rank: f64,
    faults: u64,
    wall_ms: f64,
}

fn run_method_on_trial(
    method: &Method,
    data: &crate::signal::SnapshotMatrix,
    grid: &ScanGrid,
    q_true: usize,
    q_w: Option<usize>,
) -> Result<(Vec<f64>, f64, u64)> {
    match &method.kind {
        MethodKind::Jio { .. } => {
            let (cfg, coarse) = method
                .jio_config(grid)
                .expect("jio kind always yields a config");
            match coarse {
                Some(coarse_grid) => {
                    let estimates = rooted_refine(data, &coarse_grid, &cfg, q_true)?;
                    Ok((estimates, cfg.rank.max_rank() as f64, 0))
                }
                None => {
                    let spectrum = jio_spectrum(data, grid, &cfg)?;
                    let estimates = find_peaks(&spectrum, q_true)?;
                    Ok((estimates, spectrum.mean_rank(), spectrum.faults as u64))
                }
            }
        }
        MethodKind::Capon { alpha, loading } => {
            let spectrum = capon_spectrum(data, grid, *alpha, *loading)?;
            let estimates = find_peaks(&spectrum, q_true)?;
            Ok((estimates, 1.0, spectrum.faults as u64))
        }
        MethodKind::Music { assumed, loading } => {
            let q_model = q_w.or(*assumed).unwrap_or(q_true);
            let spectrum = music_spectrum(data, grid, q_model, *loading)?;
            let estimates = find_peaks(&spectrum, q_true)?;
            Ok((estimates, q_model as f64, spectrum.faults as u64))
        }
    }
}

/// Runs the whole sweep and aggregates one [`CurvePoint`] per (axis value,
/// method) pair.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentTable> {
    let geometry = ArrayGeometry::new(config.geometry.sensors, config.geometry.spacing_ratio)
        .map_err(|e| DoaError::config("geometry", e.to_string()))?;
    if config.run.trials == 0 {
        return Err(DoaError::config("run.trials", "need at least one trial"));
    }
    if config.sweep.values.is_empty() {
        return Err(DoaError::config("sweep.values", "need at least one axis value"));
    }
    let grid = ScanGrid::new(config.run.grid_step_deg)
        .map_err(|e| DoaError::config("run.grid_step_deg", e.to_string()))?;
    let methods = build_methods(config)?;
    let q_true = config.scenario.doas_deg.len();

    crate::par::with_thread_count(options.threads, || {
        let mut points = Vec::new();
        let mut total_faults = 0u64;
        for (a_idx, &axis_value) in config.sweep.values.iter().enumerate() {
            let scenario = scenario_for_point(config, axis_value)?;
            let q_w = match config.sweep.axis {
                SweepAxis::QW => {
                    let q = axis_value.round();
                    if q < 1.0 || (q as usize) >= geometry.num_sensors {
                        return Err(DoaError::config(
                            "sweep.values",
                            format!("q_w value {axis_value} outside [1, M)"),
                        ));
                    }
                    Some(q as usize)
                }
                SweepAxis::SnrDb => None,
            };
            let bound_db = crb_db(&scenario, &geometry).unwrap_or(f64::NAN);
            if options.verbose {
                eprintln!(
                    "axis {axis_value}: {} trials x {} methods",
                    config.run.trials,
                    methods.len()
                );
            }

            let trials: Vec<Result<Vec<TrialResult>>> =
                crate::par::indexed_map(config.run.trials, |t| {
                    let mut rng = trial_rng(config.run.base_seed, a_idx, t);
                    let data = generate_snapshots(&scenario, &geometry, &mut rng)?;
                    let mut per_method = Vec::with_capacity(methods.len());
                    for method in &methods {
                        let started = options.timing.then(std::time::Instant::now);
                        let (outcome, mean_rank, faults) =
                            match run_method_on_trial(method, &data, &grid, q_true, q_w) {
                                Ok((estimates, mean_rank, faults)) => {
                                    (score_trial(&estimates, &scenario.doas_deg)?, mean_rank, faults)
                                }
                                Err(DoaError::Numerical(_)) => {
                                    // Numerical faults never abort the sweep.
                                    (score_trial(&[], &scenario.doas_deg)?, 0.0, 1)
                                }
                                Err(other) => return Err(other),
                            };
                        let wall_ms = started.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
                        per_method.push(TrialResult {
                            outcome,
                            mean_rank,
                            faults,
                            wall_ms,
                        });
                    }
                    Ok(per_method)
                });

            // Aggregation walks trials in index order: identical output for
            // any worker count.
            let mut resolved = vec![0usize; methods.len()];
            let mut outcomes: Vec<Vec<TrialOutcome>> =
                vec![Vec::with_capacity(config.run.trials); methods.len()];
            let mut rank_sum = vec![0.0f64; methods.len()];
            let mut wall_sum = vec![0.0f64; methods.len()];
            for trial in trials {
                let per_method = trial?;
                for (k, result) in per_method.into_iter().enumerate() {
                    if result.outcome.resolved {
                        resolved[k] += 1;
                    }
                    total_faults += result.faults;
                    rank_sum[k] += result.mean_rank;
                    wall_sum[k] += result.wall_ms;
                    outcomes[k].push(result.outcome);
                }
            }
            for (k, method) in methods.iter().enumerate() {
                let prob = resolved[k] as f64 / config.run.trials as f64;
                let rmse = rmse_db_filtered(&outcomes[k], config.run.rmse_resolved_only)?;
                points.push(CurvePoint {
                    axis_value,
                    method: method.id.clone(),
                    prob_resolution: prob,
                    rmse_db: rmse,
                    crb_db: bound_db,
                    mean_rank: rank_sum[k] / config.run.trials as f64,
                    wall_ms: wall_sum[k],
                });
            }
        }
        Ok(ExperimentTable {
            points,
            faults: total_faults,
        })
    })
}

/// Formats with 6 significant digits, plain or scientific as appropriate.
fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..=8).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Writes the sweep table as CSV: header
/// `axis,method,prob_resolution,rmse_db,crb_db,mean_rank,wall_ms`, one row
/// per point, six significant digits, LF line endings.
pub fn write_csv<W: Write>(points: &[CurvePoint], mut out: W) -> Result<()> {
    if points.is_empty() {
        return Err(DoaError::Domain("empty sweep table".into()));
    }
    out.write_all(b"axis,method,prob_resolution,rmse_db,crb_db,mean_rank,wall_ms\n")?;
    for p in points {
        let row = format!(
            "{},{},{},{},{},{},{}\n",
            format_sig(p.axis_value),
            p.method,
            format_sig(p.prob_resolution),
            format_sig(p.rmse_db),
            format_sig(p.crb_db),
            format_sig(p.mean_rank),
            format_sig(p.wall_ms),
        );
        out.write_all(row.as_bytes())?;
    }
    Ok(())
}

/// Writes the CSV to a path.
pub fn emit_csv(points: &[CurvePoint], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    write_csv(points, &mut writer)?;
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
            [geometry]
            sensors = 8

            [scenario]
            doas_deg = [78.0, 96.0]
            snapshots = 12

            [sweep]
            axis = "snr_db"
            values = [20.0]

            [run]
            trials = 3
            base_seed = 11
            grid_step_deg = 2.0

            [[methods]]
            variant = "jio"
            rank = 3

            [[methods]]
            variant = "capon"
            "#,
        )
        .unwrap()
    }

    #[test]
    fn sweeps_are_reproducible() {
        let config = tiny_config();
        let a = run_experiment(&config, &RunOptions::default()).unwrap();
        let b = run_experiment(&config, &RunOptions::default()).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_csv(&a.points, &mut csv_a).unwrap();
        write_csv(&b.points, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn noiseless_on_grid_sources_always_resolve() {
        let config = ExperimentConfig::from_toml_str(
            r#"
            [geometry]
            sensors = 10

            [scenario]
            doas_deg = [80.0, 100.0]
            snapshots = 16

            [sweep]
            axis = "snr_db"
            values = [160.0]

            [run]
            trials = 1
            base_seed = 5
            grid_step_deg = 2.0

            [[methods]]
            variant = "jio"
            rank = 3

            [[methods]]
            variant = "capon"

            [[methods]]
            variant = "music"
            "#,
        )
        .unwrap();
        let table = run_experiment(&config, &RunOptions::default()).unwrap();
        for p in &table.points {
            assert_eq!(p.prob_resolution, 1.0, "{} failed to resolve", p.method);
        }
    }

    #[test]
    fn trial_seeds_differ_across_cells_but_not_runs() {
        use rand::RngCore;
        let mut a = trial_rng(7, 0, 0);
        let mut b = trial_rng(7, 0, 1);
        let mut c = trial_rng(7, 1, 0);
        let mut a2 = trial_rng(7, 0, 0);
        let (x, y, z, x2) = (a.next_u64(), b.next_u64(), c.next_u64(), a2.next_u64());
        assert_eq!(x, x2);
        assert_ne!(x, y);
        assert_ne!(x, z);
        assert_ne!(y, z);
    }

    #[test]
    fn csv_round_trips_to_six_significant_digits() {
        let points = vec![CurvePoint {
            axis_value: -5.0,
            method: "jio-r4".into(),
            prob_resolution: 0.123456789,
            rmse_db: 3.9794000867,
            crb_db: -31.41592653,
            mean_rank: 4.0,
            wall_ms: 0.0,
        }];
        let mut buf = Vec::new();
        write_csv(&points, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "axis,method,prob_resolution,rmse_db,crb_db,mean_rank,wall_ms"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[1], "jio-r4");
        let parsed: f64 = row[2].parse().unwrap();
        assert!((parsed - 0.123456789).abs() / 0.123456789 < 1e-5);
        let parsed: f64 = row[3].parse().unwrap();
        assert!((parsed - 3.9794000867).abs() / 3.9794 < 1e-5);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn bad_configs_name_the_offending_field() {
        let mut config = tiny_config();
        config.methods[0].rank = Some(99);
        match run_experiment(&config, &RunOptions::default()) {
            Err(DoaError::Config { path, .. }) => assert!(path.contains("rank")),
            other => panic!("expected config error, got {other:?}"),
        }
        let mut config = tiny_config();
        config.run.grid_step_deg = 7.0;
        match run_experiment(&config, &RunOptions::default()) {
            Err(DoaError::Config { path, .. }) => assert!(path.contains("grid_step")),
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
