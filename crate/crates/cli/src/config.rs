//! Run-configuration loading.
//!
//! The configuration is a human-editable TOML file with strict unknown-key
//! rejection: a typo in a physics parameter is a hard error, never a
//! silently ignored key. Loading re-validates every physical invariant of
//! the domain types the file references, fills documented defaults, and
//! produces an "effective configuration" echo — itself valid TOML that
//! reloads to the same run — so the exact inputs of a run are always
//! visible.
//!
//! Schema overview (see the repository README for the full reference):
//!
//! ```toml
//! repetitions = 5
//!
//! [geometry]          # length + acceleration, or inner_wall + outer_wall
//! length = 1.0
//! acceleration = 1e-4 # dimensionless burn strength h = aL
//! mass = 0.0
//!
//! [modes]
//! k = 1
//! k_prime = 2
//!
//! [scenario]          # the named four-segment travel scenario ...
//! tau = 0.3333333333333333
//! t = 0.3333333333333333
//! strength_ratio = 1.0   # y: second-burn strength is y*h
//! direction = 1          # +1 same direction, -1 reversed second burn
//! resonance_order = 2    # order n used by closed-form comparisons
//!
//! # [[trajectory.segments]]  # ... or an explicit segment list
//! # kind = "burn"
//! # duration = 0.25
//! # strength = 1e-4
//!
//! [sweep]             # optional; needed by the sweep subcommand
//! variables = ["tau", "t"]
//! tau = { start = 0.0, stop = 0.6666666666666666, count = 64 }
//! t = { start = 0.0, stop = 0.6666666666666666, count = 64 }
//!
//! [numerics]
//! n_max = 24
//! quad_abs_tol = 1e-12
//!
//! [output]
//! dir = "out"
//! csv = "sweep.csv"
//! heatmap = "sweep.svg"  # optional
//! # cache_dir = "/var/cache/relcav"
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use relcav::geometry::{ModeIndex, ModePair};
use relcav::sweep::AxisSpec;
use relcav::trajectory::{Trajectory, TrajectorySegment, PERTURBATIVE_WARN_THRESHOLD};
use relcav::{Geometry64, QuadSpec64, SampleScenario64, Trajectory64};

use crate::error::CliError;

/// Version string embedded in every output file.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default mode-ladder truncation when `[numerics] n_max` is omitted. The
/// unitarity bookkeeping trusts rows up to half the truncation, so this
/// default comfortably covers the low-lying mode pairs the resonance
/// machinery targets.
pub const DEFAULT_N_MAX: usize = 24;

/// Hex digits of the SHA-256 configuration digest embedded in outputs.
const HASH_LEN: usize = 16;

// ---------------------------------------------------------------------------
// Raw schema: exactly what the file may contain.
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_repetitions")]
    repetitions: usize,
    geometry: RawGeometry,
    modes: RawModes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scenario: Option<RawScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trajectory: Option<RawTrajectory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    acceleration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inner_wall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outer_wall: Option<f64>,
    #[serde(default)]
    mass: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawModes {
    k: usize,
    k_prime: usize,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    tau: f64,
    t: f64,
    #[serde(default = "default_one")]
    strength_ratio: f64,
    #[serde(default = "default_direction")]
    direction: i8,
    #[serde(default = "default_repetitions")]
    resonance_order: usize,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectory {
    segments: Vec<RawSegment>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawSegment {
    Coast { duration: f64 },
    Burn { duration: f64, strength: f64 },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<RawAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<RawAxis>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    start: f64,
    stop: f64,
    count: usize,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    #[serde(default = "default_n_max")]
    n_max: usize,
    #[serde(default = "default_quad_abs_tol")]
    quad_abs_tol: f64,
}

impl Default for RawNumerics {
    fn default() -> Self {
        Self {
            n_max: default_n_max(),
            quad_abs_tol: default_quad_abs_tol(),
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_out_dir")]
    dir: String,
    #[serde(default = "default_csv_name")]
    csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heatmap: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cache_dir: Option<String>,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            csv: default_csv_name(),
            heatmap: None,
            cache_dir: None,
        }
    }
}

fn default_repetitions() -> usize {
    1
}
fn default_one() -> f64 {
    1.0
}
fn default_direction() -> i8 {
    1
}
fn default_n_max() -> usize {
    DEFAULT_N_MAX
}
fn default_quad_abs_tol() -> f64 {
    1e-12
}
fn default_out_dir() -> String {
    "out".to_owned()
}
fn default_csv_name() -> String {
    "sweep.csv".to_owned()
}

// ---------------------------------------------------------------------------
// Validated configuration.
// ---------------------------------------------------------------------------

/// What the cavity does: the named travel scenario or an explicit segment
/// list.
#[derive(Debug, Clone)]
pub enum Drive {
    Scenario(SampleScenario64),
    Segments(Trajectory64),
}

/// Which scenario duration a sweep scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Tau,
    T,
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Tau => f.write_str("tau"),
            Self::T => f.write_str("t"),
        }
    }
}

/// Resolved sweep axes. A variable the sweep does not scan is pinned to its
/// scenario value as a single-sample axis, which keeps one code path (and
/// one CSV layout) for one- and two-variable scans.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub tau_axis: AxisSpec<f64>,
    pub t_axis: AxisSpec<f64>,
    pub variables: Vec<SweepVariable>,
}

impl SweepPlan {
    pub fn is_two_variable(&self) -> bool {
        self.variables.len() == 2
    }
}

/// A fully validated run configuration with all defaults filled.
#[derive(Debug)]
pub struct RunConfig {
    pub geometry: Geometry64,
    pub pair: ModePair,
    pub drive: Option<Drive>,
    pub repetitions: usize,
    pub sweep: Option<SweepPlan>,
    pub n_max: usize,
    pub quad: QuadSpec64,
    pub out_dir: PathBuf,
    pub csv_name: String,
    pub heatmap_name: Option<String>,
    pub cache_dir: Option<PathBuf>,
    /// Truncated SHA-256 digest of the raw configuration bytes.
    pub config_hash: String,
    /// Perturbative-validity and truncation advisories collected on load.
    pub warnings: Vec<String>,
    /// The effective configuration (defaults filled) as reloadable TOML.
    pub effective_toml: String,
}

/// Command-line overrides applied on top of the file before validation.
#[derive(Debug, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub n_max: Option<usize>,
}

impl RunConfig {
    pub fn scenario(&self) -> Option<&SampleScenario64> {
        match &self.drive {
            Some(Drive::Scenario(s)) => Some(s),
            _ => None,
        }
    }

    pub fn require_drive(&self) -> Result<&Drive, CliError> {
        self.drive.as_ref().ok_or_else(|| {
            CliError::config(
                "this subcommand needs a [scenario] or [trajectory] section in the configuration",
            )
        })
    }

    pub fn require_scenario(&self) -> Result<&SampleScenario64, CliError> {
        self.scenario().ok_or_else(|| {
            CliError::config(
                "this subcommand needs the named travel scenario: add a [scenario] section \
                 (an explicit [trajectory] segment list has no tau/t parameterization)",
            )
        })
    }

    pub fn require_sweep(&self) -> Result<&SweepPlan, CliError> {
        self.sweep.as_ref().ok_or_else(|| {
            CliError::config("this subcommand needs a [sweep] section in the configuration")
        })
    }

    /// Distinct nonzero burn-strength magnitudes the drive needs, sorted
    /// ascending. Falls back to the geometry's acceleration parameter when
    /// the configuration has no drive section.
    pub fn burn_magnitudes(&self) -> Vec<f64> {
        let mut mags: Vec<f64> = match &self.drive {
            Some(Drive::Scenario(s)) => vec![s.h(), s.y() * s.h()],
            Some(Drive::Segments(t)) => t
                .segments()
                .iter()
                .filter_map(|seg| seg.burn_strength())
                .map(f64::abs)
                .collect(),
            None => vec![self.geometry.acceleration_parameter()],
        };
        mags.retain(|m| *m > 0.0);
        mags.sort_by(f64::total_cmp);
        mags.dedup_by(|a, b| a.to_bits() == b.to_bits());
        mags
    }
}

/// Truncated hex SHA-256 digest of the raw configuration bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(HASH_LEN);
    for byte in digest.iter().take(HASH_LEN / 2) {
        use fmt::Write;
        write!(hex, "{byte:02x}").expect("writing to a String cannot fail");
    }
    hex
}

/// Reads, parses, and validates a configuration file, applying command-line
/// overrides before validation so the echoed effective configuration shows
/// what the run actually uses.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::io(format!("cannot read configuration {}: {e}", path.display())))?;
    let hash = config_hash(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|e| CliError::config(format!("configuration is not valid UTF-8: {e}")))?;
    let mut raw: RawConfig = toml::from_str(&text)
        .map_err(|e| CliError::config(format!("{} does not parse:\n{e}", path.display())))?;

    if let Some(n_max) = overrides.n_max {
        raw.numerics.n_max = n_max;
    }
    if let Some(dir) = &overrides.out_dir {
        raw.output.dir = dir.display().to_string();
    }

    validate(raw, hash)
}

fn validate(raw: RawConfig, config_hash: String) -> Result<RunConfig, CliError> {
    let mut warnings = Vec::new();

    let geometry = build_geometry(&raw.geometry)?;
    let mode_index = |label: &str, value: usize| {
        ModeIndex::new(value).map_err(|e| CliError::config(format!("modes: {label}: {e}")))
    };
    let pair = ModePair::new(
        mode_index("k", raw.modes.k)?,
        mode_index("k_prime", raw.modes.k_prime)?,
    )
    .map_err(|e| CliError::config(format!("modes: {e}")))?;

    if raw.repetitions == 0 {
        return Err(CliError::config("repetitions: repetition count must be at least 1"));
    }

    let n_max = raw.numerics.n_max;
    if n_max < 2 {
        return Err(CliError::config(format!(
            "numerics: n_max must be at least 2, got {n_max}"
        )));
    }
    if pair.k_prime().get() > n_max / 2 {
        warnings.push(format!(
            "mode pair ({}, {}) reaches above the trusted half of the truncation n_max = {n_max}; \
             raise n_max for reliable unitarity accounting",
            pair.k(),
            pair.k_prime()
        ));
    }
    let quad_abs_tol = raw.numerics.quad_abs_tol;
    if !(quad_abs_tol.is_finite() && quad_abs_tol > 0.0) {
        return Err(CliError::config(format!(
            "numerics: quad_abs_tol must be positive and finite, got {quad_abs_tol}"
        )));
    }
    let quad = QuadSpec64 {
        abs_tol: quad_abs_tol,
        ..QuadSpec64::default()
    };

    let drive = build_drive(&raw, geometry, pair, &mut warnings)?;

    let sweep = match &raw.sweep {
        Some(raw_sweep) => Some(build_sweep(raw_sweep, &drive)?),
        None => None,
    };

    let out_dir = PathBuf::from(&raw.output.dir);
    if raw.output.csv.is_empty() {
        return Err(CliError::config("output: csv file name must not be empty"));
    }
    if let (Some(plan), Some(_)) = (&sweep, &raw.output.heatmap) {
        if !plan.is_two_variable() {
            return Err(CliError::config(
                "output: heatmap rendering needs a two-variable sweep; \
                 scan both \"tau\" and \"t\" or drop the heatmap",
            ));
        }
    }

    let effective_toml = toml::to_string_pretty(&effective(&raw))
        .map_err(|e| CliError::config(format!("cannot render effective configuration: {e}")))?;

    Ok(RunConfig {
        geometry,
        pair,
        drive,
        repetitions: raw.repetitions,
        sweep,
        n_max,
        quad,
        out_dir,
        csv_name: raw.output.csv.clone(),
        heatmap_name: raw.output.heatmap.clone(),
        cache_dir: raw.output.cache_dir.as_ref().map(PathBuf::from),
        config_hash,
        warnings,
        effective_toml,
    })
}

fn build_geometry(raw: &RawGeometry) -> Result<Geometry64, CliError> {
    let wall_form = raw.inner_wall.is_some() || raw.outer_wall.is_some();
    let length_form = raw.length.is_some() || raw.acceleration.is_some();
    if wall_form && length_form {
        return Err(CliError::config(
            "geometry: give either `length` (+ optional `acceleration`) or both \
             `inner_wall` and `outer_wall`, not a mix of the two forms",
        ));
    }
    if wall_form {
        let (Some(x_a), Some(x_b)) = (raw.inner_wall, raw.outer_wall) else {
            return Err(CliError::config(
                "geometry: the wall form needs both `inner_wall` and `outer_wall`",
            ));
        };
        return Geometry64::from_walls(x_a, x_b, raw.mass)
            .map_err(|e| CliError::config(format!("geometry: {e}")));
    }
    let Some(length) = raw.length else {
        return Err(CliError::config(
            "geometry: missing `length` (or the `inner_wall`/`outer_wall` pair)",
        ));
    };
    Geometry64::from_length_acceleration(length, raw.acceleration.unwrap_or(0.0), raw.mass)
        .map_err(|e| CliError::config(format!("geometry: {e}")))
}

fn build_drive(
    raw: &RawConfig,
    geometry: Geometry64,
    pair: ModePair,
    warnings: &mut Vec<String>,
) -> Result<Option<Drive>, CliError> {
    let warn_burn = |warnings: &mut Vec<String>, label: &str, magnitude: f64| {
        if magnitude > PERTURBATIVE_WARN_THRESHOLD {
            warnings.push(format!(
                "{label} strength {magnitude:.3e} exceeds the perturbative-validity threshold \
                 {PERTURBATIVE_WARN_THRESHOLD:.0e}; first-order results are unreliable there"
            ));
        }
    };
    match (&raw.scenario, &raw.trajectory) {
        (Some(_), Some(_)) => Err(CliError::config(
            "give either [scenario] or [trajectory], not both",
        )),
        (Some(s), None) => {
            let h = geometry.acceleration_parameter();
            let params = SampleScenario64::new(
                pair,
                s.tau,
                s.t,
                h,
                s.strength_ratio,
                s.direction,
                raw.repetitions,
                s.resonance_order,
            )
            .map_err(|e| CliError::config(format!("scenario: {e}")))?;
            warn_burn(warnings, "scenario first-burn", h);
            warn_burn(warnings, "scenario second-burn", s.strength_ratio * h);
            Ok(Some(Drive::Scenario(params)))
        }
        (None, Some(t)) => {
            let mut segments = Vec::with_capacity(t.segments.len());
            for (i, seg) in t.segments.iter().enumerate() {
                let built = match *seg {
                    RawSegment::Coast { duration } => TrajectorySegment::coast(duration),
                    RawSegment::Burn { duration, strength } => {
                        warn_burn(warnings, &format!("trajectory segment {i}"), strength.abs());
                        TrajectorySegment::burn(duration, strength)
                    }
                };
                segments
                    .push(built.map_err(|e| {
                        CliError::config(format!("trajectory segment {i}: {e}"))
                    })?);
            }
            let trajectory = Trajectory::new(segments, raw.repetitions)
                .map_err(|e| CliError::config(format!("trajectory: {e}")))?;
            Ok(Some(Drive::Segments(trajectory)))
        }
        (None, None) => Ok(None),
    }
}

fn build_sweep(raw: &RawSweep, drive: &Option<Drive>) -> Result<SweepPlan, CliError> {
    let Some(Drive::Scenario(scenario)) = drive else {
        return Err(CliError::config(
            "[sweep] scans the named travel scenario's durations; add a [scenario] section",
        ));
    };

    let mut variables = Vec::with_capacity(raw.variables.len());
    for name in &raw.variables {
        let var = match name.as_str() {
            "tau" => SweepVariable::Tau,
            "t" => SweepVariable::T,
            other => {
                return Err(CliError::config(format!(
                    "sweep: unknown variable {other:?}; the scannable variables are \"tau\" and \"t\""
                )))
            }
        };
        if variables.contains(&var) {
            return Err(CliError::config(format!(
                "sweep: variable \"{var}\" listed twice"
            )));
        }
        variables.push(var);
    }
    if variables.is_empty() {
        return Err(CliError::config(
            "sweep: `variables` must name one or two of \"tau\" and \"t\"",
        ));
    }

    let resolve = |var: SweepVariable,
                   axis: Option<RawAxis>,
                   fixed: f64|
     -> Result<AxisSpec<f64>, CliError> {
        let scanned = variables.contains(&var);
        match (scanned, axis) {
            (true, Some(a)) => AxisSpec::new(a.start, a.stop, a.count)
                .map_err(|e| CliError::config(format!("sweep.{var}: {e}"))),
            (true, None) => Err(CliError::config(format!(
                "sweep: variable \"{var}\" is scanned but has no [sweep.{var}] axis \
                 (start/stop/count)"
            ))),
            (false, Some(_)) => Err(CliError::config(format!(
                "sweep: [sweep.{var}] axis given but \"{var}\" is not in `variables`; \
                 the unscanned duration is pinned to its [scenario] value"
            ))),
            (false, None) => AxisSpec::new(fixed, fixed, 1)
                .map_err(|e| CliError::config(format!("sweep.{var}: {e}"))),
        }
    };

    let tau_axis = resolve(SweepVariable::Tau, raw.tau, scenario.tau())?;
    let t_axis = resolve(SweepVariable::T, raw.t, scenario.t())?;
    Ok(SweepPlan {
        tau_axis,
        t_axis,
        variables,
    })
}

/// A copy of the raw schema with every default materialized, for the echo.
fn effective(raw: &RawConfig) -> RawConfig {
    RawConfig {
        repetitions: raw.repetitions,
        geometry: RawGeometry {
            length: raw.geometry.length,
            acceleration: match (raw.geometry.length, raw.geometry.acceleration) {
                (Some(_), None) => Some(0.0),
                _ => raw.geometry.acceleration,
            },
            inner_wall: raw.geometry.inner_wall,
            outer_wall: raw.geometry.outer_wall,
            mass: raw.geometry.mass,
        },
        modes: RawModes {
            k: raw.modes.k,
            k_prime: raw.modes.k_prime,
        },
        scenario: raw.scenario.as_ref().map(|s| RawScenario {
            tau: s.tau,
            t: s.t,
            strength_ratio: s.strength_ratio,
            direction: s.direction,
            resonance_order: s.resonance_order,
        }),
        trajectory: raw.trajectory.as_ref().map(|t| RawTrajectory {
            segments: t
                .segments
                .iter()
                .map(|seg| match *seg {
                    RawSegment::Coast { duration } => RawSegment::Coast { duration },
                    RawSegment::Burn { duration, strength } => {
                        RawSegment::Burn { duration, strength }
                    }
                })
                .collect(),
        }),
        sweep: raw.sweep.as_ref().map(|s| RawSweep {
            variables: s.variables.clone(),
            tau: s.tau,
            t: s.t,
        }),
        numerics: RawNumerics {
            n_max: raw.numerics.n_max,
            quad_abs_tol: raw.numerics.quad_abs_tol,
        },
        output: RawOutput {
            dir: raw.output.dir.clone(),
            csv: raw.output.csv.clone(),
            heatmap: raw.output.heatmap.clone(),
            cache_dir: raw.output.cache_dir.clone(),
        },
    }
}
