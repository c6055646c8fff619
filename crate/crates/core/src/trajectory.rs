//! Travel scenarios assembled from piecewise-constant segments.
//!
//! A cavity trajectory is an ordered list of *coasts* (inertial motion for a
//! proper-time duration) and *burns* (uniform proper acceleration for a
//! proper-time duration, with a signed dimensionless strength). A burn is
//! realized as a basis change into the accelerated frame, free evolution
//! there, and the inverse basis change; a coast is free inertial evolution.
//! Composing the per-segment mode transformations yields one *segment pass*,
//! which may then be repeated any number of times.
//!
//! The module provides:
//!
//! - the segment/trajectory/scenario domain types with validated invariants;
//! - pluggable [`JunctionSource`] providers for the frame-change coefficient
//!   block (exact quadrature, first-order reconstruction, disk-cached, and
//!   memoized variants);
//! - [`build_segment_symplectic`], which composes a full truncated
//!   coefficient block for one segment pass and extracts the two-mode
//!   symplectic transformation;
//! - the resonance times at which repeated passes pump a mode pair
//!   coherently, plus the normality defect and its first-order prediction
//!   that certify a resonance;
//! - closed-form strength and entanglement formulas for the standard
//!   burn–coast–burn–coast scenario, against which the numeric pipeline is
//!   cross-checked;
//! - repetition-growth prediction and a one-call entanglement summary.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{Mutex, PoisonError};

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

use crate::bogoliubov::{
    compose, creation_coefficient, first_order_coefficients, free_evolution_block, invert,
    junction_coefficients_oracle, mean_excitations, BogoliubovBlock, BogoliubovError, Chart,
    FirstOrderCoeffs,
};
use crate::cache::{CacheError, CoefficientCache, JunctionKey};
use crate::geometry::{CavityGeometry, GeometryError, ModePair};
use crate::modes::minkowski_frequency;
use crate::quadrature::QuadSpec;
use crate::scalar::{approx_f64, cis, Real};
use crate::symplectic::{
    log_negativity_from_nu, smallest_pt_symplectic_eigenvalue, squeezer_decompose,
    CovarianceMatrix, EntanglementReport, SymplecticError, SymplecticOp, TRUNCATION_DEFECT_LIMIT,
};

/// Hard upper bound on a burn's dimensionless strength: at strength 2 one
/// cavity wall sits at the horizon of the accelerated frame, so the segment
/// ceases to describe a rigid cavity at all.
pub const MAX_BURN_STRENGTH: f64 = 2.0;

/// Largest burn strength accepted by the segment builder. Beyond this, the
/// perturbative truncation analysis that underwrites the two-mode readout is
/// no longer meaningful.
pub const PERTURBATIVE_HARD_LIMIT: f64 = 0.1;

/// Burn strength above which results carry visible second-order
/// contamination; the builder flags such trajectories rather than refusing
/// them.
pub const PERTURBATIVE_WARN_THRESHOLD: f64 = 0.01;

/// Relative slack when deciding whether a scenario's total proper time sits
/// on a resonance.
pub const RESONANCE_TIME_TOLERANCE: f64 = 1e-9;

/// Scale factor for the builder's truncation-defect gate: restricting the
/// segment transformation to two modes discards couplings of size `O(h)`,
/// so the extracted matrix fails symplecticity by `O(h^2)` even when the
/// full block is exact. The gate therefore grows as `scale * h_max^2` once
/// that exceeds the conservative default.
const TRUNCATION_LIMIT_SCALE: f64 = 50.0;

/// Failure modes of trajectory construction and analysis.
#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error(transparent)]
    Bogoliubov(#[from] BogoliubovError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("segment duration must be finite and non-negative, got {0}")]
    InvalidDuration(f64),
    #[error("burn strength must be finite with magnitude below {max}, got {value}")]
    BurnStrengthOutOfRange { value: f64, max: f64 },
    #[error(
        "burn strength magnitude {value} exceeds the perturbative validity limit {limit}"
    )]
    BeyondPerturbativeLimit { value: f64, limit: f64 },
    #[error("a trajectory needs at least one segment")]
    EmptySegmentList,
    #[error("the total proper time of a segment pass must be positive")]
    ZeroTotalTime,
    #[error("repetition count must be at least 1")]
    InvalidRepetitions,
    #[error("resonance order must be at least 1")]
    InvalidResonanceOrder,
    #[error("burn strength ratio must be positive and finite, got {0}")]
    InvalidStrengthRatio(f64),
    #[error("direction flag must be +1 or -1, got {0}")]
    InvalidDirectionFlag(i8),
    #[error("this closed form holds only for the massless field")]
    MasslessOnly,
    #[error(
        "total proper time {total:.9} is off the order-{order} resonance at {expected:.9}; \
         the closed form is valid only on resonance"
    )]
    OffResonance {
        total: f64,
        expected: f64,
        order: usize,
    },
    #[error("junction source provides truncation order {available}, but {requested} was requested")]
    TruncationMismatch { requested: usize, available: usize },
}

fn check_duration<T: Real>(duration: T) -> Result<(), TrajectoryError> {
    if duration.is_finite() && duration >= T::zero() {
        Ok(())
    } else {
        Err(TrajectoryError::InvalidDuration(approx_f64(duration)))
    }
}

/// One piece of a piecewise-constant trajectory: inertial coasting or a
/// uniformly accelerated burn, each for a non-negative proper-time duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectorySegment<T: Real> {
    /// Inertial motion.
    Coast { duration: T },
    /// Uniform proper acceleration with signed dimensionless strength
    /// `h_signed`; the sign selects the direction along the cavity axis.
    Burn { duration: T, h_signed: T },
}

impl<T: Real> TrajectorySegment<T> {
    /// Inertial segment of the given proper-time duration.
    pub fn coast(duration: T) -> Result<Self, TrajectoryError> {
        check_duration(duration)?;
        Ok(Self::Coast { duration })
    }

    /// Accelerated segment of the given proper-time duration and signed
    /// strength; the magnitude must stay below [`MAX_BURN_STRENGTH`].
    pub fn burn(duration: T, h_signed: T) -> Result<Self, TrajectoryError> {
        check_duration(duration)?;
        if !(h_signed.is_finite() && h_signed.abs() < T::c(MAX_BURN_STRENGTH)) {
            return Err(TrajectoryError::BurnStrengthOutOfRange {
                value: approx_f64(h_signed),
                max: MAX_BURN_STRENGTH,
            });
        }
        Ok(Self::Burn { duration, h_signed })
    }

    /// Proper-time duration of the segment.
    pub fn duration(&self) -> T {
        match *self {
            Self::Coast { duration } | Self::Burn { duration, .. } => duration,
        }
    }

    /// Signed strength for burns, `None` for coasts.
    pub fn burn_strength(&self) -> Option<T> {
        match *self {
            Self::Coast { .. } => None,
            Self::Burn { h_signed, .. } => Some(h_signed),
        }
    }
}

/// An ordered list of segments (one *pass*) together with the number of
/// times the pass is repeated.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    segments: Vec<TrajectorySegment<T>>,
    repetitions: usize,
}

impl<T: Real> Trajectory<T> {
    /// Validates that at least one segment is present, the pass has positive
    /// total proper time, and the repetition count is at least 1.
    pub fn new(
        segments: Vec<TrajectorySegment<T>>,
        repetitions: usize,
    ) -> Result<Self, TrajectoryError> {
        if segments.is_empty() {
            return Err(TrajectoryError::EmptySegmentList);
        }
        if repetitions == 0 {
            return Err(TrajectoryError::InvalidRepetitions);
        }
        let total = segments
            .iter()
            .fold(T::zero(), |acc, s| acc + s.duration());
        if total.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
            return Err(TrajectoryError::ZeroTotalTime);
        }
        Ok(Self {
            segments,
            repetitions,
        })
    }

    pub fn segments(&self) -> &[TrajectorySegment<T>] {
        &self.segments
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    /// Proper time of a single pass (repetitions not included).
    pub fn segment_proper_time(&self) -> T {
        self.segments
            .iter()
            .fold(T::zero(), |acc, s| acc + s.duration())
    }
}

/// Parameters of the standard four-segment scenario: burn for proper time
/// `tau` at strength `h`, coast for `t`, burn again for `tau` at strength
/// `epsilon * y * h`, coast for `t`. One pass lasts `2 (tau + t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleScenarioParams<T: Real> {
    pair: ModePair,
    tau: T,
    t: T,
    h: T,
    y: T,
    epsilon: i8,
    repetitions: usize,
    resonance_order: usize,
}

impl<T: Real> SampleScenarioParams<T> {
    /// Validates and records the scenario parameters.
    ///
    /// `h` is the magnitude of the first burn (non-negative); `y > 0` is the
    /// strength ratio of the second burn to the first; `epsilon` is `+1`
    /// when both burns accelerate the same way and `-1` otherwise;
    /// `resonance_order` selects which resonance the closed-form
    /// entanglement formula refers to.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pair: ModePair,
        tau: T,
        t: T,
        h: T,
        y: T,
        epsilon: i8,
        repetitions: usize,
        resonance_order: usize,
    ) -> Result<Self, TrajectoryError> {
        check_duration(tau)?;
        check_duration(t)?;
        if (tau + t).partial_cmp(&T::zero()) != Some(Ordering::Greater) {
            return Err(TrajectoryError::ZeroTotalTime);
        }
        if !(h.is_finite() && h >= T::zero() && h < T::c(MAX_BURN_STRENGTH)) {
            return Err(TrajectoryError::BurnStrengthOutOfRange {
                value: approx_f64(h),
                max: MAX_BURN_STRENGTH,
            });
        }
        if !(y.is_finite() && y > T::zero()) {
            return Err(TrajectoryError::InvalidStrengthRatio(approx_f64(y)));
        }
        if epsilon != 1 && epsilon != -1 {
            return Err(TrajectoryError::InvalidDirectionFlag(epsilon));
        }
        if (y * h).abs() >= T::c(MAX_BURN_STRENGTH) {
            return Err(TrajectoryError::BurnStrengthOutOfRange {
                value: approx_f64(y * h),
                max: MAX_BURN_STRENGTH,
            });
        }
        if repetitions == 0 {
            return Err(TrajectoryError::InvalidRepetitions);
        }
        if resonance_order == 0 {
            return Err(TrajectoryError::InvalidResonanceOrder);
        }
        Ok(Self {
            pair,
            tau,
            t,
            h,
            y,
            epsilon,
            repetitions,
            resonance_order,
        })
    }

    pub fn pair(&self) -> ModePair {
        self.pair
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn y(&self) -> T {
        self.y
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn resonance_order(&self) -> usize {
        self.resonance_order
    }

    /// Proper time of one pass: `2 (tau + t)`.
    pub fn total_proper_time(&self) -> T {
        T::c(2.0) * (self.tau + self.t)
    }

    /// The four-segment trajectory these parameters describe, applied in the
    /// order: first burn, coast, second burn, coast.
    pub fn trajectory(&self) -> Trajectory<T> {
        let second = T::c(f64::from(self.epsilon)) * self.y * self.h;
        let segments = vec![
            TrajectorySegment::burn(self.tau, self.h).expect("validated at construction"),
            TrajectorySegment::coast(self.t).expect("validated at construction"),
            TrajectorySegment::burn(self.tau, second).expect("validated at construction"),
            TrajectorySegment::coast(self.t).expect("validated at construction"),
        ];
        Trajectory::new(segments, self.repetitions).expect("validated at construction")
    }
}

/// Provider of the frame-change coefficient block for a burn.
///
/// The geometry handed to [`JunctionSource::junction`] always carries a
/// strictly positive acceleration parameter (the burn magnitude); callers
/// account for burn direction themselves via the parity flip of the
/// returned block.
pub trait JunctionSource<T: Real> {
    fn junction(
        &self,
        geometry: &CavityGeometry<T>,
        n_max: usize,
    ) -> Result<BogoliubovBlock<T>, TrajectoryError>;
}

/// Exact junction coefficients by direct mode-overlap quadrature.
#[derive(Debug, Clone)]
pub struct OracleSource<T: Real> {
    spec: QuadSpec<T>,
}

impl<T: Real> OracleSource<T> {
    pub fn new(spec: QuadSpec<T>) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &QuadSpec<T> {
        &self.spec
    }
}

impl<T: Real> Default for OracleSource<T> {
    fn default() -> Self {
        Self::new(QuadSpec::default())
    }
}

impl<T: Real> JunctionSource<T> for OracleSource<T> {
    fn junction(
        &self,
        geometry: &CavityGeometry<T>,
        n_max: usize,
    ) -> Result<BogoliubovBlock<T>, TrajectoryError> {
        Ok(junction_coefficients_oracle(geometry, n_max, &self.spec)?)
    }
}

/// Junction blocks reconstructed from precomputed first-order coefficients:
/// accurate to `O(h^2)` and essentially free per call, which makes large
/// randomized cross-checks and dense parameter sweeps affordable.
#[derive(Debug, Clone)]
pub struct PerturbativeSource<T: Real> {
    coeffs: FirstOrderCoeffs<T>,
}

impl<T: Real> PerturbativeSource<T> {
    pub fn new(coeffs: FirstOrderCoeffs<T>) -> Self {
        Self { coeffs }
    }

    /// Runs the first-order extraction once for the given geometry and
    /// truncation order and wraps the result.
    pub fn prepare(
        geometry: &CavityGeometry<T>,
        n_max: usize,
        spec: &QuadSpec<T>,
    ) -> Result<Self, TrajectoryError> {
        Ok(Self::new(first_order_coefficients(geometry, n_max, spec)?))
    }

    pub fn coeffs(&self) -> &FirstOrderCoeffs<T> {
        &self.coeffs
    }
}

impl<T: Real> JunctionSource<T> for PerturbativeSource<T> {
    fn junction(
        &self,
        geometry: &CavityGeometry<T>,
        n_max: usize,
    ) -> Result<BogoliubovBlock<T>, TrajectoryError> {
        if n_max != self.coeffs.n_max() {
            return Err(TrajectoryError::TruncationMismatch {
                requested: n_max,
                available: self.coeffs.n_max(),
            });
        }
        Ok(self.coeffs.block_at(geometry.acceleration_parameter())?)
    }
}

/// Quadrature-backed source with a persistent disk cache: hits are loaded
/// bit-exactly, misses are computed and stored for future runs.
#[derive(Debug)]
pub struct CachedOracleSource {
    spec: QuadSpec<f64>,
    cache: CoefficientCache,
}

impl CachedOracleSource {
    pub fn new(cache: CoefficientCache, spec: QuadSpec<f64>) -> Self {
        Self { spec, cache }
    }

    pub fn cache(&self) -> &CoefficientCache {
        &self.cache
    }
}

impl JunctionSource<f64> for CachedOracleSource {
    fn junction(
        &self,
        geometry: &CavityGeometry<f64>,
        n_max: usize,
    ) -> Result<BogoliubovBlock<f64>, TrajectoryError> {
        let key = JunctionKey::new(geometry, n_max, &self.spec);
        if let Some(block) = self.cache.load_junction(&key)? {
            return Ok(block);
        }
        let block = junction_coefficients_oracle(geometry, n_max, &self.spec)?;
        self.cache.store_junction(&key, &block)?;
        Ok(block)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct MemoKey {
    length: u64,
    acceleration: u64,
    mass: u64,
    n_max: usize,
}

impl MemoKey {
    fn new<T: Real>(geometry: &CavityGeometry<T>, n_max: usize) -> Self {
        Self {
            length: approx_f64(geometry.length()).to_bits(),
            acceleration: approx_f64(geometry.acceleration_parameter()).to_bits(),
            mass: approx_f64(geometry.mass()).to_bits(),
            n_max,
        }
    }
}

/// In-memory memoization wrapper around any [`JunctionSource`], keyed on the
/// exact bit patterns of the geometry parameters. Shareable across threads;
/// a sweep over coasting times hits the underlying source only once per
/// distinct burn strength.
#[derive(Debug)]
pub struct MemoizedSource<T: Real, S> {
    inner: S,
    store: Mutex<HashMap<MemoKey, BogoliubovBlock<T>>>,
}

impl<T: Real, S: JunctionSource<T>> MemoizedSource<T, S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            store: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<T: Real, S: JunctionSource<T>> JunctionSource<T> for MemoizedSource<T, S> {
    fn junction(
        &self,
        geometry: &CavityGeometry<T>,
        n_max: usize,
    ) -> Result<BogoliubovBlock<T>, TrajectoryError> {
        let key = MemoKey::new(geometry, n_max);
        // The stored blocks are plain data, so a panic elsewhere cannot
        // leave them in a harmful state; recover the map from a poisoned
        // lock instead of propagating the poison.
        {
            let store = self.store.lock().unwrap_or_else(PoisonError::into_inner);
            if let Some(block) = store.get(&key) {
                return Ok(block.clone());
            }
        }
        let block = self.inner.junction(geometry, n_max)?;
        let mut store = self.store.lock().unwrap_or_else(PoisonError::into_inner);
        Ok(store.entry(key).or_insert(block).clone())
    }
}

/// Output of [`build_segment_symplectic`]: the full truncated coefficient
/// block of one segment pass and its restriction to the requested mode pair.
#[derive(Debug, Clone)]
pub struct BuiltSegment<T: Real> {
    /// Two-mode symplectic transformation of one pass, restricted to the
    /// requested pair.
    pub op: SymplecticOp<T>,
    /// Full truncated coefficient block of one pass.
    pub block: BogoliubovBlock<T>,
    /// True when some burn exceeds [`PERTURBATIVE_WARN_THRESHOLD`]: results
    /// remain available but carry visible second-order contamination.
    pub strong_burn: bool,
}

/// Composes the mode transformation of one segment pass and extracts the
/// symplectic matrix on the given mode pair.
///
/// Per segment, in listed order: a coast contributes inertial free
/// evolution; a burn contributes the frame-change block, accelerated free
/// evolution for the burn's duration, and the inverse frame change. Burns
/// toward negative coordinates reuse the positive-direction junction with
/// alternating mode-parity signs. Burn magnitudes above
/// [`PERTURBATIVE_HARD_LIMIT`] are refused; magnitudes above
/// [`PERTURBATIVE_WARN_THRESHOLD`] set the `strong_burn` flag on the result.
pub fn build_segment_symplectic<T: Real, S: JunctionSource<T> + ?Sized>(
    trajectory: &Trajectory<T>,
    geometry: &CavityGeometry<T>,
    pair: ModePair,
    source: &S,
    n_max: usize,
) -> Result<BuiltSegment<T>, TrajectoryError> {
    let mut strong_burn = false;
    let mut h_max = T::zero();
    for segment in trajectory.segments() {
        if let Some(h_signed) = segment.burn_strength() {
            let magnitude = h_signed.abs();
            if magnitude > T::c(PERTURBATIVE_HARD_LIMIT) {
                return Err(TrajectoryError::BeyondPerturbativeLimit {
                    value: approx_f64(magnitude),
                    limit: PERTURBATIVE_HARD_LIMIT,
                });
            }
            if magnitude > T::c(PERTURBATIVE_WARN_THRESHOLD) {
                strong_burn = true;
            }
            h_max = h_max.max(magnitude);
        }
    }

    // Junction blocks depend only on the burn magnitude; repeated strengths
    // (the common case) are computed once per pass.
    let mut junctions: Vec<(u64, BogoliubovBlock<T>)> = Vec::new();
    let mut total = BogoliubovBlock::identity(n_max)?;
    for segment in trajectory.segments() {
        let step = match *segment {
            TrajectorySegment::Coast { duration } => {
                free_evolution_block(geometry, duration, Chart::Inertial, n_max)?
            }
            TrajectorySegment::Burn { duration, h_signed } => {
                let magnitude = h_signed.abs();
                if magnitude == T::zero() {
                    // A zero-strength burn is inertial motion: the junction
                    // degenerates to the identity and both charts share the
                    // same frequencies.
                    free_evolution_block(geometry, duration, Chart::Inertial, n_max)?
                } else {
                    let accelerated = geometry.with_acceleration(magnitude)?;
                    let bits = approx_f64(magnitude).to_bits();
                    let junction = match junctions.iter().find(|(k, _)| *k == bits) {
                        Some((_, block)) => block.clone(),
                        None => {
                            let block = source.junction(&accelerated, n_max)?;
                            junctions.push((bits, block.clone()));
                            block
                        }
                    };
                    let junction = if h_signed < T::zero() {
                        junction.parity_flipped()
                    } else {
                        junction
                    };
                    let evolved = free_evolution_block(
                        &accelerated,
                        duration,
                        Chart::Accelerated,
                        n_max,
                    )?;
                    let entered = compose(&junction, &evolved)?;
                    compose(&entered, &invert(&junction)?)?
                }
            }
        };
        total = compose(&total, &step)?;
    }

    let floor = T::default_epsilon() * T::c(500.0);
    let limit = T::c(TRUNCATION_DEFECT_LIMIT)
        .max(T::c(TRUNCATION_LIMIT_SCALE) * h_max * h_max)
        .max(floor);
    let op =
        SymplecticOp::from_bogoliubov_with_limit(&total, &[pair.k(), pair.k_prime()], limit)?;
    Ok(BuiltSegment {
        op,
        block: total,
        strong_burn,
    })
}

/// `n`-fold repetition of a segment transformation (matrix power).
pub fn repeat<T: Real>(
    op: &SymplecticOp<T>,
    n: usize,
) -> Result<SymplecticOp<T>, TrajectoryError> {
    if n == 0 {
        return Err(TrajectoryError::InvalidRepetitions);
    }
    Ok(op.pow(n))
}

/// Proper time of the order-`n` repetition resonance of a mode pair:
/// `T_n = 2 n pi / (w_k + w_k')`.
///
/// The time is defined for every pair; whether repeated passes actually pump
/// the pair is a separate question answered by [`is_resonant_pair`].
pub fn resonance_time<T: Real>(
    geometry: &CavityGeometry<T>,
    pair: ModePair,
    n: usize,
) -> Result<T, TrajectoryError> {
    if n == 0 {
        return Err(TrajectoryError::InvalidResonanceOrder);
    }
    let sum = minkowski_frequency(geometry, pair.k()) + minkowski_frequency(geometry, pair.k_prime());
    Ok(T::c(2.0) * T::of_usize(n) * T::pi() / sum)
}

/// Whether a mode pair can be pumped at all: the first-order creation
/// coefficient of an evenly separated massless pair vanishes identically,
/// so only oddly separated pairs resonate.
pub fn is_resonant_pair(pair: ModePair) -> bool {
    pair.is_oddly_separated()
}

fn frobenius_norm<T: Real>(matrix: &DMatrix<T>) -> T {
    matrix
        .iter()
        .fold(T::zero(), |acc, v| acc + *v * *v)
        .sqrt()
}

/// Normality defect of a segment transformation: the Frobenius norm of
/// `S^T S - S S^T`.
///
/// For a pure rotation this vanishes; a repetition resonance is certified by
/// the defect dropping to second order in the burn strength.
pub fn commutator_defect<T: Real>(op: &SymplecticOp<T>) -> T {
    let s = op.matrix();
    let st = s.transpose();
    frobenius_norm(&(&st * s - s * &st))
}

/// Measured normality defect together with its first-order prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorCheck<T: Real> {
    /// `‖S^T S − S S^T‖_F` of the built transformation.
    pub defect: T,
    /// First-order prediction of the same Frobenius norm, `2 |w|`: the
    /// predicted commutator has two off-diagonal 2x2 blocks, each carrying
    /// the real and imaginary parts of `w` twice.
    pub predicted_defect: T,
    /// `|w|` with `w = 2 (conj(G_k) − G_k') B_{kk'}`, where
    /// `G_k = e^{i w_k T}` collects the total free phase of a pass and
    /// `B_{kk'}` is the pass's pair-creation coefficient. The prefactor
    /// vanishes exactly at the resonance times.
    pub w_modulus: T,
}

/// Computes the normality defect of a built segment and the first-order
/// prediction derived from its pair-creation coefficient.
///
/// The prediction keeps only the leading creation term, assuming the two
/// off-diagonal creation entries of the pass contribute in phase; that holds
/// for burn–coast compositions, whose creation entries differ only by free
/// phases.
pub fn commutator_check<T: Real>(
    op: &SymplecticOp<T>,
    block: &BogoliubovBlock<T>,
    geometry: &CavityGeometry<T>,
    pair: ModePair,
    total_proper_time: T,
) -> Result<CommutatorCheck<T>, TrajectoryError> {
    check_duration(total_proper_time)?;
    let defect = commutator_defect(op);
    let w1 = minkowski_frequency(geometry, pair.k());
    let w2 = minkowski_frequency(geometry, pair.k_prime());
    let b = block.beta_entry(pair.k(), pair.k_prime())?;
    let prefactor = cis(-w1 * total_proper_time) - cis(w2 * total_proper_time);
    let two = Complex::new(T::c(2.0), T::zero());
    let w_modulus = (prefactor * b * two).norm_sqr().sqrt();
    Ok(CommutatorCheck {
        defect,
        predicted_defect: T::c(2.0) * w_modulus,
        w_modulus,
    })
}

fn require_massless<T: Real>(geometry: &CavityGeometry<T>) -> Result<(), TrajectoryError> {
    if geometry.is_massless() {
        Ok(())
    } else {
        Err(TrajectoryError::MasslessOnly)
    }
}

/// Closed-form magnitude of the pair-creation coefficient generated by one
/// pass of the four-segment scenario, to first order in the burn strength:
///
/// `|B| = c_{kk'} |1 − g*_k g*_k'| |1 + ε y g*_k g*_k' f*_k f*_k'| h`
///
/// with `g_k = e^{i w_k tau}` and `f_k = e^{i w_k t}`. Massless only.
pub fn sample_scenario_b1<T: Real>(
    params: &SampleScenarioParams<T>,
    geometry: &CavityGeometry<T>,
) -> Result<T, TrajectoryError> {
    require_massless(geometry)?;
    let pair = params.pair();
    let w_sum = minkowski_frequency(geometry, pair.k())
        + minkowski_frequency(geometry, pair.k_prime());
    let c = creation_coefficient::<T>(pair.k(), pair.k_prime());
    let one = Complex::new(T::one(), T::zero());
    let g_star = cis(-w_sum * params.tau());
    let f_star = cis(-w_sum * params.t());
    let eps_y = Complex::new(T::c(f64::from(params.epsilon())) * params.y(), T::zero());
    let burn_factor = (one - g_star).norm_sqr().sqrt();
    let interference = (one + eps_y * g_star * f_star).norm_sqr().sqrt();
    Ok(c * burn_factor * interference * params.h())
}

/// Closed-form entanglement (logarithmic negativity, equivalently the
/// first-order drop of the smallest partial-transpose symplectic eigenvalue
/// up to a factor) after `N` resonant passes of the four-segment scenario:
///
/// `E = N c_{kk'} |(1 − (−1)^n e^{i (w_k + w_k') t}) (1 + (−1)^n ε y)| h`
///
/// valid only when one pass lasts exactly the order-`n` resonance time
/// `T_n = 2 (tau + t)`; off-resonance parameter sets are rejected because
/// the derivation does not extend to them. Massless only.
pub fn sample_scenario_logneg<T: Real>(
    params: &SampleScenarioParams<T>,
    geometry: &CavityGeometry<T>,
) -> Result<T, TrajectoryError> {
    require_massless(geometry)?;
    let pair = params.pair();
    let order = params.resonance_order();
    let expected = resonance_time(geometry, pair, order)?;
    let total = params.total_proper_time();
    let slack = T::c(RESONANCE_TIME_TOLERANCE).max(T::default_epsilon() * T::c(32.0));
    if (total - expected).abs() > slack * expected {
        return Err(TrajectoryError::OffResonance {
            total: approx_f64(total),
            expected: approx_f64(expected),
            order,
        });
    }
    let w_sum = minkowski_frequency(geometry, pair.k())
        + minkowski_frequency(geometry, pair.k_prime());
    let c = creation_coefficient::<T>(pair.k(), pair.k_prime());
    let sign = if order.is_multiple_of(2) { T::one() } else { -T::one() };
    let one = Complex::new(T::one(), T::zero());
    let coast_factor = (one - cis(w_sum * params.t()) * Complex::new(sign, T::zero()))
        .norm_sqr()
        .sqrt();
    let direction_factor =
        (T::one() + sign * T::c(f64::from(params.epsilon())) * params.y()).abs();
    Ok(T::of_usize(params.repetitions()) * c * coast_factor * direction_factor * params.h())
}

/// Entanglement growth against repetition count for one point of the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthPoint<T: Real> {
    /// Number of passes.
    pub repetitions: usize,
    /// Pipeline value `1 − ν̃_N` of the reduced pair state after that many
    /// passes.
    pub measured: T,
    /// Linear extrapolation `N · (1 − ν̃_1)` from the single-pass value.
    pub predicted: T,
}

/// Evaluates `1 − ν̃_N` for `N = 1..=max_repetitions` alongside the linear
/// prediction from the first pass. On resonance the two agree to first
/// order; off resonance the measured series oscillates with a bounded
/// envelope instead of growing.
pub fn predict_linear_growth<T: Real>(
    op: &SymplecticOp<T>,
    max_repetitions: usize,
) -> Result<Vec<GrowthPoint<T>>, TrajectoryError> {
    if max_repetitions == 0 {
        return Err(TrajectoryError::InvalidRepetitions);
    }
    let mut points = Vec::with_capacity(max_repetitions);
    let mut first = T::zero();
    for n in 1..=max_repetitions {
        let sigma = CovarianceMatrix::reduce_two_mode(op, n)?;
        let nu = smallest_pt_symplectic_eigenvalue(&sigma)?;
        let measured = T::one() - nu;
        if n == 1 {
            first = measured;
        }
        points.push(GrowthPoint {
            repetitions: n,
            measured,
            predicted: T::of_usize(n) * first,
        });
    }
    Ok(points)
}

/// Full entanglement summary of a built segment after `repetitions` passes:
/// smallest partial-transpose symplectic eigenvalue and its first-order
/// drop, logarithmic negativity, fitted squeezer gate parameters, and the
/// mean excitation numbers of the pair.
pub fn analyze<T: Real>(
    segment: &BuiltSegment<T>,
    repetitions: usize,
) -> Result<EntanglementReport<T>, TrajectoryError> {
    let op_n = repeat(&segment.op, repetitions)?;
    let sigma = CovarianceMatrix::evolve_vacuum(&op_n);
    let nu = smallest_pt_symplectic_eigenvalue(&sigma)?;
    let fit = squeezer_decompose(&op_n)?;
    let mut full = segment.block.clone();
    for _ in 1..repetitions {
        full = compose(&full, &segment.block)?;
    }
    let labels = segment.op.mode_labels();
    let (k, k_prime) = (labels[0], labels[1]);
    Ok(EntanglementReport {
        nu_tilde: nu,
        nu_tilde_first_order: T::one() - nu,
        log_negativity: log_negativity_from_nu(nu),
        squeezing_r: fit.r,
        angle_k: fit.angle_k,
        angle_k_prime: fit.angle_k_prime,
        squeezer_residual: fit.residual,
        mean_excitations_k: mean_excitations(&full, k)?,
        mean_excitations_k_prime: mean_excitations(&full, k_prime)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModeIndex;
    use crate::symplectic::log_negativity;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    const N_MAX: usize = 12;
    const H: f64 = 1e-4;

    fn idx(k: usize) -> ModeIndex {
        ModeIndex::new(k).unwrap()
    }

    fn pair12() -> ModePair {
        ModePair::new(idx(1), idx(2)).unwrap()
    }

    fn base_geometry() -> CavityGeometry<f64> {
        CavityGeometry::from_length_acceleration(1.0, H, 0.0).unwrap()
    }

    fn first_order() -> &'static FirstOrderCoeffs<f64> {
        static CELL: OnceLock<FirstOrderCoeffs<f64>> = OnceLock::new();
        CELL.get_or_init(|| {
            first_order_coefficients(&base_geometry(), N_MAX, &QuadSpec::default()).unwrap()
        })
    }

    fn perturbative() -> PerturbativeSource<f64> {
        PerturbativeSource::new(first_order().clone())
    }

    fn scenario(
        tau: f64,
        t: f64,
        y: f64,
        epsilon: i8,
        repetitions: usize,
        order: usize,
    ) -> SampleScenarioParams<f64> {
        SampleScenarioParams::new(pair12(), tau, t, H, y, epsilon, repetitions, order).unwrap()
    }

    fn build_scenario(params: &SampleScenarioParams<f64>) -> BuiltSegment<f64> {
        build_segment_symplectic(
            &params.trajectory(),
            &base_geometry(),
            params.pair(),
            &perturbative(),
            N_MAX,
        )
        .unwrap()
    }

    fn beta_modulus(segment: &BuiltSegment<f64>, pair: ModePair) -> f64 {
        segment
            .block
            .beta_entry(pair.k(), pair.k_prime())
            .unwrap()
            .norm_sqr()
            .sqrt()
    }

    #[test]
    fn segment_and_trajectory_validation() {
        assert!(matches!(
            TrajectorySegment::<f64>::coast(-0.1),
            Err(TrajectoryError::InvalidDuration(_))
        ));
        assert!(matches!(
            TrajectorySegment::<f64>::coast(f64::NAN),
            Err(TrajectoryError::InvalidDuration(_))
        ));
        assert!(matches!(
            TrajectorySegment::<f64>::burn(0.1, 2.0),
            Err(TrajectoryError::BurnStrengthOutOfRange { .. })
        ));
        assert!(matches!(
            TrajectorySegment::<f64>::burn(0.1, f64::INFINITY),
            Err(TrajectoryError::BurnStrengthOutOfRange { .. })
        ));
        let coast = TrajectorySegment::<f64>::coast(0.5).unwrap();
        let burn = TrajectorySegment::<f64>::burn(0.25, -1e-3).unwrap();
        assert_eq!(coast.duration(), 0.5);
        assert_eq!(coast.burn_strength(), None);
        assert_eq!(burn.burn_strength(), Some(-1e-3));

        assert!(matches!(
            Trajectory::<f64>::new(vec![], 1),
            Err(TrajectoryError::EmptySegmentList)
        ));
        assert!(matches!(
            Trajectory::new(vec![TrajectorySegment::<f64>::coast(0.0).unwrap()], 1),
            Err(TrajectoryError::ZeroTotalTime)
        ));
        assert!(matches!(
            Trajectory::new(vec![coast], 0),
            Err(TrajectoryError::InvalidRepetitions)
        ));
        let trajectory = Trajectory::new(vec![burn, coast], 3).unwrap();
        assert_eq!(trajectory.repetitions(), 3);
        assert_relative_eq!(trajectory.segment_proper_time(), 0.75);

        let pair = pair12();
        assert!(matches!(
            SampleScenarioParams::new(pair, 0.1, 0.1, H, 0.0, 1, 1, 1),
            Err(TrajectoryError::InvalidStrengthRatio(_))
        ));
        assert!(matches!(
            SampleScenarioParams::new(pair, 0.1, 0.1, H, 1.0, 0, 1, 1),
            Err(TrajectoryError::InvalidDirectionFlag(0))
        ));
        assert!(matches!(
            SampleScenarioParams::new(pair, 0.1, 0.1, -H, 1.0, 1, 1, 1),
            Err(TrajectoryError::BurnStrengthOutOfRange { .. })
        ));
        assert!(matches!(
            SampleScenarioParams::new(pair, 0.0, 0.0, H, 1.0, 1, 1, 1),
            Err(TrajectoryError::ZeroTotalTime)
        ));
        assert!(matches!(
            SampleScenarioParams::new(pair, 0.1, 0.1, H, 1.0, 1, 0, 1),
            Err(TrajectoryError::InvalidRepetitions)
        ));
        assert!(matches!(
            SampleScenarioParams::new(pair, 0.1, 0.1, H, 1.0, 1, 1, 0),
            Err(TrajectoryError::InvalidResonanceOrder)
        ));
        // A strength ratio that pushes the second burn past the hard bound is
        // caught at construction, not at trajectory assembly.
        assert!(matches!(
            SampleScenarioParams::new(pair, 0.1, 0.1, 1.0, 2.5, 1, 1, 1),
            Err(TrajectoryError::BurnStrengthOutOfRange { .. })
        ));
        assert!(SampleScenarioParams::new(pair, 0.1, 0.1, 1.0, 1.9, 1, 1, 1).is_ok());

        let params = scenario(0.25, 0.125, 0.5, -1, 4, 1);
        let trajectory = params.trajectory();
        assert_eq!(trajectory.segments().len(), 4);
        assert_eq!(trajectory.repetitions(), 4);
        assert_relative_eq!(trajectory.segment_proper_time(), params.total_proper_time());
        assert_eq!(
            trajectory.segments()[2].burn_strength(),
            Some(-0.5 * H)
        );
    }

    #[test]
    fn all_coast_trajectory_is_pure_rotation() {
        let geometry = base_geometry();
        let trajectory = Trajectory::new(
            vec![
                TrajectorySegment::coast(0.3).unwrap(),
                TrajectorySegment::coast(0.11).unwrap(),
            ],
            1,
        )
        .unwrap();
        let built = build_segment_symplectic(
            &trajectory,
            &geometry,
            pair12(),
            &OracleSource::default(),
            N_MAX,
        )
        .unwrap();

        let beta_max = built
            .block
            .beta()
            .iter()
            .map(|z| z.norm_sqr().sqrt())
            .fold(0.0_f64, f64::max);
        assert_eq!(beta_max, 0.0);
        assert!(!built.strong_burn);

        let duration = 0.41;
        let expected = SymplecticOp::mode_rotations(
            &[-PI * duration, -2.0 * PI * duration],
            vec![idx(1), idx(2)],
        )
        .unwrap();
        let diff = (built.op.matrix() - expected.matrix())
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        assert!(diff < 1e-12, "rotation mismatch {diff:.3e}");

        let sigma = CovarianceMatrix::reduce_two_mode(&built.op, 1).unwrap();
        assert!(log_negativity(&sigma).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zero_strength_burn_acts_as_coast() {
        let geometry = base_geometry();
        let as_burn = Trajectory::new(
            vec![TrajectorySegment::burn(0.25, 0.0).unwrap()],
            1,
        )
        .unwrap();
        let as_coast =
            Trajectory::new(vec![TrajectorySegment::coast(0.25).unwrap()], 1).unwrap();
        let source = OracleSource::default();
        let a = build_segment_symplectic(&as_burn, &geometry, pair12(), &source, N_MAX).unwrap();
        let b = build_segment_symplectic(&as_coast, &geometry, pair12(), &source, N_MAX).unwrap();
        let diff = (a.op.matrix() - b.op.matrix())
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        assert!(diff < 1e-14);
    }

    #[test]
    fn builder_rejects_burns_beyond_perturbative_limit_and_flags_strong_ones() {
        let geometry = base_geometry();
        let too_strong = Trajectory::new(
            vec![TrajectorySegment::burn(0.1, 0.2).unwrap()],
            1,
        )
        .unwrap();
        assert!(matches!(
            build_segment_symplectic(
                &too_strong,
                &geometry,
                pair12(),
                &OracleSource::<f64>::default(),
                N_MAX,
            ),
            Err(TrajectoryError::BeyondPerturbativeLimit { .. })
        ));

        let strong = Trajectory::new(
            vec![TrajectorySegment::burn(0.1, 0.05).unwrap()],
            1,
        )
        .unwrap();
        let built = build_segment_symplectic(
            &strong,
            &geometry,
            pair12(),
            &OracleSource::default(),
            N_MAX,
        )
        .unwrap();
        assert!(built.strong_burn);
    }

    #[test]
    fn single_burn_matches_reduced_closed_form() {
        let geometry = base_geometry();
        let tau = 0.37;
        let trajectory =
            Trajectory::new(vec![TrajectorySegment::burn(tau, H).unwrap()], 1).unwrap();
        let expected = creation_coefficient::<f64>(idx(1), idx(2))
            * (Complex::new(1.0, 0.0) - cis(-3.0 * PI * tau))
                .norm_sqr()
                .sqrt()
            * H;

        for (label, built) in [
            (
                "perturbative",
                build_segment_symplectic(&trajectory, &geometry, pair12(), &perturbative(), N_MAX)
                    .unwrap(),
            ),
            (
                "oracle",
                build_segment_symplectic(
                    &trajectory,
                    &geometry,
                    pair12(),
                    &OracleSource::default(),
                    N_MAX,
                )
                .unwrap(),
            ),
        ] {
            let pipeline = beta_modulus(&built, pair12());
            let rel = (pipeline - expected).abs() / expected;
            assert!(
                rel < 1e-3,
                "{label}: |B| = {pipeline:.6e}, closed form {expected:.6e}, rel {rel:.2e}"
            );
        }
    }

    #[test]
    fn four_segment_scenario_matches_closed_form_at_joint_maximum() {
        let geometry = base_geometry();
        // Both moduli of the closed form reach 2 at tau = t = 1/3.
        let params = scenario(1.0 / 3.0, 1.0 / 3.0, 1.0, 1, 5, 2);
        let closed = sample_scenario_b1(&params, &geometry).unwrap();
        assert_relative_eq!(
            closed,
            4.0 * creation_coefficient::<f64>(idx(1), idx(2)) * H,
            max_relative = 1e-12
        );
        assert_relative_eq!(closed, 4.2457e-6, max_relative = 1e-4);

        let built = build_scenario(&params);
        let pipeline = beta_modulus(&built, pair12());
        assert_relative_eq!(pipeline, closed, max_relative = 1e-3);

        let oracle_built = build_segment_symplectic(
            &params.trajectory(),
            &geometry,
            params.pair(),
            &OracleSource::default(),
            N_MAX,
        )
        .unwrap();
        assert_relative_eq!(beta_modulus(&oracle_built, pair12()), closed, max_relative = 1e-3);
    }

    #[test]
    fn repeat_composes_matrix_powers() {
        let rotation = SymplecticOp::<f64>::mode_rotations(&[0.3, -0.7], vec![idx(1), idx(2)])
            .unwrap();
        assert_eq!(repeat(&rotation, 1).unwrap().matrix(), rotation.matrix());
        assert!(matches!(
            repeat(&rotation, 0),
            Err(TrajectoryError::InvalidRepetitions)
        ));

        let spun = repeat(&rotation, 7).unwrap();
        let direct = SymplecticOp::<f64>::mode_rotations(
            &[7.0 * 0.3, 7.0 * -0.7],
            vec![idx(1), idx(2)],
        )
        .unwrap();
        let diff = (spun.matrix() - direct.matrix())
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        assert!(diff < 1e-12);

        let built = build_scenario(&scenario(1.0 / 3.0, 1.0 / 3.0, 1.0, 1, 5, 2));
        let twice_thrice = repeat(&repeat(&built.op, 2).unwrap(), 3).unwrap();
        let six = repeat(&built.op, 6).unwrap();
        let diff = (twice_thrice.matrix() - six.matrix())
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn resonance_times_and_pair_predicate() {
        let geometry = base_geometry();
        let t1 = resonance_time(&geometry, pair12(), 1).unwrap();
        assert_relative_eq!(t1, 2.0 / 3.0, max_relative = 1e-15);
        let t2 = resonance_time(&geometry, pair12(), 2).unwrap();
        assert_relative_eq!(t2, 2.0 * t1, max_relative = 1e-15);
        assert!(matches!(
            resonance_time(&geometry, pair12(), 0),
            Err(TrajectoryError::InvalidResonanceOrder)
        ));

        // The time is defined for an evenly separated pair, but no pumping
        // occurs there: the first-order creation coefficient vanishes.
        let pair13 = ModePair::new(idx(1), idx(3)).unwrap();
        let t13 = resonance_time(&geometry, pair13, 1).unwrap();
        assert_relative_eq!(t13, 0.5, max_relative = 1e-15);
        assert!(!is_resonant_pair(pair13));
        assert!(is_resonant_pair(pair12()));
        assert_eq!(creation_coefficient::<f64>(idx(1), idx(3)), 0.0);
    }

    #[test]
    fn commutator_vanishes_on_resonance_and_matches_prediction_off_it() {
        let geometry = base_geometry();
        let rotation = SymplecticOp::<f64>::mode_rotations(&[0.4, 1.1], vec![idx(1), idx(2)])
            .unwrap();
        assert!(commutator_defect(&rotation) < 1e-13);

        // One pass lasting exactly the order-2 resonance time.
        let resonant = build_scenario(&scenario(1.0 / 3.0, 1.0 / 3.0, 1.0, 1, 1, 2));
        let defect = commutator_defect(&resonant.op);
        assert!(
            defect < 10.0 * H * H,
            "resonant normality defect {defect:.3e} should be second order"
        );

        // The same scenario with the coasts stretched so the pass overshoots
        // the resonance by 0.1 in total proper time.
        let off_params = scenario(1.0 / 3.0, 1.0 / 3.0 + 0.05, 1.0, 1, 1, 2);
        let off = build_scenario(&off_params);
        let check = commutator_check(
            &off.op,
            &off.block,
            &geometry,
            off_params.pair(),
            off_params.total_proper_time(),
        )
        .unwrap();
        assert!(check.defect > 100.0 * H * H);
        assert_relative_eq!(check.predicted_defect, 2.0 * check.w_modulus, max_relative = 1e-14);
        assert_relative_eq!(check.defect, check.predicted_defect, max_relative = 1e-2);
    }

    #[test]
    fn closed_form_strength_zeros() {
        let geometry = base_geometry();
        // A full-period first burn creates nothing: g*_k g*_k' = 1.
        let full_period = scenario(2.0 / 3.0, 0.19, 1.0, 1, 1, 1);
        assert!(sample_scenario_b1(&full_period, &geometry).unwrap() < 1e-18);

        // Evenly separated pairs never pump.
        let pair13 = ModePair::new(idx(1), idx(3)).unwrap();
        let even =
            SampleScenarioParams::new(pair13, 0.21, 0.17, H, 1.0, 1, 1, 1).unwrap();
        assert_eq!(sample_scenario_b1(&even, &geometry).unwrap(), 0.0);

        let massive = CavityGeometry::from_length_acceleration(1.0, H, 1.5).unwrap();
        assert!(matches!(
            sample_scenario_b1(&full_period, &massive),
            Err(TrajectoryError::MasslessOnly)
        ));
    }

    #[test]
    fn closed_form_entanglement_values_and_resonance_gate() {
        let geometry = base_geometry();
        // Maximum configuration: even order, t an odd multiple of
        // pi/(w_k + w_k'), matched burns in the same direction.
        let best = scenario(1.0 / 3.0, 1.0 / 3.0, 1.0, 1, 5, 2);
        let e = sample_scenario_logneg(&best, &geometry).unwrap();
        assert_relative_eq!(
            e,
            20.0 * creation_coefficient::<f64>(idx(1), idx(2)) * H,
            max_relative = 1e-12
        );
        assert_relative_eq!(e, 2.1229e-5, max_relative = 1e-4);

        // Even order with a full-period coast: no entanglement.
        let even_zero = scenario(0.0, 2.0 / 3.0, 1.0, 1, 5, 2);
        assert!(sample_scenario_logneg(&even_zero, &geometry).unwrap() < 1e-18);

        // Odd order with a half-period coast: no entanglement.
        let odd_zero = scenario(0.0, 1.0 / 3.0, 1.0, 1, 5, 1);
        assert!(sample_scenario_logneg(&odd_zero, &geometry).unwrap() < 1e-18);

        // Opposite-direction burns at odd order with a full-period coast hit
        // the odd-order maximum.
        let odd_best = scenario(1.0 / 3.0, 0.0, 1.0, -1, 5, 1);
        let e_odd = sample_scenario_logneg(&odd_best, &geometry).unwrap();
        assert_relative_eq!(
            e_odd,
            20.0 * creation_coefficient::<f64>(idx(1), idx(2)) * H,
            max_relative = 1e-12
        );

        // Off-resonance parameter sets are rejected outright.
        let off = scenario(0.2, 0.2, 1.0, 1, 5, 1);
        assert!(matches!(
            sample_scenario_logneg(&off, &geometry),
            Err(TrajectoryError::OffResonance { order: 1, .. })
        ));
    }

    #[test]
    fn growth_is_linear_on_resonance_and_bounded_off_it() {
        let resonant = build_scenario(&scenario(1.0 / 3.0, 1.0 / 3.0, 1.0, 1, 1, 2));
        let series = predict_linear_growth(&resonant.op, 20).unwrap();
        assert_eq!(series.len(), 20);
        assert_relative_eq!(series[0].measured, series[0].predicted);
        for point in &series {
            let ratio = point.measured / point.predicted;
            assert!(
                (0.99..=1.01).contains(&ratio),
                "N = {}: measured/predicted = {ratio:.6}",
                point.repetitions
            );
        }

        // Off resonance the series oscillates under the envelope set by the
        // detuning, instead of accumulating.
        let off = build_scenario(&scenario(0.1, 0.1, 1.0, 1, 1, 1));
        let series = predict_linear_growth(&off.op, 50).unwrap();
        let theta = 3.0 * PI * 0.4;
        let envelope = series[0].measured / (theta / 2.0).sin().abs();
        let max = series
            .iter()
            .map(|p| p.measured)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            max <= 1.5 * envelope,
            "off-resonant max {max:.3e} exceeds envelope {envelope:.3e}"
        );
        assert!(max < 0.5 * series[49].predicted);
    }

    #[test]
    fn thousand_random_scenarios_match_closed_form() {
        let geometry = base_geometry();
        let source = perturbative();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_CAFE);
        for trial in 0..1000 {
            let tau = rng.gen_range(0.0..1.2);
            let t = rng.gen_range(0.0..1.2);
            let y = rng.gen_range(0.25..2.5);
            let epsilon = if rng.gen_bool(0.5) { 1 } else { -1 };
            if tau + t <= 0.0 {
                continue;
            }
            let params =
                SampleScenarioParams::new(pair12(), tau, t, H, y, epsilon, 1, 1).unwrap();
            let built = build_segment_symplectic(
                &params.trajectory(),
                &geometry,
                params.pair(),
                &source,
                N_MAX,
            )
            .unwrap();
            let pipeline = beta_modulus(&built, pair12());
            let closed = sample_scenario_b1(&params, &geometry).unwrap();
            let tolerance = (1e-3 * closed).max(1e-10);
            assert!(
                (pipeline - closed).abs() <= tolerance,
                "trial {trial}: tau={tau:.4} t={t:.4} y={y:.4} eps={epsilon}: \
                 pipeline {pipeline:.6e} vs closed {closed:.6e}"
            );
        }

        // Spot-check a few draws against the exact quadrature route.
        let oracle = MemoizedSource::new(OracleSource::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0xABCD_1234);
        for _ in 0..3 {
            let tau = rng.gen_range(0.05..1.0);
            let t = rng.gen_range(0.05..1.0);
            let y = rng.gen_range(0.5..1.5);
            let epsilon = if rng.gen_bool(0.5) { 1 } else { -1 };
            let params =
                SampleScenarioParams::new(pair12(), tau, t, H, y, epsilon, 1, 1).unwrap();
            let built = build_segment_symplectic(
                &params.trajectory(),
                &geometry,
                params.pair(),
                &oracle,
                N_MAX,
            )
            .unwrap();
            let pipeline = beta_modulus(&built, pair12());
            let closed = sample_scenario_b1(&params, &geometry).unwrap();
            let tolerance = (1e-3 * closed).max(1e-10);
            assert!(
                (pipeline - closed).abs() <= tolerance,
                "oracle route: tau={tau:.4} t={t:.4} y={y:.4} eps={epsilon}: \
                 pipeline {pipeline:.6e} vs closed {closed:.6e}"
            );
        }
    }

    proptest! {
        // Negating the interference phase in two different ways — flipping
        // the direction flag, or shifting the coast by a half period of the
        // summed frequency — gives the same strength.
        #[test]
        fn direction_swap_equals_half_period_coast_shift(
            tau in 1e-3..1.5_f64,
            t in 0.0..1.5_f64,
            y in 0.1..3.0_f64,
            flip in proptest::bool::ANY,
        ) {
            let geometry = base_geometry();
            let epsilon: i8 = if flip { 1 } else { -1 };
            let original =
                SampleScenarioParams::new(pair12(), tau, t, H, y, epsilon, 1, 1).unwrap();
            let swapped = SampleScenarioParams::new(
                pair12(),
                tau,
                t + 1.0 / 3.0,
                H,
                y,
                -epsilon,
                1,
                1,
            )
            .unwrap();
            let a = sample_scenario_b1(&original, &geometry).unwrap();
            let b = sample_scenario_b1(&swapped, &geometry).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0) + 1e-18);
        }
    }

    #[test]
    fn entanglement_landscape_is_periodic_in_both_times() {
        let period = 2.0 / 3.0;
        let nu1 = |tau: f64, t: f64| -> f64 {
            let built = build_scenario(&scenario(tau, t, 1.0, 1, 5, 1));
            let sigma = CovarianceMatrix::reduce_two_mode(&built.op, 5).unwrap();
            1.0 - smallest_pt_symplectic_eigenvalue(&sigma).unwrap()
        };
        for (tau, t) in [(0.11, 0.23), (0.4, 0.05), (0.27, 0.61)] {
            let base = nu1(tau, t);
            assert!(
                (nu1(tau + period, t) - base).abs() < 1e-8,
                "period shift in burn time moved the landscape at ({tau}, {t})"
            );
            assert!(
                (nu1(tau, t + period) - base).abs() < 1e-8,
                "period shift in coast time moved the landscape at ({tau}, {t})"
            );
        }
    }

    /// Counts how often the wrapped source is actually consulted.
    struct CountingSource {
        inner: OracleSource<f64>,
        calls: Mutex<usize>,
    }

    impl JunctionSource<f64> for CountingSource {
        fn junction(
            &self,
            geometry: &CavityGeometry<f64>,
            n_max: usize,
        ) -> Result<BogoliubovBlock<f64>, TrajectoryError> {
            *self.calls.lock().unwrap() += 1;
            self.inner.junction(geometry, n_max)
        }
    }

    #[test]
    fn mirrored_burns_entangle_identically_and_memoization_shares_junctions() {
        let geometry = base_geometry();
        let source = MemoizedSource::new(CountingSource {
            inner: OracleSource::default(),
            calls: Mutex::new(0),
        });
        let forward = Trajectory::new(
            vec![
                TrajectorySegment::burn(0.21, H).unwrap(),
                TrajectorySegment::coast(0.13).unwrap(),
                TrajectorySegment::burn(0.21, 0.8 * H).unwrap(),
                TrajectorySegment::coast(0.13).unwrap(),
            ],
            1,
        )
        .unwrap();
        let mirrored = Trajectory::new(
            vec![
                TrajectorySegment::burn(0.21, -H).unwrap(),
                TrajectorySegment::coast(0.13).unwrap(),
                TrajectorySegment::burn(0.21, -0.8 * H).unwrap(),
                TrajectorySegment::coast(0.13).unwrap(),
            ],
            1,
        )
        .unwrap();

        let a = build_segment_symplectic(&forward, &geometry, pair12(), &source, N_MAX).unwrap();
        let b = build_segment_symplectic(&mirrored, &geometry, pair12(), &source, N_MAX).unwrap();

        // Mirroring the whole scenario flips coefficient signs pairwise and
        // cannot change any modulus.
        assert_relative_eq!(
            beta_modulus(&a, pair12()),
            beta_modulus(&b, pair12()),
            max_relative = 1e-14
        );
        let nu = |segment: &BuiltSegment<f64>| {
            let sigma = CovarianceMatrix::reduce_two_mode(&segment.op, 3).unwrap();
            smallest_pt_symplectic_eigenvalue(&sigma).unwrap()
        };
        assert_relative_eq!(nu(&a), nu(&b), max_relative = 1e-12);

        // Two distinct burn magnitudes across both builds: the memoizer must
        // have consulted the oracle exactly twice.
        assert_eq!(*source.inner().calls.lock().unwrap(), 2);
    }

    #[test]
    fn perturbative_source_rejects_mismatched_truncation() {
        let geometry = base_geometry().with_acceleration(1e-3).unwrap();
        assert!(matches!(
            perturbative().junction(&geometry, N_MAX - 2),
            Err(TrajectoryError::TruncationMismatch {
                requested: 10,
                available: N_MAX,
            })
        ));
    }

    #[test]
    fn cached_oracle_source_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let source = CachedOracleSource::new(
            CoefficientCache::new(dir.path()).unwrap(),
            QuadSpec::default(),
        );
        let geometry = base_geometry().with_acceleration(1e-3).unwrap();
        let fresh = source.junction(&geometry, 8).unwrap();
        let replayed = source.junction(&geometry, 8).unwrap();
        assert_eq!(fresh.alpha(), replayed.alpha());
        assert_eq!(fresh.beta(), replayed.beta());

        // The cached source slots into the builder like any other.
        let trajectory = Trajectory::new(
            vec![
                TrajectorySegment::burn(0.2, 1e-3).unwrap(),
                TrajectorySegment::coast(0.1).unwrap(),
            ],
            1,
        )
        .unwrap();
        let built =
            build_segment_symplectic(&trajectory, &base_geometry(), pair12(), &source, 8).unwrap();
        assert!(beta_modulus(&built, pair12()) > 0.0);
    }

    #[test]
    fn analysis_report_is_internally_consistent() {
        let geometry = base_geometry();
        let params = scenario(1.0 / 3.0, 1.0 / 3.0, 1.0, 1, 5, 2);
        let built = build_scenario(&params);
        let report = analyze(&built, params.repetitions()).unwrap();

        // The smallest eigenvalue of the partial transpose drops below 1 by
        // twice the closed-form entanglement at first order: the reduced
        // state is squeezed along both quadrature pairs.
        let closed = sample_scenario_logneg(&params, &geometry).unwrap();
        assert_relative_eq!(report.nu_tilde_first_order, 2.0 * closed, max_relative = 1e-2);
        assert!(report.nu_tilde < 1.0);
        assert_relative_eq!(
            report.log_negativity,
            report.nu_tilde_first_order,
            max_relative = 1e-3
        );
        assert_relative_eq!(
            2.0 * report.squeezing_r.abs(),
            report.nu_tilde_first_order,
            max_relative = 1e-2
        );
        assert!(report.squeezer_residual < 1e-7);
        assert!(report.mean_excitations_k > 0.0);
        assert!(report.mean_excitations_k_prime > 0.0);
        assert!(report.mean_excitations_k < 1e-6);
        assert!(report.mean_excitations_k_prime < 1e-6);
    }
}
