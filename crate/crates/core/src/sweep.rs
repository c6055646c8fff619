//! Grid scans of the four-segment travel scenario over its two durations.
//!
//! Each grid point runs the full pipeline — assemble the segment operator,
//! repeat it, evolve the vacuum, read off the partial-transpose eigenvalue
//! drop, the logarithmic negativity, and the normality defect of one pass.
//! Points are independent, so the scan parallelizes over them; the only
//! shared state is the junction source, which is read-mostly (every point
//! uses the same one or two junction blocks). Results are assembled in a
//! fixed row-major order, so repeated runs of the same scan are
//! bit-identical regardless of scheduling.

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{CavityGeometry, ModePair};
use crate::scalar::{approx_f64, Real};
use crate::symplectic::{
    log_negativity_from_nu, smallest_pt_symplectic_eigenvalue, CovarianceMatrix,
};
use crate::trajectory::{
    build_segment_symplectic, commutator_defect, repeat, JunctionSource, SampleScenarioParams,
    TrajectoryError,
};

/// A scan failed to start; per-point numeric failures are *not* errors of
/// this kind — they are recorded inside [`SweepResult`] instead.
#[derive(Debug, Error)]
pub enum SweepError {
    #[error("axis needs at least one sample point")]
    EmptyAxis,
    #[error("axis range [{start}, {stop}] is not an ordered pair of finite non-negative durations")]
    InvalidAxisRange { start: f64, stop: f64 },
    #[error(transparent)]
    Scenario(#[from] TrajectoryError),
}

/// Evenly spaced sample axis: `count` points from `start` to `stop`
/// inclusive. A single-point axis collapses to `start`; otherwise the first
/// and last samples hit the endpoints exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec<T: Real> {
    start: T,
    stop: T,
    count: usize,
}

impl<T: Real> AxisSpec<T> {
    /// Validates the range (finite, `0 <= start <= stop`) and sample count
    /// (`count >= 1`). Both endpoints must be usable as segment durations.
    pub fn new(start: T, stop: T, count: usize) -> Result<Self, SweepError> {
        if count == 0 {
            return Err(SweepError::EmptyAxis);
        }
        if !(start.is_finite() && stop.is_finite() && start >= T::zero() && stop >= start) {
            return Err(SweepError::InvalidAxisRange {
                start: approx_f64(start),
                stop: approx_f64(stop),
            });
        }
        Ok(Self { start, stop, count })
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn stop(&self) -> T {
        self.stop
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// The sample points, in increasing order.
    pub fn values(&self) -> Vec<T> {
        if self.count == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let denom = T::of_usize(self.count - 1);
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + span * T::of_usize(i) / denom
                }
            })
            .collect()
    }
}

/// Everything about the scanned scenario except the two durations: the mode
/// pair, the first burn strength `h`, the second-burn ratio `y` and
/// direction `epsilon`, and the repetition count applied at every point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepTemplate<T: Real> {
    pair: ModePair,
    h: T,
    y: T,
    epsilon: i8,
    repetitions: usize,
}

impl<T: Real> SweepTemplate<T> {
    /// Validates the point-independent parameters once, up front, with the
    /// same rules the per-point scenario constructor applies.
    pub fn new(
        pair: ModePair,
        h: T,
        y: T,
        epsilon: i8,
        repetitions: usize,
    ) -> Result<Self, SweepError> {
        // Probe with harmless durations; duration checks are per-point.
        SampleScenarioParams::new(pair, T::one(), T::zero(), h, y, epsilon, repetitions, 1)?;
        Ok(Self {
            pair,
            h,
            y,
            epsilon,
            repetitions,
        })
    }

    pub fn pair(&self) -> ModePair {
        self.pair
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
}

/// A grid point whose pipeline evaluation failed; its matrix entries hold
/// NaN and the error text is kept for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointFailure {
    /// Row index into the burn-duration axis.
    pub tau_index: usize,
    /// Column index into the coast-duration axis.
    pub t_index: usize,
    /// Human-readable cause.
    pub message: String,
}

/// Dense scan output. Matrices are indexed `(burn-duration row, coast-
/// duration column)`, matching the axis vectors; failed points carry NaN in
/// every matrix and one entry in `failures`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T: Real> {
    /// Sampled values of the burn duration `tau`.
    pub tau_values: Vec<T>,
    /// Sampled values of the coast duration `t`.
    pub t_values: Vec<T>,
    /// First-order eigenvalue drop `1 − ν̃_N` of the repeated gate.
    pub nu_tilde_first_order: DMatrix<T>,
    /// Logarithmic negativity of the repeated gate's pair state.
    pub log_negativity: DMatrix<T>,
    /// Normality defect `‖SᵀS − SSᵀ‖_F` of one pass; near zero exactly at
    /// the resonance times.
    pub commutator_defect: DMatrix<T>,
    /// Largest trusted-row unitarity defect among the per-point truncated
    /// blocks (a scan-wide truncation-quality figure).
    pub max_unitarity_defect: T,
    /// Points that failed to evaluate, in row-major order.
    pub failures: Vec<PointFailure>,
}

impl<T: Real> SweepResult<T> {
    /// Index pair of the largest finite `1 − ν̃_N` entry.
    pub fn argmax_nu(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), T)> = None;
        for i in 0..self.tau_values.len() {
            for j in 0..self.t_values.len() {
                let v = self.nu_tilde_first_order[(i, j)];
                if !v.is_finite() {
                    continue;
                }
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some(((i, j), v));
                }
            }
        }
        best.map(|(idx, _)| idx)
    }

    /// True when every grid point evaluated.
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

struct PointSample<T: Real> {
    nu: T,
    logneg: T,
    defect: T,
    unitarity: T,
    error: Option<String>,
}

fn failed_point<T: Real>(message: String) -> PointSample<T> {
    let nan = T::c(f64::NAN);
    PointSample {
        nu: nan,
        logneg: nan,
        defect: nan,
        unitarity: T::zero(),
        error: Some(message),
    }
}

fn evaluate_point<T: Real, S: JunctionSource<T> + Sync + ?Sized>(
    template: &SweepTemplate<T>,
    tau: T,
    t: T,
    geometry: &CavityGeometry<T>,
    source: &S,
    n_max: usize,
) -> PointSample<T> {
    if tau + t <= T::zero() {
        // Zero total time: the gate is the identity, which creates nothing
        // and commutes with itself.
        return PointSample {
            nu: T::zero(),
            logneg: T::zero(),
            defect: T::zero(),
            unitarity: T::zero(),
            error: None,
        };
    }
    let run = || -> Result<PointSample<T>, TrajectoryError> {
        let params = SampleScenarioParams::new(
            template.pair,
            tau,
            t,
            template.h,
            template.y,
            template.epsilon,
            template.repetitions,
            1,
        )?;
        let built = build_segment_symplectic(
            &params.trajectory(),
            geometry,
            template.pair,
            source,
            n_max,
        )?;
        let defect = commutator_defect(&built.op);
        let op_n = repeat(&built.op, template.repetitions)?;
        let sigma = CovarianceMatrix::evolve_vacuum(&op_n);
        let nu = smallest_pt_symplectic_eigenvalue(&sigma)?;
        Ok(PointSample {
            nu: T::one() - nu,
            logneg: log_negativity_from_nu(nu),
            defect,
            unitarity: built.block.unitarity_defect(),
            error: None,
        })
    };
    run().unwrap_or_else(|e| failed_point(e.to_string()))
}

/// Evaluates the scenario pipeline over the full `tau_axis` × `t_axis`
/// grid, in parallel. Per-point failures do not abort the scan; they become
/// NaN entries plus [`PointFailure`] records. Identical inputs produce
/// identical results: the grid order is fixed and every point's arithmetic
/// is independent of scheduling.
pub fn run_scenario_sweep<T, S>(
    template: &SweepTemplate<T>,
    tau_axis: &AxisSpec<T>,
    t_axis: &AxisSpec<T>,
    geometry: &CavityGeometry<T>,
    source: &S,
    n_max: usize,
) -> Result<SweepResult<T>, SweepError>
where
    T: Real,
    S: JunctionSource<T> + Sync + ?Sized,
{
    let tau_values = tau_axis.values();
    let t_values = t_axis.values();
    let rows = tau_values.len();
    let cols = t_values.len();

    let samples: Vec<PointSample<T>> = (0..rows * cols)
        .into_par_iter()
        .map(|flat| {
            let i = flat / cols;
            let j = flat % cols;
            evaluate_point(template, tau_values[i], t_values[j], geometry, source, n_max)
        })
        .collect();

    let mut nu = DMatrix::zeros(rows, cols);
    let mut logneg = DMatrix::zeros(rows, cols);
    let mut defect = DMatrix::zeros(rows, cols);
    let mut max_unitarity = T::zero();
    let mut failures = Vec::new();
    for (flat, sample) in samples.into_iter().enumerate() {
        let (i, j) = (flat / cols, flat % cols);
        nu[(i, j)] = sample.nu;
        logneg[(i, j)] = sample.logneg;
        defect[(i, j)] = sample.defect;
        max_unitarity = max_unitarity.max(sample.unitarity);
        if let Some(message) = sample.error {
            failures.push(PointFailure {
                tau_index: i,
                t_index: j,
                message,
            });
        }
    }

    Ok(SweepResult {
        tau_values,
        t_values,
        nu_tilde_first_order: nu,
        log_negativity: logneg,
        commutator_defect: defect,
        max_unitarity_defect: max_unitarity,
        failures,
    })
}
