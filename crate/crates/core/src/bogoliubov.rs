//! Bogoliubov coefficients of the inertial <-> accelerated junction and the
//! composition algebra on truncated coefficient matrices.
//!
//! When the cavity switches between inertial coasting and uniform
//! acceleration, the annihilation operators of the two chart bases mix:
//!
//! ```text
//! b_k = Sum_n [ alpha_{kn} a_n + beta_{kn} a_n^dagger ]
//! ```
//!
//! with `alpha_{kn} = (psi_k, phi_n)` and `beta_{kn} = -(psi_k, phi_n*)` in
//! the Klein–Gordon inner product on the shared `t = 0` slice. The exact
//! (quadrature) route lives in [`junction_coefficients_oracle`]; the
//! first-order coefficients per unit `h` are distilled from it by Richardson
//! extrapolation in [`first_order_coefficients`].
//!
//! For the massless field the first-order particle-creation coefficient has
//! the closed magnitude
//!
//! ```text
//! |beta1_{kk'}| = sqrt(k k') (1 - (-1)^{k-k'}) / (pi^2 (k + k')^3)
//! ```
//!
//! which vanishes for even `k - k'` (including the diagonal) — see
//! [`creation_coefficient`]. This is used as a cross-check only; the
//! quadrature oracle is the ground truth.
//!
//! All matrices are truncated to `n_max` modes. Truncation is benign for
//! rows `k <= n_max / 2` thanks to the cubic decay of the coefficients; the
//! per-block unitarity defect over those trusted rows is always computed and
//! carried as metadata.

use crate::geometry::{CavityGeometry, GeometryError, ModeIndex};
use crate::modes::{
    kg_inner_product, minkowski_frequency, rindler_frequency, Conjugated, MinkowskiMode,
    ModeError, RindlerMode, Wedge,
};
use crate::quadrature::QuadSpec;
use crate::scalar::{approx_f64, cis, Real};
use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use thiserror::Error;

/// Default truncation order; the cubic decay of the coefficients makes 40
/// modes ample for two-digit mode labels.
pub const DEFAULT_N_MAX: usize = 40;

/// Row-sum unitarity tolerance enforced by the junction oracle over the
/// trusted rows (`k <= n_max / 2`). Dominated by quadrature noise.
pub const ORACLE_UNITARITY_TOLERANCE: f64 = 1e-6;

/// Blocks with a trusted-row unitarity defect above this cannot be inverted
/// meaningfully.
pub const INVERT_UNITARITY_TOLERANCE: f64 = 1e-2;

/// Richardson extraction: base step in `h`, and the per-entry bound on the
/// disagreement between the two extrapolants (a non-cancelling higher-order
/// term), measured relative to `1 + |entry|` so that the gate has an absolute
/// floor for vanishing entries yet scales with the near-diagonal growth of
/// the first-order coefficients at large mode index.
pub const EXTRACTION_BASE_H: f64 = 1e-3;
pub const EXTRACTION_STABILITY_TOLERANCE: f64 = 1e-6;

/// How a coefficient block was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Direct quadrature of mode overlaps.
    Oracle,
    /// Reconstructed from first-order coefficients at a given `h`.
    Perturbative,
    /// Product of other blocks.
    Composed,
}

/// Which chart's proper time drives a free-evolution phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    Inertial,
    Accelerated,
}

/// Failure modes of coefficient construction and algebra.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BogoliubovError {
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("truncation order must be at least 2, got {0}")]
    InvalidTruncation(usize),
    #[error("coefficient matrices must be square with equal dimensions, got {alpha_rows}x{alpha_cols} and {beta_rows}x{beta_cols}")]
    ShapeMismatch {
        alpha_rows: usize,
        alpha_cols: usize,
        beta_rows: usize,
        beta_cols: usize,
    },
    #[error("blocks have different truncation orders: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("coefficient matrices contain non-finite entries")]
    NonFinite,
    #[error("trusted-row unitarity defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    UnitarityDefect { defect: f64, tolerance: f64 },
    #[error("mode index {k} exceeds the truncation order {n_max}")]
    IndexBeyondTruncation { k: usize, n_max: usize },
    #[error("evolution duration must be non-negative and finite, got {0}")]
    InvalidDuration(f64),
    #[error(
        "first-order extraction is unstable at entry ({k}, {n}): \
         extrapolants from the two step pairs differ by {residue:.3e} \
         (tolerance {tolerance:.3e})"
    )]
    ExtractionInstability {
        k: usize,
        n: usize,
        residue: f64,
        tolerance: f64,
    },
}

/// Truncated Bogoliubov transformation: `b = alpha a + beta a^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovBlock<T: Real> {
    alpha: DMatrix<Complex<T>>,
    beta: DMatrix<Complex<T>>,
    provenance: Provenance,
    unitarity_defect: T,
}

impl<T: Real> BogoliubovBlock<T> {
    /// Wraps raw coefficient matrices, computing the trusted-row unitarity
    /// defect as metadata. Shape and finiteness are enforced; unitarity is
    /// not (free-evolution and identity blocks are exact, composed blocks
    /// inherit whatever their factors had).
    pub fn from_parts(
        alpha: DMatrix<Complex<T>>,
        beta: DMatrix<Complex<T>>,
        provenance: Provenance,
    ) -> Result<Self, BogoliubovError> {
        if alpha.nrows() != alpha.ncols()
            || beta.nrows() != beta.ncols()
            || alpha.nrows() != beta.nrows()
        {
            return Err(BogoliubovError::ShapeMismatch {
                alpha_rows: alpha.nrows(),
                alpha_cols: alpha.ncols(),
                beta_rows: beta.nrows(),
                beta_cols: beta.ncols(),
            });
        }
        if alpha.nrows() < 2 {
            return Err(BogoliubovError::InvalidTruncation(alpha.nrows()));
        }
        let finite = |m: &DMatrix<Complex<T>>| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&alpha) || !finite(&beta) {
            return Err(BogoliubovError::NonFinite);
        }
        let unitarity_defect = trusted_row_defect(&alpha, &beta);
        Ok(Self {
            alpha,
            beta,
            provenance,
            unitarity_defect,
        })
    }

    /// The identity transformation at the given truncation order.
    pub fn identity(n_max: usize) -> Result<Self, BogoliubovError> {
        if n_max < 2 {
            return Err(BogoliubovError::InvalidTruncation(n_max));
        }
        let alpha = DMatrix::from_diagonal_element(n_max, n_max, Complex::new(T::one(), T::zero()));
        let beta = DMatrix::zeros(n_max, n_max);
        Self::from_parts(alpha, beta, Provenance::Composed)
    }

    pub fn n_max(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn alpha(&self) -> &DMatrix<Complex<T>> {
        &self.alpha
    }

    pub fn beta(&self) -> &DMatrix<Complex<T>> {
        &self.beta
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Max over trusted rows (`k <= n_max/2`) of
    /// `|Sum_n (|alpha_{kn}|^2 - |beta_{kn}|^2) - 1|`.
    pub fn unitarity_defect(&self) -> T {
        self.unitarity_defect
    }

    fn check_index(&self, k: ModeIndex) -> Result<usize, BogoliubovError> {
        if k.get() > self.n_max() {
            return Err(BogoliubovError::IndexBeyondTruncation {
                k: k.get(),
                n_max: self.n_max(),
            });
        }
        Ok(k.get() - 1)
    }

    /// `alpha_{kn}` by physical (1-based) mode labels.
    pub fn alpha_entry(&self, k: ModeIndex, n: ModeIndex) -> Result<Complex<T>, BogoliubovError> {
        Ok(self.alpha[(self.check_index(k)?, self.check_index(n)?)])
    }

    /// `beta_{kn}` by physical (1-based) mode labels.
    pub fn beta_entry(&self, k: ModeIndex, n: ModeIndex) -> Result<Complex<T>, BogoliubovError> {
        Ok(self.beta[(self.check_index(k)?, self.check_index(n)?)])
    }

    /// The transformation of the same junction taken with the cavity
    /// accelerating in the opposite spatial direction: mirror symmetry flips
    /// the sign of every coefficient with odd `k + n`.
    pub fn parity_flipped(&self) -> Self {
        let n = self.n_max();
        let sign = |r: usize, c: usize| {
            if (r + c).is_multiple_of(2) {
                T::one()
            } else {
                -T::one()
            }
        };
        let alpha = DMatrix::from_fn(n, n, |r, c| self.alpha[(r, c)] * sign(r, c));
        let beta = DMatrix::from_fn(n, n, |r, c| self.beta[(r, c)] * sign(r, c));
        Self {
            alpha,
            beta,
            provenance: self.provenance,
            unitarity_defect: self.unitarity_defect,
        }
    }
}

fn trusted_row_defect<T: Real>(
    alpha: &DMatrix<Complex<T>>,
    beta: &DMatrix<Complex<T>>,
) -> T {
    let trusted = (alpha.nrows() / 2).max(1);
    let mut worst = T::zero();
    for k in 0..trusted {
        let mut sum = T::zero();
        for n in 0..alpha.ncols() {
            sum += alpha[(k, n)].norm_sqr() - beta[(k, n)].norm_sqr();
        }
        worst = worst.max((sum - T::one()).abs());
    }
    worst
}

/// First-order coefficients per unit `h`: `alpha = I + h alpha1 + O(h^2)`,
/// `beta = h beta1 + O(h^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderCoeffs<T: Real> {
    alpha1: DMatrix<Complex<T>>,
    beta1: DMatrix<Complex<T>>,
}

impl<T: Real> FirstOrderCoeffs<T> {
    pub fn from_parts(
        alpha1: DMatrix<Complex<T>>,
        beta1: DMatrix<Complex<T>>,
    ) -> Result<Self, BogoliubovError> {
        if alpha1.nrows() != alpha1.ncols()
            || beta1.nrows() != beta1.ncols()
            || alpha1.nrows() != beta1.nrows()
        {
            return Err(BogoliubovError::ShapeMismatch {
                alpha_rows: alpha1.nrows(),
                alpha_cols: alpha1.ncols(),
                beta_rows: beta1.nrows(),
                beta_cols: beta1.ncols(),
            });
        }
        Ok(Self { alpha1, beta1 })
    }

    pub fn n_max(&self) -> usize {
        self.alpha1.nrows()
    }

    pub fn alpha1(&self) -> &DMatrix<Complex<T>> {
        &self.alpha1
    }

    pub fn beta1(&self) -> &DMatrix<Complex<T>> {
        &self.beta1
    }

    /// Reconstructs the junction block `alpha = I + h alpha1`,
    /// `beta = h beta1` at a given `h` (either sign).
    pub fn block_at(&self, h: T) -> Result<BogoliubovBlock<T>, BogoliubovError> {
        let n = self.n_max();
        let hc = Complex::new(h, T::zero());
        let mut alpha = self.alpha1.map(|z| z * hc);
        for d in 0..n {
            alpha[(d, d)] += Complex::new(T::one(), T::zero());
        }
        let beta = self.beta1.map(|z| z * hc);
        BogoliubovBlock::from_parts(alpha, beta, Provenance::Perturbative)
    }
}

/// Closed-form magnitude of the first-order particle-creation coefficient
/// for the massless field:
/// `sqrt(k k') (1 - (-1)^{k-k'}) / (pi^2 (k + k')^3)`.
///
/// Zero for even `k - k'`; independent of the cavity length because both
/// `h` and the coefficient are dimensionless.
pub fn creation_coefficient<T: Real>(k: ModeIndex, k_prime: ModeIndex) -> T {
    let (k, n) = (k.get(), k_prime.get());
    if (k + n) % 2 == 0 {
        return T::zero();
    }
    let num = T::c(2.0) * T::of_usize(k * n).sqrt();
    let den = T::pi() * T::pi() * T::of_usize((k + n).pow(3));
    num / den
}

/// Exact junction coefficients by Klein–Gordon quadrature, for a burn that
/// accelerates toward positive `x`.
///
/// Entry `(k, n)` holds the overlap of accelerated mode `k` with inertial
/// mode `n`; truncation at `n_max` is reliable for labels up to `n_max / 2`.
pub fn junction_coefficients_oracle<T: Real>(
    geometry: &CavityGeometry<T>,
    n_max: usize,
    spec: &QuadSpec<T>,
) -> Result<BogoliubovBlock<T>, BogoliubovError> {
    junction_coefficients_oracle_in_wedge(geometry, n_max, Wedge::Standard, spec)
}

/// Same oracle with an explicit wedge choice. The mirrored wedge describes a
/// burn toward negative `x`; by mirror symmetry it must equal the
/// [`BogoliubovBlock::parity_flipped`] standard block, which makes this
/// entry point a direct cross-check of that shortcut.
pub fn junction_coefficients_oracle_in_wedge<T: Real>(
    geometry: &CavityGeometry<T>,
    n_max: usize,
    wedge: Wedge,
    spec: &QuadSpec<T>,
) -> Result<BogoliubovBlock<T>, BogoliubovError> {
    if n_max < 2 {
        return Err(BogoliubovError::InvalidTruncation(n_max));
    }
    let inertial: Vec<MinkowskiMode<T>> = (1..=n_max)
        .map(|n| MinkowskiMode::new(*geometry, ModeIndex::new(n).expect("n >= 1")))
        .collect();

    type ModeRows<T> = Vec<(Vec<Complex<T>>, Vec<Complex<T>>)>;
    let rows: ModeRows<T> = (1..=n_max)
        .into_par_iter()
        .map(|k| -> Result<_, BogoliubovError> {
            let psi = RindlerMode::new(
                *geometry,
                ModeIndex::new(k).expect("k >= 1"),
                wedge,
                spec,
            )?;
            let mut alpha_row = Vec::with_capacity(n_max);
            let mut beta_row = Vec::with_capacity(n_max);
            for (n, phi) in inertial.iter().enumerate() {
                let entry_spec = spec.for_oscillation(k + n + 1);
                let a = kg_inner_product(&psi, phi, &entry_spec).map_err(ModeError::from)?;
                let b = kg_inner_product(&psi, &Conjugated(phi), &entry_spec)
                    .map_err(ModeError::from)?;
                alpha_row.push(a);
                beta_row.push(-b);
            }
            Ok((alpha_row, beta_row))
        })
        .collect::<Result<_, _>>()?;

    let alpha = DMatrix::from_fn(n_max, n_max, |r, c| rows[r].0[c]);
    let beta = DMatrix::from_fn(n_max, n_max, |r, c| rows[r].1[c]);
    let block = BogoliubovBlock::from_parts(alpha, beta, Provenance::Oracle)?;
    let defect = approx_f64(block.unitarity_defect());
    if defect > ORACLE_UNITARITY_TOLERANCE {
        return Err(BogoliubovError::UnitarityDefect {
            defect,
            tolerance: ORACLE_UNITARITY_TOLERANCE,
        });
    }
    Ok(block)
}

/// First-order junction coefficients per unit `h`, extracted from the
/// quadrature oracle by Richardson extrapolation.
///
/// With `E(h) = (coefficient(h) - identity part) / h`, the extrapolant
/// `2 E(h0/2) - E(h0)` cancels the linear error term, so entries that are
/// even functions of `h` (even `k - n` separations, including diagonals)
/// collapse to `O(h0^3)`. A second extrapolant from `{h0/2, h0/4}` guards
/// against non-cancelling higher-order contamination: if the two disagree
/// beyond tolerance at any entry, that entry is reported as unstable.
///
/// The geometry argument supplies length and (zero) mass; its own `h` is
/// ignored in favour of the extraction ladder.
pub fn first_order_coefficients<T: Real>(
    geometry: &CavityGeometry<T>,
    n_max: usize,
    spec: &QuadSpec<T>,
) -> Result<FirstOrderCoeffs<T>, BogoliubovError> {
    // The division by h amplifies quadrature noise by 1/h; integrate tighter
    // than the stability tolerance demands.
    let tight = spec.with_abs_tol(spec.abs_tol.min(T::c(1e-13)));
    let h0 = T::c(EXTRACTION_BASE_H);
    let two = T::c(2.0);
    type BlockPair<T> = (DMatrix<Complex<T>>, DMatrix<Complex<T>>);
    let scaled = |h: T| -> Result<BlockPair<T>, BogoliubovError> {
        let block = junction_coefficients_oracle(&geometry.with_acceleration(h)?, n_max, &tight)?;
        let inv_h = Complex::new(h.recip(), T::zero());
        let mut alpha = block.alpha.clone();
        for d in 0..n_max {
            alpha[(d, d)] -= Complex::new(T::one(), T::zero());
        }
        Ok((alpha.map(|z| z * inv_h), block.beta.map(|z| z * inv_h)))
    };

    let (a_full, b_full) = scaled(h0)?;
    let (a_half, b_half) = scaled(h0 / two)?;
    let (a_quarter, b_quarter) = scaled(h0 / (two * two))?;

    let richardson = |coarse: &DMatrix<Complex<T>>, fine: &DMatrix<Complex<T>>| {
        DMatrix::from_fn(n_max, n_max, |r, c| {
            fine[(r, c)] * Complex::new(two, T::zero()) - coarse[(r, c)]
        })
    };
    let alpha1 = richardson(&a_full, &a_half);
    let beta1 = richardson(&b_full, &b_half);
    let alpha1_check = richardson(&a_half, &a_quarter);
    let beta1_check = richardson(&b_half, &b_quarter);

    let tolerance = T::c(EXTRACTION_STABILITY_TOLERANCE);
    for r in 0..n_max {
        for c in 0..n_max {
            let scale_a = T::one() + alpha1[(r, c)].norm_sqr().sqrt();
            let scale_b = T::one() + beta1[(r, c)].norm_sqr().sqrt();
            let residue_a = (alpha1[(r, c)] - alpha1_check[(r, c)]).norm_sqr().sqrt() / scale_a;
            let residue_b = (beta1[(r, c)] - beta1_check[(r, c)]).norm_sqr().sqrt() / scale_b;
            let residue = residue_a.max(residue_b);
            if residue > tolerance {
                return Err(BogoliubovError::ExtractionInstability {
                    k: r + 1,
                    n: c + 1,
                    residue: approx_f64(residue),
                    tolerance: EXTRACTION_STABILITY_TOLERANCE,
                });
            }
        }
    }
    FirstOrderCoeffs::from_parts(alpha1, beta1)
}

/// Block of the transformation that applies `first`, then `second`:
/// `alpha = alpha2 alpha1 + beta2 conj(beta1)`,
/// `beta = alpha2 beta1 + beta2 conj(alpha1)`.
pub fn compose<T: Real>(
    first: &BogoliubovBlock<T>,
    second: &BogoliubovBlock<T>,
) -> Result<BogoliubovBlock<T>, BogoliubovError> {
    if first.n_max() != second.n_max() {
        return Err(BogoliubovError::DimensionMismatch {
            left: first.n_max(),
            right: second.n_max(),
        });
    }
    let conj = |m: &DMatrix<Complex<T>>| m.map(|z| z.conj());
    let alpha = &second.alpha * &first.alpha + &second.beta * conj(&first.beta);
    let beta = &second.alpha * &first.beta + &second.beta * conj(&first.alpha);
    BogoliubovBlock::from_parts(alpha, beta, Provenance::Composed)
}

/// Inverse transformation: `alpha' = alpha^dagger`, `beta' = -beta^T`.
///
/// Valid only for (approximately) unitary blocks; refuses blocks whose
/// trusted-row defect exceeds [`INVERT_UNITARITY_TOLERANCE`].
pub fn invert<T: Real>(block: &BogoliubovBlock<T>) -> Result<BogoliubovBlock<T>, BogoliubovError> {
    let defect = approx_f64(block.unitarity_defect());
    if defect > INVERT_UNITARITY_TOLERANCE {
        return Err(BogoliubovError::UnitarityDefect {
            defect,
            tolerance: INVERT_UNITARITY_TOLERANCE,
        });
    }
    let alpha = block.alpha.adjoint();
    let beta = -block.beta.transpose();
    let mut inverted = BogoliubovBlock::from_parts(alpha, beta, block.provenance)?;
    // The rows of the adjoint are the columns of the original, so the
    // trusted-row metadata of the input is the honest figure to carry.
    inverted.unitarity_defect = block.unitarity_defect;
    Ok(inverted)
}

/// Free evolution for a proper-time duration in the given chart: a pure
/// phase rotation `alpha = diag(e^{-i theta_k})`, `beta = 0`, with
/// `theta_k = w_k t` (inertial) or `theta_k = W_k tau` (accelerated).
pub fn free_evolution_block<T: Real>(
    geometry: &CavityGeometry<T>,
    duration: T,
    chart: Chart,
    n_max: usize,
) -> Result<BogoliubovBlock<T>, BogoliubovError> {
    if n_max < 2 {
        return Err(BogoliubovError::InvalidTruncation(n_max));
    }
    if !(duration.is_finite() && duration >= T::zero()) {
        return Err(BogoliubovError::InvalidDuration(approx_f64(duration)));
    }
    let mut alpha = DMatrix::zeros(n_max, n_max);
    for d in 0..n_max {
        let k = ModeIndex::new(d + 1).expect("d + 1 >= 1");
        let frequency = match chart {
            Chart::Inertial => minkowski_frequency(geometry, k),
            Chart::Accelerated => rindler_frequency(geometry, k)?,
        };
        alpha[(d, d)] = cis(-frequency * duration);
    }
    let beta = DMatrix::zeros(n_max, n_max);
    BogoliubovBlock::from_parts(alpha, beta, Provenance::Composed)
}

/// Mean excitation number of mode `k` when the transformation acts on the
/// vacuum: `<N_k> = Sum_n |beta_{kn}|^2`.
pub fn mean_excitations<T: Real>(
    block: &BogoliubovBlock<T>,
    k: ModeIndex,
) -> Result<T, BogoliubovError> {
    let row = block.check_index(k)?;
    let mut total = T::zero();
    for n in 0..block.n_max() {
        total += block.beta[(row, n)].norm_sqr();
    }
    Ok(total)
}
