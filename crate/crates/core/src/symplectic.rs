//! Phase-space formalism for Gaussian states: symplectic representations of
//! mode transformations, vacuum evolution, two-mode reduction, partial
//! transposition, symplectic eigenvalues, logarithmic negativity, and the
//! two-mode squeezer fit.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * Quadratures are ordered `(x_k, p_k, x_{k'}, p_{k'}, ...)`, one pair per
//!   mode, modes in the order given by `mode_labels`. The vacuum covariance
//!   is the identity (no factor-2 or hbar rescalings).
//! * The symplectic form is the direct sum of per-mode
//!   `J = [[0, 1], [-1, 0]]`.
//! * A mode transformation with coefficient matrices `(A, B)` maps to the
//!   real matrix with 2x2 blocks
//!   `[[Re(A - B), Im(A + B)], [-Im(A - B), Re(A + B)]]_{kk'}`.
//!   Under this map, applying transformation 1 and then transformation 2
//!   corresponds to the matrix product `S2 * S1` (verified by a unit test
//!   against the coefficient-level composition).
//! * A state evolved from the vacuum by the total transformation `S` has
//!   covariance `sigma = S^T S`. Pipelines therefore compose the full
//!   transformation first and evolve the vacuum once at the end.
//! * Logarithms are natural.

use crate::bogoliubov::{BogoliubovBlock, BogoliubovError};
use crate::geometry::ModeIndex;
use crate::scalar::{approx_f64, Real};
use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use thiserror::Error;

/// Target for `‖SᵀΩS − Ω‖_max` after polishing a constructed operator.
pub const POLISHED_DEFECT_TOLERANCE: f64 = 1e-10;
/// Raw (pre-polish) defect above which a truncated transformation is
/// rejected: the discarded mode couplings are too large for the retained
/// sub-block to represent the dynamics.
pub const TRUNCATION_DEFECT_LIMIT: f64 = 1e-6;
/// Allowed asymmetry `‖σ − σᵀ‖_max`, relative to the matrix scale.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// A covariance matrix is accepted as physical when every eigenvalue of the
/// uncertainty-principle matrix is at least this floor.
pub const PHYSICALITY_FLOOR: f64 = -1e-10;
/// Symplectic eigenvalues must arrive in +/- pairs agreeing to this
/// tolerance (relative to the matrix scale).
pub const EIGENVALUE_PAIRING_TOLERANCE: f64 = 1e-8;
/// Eigenvalues of the symplectic spectrum problem must be purely imaginary;
/// a real part above this (relative) tolerance is an error.
pub const COMPLEX_RESIDUE_TOLERANCE: f64 = 1e-8;

/// Lower bound applied to literal tolerances so that reduced-precision
/// scalars (e.g. `f32`) get structurally equivalent gates instead of
/// impossible ones.
fn floor_by_epsilon<T: Real>(literal: f64) -> T {
    T::c(literal).max(T::default_epsilon() * T::c(500.0))
}

/// Failure modes of the phase-space layer.
#[derive(Debug, Error)]
pub enum SymplecticError {
    #[error(transparent)]
    Bogoliubov(#[from] BogoliubovError),
    #[error("a symplectic operator needs at least one mode")]
    EmptyModeSet,
    #[error("mode {k} appears more than once in the mode list")]
    DuplicateMode { k: usize },
    #[error("mode index {k} exceeds the transformation's truncation n_max = {n_max}")]
    IndexBeyondTruncation { k: usize, n_max: usize },
    #[error("matrix of shape {rows}x{cols} is not square with even dimension")]
    NotSquareEvenDim { rows: usize, cols: usize },
    #[error("{labels} mode labels do not match matrix dimension {dim}")]
    LabelCountMismatch { labels: usize, dim: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("truncation symplecticity defect {defect:.3e} exceeds {limit:.3e}; keep more modes or reduce the acceleration step")]
    ExcessiveTruncationDefect { defect: f64, limit: f64 },
    #[error("symplecticity defect {defect:.3e} remains above {tolerance:.3e} after polishing")]
    ResidualSymplecticDefect { defect: f64, tolerance: f64 },
    #[error("operands are defined on different mode sets")]
    ModeSetMismatch,
    #[error("operation requires exactly two modes, got {modes}")]
    NotTwoMode { modes: usize },
    #[error("matrix asymmetry {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },
    #[error("covariance violates the uncertainty relation: minimum eigenvalue {min_eigenvalue:.3e} below {floor:.3e}")]
    NotPhysical { min_eigenvalue: f64, floor: f64 },
    #[error("eigenvalue computation did not converge")]
    EigensolverFailure,
    #[error("symplectic spectrum has complex residue {residue:.3e} above {tolerance:.3e}")]
    ComplexResidue { residue: f64, tolerance: f64 },
    #[error("symplectic eigenvalues fail to pair up: gap {gap:.3e} above {tolerance:.3e}")]
    PairingFailure { gap: f64, tolerance: f64 },
    #[error("repetition count must be at least 1")]
    InvalidRepetitions,
    #[error("two-mode invariant discriminant is negative ({value:.3e}); state is outside the formula's domain")]
    NegativeDiscriminant { value: f64 },
    #[error("requested mode {k} is not among the state's mode labels")]
    UnknownMode { k: usize },
}

/// The symplectic form: block-diagonal `J = [[0, 1], [-1, 0]]`, one block
/// per mode.
pub fn symplectic_form<T: Real>(n_modes: usize) -> DMatrix<T> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = T::one();
        omega[(2 * m + 1, 2 * m)] = -T::one();
    }
    omega
}

/// 2x2 phase-rotation block: the symplectic image of a diagonal coefficient
/// `A = e^{i theta}` (so a free-evolution phase `e^{-i w t}` appears here
/// with `theta = -w t`).
fn rotation_2x2<T: Real>(theta: T) -> DMatrix<T> {
    let (s, c) = (theta.sin(), theta.cos());
    DMatrix::from_row_slice(2, 2, &[c, s, -s, c])
}

fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

fn frobenius<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
}

/// One Newton step towards the symplectic manifold:
/// `S <- S (I + 1/2 Ω E)` with `E = SᵀΩS − Ω`, which cancels `E` to first
/// order. Returns the defect after the step.
fn symplectify_once<T: Real>(s: &mut DMatrix<T>, omega: &DMatrix<T>) -> T {
    let e = s.transpose() * omega * &*s - omega;
    let half = T::c(0.5);
    let correction = DMatrix::identity(s.nrows(), s.ncols()) + omega * e * half;
    *s *= correction;
    max_abs(&(s.transpose() * omega * &*s - omega))
}

fn symplectic_defect<T: Real>(s: &DMatrix<T>, omega: &DMatrix<T>) -> T {
    max_abs(&(s.transpose() * omega * s - omega))
}

/// Real 2M x 2M symplectic matrix acting on the quadratures of M labeled
/// modes.
///
/// Every constructor polishes its matrix onto the symplectic manifold and
/// stores the pre-polish defect separately: for transformations obtained by
/// truncating an infinite mode ladder, that raw defect measures the weight
/// of the discarded couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp<T: Real> {
    matrix: DMatrix<T>,
    mode_labels: Vec<ModeIndex>,
    raw_defect: T,
}

impl<T: Real> SymplecticOp<T> {
    /// Wraps an explicit matrix, polishing away rounding-level defects.
    pub fn from_matrix(
        matrix: DMatrix<T>,
        mode_labels: Vec<ModeIndex>,
    ) -> Result<Self, SymplecticError> {
        Self::build(matrix, mode_labels)
    }

    fn build(matrix: DMatrix<T>, mode_labels: Vec<ModeIndex>) -> Result<Self, SymplecticError> {
        Self::build_with_limit(matrix, mode_labels, floor_by_epsilon::<T>(TRUNCATION_DEFECT_LIMIT))
    }

    fn build_with_limit(
        mut matrix: DMatrix<T>,
        mode_labels: Vec<ModeIndex>,
        raw_limit: T,
    ) -> Result<Self, SymplecticError> {
        if mode_labels.is_empty() {
            return Err(SymplecticError::EmptyModeSet);
        }
        for (i, k) in mode_labels.iter().enumerate() {
            if mode_labels[..i].contains(k) {
                return Err(SymplecticError::DuplicateMode { k: k.get() });
            }
        }
        let (rows, cols) = matrix.shape();
        if rows != cols || rows % 2 != 0 {
            return Err(SymplecticError::NotSquareEvenDim { rows, cols });
        }
        if rows != 2 * mode_labels.len() {
            return Err(SymplecticError::LabelCountMismatch {
                labels: mode_labels.len(),
                dim: rows,
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(SymplecticError::NonFinite);
        }

        let omega = symplectic_form::<T>(mode_labels.len());
        let raw_defect = symplectic_defect(&matrix, &omega);
        let limit = raw_limit;
        if raw_defect > limit {
            return Err(SymplecticError::ExcessiveTruncationDefect {
                defect: approx_f64(raw_defect),
                limit: approx_f64(limit),
            });
        }

        // Newton iteration converges quadratically; a handful of steps takes
        // a defect at the truncation limit down to rounding noise.
        let tolerance = floor_by_epsilon::<T>(POLISHED_DEFECT_TOLERANCE);
        let mut defect = raw_defect;
        for _ in 0..8 {
            if defect <= tolerance * T::c(1e-2) {
                break;
            }
            let next = symplectify_once(&mut matrix, &omega);
            if next >= defect {
                break;
            }
            defect = next;
        }
        if defect > tolerance {
            return Err(SymplecticError::ResidualSymplecticDefect {
                defect: approx_f64(defect),
                tolerance: approx_f64(tolerance),
            });
        }
        Ok(Self {
            matrix,
            mode_labels,
            raw_defect,
        })
    }

    /// Builds the symplectic representation of a mode transformation,
    /// restricted to the given modes (in the given order).
    ///
    /// Each 2x2 block is assembled from the complex coefficients as
    /// `[[Re(A−B), Im(A+B)], [−Im(A−B), Re(A+B)]]`. Truncating to a mode
    /// subset discards couplings to every other mode; if the resulting
    /// symplecticity defect exceeds [`TRUNCATION_DEFECT_LIMIT`] the
    /// construction fails rather than silently misrepresenting the dynamics.
    pub fn from_bogoliubov(
        block: &BogoliubovBlock<T>,
        modes: &[ModeIndex],
    ) -> Result<Self, SymplecticError> {
        let matrix = bogoliubov_matrix(block, modes)?;
        Self::build(matrix, modes.to_vec())
    }

    /// Same as [`SymplecticOp::from_bogoliubov`] but with an explicit bound
    /// on the acceptable raw truncation defect.
    ///
    /// Restricting a transformation with acceleration parameter `h` to two
    /// modes discards couplings of size `O(h)`, so the restricted matrix
    /// fails symplecticity by `O(h^2)` no matter how large the source
    /// truncation order is. Callers that know the coupling scale pass a
    /// proportionate bound here instead of the conservative default.
    pub fn from_bogoliubov_with_limit(
        block: &BogoliubovBlock<T>,
        modes: &[ModeIndex],
        raw_limit: T,
    ) -> Result<Self, SymplecticError> {
        let matrix = bogoliubov_matrix(block, modes)?;
        Self::build_with_limit(matrix, modes.to_vec(), raw_limit)
    }

    /// Identity transformation on the given modes.
    pub fn identity(mode_labels: Vec<ModeIndex>) -> Result<Self, SymplecticError> {
        let dim = 2 * mode_labels.len();
        Self::build(DMatrix::identity(dim, dim), mode_labels)
    }

    /// Direct sum of per-mode phase rotations; `angles[i]` is the rotation
    /// angle of mode `mode_labels[i]` (a free-evolution phase `e^{-i w t}`
    /// corresponds to angle `-w t`).
    pub fn mode_rotations(
        angles: &[T],
        mode_labels: Vec<ModeIndex>,
    ) -> Result<Self, SymplecticError> {
        if angles.len() != mode_labels.len() {
            return Err(SymplecticError::LabelCountMismatch {
                labels: mode_labels.len(),
                dim: 2 * angles.len(),
            });
        }
        let mut matrix = DMatrix::zeros(2 * angles.len(), 2 * angles.len());
        for (i, theta) in angles.iter().enumerate() {
            matrix
                .view_mut((2 * i, 2 * i), (2, 2))
                .copy_from(&rotation_2x2(*theta));
        }
        Self::build(matrix, mode_labels)
    }

    /// Two-mode squeezer `Z(r)`: `[[cosh r · I, sinh r · σ_z], [sinh r · σ_z,
    /// cosh r · I]]` on the pair of labeled modes.
    pub fn two_mode_squeezer(
        r: T,
        mode_labels: [ModeIndex; 2],
    ) -> Result<Self, SymplecticError> {
        let (ch, sh) = (r.cosh(), r.sinh());
        let mut matrix = DMatrix::zeros(4, 4);
        for i in 0..2 {
            matrix[(i, i)] = ch;
            matrix[(i + 2, i + 2)] = ch;
        }
        matrix[(0, 2)] = sh;
        matrix[(1, 3)] = -sh;
        matrix[(2, 0)] = sh;
        matrix[(3, 1)] = -sh;
        Self::build(matrix, mode_labels.to_vec())
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn mode_labels(&self) -> &[ModeIndex] {
        &self.mode_labels
    }

    pub fn n_modes(&self) -> usize {
        self.mode_labels.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Symplecticity defect of the matrix as constructed, before polishing.
    /// For truncated transformations this measures the discarded couplings.
    pub fn raw_truncation_defect(&self) -> T {
        self.raw_defect
    }

    /// Current `‖SᵀΩS − Ω‖_max` of the stored (polished) matrix.
    pub fn defect(&self) -> T {
        symplectic_defect(&self.matrix, &symplectic_form::<T>(self.n_modes()))
    }

    /// The transformation that applies `self` first and `later` second
    /// (matrix product `later * self`).
    pub fn then(&self, later: &Self) -> Result<Self, SymplecticError> {
        if self.mode_labels != later.mode_labels {
            return Err(SymplecticError::ModeSetMismatch);
        }
        let mut composed = Self {
            matrix: &later.matrix * &self.matrix,
            mode_labels: self.mode_labels.clone(),
            raw_defect: self.raw_defect.max(later.raw_defect),
        };
        // Products of polished operators stay symplectic to rounding; one
        // cheap polish pass keeps long chains from accumulating drift.
        let omega = symplectic_form::<T>(composed.n_modes());
        symplectify_once(&mut composed.matrix, &omega);
        Ok(composed)
    }

    /// `n`-fold repetition of the transformation (matrix power).
    pub fn pow(&self, n: usize) -> Self {
        let dim = self.dim();
        let mut result = DMatrix::identity(dim, dim);
        let mut base = self.matrix.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        Self {
            matrix: result,
            mode_labels: self.mode_labels.clone(),
            raw_defect: self.raw_defect,
        }
    }
}

/// Real symmetric covariance matrix of a Gaussian state over labeled modes
/// (first moments are identically zero throughout this crate; the vacuum is
/// the identity).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<T: Real> {
    matrix: DMatrix<T>,
    mode_labels: Vec<ModeIndex>,
}

impl<T: Real> CovarianceMatrix<T> {
    /// Vacuum state: identity covariance.
    pub fn vacuum(mode_labels: Vec<ModeIndex>) -> Result<Self, SymplecticError> {
        let dim = 2 * mode_labels.len();
        if mode_labels.is_empty() {
            return Err(SymplecticError::EmptyModeSet);
        }
        Ok(Self {
            matrix: DMatrix::identity(dim, dim),
            mode_labels,
        })
    }

    /// Validates and wraps an explicit covariance matrix: symmetry within
    /// [`SYMMETRY_TOLERANCE`] (relative to scale) and the uncertainty
    /// relation — all eigenvalues of the associated Hermitian
    /// uncertainty-principle matrix at least [`PHYSICALITY_FLOOR`].
    pub fn from_matrix(
        matrix: DMatrix<T>,
        mode_labels: Vec<ModeIndex>,
    ) -> Result<Self, SymplecticError> {
        if mode_labels.is_empty() {
            return Err(SymplecticError::EmptyModeSet);
        }
        let (rows, cols) = matrix.shape();
        if rows != cols || rows != 2 * mode_labels.len() {
            return Err(SymplecticError::LabelCountMismatch {
                labels: mode_labels.len(),
                dim: rows,
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(SymplecticError::NonFinite);
        }
        let scale = T::one().max(max_abs(&matrix));
        let asymmetry = max_abs(&(&matrix - matrix.transpose()));
        let tolerance = floor_by_epsilon::<T>(SYMMETRY_TOLERANCE) * scale;
        if asymmetry > tolerance {
            return Err(SymplecticError::NotSymmetric {
                asymmetry: approx_f64(asymmetry),
                tolerance: approx_f64(tolerance),
            });
        }
        let symmetrized = (&matrix + matrix.transpose()) * T::c(0.5);

        // The uncertainty relation bounds the spectrum of the Hermitian
        // matrix sigma + i*Omega. Embed it as the real symmetric matrix
        // [[sigma, -Omega], [Omega, sigma]] (same spectrum, doubled).
        let n = rows;
        let omega = symplectic_form::<T>(mode_labels.len());
        let mut embedded = DMatrix::zeros(2 * n, 2 * n);
        embedded.view_mut((0, 0), (n, n)).copy_from(&symmetrized);
        embedded.view_mut((n, n), (n, n)).copy_from(&symmetrized);
        embedded.view_mut((0, n), (n, n)).copy_from(&(-&omega));
        embedded.view_mut((n, 0), (n, n)).copy_from(&omega);
        let eigenvalues = embedded.symmetric_eigenvalues();
        let min_eigenvalue = eigenvalues.iter().fold(T::c(f64::MAX), |a, v| a.min(*v));
        let floor = -floor_by_epsilon::<T>(-PHYSICALITY_FLOOR) * scale;
        if min_eigenvalue < floor {
            return Err(SymplecticError::NotPhysical {
                min_eigenvalue: approx_f64(min_eigenvalue),
                floor: approx_f64(floor),
            });
        }
        Ok(Self {
            matrix: symmetrized,
            mode_labels,
        })
    }

    /// Covariance of the vacuum evolved by `op`: `sigma = SᵀS`.
    pub fn evolve_vacuum(op: &SymplecticOp<T>) -> Self {
        let product = op.matrix().transpose() * op.matrix();
        Self {
            matrix: symmetrize(product),
            mode_labels: op.mode_labels().to_vec(),
        }
    }

    /// Similarity update of this state by a further transformation:
    /// `sigma -> Sᵀ sigma S`.
    pub fn evolve(&self, op: &SymplecticOp<T>) -> Result<Self, SymplecticError> {
        if self.mode_labels != op.mode_labels() {
            return Err(SymplecticError::ModeSetMismatch);
        }
        let product = op.matrix().transpose() * &self.matrix * op.matrix();
        Ok(Self {
            matrix: symmetrize(product),
            mode_labels: self.mode_labels.clone(),
        })
    }

    /// Marginal state of a subset of modes: delete the rows and columns of
    /// every other mode (exact for Gaussian states).
    pub fn marginal(&self, keep: &[ModeIndex]) -> Result<Self, SymplecticError> {
        let mut positions = Vec::with_capacity(keep.len());
        for k in keep {
            let pos = self
                .mode_labels
                .iter()
                .position(|l| l == k)
                .ok_or(SymplecticError::UnknownMode { k: k.get() })?;
            positions.push(pos);
        }
        let dim = 2 * keep.len();
        let mut matrix = DMatrix::zeros(dim, dim);
        for (i, &pi) in positions.iter().enumerate() {
            for (j, &pj) in positions.iter().enumerate() {
                matrix
                    .view_mut((2 * i, 2 * j), (2, 2))
                    .copy_from(&self.matrix.view((2 * pi, 2 * pj), (2, 2)).clone_owned());
            }
        }
        Ok(Self {
            matrix,
            mode_labels: keep.to_vec(),
        })
    }

    /// Reduced two-mode state after `n` repetitions of a two-mode
    /// transformation: `sigma_n = (S^n)ᵀ (S^n)`.
    pub fn reduce_two_mode(
        op: &SymplecticOp<T>,
        n: usize,
    ) -> Result<Self, SymplecticError> {
        if op.n_modes() != 2 {
            return Err(SymplecticError::NotTwoMode {
                modes: op.n_modes(),
            });
        }
        if n == 0 {
            return Err(SymplecticError::InvalidRepetitions);
        }
        Ok(Self::evolve_vacuum(&op.pow(n)))
    }

    /// Partial transposition of a two-mode state: `P sigma P` with
    /// `P = diag(1, 1, 1, -1)` (momentum flip of the second mode). The
    /// result is a valid covariance only for separable states, so it is
    /// returned as a plain matrix.
    pub fn partial_transpose(&self) -> Result<DMatrix<T>, SymplecticError> {
        if self.mode_labels.len() != 2 {
            return Err(SymplecticError::NotTwoMode {
                modes: self.mode_labels.len(),
            });
        }
        Ok(partial_transpose_two_mode(&self.matrix))
    }

    /// Symplectic spectrum of this state, ascending.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<T>, SymplecticError> {
        symplectic_eigenvalues(&self.matrix)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn mode_labels(&self) -> &[ModeIndex] {
        &self.mode_labels
    }

    pub fn det(&self) -> T {
        self.matrix.clone().determinant()
    }
}

fn symmetrize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let t = m.transpose();
    (m + t) * T::c(0.5)
}

/// Raw quadrature matrix of a transformation restricted to `modes`, without
/// any symplecticity gate or polish.
fn bogoliubov_matrix<T: Real>(
    block: &BogoliubovBlock<T>,
    modes: &[ModeIndex],
) -> Result<DMatrix<T>, SymplecticError> {
    if modes.is_empty() {
        return Err(SymplecticError::EmptyModeSet);
    }
    for k in modes {
        if k.get() > block.n_max() {
            return Err(SymplecticError::IndexBeyondTruncation {
                k: k.get(),
                n_max: block.n_max(),
            });
        }
    }
    let m = modes.len();
    let mut matrix = DMatrix::zeros(2 * m, 2 * m);
    for (i, k) in modes.iter().enumerate() {
        for (j, n) in modes.iter().enumerate() {
            let a = block.alpha()[(k.get() - 1, n.get() - 1)];
            let b = block.beta()[(k.get() - 1, n.get() - 1)];
            let (diff, sum) = (a - b, a + b);
            matrix[(2 * i, 2 * j)] = diff.re;
            matrix[(2 * i, 2 * j + 1)] = sum.im;
            matrix[(2 * i + 1, 2 * j)] = -diff.im;
            matrix[(2 * i + 1, 2 * j + 1)] = sum.re;
        }
    }
    Ok(matrix)
}

/// Cross-validation route for two-mode reduction: evolve the vacuum on the
/// whole retained mode ladder and take the exact Gaussian marginal of the
/// pair.
///
/// The full-ladder quadrature matrix is used raw, without the symplecticity
/// gate applied by [`SymplecticOp::from_bogoliubov`]: the highest retained
/// rows always carry truncation weight comparable to their coupling
/// strength (couplings between neighboring high modes grow with the index),
/// but those rows perturb the low-mode marginal only at second order, so
/// the marginal itself is accurate and is validated as a covariance matrix
/// on return.
pub fn two_mode_marginal_from_block<T: Real>(
    block: &BogoliubovBlock<T>,
    pair: [ModeIndex; 2],
) -> Result<CovarianceMatrix<T>, SymplecticError> {
    let all: Vec<ModeIndex> = (1..=block.n_max())
        .map(|k| ModeIndex::new(k).expect("k >= 1"))
        .collect();
    let s = bogoliubov_matrix(block, &all)?;
    let sigma_full = symmetrize(s.transpose() * &s);
    let full = CovarianceMatrix {
        matrix: sigma_full,
        mode_labels: all,
    };
    let marginal = full.marginal(&pair)?;
    CovarianceMatrix::from_matrix(marginal.matrix.clone(), marginal.mode_labels)
}

/// `P sigma P` with `P = diag(1, 1, 1, -1)` on a raw 4x4 matrix: flips the
/// sign of every entry with exactly one index in the second mode's momentum
/// row/column. Involutive.
pub fn partial_transpose_two_mode<T: Real>(matrix: &DMatrix<T>) -> DMatrix<T> {
    let mut out = matrix.clone();
    for i in 0..4 {
        if i != 3 {
            out[(i, 3)] = -out[(i, 3)];
            out[(3, i)] = -out[(3, i)];
        }
    }
    out
}

/// Moduli of the symplectic spectrum of a real symmetric matrix: the
/// eigenvalues of `iΩσ` come in `±ν` pairs for physical (and partially
/// transposed) states; returns the `M` pair moduli in ascending order.
///
/// Fails if the eigensolver does not converge, if eigenvalues carry a real
/// residue above [`COMPLEX_RESIDUE_TOLERANCE`] (the spectrum of `Ωσ` must be
/// purely imaginary for symmetric `σ`), or if the moduli fail to pair within
/// [`EIGENVALUE_PAIRING_TOLERANCE`].
pub fn symplectic_eigenvalues<T: Real>(matrix: &DMatrix<T>) -> Result<Vec<T>, SymplecticError> {
    let (rows, cols) = matrix.shape();
    if rows != cols || rows % 2 != 0 {
        return Err(SymplecticError::NotSquareEvenDim { rows, cols });
    }
    let n_modes = rows / 2;
    let scale = T::one().max(max_abs(matrix));
    let product = symplectic_form::<T>(n_modes) * matrix;
    let schur = Schur::try_new(product, T::default_epsilon(), 100_000)
        .ok_or(SymplecticError::EigensolverFailure)?;
    let eigenvalues = schur.complex_eigenvalues();

    let residue_tolerance = floor_by_epsilon::<T>(COMPLEX_RESIDUE_TOLERANCE) * scale;
    let mut moduli = Vec::with_capacity(rows);
    for lambda in eigenvalues.iter() {
        if lambda.re.abs() > residue_tolerance {
            return Err(SymplecticError::ComplexResidue {
                residue: approx_f64(lambda.re.abs()),
                tolerance: approx_f64(residue_tolerance),
            });
        }
        moduli.push(lambda.im.abs());
    }
    moduli.sort_by(|a, b| a.partial_cmp(b).expect("finite moduli"));

    let pairing_tolerance = floor_by_epsilon::<T>(EIGENVALUE_PAIRING_TOLERANCE) * scale;
    let mut result = Vec::with_capacity(n_modes);
    for pair in moduli.chunks_exact(2) {
        let gap = (pair[1] - pair[0]).abs();
        if gap > pairing_tolerance {
            return Err(SymplecticError::PairingFailure {
                gap: approx_f64(gap),
                tolerance: approx_f64(pairing_tolerance),
            });
        }
        result.push((pair[0] + pair[1]) * T::c(0.5));
    }
    Ok(result)
}

/// Closed-form symplectic spectrum of a 4x4 symmetric matrix with 2x2 blocks
/// `[[A, C], [Cᵀ, B]]`: with `Δ = det A + det B + 2 det C`, the two moduli
/// are `sqrt((Δ ∓ sqrt(Δ² − 4 det σ)) / 2)`, returned ascending. Used as an
/// independent cross-check of the general eigensolver route.
pub fn two_mode_invariant_eigenvalues<T: Real>(
    matrix: &DMatrix<T>,
) -> Result<(T, T), SymplecticError> {
    let (rows, cols) = matrix.shape();
    if rows != 4 || cols != 4 {
        return Err(SymplecticError::NotSquareEvenDim { rows, cols });
    }
    let det2 = |r0: usize, c0: usize| {
        matrix[(r0, c0)] * matrix[(r0 + 1, c0 + 1)] - matrix[(r0, c0 + 1)] * matrix[(r0 + 1, c0)]
    };
    let delta = det2(0, 0) + det2(2, 2) + T::c(2.0) * det2(0, 2);
    let det_sigma = matrix.clone().determinant();
    let scale = T::one().max(max_abs(matrix));
    let discriminant = delta * delta - T::c(4.0) * det_sigma;
    let tolerance = floor_by_epsilon::<T>(1e-10) * scale * scale * scale * scale;
    if discriminant < -tolerance {
        return Err(SymplecticError::NegativeDiscriminant {
            value: approx_f64(discriminant),
        });
    }
    let root = discriminant.max(T::zero()).sqrt();
    let low = ((delta - root) * T::c(0.5)).max(T::zero()).sqrt();
    let high = ((delta + root) * T::c(0.5)).max(T::zero()).sqrt();
    Ok((low, high))
}

/// `E = max(0, −ln ν)` for a symplectic eigenvalue `ν > 0` of the partially
/// transposed state; natural logarithm.
pub fn log_negativity_from_nu<T: Real>(nu: T) -> T {
    if nu >= T::one() {
        T::zero()
    } else {
        -nu.ln()
    }
}

/// Smallest symplectic eigenvalue of the partially transposed two-mode
/// state — the quantity whose drop below 1 certifies entanglement.
pub fn smallest_pt_symplectic_eigenvalue<T: Real>(
    sigma: &CovarianceMatrix<T>,
) -> Result<T, SymplecticError> {
    let pt = sigma.partial_transpose()?;
    let eigenvalues = symplectic_eigenvalues(&pt)?;
    Ok(eigenvalues[0])
}

/// Logarithmic negativity of a two-mode state: `max(0, −ln ν̃)` with `ν̃`
/// the smallest symplectic eigenvalue of the partial transpose.
pub fn log_negativity<T: Real>(sigma: &CovarianceMatrix<T>) -> Result<T, SymplecticError> {
    Ok(log_negativity_from_nu(smallest_pt_symplectic_eigenvalue(
        sigma,
    )?))
}

/// Result of fitting a two-mode transformation to the squeezer-times-
/// rotations normal form `Z(r) · (R(ψ_k) ⊕ R(ψ_k'))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezerFit<T: Real> {
    /// Squeezing parameter of the fitted `Z(r)`.
    pub r: T,
    /// Rotation angle of the first mode.
    pub angle_k: T,
    /// Rotation angle of the second mode.
    pub angle_k_prime: T,
    /// Frobenius distance between the vacuum evolved by the input and the
    /// vacuum evolved by the fitted normal form. The operator itself retains
    /// a passive linear-in-`h` component that cancels in the state, so the
    /// state-level distance is the meaningful figure of merit; it grows
    /// quadratically once the transformation leaves the weak regime.
    pub residual: T,
}

/// Fits a two-mode symplectic operator to `Z(r) · (R(ψ_k) ⊕ R(ψ_k'))`.
///
/// The angles are the least-squares rotation fits of the two diagonal 2x2
/// blocks. `sinh r` is the least-squares coefficient of the off-diagonal
/// blocks against the squeezer reference `sigma_z R(psi)`; any passive
/// beam-splitter admixture in those blocks lies in the rotation family,
/// which is Frobenius-orthogonal to that reference at every angle pair, so
/// it cannot contaminate the coefficient. Exact normal forms are recovered
/// exactly; see [`SqueezerFit::residual`] for the quality measure.
pub fn squeezer_decompose<T: Real>(
    op: &SymplecticOp<T>,
) -> Result<SqueezerFit<T>, SymplecticError> {
    if op.n_modes() != 2 {
        return Err(SymplecticError::NotTwoMode {
            modes: op.n_modes(),
        });
    }
    let s = op.matrix();
    let block = |r0: usize, c0: usize| s.view((r0, c0), (2, 2)).clone_owned();
    let d1 = block(0, 0);
    let d2 = block(2, 2);
    let o12 = block(0, 2);
    let o21 = block(2, 0);

    // Least-squares rotation angle of a 2x2 block: polar angle of the
    // rotation-aligned components.
    let fit_angle =
        |b: &DMatrix<T>| T::atan2(b[(0, 1)] - b[(1, 0)], b[(0, 0)] + b[(1, 1)]);
    let angle_k = fit_angle(&d1);
    let angle_k_prime = fit_angle(&d2);

    // Model off-blocks: sinh(r) sigma_z R(psi). The reference has squared
    // Frobenius norm 2, so half the element-wise overlap is the least-squares
    // coefficient; averaging the two off-blocks' coefficients gives a signed
    // sinh estimate that a passive admixture leaves untouched.
    let aligned = |o: &DMatrix<T>, psi: T| {
        let reference = DMatrix::from_row_slice(
            2,
            2,
            &[psi.cos(), psi.sin(), psi.sin(), -psi.cos()],
        );
        (o.component_mul(&reference)).sum() * T::c(0.5)
    };
    let sinh_r = (aligned(&o12, angle_k_prime) + aligned(&o21, angle_k)) * T::c(0.5);
    let r = sinh_r.asinh();

    let labels = [op.mode_labels()[0], op.mode_labels()[1]];
    let rotations = SymplecticOp::mode_rotations(&[angle_k, angle_k_prime], labels.to_vec())?;
    let squeezer = SymplecticOp::two_mode_squeezer(r, labels)?;
    let model = squeezer.matrix() * rotations.matrix();
    let sigma = op.matrix().transpose() * op.matrix();
    let sigma_model = model.transpose() * &model;
    let residual = frobenius(&(sigma - sigma_model));

    Ok(SqueezerFit {
        r,
        angle_k,
        angle_k_prime,
        residual,
    })
}

/// Entanglement summary of a reduced two-mode state produced by a
/// trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport<T: Real> {
    /// Smallest symplectic eigenvalue of the partially transposed state.
    pub nu_tilde: T,
    /// First-order entanglement measure `1 − ν̃` (the leading-order value of
    /// every negativity-family monotone).
    pub nu_tilde_first_order: T,
    /// `max(0, −ln ν̃)`, natural logarithm.
    pub log_negativity: T,
    /// Squeezing parameter of the fitted two-mode squeezer gate.
    pub squeezing_r: T,
    /// Fitted rotation angle of the first mode.
    pub angle_k: T,
    /// Fitted rotation angle of the second mode.
    pub angle_k_prime: T,
    /// State-level residual of the squeezer fit.
    pub squeezer_residual: T,
    /// Mean excitation number of the first mode.
    pub mean_excitations_k: T,
    /// Mean excitation number of the second mode.
    pub mean_excitations_k_prime: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::{
        compose, free_evolution_block, junction_coefficients_oracle, BogoliubovBlock, Chart,
        Provenance,
    };
    use crate::geometry::CavityGeometry;
    use crate::quadrature::QuadSpec;
    use approx::assert_relative_eq;
    use nalgebra::Complex;
    use std::sync::OnceLock;

    fn mode(k: usize) -> ModeIndex {
        ModeIndex::new(k).unwrap()
    }

    fn modes(ks: &[usize]) -> Vec<ModeIndex> {
        ks.iter().map(|&k| mode(k)).collect()
    }

    /// Shared small oracle block (L=1, h=1e-3, n_max=12) for the tests that
    /// need genuine dynamics.
    fn oracle_block() -> &'static BogoliubovBlock<f64> {
        static BLOCK: OnceLock<BogoliubovBlock<f64>> = OnceLock::new();
        BLOCK.get_or_init(|| {
            let geometry = CavityGeometry::from_length_acceleration(1.0, 1e-3, 0.0).unwrap();
            junction_coefficients_oracle(&geometry, 12, &QuadSpec::default()).unwrap()
        })
    }

    /// A hand-built two-mode squeezing block: alpha = cosh(r) I,
    /// beta = sinh(r) (off-diagonal pair). Exactly unitary row sums.
    fn squeeze_block(r: f64) -> BogoliubovBlock<f64> {
        let alpha = DMatrix::from_diagonal_element(2, 2, Complex::new(r.cosh(), 0.0));
        let mut beta = DMatrix::zeros(2, 2);
        beta[(0, 1)] = Complex::new(r.sinh(), 0.0);
        beta[(1, 0)] = Complex::new(r.sinh(), 0.0);
        BogoliubovBlock::from_parts(alpha, beta, Provenance::Composed).unwrap()
    }

    #[test]
    fn symplectic_form_squares_to_minus_identity() {
        let omega = symplectic_form::<f64>(3);
        let square = &omega * &omega;
        assert_relative_eq!(square, -DMatrix::<f64>::identity(6, 6), epsilon = 0.0);
        assert_eq!(omega[(0, 1)], 1.0);
        assert_eq!(omega[(1, 0)], -1.0);
        assert_eq!(omega[(2, 3)], 1.0);
    }

    #[test]
    fn identity_block_maps_to_identity_matrix() {
        let block = BogoliubovBlock::<f64>::identity(4).unwrap();
        let op = SymplecticOp::from_bogoliubov(&block, &modes(&[1, 2, 3, 4])).unwrap();
        assert_relative_eq!(
            op.matrix().clone(),
            DMatrix::<f64>::identity(8, 8),
            epsilon = 1e-15
        );
        assert_eq!(op.raw_truncation_defect(), 0.0);
    }

    #[test]
    fn pure_phase_block_maps_to_rotation() {
        let theta: f64 = 0.37;
        let mut alpha = DMatrix::zeros(2, 2);
        alpha[(0, 0)] = Complex::new(theta.cos(), -theta.sin()); // e^{-i theta}
        alpha[(1, 1)] = Complex::new(1.0, 0.0);
        let block =
            BogoliubovBlock::from_parts(alpha, DMatrix::zeros(2, 2), Provenance::Composed).unwrap();
        let op = SymplecticOp::from_bogoliubov(&block, &modes(&[1, 2])).unwrap();
        // Block of e^{-i theta}: [[cos, -sin], [sin, cos]].
        let b = op.matrix().view((0, 0), (2, 2)).clone_owned();
        assert_relative_eq!(b[(0, 0)], theta.cos(), epsilon = 1e-15);
        assert_relative_eq!(b[(0, 1)], -theta.sin(), epsilon = 1e-15);
        assert_relative_eq!(b[(1, 0)], theta.sin(), epsilon = 1e-15);
        assert_relative_eq!(b[(1, 1)], theta.cos(), epsilon = 1e-15);
    }

    #[test]
    fn composition_order_matches_coefficient_composition() {
        // Apply a free evolution first, then a squeeze: the symplectic image
        // of the composite must equal S(second) * S(first), and must differ
        // from the reversed product (the operations do not commute).
        let geometry = CavityGeometry::from_length_acceleration(1.0, 0.0, 0.0).unwrap();
        let first = free_evolution_block(&geometry, 0.31, Chart::Inertial, 2).unwrap();
        let second = squeeze_block(0.2);
        let composite = compose(&first, &second).unwrap();

        let labels = modes(&[1, 2]);
        let s1 = SymplecticOp::from_bogoliubov(&first, &labels).unwrap();
        let s2 = SymplecticOp::from_bogoliubov(&second, &labels).unwrap();
        let s12 = SymplecticOp::from_bogoliubov(&composite, &labels).unwrap();

        let forward = s2.matrix() * s1.matrix();
        let reversed = s1.matrix() * s2.matrix();
        assert!(max_abs(&(s12.matrix() - &forward)) < 1e-12);
        assert!(max_abs(&(s12.matrix() - &reversed)) > 1e-3);

        // `then` implements exactly this order.
        let chained = s1.then(&s2).unwrap();
        assert!(max_abs(&(chained.matrix() - &forward)) < 1e-12);
    }

    #[test]
    fn two_mode_squeezer_has_cosh_sinh_layout() {
        let r: f64 = 0.3;
        let z = SymplecticOp::two_mode_squeezer(r, [mode(1), mode(2)]).unwrap();
        let m = z.matrix();
        assert_relative_eq!(m[(0, 0)], r.cosh(), epsilon = 1e-15);
        assert_relative_eq!(m[(3, 3)], r.cosh(), epsilon = 1e-15);
        assert_relative_eq!(m[(0, 2)], r.sinh(), epsilon = 1e-15);
        assert_relative_eq!(m[(1, 3)], -r.sinh(), epsilon = 1e-15);
        assert_relative_eq!(m[(2, 0)], r.sinh(), epsilon = 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        assert!(z.defect() < 1e-14);

        // The coefficient-level squeeze block maps onto the same family:
        // beta with +sinh(r) gives Z(-r) in this sign convention.
        let op = SymplecticOp::from_bogoliubov(&squeeze_block(r), &modes(&[1, 2])).unwrap();
        let z_neg = SymplecticOp::two_mode_squeezer(-r, [mode(1), mode(2)]).unwrap();
        assert!(max_abs(&(op.matrix() - z_neg.matrix())) < 1e-14);
    }

    #[test]
    fn oracle_sub_block_defect_small_and_polished() {
        let op = SymplecticOp::from_bogoliubov(oracle_block(), &modes(&[1, 2])).unwrap();
        // Truncation to two modes of a genuine transformation leaves a
        // quadratically small raw defect at h = 1e-3.
        assert!(op.raw_truncation_defect() < 1e-5);
        assert!(op.raw_truncation_defect() > 1e-13);
        assert!(op.defect() <= 1e-10);
    }

    #[test]
    fn row_normalized_but_nonunitary_block_is_rejected() {
        // Rows have exact unit norm (so the coefficient-level gate passes)
        // but the columns are skewed: symplectification must refuse.
        let delta = 1e-2_f64;
        let norm = (1.0 + delta * delta).sqrt();
        let mut alpha = DMatrix::zeros(2, 2);
        alpha[(0, 0)] = Complex::new(1.0 / norm, 0.0);
        alpha[(0, 1)] = Complex::new(delta / norm, 0.0);
        alpha[(1, 1)] = Complex::new(1.0, 0.0);
        let block =
            BogoliubovBlock::from_parts(alpha, DMatrix::zeros(2, 2), Provenance::Composed).unwrap();
        match SymplecticOp::from_bogoliubov(&block, &modes(&[1, 2])) {
            Err(SymplecticError::ExcessiveTruncationDefect { defect, .. }) => {
                assert!(defect > 1e-6);
            }
            other => panic!("expected truncation defect rejection, got {other:?}"),
        }
    }

    #[test]
    fn mode_subset_and_bounds_checks() {
        let op = SymplecticOp::from_bogoliubov(oracle_block(), &modes(&[1, 3])).unwrap();
        assert_eq!(op.n_modes(), 2);
        assert_eq!(op.mode_labels()[1].get(), 3);
        match SymplecticOp::from_bogoliubov(oracle_block(), &modes(&[1, 50])) {
            Err(SymplecticError::IndexBeyondTruncation { k: 50, n_max: 12 }) => {}
            other => panic!("expected out-of-range mode error, got {other:?}"),
        }
    }

    #[test]
    fn vacuum_evolution_examples() {
        let id = SymplecticOp::<f64>::identity(modes(&[1, 2])).unwrap();
        let sigma = CovarianceMatrix::evolve_vacuum(&id);
        assert_relative_eq!(sigma.matrix().clone(), DMatrix::identity(4, 4), epsilon = 0.0);

        let rot = SymplecticOp::mode_rotations(&[0.4, -1.1], modes(&[1, 2])).unwrap();
        let sigma = CovarianceMatrix::evolve_vacuum(&rot);
        assert_relative_eq!(
            sigma.matrix().clone(),
            DMatrix::identity(4, 4),
            epsilon = 1e-15
        );

        let z = SymplecticOp::two_mode_squeezer(0.25_f64, [mode(1), mode(2)]).unwrap();
        let sigma = CovarianceMatrix::evolve_vacuum(&z);
        assert_relative_eq!(sigma.matrix()[(0, 0)], 0.5_f64.cosh(), epsilon = 1e-14);
        assert_relative_eq!(sigma.matrix()[(0, 2)], 0.5_f64.sinh(), epsilon = 1e-14);
        let nus = sigma.symplectic_eigenvalues().unwrap();
        assert_relative_eq!(nus[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(nus[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(sigma.det(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reduction_routes_agree_to_truncation_order() {
        // Route 1: evolve the vacuum on all retained modes, then take the
        // exact marginal of modes {1,2}. Route 2: truncate the
        // transformation to modes {1,2} first. The routes differ only by the
        // truncated couplings, which are O(h^2) in weight.
        let block = oracle_block();
        let marginal = two_mode_marginal_from_block(block, [mode(1), mode(2)]).unwrap();

        let sub = SymplecticOp::from_bogoliubov(block, &modes(&[1, 2])).unwrap();
        let reduced = CovarianceMatrix::reduce_two_mode(&sub, 1).unwrap();

        let difference = max_abs(&(marginal.matrix() - reduced.matrix()));
        assert!(
            difference < 1e-6,
            "reduction routes diverged: {difference:.3e}"
        );
        assert!(difference > 0.0);
    }

    #[test]
    fn repeated_reduction_is_matrix_power() {
        let z = SymplecticOp::two_mode_squeezer(0.05_f64, [mode(1), mode(2)]).unwrap();
        let twice = CovarianceMatrix::reduce_two_mode(&z, 2).unwrap();
        let squared = z.matrix() * z.matrix();
        let direct = squared.transpose() * &squared;
        assert!(max_abs(&(twice.matrix() - &direct)) < 1e-14);

        let identity_once = CovarianceMatrix::reduce_two_mode(
            &SymplecticOp::<f64>::identity(modes(&[1, 2])).unwrap(),
            1,
        )
        .unwrap();
        assert_relative_eq!(
            identity_once.matrix().clone(),
            DMatrix::identity(4, 4),
            epsilon = 0.0
        );
        assert!(matches!(
            CovarianceMatrix::reduce_two_mode(&z, 0),
            Err(SymplecticError::InvalidRepetitions)
        ));
    }

    #[test]
    fn partial_transpose_is_involutive_and_flips_momentum_row() {
        let sigma = CovarianceMatrix::<f64>::vacuum(modes(&[1, 2])).unwrap();
        let pt = sigma.partial_transpose().unwrap();
        assert_relative_eq!(pt, DMatrix::identity(4, 4), epsilon = 0.0);

        let z = SymplecticOp::two_mode_squeezer(0.2_f64, [mode(1), mode(2)]).unwrap();
        let squeezed = CovarianceMatrix::evolve_vacuum(&z);
        let pt = squeezed.partial_transpose().unwrap();
        let back = partial_transpose_two_mode(&pt);
        assert_relative_eq!(back, squeezed.matrix().clone(), epsilon = 0.0);
        // Off-diagonal block sinh(2r) sigma_z becomes sinh(2r) I.
        assert_relative_eq!(pt[(0, 2)], 0.4_f64.sinh(), epsilon = 1e-14);
        assert_relative_eq!(pt[(1, 3)], 0.4_f64.sinh(), epsilon = 1e-14);
    }

    #[test]
    fn pt_spectrum_of_squeezed_state_is_exponential() {
        let r: f64 = 0.17;
        let z = SymplecticOp::two_mode_squeezer(r, [mode(1), mode(2)]).unwrap();
        let sigma = CovarianceMatrix::evolve_vacuum(&z);
        let pt = sigma.partial_transpose().unwrap();
        let nus = symplectic_eigenvalues(&pt).unwrap();
        assert_relative_eq!(nus[0], (-2.0 * r).exp(), epsilon = 1e-12);
        assert_relative_eq!(nus[1], (2.0 * r).exp(), epsilon = 1e-12);

        // Scaling the matrix scales the spectrum linearly.
        let scaled = pt.map(|v| 2.5 * v);
        let nus_scaled = symplectic_eigenvalues(&scaled).unwrap();
        assert_relative_eq!(nus_scaled[0], 2.5 * nus[0], epsilon = 1e-12);
        assert_relative_eq!(nus_scaled[1], 2.5 * nus[1], epsilon = 1e-11);
    }

    #[test]
    fn invariant_formula_cross_checks_eigensolver() {
        // A generic pure two-mode Gaussian state: rotations around a squeeze.
        let labels = modes(&[1, 2]);
        let pre = SymplecticOp::mode_rotations(&[0.7, -0.2], labels.clone()).unwrap();
        let z = SymplecticOp::two_mode_squeezer(0.13_f64, [mode(1), mode(2)]).unwrap();
        let post = SymplecticOp::mode_rotations(&[-1.3, 0.5], labels.clone()).unwrap();
        let total = pre.then(&z).unwrap().then(&post).unwrap();
        let sigma = CovarianceMatrix::evolve_vacuum(&total);

        let general = sigma.symplectic_eigenvalues().unwrap();
        let (low, high) = two_mode_invariant_eigenvalues(sigma.matrix()).unwrap();
        assert_relative_eq!(general[0], low, epsilon = 1e-10);
        assert_relative_eq!(general[1], high, epsilon = 1e-10);

        // Same cross-check on the partially transposed state.
        let pt = sigma.partial_transpose().unwrap();
        let general_pt = symplectic_eigenvalues(&pt).unwrap();
        let (low_pt, high_pt) = two_mode_invariant_eigenvalues(&pt).unwrap();
        assert_relative_eq!(general_pt[0], low_pt, epsilon = 1e-10);
        assert_relative_eq!(general_pt[1], high_pt, epsilon = 1e-10);
    }

    #[test]
    fn log_negativity_examples() {
        let vacuum = CovarianceMatrix::<f64>::vacuum(modes(&[1, 2])).unwrap();
        assert!(log_negativity(&vacuum).unwrap().abs() < 1e-12);

        // Product of two independently squeezed single modes: no cross-mode
        // correlations, hence zero negativity (up to eigensolver rounding).
        let product = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            0.4_f64.exp(),
            (-0.4_f64).exp(),
            0.6_f64.exp(),
            (-0.6_f64).exp(),
        ]));
        let product_state = CovarianceMatrix::from_matrix(product, modes(&[1, 2])).unwrap();
        assert!(log_negativity(&product_state).unwrap().abs() < 1e-12);

        let z = SymplecticOp::two_mode_squeezer(0.01_f64, [mode(1), mode(2)]).unwrap();
        let sigma = CovarianceMatrix::evolve_vacuum(&z);
        assert_relative_eq!(log_negativity(&sigma).unwrap(), 0.02, epsilon = 1e-12);
    }

    #[test]
    fn covariance_validation_rejects_bad_matrices() {
        // Asymmetric.
        let mut m = DMatrix::identity(4, 4);
        m[(0, 1)] = 1e-6;
        assert!(matches!(
            CovarianceMatrix::from_matrix(m, modes(&[1, 2])),
            Err(SymplecticError::NotSymmetric { .. })
        ));
        // Symmetric but below the uncertainty floor.
        let below = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.5, 1.0, 1.0]));
        assert!(matches!(
            CovarianceMatrix::from_matrix(below, modes(&[1, 2])),
            Err(SymplecticError::NotPhysical { .. })
        ));
        // The vacuum itself is accepted.
        let ok = CovarianceMatrix::<f64>::from_matrix(DMatrix::identity(4, 4), modes(&[1, 2]));
        assert!(ok.is_ok());
    }

    #[test]
    fn squeezer_fit_round_trips() {
        // Identity: all parameters zero, residual zero.
        let id = SymplecticOp::<f64>::identity(modes(&[1, 2])).unwrap();
        let fit = squeezer_decompose(&id).unwrap();
        assert_eq!(fit.r, 0.0);
        assert_eq!(fit.angle_k, 0.0);
        assert_eq!(fit.angle_k_prime, 0.0);
        assert_eq!(fit.residual, 0.0);

        // Exact normal form Z(0.001) * (R(0.3) + R(0.7)).
        let labels = modes(&[1, 2]);
        let rot = SymplecticOp::mode_rotations(&[0.3, 0.7], labels.clone()).unwrap();
        let z = SymplecticOp::two_mode_squeezer(0.001_f64, [mode(1), mode(2)]).unwrap();
        let s = rot.then(&z).unwrap();
        let fit = squeezer_decompose(&s).unwrap();
        assert_relative_eq!(fit.r, 0.001, epsilon = 1e-10);
        assert_relative_eq!(fit.angle_k, 0.3, epsilon = 1e-10);
        assert_relative_eq!(fit.angle_k_prime, 0.7, epsilon = 1e-10);
        assert!(fit.residual < 1e-10);

        // Negative squeezing and angles outside the first quadrant.
        let rot = SymplecticOp::mode_rotations(&[-0.4, 2.9], labels.clone()).unwrap();
        let z = SymplecticOp::two_mode_squeezer(-0.002_f64, [mode(1), mode(2)]).unwrap();
        let s = rot.then(&z).unwrap();
        let fit = squeezer_decompose(&s).unwrap();
        assert_relative_eq!(fit.r, -0.002, epsilon = 1e-10);
        assert_relative_eq!(fit.angle_k, -0.4, epsilon = 1e-10);
        assert_relative_eq!(fit.angle_k_prime, 2.9, epsilon = 1e-10);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn log_negativity_is_strictly_monotone_in_nu() {
        let mut previous = f64::INFINITY;
        for i in 1..200 {
            let nu = i as f64 / 200.0;
            let e = log_negativity_from_nu(nu);
            assert!(e < previous, "not strictly decreasing at nu = {nu}");
            assert!(e > 0.0);
            previous = e;
        }
        assert_eq!(log_negativity_from_nu(1.0), 0.0);
        assert_eq!(log_negativity_from_nu(1.5), 0.0);
    }

    #[test]
    fn pt_criterion_consistency_for_squeezed_family() {
        for &r in &[0.0_f64, 0.05, 0.2] {
            let z = SymplecticOp::two_mode_squeezer(r, [mode(1), mode(2)]).unwrap();
            let sigma = CovarianceMatrix::evolve_vacuum(&z);
            let nu = smallest_pt_symplectic_eigenvalue(&sigma).unwrap();
            let e = log_negativity(&sigma).unwrap();
            if r > 0.0 {
                assert!(nu < 1.0);
                assert!(e > 0.0);
            } else {
                assert_relative_eq!(nu, 1.0, epsilon = 1e-12);
                assert!(e.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn marginal_requires_known_modes() {
        let sigma = CovarianceMatrix::<f64>::vacuum(modes(&[1, 2, 3])).unwrap();
        let kept = sigma.marginal(&modes(&[3, 1])).unwrap();
        assert_eq!(kept.mode_labels()[0].get(), 3);
        assert_relative_eq!(kept.matrix().clone(), DMatrix::identity(4, 4), epsilon = 0.0);
        assert!(matches!(
            sigma.marginal(&modes(&[4])),
            Err(SymplecticError::UnknownMode { k: 4 })
        ));
    }

    #[test]
    fn f32_support_with_scaled_gates() {
        let z = SymplecticOp::<f32>::two_mode_squeezer(0.1_f32, [mode(1), mode(2)]).unwrap();
        let sigma = CovarianceMatrix::evolve_vacuum(&z);
        let nus = sigma.symplectic_eigenvalues().unwrap();
        assert!((nus[0] - 1.0).abs() < 1e-4);
    }
}
