//! Cavity geometry and the small index types threaded through the crate.
//!
//! A rigid cavity of length `L` has walls at `x_A` and `x_B = x_A + L` with
//! `0 < x_A`. During a burn the comoving chart is the uniformly accelerated
//! one whose proper acceleration at the cavity centre is `a = 2/(x_A + x_B)`,
//! giving the dimensionless expansion parameter `h = aL`. The two
//! parameterizations are interchangeable:
//!
//! ```text
//! x_A = L (2 - h) / (2 h),    x_B = L (2 + h) / (2 h),    0 < h < 2.
//! ```
//!
//! `h = 0` (no acceleration anywhere on the trajectory) is admitted as a
//! degenerate inertial geometry with walls pinned at `(0, L)`; every
//! accelerated-chart operation rejects it.

use crate::scalar::{approx_f64 as to_f64, Real};
use thiserror::Error;

/// Violation of a geometric or index invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("cavity walls must satisfy 0 < x_A < x_B with finite values, got ({x_a}, {x_b})")]
    InvalidWalls { x_a: f64, x_b: f64 },
    #[error("cavity length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("acceleration parameter must satisfy 0 <= h < 2, got {0}")]
    InvalidAcceleration(f64),
    #[error("field mass must be non-negative and finite, got {0}")]
    InvalidMass(f64),
    #[error("mode index must be at least 1")]
    InvalidModeIndex,
    #[error("mode-pair invariant violated: indices must differ, got k = k' = {0}")]
    EqualModePair(usize),
    #[error("position {position} lies outside the cavity walls [{x_a}, {x_b}]")]
    OutsideWalls { position: f64, x_a: f64, x_b: f64 },
}

/// A field mode label, `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(usize);

impl ModeIndex {
    pub fn new(k: usize) -> Result<Self, GeometryError> {
        if k == 0 {
            return Err(GeometryError::InvalidModeIndex);
        }
        Ok(Self(k))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered pair of distinct mode labels `(k, k')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModePair {
    k: ModeIndex,
    k_prime: ModeIndex,
}

impl ModePair {
    pub fn new(k: ModeIndex, k_prime: ModeIndex) -> Result<Self, GeometryError> {
        if k == k_prime {
            return Err(GeometryError::EqualModePair(k.get()));
        }
        Ok(Self { k, k_prime })
    }

    pub fn k(self) -> ModeIndex {
        self.k
    }

    pub fn k_prime(self) -> ModeIndex {
        self.k_prime
    }

    /// `k - k'` is odd. Only oddly separated pairs have first-order particle
    /// creation for the massless field.
    pub fn is_oddly_separated(self) -> bool {
        (self.k.get() + self.k_prime.get()) % 2 == 1
    }
}

impl std::fmt::Display for ModePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.k, self.k_prime)
    }
}

/// An event in whichever chart the caller is working in: `(t, x)` inertial
/// or `(tau, chi)` accelerated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint<T> {
    pub time: T,
    pub space: T,
}

impl<T: Real> SpacetimePoint<T> {
    pub fn new(time: T, space: T) -> Self {
        Self { time, space }
    }
}

/// Rigid cavity: length, dimensionless acceleration parameter, field mass.
///
/// Stored canonically as `(L, h, m)`; wall positions are derived. All values
/// are validated at construction, so accessors are total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry<T> {
    length: T,
    h: T,
    mass: T,
}

impl<T: Real> CavityGeometry<T> {
    /// Builds from the cavity length and acceleration parameter `h = aL`.
    ///
    /// `h = 0` yields the degenerate inertial geometry with walls `(0, L)`.
    pub fn from_length_acceleration(length: T, h: T, mass: T) -> Result<Self, GeometryError> {
        if !(length.is_finite() && length > T::zero()) {
            return Err(GeometryError::InvalidLength(to_f64(length)));
        }
        if !(h.is_finite() && h >= T::zero() && h < T::c(2.0)) {
            return Err(GeometryError::InvalidAcceleration(to_f64(h)));
        }
        if !(mass.is_finite() && mass >= T::zero()) {
            return Err(GeometryError::InvalidMass(to_f64(mass)));
        }
        Ok(Self { length, h, mass })
    }

    /// Builds from explicit wall positions `0 < x_A < x_B`.
    pub fn from_walls(x_a: T, x_b: T, mass: T) -> Result<Self, GeometryError> {
        if !(x_a.is_finite() && x_b.is_finite() && T::zero() < x_a && x_a < x_b) {
            return Err(GeometryError::InvalidWalls {
                x_a: to_f64(x_a),
                x_b: to_f64(x_b),
            });
        }
        let length = x_b - x_a;
        let h = T::c(2.0) * length / (x_a + x_b);
        Self::from_length_acceleration(length, h, mass)
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Dimensionless acceleration parameter `h = aL`, `0 <= h < 2`.
    pub fn acceleration_parameter(&self) -> T {
        self.h
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn is_massless(&self) -> bool {
        self.mass == T::zero()
    }

    pub fn is_accelerated(&self) -> bool {
        self.h > T::zero()
    }

    /// Proper acceleration at the cavity centre, `a = h/L` (zero when inertial).
    pub fn proper_acceleration(&self) -> T {
        self.h / self.length
    }

    /// Left wall. `L(2 - h)/(2h)` for `h > 0`, pinned to `0` when inertial.
    pub fn x_a(&self) -> T {
        if self.h == T::zero() {
            T::zero()
        } else {
            self.length * (T::c(2.0) - self.h) / (T::c(2.0) * self.h)
        }
    }

    /// Right wall, `x_a + L`.
    pub fn x_b(&self) -> T {
        self.x_a() + self.length
    }

    /// `ln(x_B / x_A) = ln((2 + h)/(2 - h))`, the conformal width of the
    /// accelerated cavity. Evaluated through `ln_1p` so it stays accurate
    /// down to vanishingly small `h`. Requires `h > 0`.
    pub fn log_wall_ratio(&self) -> Result<T, GeometryError> {
        if self.h == T::zero() {
            return Err(GeometryError::InvalidAcceleration(0.0));
        }
        Ok((T::c(2.0) * self.h / (T::c(2.0) - self.h)).ln_1p())
    }

    /// Same cavity with a different acceleration parameter.
    pub fn with_acceleration(&self, h: T) -> Result<Self, GeometryError> {
        Self::from_length_acceleration(self.length, h, self.mass)
    }

    /// Checks that `x` lies within the walls (inclusive).
    pub fn check_inside(&self, x: T) -> Result<(), GeometryError> {
        let (a, b) = (self.x_a(), self.x_b());
        if x < a || x > b {
            return Err(GeometryError::OutsideWalls {
                position: to_f64(x),
                x_a: to_f64(a),
                x_b: to_f64(b),
            });
        }
        Ok(())
    }
}
