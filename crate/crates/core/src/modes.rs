//! Field modes of the cavity in the inertial and accelerated charts, and the
//! Klein–Gordon inner product that relates them.
//!
//! The field is a real scalar confined between two perfectly reflecting
//! walls. Two orthonormal mode bases matter:
//!
//! * **Inertial-chart modes** `phi_k(t, x) = sin(k pi (x - x_A)/L)
//!   e^{-i w_k t} / sqrt(w_k L)` with `w_k = sqrt((k pi / L)^2 + m^2)`.
//! * **Accelerated-chart modes** (massless field only) supported on the
//!   wedge `chi > 0` of the uniformly accelerated frame:
//!   `psi_k(tau, chi) = N_k sin(k pi u(chi)) e^{-i W_k tau}` with
//!   `u(chi) = ln(chi/x_A) / ln(x_B/x_A)` and `W_k = k pi a / ln(x_B/x_A)`.
//!
//! The normalization `N_k` is fixed numerically by demanding unit
//! Klein–Gordon norm, which doubles as an internal consistency check of the
//! quadrature layer (for the massless field it must land on `1/sqrt(k pi)`).
//!
//! The inner product is evaluated on the `t = 0` slice, where the two charts
//! share a surface of simultaneity: `tau = 0` coincides with `t = 0`, and on
//! that slice `d/dt = (1/(a chi)) d/dtau`. Every mode therefore only needs
//! its value and inertial-time derivative along that slice, which is what
//! [`SliceMode`] captures.
//!
//! Slice positions are parameterized by the **offset from the left wall**,
//! `s = x - x_A` in `[0, L]`, never by absolute position. At small `h` the
//! walls sit at `x_A ~ L/h`, and forming `x - x_A` or `ln(x/x_A)` from
//! absolute coordinates would lose most of the double-precision mantissa to
//! cancellation; in offset form `u = ln(1 + s/x_A)/ln(x_B/x_A)` stays
//! accurate down to arbitrarily small `h` via `ln_1p`.
//!
//! A burn that accelerates toward *negative* `x` uses the mirror image of
//! the wedge: offsets reflect through the cavity centre, `s -> L - s`.
//! [`Wedge::Mirrored`] evaluates those modes directly; the extra sign
//! `(-1)^{k+1}` keeps the overlap with the matching inertial mode positive,
//! the same phase convention that pins the standard wedge.

use core::cmp::Ordering;

use crate::geometry::{CavityGeometry, GeometryError, ModeIndex, SpacetimePoint};
use crate::quadrature::{adaptive_complex, QuadSpec, QuadratureError};
use crate::scalar::{cis, Real};
use nalgebra::Complex;
use thiserror::Error;

/// Failure modes of mode construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("accelerated-chart modes require an accelerated geometry (h > 0)")]
    NotAccelerated,
    #[error("accelerated-chart modes are only available for the massless field, got mass {0}")]
    MassiveAccelerated(f64),
}

/// Which uniformly accelerated wedge a mode lives in.
///
/// `Standard` accelerates toward positive `x` (horizon beyond the left
/// wall); `Mirrored` accelerates toward negative `x` and is obtained by
/// reflecting positions through the cavity centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wedge {
    Standard,
    Mirrored,
}

/// Angular frequency of inertial-chart mode `k`: `sqrt((k pi / L)^2 + m^2)`.
pub fn minkowski_frequency<T: Real>(geometry: &CavityGeometry<T>, k: ModeIndex) -> T {
    let spatial = T::of_usize(k.get()) * T::pi() / geometry.length();
    let m = geometry.mass();
    (spatial * spatial + m * m).sqrt()
}

/// Angular frequency of accelerated-chart mode `k` with respect to proper
/// time at the cavity centre: `k pi a / ln(x_B/x_A)`.
pub fn rindler_frequency<T: Real>(
    geometry: &CavityGeometry<T>,
    k: ModeIndex,
) -> Result<T, ModeError> {
    require_accelerated_massless(geometry)?;
    let log_ratio = geometry.log_wall_ratio()?;
    Ok(T::of_usize(k.get()) * T::pi() * geometry.proper_acceleration() / log_ratio)
}

fn require_accelerated_massless<T: Real>(geometry: &CavityGeometry<T>) -> Result<(), ModeError> {
    if !geometry.is_accelerated() {
        return Err(ModeError::NotAccelerated);
    }
    if !geometry.is_massless() {
        return Err(ModeError::MassiveAccelerated(
            geometry.mass().to_subset().unwrap_or(f64::NAN),
        ));
    }
    Ok(())
}

/// Inertial-chart mode value at an event `(t, x)` in absolute coordinates;
/// rejects `x` outside the walls.
pub fn minkowski_mode<T: Real>(
    geometry: &CavityGeometry<T>,
    k: ModeIndex,
    point: SpacetimePoint<T>,
) -> Result<Complex<T>, ModeError> {
    geometry.check_inside(point.space)?;
    Ok(MinkowskiMode::new(*geometry, k).at(point))
}

/// Accelerated-chart mode value at an event `(tau, chi)` in its own chart;
/// rejects `chi` outside the walls, massive fields, and inertial geometries.
pub fn rindler_mode<T: Real>(
    geometry: &CavityGeometry<T>,
    k: ModeIndex,
    point: SpacetimePoint<T>,
    spec: &QuadSpec<T>,
) -> Result<Complex<T>, ModeError> {
    geometry.check_inside(point.space)?;
    let mode = RindlerMode::new(*geometry, k, Wedge::Standard, spec)?;
    Ok(mode.at(point))
}

/// A mode restricted to the `t = 0` slice: its value and inertial-time
/// derivative as functions of the offset `s = x - x_A` from the left wall.
pub trait SliceMode<T: Real> {
    /// Mode value at `t = 0` and wall offset `s`.
    fn value(&self, offset: T) -> Complex<T>;
    /// Inertial-time derivative at `t = 0` and wall offset `s`.
    fn time_derivative(&self, offset: T) -> Complex<T>;
    /// Offset interval on which the mode is supported, `(0, L)` here.
    fn support(&self) -> (T, T);
}

impl<T: Real, M: SliceMode<T> + ?Sized> SliceMode<T> for &M {
    fn value(&self, offset: T) -> Complex<T> {
        (**self).value(offset)
    }
    fn time_derivative(&self, offset: T) -> Complex<T> {
        (**self).time_derivative(offset)
    }
    fn support(&self) -> (T, T) {
        (**self).support()
    }
}

/// Complex conjugate of a mode, as needed for particle-creation overlaps.
#[derive(Debug, Clone, Copy)]
pub struct Conjugated<M>(pub M);

impl<T: Real, M: SliceMode<T>> SliceMode<T> for Conjugated<M> {
    fn value(&self, offset: T) -> Complex<T> {
        self.0.value(offset).conj()
    }
    fn time_derivative(&self, offset: T) -> Complex<T> {
        self.0.time_derivative(offset).conj()
    }
    fn support(&self) -> (T, T) {
        self.0.support()
    }
}

/// Inertial-chart cavity mode.
#[derive(Debug, Clone)]
pub struct MinkowskiMode<T> {
    geometry: CavityGeometry<T>,
    k: ModeIndex,
    frequency: T,
    amplitude: T,
}

impl<T: Real> MinkowskiMode<T> {
    pub fn new(geometry: CavityGeometry<T>, k: ModeIndex) -> Self {
        let frequency = minkowski_frequency(&geometry, k);
        let amplitude = (frequency * geometry.length()).sqrt().recip();
        Self {
            geometry,
            k,
            frequency,
            amplitude,
        }
    }

    pub fn frequency(&self) -> T {
        self.frequency
    }

    pub fn index(&self) -> ModeIndex {
        self.k
    }

    /// Spatial profile `sin(k pi s / L) / sqrt(w_k L)` at wall offset `s`.
    fn profile(&self, offset: T) -> T {
        let phase = T::of_usize(self.k.get()) * T::pi() * offset / self.geometry.length();
        self.amplitude * phase.sin()
    }

    /// Value at an arbitrary event `(t, x)` in absolute coordinates (no wall
    /// check).
    pub fn at(&self, point: SpacetimePoint<T>) -> Complex<T> {
        let phase = cis(-self.frequency * point.time);
        phase * self.profile(point.space - self.geometry.x_a())
    }
}

impl<T: Real> SliceMode<T> for MinkowskiMode<T> {
    fn value(&self, offset: T) -> Complex<T> {
        Complex::new(self.profile(offset), T::zero())
    }
    fn time_derivative(&self, offset: T) -> Complex<T> {
        // d/dt e^{-i w t} = -i w at t = 0.
        Complex::new(T::zero(), -self.frequency * self.profile(offset))
    }
    fn support(&self) -> (T, T) {
        (T::zero(), self.geometry.length())
    }
}

/// Accelerated-chart cavity mode (massless field), self-normalized to unit
/// Klein–Gordon norm.
#[derive(Debug, Clone)]
pub struct RindlerMode<T> {
    geometry: CavityGeometry<T>,
    k: ModeIndex,
    wedge: Wedge,
    frequency: T,
    log_ratio: T,
    normalization: T,
}

impl<T: Real> RindlerMode<T> {
    /// Builds mode `k` in the given wedge, fixing `N_k` numerically so that
    /// the Klein–Gordon norm is exactly one at the working precision.
    pub fn new(
        geometry: CavityGeometry<T>,
        k: ModeIndex,
        wedge: Wedge,
        spec: &QuadSpec<T>,
    ) -> Result<Self, ModeError> {
        require_accelerated_massless(&geometry)?;
        let frequency = rindler_frequency(&geometry, k)?;
        let log_ratio = geometry.log_wall_ratio()?;
        let mut mode = Self {
            geometry,
            k,
            wedge,
            frequency,
            log_ratio,
            normalization: T::one(),
        };
        // The raw norm integrand oscillates ~k times across the cavity.
        let norm_spec = spec.for_oscillation(k.get());
        let norm_sq = kg_inner_product(&mode, &mode, &norm_spec)?;
        mode.normalization = norm_sq.re.sqrt().recip();
        Ok(mode)
    }

    pub fn frequency(&self) -> T {
        self.frequency
    }

    pub fn index(&self) -> ModeIndex {
        self.k
    }

    pub fn wedge(&self) -> Wedge {
        self.wedge
    }

    /// The numerically determined normalization constant `N_k`.
    pub fn normalization(&self) -> T {
        self.normalization
    }

    /// Maps a lab-slice wall offset to this wedge's own chart offset
    /// `chi - x_A`: the identity for the standard wedge, the reflection
    /// `s -> L - s` for the mirrored one.
    fn chart_offset(&self, offset: T) -> T {
        match self.wedge {
            Wedge::Standard => offset,
            Wedge::Mirrored => self.geometry.length() - offset,
        }
    }

    /// Phase pin: the mirrored profile picks up `(-1)^{k+1}` so that the
    /// overlap with inertial mode `k` stays positive as `h -> 0`.
    fn pin_sign(&self) -> T {
        match self.wedge {
            Wedge::Standard => T::one(),
            Wedge::Mirrored => {
                if self.k.get() % 2 == 1 {
                    T::one()
                } else {
                    -T::one()
                }
            }
        }
    }

    /// Spatial profile `N_k sin(k pi u)` at a chart offset `s = chi - x_A`,
    /// with `u = ln(1 + s/x_A) / ln(x_B/x_A)` evaluated cancellation-free.
    fn profile(&self, chart_offset: T) -> T {
        let u = (chart_offset / self.geometry.x_a()).ln_1p() / self.log_ratio;
        self.pin_sign() * self.normalization * (T::of_usize(self.k.get()) * T::pi() * u).sin()
    }

    /// Value at an event `(tau, chi)` in the mode's own chart, `chi` in
    /// absolute chart coordinates (no wall check).
    pub fn at(&self, point: SpacetimePoint<T>) -> Complex<T> {
        let phase = cis(-self.frequency * point.time);
        phase * self.profile(point.space - self.geometry.x_a())
    }
}

impl<T: Real> SliceMode<T> for RindlerMode<T> {
    fn value(&self, offset: T) -> Complex<T> {
        Complex::new(self.profile(self.chart_offset(offset)), T::zero())
    }
    fn time_derivative(&self, offset: T) -> Complex<T> {
        // On the shared slice d/dt = (1/(a chi)) d/dtau and d/dtau brings
        // down -i W_k; chi is the distance from this wedge's own horizon.
        let s = self.chart_offset(offset);
        let chi = self.geometry.x_a() + s;
        let rate = self.frequency / (self.geometry.proper_acceleration() * chi);
        Complex::new(T::zero(), -rate * self.profile(s))
    }
    fn support(&self) -> (T, T) {
        (T::zero(), self.geometry.length())
    }
}

/// Klein–Gordon inner product on the `t = 0` slice:
///
/// ```text
/// (f, g) = -i * Int [ f d_t g* - g* d_t f ] dx
/// ```
///
/// integrated over the intersection of the two supports with adaptive
/// quadrature at the tolerance declared in `spec`. Non-convergence surfaces
/// as an error carrying the best estimate achieved.
pub fn kg_inner_product<T, F, G>(
    f: &F,
    g: &G,
    spec: &QuadSpec<T>,
) -> Result<Complex<T>, QuadratureError>
where
    T: Real,
    F: SliceMode<T>,
    G: SliceMode<T>,
{
    let (fa, fb) = f.support();
    let (ga, gb) = g.support();
    let a = fa.max(ga);
    let b = fb.min(gb);
    if a.partial_cmp(&b) != Some(Ordering::Less) {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let minus_i = Complex::new(T::zero(), -T::one());
    adaptive_complex(spec, a, b, |s| {
        let fg = f.value(s) * g.time_derivative(s).conj();
        let gf = g.value(s).conj() * f.time_derivative(s);
        minus_i * (fg - gf)
    })
}
