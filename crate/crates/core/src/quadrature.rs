//! Adaptive Gauss–Legendre quadrature over a single interval.
//!
//! Inner products between cavity modes are integrals of smooth oscillatory
//! functions over the cavity, so a fixed-degree Gauss–Legendre rule composed
//! over a panel subdivision converges extremely fast. Convergence is driven
//! by panel doubling: the result on `2p` panels is accepted once it agrees
//! with the result on `p` panels to the requested absolute tolerance, and the
//! doubling sequence is capped so a genuinely hard integrand produces a
//! diagnosable error instead of an endless loop.

use crate::scalar::{approx_f64 as to_f64, Real};
use nalgebra::Complex;
use thiserror::Error;

/// Failure modes of the adaptive integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error(
        "quadrature did not reach absolute tolerance {requested:.3e}: \
         error estimate {achieved:.3e} after {panels} panels \
         (best estimate {estimate_re:.17e} + {estimate_im:.17e}i)"
    )]
    NonConverged {
        requested: f64,
        achieved: f64,
        panels: usize,
        estimate_re: f64,
        estimate_im: f64,
    },
    #[error("quadrature degree must be at least 2, got {0}")]
    InvalidDegree(usize),
    #[error("integration bounds must be finite with a < b, got [{a}, {b}])")]
    InvalidInterval { a: f64, b: f64 },
}

/// Tolerance and effort budget for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec<T> {
    /// Nodes per panel.
    pub degree: usize,
    /// Absolute tolerance on the integral value.
    pub abs_tol: T,
    /// Panel-doubling cap; the last attempt uses this many panels.
    pub max_panels: usize,
    /// Panel count of the first attempt. Raising it above 1 protects highly
    /// oscillatory integrands from agreeing accidentally on two coarse grids.
    pub min_panels: usize,
}

impl<T: Real> QuadSpec<T> {
    pub fn new(degree: usize, abs_tol: T, max_panels: usize) -> Self {
        Self {
            degree,
            abs_tol,
            max_panels,
            min_panels: 1,
        }
    }

    /// Tighter tolerance, same rule and budget.
    pub fn with_abs_tol(self, abs_tol: T) -> Self {
        Self { abs_tol, ..self }
    }

    /// Coarsest panel count allowed for the first attempt.
    pub fn with_min_panels(self, min_panels: usize) -> Self {
        Self {
            min_panels: min_panels.max(1),
            ..self
        }
    }

    /// Spec suitable for an integrand with roughly `cycles` oscillation
    /// periods across the interval: keeps at least ~10 nodes per period on
    /// the first grid (for the default degree-24 rule).
    pub fn for_oscillation(self, cycles: usize) -> Self {
        let needed = (cycles / 4).max(1).next_power_of_two();
        self.with_min_panels(self.min_panels.max(needed))
    }
}

impl<T: Real> Default for QuadSpec<T> {
    fn default() -> Self {
        Self {
            degree: 24,
            abs_tol: T::c(1e-12),
            max_panels: 4096,
            min_panels: 1,
        }
    }
}

/// Gauss–Legendre rule of fixed degree on `[-1, 1]`.
///
/// Nodes are roots of the Legendre polynomial, found by Newton iteration from
/// the Chebyshev initial guess; weights follow from the derivative. A rule of
/// degree `n` integrates polynomials up to degree `2n - 1` exactly.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(degree: usize) -> Result<Self, QuadratureError> {
        if degree < 2 {
            return Err(QuadratureError::InvalidDegree(degree));
        }
        let n = degree;
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::of_usize(n);
        for i in 0..n {
            let mut x = (T::pi() * (T::of_usize(i) + T::c(0.75)) / (nf + T::c(0.5))).cos();
            // Newton converges quadratically; a handful of steps reaches the
            // scalar type's round-off from the Chebyshev seed.
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let step = p / dp;
                x -= step;
                if step.abs() <= T::default_epsilon() * T::c(2.0) {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            nodes[i] = x;
            weights[i] = T::c(2.0) / ((T::one() - x * x) * dp * dp);
        }
        nodes.reverse();
        weights.reverse();
        Ok(Self { nodes, weights })
    }

    pub fn degree(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Single-panel integral of `f` over `[a, b]`.
    pub fn integrate<F>(&self, a: T, b: T, mut f: F) -> Complex<T>
    where
        F: FnMut(T) -> Complex<T>,
    {
        let half = (b - a) * T::c(0.5);
        let mid = (b + a) * T::c(0.5);
        let mut sum = Complex::new(T::zero(), T::zero());
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            sum += f(mid + half * x) * w;
        }
        sum * half
    }

    /// Composite integral over `panels` equal subdivisions of `[a, b]`.
    pub fn integrate_composite<F>(&self, a: T, b: T, panels: usize, mut f: F) -> Complex<T>
    where
        F: FnMut(T) -> Complex<T>,
    {
        let width = (b - a) / T::of_usize(panels);
        let mut sum = Complex::new(T::zero(), T::zero());
        for p in 0..panels {
            let left = a + width * T::of_usize(p);
            sum += self.integrate(left, left + width, &mut f);
        }
        sum
    }
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p_prev = T::one();
    let mut p = x;
    for j in 1..n {
        let jf = T::of_usize(j);
        let next = ((T::c(2.0) * jf + T::one()) * x * p - jf * p_prev) / (jf + T::one());
        p_prev = p;
        p = next;
    }
    let dp = T::of_usize(n) * (x * p - p_prev) / (x * x - T::one());
    (p, dp)
}

/// Adaptive complex-valued integral of `f` over `[a, b]`.
///
/// Doubles the panel count until two successive composite results agree to
/// `spec.abs_tol` (the finer one is returned), or the budget is exhausted.
pub fn adaptive_complex<T, F>(
    spec: &QuadSpec<T>,
    a: T,
    b: T,
    mut f: F,
) -> Result<Complex<T>, QuadratureError>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadratureError::InvalidInterval {
            a: to_f64(a),
            b: to_f64(b),
        });
    }
    let rule = GaussLegendre::new(spec.degree)?;
    let mut panels = spec.min_panels.max(1);
    let mut coarse = rule.integrate_composite(a, b, panels, &mut f);
    let mut last_err = f64::INFINITY;
    while panels * 2 <= spec.max_panels.max(2 * spec.min_panels.max(1)) {
        panels *= 2;
        let fine = rule.integrate_composite(a, b, panels, &mut f);
        let diff = fine - coarse;
        let err = diff.re.hypot(diff.im);
        if err <= spec.abs_tol {
            return Ok(fine);
        }
        last_err = to_f64(err);
        coarse = fine;
    }
    Err(QuadratureError::NonConverged {
        requested: to_f64(spec.abs_tol),
        achieved: last_err,
        panels,
        estimate_re: to_f64(coarse.re),
        estimate_im: to_f64(coarse.im),
    })
}

/// Adaptive integral of a real-valued integrand.
pub fn adaptive_real<T, F>(spec: &QuadSpec<T>, a: T, b: T, mut f: F) -> Result<T, QuadratureError>
where
    T: Real,
    F: FnMut(T) -> T,
{
    adaptive_complex(spec, a, b, |x| Complex::new(f(x), T::zero())).map(|value| value.re)
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec64() -> QuadSpec<f64> {
        QuadSpec::default()
    }

    #[test]
    fn rejects_degenerate_rule_and_interval() {
        assert!(matches!(
            GaussLegendre::<f64>::new(1),
            Err(QuadratureError::InvalidDegree(1))
        ));
        assert!(matches!(
            adaptive_real(&spec64(), 1.0, 0.0, |x| x),
            Err(QuadratureError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn nodes_are_symmetric_and_weights_sum_to_two() {
        let rule = GaussLegendre::<f64>::new(24).unwrap();
        let total: f64 = rule.weights().iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
        for i in 0..rule.degree() {
            let j = rule.degree() - 1 - i;
            assert_relative_eq!(rule.nodes()[i], -rule.nodes()[j], epsilon = 1e-14);
            assert_relative_eq!(rule.weights()[i], rule.weights()[j], max_relative = 1e-13);
        }
    }

    #[test]
    fn single_panel_is_exact_for_high_degree_polynomials() {
        let rule = GaussLegendre::<f64>::new(24).unwrap();
        // x^46 is within the exactness degree 2*24 - 1 = 47.
        let value = rule.integrate(-1.0, 1.0, |x| Complex::new(x.powi(46), 0.0));
        assert_relative_eq!(value.re, 2.0 / 47.0, max_relative = 1e-13);
    }

    #[test]
    fn integrates_sine_over_half_period() {
        let value = adaptive_real(&spec64(), 0.0, std::f64::consts::PI, f64::sin).unwrap();
        assert_relative_eq!(value, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn integrates_complex_exponential() {
        let value = adaptive_complex(&spec64(), 0.0, 1.0, |x| Complex::new(0.0, x).exp()).unwrap();
        assert_relative_eq!(value.re, 1.0f64.sin(), epsilon = 1e-13);
        assert_relative_eq!(value.im, 1.0 - 1.0f64.cos(), epsilon = 1e-13);
    }

    #[test]
    fn highly_oscillatory_integrand_still_converges() {
        let value = adaptive_real(&spec64(), 0.0, 1.0, |x| (200.0 * x).sin()).unwrap();
        let exact = (1.0 - (200.0f64).cos()) / 200.0;
        assert_relative_eq!(value, exact, epsilon = 1e-12);
    }

    #[test]
    fn square_root_singularity_exhausts_budget() {
        let tight = QuadSpec::new(24, 1e-14, 16);
        let result = adaptive_real(&tight, 0.0, 1.0, |x: f64| x.sqrt().recip());
        match result {
            Err(QuadratureError::NonConverged {
                panels, requested, ..
            }) => {
                assert_eq!(panels, 16);
                assert_eq!(requested, 1e-14);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn works_in_single_precision() {
        let spec = QuadSpec::<f32>::new(16, 1e-5, 64);
        let value = adaptive_real(&spec, 0.0f32, std::f32::consts::PI, |x| x.sin()).unwrap();
        assert_relative_eq!(value, 2.0f32, epsilon = 1e-4);
    }
}
