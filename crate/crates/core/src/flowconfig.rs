//! Physical constants of the subsonic flow and the Laplace strip.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::{ci, Real};

/// Free-stream and strip configuration. The half-chord is fixed at 1; a wing
/// of half-chord `b` is handled by rescaling lengths by `b` before the solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams<T> {
    /// Speed of sound.
    pub a: T,
    /// Mach number `U / a`.
    pub mach: T,
    /// Free-stream speed.
    pub u: T,
    /// Convection constant `M / (a (1 - M^2))`.
    pub c: T,
    pub sigma1: T,
    pub sigma2: T,
    /// Bromwich abscissa; defaults to the strip midpoint.
    pub sigma_prime: T,
}

pub const HALF_CHORD: f64 = 1.0;

pub const DEFAULT_SIGMA1: f64 = 0.1;
pub const DEFAULT_SIGMA2: f64 = 2.0;

/// Builds flow parameters from the speed of sound and Mach number, with the
/// default strip `[0.1, 2]`.
pub fn derive_params<T: Real>(a: T, mach: T) -> Result<FlowParams<T>> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::Config(format!("speed of sound must be positive, got {a}")));
    }
    if !(mach >= T::zero()) || !mach.is_finite() {
        return Err(Error::Config(format!("Mach number must be non-negative, got {mach}")));
    }
    if mach >= T::one() {
        return Err(Error::Config(format!(
            "Mach number {mach} is not subsonic (M < 1 required)"
        )));
    }
    let beta2 = T::one() - mach * mach;
    let sigma1 = T::lit(DEFAULT_SIGMA1);
    let sigma2 = T::lit(DEFAULT_SIGMA2);
    Ok(FlowParams {
        a,
        mach,
        u: mach * a,
        c: mach / (a * beta2),
        sigma1,
        sigma2,
        sigma_prime: (sigma1 + sigma2) * T::lit(0.5),
    })
}

impl<T: Real> FlowParams<T> {
    /// Replaces the strip bounds and resets `sigma_prime` to the midpoint.
    pub fn with_strip(mut self, sigma1: T, sigma2: T) -> Result<Self> {
        if !(sigma1 < sigma2) || !sigma1.is_finite() || !sigma2.is_finite() {
            return Err(Error::Config(format!(
                "strip bounds must satisfy sigma1 < sigma2, got [{sigma1}, {sigma2}]"
            )));
        }
        self.sigma1 = sigma1;
        self.sigma2 = sigma2;
        self.sigma_prime = (sigma1 + sigma2) * T::lit(0.5);
        Ok(self)
    }

    pub fn with_sigma_prime(mut self, sigma_prime: T) -> Result<Self> {
        if sigma_prime < self.sigma1 || sigma_prime > self.sigma2 || !sigma_prime.is_finite() {
            return Err(Error::Config(format!(
                "sigma_prime = {sigma_prime} lies outside the strip [{}, {}]",
                self.sigma1, self.sigma2
            )));
        }
        self.sigma_prime = sigma_prime;
        Ok(self)
    }

    /// `1 - M^2`.
    #[inline]
    pub fn beta2(&self) -> T {
        T::one() - self.mach * self.mach
    }

    /// `sqrt(1 - M^2)`.
    #[inline]
    pub fn beta(&self) -> T {
        self.beta2().sqrt()
    }

    /// Scale of the Hankel argument on the line `y = 0`: `z = kappa0 * |x - xi|`
    /// with `kappa0 = i s / (a (1 - M^2))`.
    #[inline]
    pub fn kappa0(&self, s: Complex<T>) -> Complex<T> {
        ci::<T>() * s / (self.a * self.beta2())
    }

    /// Prefactor of the Prandtl–Glauert radius: `z = k R`, `k = i s / (a sqrt(1-M^2))`,
    /// `R = sqrt((x-xi)^2/(1-M^2) + (y-eta)^2)`.
    #[inline]
    pub fn wave_k(&self, s: Complex<T>) -> Complex<T> {
        ci::<T>() * s / (self.a * self.beta())
    }

    /// Prandtl–Glauert radius `sqrt(dx^2/(1-M^2) + dy^2)`.
    #[inline]
    pub fn pg_radius(&self, dx: T, dy: T) -> T {
        (dx * dx / self.beta2() + dy * dy).sqrt()
    }

    pub fn in_strip(&self, s: Complex<T>) -> bool {
        s.re >= self.sigma1 && s.re <= self.sigma2
    }

    pub fn laplace(&self, s: Complex<T>) -> Result<LaplaceParameter<T>> {
        Ok(LaplaceParameter {
            s,
            lambda: lambda_of(s, self)?,
        })
    }
}

/// A Laplace parameter together with its convection exponent `lambda(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceParameter<T> {
    pub s: Complex<T>,
    pub lambda: Complex<T>,
}

/// `lambda(s) = -s (1 + c U) / U`.
pub fn lambda_of<T: Real>(s: Complex<T>, params: &FlowParams<T>) -> Result<Complex<T>> {
    if !(params.u > T::zero()) {
        return Err(Error::Config(
            "lambda(s) requires U > 0; the M = 0 case has no convection".into(),
        ));
    }
    Ok(-s * (T::one() + params.c * params.u) / params.u)
}
