//! Scalar abstraction shared by every numerical layer.
//!
//! All solver code is written against [`Real`] so that it runs in `f64` (the
//! production precision) and in `f32` (useful for quick smoke runs). The
//! tolerances quoted throughout the crate assume `f64`.

use std::cell::RefCell;
use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftPlanner;

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every value used in this crate is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Euler–Mascheroni constant.
    fn euler_gamma() -> Self {
        Self::lit(0.577_215_664_901_532_9)
    }

    /// In-place unnormalized complex FFT (`inverse` flips the exponent sign).
    fn fft(buf: &mut [Complex<Self>], inverse: bool);
}

thread_local! {
    static PLANNER_F64: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static PLANNER_F32: RefCell<FftPlanner<f32>> = RefCell::new(FftPlanner::new());
}

impl Real for f64 {
    fn fft(buf: &mut [Complex<f64>], inverse: bool) {
        PLANNER_F64.with(|p| {
            let mut planner = p.borrow_mut();
            let plan = if inverse {
                planner.plan_fft_inverse(buf.len())
            } else {
                planner.plan_fft_forward(buf.len())
            };
            plan.process(buf);
        })
    }
}

impl Real for f32 {
    fn fft(buf: &mut [Complex<f32>], inverse: bool) {
        PLANNER_F32.with(|p| {
            let mut planner = p.borrow_mut();
            let plan = if inverse {
                planner.plan_fft_inverse(buf.len())
            } else {
                planner.plan_fft_forward(buf.len())
            };
            plan.process(buf);
        })
    }
}

#[inline]
pub fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// The imaginary unit.
#[inline]
pub fn ci<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn is_finite_c<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Relative distance `|a - b| / max(|b|, floor)`.
#[inline]
pub fn rel_err<T: Real>(a: Complex<T>, b: Complex<T>, floor: T) -> T {
    (a - b).norm() / b.norm().max(floor)
}
