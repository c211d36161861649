//! Scalar abstraction and physical constants.
//!
//! Every numeric kernel in the crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Random draws are always made in `f64` and
//! narrowed afterwards, so a given seed produces the same event sequence at
//! either precision.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every kernel (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    // from_f64 is infallible for both f32 and f64 (overflow saturates to inf).
    T::from_f64(x).unwrap_or_else(T::nan)
}

/// Widens a scalar to `f64`.
#[inline]
pub fn wide<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0<T: Real>(x: T) -> T {
    lit(libm::j0(wide(x)))
}

/// Error function.
pub fn erf<T: Real>(x: T) -> T {
    lit(libm::erf(wide(x)))
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        let px = T::PI() * x;
        px.sin() / px
    }
}

pub fn db_to_linear<T: Real>(db: T) -> T {
    lit::<T>(10.0).powf(db / lit(10.0))
}

pub fn linear_to_db<T: Real>(x: T) -> T {
    lit::<T>(10.0) * x.log10()
}

/// Physical constants (SI, CODATA 2018 exact values where defined).
pub mod consts {
    /// Speed of light in vacuum, m/s.
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    /// Planck constant, J s.
    pub const PLANCK: f64 = 6.626_070_15e-34;
    /// Boltzmann constant, J/K.
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Avogadro constant, 1/mol.
    pub const AVOGADRO: f64 = 6.022_140_76e23;
    /// Molar gas constant, J/(mol K).
    pub const GAS_CONSTANT: f64 = AVOGADRO * BOLTZMANN;
    /// Spectroscopic reference temperature, K.
    pub const REFERENCE_TEMPERATURE: f64 = 296.0;
    /// Temperature at standard pressure, K.
    pub const STP_TEMPERATURE: f64 = 273.15;
    /// Reference pressure, atm.
    pub const REFERENCE_PRESSURE: f64 = 1.0;
    /// One standard atmosphere in pascal.
    pub const ATM_PA: f64 = 101_325.0;
    /// Second radiation constant h c / k_B in cm K.
    pub const SECOND_RADIATION: f64 = PLANCK * SPEED_OF_LIGHT * 100.0 / BOLTZMANN;
}

/// Speed of light as `T`.
#[inline]
pub fn c0<T: Real>() -> T {
    lit(consts::SPEED_OF_LIGHT)
}

/// Free-space wavelength of `frequency_hz`.
#[inline]
pub fn wavelength<T: Real>(frequency_hz: T) -> T {
    c0::<T>() / frequency_hz
}
