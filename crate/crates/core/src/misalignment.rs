//! Misalignment fading from Tx pointing jitter.
//!
//! The Tx beam footprint at the receiver is Gaussian with radius `w_t(d)`;
//! radial jitter with standard deviation `sigma` displaces it across a
//! receiving disc of radius `w_r`. The collected fraction `b` has a power-law
//! density on `[0, W_r0]`, and channels are scaled by `b / W_r0`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Direction};
use crate::num::{erf, lit, wavelength, wide, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisalignmentParams<T> {
    /// Effective radius of the receiving area (also written gamma-bar), m.
    pub w_r: T,
    /// Tx beam radius at the link distance, m.
    pub w_t: T,
    /// Jitter standard deviation, m.
    pub sigma: T,
    pub v: T,
    /// Equivalent beamwidth, m.
    pub w_eq: T,
    pub epsilon: T,
    /// Fraction collected with zero pointing error.
    pub w_r0: T,
}

/// First-null-free 3 dB beamwidth `2 asin(2.782 lambda / (2 pi M d))` of an
/// `M`-element line with spacing `d`.
pub fn array_beamwidth<T: Real>(count: usize, spacing: T, lambda: T) -> Result<T> {
    let arg = lit::<T>(2.782) * lambda / (T::TAU() * lit::<T>(count as f64) * spacing);
    if !(arg <= T::one()) {
        return Err(Error::Validation(vec![format!(
            "beamwidth undefined: 2.782 lambda / (2 pi M d) = {} exceeds 1 (array too small for M = {count})",
            wide(arg)
        )]));
    }
    Ok(lit::<T>(2.0) * arg.asin())
}

/// Beam solid angle of a scanned planar array.
///
/// `target` is the Tx-local pointing direction; the scan angle is measured
/// from broadside, so broadside gives `theta_m * theta_n`.
pub fn beam_solid_angle<T: Real>(theta_m: T, theta_n: T, target: &Direction<T>) -> Result<T> {
    let scan = target.elevation - T::FRAC_PI_2();
    let cs = scan.cos();
    if cs.abs() < lit(1e-12) {
        return Err(Error::Validation(vec![
            "beam solid angle diverges for a target in the array plane (scan of 90 deg from broadside)".into(),
        ]));
    }
    let (s, c) = target.azimuth.sin_cos();
    let r = theta_m / theta_n;
    let den = ((s * s + r * r * c * c) * (s * s + c * c / (r * r))).sqrt();
    Ok(theta_m * theta_n / (cs * den))
}

pub fn misalignment_params<T: Real>(
    tx: &ArrayGeometry<T>,
    rx: &ArrayGeometry<T>,
    distance: T,
    target: &Direction<T>,
    carrier: T,
    sigma: T,
) -> Result<MisalignmentParams<T>> {
    let mut v = Vec::new();
    if !(distance > T::zero()) {
        v.push("misalignment needs a positive link distance".into());
    }
    if !(sigma > T::zero()) {
        v.push("options.misalignment.sigma_m must be > 0".into());
    }
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let lambda = wavelength(carrier);
    let w_r = (lit::<T>((rx.sa_rows * rx.sa_cols) as f64) * rx.sa_spacing[0] * rx.sa_spacing[1] / T::PI()).sqrt();
    let theta_m = array_beamwidth(tx.sa_rows, tx.sa_spacing[0], lambda)?;
    let theta_n = array_beamwidth(tx.sa_cols, tx.sa_spacing[1], lambda)?;
    let psi = beam_solid_angle(theta_m, theta_n, target)?;
    let w_t = (psi * distance * distance / T::PI()).sqrt();
    Ok(params_from_radii(w_r, w_t, sigma))
}

/// Derived quantities from the two radii and the jitter.
pub fn params_from_radii<T: Real>(w_r: T, w_t: T, sigma: T) -> MisalignmentParams<T> {
    let v = T::FRAC_PI_2().sqrt() * w_r / w_t;
    let ev = erf(v);
    let w_eq = (w_t * w_t * T::PI().sqrt() * ev / (lit::<T>(2.0) * v * (-v * v).exp())).sqrt();
    MisalignmentParams {
        w_r,
        w_t,
        sigma,
        v,
        w_eq,
        epsilon: w_eq / (lit::<T>(2.0) * sigma),
        w_r0: ev * ev,
    }
}

/// Density of the collected fraction `o`; zero outside `[0, W_r0]`.
pub fn misalignment_pdf<T: Real>(epsilon: T, w_r0: T, o: T) -> T {
    if o < T::zero() || o > w_r0 {
        return T::zero();
    }
    let e2 = epsilon * epsilon;
    e2 / w_r0.powf(e2) * o.powf(e2 - T::one())
}

pub fn misalignment_cdf<T: Real>(epsilon: T, w_r0: T, o: T) -> T {
    if o <= T::zero() {
        T::zero()
    } else if o >= w_r0 {
        T::one()
    } else {
        (o / w_r0).powf(epsilon * epsilon)
    }
}

/// `E[b / W_r0] = eps^2 / (eps^2 + 1)`.
pub fn normalized_mean<T: Real>(epsilon: T) -> T {
    let e2 = epsilon * epsilon;
    e2 / (e2 + T::one())
}

/// Normalized coefficient `b / W_r0 = U^(1 / eps^2)` by inverse CDF.
pub fn sample_misalignment<T: Real, R: Rng + ?Sized>(epsilon: T, rng: &mut R) -> T {
    let u: f64 = rng.random();
    lit::<T>(u.powf(1.0 / wide(epsilon * epsilon)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk_arrays() -> (ArrayGeometry<f64>, ArrayGeometry<f64>) {
        let mut a = ArrayGeometry::upa(1, 1, 5e-4);
        a.sa_rows = 4;
        a.sa_cols = 4;
        a.sa_spacing = [1e-3, 1e-3];
        (a.clone(), a)
    }

    #[test]
    fn test_regression_against_high_precision() {
        // 40-digit reference for M = N = 4, 1 mm spacing, 5 m, 0.3 THz,
        // broadside, sigma = 5 cm.
        let (tx, rx) = desk_arrays();
        let p = misalignment_params(&tx, &rx, 5.0, &Direction::from_angles(0.0, std::f64::consts::FRAC_PI_2), 0.3e12, 0.05)
            .unwrap();
        assert_relative_eq!(p.w_r, 0.002_256_758_334_191_025, max_relative = 1e-12);
        assert_relative_eq!(p.w_t, 0.625_361_927_048_119_1, max_relative = 1e-12);
        assert_relative_eq!(p.v, 0.004_522_864_284_522_639, max_relative = 1e-12);
        assert_relative_eq!(p.w_eq, 0.625_366_191_265_814, max_relative = 1e-12);
        assert_relative_eq!(p.epsilon, 6.253_661_912_658_141, max_relative = 1e-12);
        assert_relative_eq!(p.w_r0, 2.604_541_660_356_843e-5, max_relative = 1e-10);
    }

    #[test]
    fn test_errors() {
        let (tx, rx) = desk_arrays();
        let edge = Direction::from_angles(0.0, 0.0);
        assert!(misalignment_params(&tx, &rx, 5.0, &edge, 0.3e12, 0.05).is_err());
        let bs = Direction::from_angles(0.0, std::f64::consts::FRAC_PI_2);
        assert!(misalignment_params(&tx, &rx, 5.0, &bs, 0.3e12, 0.0).is_err());
        // Too few elements for the beamwidth formula at a long wavelength.
        assert!(array_beamwidth(1, 1e-3, 1e-2).is_err());
    }

    #[test]
    fn test_pdf_integral_and_mean() {
        for (eps, w) in [(0.7, 0.3), (1.0, 0.5), (3.0, 0.9)] {
            let n = 200_000;
            let h = w / n as f64;
            let mid = |i: usize| (i as f64 + 0.5) * h;
            let total: f64 = (0..n).map(|i| misalignment_pdf(eps, w, mid(i)) * h).sum();
            let mean: f64 = (0..n).map(|i| mid(i) * misalignment_pdf(eps, w, mid(i)) * h).sum();
            assert!((total - 1.0).abs() < 2e-3, "{eps}: {total}");
            let e2 = eps * eps;
            assert!((mean - w * e2 / (e2 + 1.0)).abs() < 1e-3, "{eps}: {mean}");
        }
        assert_relative_eq!(misalignment_pdf(1.0, 0.5, 0.2), 2.0);
        assert_eq!(misalignment_pdf(1.0, 0.5, 0.6), 0.0);
    }

    #[test]
    fn test_sample_mean() {
        let eps = 1.3;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_misalignment(eps, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let e2: f64 = eps * eps;
        let var = e2 / ((e2 + 2.0) * (e2 + 1.0).powi(2));
        assert!((mean - normalized_mean(eps)).abs() < 3.0 * (var / n as f64).sqrt());
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn test_large_epsilon_removes_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!((0..1000).all(|_| sample_misalignment(1e4, &mut rng) > 0.999));
    }

    proptest! {
        #[test]
        fn prop_w_r0_increasing_in_w_r(w_t in 0.01f64..1.0, a in 1e-3f64..3.0, b in 1e-3f64..3.0) {
            // Ratios kept below erf saturation in double precision.
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let p = params_from_radii(lo * w_t, w_t, 0.1);
            let q = params_from_radii(hi * w_t, w_t, 0.1);
            prop_assert!(q.w_r0 > p.w_r0);
            prop_assert!(p.w_r0 > 0.0 && q.w_r0 <= 1.0);
        }

        #[test]
        fn prop_broadside_solid_angle_minimal(
            tm in 0.01f64..0.5, tn in 0.01f64..0.5,
            az in -3.1f64..3.1, el in 0.2f64..2.9,
        ) {
            let bs = beam_solid_angle(tm, tn, &Direction::from_angles(az, std::f64::consts::FRAC_PI_2)).unwrap();
            let s = beam_solid_angle(tm, tn, &Direction::from_angles(az, el)).unwrap();
            prop_assert!(s >= bs * (1.0 - 1e-12));
        }
    }
}
